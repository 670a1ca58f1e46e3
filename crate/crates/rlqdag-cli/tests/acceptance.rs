//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rlqdag::baseline::{enumerate, BaselineConfig};
use rlqdag::bundled::{bundled_queries, desk_default, qr, BUNDLED};
use rlqdag::check::{check_consistency, check_well_formed, completeness, diff_plans};
use rlqdag::cost::{best_of, best_plan};
use rlqdag::eval::{constants, evaluate, evaluate_naive, random_graph, Database, Stats};
use rlqdag::frontend::{parse_query, Query};
use rlqdag::plans::{count_plans, interpret};
use rlqdag::store::Op;
use rlqdag::term::{schema, term_destab, term_rigid, Catalog, Name};
use rlqdag::transforms::{expand, ExpansionConfig, Rule, RuleSet};
use rlqdag::{EqId, Store, Term};

/// Random databases per query for well-formedness.
const WF_DATABASES: usize = 5;
/// Plans sampled per class (all of them when fewer).
const WF_SAMPLES: usize = 20;
const WF_NODES: usize = 15;
const WF_EDGES_PER_LABEL: usize = 30;
const WF_MAX_EDGES: usize = 5_000;
const WF_RUNTIME: Duration = Duration::from_secs(600);
/// Largest full space compared plan by plan.
const EQUIV_LIMIT: u128 = 1_000_000;
const PERF_BUDGET: Duration = Duration::from_secs(2);
const PERF_MIN_RATIO: f64 = 10.0;
const PERF_RUNS: usize = 3;
/// A later ratio may fall at most this far below an earlier one.
const PERF_NOISE: f64 = 0.20;
const PERF_RUNTIME: Duration = Duration::from_secs(300);
const EVAL_PAIRS: usize = 100;
const EVAL_MAX_EDGES: usize = 200;
const COST_BUDGETS_MS: [u64; 3] = [50, 200, 1000];
/// Relative slack for comparing estimated costs.
const COST_REL_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(issues: Vec<String>, ok: String) -> Outcome {
    match issues.first() {
        None => Outcome { pass: true, detail: ok },
        Some(f) => Outcome { pass: false, detail: format!("{} issue(s); first: {}", issues.len(), f) },
    }
}

fn expanded(q: &Query, rep: bool) -> (Store, EqId) {
    let mut s = Store::new(q.catalog.clone());
    let root = s.add_term(&q.term).unwrap();
    let out = expand(&mut s, &ExpansionConfig { rep, ..Default::default() });
    assert!(out.complete(), "{} did not saturate", q.source);
    let root = s.find(root);
    (s, root)
}

fn name(q: &Query) -> &str {
    q.name.as_deref().unwrap_or(&q.source)
}

fn criterion_1_and_2(qs: &[Query]) -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut wf, mut cons) = (Vec::new(), Vec::new());
    let (mut classes, mut max_edges) = (0, 0);
    for q in qs {
        let (s, _) = expanded(q, false);
        let labels: Vec<Name> = q.catalog.keys().cloned().collect();
        let extra = constants(&q.term);
        for _ in 0..WF_DATABASES {
            let mut db = random_graph(&labels, WF_NODES, WF_EDGES_PER_LABEL, &extra, &mut rng);
            max_edges = max_edges.max(db.edge_count());
            for c in s.live_classes() {
                classes += 1;
                match check_well_formed(&s, c, &mut db, WF_SAMPLES, &mut rng) {
                    Ok(None) => {}
                    Ok(Some(cx)) => wf.push(format!("{}: {}", name(q), cx)),
                    Err(e) => wf.push(format!("{}: {}: {}", name(q), c, e)),
                }
            }
        }
        cons.extend(check_consistency(&s).into_iter().map(|m| format!("{}: {}", name(q), m)));
    }
    let took = start.elapsed();
    if took > WF_RUNTIME {
        wf.push(format!("runtime {:?} exceeds {:?}", took, WF_RUNTIME));
    }
    if max_edges > WF_MAX_EDGES {
        wf.push(format!("a database has {} edges", max_edges));
    }
    (
        outcome(wf, format!("{} queries, {} class checks, up to {} edges, {:.1}s", qs.len(), classes, max_edges, took.as_secs_f64())),
        outcome(cons, format!("{} expansions consistent", qs.len())),
    )
}

fn criterion_3(qs: &[Query]) -> Outcome {
    let mut issues = Vec::new();
    for rep in [false, true] {
        for q in qs {
            let (s, _) = expanded(q, rep);
            for (p, res) in completeness(&s, RuleSet::all(), rep) {
                for v in res.expect("all rules enabled") {
                    issues.push(format!("{} rep={} {}: {}", name(q), rep, p, v));
                }
            }
        }
    }
    outcome(issues, format!("P1-P5 clean on {} queries, rep false and true", qs.len()))
}

fn criterion_4(qs: &[Query]) -> Outcome {
    let mut issues = Vec::new();
    let (mut compared, mut skipped) = (0, 0);
    for rep in [false, true] {
        for q in qs {
            let (s, root) = expanded(q, rep);
            let n = count_plans(&s, root).unwrap();
            if n > EQUIV_LIMIT {
                skipped += 1;
                continue;
            }
            compared += 1;
            let b = enumerate(&q.term, &q.catalog, &BaselineConfig { rep, ..Default::default() });
            if !b.complete() {
                issues.push(format!("{}: baseline did not finish", name(q)));
                continue;
            }
            let d = diff_plans(&s, root, &b.plans, EQUIV_LIMIT as usize);
            if !d.is_empty() {
                issues.push(format!(
                    "{} rep={}: store {} unfolded {:?} baseline {}, {} only in baseline, {} only in store",
                    name(q),
                    rep,
                    d.store_count,
                    d.unfolded,
                    d.other_count,
                    d.missing_from_store.len(),
                    d.missing_from_other.len()
                ));
            }
            // Independent route: canonical text of both sides.
            let (mine, cut) = interpret(&s, root, EQUIV_LIMIT as usize);
            let a: HashSet<String> = mine.iter().map(|t| t.to_string()).collect();
            let o: HashSet<String> = b.plans.iter().map(|t| t.to_string()).collect();
            if cut || a != o || a.len() as u128 != n || o.len() != b.plans.len() {
                issues.push(format!("{} rep={}: text sets differ", name(q), rep));
            }
        }
    }
    outcome(issues, format!("{} spaces identical, {} above {} plans skipped", compared, skipped, EQUIV_LIMIT))
}

fn criterion_5() -> Outcome {
    let mut issues = Vec::new();
    let mut cat = Catalog::new();
    cat.insert("A".into(), schema(&["a", "b"]));
    cat.insert("B".into(), schema(&["b", "c"]));
    cat.insert("C".into(), schema(&["c", "d"]));
    let abc = Term::join(Term::join(Term::rel("A"), Term::rel("B")), Term::rel("C"));
    let trees = |rules: RuleSet| {
        let mut s = Store::new(cat.clone());
        let root = s.add_term(&abc).unwrap();
        expand(&mut s, &ExpansionConfig { rules, ..Default::default() });
        let root = s.find(root);
        let (ts, _) = interpret(&s, root, 1000);
        (s.members(root).len(), ts.iter().map(|t| t.to_string()).collect::<BTreeSet<_>>())
    };
    let (members, set) = trees(RuleSet::of(&[Rule::JAssoc]));
    let want: BTreeSet<String> = [
        "(join (join (rel A) (rel B)) (rel C))",
        "(join (rel A) (join (rel B) (rel C)))",
        "(join (rel B) (join (rel A) (rel C)))",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    if members != 3 || set != want {
        issues.push(format!("join trees: {} members {:?}", members, set));
    }
    // Commutativity flips each of the two joins in each tree.
    let (_, with_comm) = trees(RuleSet::of(&[Rule::JAssoc, Rule::JComm]));
    if with_comm.len() != 12 {
        issues.push(format!("with commutativity: {} plans, expected 12", with_comm.len()));
    }

    let q = parse_query("?s,?t <- ?s isLocatedIn+ ?t").unwrap();
    let x = Name::new("X");
    let edge = || Term::rel("isLocatedIn");
    let sigma = Term::antiproject("m", Term::join(Term::rename("t", "m", edge()), Term::rename("s", "m", Term::var("X"))));
    let sigma_p = Term::antiproject("m", Term::join(Term::rename("t", "m", Term::var("X")), Term::rename("s", "m", edge())));
    if q.term != Term::fix("X", edge(), sigma.clone()) {
        issues.push(format!("closure query is not Sigma: {}", q.term));
    }
    if term_destab(&sigma, &x) != schema(&["s", "m"]) {
        issues.push("destabilizer of Sigma".into());
    }
    if term_destab(&sigma_p, &x) != schema(&["t", "m"]) {
        issues.push("destabilizer of Sigma'".into());
    }
    // Rigidity as implemented: the literal rules give {s,t,m} for Sigma.
    if term_rigid(&sigma, &x, &q.catalog).unwrap() != schema(&["m", "s", "t"]) {
        issues.push("rigid set of Sigma".into());
    }
    let (s, root) = expanded(&q, false);
    let stored: BTreeSet<Vec<String>> = s
        .members(root)
        .iter()
        .filter_map(|m| match m {
            Op::Fix(_, r) => s.annotation(*r).map(|a| a.destab.iter().map(|c| c.to_string()).collect()),
            _ => None,
        })
        .collect();
    let want: BTreeSet<Vec<String>> = [vec!["m".to_string(), "s".into()], vec!["m".to_string(), "t".into()]].into_iter().collect();
    if stored != want {
        issues.push(format!("stored destabilizers of the expanded closure: {:?}", stored));
    }
    outcome(issues, "three join trees, 12 with commutativity, D={s,m} and D'={t,m}, R={s,t,m}".into())
}

struct Rates {
    plans: Vec<(u128, u128)>,
    ratios: Vec<f64>,
}

fn perf_run(range: &[usize]) -> Rates {
    let mut plans = Vec::new();
    let mut ratios = Vec::new();
    for &i in range {
        let q = qr(i);
        let mut s = Store::new(q.catalog.clone());
        let root = s.add_term(&q.term).unwrap();
        let out = expand(&mut s, &ExpansionConfig { budget: Some(PERF_BUDGET), ..Default::default() });
        let rl = count_plans(&s, s.find(root)).unwrap();
        let b = enumerate(&q.term, &q.catalog, &BaselineConfig { budget: Some(PERF_BUDGET), ..Default::default() });
        let bl = b.plans.len() as u128;
        let rate = |n: u128, d: Duration| n as f64 / (d.as_secs_f64() * 1e3).max(1e-9);
        plans.push((rl, bl));
        ratios.push(rate(rl, out.elapsed) / rate(bl, b.elapsed));
    }
    Rates { plans, ratios }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let range: Vec<usize> = (2..=6).collect();
    let runs: Vec<Rates> = (0..PERF_RUNS).map(|_| perf_run(&range)).collect();
    let mut issues = Vec::new();
    let mut counts = Vec::new();
    for (k, &i) in range.iter().enumerate() {
        let (rl, bl) = runs[0].plans[k];
        counts.push(format!("r{} {}/{}", i, rl, bl));
        if i >= 3 && (rl as f64) < PERF_MIN_RATIO * bl as f64 {
            issues.push(format!("(a) r{}: rlqdag {} plans vs baseline {} in {:?}", i, rl, bl, PERF_BUDGET));
        }
    }
    let med: Vec<f64> = (0..range.len()).map(|k| median(runs.iter().map(|r| r.ratios[k]).collect())).collect();
    for k in 1..med.len() {
        if med[k] < (1.0 - PERF_NOISE) * med[k - 1] {
            issues.push(format!("(b) speed ratio r{} {:.1} below r{} {:.1}", range[k], med[k], range[k - 1], med[k - 1]));
        }
    }
    let took = start.elapsed();
    if took > PERF_RUNTIME {
        issues.push(format!("runtime {:?}", took));
    }
    let ratios: Vec<String> = med.iter().map(|r| format!("{:.3e}", r)).collect();
    let detail = format!("plans {}; median speed ratios r2..r6 {}", counts.join(", "), ratios.join(" "));
    match outcome(issues, detail.clone()) {
        Outcome { pass: false, detail: d } => Outcome { pass: false, detail: format!("{} ({})", d, detail) },
        ok => ok,
    }
}

fn cli(args: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_rlqdag")).args(args).output().expect("run rlqdag");
    (out.stdout, out.status.code().unwrap_or(-1))
}

fn criterion_7() -> Outcome {
    let mut issues = Vec::new();
    for (n, src) in BUNDLED {
        for emit in ["dag", "count"] {
            let a = cli(&["expand", "-q", src, "--emit", emit]);
            let b = cli(&["expand", "-q", src, "--emit", emit]);
            if a.1 != 0 || b.1 != 0 {
                issues.push(format!("{} --emit {}: exit {} / {}", n, emit, a.1, b.1));
            } else if a.0 != b.0 {
                issues.push(format!("{} --emit {}: outputs differ", n, emit));
            }
        }
    }
    outcome(issues, format!("{} queries, dag and count identical across runs", BUNDLED.len()))
}

/// Pairs reachable in one or more steps.
fn reachability(edges: &[(u32, u32)]) -> BTreeSet<(u32, u32)> {
    let mut adj: HashMap<u32, Vec<u32>> = HashMap::new();
    for &(s, t) in edges {
        adj.entry(s).or_default().push(t);
    }
    let mut out = BTreeSet::new();
    for &src in adj.keys() {
        let mut seen = HashSet::new();
        let mut queue: VecDeque<u32> = adj[&src].iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            if seen.insert(v) {
                out.insert((src, v));
                queue.extend(adj.get(&v).into_iter().flatten().copied());
            }
        }
    }
    out
}

fn edges_of(db: &Database, label: &str, inverse: bool) -> Vec<(u32, u32)> {
    match db.relations.get(&Name::new(label)) {
        Some(r) => r.rows().map(|row| if inverse { (row[1], row[0]) } else { (row[0], row[1]) }).collect(),
        None => Vec::new(),
    }
}

fn criterion_8() -> Outcome {
    let mut issues = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let shapes = ["a+", "(a|b)+", "^a+", "a/b+", "(a/b)+", "a+/b+", "anbn(a, b)", "?s <- ?s a+ v1"];
    let labels = [Name::new("a"), Name::new("b")];
    let mut oracle_checks = 0;
    for k in 0..EVAL_PAIRS {
        let src = shapes[k % shapes.len()];
        let q = parse_query(src).unwrap();
        let nodes = rng.gen_range(4..40);
        let per_label = rng.gen_range(1..=EVAL_MAX_EDGES / 2);
        let db = random_graph(&labels, nodes, per_label, &[], &mut rng);
        assert!(db.edge_count() <= EVAL_MAX_EDGES);
        let semi = evaluate(&q.term, &db).unwrap();
        let naive = evaluate_naive(&q.term, &db).unwrap();
        if semi != naive {
            issues.push(format!("pair {} ({}): semi-naive {} rows, naive {}", k, src, semi.len(), naive.len()));
        }
        let oracle = match src {
            "a+" => Some(reachability(&edges_of(&db, "a", false))),
            "^a+" => Some(reachability(&edges_of(&db, "a", true))),
            "(a|b)+" => {
                let mut e = edges_of(&db, "a", false);
                e.extend(edges_of(&db, "b", false));
                Some(reachability(&e))
            }
            _ => None,
        };
        if let Some(want) = oracle {
            oracle_checks += 1;
            let cols = semi.columns();
            let (si, ti) = (cols.iter().position(|c| c.as_str() == "s").unwrap(), cols.iter().position(|c| c.as_str() == "t").unwrap());
            let got: BTreeSet<(u32, u32)> = semi.rows().map(|r| (r[si], r[ti])).collect();
            if got != want {
                issues.push(format!("pair {} ({}): closure {} pairs, BFS {}", k, src, got.len(), want.len()));
            }
        }
    }
    outcome(issues, format!("{} pairs agree, {} closures match BFS", EVAL_PAIRS, oracle_checks))
}

fn leq(a: f64, b: f64) -> bool {
    a <= b + COST_REL_TOL * b.abs().max(1.0)
}

fn criterion_9(qs: &[Query], stats: &Stats) -> Outcome {
    let mut issues = Vec::new();
    for q in qs {
        let mut prev: Option<f64> = None;
        let mut line = Vec::new();
        for ms in COST_BUDGETS_MS {
            let budget = Some(Duration::from_millis(ms));
            let mut s = Store::new(q.catalog.clone());
            let root = s.add_term(&q.term).unwrap();
            expand(&mut s, &ExpansionConfig { budget, ..Default::default() });
            let root = s.find(root);
            let Some((_, rc)) = best_plan(&s, root, Some(stats)) else {
                issues.push(format!("{} at {}ms: no best plan", name(q), ms));
                continue;
            };
            let b = enumerate(&q.term, &q.catalog, &BaselineConfig { budget, ..Default::default() });
            let plans: Vec<&Term> = b.plans.iter().map(Arc::as_ref).collect();
            let bc = best_of(&s, Some(stats), plans).map(|x| x.1).unwrap_or(f64::INFINITY);
            if !leq(rc, bc) {
                issues.push(format!("{} at {}ms: rlqdag best {:.3} above baseline best {:.3}", name(q), ms, rc, bc));
            }
            if let Some(p) = prev {
                if !leq(rc, p) {
                    issues.push(format!("{}: best cost rose to {:.3} at {}ms from {:.3}", name(q), rc, ms, p));
                }
            }
            prev = Some(rc);
            line.push(rc);
        }
    }
    outcome(issues, format!("{} queries at budgets {:?} ms", qs.len(), COST_BUDGETS_MS))
}

#[test]
fn acceptance() {
    let qs = bundled_queries();
    let stats = desk_default().stats();
    let (c1, c2) = criterion_1_and_2(&qs);
    let results = vec![
        ("oracle well-formedness", c1),
        ("consistency", c2),
        ("completeness scans", criterion_3(&qs)),
        ("grouped vs term-by-term equivalence", criterion_4(&qs)),
        ("worked examples", criterion_5()),
        ("enumeration performance", criterion_6()),
        ("determinism", criterion_7()),
        ("evaluator self-check", criterion_8()),
        ("best-plan monotonicity", criterion_9(&qs, &stats)),
    ];
    let mut failed = Vec::new();
    for (k, (title, o)) in results.iter().enumerate() {
        println!("{} criterion {} ({}): {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, title, o.detail);
        if !o.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {:?}", failed);
}
