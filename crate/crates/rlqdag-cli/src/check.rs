use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rlqdag::baseline::{enumerate, BaselineConfig};
use rlqdag::check::{check_consistency, check_well_formed, completeness, diff_plans, validate_restrictions};
use rlqdag::eval::{constants, random_graph, Database};
use rlqdag::frontend::Query;
use rlqdag::plans::count_plans;
use rlqdag::transforms::{expand, ExpansionConfig};
use rlqdag::{Annotation, Name, Store};

use crate::CheckArgs;

#[derive(Default)]
struct Report {
    failed: bool,
}

impl Report {
    fn line(&mut self, name: &str, issues: &[String], detail: &str) {
        match issues.first() {
            None => println!("PASS {}{}", name, detail),
            Some(first) => {
                self.failed = true;
                println!("FAIL {}: {} issue(s), first: {}", name, issues.len(), first);
            }
        }
    }
}

/// Corrupts the destabilizer of the first annotated class.
fn inject(s: &mut Store) {
    let Some(c) = s.live_classes().into_iter().find(|&c| s.annotation(c).is_some()) else { return };
    let a = s.annotation(c).cloned().expect("annotated");
    let mut destab = a.destab.clone();
    let bogus = a.rigid.iter().find(|x| !destab.contains(*x)).cloned().unwrap_or_else(|| Name::new("corrupt"));
    destab.insert(bogus);
    s.force_annotation(c, Annotation { destab, rigid: a.rigid });
}

pub fn check_cmd(qs: &[Query], data: Option<Database>, a: &CheckArgs) -> Result<u8> {
    let mut rep = Report::default();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    for q in qs {
        println!("query {}", q.name.as_deref().unwrap_or(&q.source));
        let mut s = Store::new(q.catalog.clone());
        let root = s.add_term(&q.term)?;
        let out = expand(&mut s, &ExpansionConfig { rep: a.rep, rules: a.rules, ..Default::default() });
        let root = s.find(root);
        if a.verbose {
            eprintln!("{:?}: {} classes, {} nodes", out.stop, s.live_classes().len(), s.node_count());
        }
        if a.inject_bad_annotation {
            inject(&mut s);
        }
        rep.line("restrictions", &validate_restrictions(&s), "");

        let labels: Vec<Name> = q.catalog.keys().cloned().collect();
        let extra = constants(&q.term);
        let mut dbs: Vec<Database> = data.iter().cloned().collect();
        for _ in 0..a.dbs {
            dbs.push(random_graph(&labels, 12, 24, &extra, &mut rng));
        }
        let mut issues = Vec::new();
        for db in &mut dbs {
            for c in s.live_classes() {
                match check_well_formed(&s, c, db, a.samples, &mut rng) {
                    Ok(None) => {}
                    Ok(Some(cx)) => issues.push(cx.to_string()),
                    Err(e) => issues.push(format!("{}: {}", c, e)),
                }
            }
        }
        let detail = format!(" ({} classes, {} databases)", s.live_classes().len(), dbs.len());
        rep.line("well-formedness", &issues, &detail);
        rep.line("consistency", &check_consistency(&s), "");

        for (p, res) in completeness(&s, a.rules, a.rep) {
            match res {
                Some(v) => rep.line(&p.to_string(), &v, ""),
                None => println!("SKIP {} (rule {} disabled)", p, p.rule()),
            }
        }

        let n = count_plans(&s, root).unwrap_or(u128::MAX);
        if n > a.diff_limit as u128 {
            println!("SKIP plan-set diff ({} plans exceed {})", n, a.diff_limit);
        } else {
            let b = enumerate(&q.term, &q.catalog, &BaselineConfig { rep: a.rep, rules: a.rules, ..Default::default() });
            let d = diff_plans(&s, root, &b.plans, a.diff_limit);
            let mut issues: Vec<String> = Vec::new();
            issues.extend(d.missing_from_store.iter().map(|t| format!("only baseline: {}", t)));
            issues.extend(d.missing_from_other.iter().map(|t| format!("only rlqdag: {}", t)));
            if issues.is_empty() && !d.is_empty() {
                issues.push(format!("counts differ: {} vs {}", d.store_count, d.other_count));
            }
            rep.line("plan-set diff", &issues, &format!(" ({} plans)", d.store_count));
        }
    }
    Ok(if rep.failed { 1 } else { 0 })
}
