//! Bundled queries, the Q_ri scalability family and the desk-scale graph.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::Database;
use crate::frontend::{parse_query, Query};

/// Name and source of every bundled query.
pub const BUNDLED: [(&str, &str); 12] = [
    ("e1", "?s,?t <- ?s isLocatedIn+ ?t"),
    ("e2", "?s <- ?s isLocatedIn+ Sweden"),
    ("e3", "?s,?t <- ?s hasChild+/livesIn ?t"),
    ("e4", "?s,?t <- ?s isLocatedIn+/dealsWith+ ?t"),
    ("anbn", "?s,?t <- ?s anbn(hasChild, livesIn) ?t"),
    ("sg", "?s,?t <- ?s sg(hasChild) ?t"),
    ("from_paris", "?x <- Paris isLocatedIn+/dealsWith ?x"),
    ("alt_closure", "?s,?t <- ?s (isLocatedIn|dealsWith)+ ?t"),
    ("inverse", "?s,?t <- ?s ^hasChild+/livesIn ?t"),
    ("minus", "?s,?t <- ?s minus(isLocatedIn+, dealsWith) ?t"),
    ("seq_closure", "?s,?t <- ?s (hasChild/livesIn)+ ?t"),
    ("three_step", "?s,?t <- ?s knows+/worksAt/isLocatedIn+ ?t"),
];

pub fn bundled_queries() -> Vec<Query> {
    BUNDLED
        .iter()
        .map(|(n, src)| {
            let mut q = parse_query(src).expect("bundled query parses");
            q.name = Some(n.to_string());
            q
        })
        .collect()
}

/// Text of `queries/bundled.txt`.
pub fn bundled_file() -> String {
    let mut out = String::from("# Bundled queries, one per line as `name: query`.\n");
    for (n, src) in BUNDLED {
        out.push_str(&format!("{}: {}\n", n, src));
    }
    out
}

/// Source of Q_ri = a1+/a2+/.../ai+.
pub fn qr_source(i: usize) -> String {
    assert!(i >= 1, "Q_r needs i >= 1");
    let path: Vec<String> = (1..=i).map(|k| format!("a{}+", k)).collect();
    format!("?s,?t <- ?s {} ?t", path.join("/"))
}

/// Q_ri, checked to hold i fixpoints and 2i-1 joins.
pub fn qr(i: usize) -> Query {
    let mut q = parse_query(&qr_source(i)).expect("Q_r parses");
    q.name = Some(format!("r{}", i));
    assert_eq!(q.term.count_fix_join(), (i, 2 * i - 1), "shape of Q_r{}", i);
    q
}

/// Edge labels of the desk graph.
pub const DESK_LABELS: [&str; 14] = [
    "isLocatedIn",
    "dealsWith",
    "hasChild",
    "livesIn",
    "knows",
    "worksAt",
    "a1",
    "a2",
    "a3",
    "a4",
    "a5",
    "a6",
    "a7",
    "a8",
];

/// Desk-scale graph: `nodes` nodes, `per_label` random edges per label, and
/// a few edges around the constants used by the bundled queries.
pub fn desk_graph(seed: u64, nodes: usize, per_label: usize) -> Database {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut db = Database::new();
    let node = |i: usize| format!("n{}", i);
    for l in DESK_LABELS {
        // Mostly local edges, so closures stay moderate.
        for _ in 0..per_label {
            let s = rng.gen_range(0..nodes);
            let t = if rng.gen_bool(0.8) {
                (s + rng.gen_range(1..20)) % nodes
            } else {
                rng.gen_range(0..nodes)
            };
            db.add_edge(l, &node(s), &node(t));
        }
    }
    for _ in 0..(per_label / 20).max(1) {
        db.add_edge("isLocatedIn", &node(rng.gen_range(0..nodes)), "Sweden");
        db.add_edge("isLocatedIn", "Paris", &node(rng.gen_range(0..nodes)));
    }
    db
}

/// The graph shipped as `data/desk.tsv`.
pub fn desk_default() -> Database {
    desk_graph(7, 2000, 700)
}
