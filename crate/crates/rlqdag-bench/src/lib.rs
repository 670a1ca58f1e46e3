//! Shared setup for the enumeration benchmarks.

use rlqdag::baseline::{enumerate, BaselineConfig};
use rlqdag::frontend::Query;
use rlqdag::transforms::{expand, ExpansionConfig};
use rlqdag::{EqId, Store};

/// Saturates the store for `q` and returns it with the root class.
pub fn saturate(q: &Query) -> (Store, EqId) {
    let mut s = Store::new(q.catalog.clone());
    let root = s.add_term(&q.term).expect("query interns");
    let out = expand(&mut s, &ExpansionConfig::default());
    assert!(out.complete(), "{} did not saturate", q.source);
    let root = s.find(root);
    (s, root)
}

/// Runs the baseline to completion and returns the number of plans.
pub fn baseline_count(q: &Query) -> usize {
    let out = enumerate(&q.term, &q.catalog, &BaselineConfig::default());
    assert!(out.complete(), "{} did not finish", q.source);
    out.plans.len()
}
