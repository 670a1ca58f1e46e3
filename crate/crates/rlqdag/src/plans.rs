//! The set of plans represented by a class: exact counting, enumeration,
//! ranking and uniform sampling.
//!
//! Recursion variables are printed by recursive-part depth, matching
//! [`crate::term::canonicalize`]. A class reached at depth 0 is a complete
//! plan; a recursive part taken on its own starts at depth 1.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::store::{EqId, Op, Store};
use crate::term::{var_name, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountError {
    #[error("plan count overflows u128")]
    Overflow,
    #[error("cycle through class {0}")]
    Cycle(EqId),
}

/// Memoized plan counts over a store snapshot.
pub struct Counter<'a> {
    store: &'a Store,
    memo: HashMap<EqId, u128>,
    active: HashSet<EqId>,
}

impl<'a> Counter<'a> {
    pub fn new(store: &'a Store) -> Self {
        Counter { store, memo: HashMap::new(), active: HashSet::new() }
    }

    pub fn class(&mut self, c: EqId) -> Result<u128, CountError> {
        let c = self.store.find(c);
        if let Some(&n) = self.memo.get(&c) {
            return Ok(n);
        }
        if !self.active.insert(c) {
            return Err(CountError::Cycle(c));
        }
        let mut total: u128 = 0;
        for m in self.store.members(c) {
            let n = self.op(m)?;
            total = total.checked_add(n).ok_or(CountError::Overflow)?;
        }
        self.active.remove(&c);
        self.memo.insert(c, total);
        Ok(total)
    }

    pub fn op(&mut self, op: &Op) -> Result<u128, CountError> {
        match op {
            Op::Rel(_) | Op::Var(_) => Ok(1),
            Op::Filter(_, c) | Op::AntiProject(_, c) if self.store.has_replacements() => {
                let mut total: u128 = 0;
                let allowed: Vec<Op> = self.store.allowed_members(op, *c).cloned().collect();
                let c = self.store.find(*c);
                if !self.active.insert(c) {
                    return Err(CountError::Cycle(c));
                }
                for m in &allowed {
                    let n = self.op(m)?;
                    total = total.checked_add(n).ok_or(CountError::Overflow)?;
                }
                self.active.remove(&c);
                Ok(total)
            }
            Op::Filter(_, c) | Op::AntiProject(_, c) | Op::Rename(_, _, c) => self.class(*c),
            Op::Join(l, r) | Op::AntiJoin(l, r) | Op::Union(l, r) | Op::Fix(l, r) => {
                let a = self.class(*l)?;
                let b = self.class(*r)?;
                a.checked_mul(b).ok_or(CountError::Overflow)
            }
        }
    }

    /// Plans of `child` usable under `parent`, as (member, count) pairs.
    fn choices(&mut self, parent: Option<&Op>, child: EqId) -> Result<Vec<(Op, u128)>, CountError> {
        let ms: Vec<Op> = match parent {
            Some(p) => self.store.allowed_members(p, child).cloned().collect(),
            None => self.store.members(child).to_vec(),
        };
        ms.into_iter().map(|m| self.op(&m).map(|n| (m, n))).collect()
    }
}

/// Exact number of plans of `root`.
pub fn count_plans(store: &Store, root: EqId) -> Result<u128, CountError> {
    Counter::new(store).class(root)
}

/// Plans of `root` in member order, at most `limit` of them. The flag is
/// set when the set was truncated.
pub fn interpret(store: &Store, root: EqId, limit: usize) -> (Vec<Arc<Term>>, bool) {
    interpret_at(store, root, 0, limit)
}

/// As [`interpret`], with recursion variables named as if `root` sat
/// under `depth` recursive parts.
pub fn interpret_at(store: &Store, root: EqId, depth: usize, limit: usize) -> (Vec<Arc<Term>>, bool) {
    let mut e = Enumerator { store, memo: HashMap::new(), limit, truncated: false };
    let root = store.find(root);
    let per = e.class(root, depth);
    let mut out = Vec::new();
    for list in per.iter() {
        for t in list {
            if out.len() >= limit {
                e.truncated = true;
                break;
            }
            out.push(t.clone());
        }
    }
    (out, e.truncated)
}

type Plans = Vec<Arc<Term>>;

struct Enumerator<'a> {
    store: &'a Store,
    memo: HashMap<(EqId, usize), Arc<Vec<Plans>>>,
    limit: usize,
    truncated: bool,
}

impl<'a> Enumerator<'a> {
    /// Per-member plan lists for `c`.
    fn class(&mut self, c: EqId, depth: usize) -> Arc<Vec<Plans>> {
        let c = self.store.find(c);
        if let Some(v) = self.memo.get(&(c, depth)) {
            return v.clone();
        }
        self.memo.insert((c, depth), Arc::new(Vec::new()));
        let ms = self.store.members(c).to_vec();
        let v: Vec<Plans> = ms.iter().map(|m| self.op(m, depth)).collect();
        let v = Arc::new(v);
        self.memo.insert((c, depth), v.clone());
        v
    }

    fn flat(&mut self, parent: &Op, c: EqId, depth: usize) -> Vec<Arc<Term>> {
        let per = self.class(c, depth);
        let ms = self.store.members(c);
        let mut out = Vec::new();
        for (m, list) in ms.iter().zip(per.iter()) {
            if self.store.is_replaced(parent, m) {
                continue;
            }
            for t in list {
                if out.len() >= self.limit {
                    self.truncated = true;
                    return out;
                }
                out.push(t.clone());
            }
        }
        out
    }

    fn op(&mut self, op: &Op, depth: usize) -> Vec<Arc<Term>> {
        match op {
            Op::Rel(n) => vec![Arc::new(Term::Rel(n.clone()))],
            Op::Var(_) => vec![Arc::new(Term::Var(var_name(depth.saturating_sub(1))))],
            Op::Filter(f, c) => {
                self.flat(op, *c, depth).into_iter().map(|t| Arc::new(Term::Filter(f.clone(), t))).collect()
            }
            Op::Rename(a, b, c) => self
                .flat(op, *c, depth)
                .into_iter()
                .map(|t| Arc::new(Term::Rename(a.clone(), b.clone(), t)))
                .collect(),
            Op::AntiProject(a, c) => self
                .flat(op, *c, depth)
                .into_iter()
                .map(|t| Arc::new(Term::AntiProject(a.clone(), t)))
                .collect(),
            Op::Join(l, r) | Op::AntiJoin(l, r) | Op::Union(l, r) | Op::Fix(l, r) => {
                let rd = if matches!(op, Op::Fix(..)) { depth + 1 } else { depth };
                let ls = self.flat(op, *l, depth);
                let rs = self.flat(op, *r, rd);
                let mut out = Vec::new();
                'outer: for a in &ls {
                    for b in &rs {
                        if out.len() >= self.limit {
                            self.truncated = true;
                            break 'outer;
                        }
                        let (a, b) = (a.clone(), b.clone());
                        out.push(Arc::new(match op {
                            Op::Join(..) => Term::Join(a, b),
                            Op::AntiJoin(..) => Term::AntiJoin(a, b),
                            Op::Union(..) => Term::Union(a, b),
                            _ => Term::Fix(var_name(depth), a, b),
                        }));
                    }
                }
                out
            }
        }
    }
}

/// The `k`-th plan of `root` in [`interpret`] order.
pub fn unrank(counter: &mut Counter<'_>, root: EqId, k: u128) -> Result<Term, CountError> {
    unrank_class(counter, None, root, k, 0)
}

fn unrank_class(
    counter: &mut Counter<'_>,
    parent: Option<&Op>,
    c: EqId,
    mut k: u128,
    depth: usize,
) -> Result<Term, CountError> {
    for (m, n) in counter.choices(parent, c)? {
        if k < n {
            return unrank_op(counter, &m, k, depth);
        }
        k -= n;
    }
    Err(CountError::Overflow)
}

fn unrank_op(counter: &mut Counter<'_>, op: &Op, k: u128, depth: usize) -> Result<Term, CountError> {
    Ok(match op {
        Op::Rel(n) => Term::Rel(n.clone()),
        Op::Var(_) => Term::Var(var_name(depth.saturating_sub(1))),
        Op::Filter(f, c) => Term::Filter(f.clone(), Arc::new(unrank_class(counter, Some(op), *c, k, depth)?)),
        Op::Rename(a, b, c) => {
            Term::Rename(a.clone(), b.clone(), Arc::new(unrank_class(counter, Some(op), *c, k, depth)?))
        }
        Op::AntiProject(a, c) => {
            Term::AntiProject(a.clone(), Arc::new(unrank_class(counter, Some(op), *c, k, depth)?))
        }
        Op::Join(l, r) | Op::AntiJoin(l, r) | Op::Union(l, r) | Op::Fix(l, r) => {
            let rd = if matches!(op, Op::Fix(..)) { depth + 1 } else { depth };
            let nr = counter.class(*r)?;
            let a = Arc::new(unrank_class(counter, Some(op), *l, k / nr, depth)?);
            let b = Arc::new(unrank_class(counter, Some(op), *r, k % nr, rd)?);
            match op {
                Op::Join(..) => Term::Join(a, b),
                Op::AntiJoin(..) => Term::AntiJoin(a, b),
                Op::Union(..) => Term::Union(a, b),
                _ => Term::Fix(var_name(depth), a, b),
            }
        }
    })
}

/// Up to `n` distinct plans drawn uniformly from `root`; all plans when
/// there are at most `n`.
pub fn sample<R: Rng>(store: &Store, root: EqId, n: usize, depth: usize, rng: &mut R) -> Vec<Term> {
    let mut counter = Counter::new(store);
    let total = match counter.class(root) {
        Ok(t) => t,
        Err(_) => return Vec::new(),
    };
    let mut ks: Vec<u128> = if total <= n as u128 {
        (0..total).collect()
    } else {
        let mut seen = HashSet::new();
        while seen.len() < n {
            seen.insert(rng.gen_range(0..total));
        }
        let mut v: Vec<u128> = seen.into_iter().collect();
        v.sort();
        v
    };
    ks.dedup();
    ks.into_iter()
        .filter_map(|k| unrank_class(&mut counter, None, root, k, depth).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{canonicalize, schema, Catalog};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cat() -> Catalog {
        let mut c = Catalog::new();
        for r in ["A", "B", "C"] {
            c.insert(r.into(), schema(&["s", "t"]));
        }
        c
    }

    fn small() -> (Store, EqId) {
        let mut s = Store::new(cat());
        let a = s.add(Op::Rel("A".into())).unwrap();
        let b = s.add(Op::Rel("B".into())).unwrap();
        let c = s.add(Op::Rel("C".into())).unwrap();
        let ab = s.add(Op::Join(a, b)).unwrap();
        s.add_to(ab, Op::Join(b, a)).unwrap();
        let root = s.add(Op::Join(ab, c)).unwrap();
        s.add_to(root, Op::Join(c, ab)).unwrap();
        s.rebuild();
        (s, root)
    }

    #[test]
    fn singleton_counts_one() {
        let mut s = Store::new(cat());
        let a = s.add(Op::Rel("A".into())).unwrap();
        assert_eq!(count_plans(&s, a).unwrap(), 1);
        let (ts, tr) = interpret(&s, a, 10);
        assert_eq!(ts.len(), 1);
        assert!(!tr);
    }

    #[test]
    fn count_matches_interpret() {
        let (s, root) = small();
        assert_eq!(count_plans(&s, root).unwrap(), 4);
        let (ts, tr) = interpret(&s, root, 100);
        assert!(!tr);
        let set: HashSet<_> = ts.iter().collect();
        assert_eq!(set.len(), 4);
        let (ts, tr) = interpret(&s, root, 3);
        assert!(tr);
        assert_eq!(ts.len(), 3);
    }

    #[test]
    fn unrank_matches_interpret_order() {
        let (s, root) = small();
        let (ts, _) = interpret(&s, root, 100);
        let mut c = Counter::new(&s);
        for (k, t) in ts.iter().enumerate() {
            assert_eq!(&unrank(&mut c, root, k as u128).unwrap(), &**t);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let (s, root) = small();
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample(&s, root, 2, 0, &mut r1), sample(&s, root, 2, 0, &mut r2));
        assert_eq!(sample(&s, root, 10, 0, &mut r1).len(), 4);
    }

    #[test]
    fn fixpoint_names_are_canonical() {
        let mut s = Store::new(cat());
        let t = Term::fix(
            "Y",
            Term::rel("A"),
            Term::antiproject(
                "m",
                Term::join(Term::rename("t", "m", Term::rel("A")), Term::rename("s", "m", Term::var("Y"))),
            ),
        );
        let id = s.add_term(&t).unwrap();
        let (ts, _) = interpret(&s, id, 10);
        assert_eq!(&*ts[0], &canonicalize(&t));
    }

    #[test]
    fn replaced_members_are_excluded() {
        let (mut s, _) = small();
        let a = s.lookup(&Op::Rel("A".into())).unwrap();
        let b = s.lookup(&Op::Rel("B".into())).unwrap();
        let ab = s.lookup(&Op::Join(a, b)).unwrap();
        let f = crate::term::FilterExpr::eq_const("s", "1");
        let fop = Op::Filter(f, ab);
        let fid = s.add(fop.clone()).unwrap();
        assert_eq!(count_plans(&s, fid).unwrap(), 2);
        s.record_replaced(&fop, &Op::Join(b, a));
        assert_eq!(count_plans(&s, fid).unwrap(), 1);
        let (ts, _) = interpret(&s, fid, 10);
        assert_eq!(ts.len(), 1);
        assert!(s.contains_plan(fid, &ts[0]));
        let excluded = Term::filter(
            crate::term::FilterExpr::eq_const("s", "1"),
            Term::join(Term::rel("B"), Term::rel("A")),
        );
        assert!(!s.contains_plan(fid, &excluded));
    }
}
