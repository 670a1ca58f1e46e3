//! Structural and semantic checks over an expanded store.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::annotations::Annotator;
use crate::error::EvalError;
use crate::eval::{evaluate_in, random_relation, Database, RelEnv};
use crate::plans::{count_plans, interpret, sample};
use crate::store::{EqId, Op, Store};
use crate::term::{var_name, Schema, Term};
use crate::transforms::{mf_ok, pa_ok, pf_ok, pj_ok, pp_ok, Rule, RuleSet};

/// Two plans of one class that evaluate differently.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub class: EqId,
    pub left: Term,
    pub right: Term,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} differs from {}", self.class, self.left, self.right)
    }
}

/// Schema of the recursion variable a free class refers to.
pub fn free_var_type(s: &Store, c: EqId) -> Option<Schema> {
    let mut seen = HashSet::new();
    let mut stack = vec![s.find(c)];
    while let Some(c) = stack.pop() {
        if !seen.insert(c) || !s.is_free(c) {
            continue;
        }
        for m in s.members(c) {
            match m {
                Op::Var(t) => return Some(t.clone()),
                // Only the constant part can mention an outer variable.
                Op::Fix(k, _) => stack.push(s.find(*k)),
                _ => stack.extend(m.children().into_iter().flatten().map(|x| s.find(x))),
            }
        }
    }
    None
}

/// Evaluates up to `limit` sampled plans of `c` on `db` and compares them.
/// Free classes get a random relation for their recursion variable.
pub fn check_well_formed<R: Rng>(
    s: &Store,
    c: EqId,
    db: &mut Database,
    limit: usize,
    rng: &mut R,
) -> Result<Option<Counterexample>, EvalError> {
    let c = s.find(c);
    let free = s.is_free(c);
    let depth = usize::from(free);
    let plans = sample(s, c, limit, depth, rng);
    let mut env = RelEnv::new();
    if free {
        let Some(ty) = free_var_type(s, c) else { return Ok(None) };
        let domain = db.values.len().max(4);
        let rel = random_relation(db, &ty, 3 * domain / 2, domain, rng);
        env.push((var_name(0), rel));
    }
    let mut first: Option<(Term, crate::eval::Relation)> = None;
    for p in plans {
        let r = evaluate_in(&p, db, &mut env)?;
        match &first {
            None => first = Some((p, r)),
            Some((t0, r0)) => {
                if *r0 != r {
                    return Ok(Some(Counterexample { class: c, left: t0.clone(), right: p }));
                }
            }
        }
    }
    Ok(None)
}

/// Annotation mismatches: every member of every annotated class is
/// recomputed and compared, and every fixpoint's recursive part must carry
/// an annotation. Merge-time conflicts are reported too.
pub fn check_consistency(s: &Store) -> Vec<String> {
    let mut out = Vec::new();
    let mut an = Annotator::new(s);
    for c in s.live_classes() {
        for m in s.members(c) {
            if let Op::Fix(_, r) = m {
                if s.annotation(*r).is_none() {
                    out.push(format!("{}: recursive part {} has no annotation", c, s.find(*r)));
                }
            }
        }
        let Some(stored) = s.annotation(c).cloned() else { continue };
        for m in s.members(c) {
            let got = an.op_annotation(m);
            if got != stored {
                out.push(format!(
                    "{}: member {} gives destab {:?} rigid {:?}, stored destab {:?} rigid {:?}",
                    c,
                    m.kind(),
                    got.destab,
                    got.rigid,
                    stored.destab,
                    stored.rigid
                ));
            }
        }
    }
    for k in s.conflicts() {
        out.push(format!("{}: conflicting annotations {:?} and {:?}", k.class, k.kept, k.other));
    }
    out
}

/// Restriction and typing violations over all live classes.
pub fn validate_restrictions(s: &Store) -> Vec<String> {
    let mut out = Vec::new();
    for c in s.live_classes() {
        for m in s.members(c) {
            match s.op_type(m) {
                Ok(t) if t == *s.ty(c) => {}
                Ok(t) => out.push(format!("{}: {} has type {:?}, class has {:?}", c, m.kind(), t, s.ty(c))),
                Err(e) => out.push(format!("{}: {}: {}", c, m.kind(), e)),
            }
            match *m {
                Op::AntiJoin(_, r) if s.is_free(r) => {
                    out.push(format!("{}: recursion variable under antijoin right operand", c))
                }
                Op::Join(l, r) if s.is_free(l) && s.is_free(r) => out.push(format!("{}: non-linear join", c)),
                Op::Fix(_, r) if !s.is_free(r) => out.push(format!("{}: recursive part without variable", c)),
                _ => {}
            }
        }
        for (name, b) in &s.class(c).binders {
            if s.is_free(*b) {
                out.push(format!("{}: binder {} captures a free recursion variable", c, name));
            }
        }
    }
    out
}

/// The five completeness properties after a saturated expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Property {
    /// Pushable filters have been pushed.
    P1,
    /// Pushable antiprojections have been pushed.
    P2,
    /// Pushable joins have been pushed.
    P3,
    /// Mergeable fixpoints have been merged.
    P4,
    /// Pushable antijoins have been pushed.
    P5,
}

impl Property {
    pub const ALL: [Property; 5] = [Property::P1, Property::P2, Property::P3, Property::P4, Property::P5];

    pub fn rule(self) -> Rule {
        match self {
            Property::P1 => Rule::Pf,
            Property::P2 => Rule::Pp,
            Property::P3 => Rule::Pj,
            Property::P4 => Rule::Mf,
            Property::P5 => Rule::Pa,
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// Violations of property `p`: an applicable push or merge whose result is
/// missing from the class, or, under `rep`, whose original was not
/// excluded.
pub fn scan(s: &Store, p: Property, rep: bool) -> Vec<String> {
    let mut out = Vec::new();
    for c in s.live_classes() {
        for m in s.members(c) {
            scan_member(s, c, m, p, rep, &mut out);
        }
    }
    out
}

fn fixes(s: &Store, c: EqId) -> Vec<(EqId, EqId, Op)> {
    s.members(c)
        .iter()
        .filter_map(|m| match *m {
            Op::Fix(k, r) => Some((s.find(k), s.find(r), m.clone())),
            _ => None,
        })
        .collect()
}

fn has_member(s: &Store, c: EqId, op: Option<Op>) -> bool {
    op.and_then(|op| s.lookup(&op)).is_some_and(|id| s.find(id) == s.find(c))
}

fn scan_member(s: &Store, c: EqId, m: &Op, p: Property, rep: bool, out: &mut Vec<String>) {
    let ann = |r: EqId| s.annotation(r).cloned();
    match (p, m) {
        (Property::P1, Op::Filter(f, g)) => {
            for (k, r, fop) in fixes(s, *g) {
                let Some(a) = ann(r) else { continue };
                if !pf_ok(&f.columns(), &a.destab) {
                    continue;
                }
                let w = s.lookup(&Op::Filter(f.clone(), k)).map(|nk| Op::Fix(nk, r));
                if !has_member(s, c, w) {
                    out.push(format!("P1 {}: filter not pushed into fixpoint of {}", c, g));
                } else if rep && !s.is_replaced(m, &fop) {
                    out.push(format!("P1 {}: unpushed filter still a plan under rep", c));
                }
            }
        }
        (Property::P2, Op::AntiProject(col, g)) => {
            for (k, r, fop) in fixes(s, *g) {
                let Some(a) = ann(r) else { continue };
                if !pp_ok(col, &a) {
                    continue;
                }
                let kty = s.ty(k).clone();
                let mut nty = kty.clone();
                nty.remove(col);
                let r2 = match s.retype_lookup(r, &kty, &nty) {
                    Some(Some(r2)) => r2,
                    Some(None) => continue,
                    None => {
                        out.push(format!("P2 {}: antiprojection {} never tried on {}", c, col, g));
                        continue;
                    }
                };
                let w = s.lookup(&Op::AntiProject(col.clone(), k)).map(|nk| Op::Fix(nk, r2));
                if !has_member(s, c, w) {
                    out.push(format!("P2 {}: antiprojection {} not pushed into {}", c, col, g));
                } else if rep && !s.is_replaced(m, &fop) {
                    out.push(format!("P2 {}: unpushed antiprojection still a plan under rep", c));
                }
            }
        }
        (Property::P3, Op::Join(b, g)) => {
            let bty = s.ty(*b).clone();
            for (k, r, _) in fixes(s, *g) {
                let Some(a) = ann(r) else { continue };
                let kty = s.ty(k).clone();
                if !pj_ok(&bty, &kty, &a) {
                    continue;
                }
                let nty: Schema = kty.union(&bty).cloned().collect();
                let r2 = match s.retype_lookup(r, &kty, &nty) {
                    Some(Some(r2)) => r2,
                    Some(None) => continue,
                    None => {
                        out.push(format!("P3 {}: join never pushed into {}", c, g));
                        continue;
                    }
                };
                let w = s.lookup(&Op::Join(*b, k)).map(|nk| Op::Fix(nk, r2));
                if !has_member(s, c, w) {
                    out.push(format!("P3 {}: join not pushed into fixpoint of {}", c, g));
                }
            }
        }
        (Property::P4, Op::Join(g1, g2)) => {
            for (k1, r1, _) in fixes(s, *g1) {
                for (k2, r2, _) in fixes(s, *g2) {
                    let (Some(a1), Some(a2)) = (ann(r1), ann(r2)) else { continue };
                    let (t1, t2) = (s.ty(k1).clone(), s.ty(k2).clone());
                    if !mf_ok(&t1, &t2, &a1, &a2) {
                        continue;
                    }
                    let t: Schema = t1.union(&t2).cloned().collect();
                    let (n1, n2) = match (s.retype_lookup(r1, &t1, &t), s.retype_lookup(r2, &t2, &t)) {
                        (Some(Some(n1)), Some(Some(n2))) => (n1, n2),
                        (Some(None), _) | (_, Some(None)) => continue,
                        _ => {
                            out.push(format!("P4 {}: merge never tried", c));
                            continue;
                        }
                    };
                    let w = match (s.lookup(&Op::Join(k1, k2)), s.lookup(&Op::Union(n1, n2))) {
                        (Some(nk), Some(u)) => Some(Op::Fix(nk, u)),
                        _ => None,
                    };
                    if !has_member(s, c, w) {
                        out.push(format!("P4 {}: fixpoints of {} and {} not merged", c, g1, g2));
                    }
                }
            }
        }
        (Property::P5, Op::AntiJoin(g, b)) => {
            let bty = s.ty(*b).clone();
            for (k, r, _) in fixes(s, *g) {
                let Some(a) = ann(r) else { continue };
                if !pa_ok(&bty, &a.destab) {
                    continue;
                }
                let w = s.lookup(&Op::AntiJoin(k, *b)).map(|nk| Op::Fix(nk, r));
                if !has_member(s, c, w) {
                    out.push(format!("P5 {}: antijoin not pushed into {}", c, g));
                }
            }
        }
        _ => {}
    }
}

/// Runs the scans whose rule is enabled. Disabled properties are skipped
/// and reported as `None`.
pub fn completeness(s: &Store, rules: RuleSet, rep: bool) -> Vec<(Property, Option<Vec<String>>)> {
    Property::ALL
        .iter()
        .map(|&p| (p, if rules.contains(p.rule()) { Some(scan(s, p, rep)) } else { None }))
        .collect()
}

/// Difference between the plans of `root` and an externally enumerated set.
#[derive(Clone, Debug, Default)]
pub struct PlanDiff {
    pub store_count: u128,
    pub other_count: usize,
    /// Plans of the other set that `contains_plan` rejects.
    pub missing_from_store: Vec<Arc<Term>>,
    /// Plans unfolded from the store that the other set lacks.
    pub missing_from_other: Vec<Arc<Term>>,
    /// Unfolded set size, when materialized.
    pub unfolded: Option<usize>,
}

impl PlanDiff {
    pub fn is_empty(&self) -> bool {
        self.missing_from_store.is_empty()
            && self.missing_from_other.is_empty()
            && self.store_count == self.other_count as u128
            && self.unfolded.is_none_or(|u| u == self.other_count)
    }
}

/// Compares the plans of `root` with `other` in both directions: each
/// plan of `other` is looked up in the store, and the store's plans are
/// unfolded (up to `limit`) and looked up in `other`.
pub fn diff_plans(s: &Store, root: EqId, other: &[Arc<Term>], limit: usize) -> PlanDiff {
    let store_count = count_plans(s, root).unwrap_or(u128::MAX);
    let missing_from_store = other.iter().filter(|t| !s.contains_plan(root, t)).cloned().collect();
    let (mut missing_from_other, mut unfolded) = (Vec::new(), None);
    if store_count <= limit as u128 {
        let (plans, truncated) = interpret(s, root, limit);
        if !truncated {
            let set: HashSet<&Term> = other.iter().map(|t| &**t).collect();
            let mine: HashSet<&Term> = plans.iter().map(|t| &**t).collect();
            unfolded = Some(mine.len());
            missing_from_other = plans.iter().filter(|t| !set.contains(&***t)).cloned().collect();
        }
    }
    PlanDiff { store_count, other_count: other.len(), missing_from_store, missing_from_other, unfolded }
}
