//! Cardinality estimates and best-plan extraction.
//!
//! Every class gets one estimate, computed from its first member.
//! Classes containing a free recursion variable are estimated for a given
//! cardinality of that variable. Costs count tuples touched:
//!
//! | operator | own work |
//! |---|---|
//! | relation | rows |
//! | filter, rename, antiprojection | input rows |
//! | join | left + right + output rows |
//! | antijoin, union | left + right rows |
//! | fixpoint | output rows, plus the recursive part costed once with X at the output size |
//!
//! A fixpoint's cardinality is `min(c · |constant part|, domain^arity)`
//! with `c = 3` by default.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::eval::Stats;
use crate::store::{EqId, Op, Store};
use crate::term::{var_name, Atom, Name, Schema, Term};

#[derive(Clone, Debug)]
pub struct CostModel {
    pub fix_factor: f64,
    /// Rows assumed for relations missing from the statistics.
    pub default_rows: f64,
    /// Distinct values per column when unknown.
    pub default_distinct: f64,
    /// Domain size when the statistics give none.
    pub default_domain: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { fix_factor: 3.0, default_rows: 1000.0, default_distinct: 100.0, default_domain: 1000.0 }
    }
}

/// Estimated size of a relation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Est {
    pub rows: f64,
    pub distinct: BTreeMap<Name, f64>,
}

impl Est {
    fn d(&self, c: &Name) -> f64 {
        self.distinct.get(c).copied().unwrap_or(self.rows).max(1.0)
    }

    fn cap(mut self, domain: f64) -> Est {
        let rows = self.rows.max(0.0);
        for v in self.distinct.values_mut() {
            *v = v.min(rows).min(domain).max(if rows > 0.0 { 1.0 } else { 0.0 });
        }
        self.rows = rows;
        self
    }
}

/// Best member choice and its cost.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Choice {
    cost: f64,
    member: usize,
}

pub struct Estimator<'a> {
    store: &'a Store,
    stats: Option<&'a Stats>,
    model: CostModel,
    cards: HashMap<(EqId, u64), Est>,
    best: HashMap<(EqId, Option<Op>, u64), Option<Choice>>,
    active: HashSet<(EqId, Option<Op>, u64)>,
    card_active: HashSet<(EqId, u64)>,
}

fn key(x: f64) -> u64 {
    x.to_bits()
}

/// Class (if interned), estimate and cost of a term.
type Evaluated = (Option<EqId>, Est, f64);

impl<'a> Estimator<'a> {
    pub fn new(store: &'a Store, stats: Option<&'a Stats>, model: CostModel) -> Self {
        Estimator {
            store,
            stats,
            model,
            cards: HashMap::new(),
            best: HashMap::new(),
            active: HashSet::new(),
            card_active: HashSet::new(),
        }
    }

    fn domain(&self) -> f64 {
        match self.stats {
            Some(s) if s.domain > 0 => s.domain as f64,
            _ => self.model.default_domain,
        }
    }

    fn xkey(&self, c: EqId, xcard: f64) -> u64 {
        if self.store.is_free(c) {
            key(xcard)
        } else {
            0
        }
    }

    /// Cardinality of class `c` with the recursion variable at `xcard` rows.
    pub fn card(&mut self, c: EqId, xcard: f64) -> Est {
        let c = self.store.find(c);
        let k = (c, self.xkey(c, xcard));
        if let Some(e) = self.cards.get(&k) {
            return e.clone();
        }
        if !self.card_active.insert(k) {
            return self.unknown(self.store.ty(c));
        }
        let first = self.store.members(c)[0].clone();
        let e = self.op_card(&first, xcard);
        self.card_active.remove(&k);
        self.cards.insert(k, e.clone());
        e
    }

    fn unknown(&self, ty: &Schema) -> Est {
        Est { rows: self.model.default_rows, distinct: ty.iter().map(|c| (c.clone(), self.model.default_distinct)).collect() }
    }

    fn rel_est(&self, n: &Name, ty: &Schema) -> Est {
        match self.stats.and_then(|s| s.relations.get(n.as_str())) {
            Some(r) => Est {
                rows: r.rows as f64,
                distinct: ty
                    .iter()
                    .map(|c| (c.clone(), r.distinct.get(c.as_str()).map(|&d| d as f64).unwrap_or(r.rows as f64)))
                    .collect(),
            },
            None if self.stats.is_some() => {
                Est { rows: 0.0, distinct: ty.iter().map(|c| (c.clone(), 0.0)).collect() }
            }
            None => self.unknown(ty),
        }
    }

    fn op_card(&mut self, op: &Op, xcard: f64) -> Est {
        let ty = self.store.op_type(op).unwrap_or_default();
        let children: Vec<Est> = op.children().into_iter().flatten().enumerate().map(|(i, c)| {
            let x = if i == 1 && matches!(op, Op::Fix(..)) { f64::NAN } else { xcard };
            if x.is_nan() { Est { rows: 0.0, distinct: BTreeMap::new() } } else { self.card(c, x) }
        }).collect();
        self.combine(op, &ty, &children, xcard)
    }

    /// Output estimate of `op` from its operand estimates.
    fn combine(&self, op: &Op, ty: &Schema, ch: &[Est], xcard: f64) -> Est {
        let domain = self.domain();
        let e = match op {
            Op::Rel(n) => self.rel_est(n, ty),
            Op::Var(_) => Est { rows: xcard, distinct: ty.iter().map(|c| (c.clone(), xcard)).collect() },
            Op::Filter(f, _) => {
                let mut e = ch[0].clone();
                for a in f.atoms() {
                    match a {
                        Atom::EqConst(c, _) => {
                            e.rows /= e.d(c);
                            e.distinct.insert(c.clone(), 1.0);
                        }
                        Atom::NeConst(c, _) => e.rows *= 1.0 - 1.0 / e.d(c),
                        Atom::EqCol(x, y) => {
                            let m = e.d(x).max(e.d(y));
                            e.rows /= m;
                        }
                    }
                }
                e
            }
            Op::Rename(a, b, _) => {
                let mut e = ch[0].clone();
                if let Some(v) = e.distinct.remove(a) {
                    e.distinct.insert(b.clone(), v);
                }
                e
            }
            Op::AntiProject(a, _) => {
                let mut e = ch[0].clone();
                e.distinct.remove(a);
                let bound: f64 = e.distinct.values().product();
                e.rows = e.rows.min(bound.max(1.0));
                e
            }
            Op::Join(..) => {
                let (l, r) = (&ch[0], &ch[1]);
                let mut rows = l.rows * r.rows;
                let mut distinct = l.distinct.clone();
                for (c, dr) in &r.distinct {
                    match l.distinct.get(c) {
                        Some(dl) => {
                            rows /= dl.max(*dr).max(1.0);
                            distinct.insert(c.clone(), dl.min(*dr));
                        }
                        None => {
                            distinct.insert(c.clone(), *dr);
                        }
                    }
                }
                Est { rows, distinct }
            }
            Op::AntiJoin(..) => {
                let mut e = ch[0].clone();
                e.rows /= 2.0;
                e
            }
            Op::Union(..) => {
                let (l, r) = (&ch[0], &ch[1]);
                let distinct = l.distinct.iter().map(|(c, d)| (c.clone(), d + r.d(c))).collect();
                Est { rows: l.rows + r.rows, distinct }
            }
            Op::Fix(..) => {
                let c = &ch[0];
                let cap = domain.powi(ty.len() as i32);
                let rows = (self.model.fix_factor * c.rows).min(cap);
                let distinct = c.distinct.iter().map(|(k, d)| (k.clone(), d * self.model.fix_factor)).collect();
                Est { rows, distinct }
            }
        };
        e.cap(domain)
    }

    fn op_cost(&mut self, cls: EqId, op: &Op, xcard: f64) -> f64 {
        match *op {
            Op::Rel(_) => self.card(cls, xcard).rows,
            Op::Var(_) => xcard,
            Op::Filter(_, c) | Op::Rename(_, _, c) | Op::AntiProject(_, c) => {
                let sub = self.best_cost(c, Some(op), xcard);
                sub + self.card(c, xcard).rows
            }
            Op::Join(l, r) => {
                let sub = self.best_cost(l, None, xcard) + self.best_cost(r, None, xcard);
                sub + self.card(l, xcard).rows + self.card(r, xcard).rows + self.card(cls, xcard).rows
            }
            Op::AntiJoin(l, r) | Op::Union(l, r) => {
                let sub = self.best_cost(l, None, xcard) + self.best_cost(r, None, xcard);
                sub + self.card(l, xcard).rows + self.card(r, xcard).rows
            }
            Op::Fix(c, r) => {
                let out = self.card(cls, xcard).rows;
                self.best_cost(c, None, xcard) + self.best_cost(r, None, out) + out
            }
        }
    }

    fn parent_key(&self, parent: Option<&Op>) -> Option<Op> {
        match parent {
            Some(p @ (Op::Filter(..) | Op::AntiProject(..))) if self.store.has_replacements() => {
                Some(self.store.canon(p))
            }
            _ => None,
        }
    }

    fn choose(&mut self, c: EqId, parent: Option<&Op>, xcard: f64) -> Option<Choice> {
        let c = self.store.find(c);
        let k = (c, self.parent_key(parent), self.xkey(c, xcard));
        if let Some(v) = self.best.get(&k) {
            return *v;
        }
        if !self.active.insert(k.clone()) {
            return None;
        }
        let members = self.store.members(c).to_vec();
        let mut best: Option<Choice> = None;
        for (i, m) in members.iter().enumerate() {
            if let Some(p) = parent {
                if self.store.is_replaced(p, m) {
                    continue;
                }
            }
            let cost = self.op_cost(c, m, xcard);
            if cost.is_finite() && best.is_none_or(|b| cost < b.cost) {
                best = Some(Choice { cost, member: i });
            }
        }
        self.active.remove(&k);
        self.best.insert(k, best);
        best
    }

    fn best_cost(&mut self, c: EqId, parent: Option<&Op>, xcard: f64) -> f64 {
        self.choose(c, parent, xcard).map(|b| b.cost).unwrap_or(f64::INFINITY)
    }

    /// Cheapest plan of `root` and its estimated cost.
    pub fn best_plan(&mut self, root: EqId) -> Option<(Term, f64)> {
        let cost = self.choose(root, None, 0.0)?.cost;
        let t = self.extract(root, None, 0.0, 0)?;
        Some((t, cost))
    }

    fn extract(&mut self, c: EqId, parent: Option<&Op>, xcard: f64, depth: usize) -> Option<Term> {
        let c = self.store.find(c);
        let ch = self.choose(c, parent, xcard)?;
        let op = self.store.members(c)[ch.member].clone();
        use std::sync::Arc;
        Some(match &op {
            Op::Rel(n) => Term::Rel(n.clone()),
            Op::Var(_) => Term::Var(var_name(depth.saturating_sub(1))),
            Op::Filter(f, x) => Term::Filter(f.clone(), Arc::new(self.extract(*x, Some(&op), xcard, depth)?)),
            Op::Rename(a, b, x) => Term::Rename(a.clone(), b.clone(), Arc::new(self.extract(*x, Some(&op), xcard, depth)?)),
            Op::AntiProject(a, x) => Term::AntiProject(a.clone(), Arc::new(self.extract(*x, Some(&op), xcard, depth)?)),
            Op::Join(l, r) => Term::Join(
                Arc::new(self.extract(*l, None, xcard, depth)?),
                Arc::new(self.extract(*r, None, xcard, depth)?),
            ),
            Op::AntiJoin(l, r) => Term::AntiJoin(
                Arc::new(self.extract(*l, None, xcard, depth)?),
                Arc::new(self.extract(*r, None, xcard, depth)?),
            ),
            Op::Union(l, r) => Term::Union(
                Arc::new(self.extract(*l, None, xcard, depth)?),
                Arc::new(self.extract(*r, None, xcard, depth)?),
            ),
            Op::Fix(k, r) => {
                let out = self.card(c, xcard).rows;
                Term::Fix(
                    var_name(depth),
                    Arc::new(self.extract(*k, None, xcard, depth)?),
                    Arc::new(self.extract(*r, None, out, depth + 1)?),
                )
            }
        })
    }

    /// Cost of one concrete plan under the same model. Subterms interned in
    /// the store use their class estimate; others are estimated from their
    /// operands.
    pub fn term_cost(&mut self, t: &Term) -> f64 {
        self.term_eval(t, &mut Vec::new(), 0.0).2
    }

    /// Returns (class, estimate, cost).
    fn term_eval(&mut self, t: &Term, env: &mut Vec<(Name, Schema)>, xcard: f64) -> Evaluated {
        let (op, kids): (Option<Op>, Vec<Evaluated>) = match t {
            Term::Rel(n) => (Some(Op::Rel(n.clone())), vec![]),
            Term::Var(x) => {
                let ty = env.iter().rev().find(|(n, _)| n == x).map(|(_, s)| s.clone()).unwrap_or_default();
                let op = Op::Var(ty.clone());
                let id = self.store.lookup(&op);
                let est = Est { rows: xcard, distinct: ty.iter().map(|c| (c.clone(), xcard)).collect() }.cap(self.domain());
                return (id, est, xcard);
            }
            Term::Filter(_, c) | Term::Rename(_, _, c) | Term::AntiProject(_, c) => {
                let k = self.term_eval(c, env, xcard);
                let op = k.0.map(|id| match t {
                    Term::Filter(f, _) => Op::Filter(f.clone(), id),
                    Term::Rename(a, b, _) => Op::Rename(a.clone(), b.clone(), id),
                    Term::AntiProject(a, _) => Op::AntiProject(a.clone(), id),
                    _ => unreachable!(),
                });
                (op, vec![k])
            }
            Term::Join(l, r) | Term::AntiJoin(l, r) | Term::Union(l, r) => {
                let a = self.term_eval(l, env, xcard);
                let b = self.term_eval(r, env, xcard);
                let op = match (a.0, b.0) {
                    (Some(x), Some(y)) => Some(match t {
                        Term::Join(..) => Op::Join(x, y),
                        Term::AntiJoin(..) => Op::AntiJoin(x, y),
                        _ => Op::Union(x, y),
                    }),
                    _ => None,
                };
                (op, vec![a, b])
            }
            Term::Fix(x, c, r) => {
                let a = self.term_eval(c, env, xcard);
                let ty = crate::term::type_of_in(c, self.store.catalog(), &mut env.clone()).unwrap_or_default();
                let placeholder = Op::Fix(EqId(0), EqId(0));
                let out = self.combine(&placeholder, &ty, std::slice::from_ref(&a.1), xcard);
                env.push((x.clone(), ty.clone()));
                let mut b = self.term_eval(r, env, out.rows);
                let op = match (a.0, b.0) {
                    (Some(k), Some(rr)) => Some(Op::Fix(k, rr)),
                    _ => None,
                };
                let id = op.as_ref().and_then(|o| self.store.lookup(o));
                let est = match id {
                    Some(id) => self.card(id, xcard),
                    None => out.clone(),
                };
                // The class estimate can differ from this plan's own.
                if est.rows != out.rows {
                    b = self.term_eval(r, env, est.rows);
                }
                env.pop();
                let cost = a.2 + b.2 + est.rows;
                return (id, est, cost);
            }
        };
        let id = op.as_ref().and_then(|o| self.store.lookup(o));
        let est = match (id, &op) {
            (Some(id), _) => self.card(id, xcard),
            _ => {
                let ty = crate::term::type_of_in(t, self.store.catalog(), &mut env.clone()).unwrap_or_default();
                let shape = term_shape(t);
                let ests: Vec<Est> = kids.iter().map(|k| k.1.clone()).collect();
                self.combine(&shape, &ty, &ests, xcard)
            }
        };
        let sub: f64 = kids.iter().map(|k| k.2).sum();
        let own = match t {
            Term::Rel(_) => est.rows,
            Term::Filter(..) | Term::Rename(..) | Term::AntiProject(..) => kids[0].1.rows,
            Term::Join(..) => kids[0].1.rows + kids[1].1.rows + est.rows,
            _ => kids[0].1.rows + kids[1].1.rows,
        };
        (id, est, sub + own)
    }

    /// Per-class estimates for every live class, for JSON dumps.
    pub fn dump(&mut self, root: EqId) -> Vec<ClassCost> {
        let _ = self.choose(root, None, 0.0);
        let mut out = Vec::new();
        for c in self.store.live_classes() {
            if self.store.is_free(c) {
                continue;
            }
            let est = self.card(c, 0.0);
            let costs = self
                .store
                .members(c)
                .to_vec()
                .iter()
                .map(|m| self.op_cost(c, m, 0.0))
                .collect();
            out.push(ClassCost { class: c.0, rows: est.rows, member_costs: costs });
        }
        out
    }
}

/// Operator of `t` with dummy operands, for estimate combination.
fn term_shape(t: &Term) -> Op {
    let z = EqId(0);
    match t {
        Term::Rel(n) => Op::Rel(n.clone()),
        Term::Var(_) => Op::Var(Schema::new()),
        Term::Filter(f, _) => Op::Filter(f.clone(), z),
        Term::Rename(a, b, _) => Op::Rename(a.clone(), b.clone(), z),
        Term::AntiProject(a, _) => Op::AntiProject(a.clone(), z),
        Term::Join(..) => Op::Join(z, z),
        Term::AntiJoin(..) => Op::AntiJoin(z, z),
        Term::Union(..) => Op::Union(z, z),
        Term::Fix(..) => Op::Fix(z, z),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassCost {
    pub class: u32,
    pub rows: f64,
    pub member_costs: Vec<f64>,
}

/// Cheapest of `plans` under the estimates of `store`, first one on ties.
pub fn best_of<'t>(
    store: &Store,
    stats: Option<&Stats>,
    plans: impl IntoIterator<Item = &'t Term>,
) -> Option<(Term, f64)> {
    let mut e = Estimator::new(store, stats, CostModel::default());
    let mut best: Option<(Term, f64)> = None;
    for p in plans {
        let c = e.term_cost(p);
        if best.as_ref().is_none_or(|b| c < b.1) {
            best = Some((p.clone(), c));
        }
    }
    best
}

/// Cheapest plan of `root` under `stats`.
pub fn best_plan(store: &Store, root: EqId, stats: Option<&Stats>) -> Option<(Term, f64)> {
    Estimator::new(store, stats, CostModel::default()).best_plan(root)
}
