//! Destabilizer and rigid sets over equivalence classes.
//!
//! An equivalence class is measured through its first member, so two
//! classes holding the same plans always report the same values. The
//! consistency check compares every member of an annotated class against
//! the stored pair.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::store::{Annotation, EqId, Op, Store};
use crate::term::{destab_of, Derivation, FilterExpr, Schema};

/// Memoized evaluation of `deriv` and `rigid` over a store snapshot.
pub struct Annotator<'a> {
    store: &'a Store,
    deriv: HashMap<EqId, BTreeSet<Derivation>>,
    rigid: HashMap<(EqId, bool), Schema>,
    active: HashSet<(EqId, u8)>,
}

impl<'a> Annotator<'a> {
    pub fn new(store: &'a Store) -> Self {
        Annotator { store, deriv: HashMap::new(), rigid: HashMap::new(), active: HashSet::new() }
    }

    /// `deriv(class, X)` where X is the class's nearest recursion variable.
    pub fn node_deriv(&mut self, c: EqId) -> BTreeSet<Derivation> {
        let c = self.store.find(c);
        if !self.store.is_free(c) {
            return BTreeSet::new();
        }
        if let Some(d) = self.deriv.get(&c) {
            return d.clone();
        }
        if !self.active.insert((c, 0)) {
            return BTreeSet::new();
        }
        let first = self.store.members(c)[0].clone();
        let d = self.op_deriv(&first);
        self.active.remove(&(c, 0));
        self.deriv.insert(c, d.clone());
        d
    }

    pub fn op_deriv(&mut self, op: &Op) -> BTreeSet<Derivation> {
        match op {
            Op::Var(_) => std::iter::once(Derivation::identity()).collect(),
            Op::Rel(_) | Op::Fix(..) => BTreeSet::new(),
            Op::Union(l, r) | Op::Join(l, r) => {
                let mut out = self.node_deriv(*l);
                out.extend(self.node_deriv(*r));
                out
            }
            Op::AntiJoin(l, _) => self.node_deriv(*l),
            Op::Filter(_, c) => self.node_deriv(*c),
            Op::Rename(a, b, c) => {
                let step = Derivation::rename_step(a, b);
                self.node_deriv(*c).iter().map(|p| p.compose(&step)).collect()
            }
            Op::AntiProject(a, c) => {
                let step = Derivation::drop_step(a);
                self.node_deriv(*c).iter().map(|p| p.compose(&step)).collect()
            }
        }
    }

    pub fn node_destab(&mut self, c: EqId) -> Schema {
        destab_of(&self.node_deriv(c))
    }

    pub fn op_destab(&mut self, op: &Op) -> Schema {
        destab_of(&self.op_deriv(op))
    }

    /// `rigid(class, X)`. With `is_x` false, `Var` nodes denote some other
    /// recursion variable and count as relations.
    pub fn node_rigid(&mut self, c: EqId, is_x: bool) -> Schema {
        let c = self.store.find(c);
        let is_x = is_x && self.store.is_free(c);
        if let Some(r) = self.rigid.get(&(c, is_x)) {
            return r.clone();
        }
        if !self.active.insert((c, 1 + is_x as u8)) {
            return Schema::new();
        }
        let first = self.store.members(c)[0].clone();
        let r = self.op_rigid(&first, is_x);
        self.active.remove(&(c, 1 + is_x as u8));
        self.rigid.insert((c, is_x), r.clone());
        r
    }

    pub fn op_rigid(&mut self, op: &Op, is_x: bool) -> Schema {
        match op {
            Op::Var(s) => {
                if is_x {
                    Schema::new()
                } else {
                    s.clone()
                }
            }
            Op::Rel(_) => self.store.op_type(op).unwrap_or_default(),
            Op::Union(l, r) | Op::Join(l, r) | Op::AntiJoin(l, r) => {
                let mut out = self.node_rigid(*l, is_x);
                out.extend(self.node_rigid(*r, is_x));
                out
            }
            Op::Rename(a, b, c) => {
                let mut out = self.node_rigid(*c, is_x);
                out.insert(a.clone());
                out.insert(b.clone());
                out
            }
            Op::AntiProject(a, c) => {
                if !(is_x && self.store.is_free(*c)) {
                    return Schema::new();
                }
                let mut out = self.node_rigid(*c, is_x);
                out.insert(a.clone());
                out
            }
            Op::Filter(f, c) => {
                let mut out = self.node_rigid(*c, is_x);
                out.extend(f.columns());
                out
            }
            Op::Fix(c, r) => {
                let mut out = self.node_rigid(*c, is_x);
                out.extend(self.node_rigid(*r, false));
                out
            }
        }
    }

    pub fn node_annotation(&mut self, rec: EqId) -> Annotation {
        Annotation { destab: self.node_destab(rec), rigid: self.node_rigid(rec, true) }
    }

    pub fn op_annotation(&mut self, op: &Op) -> Annotation {
        Annotation { destab: self.op_destab(op), rigid: self.op_rigid(op, true) }
    }
}

/// Fresh (𝔇, ℜ) for a recursive part.
pub fn annotate(store: &Store, rec: EqId) -> Annotation {
    Annotator::new(store).node_annotation(rec)
}

/// Annotation of the fixpoint produced by a filter push: 𝔇 carried over,
/// ℜ extended with the filtered columns.
pub fn update_after_filter_push(a: &Annotation, f: &FilterExpr) -> Annotation {
    let mut rigid = a.rigid.clone();
    rigid.extend(f.columns());
    Annotation { destab: a.destab.clone(), rigid }
}

/// Annotation of a merged fixpoint: component-wise union.
pub fn update_after_merge(a1: &Annotation, a2: &Annotation) -> Annotation {
    Annotation {
        destab: a1.destab.union(&a2.destab).cloned().collect(),
        rigid: a1.rigid.union(&a2.rigid).cloned().collect(),
    }
}
