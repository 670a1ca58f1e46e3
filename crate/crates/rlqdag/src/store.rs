//! The RLQDAG node store: hash-consed operation nodes grouped into
//! equivalence classes, with union-find unification and congruence repair.
//!
//! Recursion variables are nameless. Every `Var` refers to the nearest
//! enclosing recursive part, so a class never depends on the name of the
//! variable that binds it.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::annotations;
use crate::error::TermError;
use crate::term::{self, Catalog, FilterExpr, Name, Schema, Term};

/// Handle to an equivalence class.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
#[serde(transparent)]
pub struct EqId(pub u32);

impl EqId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EqId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// One operation node. Operands are equivalence classes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Op {
    Rel(Name),
    /// The recursion variable of the nearest enclosing recursive part.
    Var(Schema),
    Filter(FilterExpr, EqId),
    Rename(Name, Name, EqId),
    AntiProject(Name, EqId),
    Join(EqId, EqId),
    AntiJoin(EqId, EqId),
    Union(EqId, EqId),
    /// Constant part, recursive part.
    Fix(EqId, EqId),
}

impl Op {
    pub fn children(&self) -> [Option<EqId>; 2] {
        match *self {
            Op::Rel(_) | Op::Var(_) => [None, None],
            Op::Filter(_, c) | Op::Rename(_, _, c) | Op::AntiProject(_, c) => [Some(c), None],
            Op::Join(l, r) | Op::AntiJoin(l, r) | Op::Union(l, r) | Op::Fix(l, r) => {
                [Some(l), Some(r)]
            }
        }
    }

    pub fn map_children<F: FnMut(EqId) -> EqId>(&self, mut f: F) -> Op {
        match self {
            Op::Rel(_) | Op::Var(_) => self.clone(),
            Op::Filter(p, c) => Op::Filter(p.clone(), f(*c)),
            Op::Rename(a, b, c) => Op::Rename(a.clone(), b.clone(), f(*c)),
            Op::AntiProject(a, c) => Op::AntiProject(a.clone(), f(*c)),
            Op::Join(l, r) => Op::Join(f(*l), f(*r)),
            Op::AntiJoin(l, r) => Op::AntiJoin(f(*l), f(*r)),
            Op::Union(l, r) => Op::Union(f(*l), f(*r)),
            Op::Fix(c, r) => Op::Fix(f(*c), f(*r)),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Op::Rel(_) => "rel",
            Op::Var(_) => "var",
            Op::Filter(..) => "filter",
            Op::Rename(..) => "rename",
            Op::AntiProject(..) => "antiproject",
            Op::Join(..) => "join",
            Op::AntiJoin(..) => "antijoin",
            Op::Union(..) => "union",
            Op::Fix(..) => "fix",
        }
    }
}

/// (𝔇, ℜ) of a recursive part.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Annotation {
    pub destab: Schema,
    pub rigid: Schema,
}

#[derive(Clone, Debug)]
pub struct Class {
    pub members: Vec<Op>,
    parents: Vec<(Op, EqId)>,
    pub ty: Schema,
    /// Contains a free occurrence of the nearest recursion variable.
    pub free: bool,
    /// `let name = class` binders introduced here.
    pub binders: Vec<(Name, EqId)>,
    pub ann: Option<Annotation>,
}

/// Annotation disagreement detected when two annotated classes merged.
#[derive(Clone, Debug)]
pub struct AnnotationConflict {
    pub class: EqId,
    pub kept: Annotation,
    pub other: Annotation,
}

pub struct Store {
    catalog: Catalog,
    classes: Vec<Class>,
    uf: Vec<u32>,
    memo: HashMap<Op, EqId>,
    pending: Vec<EqId>,
    touched: Vec<EqId>,
    changed: Vec<EqId>,
    replaced: HashSet<(Op, Op)>,
    retype_memo: HashMap<(EqId, Schema), Option<EqId>>,
    conflicts: Vec<AnnotationConflict>,
    binder_counter: usize,
    merges: usize,
}

impl Store {
    pub fn new(catalog: Catalog) -> Self {
        Store {
            catalog,
            classes: Vec::new(),
            uf: Vec::new(),
            memo: HashMap::new(),
            pending: Vec::new(),
            touched: Vec::new(),
            changed: Vec::new(),
            replaced: HashSet::new(),
            retype_memo: HashMap::new(),
            conflicts: Vec::new(),
            binder_counter: 0,
            merges: 0,
        }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn find(&self, id: EqId) -> EqId {
        let mut i = id.0;
        while self.uf[i as usize] != i {
            i = self.uf[i as usize];
        }
        EqId(i)
    }

    fn find_compress(&mut self, id: EqId) -> EqId {
        let root = self.find(id);
        let mut i = id.0;
        while self.uf[i as usize] != root.0 {
            let next = self.uf[i as usize];
            self.uf[i as usize] = root.0;
            i = next;
        }
        root
    }

    pub fn class(&self, id: EqId) -> &Class {
        &self.classes[self.find(id).index()]
    }

    pub fn members(&self, id: EqId) -> &[Op] {
        &self.class(id).members
    }

    pub fn ty(&self, id: EqId) -> &Schema {
        &self.class(id).ty
    }

    pub fn is_free(&self, id: EqId) -> bool {
        self.class(id).free
    }

    /// Number of ids ever allocated, live or merged.
    pub fn id_count(&self) -> usize {
        self.classes.len()
    }

    /// Root ids in increasing order.
    pub fn live_classes(&self) -> Vec<EqId> {
        (0..self.classes.len() as u32)
            .filter(|&i| self.uf[i as usize] == i)
            .map(EqId)
            .collect()
    }

    pub fn node_count(&self) -> usize {
        self.live_classes()
            .iter()
            .map(|&c| self.classes[c.index()].members.len())
            .sum()
    }

    /// Number of interned operation nodes; cheap upper bound on
    /// [`Store::node_count`].
    pub fn node_count_hint(&self) -> usize {
        self.memo.len()
    }

    pub fn merge_count(&self) -> usize {
        self.merges
    }

    pub fn canon(&self, op: &Op) -> Op {
        op.map_children(|c| self.find(c))
    }

    /// Class currently holding `op`, if interned.
    pub fn lookup(&self, op: &Op) -> Option<EqId> {
        self.memo.get(&self.canon(op)).map(|&c| self.find(c))
    }

    pub fn op_type(&self, op: &Op) -> Result<Schema, TermError> {
        match op {
            Op::Rel(r) => self
                .catalog
                .get(r)
                .cloned()
                .ok_or_else(|| TermError::UnknownRelation(r.to_string())),
            Op::Var(s) => Ok(s.clone()),
            Op::Filter(f, c) => {
                let ty = self.ty(*c);
                if !f.columns().is_subset(ty) {
                    return Err(TermError::Schema(format!("filter {} outside {:?}", f, ty)));
                }
                Ok(ty.clone())
            }
            Op::Rename(a, b, c) => term::rename_schema(self.ty(*c), a, b),
            Op::AntiProject(a, c) => term::antiproject_schema(self.ty(*c), a),
            Op::Join(l, r) => Ok(self.ty(*l).union(self.ty(*r)).cloned().collect()),
            Op::AntiJoin(l, _) => Ok(self.ty(*l).clone()),
            Op::Union(l, r) => term::union_schema(self.ty(*l), self.ty(*r)),
            Op::Fix(c, r) => {
                if self.ty(*c) != self.ty(*r) {
                    return Err(TermError::Schema(format!(
                        "fixpoint parts differ: {:?} vs {:?}",
                        self.ty(*c),
                        self.ty(*r)
                    )));
                }
                if !self.is_free(*r) {
                    return Err(TermError::Restriction(
                        "recursive part without recursion variable".into(),
                    ));
                }
                Ok(self.ty(*c).clone())
            }
        }
    }

    fn op_free(&self, op: &Op) -> bool {
        match op {
            Op::Var(_) => true,
            Op::Rel(_) => false,
            Op::Fix(c, _) => self.is_free(*c),
            _ => op.children().iter().flatten().any(|&c| self.is_free(c)),
        }
    }

    fn check_op(&self, op: &Op) -> Result<Schema, TermError> {
        let ty = self.op_type(op)?;
        match op {
            Op::AntiJoin(_, r) if self.is_free(*r) => Err(TermError::Restriction(
                "recursion variable in antijoin right operand".into(),
            )),
            Op::Join(l, r) if self.is_free(*l) && self.is_free(*r) => {
                Err(TermError::Restriction("non-linear join".into()))
            }
            _ => Ok(ty),
        }
    }

    /// Interns `op`, creating a singleton class when it is new.
    pub fn add(&mut self, op: Op) -> Result<EqId, TermError> {
        let op = self.canon(&op);
        if let Some(&c) = self.memo.get(&op) {
            return Ok(self.find(c));
        }
        let ty = self.check_op(&op)?;
        let free = self.op_free(&op);
        let id = EqId(self.classes.len() as u32);
        for c in op.children().into_iter().flatten() {
            self.classes[c.index()].parents.push((op.clone(), id));
        }
        self.classes.push(Class {
            members: vec![op.clone()],
            parents: Vec::new(),
            ty,
            free,
            binders: Vec::new(),
            ann: None,
        });
        self.uf.push(id.0);
        self.memo.insert(op, id);
        self.changed.push(id);
        Ok(id)
    }

    /// Adds `op` as a member of `target`. Returns whether `target` changed.
    /// The caller must call [`Store::rebuild`] before relying on congruence.
    pub fn add_to(&mut self, target: EqId, op: Op) -> Result<bool, TermError> {
        let target = self.find(target);
        let op = self.canon(&op);
        if let Some(&c) = self.memo.get(&op) {
            let c = self.find(c);
            if c == target {
                return Ok(false);
            }
            if self.classes[c.index()].ty != self.classes[target.index()].ty {
                return Err(TermError::Schema("merging classes of different types".into()));
            }
            return Ok(self.union(c, target));
        }
        let ty = self.check_op(&op)?;
        if ty != self.classes[target.index()].ty {
            return Err(TermError::Schema(format!(
                "member type {:?} differs from class type {:?}",
                ty,
                self.classes[target.index()].ty
            )));
        }
        let free = self.op_free(&op);
        for c in op.children().into_iter().flatten() {
            self.classes[c.index()].parents.push((op.clone(), target));
        }
        let cls = &mut self.classes[target.index()];
        cls.members.push(op.clone());
        cls.free |= free;
        self.memo.insert(op, target);
        self.changed.push(target);
        Ok(true)
    }

    /// Unifies two classes. The smaller id survives and keeps its members
    /// first.
    pub fn union(&mut self, a: EqId, b: EqId) -> bool {
        let a = self.find_compress(a);
        let b = self.find_compress(b);
        if a == b {
            return false;
        }
        let (root, other) = if a < b { (a, b) } else { (b, a) };
        debug_assert_eq!(self.classes[root.index()].ty, self.classes[other.index()].ty);
        self.uf[other.index()] = root.0;
        self.merges += 1;
        let o = &mut self.classes[other.index()];
        let members = std::mem::take(&mut o.members);
        let parents = std::mem::take(&mut o.parents);
        let binders = std::mem::take(&mut o.binders);
        let ann = o.ann.take();
        let free = o.free;
        let r = &mut self.classes[root.index()];
        r.members.extend(members);
        r.parents.extend(parents);
        r.binders.extend(binders);
        r.free |= free;
        match (&r.ann, ann) {
            (None, Some(x)) => r.ann = Some(x),
            (Some(k), Some(x)) if *k != x => {
                let kept = k.clone();
                self.conflicts.push(AnnotationConflict { class: root, kept, other: x });
            }
            _ => {}
        }
        self.pending.push(root);
        self.touched.push(root);
        self.changed.push(root);
        true
    }

    /// Restores congruence: no two live members are structurally equal.
    pub fn rebuild(&mut self) {
        if self.pending.is_empty() && self.touched.is_empty() {
            return;
        }
        let merges_before = self.merges;
        while !self.pending.is_empty() {
            let todo = std::mem::take(&mut self.pending);
            for c in todo {
                let c = self.find_compress(c);
                self.repair(c);
            }
        }
        let mut touched = std::mem::take(&mut self.touched);
        touched.iter_mut().for_each(|c| *c = self.find(*c));
        touched.sort();
        touched.dedup();
        for c in touched {
            let ms = std::mem::take(&mut self.classes[c.index()].members);
            let mut seen = HashSet::new();
            let mut out = Vec::with_capacity(ms.len());
            for m in ms {
                let m = self.canon(&m);
                if seen.insert(m.clone()) {
                    out.push(m);
                }
            }
            self.classes[c.index()].members = out;
        }
        if self.merges != merges_before || !self.replaced.is_empty() {
            let old = std::mem::take(&mut self.replaced);
            self.replaced = old.into_iter().map(|(p, m)| (self.canon(&p), self.canon(&m))).collect();
        }
        if self.merges != merges_before {
            let old = std::mem::take(&mut self.retype_memo);
            for ((k, ty), v) in old {
                let k = self.find(k);
                let v = v.map(|v| self.find(v));
                self.retype_memo.insert((k, ty), v);
            }
        }
    }

    fn repair(&mut self, c: EqId) {
        let parents = std::mem::take(&mut self.classes[c.index()].parents);
        for (op, _) in &parents {
            self.memo.remove(op);
        }
        let mut seen: HashMap<Op, EqId> = HashMap::new();
        let mut kept = Vec::with_capacity(parents.len());
        for (op, pc) in parents {
            let op = self.canon(&op);
            let pc = self.find(pc);
            self.touched.push(pc);
            if let Some(prev) = self.memo.insert(op.clone(), pc) {
                let prev = self.find(prev);
                if prev != pc {
                    self.union(prev, pc);
                }
            }
            if let Some(&prev) = seen.get(&op) {
                if self.find(prev) != self.find(pc) {
                    self.union(prev, pc);
                }
                continue;
            }
            seen.insert(op.clone(), pc);
            kept.push((op, pc));
        }
        let c = self.find(c);
        self.classes[c.index()].parents.extend(kept);
    }

    /// Classes that gained members or merged since the last call.
    pub fn take_changed(&mut self) -> Vec<EqId> {
        std::mem::take(&mut self.changed)
    }

    /// `(op, parent class)` pairs that use `id` as an operand.
    pub fn parents(&self, id: EqId) -> &[(Op, EqId)] {
        &self.class(id).parents
    }

    pub fn annotation(&self, rec: EqId) -> Option<&Annotation> {
        self.class(rec).ann.as_ref()
    }

    /// Attaches an annotation, recording a conflict if a different one is
    /// already present.
    pub fn set_annotation(&mut self, rec: EqId, ann: Annotation) {
        let rec = self.find(rec);
        let cls = &mut self.classes[rec.index()];
        match &cls.ann {
            None => cls.ann = Some(ann),
            Some(k) if *k != ann => {
                let kept = k.clone();
                self.conflicts.push(AnnotationConflict { class: rec, kept, other: ann });
            }
            _ => {}
        }
    }

    /// Overwrites an annotation without any check. Used to inject faults.
    pub fn force_annotation(&mut self, rec: EqId, ann: Annotation) {
        let rec = self.find(rec);
        self.classes[rec.index()].ann = Some(ann);
    }

    /// Computes and stores the annotation of a recursive part if missing.
    pub fn ensure_annotation(&mut self, rec: EqId) -> Annotation {
        if let Some(a) = self.annotation(rec) {
            return a.clone();
        }
        let a = annotations::annotate(self, rec);
        self.set_annotation(rec, a.clone());
        a
    }

    pub fn conflicts(&self) -> &[AnnotationConflict] {
        &self.conflicts
    }

    /// Records that `child` is no longer a valid operand choice under
    /// `parent` because a pushed form replaced it.
    pub fn record_replaced(&mut self, parent: &Op, child: &Op) {
        let p = self.canon(parent);
        let c = self.canon(child);
        self.replaced.insert((p, c));
    }

    pub fn is_replaced(&self, parent: &Op, child: &Op) -> bool {
        if self.replaced.is_empty() {
            return false;
        }
        self.replaced.contains(&(self.canon(parent), self.canon(child)))
    }

    /// Recorded (parent, excluded child) pairs, sorted.
    pub fn replaced_pairs(&self) -> Vec<(Op, Op)> {
        let mut v: Vec<_> = self.replaced.iter().cloned().collect();
        v.sort();
        v
    }

    pub fn has_replacements(&self) -> bool {
        !self.replaced.is_empty()
    }

    /// Members of `child` that may appear under `parent`.
    pub fn allowed_members<'a>(
        &'a self,
        parent: &'a Op,
        child: EqId,
    ) -> impl Iterator<Item = &'a Op> + 'a {
        let check = matches!(parent, Op::Filter(..) | Op::AntiProject(..)) && self.has_replacements();
        let p = if check { Some(self.canon(parent)) } else { None };
        self.members(child).iter().filter(move |m| match &p {
            Some(p) => !self.replaced.contains(&(p.clone(), self.canon(m))),
            None => true,
        })
    }

    /// Introduces `let constK = bound` on `at`, unless `bound` has a free
    /// recursion variable or is already bound there.
    pub fn add_binder(&mut self, at: EqId, bound: EqId) {
        let bound = self.find(bound);
        if self.is_free(bound) {
            return;
        }
        let at = self.find(at);
        let exists = self.classes[at.index()]
            .binders
            .iter()
            .any(|(_, b)| self.find(*b) == bound);
        if exists {
            return;
        }
        self.binder_counter += 1;
        let name = Name::from(format!("const{}", self.binder_counter));
        self.classes[at.index()].binders.push((name, bound));
    }

    /// Copy of the recursive part `class` in which the recursion variable
    /// has schema `new` instead of `old`. Members that do not type under the
    /// new schema are dropped; `None` when none survive.
    pub fn retype(&mut self, class: EqId, old: &Schema, new: &Schema) -> Option<EqId> {
        let class = self.find(class);
        if old == new || !self.is_free(class) {
            return Some(class);
        }
        let key = (class, new.clone());
        if let Some(v) = self.retype_memo.get(&key) {
            return v.map(|v| self.find(v));
        }
        self.retype_memo.insert(key.clone(), None);
        let members = self.classes[class.index()].members.clone();
        let mut result: Option<EqId> = None;
        for op in members {
            let op = self.canon(&op);
            let Some(nop) = self.retype_op(&op, old, new) else {
                continue;
            };
            let ty = match self.check_op(&nop) {
                Ok(t) => t,
                Err(_) => continue,
            };
            result = match result {
                None => self.add(nop).ok(),
                Some(t) => {
                    if ty == *self.ty(t) {
                        let _ = self.add_to(t, nop);
                        self.rebuild();
                    }
                    Some(self.find(t))
                }
            };
        }
        let result = result.map(|r| self.find(r));
        let key = (self.find(class), new.clone());
        self.retype_memo.insert(key, result);
        result
    }

    fn retype_op(&mut self, op: &Op, old: &Schema, new: &Schema) -> Option<Op> {
        let sub = |s: &mut Store, c: EqId| -> Option<EqId> {
            if s.is_free(c) {
                s.retype(c, old, new)
            } else {
                Some(s.find(c))
            }
        };
        Some(match op {
            Op::Var(_) => Op::Var(new.clone()),
            Op::Rel(_) => op.clone(),
            Op::Filter(f, c) => Op::Filter(f.clone(), sub(self, *c)?),
            Op::Rename(a, b, c) => Op::Rename(a.clone(), b.clone(), sub(self, *c)?),
            Op::AntiProject(a, c) => Op::AntiProject(a.clone(), sub(self, *c)?),
            Op::Join(l, r) => Op::Join(sub(self, *l)?, sub(self, *r)?),
            Op::AntiJoin(l, r) => Op::AntiJoin(sub(self, *l)?, sub(self, *r)?),
            Op::Union(l, r) => Op::Union(sub(self, *l)?, sub(self, *r)?),
            Op::Fix(c, r) => {
                let c2 = sub(self, *c)?;
                let (t1, t2) = (self.ty(*c).clone(), self.ty(c2).clone());
                let r2 = self.retype(*r, &t1, &t2)?;
                Op::Fix(c2, r2)
            }
        })
    }

    /// Previously computed retype result, without building anything.
    pub fn retype_lookup(&self, class: EqId, old: &Schema, new: &Schema) -> Option<Option<EqId>> {
        let class = self.find(class);
        if old == new || !self.is_free(class) {
            return Some(Some(class));
        }
        self.retype_memo
            .get(&(class, new.clone()))
            .map(|v| v.map(|v| self.find(v)))
    }

    /// Inserts a closed term.
    pub fn add_term(&mut self, t: &Term) -> Result<EqId, TermError> {
        self.add_term_in(t, &mut term::VarEnv::new())
    }

    /// Inserts a term whose free recursion variable is typed by `env`.
    pub fn add_term_in(&mut self, t: &Term, env: &mut term::VarEnv) -> Result<EqId, TermError> {
        let v = term::check_restrictions(t);
        if !v.is_empty() {
            return Err(TermError::Restriction(v.join("; ")));
        }
        term::type_of_in(t, &self.catalog, &mut env.clone())?;
        let id = self.insert(t, env)?;
        self.rebuild();
        Ok(self.find(id))
    }

    fn insert(&mut self, t: &Term, env: &mut term::VarEnv) -> Result<EqId, TermError> {
        let op = match t {
            Term::Rel(n) => Op::Rel(n.clone()),
            Term::Var(x) => match env.last() {
                Some((n, s)) if n == x => Op::Var(s.clone()),
                _ => return Err(TermError::UnboundVariable(x.to_string())),
            },
            Term::Filter(f, c) => Op::Filter(f.clone(), self.insert(c, env)?),
            Term::Rename(a, b, c) => Op::Rename(a.clone(), b.clone(), self.insert(c, env)?),
            Term::AntiProject(a, c) => Op::AntiProject(a.clone(), self.insert(c, env)?),
            Term::Join(l, r) => Op::Join(self.insert(l, env)?, self.insert(r, env)?),
            Term::AntiJoin(l, r) => Op::AntiJoin(self.insert(l, env)?, self.insert(r, env)?),
            Term::Union(l, r) => Op::Union(self.insert(l, env)?, self.insert(r, env)?),
            Term::Fix(x, c, r) => {
                let cc = self.insert(c, env)?;
                env.push((x.clone(), self.ty(cc).clone()));
                let rc = self.insert(r, env);
                env.pop();
                let rc = rc?;
                self.ensure_annotation(rc);
                Op::Fix(cc, rc)
            }
        };
        self.add(op)
    }

    /// Class holding `t`, if every subterm is already interned.
    pub fn lookup_term(&self, t: &Term) -> Option<EqId> {
        self.lookup_in(t, &mut Vec::new())
    }

    fn lookup_in(&self, t: &Term, env: &mut term::VarEnv) -> Option<EqId> {
        let op = match t {
            Term::Rel(n) => Op::Rel(n.clone()),
            Term::Var(x) => match env.last() {
                Some((n, s)) if n == x => Op::Var(s.clone()),
                _ => return None,
            },
            Term::Filter(f, c) => Op::Filter(f.clone(), self.lookup_in(c, env)?),
            Term::Rename(a, b, c) => Op::Rename(a.clone(), b.clone(), self.lookup_in(c, env)?),
            Term::AntiProject(a, c) => Op::AntiProject(a.clone(), self.lookup_in(c, env)?),
            Term::Join(l, r) => Op::Join(self.lookup_in(l, env)?, self.lookup_in(r, env)?),
            Term::AntiJoin(l, r) => Op::AntiJoin(self.lookup_in(l, env)?, self.lookup_in(r, env)?),
            Term::Union(l, r) => Op::Union(self.lookup_in(l, env)?, self.lookup_in(r, env)?),
            Term::Fix(x, c, r) => {
                let cc = self.lookup_in(c, env)?;
                env.push((x.clone(), self.ty(cc).clone()));
                let rc = self.lookup_in(r, env);
                env.pop();
                Op::Fix(cc, rc?)
            }
        };
        self.lookup(&op)
    }

    /// Whether `t` is one of the plans of `root`, honouring replacements.
    pub fn contains_plan(&self, root: EqId, t: &Term) -> bool {
        self.plan_op(t, &mut Vec::new())
            .map(|(c, _)| c == self.find(root))
            .unwrap_or(false)
    }

    fn plan_op(&self, t: &Term, env: &mut term::VarEnv) -> Option<(EqId, Op)> {
        let op = match t {
            Term::Rel(n) => Op::Rel(n.clone()),
            Term::Var(x) => match env.last() {
                Some((n, s)) if n == x => Op::Var(s.clone()),
                _ => return None,
            },
            Term::Filter(f, c) => Op::Filter(f.clone(), self.plan_child(c, env, |c| Op::Filter(f.clone(), c))?),
            Term::Rename(a, b, c) => Op::Rename(a.clone(), b.clone(), self.plan_op(c, env)?.0),
            Term::AntiProject(a, c) => {
                Op::AntiProject(a.clone(), self.plan_child(c, env, |c| Op::AntiProject(a.clone(), c))?)
            }
            Term::Join(l, r) => Op::Join(self.plan_op(l, env)?.0, self.plan_op(r, env)?.0),
            Term::AntiJoin(l, r) => Op::AntiJoin(self.plan_op(l, env)?.0, self.plan_op(r, env)?.0),
            Term::Union(l, r) => Op::Union(self.plan_op(l, env)?.0, self.plan_op(r, env)?.0),
            Term::Fix(x, c, r) => {
                let cc = self.plan_op(c, env)?.0;
                env.push((x.clone(), self.ty(cc).clone()));
                let rc = self.plan_op(r, env);
                env.pop();
                Op::Fix(cc, rc?.0)
            }
        };
        let op = self.canon(&op);
        let c = self.memo.get(&op).map(|&c| self.find(c))?;
        Some((c, op))
    }

    fn plan_child<F: Fn(EqId) -> Op>(
        &self,
        c: &Term,
        env: &mut term::VarEnv,
        parent: F,
    ) -> Option<EqId> {
        let (cls, child_op) = self.plan_op(c, env)?;
        if self.is_replaced(&parent(cls), &child_op) {
            return None;
        }
        Some(cls)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::schema;

    fn cat() -> Catalog {
        let mut c = Catalog::new();
        for r in ["A", "B", "C", "E"] {
            c.insert(r.into(), schema(&["s", "t"]));
        }
        c
    }

    #[test]
    fn intern_is_idempotent() {
        let mut s = Store::new(cat());
        let a = s.add(Op::Rel("A".into())).unwrap();
        let b = s.add(Op::Rel("B".into())).unwrap();
        let j1 = s.add(Op::Join(a, b)).unwrap();
        let j2 = s.add(Op::Join(a, b)).unwrap();
        assert_eq!(j1, j2);
        assert_eq!(s.live_classes().len(), 3);
    }

    #[test]
    fn add_to_existing_member_is_noop() {
        let mut s = Store::new(cat());
        let a = s.add(Op::Rel("A".into())).unwrap();
        let b = s.add(Op::Rel("B".into())).unwrap();
        let j = s.add(Op::Join(a, b)).unwrap();
        assert!(!s.add_to(j, Op::Join(a, b)).unwrap());
        assert_eq!(s.members(j).len(), 1);
    }

    #[test]
    fn congruence_after_union() {
        let mut s = Store::new(cat());
        let a = s.add(Op::Rel("A".into())).unwrap();
        let b = s.add(Op::Rel("B".into())).unwrap();
        let c = s.add(Op::Rel("C".into())).unwrap();
        let ja = s.add(Op::Join(a, c)).unwrap();
        let jb = s.add(Op::Join(b, c)).unwrap();
        assert_ne!(ja, jb);
        s.union(a, b);
        s.rebuild();
        assert_eq!(s.find(ja), s.find(jb));
        let live = s.live_classes();
        let mut all: Vec<Op> = live.iter().flat_map(|&c| s.members(c).to_vec()).collect();
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
    }

    #[test]
    fn type_mismatch_rejected() {
        let mut s = Store::new(cat());
        let a = s.add(Op::Rel("A".into())).unwrap();
        let r = s.add(Op::Rename("t".into(), "m".into(), a)).unwrap();
        assert!(s.add_to(a, Op::Rename("t".into(), "m".into(), a)).is_err());
        assert!(s.add(Op::Union(a, r)).is_err());
    }

    #[test]
    fn var_is_nameless() {
        let mut s = Store::new(cat());
        let sig = |x: &str| {
            Term::fix(
                x,
                Term::rel("E"),
                Term::antiproject(
                    "m",
                    Term::join(Term::rename("t", "m", Term::rel("E")), Term::rename("s", "m", Term::var(x))),
                ),
            )
        };
        let a = s.add_term(&sig("X")).unwrap();
        let b = s.add_term(&sig("Y")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn retype_grows_variable() {
        let mut s = Store::new(cat());
        let x = s.add(Op::Var(schema(&["s", "t"]))).unwrap();
        let e = s.add(Op::Rel("E".into())).unwrap();
        let j = s.add(Op::Join(e, x)).unwrap();
        assert!(s.is_free(j));
        let r = s.retype(j, &schema(&["s", "t"]), &schema(&["s", "t", "u"])).unwrap();
        assert_eq!(s.ty(r), &schema(&["s", "t", "u"]));
        assert_eq!(s.retype(j, &schema(&["s", "t"]), &schema(&["s", "t"])), Some(j));
        assert_eq!(s.retype_lookup(j, &schema(&["s", "t"]), &schema(&["s", "t", "u"])), Some(Some(r)));
    }

    #[test]
    fn lookup_term_finds_inserted() {
        let mut s = Store::new(cat());
        let t = Term::join(Term::rel("A"), Term::rel("B"));
        let id = s.add_term(&t).unwrap();
        assert_eq!(s.lookup_term(&t), Some(id));
        assert_eq!(s.lookup_term(&Term::join(Term::rel("B"), Term::rel("A"))), None);
        assert!(s.contains_plan(id, &t));
    }

    #[test]
    fn restriction_violation_rejected() {
        let mut s = Store::new(cat());
        let bad = Term::fix("X", Term::rel("A"), Term::antijoin(Term::rel("A"), Term::var("X")));
        assert!(matches!(s.add_term(&bad), Err(TermError::Restriction(_))));
    }
}
