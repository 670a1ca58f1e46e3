//! Individual μ-RA terms: typing, free recursion variables, substitution,
//! and the per-term destabilizer and rigid column sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::TermError;

/// Interned-by-`Arc` identifier used for columns, relations, recursion
/// variables and filter literals.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// A set of column names.
pub type Schema = BTreeSet<Name>;

/// Relation name to schema.
pub type Catalog = BTreeMap<Name, Schema>;

pub fn schema(cols: &[&str]) -> Schema {
    cols.iter().map(|c| Name::new(c)).collect()
}

/// One conjunct of a filter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    EqConst(Name, Name),
    NeConst(Name, Name),
    EqCol(Name, Name),
}

/// Conjunction of atoms, kept sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FilterExpr {
    atoms: Vec<Atom>,
}

impl FilterExpr {
    pub fn new(atoms: Vec<Atom>) -> Self {
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|a| match a {
                Atom::EqCol(x, y) if y < x => Atom::EqCol(y, x),
                a => a,
            })
            .collect();
        atoms.sort();
        atoms.dedup();
        FilterExpr { atoms }
    }

    pub fn eq_const(col: &str, lit: &str) -> Self {
        FilterExpr::new(vec![Atom::EqConst(col.into(), lit.into())])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `filt(f)`: the columns the predicate reads.
    pub fn columns(&self) -> Schema {
        let mut out = Schema::new();
        for a in &self.atoms {
            match a {
                Atom::EqConst(c, _) | Atom::NeConst(c, _) => {
                    out.insert(c.clone());
                }
                Atom::EqCol(x, y) => {
                    out.insert(x.clone());
                    out.insert(y.clone());
                }
            }
        }
        out
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::EqConst(c, v) => write!(f, "(= {} {:?})", c, v.as_str()),
            Atom::NeConst(c, v) => write!(f, "(!= {} {:?})", c, v.as_str()),
            Atom::EqCol(x, y) => write!(f, "(= {} {})", x, y),
        }
    }
}

impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.len() == 1 {
            return write!(f, "{}", self.atoms[0]);
        }
        write!(f, "(and")?;
        for a in &self.atoms {
            write!(f, " {}", a)?;
        }
        write!(f, ")")
    }
}

/// A single μ-RA plan.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Rel(Name),
    Var(Name),
    Filter(FilterExpr, Arc<Term>),
    Rename(Name, Name, Arc<Term>),
    AntiProject(Name, Arc<Term>),
    Join(Arc<Term>, Arc<Term>),
    AntiJoin(Arc<Term>, Arc<Term>),
    Union(Arc<Term>, Arc<Term>),
    Fix(Name, Arc<Term>, Arc<Term>),
}

impl Term {
    pub fn rel(name: &str) -> Term {
        Term::Rel(name.into())
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.into())
    }

    pub fn filter(f: FilterExpr, t: Term) -> Term {
        Term::Filter(f, Arc::new(t))
    }

    pub fn rename(a: &str, b: &str, t: Term) -> Term {
        Term::Rename(a.into(), b.into(), Arc::new(t))
    }

    pub fn antiproject(a: &str, t: Term) -> Term {
        Term::AntiProject(a.into(), Arc::new(t))
    }

    pub fn join(l: Term, r: Term) -> Term {
        Term::Join(Arc::new(l), Arc::new(r))
    }

    pub fn antijoin(l: Term, r: Term) -> Term {
        Term::AntiJoin(Arc::new(l), Arc::new(r))
    }

    pub fn union(l: Term, r: Term) -> Term {
        Term::Union(Arc::new(l), Arc::new(r))
    }

    pub fn fix(x: &str, c: Term, r: Term) -> Term {
        Term::Fix(x.into(), Arc::new(c), Arc::new(r))
    }

    /// Number of operator nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Rel(_) | Term::Var(_) => 1,
            Term::Filter(_, t) | Term::Rename(_, _, t) | Term::AntiProject(_, t) => 1 + t.size(),
            Term::Join(l, r) | Term::AntiJoin(l, r) | Term::Union(l, r) | Term::Fix(_, l, r) => {
                1 + l.size() + r.size()
            }
        }
    }

    /// Counts `(fixpoints, joins)` in the term.
    pub fn count_fix_join(&self) -> (usize, usize) {
        let mut acc = (0, 0);
        self.visit(&mut |t| match t {
            Term::Fix(..) => acc.0 += 1,
            Term::Join(..) => acc.1 += 1,
            _ => {}
        });
        acc
    }

    /// Pre-order traversal.
    pub fn visit<F: FnMut(&Term)>(&self, f: &mut F) {
        f(self);
        match self {
            Term::Rel(_) | Term::Var(_) => {}
            Term::Filter(_, t) | Term::Rename(_, _, t) | Term::AntiProject(_, t) => t.visit(f),
            Term::Join(l, r) | Term::AntiJoin(l, r) | Term::Union(l, r) | Term::Fix(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Rel(n) => write!(f, "(rel {})", n),
            Term::Var(n) => write!(f, "(var {})", n),
            Term::Filter(p, t) => write!(f, "(filter {} {})", p, t),
            Term::Rename(a, b, t) => write!(f, "(rename {} {} {})", a, b, t),
            Term::AntiProject(a, t) => write!(f, "(antiproject {} {})", a, t),
            Term::Join(l, r) => write!(f, "(join {} {})", l, r),
            Term::AntiJoin(l, r) => write!(f, "(antijoin {} {})", l, r),
            Term::Union(l, r) => write!(f, "(union {} {})", l, r),
            Term::Fix(x, c, r) => write!(f, "(fix {} {} {})", x, c, r),
        }
    }
}

/// Canonical name of the recursion variable bound at recursive-part depth `d`.
pub fn var_name(d: usize) -> Name {
    if d == 0 {
        Name::new("X")
    } else {
        Name::from(format!("X{}", d))
    }
}

/// Schema environment for recursion variables, innermost binding last.
pub type VarEnv = Vec<(Name, Schema)>;

fn lookup<'a>(env: &'a VarEnv, x: &Name) -> Option<&'a Schema> {
    env.iter().rev().find(|(n, _)| n == x).map(|(_, s)| s)
}

/// Type of a closed term.
pub fn type_of(t: &Term, cat: &Catalog) -> Result<Schema, TermError> {
    type_of_in(t, cat, &mut VarEnv::new())
}

/// Type of a term whose free recursion variables are typed by `env`.
pub fn type_of_in(t: &Term, cat: &Catalog, env: &mut VarEnv) -> Result<Schema, TermError> {
    match t {
        Term::Rel(r) => cat
            .get(r)
            .cloned()
            .ok_or_else(|| TermError::UnknownRelation(r.to_string())),
        Term::Var(x) => lookup(env, x)
            .cloned()
            .ok_or_else(|| TermError::UnboundVariable(x.to_string())),
        Term::Filter(f, c) => {
            let ty = type_of_in(c, cat, env)?;
            let cols = f.columns();
            if !cols.is_subset(&ty) {
                return Err(TermError::Schema(format!(
                    "filter reads {:?} outside {:?}",
                    cols, ty
                )));
            }
            Ok(ty)
        }
        Term::Rename(a, b, c) => {
            let ty = type_of_in(c, cat, env)?;
            rename_schema(&ty, a, b)
        }
        Term::AntiProject(a, c) => {
            let ty = type_of_in(c, cat, env)?;
            antiproject_schema(&ty, a)
        }
        Term::Join(l, r) => {
            let lt = type_of_in(l, cat, env)?;
            let rt = type_of_in(r, cat, env)?;
            Ok(lt.union(&rt).cloned().collect())
        }
        Term::AntiJoin(l, r) => {
            let lt = type_of_in(l, cat, env)?;
            type_of_in(r, cat, env)?;
            Ok(lt)
        }
        Term::Union(l, r) => {
            let lt = type_of_in(l, cat, env)?;
            let rt = type_of_in(r, cat, env)?;
            union_schema(&lt, &rt)
        }
        Term::Fix(x, c, r) => {
            let ct = type_of_in(c, cat, env)?;
            env.push((x.clone(), ct.clone()));
            let rt = type_of_in(r, cat, env);
            env.pop();
            let rt = rt?;
            if rt != ct {
                return Err(TermError::Schema(format!(
                    "fixpoint parts differ: {:?} vs {:?}",
                    ct, rt
                )));
            }
            Ok(ct)
        }
    }
}

pub fn rename_schema(ty: &Schema, a: &Name, b: &Name) -> Result<Schema, TermError> {
    if !ty.contains(a) {
        return Err(TermError::Schema(format!("rename source {} absent from {:?}", a, ty)));
    }
    if ty.contains(b) {
        return Err(TermError::Schema(format!("rename target {} already in {:?}", b, ty)));
    }
    let mut out = ty.clone();
    out.remove(a);
    out.insert(b.clone());
    Ok(out)
}

pub fn antiproject_schema(ty: &Schema, a: &Name) -> Result<Schema, TermError> {
    if !ty.contains(a) {
        return Err(TermError::Schema(format!("antiprojected {} absent from {:?}", a, ty)));
    }
    let mut out = ty.clone();
    out.remove(a);
    Ok(out)
}

pub fn union_schema(l: &Schema, r: &Schema) -> Result<Schema, TermError> {
    if l != r {
        return Err(TermError::Schema(format!("union operands differ: {:?} vs {:?}", l, r)));
    }
    Ok(l.clone())
}

/// Free recursion variables.
pub fn free_rec_vars(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_free(t, &mut Vec::new(), &mut out);
    out
}

fn collect_free(t: &Term, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match t {
        Term::Rel(_) => {}
        Term::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        Term::Filter(_, c) | Term::Rename(_, _, c) | Term::AntiProject(_, c) => {
            collect_free(c, bound, out)
        }
        Term::Join(l, r) | Term::AntiJoin(l, r) | Term::Union(l, r) => {
            collect_free(l, bound, out);
            collect_free(r, bound, out);
        }
        Term::Fix(x, c, r) => {
            collect_free(c, bound, out);
            bound.push(x.clone());
            collect_free(r, bound, out);
            bound.pop();
        }
    }
}

fn occurs(t: &Term, x: &Name) -> bool {
    let mut found = false;
    t.visit(&mut |s| match s {
        Term::Var(y) | Term::Fix(y, _, _) if y == x => found = true,
        _ => {}
    });
    found
}

/// Capture-free renaming of the free occurrences of `x` into `x2`.
pub fn substitute(t: &Term, x: &Name, x2: &Name) -> Result<Term, TermError> {
    if x != x2 && occurs(t, x2) {
        return Err(TermError::Freshness(x2.to_string()));
    }
    Ok(subst(t, x, x2))
}

fn subst(t: &Term, x: &Name, x2: &Name) -> Term {
    match t {
        Term::Rel(_) => t.clone(),
        Term::Var(y) => {
            if y == x {
                Term::Var(x2.clone())
            } else {
                t.clone()
            }
        }
        Term::Filter(f, c) => Term::Filter(f.clone(), Arc::new(subst(c, x, x2))),
        Term::Rename(a, b, c) => Term::Rename(a.clone(), b.clone(), Arc::new(subst(c, x, x2))),
        Term::AntiProject(a, c) => Term::AntiProject(a.clone(), Arc::new(subst(c, x, x2))),
        Term::Join(l, r) => Term::Join(Arc::new(subst(l, x, x2)), Arc::new(subst(r, x, x2))),
        Term::AntiJoin(l, r) => {
            Term::AntiJoin(Arc::new(subst(l, x, x2)), Arc::new(subst(r, x, x2)))
        }
        Term::Union(l, r) => Term::Union(Arc::new(subst(l, x, x2)), Arc::new(subst(r, x, x2))),
        Term::Fix(y, c, r) => {
            let c2 = Arc::new(subst(c, x, x2));
            if y == x {
                Term::Fix(y.clone(), c2, r.clone())
            } else {
                Term::Fix(y.clone(), c2, Arc::new(subst(r, x, x2)))
            }
        }
    }
}

/// Renames every fixpoint variable to [`var_name`] of its recursive-part
/// depth, giving one representative per alpha-equivalence class.
pub fn canonicalize(t: &Term) -> Term {
    canon(t, 0, &mut Vec::new())
}

fn canon(t: &Term, depth: usize, env: &mut Vec<(Name, Name)>) -> Term {
    match t {
        Term::Rel(_) => t.clone(),
        Term::Var(x) => match env.iter().rev().find(|(o, _)| o == x) {
            Some((_, n)) => Term::Var(n.clone()),
            None => t.clone(),
        },
        Term::Filter(f, c) => Term::Filter(f.clone(), Arc::new(canon(c, depth, env))),
        Term::Rename(a, b, c) => Term::Rename(a.clone(), b.clone(), Arc::new(canon(c, depth, env))),
        Term::AntiProject(a, c) => Term::AntiProject(a.clone(), Arc::new(canon(c, depth, env))),
        Term::Join(l, r) => Term::Join(Arc::new(canon(l, depth, env)), Arc::new(canon(r, depth, env))),
        Term::AntiJoin(l, r) => {
            Term::AntiJoin(Arc::new(canon(l, depth, env)), Arc::new(canon(r, depth, env)))
        }
        Term::Union(l, r) => {
            Term::Union(Arc::new(canon(l, depth, env)), Arc::new(canon(r, depth, env)))
        }
        Term::Fix(x, c, r) => {
            let c2 = canon(c, depth, env);
            let n = var_name(depth);
            env.push((x.clone(), n.clone()));
            let r2 = canon(r, depth + 1, env);
            env.pop();
            Term::Fix(n, Arc::new(c2), Arc::new(r2))
        }
    }
}

/// A derivation: a finite column map, identity outside its support, where
/// `None` is the absorbing non-column ⊥.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Derivation(BTreeMap<Name, Option<Name>>);

impl Derivation {
    pub fn identity() -> Self {
        Derivation(BTreeMap::new())
    }

    pub fn from_pairs(pairs: &[(&str, Option<&str>)]) -> Self {
        Derivation(BTreeMap::new()).compose_raw(
            pairs
                .iter()
                .map(|(a, b)| (Name::new(a), b.map(Name::new)))
                .collect(),
        )
    }

    fn compose_raw(self, m: BTreeMap<Name, Option<Name>>) -> Self {
        Derivation(m).normalized()
    }

    fn normalized(mut self) -> Self {
        self.0.retain(|k, v| v.as_ref() != Some(k));
        self
    }

    pub fn apply(&self, c: &Name) -> Option<Name> {
        match self.0.get(c) {
            Some(v) => v.clone(),
            None => Some(c.clone()),
        }
    }

    /// `self ⊚ q`: applies `q` first, then `self`.
    pub fn compose(&self, q: &Derivation) -> Derivation {
        let mut keys: BTreeSet<&Name> = self.0.keys().collect();
        keys.extend(q.0.keys());
        let m = keys
            .into_iter()
            .map(|c| {
                let v = match q.apply(c) {
                    None => None,
                    Some(c2) => self.apply(&c2),
                };
                (c.clone(), v)
            })
            .collect();
        Derivation(m).normalized()
    }

    /// Columns the derivation moves.
    pub fn support(&self) -> impl Iterator<Item = &Name> {
        self.0.keys()
    }

    /// `(b → a, a → ⊥)`: the step contributed by renaming a into b.
    pub fn rename_step(a: &Name, b: &Name) -> Derivation {
        let mut m = BTreeMap::new();
        m.insert(b.clone(), Some(a.clone()));
        m.insert(a.clone(), None);
        Derivation(m).normalized()
    }

    /// `(a → ⊥)`: the step contributed by antiprojecting a.
    pub fn drop_step(a: &Name) -> Derivation {
        let mut m = BTreeMap::new();
        m.insert(a.clone(), None);
        Derivation(m)
    }
}

/// `deriv(t, x)` over a single term.
pub fn term_deriv(t: &Term, x: &Name) -> BTreeSet<Derivation> {
    match t {
        Term::Var(y) if y == x => std::iter::once(Derivation::identity()).collect(),
        Term::Var(_) | Term::Rel(_) | Term::Fix(..) => BTreeSet::new(),
        Term::Union(l, r) | Term::Join(l, r) => {
            let mut out = term_deriv(l, x);
            out.extend(term_deriv(r, x));
            out
        }
        Term::AntiJoin(l, _) => term_deriv(l, x),
        Term::Filter(_, c) => term_deriv(c, x),
        Term::Rename(a, b, c) => {
            let step = Derivation::rename_step(a, b);
            term_deriv(c, x).iter().map(|p| p.compose(&step)).collect()
        }
        Term::AntiProject(a, c) => {
            let step = Derivation::drop_step(a);
            term_deriv(c, x).iter().map(|p| p.compose(&step)).collect()
        }
    }
}

/// Destabilizer: columns some derivation moves.
pub fn term_destab(t: &Term, x: &Name) -> Schema {
    destab_of(&term_deriv(t, x))
}

pub fn destab_of(ds: &BTreeSet<Derivation>) -> Schema {
    ds.iter().flat_map(|p| p.support().cloned()).collect()
}

/// Rigid columns of `t` with respect to `x`. Free variables other than `x`
/// are typed through `env`.
pub fn term_rigid(t: &Term, x: &Name, cat: &Catalog) -> Result<Schema, TermError> {
    term_rigid_in(t, x, cat, &mut VarEnv::new())
}

pub fn term_rigid_in(
    t: &Term,
    x: &Name,
    cat: &Catalog,
    env: &mut VarEnv,
) -> Result<Schema, TermError> {
    match t {
        Term::Var(y) if y == x => Ok(Schema::new()),
        Term::Var(_) | Term::Rel(_) => type_of_in(t, cat, env),
        Term::Union(l, r) | Term::Join(l, r) | Term::AntiJoin(l, r) => {
            let mut out = term_rigid_in(l, x, cat, env)?;
            out.extend(term_rigid_in(r, x, cat, env)?);
            Ok(out)
        }
        Term::Rename(a, b, c) => {
            let mut out = term_rigid_in(c, x, cat, env)?;
            out.insert(a.clone());
            out.insert(b.clone());
            Ok(out)
        }
        Term::AntiProject(a, c) => {
            if !free_rec_vars(c).contains(x) {
                return Ok(Schema::new());
            }
            let mut out = term_rigid_in(c, x, cat, env)?;
            out.insert(a.clone());
            Ok(out)
        }
        Term::Filter(f, c) => {
            let mut out = term_rigid_in(c, x, cat, env)?;
            out.extend(f.columns());
            Ok(out)
        }
        Term::Fix(z, c, r) => {
            let ct = type_of_in(c, cat, env)?;
            let mut out = term_rigid_in(c, x, cat, env)?;
            env.push((z.clone(), ct));
            let rr = term_rigid_in(r, x, cat, env);
            env.pop();
            out.extend(rr?);
            Ok(out)
        }
    }
}

/// Checks the positive, linear and non-mutually-recursive restrictions and
/// the fixpoint side conditions. Returns one message per violation.
pub fn check_restrictions(t: &Term) -> Vec<String> {
    let mut out = Vec::new();
    restrictions(t, &mut out);
    out
}

fn restrictions(t: &Term, out: &mut Vec<String>) {
    let free = free_rec_vars(t);
    if free.len() > 1 {
        out.push(format!("mutual recursion: {:?} free together in {}", free, t));
    }
    match t {
        Term::Rel(_) | Term::Var(_) => {}
        Term::Filter(_, c) | Term::Rename(_, _, c) | Term::AntiProject(_, c) => restrictions(c, out),
        Term::Join(l, r) | Term::Union(l, r) => {
            if let Term::Join(..) = t {
                let lf = free_rec_vars(l);
                let rf = free_rec_vars(r);
                if lf.intersection(&rf).next().is_some() {
                    out.push(format!("non-linear join: {}", t));
                }
            }
            restrictions(l, out);
            restrictions(r, out);
        }
        Term::AntiJoin(l, r) => {
            if !free_rec_vars(r).is_empty() {
                out.push(format!("recursion variable under antijoin right operand: {}", t));
            }
            restrictions(l, out);
            restrictions(r, out);
        }
        Term::Fix(x, c, r) => {
            if free_rec_vars(c).contains(x) {
                out.push(format!("{} free in constant part of {}", x, t));
            }
            if !free_rec_vars(r).contains(x) {
                out.push(format!("{} not free in recursive part of {}", x, t));
            }
            restrictions(c, out);
            restrictions(r, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> Catalog {
        let mut c = Catalog::new();
        c.insert("isLocIn".into(), schema(&["s", "t"]));
        c.insert("A".into(), schema(&["s", "t"]));
        c
    }

    fn sigma_rec() -> Term {
        Term::antiproject(
            "m",
            Term::join(
                Term::rename("t", "m", Term::rel("isLocIn")),
                Term::rename("s", "m", Term::var("X")),
            ),
        )
    }

    fn sigma_prime_rec() -> Term {
        Term::antiproject(
            "m",
            Term::join(
                Term::rename("t", "m", Term::var("X")),
                Term::rename("s", "m", Term::rel("isLocIn")),
            ),
        )
    }

    #[test]
    fn rename_type() {
        let t = Term::rename("t", "m", Term::rel("isLocIn"));
        assert_eq!(type_of(&t, &cat()).unwrap(), schema(&["s", "m"]));
    }

    #[test]
    fn sigma_rec_type() {
        let mut env = vec![(Name::new("X"), schema(&["s", "t"]))];
        assert_eq!(type_of_in(&sigma_rec(), &cat(), &mut env).unwrap(), schema(&["s", "t"]));
    }

    #[test]
    fn schema_errors() {
        let c = cat();
        assert!(type_of(&Term::rename("t", "s", Term::rel("A")), &c).is_err());
        assert!(type_of(&Term::antiproject("m", Term::rel("A")), &c).is_err());
        let u = Term::union(Term::rel("A"), Term::rename("t", "m", Term::rel("A")));
        assert!(type_of(&u, &c).is_err());
    }

    #[test]
    fn free_vars() {
        assert_eq!(free_rec_vars(&sigma_rec()), [Name::new("X")].into_iter().collect());
        assert!(free_rec_vars(&Term::rel("A")).is_empty());
        let f = Term::fix("X", Term::rel("isLocIn"), sigma_rec());
        assert!(free_rec_vars(&f).is_empty());
    }

    #[test]
    fn substitution() {
        let t = Term::join(Term::var("X"), Term::rel("A"));
        let s = substitute(&t, &"X".into(), &"Y".into()).unwrap();
        assert_eq!(s, Term::join(Term::var("Y"), Term::rel("A")));
        assert_eq!(substitute(&Term::rel("A"), &"X".into(), &"Y".into()).unwrap(), Term::rel("A"));
        let f = Term::fix("X", Term::rel("A"), sigma_rec());
        assert_eq!(substitute(&f, &"X".into(), &"Y".into()).unwrap(), f);
        assert!(substitute(&t, &"X".into(), &"X".into()).is_ok());
        let clash = Term::join(Term::var("X"), Term::var("Y"));
        assert!(matches!(
            substitute(&clash, &"X".into(), &"Y".into()),
            Err(TermError::Freshness(_))
        ));
    }

    #[test]
    fn destab_of_sigma_and_sigma_prime() {
        assert_eq!(term_destab(&sigma_rec(), &"X".into()), schema(&["s", "m"]));
        assert_eq!(term_destab(&sigma_prime_rec(), &"X".into()), schema(&["t", "m"]));
        assert!(term_destab(&Term::var("X"), &"X".into()).is_empty());
        assert_eq!(term_deriv(&Term::var("X"), &"X".into()).len(), 1);
    }

    #[test]
    fn composition_applies_inner_step_first() {
        // ρ_{a→b}(ρ_{b→a}(X)) returns X's b column unchanged.
        let t = Term::rename("a", "b", Term::rename("b", "a", Term::var("X")));
        assert_eq!(term_destab(&t, &"X".into()), schema(&["a"]));
    }

    #[test]
    fn rigid_literal_value_for_sigma() {
        assert_eq!(term_rigid(&sigma_rec(), &"X".into(), &cat()).unwrap(), schema(&["m", "s", "t"]));
        assert!(term_rigid(&Term::var("X"), &"X".into(), &cat()).unwrap().is_empty());
        let f = Term::filter(FilterExpr::eq_const("t", "v"), Term::var("X"));
        assert_eq!(term_rigid(&f, &"X".into(), &cat()).unwrap(), schema(&["t"]));
    }

    #[test]
    fn rigid_antiproject_of_constant_is_empty() {
        let t = Term::antiproject("t", Term::rel("A"));
        assert!(term_rigid(&t, &"X".into(), &cat()).unwrap().is_empty());
    }

    #[test]
    fn destab_and_rigid_distribute_over_union() {
        let x = Name::new("X");
        let u = Term::union(sigma_rec(), sigma_prime_rec());
        let mut d = term_destab(&sigma_rec(), &x);
        d.extend(term_destab(&sigma_prime_rec(), &x));
        assert_eq!(term_destab(&u, &x), d);
        let mut r = term_rigid(&sigma_rec(), &x, &cat()).unwrap();
        r.extend(term_rigid(&sigma_prime_rec(), &x, &cat()).unwrap());
        assert_eq!(term_rigid(&u, &x, &cat()).unwrap(), r);
    }

    #[test]
    fn canonical_names_follow_depth() {
        let inner = Term::fix("Z", Term::var("Y"), Term::join(Term::var("Z"), Term::rel("A")));
        let t = Term::fix("Y", Term::rel("A"), Term::union(inner, Term::var("Y")));
        let c = canonicalize(&t);
        assert_eq!(
            c.to_string(),
            "(fix X (rel A) (union (fix X1 (var X) (join (var X1) (rel A))) (var X)))"
        );
    }

    #[test]
    fn restrictions_detect_violations() {
        let sigma = Term::fix("X", Term::rel("isLocIn"), sigma_rec());
        assert!(check_restrictions(&sigma).is_empty());
        let neg = Term::fix("X", Term::rel("A"), Term::antijoin(Term::rel("A"), Term::var("X")));
        assert!(!check_restrictions(&neg).is_empty());
        let nonlin = Term::fix("X", Term::rel("A"), Term::join(Term::var("X"), Term::var("X")));
        assert!(!check_restrictions(&nonlin).is_empty());
        let mutual = Term::fix(
            "X",
            Term::rel("A"),
            Term::fix("Y", Term::rel("A"), Term::join(Term::var("X"), Term::var("Y"))),
        );
        assert!(!check_restrictions(&mutual).is_empty());
    }

    #[test]
    fn filter_columns() {
        let f = FilterExpr::new(vec![
            Atom::EqConst("t".into(), "v".into()),
            Atom::EqCol("b".into(), "a".into()),
        ]);
        assert_eq!(f.columns(), schema(&["a", "b", "t"]));
    }
}
