//! Term-by-term enumerator.
//!
//! Every reachable plan is materialized as its own term. Rule criteria are
//! recomputed from the term at each application, with no shared
//! annotations. Plans are deduplicated structurally after canonical
//! renaming of fixpoint variables.

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::store::Annotation;
use crate::term::{
    canonicalize, check_restrictions, free_rec_vars, substitute, term_destab, term_rigid_in, type_of_in,
    Catalog, Name, Schema, Term, VarEnv,
};
use crate::transforms::{
    mf_ok, pa_ok, pajoin_side, pf_ok, pfjoin_sides, pj_ok, pp_ok, replaces, Rule, RuleSet, StopReason,
};

#[derive(Clone, Debug)]
pub struct BaselineConfig {
    pub budget: Option<Duration>,
    pub rep: bool,
    pub rules: RuleSet,
    pub max_terms: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { budget: None, rep: false, rules: RuleSet::all(), max_terms: 2_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct BaselineOutcome {
    /// Plans in discovery order.
    pub plans: Vec<Arc<Term>>,
    /// Terms visited, plans or not.
    pub visited: usize,
    pub elapsed: Duration,
    pub stop: StopReason,
}

impl BaselineOutcome {
    pub fn complete(&self) -> bool {
        self.stop == StopReason::Saturated
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RateError {
    #[error("elapsed time is zero")]
    ZeroElapsed,
}

/// Plans per second.
pub fn plans_per_second(plans: usize, elapsed: Duration) -> Result<f64, RateError> {
    let secs = elapsed.as_secs_f64();
    if secs <= 0.0 {
        return Err(RateError::ZeroElapsed);
    }
    Ok(plans as f64 / secs)
}

/// Explores every term reachable from `t` under the enabled rules.
pub fn enumerate(t: &Term, cat: &Catalog, cfg: &BaselineConfig) -> BaselineOutcome {
    let start = Instant::now();
    let rw = Rewriter { cat, rules: cfg.rules };
    let rep_rules = RuleSet::of(
        &cfg.rules.iter().filter(|&r| replaces(r, cfg.rep)).collect::<Vec<_>>(),
    );
    let check = Rewriter { cat, rules: rep_rules };
    let first = Arc::new(canonicalize(t));
    let mut seen: HashSet<Arc<Term>> = HashSet::new();
    let mut queue = VecDeque::new();
    let mut plans = Vec::new();
    seen.insert(first.clone());
    queue.push_back(first);
    let mut stop = StopReason::Saturated;
    let over = |s: &Instant| cfg.budget.is_some_and(|b| s.elapsed() >= b);
    while stop == StopReason::Saturated {
        let Some(cur) = queue.pop_front() else { break };
        if !check.has_rewrite(&cur) {
            plans.push(cur.clone());
        }
        for next in rw.all(&cur) {
            let next = Arc::new(canonicalize(&next));
            if seen.contains(&next) {
                continue;
            }
            if seen.len() >= cfg.max_terms {
                stop = StopReason::NodeLimit;
                break;
            }
            seen.insert(next.clone());
            queue.push_back(next);
        }
        if over(&start) && !queue.is_empty() {
            stop = StopReason::Budget;
        }
    }
    BaselineOutcome { plans, visited: seen.len(), elapsed: start.elapsed(), stop }
}

/// Single-term rewriting under a rule set.
pub struct Rewriter<'a> {
    pub cat: &'a Catalog,
    pub rules: RuleSet,
}

impl<'a> Rewriter<'a> {
    /// All one-step rewrites of `t` at any position.
    pub fn all(&self, t: &Term) -> Vec<Term> {
        let mut out = Vec::new();
        self.at(t, &mut VarEnv::new(), &mut out);
        out
    }

    /// Whether any one-step rewrite exists.
    pub fn has_rewrite(&self, t: &Term) -> bool {
        if self.rules == RuleSet::none() {
            return false;
        }
        !self.all(t).is_empty()
    }

    fn at(&self, t: &Term, env: &mut VarEnv, out: &mut Vec<Term>) {
        for rule in self.rules.iter() {
            for n in self.root(rule, t, env) {
                if self.valid(t, &n, env) {
                    out.push(n);
                }
            }
        }
        let mut sub = Vec::new();
        match t {
            Term::Rel(_) | Term::Var(_) => {}
            Term::Filter(f, c) => {
                self.at(c, env, &mut sub);
                out.extend(sub.into_iter().map(|c| Term::Filter(f.clone(), Arc::new(c))));
            }
            Term::Rename(a, b, c) => {
                self.at(c, env, &mut sub);
                out.extend(sub.into_iter().map(|c| Term::Rename(a.clone(), b.clone(), Arc::new(c))));
            }
            Term::AntiProject(a, c) => {
                self.at(c, env, &mut sub);
                out.extend(sub.into_iter().map(|c| Term::AntiProject(a.clone(), Arc::new(c))));
            }
            Term::Join(l, r) | Term::AntiJoin(l, r) | Term::Union(l, r) => {
                let build = |l: Arc<Term>, r: Arc<Term>| match t {
                    Term::Join(..) => Term::Join(l, r),
                    Term::AntiJoin(..) => Term::AntiJoin(l, r),
                    _ => Term::Union(l, r),
                };
                self.at(l, env, &mut sub);
                out.extend(sub.drain(..).map(|n| build(Arc::new(n), r.clone())));
                self.at(r, env, &mut sub);
                out.extend(sub.drain(..).map(|n| build(l.clone(), Arc::new(n))));
            }
            Term::Fix(x, c, r) => {
                self.at(c, env, &mut sub);
                out.extend(sub.drain(..).map(|n| Term::Fix(x.clone(), Arc::new(n), r.clone())));
                let Ok(ct) = type_of_in(c, self.cat, env) else { return };
                env.push((x.clone(), ct));
                self.at(r, env, &mut sub);
                env.pop();
                out.extend(sub.drain(..).map(|n| Term::Fix(x.clone(), c.clone(), Arc::new(n))));
            }
        }
    }

    fn valid(&self, old: &Term, new: &Term, env: &mut VarEnv) -> bool {
        let (Ok(a), Ok(b)) = (type_of_in(old, self.cat, env), type_of_in(new, self.cat, env)) else {
            return false;
        };
        a == b && free_rec_vars(old) == free_rec_vars(new) && check_restrictions(new).is_empty()
    }

    /// Destabilizer and rigid set of a fixpoint's recursive part.
    fn fix_ann(&self, x: &Name, c: &Term, r: &Term, env: &mut VarEnv) -> Option<(Schema, Annotation)> {
        let ct = type_of_in(c, self.cat, env).ok()?;
        let destab = term_destab(r, x);
        env.push((x.clone(), ct.clone()));
        let rigid = term_rigid_in(r, x, self.cat, env);
        env.pop();
        Some((ct, Annotation { destab, rigid: rigid.ok()? }))
    }

    fn ty(&self, t: &Term, env: &mut VarEnv) -> Option<Schema> {
        type_of_in(t, self.cat, env).ok()
    }

    fn root(&self, rule: Rule, t: &Term, env: &mut VarEnv) -> Vec<Term> {
        let a = Arc::new;
        match (rule, t) {
            (Rule::Pf, Term::Filter(f, inner)) => match &**inner {
                Term::Fix(x, k, r) if pf_ok(&f.columns(), &term_destab(r, x)) => {
                    vec![Term::Fix(x.clone(), a(Term::Filter(f.clone(), k.clone())), r.clone())]
                }
                _ => vec![],
            },
            (Rule::Pa, Term::AntiJoin(l, b)) => match &**l {
                Term::Fix(x, k, r) => {
                    let Some(bty) = self.ty(b, env) else { return vec![] };
                    if !pa_ok(&bty, &term_destab(r, x)) {
                        return vec![];
                    }
                    vec![Term::Fix(x.clone(), a(Term::AntiJoin(k.clone(), b.clone())), r.clone())]
                }
                _ => vec![],
            },
            (Rule::Pj, Term::Join(b, rt)) => match &**rt {
                Term::Fix(x, k, r) => {
                    let Some(bty) = self.ty(b, env) else { return vec![] };
                    let Some((kty, ann)) = self.fix_ann(x, k, r, env) else { return vec![] };
                    if !pj_ok(&bty, &kty, &ann) {
                        return vec![];
                    }
                    vec![Term::Fix(x.clone(), a(Term::Join(b.clone(), k.clone())), r.clone())]
                }
                _ => vec![],
            },
            (Rule::Mf, Term::Join(l, rt)) => match (&**l, &**rt) {
                (Term::Fix(x1, k1, r1), Term::Fix(x2, k2, r2)) => {
                    let Some((t1, a1)) = self.fix_ann(x1, k1, r1, env) else { return vec![] };
                    let Some((t2, a2)) = self.fix_ann(x2, k2, r2, env) else { return vec![] };
                    if !mf_ok(&t1, &t2, &a1, &a2) {
                        return vec![];
                    }
                    let Ok(r2) = substitute(r2, x2, x1) else { return vec![] };
                    vec![Term::Fix(
                        x1.clone(),
                        a(Term::Join(k1.clone(), k2.clone())),
                        a(Term::Union(r1.clone(), a(r2))),
                    )]
                }
                _ => vec![],
            },
            (Rule::Pp, Term::AntiProject(col, inner)) => match &**inner {
                Term::Fix(x, k, r) => {
                    let Some((_, ann)) = self.fix_ann(x, k, r, env) else { return vec![] };
                    if !pp_ok(col, &ann) {
                        return vec![];
                    }
                    vec![Term::Fix(x.clone(), a(Term::AntiProject(col.clone(), k.clone())), r.clone())]
                }
                _ => vec![],
            },
            (Rule::Rev, Term::Fix(x, g, rho)) => self.rev(x, g, rho, env),
            (Rule::PfJoin, Term::Filter(f, inner)) => match &**inner {
                Term::Join(l, r) => {
                    let (Some(lt), Some(rt)) = (self.ty(l, env), self.ty(r, env)) else { return vec![] };
                    let Some((wl, wr)) = pfjoin_sides(&f.columns(), &lt, &rt) else { return vec![] };
                    let wrap = |side: &Arc<Term>, yes: bool| {
                        if yes {
                            a(Term::Filter(f.clone(), side.clone()))
                        } else {
                            side.clone()
                        }
                    };
                    vec![Term::Join(wrap(l, wl), wrap(r, wr))]
                }
                _ => vec![],
            },
            (Rule::PaJoin, Term::AntiProject(col, inner)) => match &**inner {
                Term::Join(l, r) => {
                    let (Some(lt), Some(rt)) = (self.ty(l, env), self.ty(r, env)) else { return vec![] };
                    match pajoin_side(col, &lt, &rt) {
                        Some(true) => vec![Term::Join(a(Term::AntiProject(col.clone(), l.clone())), r.clone())],
                        Some(false) => vec![Term::Join(l.clone(), a(Term::AntiProject(col.clone(), r.clone())))],
                        None => vec![],
                    }
                }
                _ => vec![],
            },
            (Rule::JAssoc, Term::Join(j, c)) => match &**j {
                Term::Join(x, y) => vec![
                    Term::Join(x.clone(), a(Term::Join(y.clone(), c.clone()))),
                    Term::Join(y.clone(), a(Term::Join(x.clone(), c.clone()))),
                ],
                _ => vec![],
            },
            (Rule::JComm, Term::Join(l, r)) => vec![Term::Join(r.clone(), l.clone())],
            (Rule::UComm, Term::Union(l, r)) => vec![Term::Union(r.clone(), l.clone())],
            (Rule::Dju, Term::Join(x, y)) => {
                let mut out = Vec::new();
                if let Term::Union(b, c) = &**y {
                    out.push(Term::Union(
                        a(Term::Join(x.clone(), b.clone())),
                        a(Term::Join(x.clone(), c.clone())),
                    ));
                }
                if let Term::Union(b, c) = &**x {
                    out.push(Term::Union(
                        a(Term::Join(b.clone(), y.clone())),
                        a(Term::Join(c.clone(), y.clone())),
                    ));
                }
                out
            }
            _ => vec![],
        }
    }

    /// Swaps the operands of `π̃_m(ρ_{a→m}P ⋈ ρ_{b→m}Q)` where `{P, Q}` is
    /// `{g, X}` up to alpha-equivalence.
    fn rev(&self, x: &Name, g: &Arc<Term>, rho: &Term, env: &mut VarEnv) -> Vec<Term> {
        let Some(gty) = self.ty(g, env) else { return vec![] };
        if gty.len() != 2 {
            return vec![];
        }
        let Term::AntiProject(m, j) = rho else { return vec![] };
        let Term::Join(l, r) = &**j else { return vec![] };
        let (Term::Rename(ca, m1, p), Term::Rename(cb, m2, q)) = (&**l, &**r) else { return vec![] };
        if m1 != m || m2 != m || ca == cb || !gty.contains(ca) || !gty.contains(cb) {
            return vec![];
        }
        let cg = canonicalize(g);
        let is_g = |t: &Term| canonicalize(t) == cg;
        let is_x = |t: &Term| matches!(t, Term::Var(y) if y == x);
        if !((is_g(p) && is_x(q)) || (is_x(p) && is_g(q))) {
            return vec![];
        }
        let j2 = Term::Join(
            Arc::new(Term::Rename(ca.clone(), m.clone(), q.clone())),
            Arc::new(Term::Rename(cb.clone(), m.clone(), p.clone())),
        );
        vec![Term::Fix(x.clone(), g.clone(), Arc::new(Term::AntiProject(m.clone(), Arc::new(j2))))]
    }
}
