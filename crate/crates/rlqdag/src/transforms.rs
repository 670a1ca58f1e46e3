//! Grouped rewrite rules over equivalence classes and the expansion driver.
//!
//! A rule fires on one member of one class and adds the rewritten forms to
//! the same class. Because operands are classes, a single firing covers
//! every plan that shares the matched structure.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::annotations::update_after_merge;
use crate::store::{Annotation, EqId, Op, Store};
use crate::term::{Name, Schema};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    /// Push filter into a fixpoint.
    Pf,
    /// Push antijoin into a fixpoint.
    Pa,
    /// Push join into a fixpoint.
    Pj,
    /// Merge two joined fixpoints.
    Mf,
    /// Push antiprojection into a fixpoint.
    Pp,
    /// Reverse the traversal direction of a closure.
    Rev,
    PfJoin,
    PaJoin,
    JAssoc,
    JComm,
    UComm,
    Dju,
}

impl Rule {
    /// Application order inside one member.
    pub const ALL: [Rule; 12] = [
        Rule::Pf,
        Rule::Pa,
        Rule::Pj,
        Rule::Mf,
        Rule::Pp,
        Rule::Rev,
        Rule::PfJoin,
        Rule::PaJoin,
        Rule::JAssoc,
        Rule::JComm,
        Rule::UComm,
        Rule::Dju,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Pf => "pf",
            Rule::Pa => "pa",
            Rule::Pj => "pj",
            Rule::Mf => "mf",
            Rule::Pp => "pp",
            Rule::Rev => "rev",
            Rule::PfJoin => "pfjoin",
            Rule::PaJoin => "pajoin",
            Rule::JAssoc => "jassoc",
            Rule::JComm => "jcomm",
            Rule::UComm => "ucomm",
            Rule::Dju => "dju",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rule::ALL
            .iter()
            .copied()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown rule {}", s))
    }
}

/// A set of enabled rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RuleSet(u16);

impl RuleSet {
    pub fn all() -> Self {
        RuleSet((1 << Rule::ALL.len()) - 1)
    }

    pub fn none() -> Self {
        RuleSet(0)
    }

    pub fn of(rules: &[Rule]) -> Self {
        let mut s = RuleSet::none();
        for &r in rules {
            s.0 |= 1 << r as u16;
        }
        s
    }

    pub fn contains(self, r: Rule) -> bool {
        self.0 & (1 << r as u16) != 0
    }

    pub fn without(self, r: Rule) -> Self {
        RuleSet(self.0 & !(1 << r as u16))
    }

    pub fn iter(self) -> impl Iterator<Item = Rule> {
        Rule::ALL.into_iter().filter(move |&r| self.contains(r))
    }
}

impl FromStr for RuleSet {
    type Err = String;

    /// Comma-separated rule names, or `all`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "all" {
            return Ok(RuleSet::all());
        }
        let rules: Result<Vec<Rule>, String> =
            s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::parse).collect();
        Ok(RuleSet::of(&rules?))
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Rule::name).collect();
        f.write_str(&names.join(","))
    }
}

#[derive(Clone, Debug)]
pub struct ExpansionConfig {
    /// `None` means unlimited.
    pub budget: Option<Duration>,
    /// Drop the unpushed original on filter and antiprojection pushes.
    pub rep: bool,
    pub rules: RuleSet,
    /// Stop once the store holds this many operation nodes.
    pub max_nodes: usize,
    pub trace: bool,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            budget: None,
            rep: false,
            rules: RuleSet::all(),
            max_nodes: 2_000_000,
            trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Saturated,
    Budget,
    NodeLimit,
}

#[derive(Clone, Debug)]
pub struct ExpansionOutcome {
    pub stop: StopReason,
    pub elapsed: Duration,
    /// Rule attempts on a member.
    pub attempts: usize,
    /// Attempts that changed the store.
    pub firings: usize,
    pub trace: Vec<String>,
}

impl ExpansionOutcome {
    pub fn complete(&self) -> bool {
        self.stop == StopReason::Saturated
    }
}

/// Filter push gate: the filter reads no destabilized column.
pub fn pf_ok(filt: &Schema, destab: &Schema) -> bool {
    filt.is_disjoint(destab)
}

/// Antijoin push gate.
pub fn pa_ok(beta: &Schema, destab: &Schema) -> bool {
    beta.is_disjoint(destab)
}

/// Join push gate for `beta ⋈ μ(const, rec)`.
pub fn pj_ok(beta: &Schema, fix_ty: &Schema, ann: &Annotation) -> bool {
    beta.is_disjoint(&ann.destab) && beta.difference(fix_ty).all(|c| !ann.rigid.contains(c))
}

/// Fixpoint merge gate.
pub fn mf_ok(t1: &Schema, t2: &Schema, a1: &Annotation, a2: &Annotation) -> bool {
    t1.intersection(t2).all(|c| !a1.destab.contains(c) && !a2.destab.contains(c))
        && t1.difference(t2).all(|c| !a2.rigid.contains(c))
        && t2.difference(t1).all(|c| !a1.rigid.contains(c))
}

/// Antiprojection push gate.
pub fn pp_ok(a: &Name, ann: &Annotation) -> bool {
    !ann.rigid.contains(a)
}

/// Filter-through-join case: which operands receive the filter.
pub fn pfjoin_sides(filt: &Schema, t1: &Schema, t2: &Schema) -> Option<(bool, bool)> {
    match (filt.is_subset(t1), filt.is_subset(t2)) {
        (false, false) => None,
        sides => Some(sides),
    }
}

/// Antiprojection-through-join: `Some(true)` for the left operand.
pub fn pajoin_side(a: &Name, t1: &Schema, t2: &Schema) -> Option<bool> {
    match (t1.contains(a), t2.contains(a)) {
        (true, false) => Some(true),
        (false, true) => Some(false),
        _ => None,
    }
}

/// Whether `rule` may drop the original under `rep`.
pub fn replaces(rule: Rule, rep: bool) -> bool {
    rep && matches!(rule, Rule::Pf | Rule::Pp | Rule::PfJoin | Rule::PaJoin)
}

struct Ctx<'a> {
    cfg: &'a ExpansionConfig,
    trace: Vec<String>,
}

fn fix_members(s: &Store, c: EqId) -> Vec<(EqId, EqId, Op)> {
    s.members(c)
        .iter()
        .filter_map(|m| match *m {
            Op::Fix(k, r) => Some((k, r, m.clone())),
            _ => None,
        })
        .collect()
}

fn put(s: &mut Store, cls: EqId, op: Op) -> bool {
    let changed = s.add_to(cls, op).unwrap_or(false);
    s.rebuild();
    changed
}

/// Applies `rule` to member `op` of class `cls`. Returns whether the store
/// changed.
pub fn apply_rule(s: &mut Store, cls: EqId, op: &Op, rule: Rule, rep: bool) -> bool {
    let cfg = ExpansionConfig { rep, ..ExpansionConfig::default() };
    let mut ctx = Ctx { cfg: &cfg, trace: Vec::new() };
    apply(s, cls, op, rule, &mut ctx)
}

fn apply(s: &mut Store, cls: EqId, op: &Op, rule: Rule, ctx: &mut Ctx<'_>) -> bool {
    let before = (s.node_count_hint(), s.merge_count());
    let fired = match rule {
        Rule::Pf => pf(s, cls, op, ctx),
        Rule::Pa => pa(s, cls, op),
        Rule::Pj => pj(s, cls, op),
        Rule::Mf => mf(s, cls, op),
        Rule::Pp => pp(s, cls, op, ctx),
        Rule::Rev => rev(s, cls, op),
        Rule::PfJoin => pfjoin(s, cls, op, ctx),
        Rule::PaJoin => pajoin(s, cls, op, ctx),
        Rule::JAssoc => jassoc(s, cls, op),
        Rule::JComm => match *op {
            Op::Join(l, r) => put(s, cls, Op::Join(r, l)),
            _ => false,
        },
        Rule::UComm => match *op {
            Op::Union(l, r) => put(s, cls, Op::Union(r, l)),
            _ => false,
        },
        Rule::Dju => dju(s, cls, op),
    };
    let changed = fired || (s.node_count_hint(), s.merge_count()) != before;
    if ctx.cfg.trace && changed {
        ctx.trace.push(format!("{} {} {}", rule, s.find(cls), op.kind()));
    }
    changed
}

fn pf(s: &mut Store, cls: EqId, op: &Op, ctx: &mut Ctx<'_>) -> bool {
    let Op::Filter(f, c) = op else { return false };
    let mut changed = false;
    for (k, r, fop) in fix_members(s, *c) {
        let ann = s.ensure_annotation(r);
        if !pf_ok(&f.columns(), &ann.destab) {
            continue;
        }
        let Ok(nk) = s.add(Op::Filter(f.clone(), k)) else { continue };
        changed |= put(s, cls, Op::Fix(nk, r));
        if ctx.cfg.rep {
            s.record_replaced(op, &fop);
        }
    }
    changed
}

fn pa(s: &mut Store, cls: EqId, op: &Op) -> bool {
    let Op::AntiJoin(c, b) = *op else { return false };
    let mut changed = false;
    let bty = s.ty(b).clone();
    for (k, r, _) in fix_members(s, c) {
        let ann = s.ensure_annotation(r);
        if !pa_ok(&bty, &ann.destab) {
            continue;
        }
        let Ok(nk) = s.add(Op::AntiJoin(k, b)) else { continue };
        changed |= put(s, cls, Op::Fix(nk, r));
        s.add_binder(cls, k);
    }
    changed
}

fn pj(s: &mut Store, cls: EqId, op: &Op) -> bool {
    let Op::Join(b, c) = *op else { return false };
    let mut changed = false;
    let bty = s.ty(b).clone();
    for (k, r, _) in fix_members(s, c) {
        let ann = s.ensure_annotation(r);
        let kty = s.ty(k).clone();
        if !pj_ok(&bty, &kty, &ann) {
            continue;
        }
        let nty: Schema = kty.union(&bty).cloned().collect();
        let Some(r2) = s.retype(r, &kty, &nty) else { continue };
        let Ok(nk) = s.add(Op::Join(b, k)) else { continue };
        if s.ty(r2) != s.ty(nk) {
            continue;
        }
        s.set_annotation(r2, ann);
        changed |= put(s, cls, Op::Fix(nk, r2));
        s.add_binder(cls, k);
    }
    changed
}

fn mf(s: &mut Store, cls: EqId, op: &Op) -> bool {
    let Op::Join(c1, c2) = *op else { return false };
    let mut changed = false;
    let f1s = fix_members(s, c1);
    let f2s = fix_members(s, c2);
    for (k1, r1, _) in &f1s {
        for (k2, r2, _) in &f2s {
            let a1 = s.ensure_annotation(*r1);
            let a2 = s.ensure_annotation(*r2);
            let t1 = s.ty(*k1).clone();
            let t2 = s.ty(*k2).clone();
            if !mf_ok(&t1, &t2, &a1, &a2) {
                continue;
            }
            let t: Schema = t1.union(&t2).cloned().collect();
            let Some(n1) = s.retype(*r1, &t1, &t) else { continue };
            let Some(n2) = s.retype(*r2, &t2, &t) else { continue };
            let Ok(u) = s.add(Op::Union(n1, n2)) else { continue };
            let Ok(nk) = s.add(Op::Join(*k1, *k2)) else { continue };
            s.set_annotation(u, update_after_merge(&a1, &a2));
            changed |= put(s, cls, Op::Fix(nk, u));
            s.add_binder(cls, *k1);
            s.add_binder(cls, *k2);
        }
    }
    changed
}

fn pp(s: &mut Store, cls: EqId, op: &Op, ctx: &mut Ctx<'_>) -> bool {
    let Op::AntiProject(a, c) = op else { return false };
    let mut changed = false;
    for (k, r, fop) in fix_members(s, *c) {
        let ann = s.ensure_annotation(r);
        if !pp_ok(a, &ann) {
            continue;
        }
        let kty = s.ty(k).clone();
        let mut nty = kty.clone();
        nty.remove(a);
        let Some(r2) = s.retype(r, &kty, &nty) else { continue };
        let Ok(nk) = s.add(Op::AntiProject(a.clone(), k)) else { continue };
        if s.ty(r2) != s.ty(nk) {
            continue;
        }
        s.set_annotation(r2, ann);
        changed |= put(s, cls, Op::Fix(nk, r2));
        if ctx.cfg.rep {
            s.record_replaced(op, &fop);
        }
    }
    changed
}

/// Matches `π̃_m(ρ_{a→m}P ⋈ ρ_{b→m}Q)` members of `rho` where `{P, Q}` is
/// `{g, X}` and `type(g) = {a, b}`. Returns `(a, b, P, Q, m)`.
pub fn rev_matches(s: &Store, g: EqId, rho: EqId) -> Vec<(Name, Name, EqId, EqId, Name)> {
    let gty = s.ty(g).clone();
    let mut out = Vec::new();
    if gty.len() != 2 {
        return out;
    }
    let Some(var) = s.lookup(&Op::Var(gty.clone())) else { return out };
    let g = s.find(g);
    for m in s.members(rho) {
        let Op::AntiProject(mc, j) = m else { continue };
        for jm in s.members(*j) {
            let Op::Join(l, r) = *jm else { continue };
            for lm in s.members(l) {
                let Op::Rename(a, m1, p) = lm else { continue };
                if m1 != mc || !gty.contains(a) {
                    continue;
                }
                for rm in s.members(r) {
                    let Op::Rename(b, m2, q) = rm else { continue };
                    if m2 != mc || !gty.contains(b) || a == b {
                        continue;
                    }
                    let (p, q) = (s.find(*p), s.find(*q));
                    if (p == g && q == var) || (p == var && q == g) {
                        out.push((a.clone(), b.clone(), p, q, mc.clone()));
                    }
                }
            }
        }
    }
    out
}

fn rev(s: &mut Store, cls: EqId, op: &Op) -> bool {
    let Op::Fix(g, rho) = *op else { return false };
    let mut changed = false;
    for (a, b, p, q, m) in rev_matches(s, g, rho) {
        let built = (|| {
            let l = s.add(Op::Rename(a, m.clone(), q)).ok()?;
            let r = s.add(Op::Rename(b, m.clone(), p)).ok()?;
            let j = s.add(Op::Join(l, r)).ok()?;
            s.add(Op::AntiProject(m, j)).ok()
        })();
        let Some(rho2) = built else { continue };
        s.ensure_annotation(rho2);
        changed |= put(s, cls, Op::Fix(g, rho2));
    }
    changed
}

fn join_members(s: &Store, c: EqId) -> Vec<(EqId, EqId, Op)> {
    s.members(c)
        .iter()
        .filter_map(|m| match *m {
            Op::Join(a, b) => Some((a, b, m.clone())),
            _ => None,
        })
        .collect()
}

fn pfjoin(s: &mut Store, cls: EqId, op: &Op, ctx: &mut Ctx<'_>) -> bool {
    let Op::Filter(f, c) = op else { return false };
    let filt = f.columns();
    let mut changed = false;
    for (a, b, jop) in join_members(s, *c) {
        let Some((left, right)) = pfjoin_sides(&filt, s.ty(a), s.ty(b)) else { continue };
        let wrap = |s: &mut Store, x: EqId, yes: bool| -> Option<EqId> {
            if yes {
                s.add(Op::Filter(f.clone(), x)).ok()
            } else {
                Some(x)
            }
        };
        let (Some(na), Some(nb)) = (wrap(s, a, left), wrap(s, b, right)) else { continue };
        changed |= put(s, cls, Op::Join(na, nb));
        if ctx.cfg.rep {
            s.record_replaced(op, &jop);
        }
    }
    changed
}

fn pajoin(s: &mut Store, cls: EqId, op: &Op, ctx: &mut Ctx<'_>) -> bool {
    let Op::AntiProject(col, c) = op else { return false };
    let mut changed = false;
    for (a, b, jop) in join_members(s, *c) {
        let Some(left) = pajoin_side(col, s.ty(a), s.ty(b)) else { continue };
        let new = if left {
            s.add(Op::AntiProject(col.clone(), a)).ok().map(|na| Op::Join(na, b))
        } else {
            s.add(Op::AntiProject(col.clone(), b)).ok().map(|nb| Op::Join(a, nb))
        };
        let Some(new) = new else { continue };
        changed |= put(s, cls, new);
        if ctx.cfg.rep {
            s.record_replaced(op, &jop);
        }
    }
    changed
}

fn jassoc(s: &mut Store, cls: EqId, op: &Op) -> bool {
    let Op::Join(j, c) = *op else { return false };
    let mut changed = false;
    for (a, b, _) in join_members(s, j) {
        if let Ok(bc) = s.add(Op::Join(b, c)) {
            changed |= put(s, cls, Op::Join(a, bc));
        }
        if let Ok(ac) = s.add(Op::Join(a, c)) {
            changed |= put(s, cls, Op::Join(b, ac));
        }
    }
    changed
}

fn dju(s: &mut Store, cls: EqId, op: &Op) -> bool {
    let Op::Join(x, y) = *op else { return false };
    let mut changed = false;
    let unions = |s: &Store, c: EqId| -> Vec<(EqId, EqId)> {
        s.members(c)
            .iter()
            .filter_map(|m| match *m {
                Op::Union(a, b) => Some((a, b)),
                _ => None,
            })
            .collect()
    };
    for (b, c) in unions(s, y) {
        let (Ok(l), Ok(r)) = (s.add(Op::Join(x, b)), s.add(Op::Join(x, c))) else { continue };
        changed |= put(s, cls, Op::Union(l, r));
    }
    for (b, c) in unions(s, x) {
        let (Ok(l), Ok(r)) = (s.add(Op::Join(b, y)), s.add(Op::Join(c, y))) else { continue };
        changed |= put(s, cls, Op::Union(l, r));
    }
    changed
}

/// Levels of ancestors revisited when a class changes: the deepest rule
/// pattern looks three operand levels below the matched member.
const DIRTY_DEPTH: usize = 4;

/// Saturates the whole store under the enabled rules. Classes are visited
/// in a deterministic FIFO order starting from increasing ids.
pub fn expand(s: &mut Store, cfg: &ExpansionConfig) -> ExpansionOutcome {
    let start = Instant::now();
    let mut ctx = Ctx { cfg, trace: Vec::new() };
    let mut queue: VecDeque<EqId> = s.live_classes().into();
    let mut queued = vec![false; s.id_count()];
    for c in &queue {
        queued[c.index()] = true;
    }
    s.take_changed();
    let (mut attempts, mut firings) = (0usize, 0usize);
    let over_budget = |start: &Instant| cfg.budget.is_some_and(|b| start.elapsed() >= b);
    let mut stop = StopReason::Saturated;
    if over_budget(&start) {
        stop = StopReason::Budget;
        queue.clear();
    }
    'outer: while let Some(c) = queue.pop_front() {
        queued[c.index()] = false;
        if s.find(c) != c {
            continue;
        }
        let members = s.members(c).to_vec();
        for m in members {
            for rule in cfg.rules.iter() {
                if over_budget(&start) {
                    stop = StopReason::Budget;
                    break 'outer;
                }
                if s.node_count_hint() >= cfg.max_nodes {
                    stop = StopReason::NodeLimit;
                    break 'outer;
                }
                let m = s.canon(&m);
                let cls = s.find(c);
                attempts += 1;
                if apply(s, cls, &m, rule, &mut ctx) {
                    firings += 1;
                }
                let changed = s.take_changed();
                if !changed.is_empty() {
                    if queued.len() < s.id_count() {
                        queued.resize(s.id_count(), false);
                    }
                    mark_dirty(s, changed, &mut queue, &mut queued);
                }
            }
        }
    }
    ExpansionOutcome { stop, elapsed: start.elapsed(), attempts, firings, trace: ctx.trace }
}

fn mark_dirty(s: &Store, changed: Vec<EqId>, queue: &mut VecDeque<EqId>, queued: &mut [bool]) {
    let mut frontier: Vec<EqId> = changed.into_iter().map(|c| s.find(c)).collect();
    frontier.sort();
    frontier.dedup();
    for level in 0..=DIRTY_DEPTH {
        let mut next = Vec::new();
        for &c in &frontier {
            if !queued[c.index()] {
                queued[c.index()] = true;
                queue.push_back(c);
            }
            if level < DIRTY_DEPTH {
                next.extend(s.parents(c).iter().map(|&(_, p)| s.find(p)));
            }
        }
        next.sort();
        next.dedup();
        frontier = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plans::{count_plans, interpret};
    use crate::term::{schema, Catalog, Term};

    fn cat() -> Catalog {
        let mut c = Catalog::new();
        c.insert("A".into(), schema(&["a", "b"]));
        c.insert("B".into(), schema(&["b", "c"]));
        c.insert("C".into(), schema(&["c", "d"]));
        c.insert("E".into(), schema(&["s", "t"]));
        c
    }

    fn codd_only() -> ExpansionConfig {
        ExpansionConfig { rules: RuleSet::of(&[Rule::JAssoc]), ..Default::default() }
    }

    #[test]
    fn three_way_join_has_three_trees() {
        let mut s = Store::new(cat());
        let t = Term::join(Term::join(Term::rel("A"), Term::rel("B")), Term::rel("C"));
        let root = s.add_term(&t).unwrap();
        let out = expand(&mut s, &codd_only());
        assert!(out.complete());
        let root = s.find(root);
        assert_eq!(s.members(root).len(), 3);
        assert_eq!(count_plans(&s, root).unwrap(), 3);
        let (ts, _) = interpret(&s, root, 10);
        let shown: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
        assert!(shown.contains(&"(join (rel A) (join (rel B) (rel C)))".to_string()));
        assert!(shown.contains(&"(join (rel B) (join (rel A) (rel C)))".to_string()));
    }

    #[test]
    fn three_way_join_with_commutativity() {
        let mut s = Store::new(cat());
        let t = Term::join(Term::join(Term::rel("A"), Term::rel("B")), Term::rel("C"));
        let root = s.add_term(&t).unwrap();
        let cfg = ExpansionConfig { rules: RuleSet::of(&[Rule::JAssoc, Rule::JComm]), ..Default::default() };
        expand(&mut s, &cfg);
        assert_eq!(count_plans(&s, root).unwrap(), 12);
    }

    #[test]
    fn rule_set_parsing() {
        let r: RuleSet = "pf,jcomm".parse().unwrap();
        assert!(r.contains(Rule::Pf) && r.contains(Rule::JComm) && !r.contains(Rule::Mf));
        assert_eq!(r.to_string(), "pf,jcomm");
        assert!("bogus".parse::<RuleSet>().is_err());
        assert_eq!("all".parse::<RuleSet>().unwrap(), RuleSet::all());
    }

    #[test]
    fn zero_budget_keeps_original() {
        let mut s = Store::new(cat());
        let t = Term::join(Term::rel("A"), Term::rel("B"));
        let root = s.add_term(&t).unwrap();
        let cfg = ExpansionConfig { budget: Some(Duration::ZERO), ..Default::default() };
        let out = expand(&mut s, &cfg);
        assert_eq!(out.stop, StopReason::Budget);
        assert_eq!(count_plans(&s, root).unwrap(), 1);
    }

    #[test]
    fn expansion_is_idempotent() {
        let mut s = Store::new(cat());
        let t = Term::join(Term::join(Term::rel("A"), Term::rel("B")), Term::rel("C"));
        let root = s.add_term(&t).unwrap();
        expand(&mut s, &ExpansionConfig::default());
        let n1 = count_plans(&s, root).unwrap();
        let c1 = s.node_count();
        let out = expand(&mut s, &ExpansionConfig::default());
        assert_eq!(out.firings, 0);
        assert_eq!(count_plans(&s, root).unwrap(), n1);
        assert_eq!(s.node_count(), c1);
    }

    #[test]
    fn gates() {
        let ann = Annotation { destab: schema(&["s", "m"]), rigid: schema(&["s", "t", "m"]) };
        assert!(pf_ok(&schema(&["t"]), &ann.destab));
        assert!(!pf_ok(&schema(&["s"]), &ann.destab));
        assert!(pp_ok(&"u".into(), &ann));
        assert!(!pp_ok(&"t".into(), &ann));
        assert!(pj_ok(&schema(&["t", "u"]), &schema(&["s", "t"]), &ann));
        assert!(!pj_ok(&schema(&["s", "u"]), &schema(&["s", "t"]), &ann));
        assert_eq!(pfjoin_sides(&schema(&["a"]), &schema(&["a", "b"]), &schema(&["b"])), Some((true, false)));
        assert_eq!(pfjoin_sides(&schema(&["b"]), &schema(&["a", "b"]), &schema(&["b"])), Some((true, true)));
        assert_eq!(pfjoin_sides(&schema(&["z"]), &schema(&["a"]), &schema(&["b"])), None);
        assert_eq!(pajoin_side(&"a".into(), &schema(&["a", "b"]), &schema(&["b"])), Some(true));
        assert_eq!(pajoin_side(&"b".into(), &schema(&["a", "b"]), &schema(&["b"])), None);
    }
}
