//! Explicit tree form of RLQDAGs, with `let` binders and references.
//!
//! The store shares subterms by hash-consing. This module gives the
//! surface syntax where sharing is explicit:
//!
//! ```text
//! node    ::= [ op ; ... ]  with binders  let Y = node in node
//! op      ::= Rel | X | σ_f(γ) | ρ_{a→b}(γ) | π̃_a(γ) | γ ⋈ γ | γ ▷ γ | γ ∪ γ
//!           | μX. γ ∪ rec^ℜ_𝔇
//! γ       ::= node | Y
//! ```
//!
//! [`unfold`] substitutes every reference by its definition and
//! [`interpret`] lists the plans a node denotes.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::store::{EqId, Op, Store};
use crate::term::{var_name, FilterExpr, Name, Schema, Term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("unbound reference {0}")]
    UnboundReference(Name),
    #[error("export exceeds {0} nodes")]
    TooLarge(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand {
    Node(Box<Node>),
    Ref(Name),
}

impl Operand {
    pub fn node(n: Node) -> Self {
        Operand::Node(Box::new(n))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpNode {
    Rel(Name),
    Var(Name),
    Filter(FilterExpr, Operand),
    Rename(Name, Name, Operand),
    AntiProject(Name, Operand),
    Join(Operand, Operand),
    AntiJoin(Operand, Operand),
    Union(Operand, Operand),
    Fix { x: Name, constant: Operand, rec: Box<Annotated> },
}

/// A recursive part with its (𝔇, ℜ) annotation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotated {
    pub node: Node,
    pub destab: Schema,
    pub rigid: Schema,
}

/// Equivalence node: alternative members, under `let` binders.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Node {
    pub members: Vec<OpNode>,
    pub binders: Vec<(Name, Node)>,
}

impl Node {
    pub fn single(op: OpNode) -> Self {
        Node { members: vec![op], binders: Vec::new() }
    }

    pub fn rel(n: &str) -> Self {
        Node::single(OpNode::Rel(Name::new(n)))
    }
}

/// Lexically scoped reference bindings. Later entries shadow earlier ones,
/// and a definition may use only the entries before it.
pub type Environment = Vec<(Name, Node)>;

fn resolve<'e>(env: &'e [(Name, Node)], y: &Name) -> Result<(usize, &'e Node), SyntaxError> {
    env.iter()
        .enumerate()
        .rev()
        .find(|(_, (n, _))| n == y)
        .map(|(i, (_, d))| (i, d))
        .ok_or_else(|| SyntaxError::UnboundReference(y.clone()))
}

/// Replaces every reference by its (unfolded) definition.
pub fn unfold(n: &Node, env: &Environment) -> Result<Node, SyntaxError> {
    let mut scope = env.clone();
    unfold_node(n, &mut scope)
}

fn unfold_node(n: &Node, env: &mut Environment) -> Result<Node, SyntaxError> {
    let mark = env.len();
    for (y, d) in &n.binders {
        env.push((y.clone(), d.clone()));
    }
    let members = n.members.iter().map(|m| unfold_op(m, env)).collect::<Result<Vec<_>, _>>();
    env.truncate(mark);
    Ok(Node { members: members?, binders: Vec::new() })
}

fn unfold_operand(o: &Operand, env: &mut Environment) -> Result<Operand, SyntaxError> {
    match o {
        Operand::Node(n) => Ok(Operand::node(unfold_node(n, env)?)),
        Operand::Ref(y) => {
            let (i, d) = resolve(env, y)?;
            let d = d.clone();
            let mut outer = env[..i].to_vec();
            Ok(Operand::node(unfold_node(&d, &mut outer)?))
        }
    }
}

fn unfold_op(op: &OpNode, env: &mut Environment) -> Result<OpNode, SyntaxError> {
    Ok(match op {
        OpNode::Rel(_) | OpNode::Var(_) => op.clone(),
        OpNode::Filter(f, c) => OpNode::Filter(f.clone(), unfold_operand(c, env)?),
        OpNode::Rename(a, b, c) => OpNode::Rename(a.clone(), b.clone(), unfold_operand(c, env)?),
        OpNode::AntiProject(a, c) => OpNode::AntiProject(a.clone(), unfold_operand(c, env)?),
        OpNode::Join(l, r) => OpNode::Join(unfold_operand(l, env)?, unfold_operand(r, env)?),
        OpNode::AntiJoin(l, r) => OpNode::AntiJoin(unfold_operand(l, env)?, unfold_operand(r, env)?),
        OpNode::Union(l, r) => OpNode::Union(unfold_operand(l, env)?, unfold_operand(r, env)?),
        OpNode::Fix { x, constant, rec } => OpNode::Fix {
            x: x.clone(),
            constant: unfold_operand(constant, env)?,
            rec: Box::new(Annotated {
                node: unfold_node(&rec.node, env)?,
                destab: rec.destab.clone(),
                rigid: rec.rigid.clone(),
            }),
        },
    })
}

/// Plans denoted by `n`, deduplicated, in first-seen order. At most
/// `limit` are returned; the flag tells whether the list was cut.
pub fn interpret(n: &Node, env: &Environment, limit: usize) -> Result<(Vec<Arc<Term>>, bool), SyntaxError> {
    let mut scope = env.clone();
    interp_node(n, &mut scope, limit)
}

#[derive(Default)]
struct Acc {
    out: Vec<Arc<Term>>,
    seen: HashSet<Arc<Term>>,
    cut: bool,
}

impl Acc {
    fn push(&mut self, t: Term, limit: usize) {
        if self.out.len() >= limit {
            self.cut = true;
            return;
        }
        let t = Arc::new(t);
        if self.seen.insert(t.clone()) {
            self.out.push(t);
        }
    }
}

fn interp_node(n: &Node, env: &mut Environment, limit: usize) -> Result<(Vec<Arc<Term>>, bool), SyntaxError> {
    let mark = env.len();
    for (y, d) in &n.binders {
        env.push((y.clone(), d.clone()));
    }
    let mut acc = Acc::default();
    let mut res = Ok(());
    for m in &n.members {
        if let Err(e) = interp_op(m, env, limit, &mut acc) {
            res = Err(e);
            break;
        }
    }
    env.truncate(mark);
    res?;
    Ok((acc.out, acc.cut))
}

fn interp_operand(o: &Operand, env: &mut Environment, limit: usize) -> Result<(Vec<Arc<Term>>, bool), SyntaxError> {
    match o {
        Operand::Node(n) => interp_node(n, env, limit),
        Operand::Ref(y) => {
            let (i, d) = resolve(env, y)?;
            let d = d.clone();
            let mut outer = env[..i].to_vec();
            interp_node(&d, &mut outer, limit)
        }
    }
}

fn interp_op(op: &OpNode, env: &mut Environment, limit: usize, acc: &mut Acc) -> Result<(), SyntaxError> {
    let unary = |c: &Operand, env: &mut Environment, acc: &mut Acc, f: &dyn Fn(Arc<Term>) -> Term| {
        let (ts, cut) = interp_operand(c, env, limit)?;
        acc.cut |= cut;
        for t in ts {
            acc.push(f(t), limit);
        }
        Ok::<_, SyntaxError>(())
    };
    let binary = |l: &Operand, r: &Operand, env: &mut Environment, acc: &mut Acc, f: &dyn Fn(Arc<Term>, Arc<Term>) -> Term| {
        let (ls, c1) = interp_operand(l, env, limit)?;
        let (rs, c2) = interp_operand(r, env, limit)?;
        acc.cut |= c1 || c2;
        'outer: for a in &ls {
            for b in &rs {
                if acc.out.len() >= limit {
                    acc.cut = true;
                    break 'outer;
                }
                acc.push(f(a.clone(), b.clone()), limit);
            }
        }
        Ok::<_, SyntaxError>(())
    };
    match op {
        OpNode::Rel(n) => acc.push(Term::Rel(n.clone()), limit),
        OpNode::Var(x) => acc.push(Term::Var(x.clone()), limit),
        OpNode::Filter(f, c) => unary(c, env, acc, &|t| Term::Filter(f.clone(), t))?,
        OpNode::Rename(a, b, c) => unary(c, env, acc, &|t| Term::Rename(a.clone(), b.clone(), t))?,
        OpNode::AntiProject(a, c) => unary(c, env, acc, &|t| Term::AntiProject(a.clone(), t))?,
        OpNode::Join(l, r) => binary(l, r, env, acc, &Term::Join)?,
        OpNode::AntiJoin(l, r) => binary(l, r, env, acc, &Term::AntiJoin)?,
        OpNode::Union(l, r) => binary(l, r, env, acc, &Term::Union)?,
        OpNode::Fix { x, constant, rec } => {
            let node = Operand::node(rec.node.clone());
            binary(constant, &node, env, acc, &|c, r| Term::Fix(x.clone(), c, r))?
        }
    }
    Ok(())
}

/// Tree form of the class `root`, with the store's binders made explicit.
/// Fails when the tree would exceed `max_nodes` operation nodes.
pub fn export(store: &Store, root: EqId, max_nodes: usize) -> Result<Node, SyntaxError> {
    let mut ex = Exporter { store, max_nodes, emitted: 0, path: Vec::new() };
    ex.class(root, None, &mut HashMap::new(), 0)
}

struct Exporter<'a> {
    store: &'a Store,
    max_nodes: usize,
    emitted: usize,
    path: Vec<EqId>,
}

type Scope = HashMap<EqId, Name>;

impl Exporter<'_> {
    fn operand(&mut self, c: EqId, parent: Option<&Op>, scope: &mut Scope, depth: usize) -> Result<Operand, SyntaxError> {
        let c = self.store.find(c);
        let filtered = parent.is_some_and(|p| {
            self.store.allowed_members(p, c).count() != self.store.members(c).len()
        });
        if !filtered {
            if let Some(y) = scope.get(&c) {
                return Ok(Operand::Ref(y.clone()));
            }
        }
        Ok(Operand::node(self.class(c, parent, scope, depth)?))
    }

    fn class(&mut self, c: EqId, parent: Option<&Op>, scope: &mut Scope, depth: usize) -> Result<Node, SyntaxError> {
        let c = self.store.find(c);
        self.path.push(c);
        let mut binders = Vec::new();
        let mut added = Vec::new();
        for (y, b) in &self.store.class(c).binders {
            let b = self.store.find(*b);
            if self.path.contains(&b) || scope.contains_key(&b) {
                continue;
            }
            let def = self.class(b, None, scope, 0)?;
            binders.push((y.clone(), def));
            scope.insert(b, y.clone());
            added.push(b);
        }
        let members: Vec<Op> = match parent {
            Some(p) => self.store.allowed_members(p, c).cloned().collect(),
            None => self.store.members(c).to_vec(),
        };
        let mut out = Vec::with_capacity(members.len());
        for m in &members {
            self.emitted += 1;
            if self.emitted > self.max_nodes {
                return Err(SyntaxError::TooLarge(self.max_nodes));
            }
            out.push(self.op(m, scope, depth)?);
        }
        for b in added {
            scope.remove(&b);
        }
        self.path.pop();
        Ok(Node { members: out, binders })
    }

    fn op(&mut self, op: &Op, scope: &mut Scope, depth: usize) -> Result<OpNode, SyntaxError> {
        Ok(match op {
            Op::Rel(n) => OpNode::Rel(n.clone()),
            Op::Var(_) => OpNode::Var(var_name(depth.saturating_sub(1))),
            Op::Filter(f, c) => OpNode::Filter(f.clone(), self.operand(*c, Some(op), scope, depth)?),
            Op::Rename(a, b, c) => OpNode::Rename(a.clone(), b.clone(), self.operand(*c, None, scope, depth)?),
            Op::AntiProject(a, c) => OpNode::AntiProject(a.clone(), self.operand(*c, Some(op), scope, depth)?),
            Op::Join(l, r) => OpNode::Join(self.operand(*l, None, scope, depth)?, self.operand(*r, None, scope, depth)?),
            Op::AntiJoin(l, r) => {
                OpNode::AntiJoin(self.operand(*l, None, scope, depth)?, self.operand(*r, None, scope, depth)?)
            }
            Op::Union(l, r) => OpNode::Union(self.operand(*l, None, scope, depth)?, self.operand(*r, None, scope, depth)?),
            Op::Fix(k, r) => {
                let constant = self.operand(*k, None, scope, depth)?;
                let ann = self.store.annotation(*r).cloned();
                let node = self.class(*r, None, scope, depth + 1)?;
                let (destab, rigid) = ann.map(|a| (a.destab, a.rigid)).unwrap_or_default();
                OpNode::Fix { x: var_name(depth), constant, rec: Box::new(Annotated { node, destab, rigid }) }
            }
        })
    }
}
