//! Query and term syntax.
//!
//! Terms use the S-expression form printed by [`Term`]'s `Display`:
//!
//! ```text
//! term   ::= (rel NAME) | (var NAME) | (filter pred term)
//!          | (rename NAME NAME term) | (antiproject NAME term)
//!          | (join term term) | (antijoin term term) | (union term term)
//!          | (fix NAME term term)
//! pred   ::= (= NAME "lit") | (!= NAME "lit") | (= NAME NAME) | (and pred+)
//! ```
//!
//! Queries are regular-path expressions over binary edge labels:
//!
//! ```text
//! query  ::= [ NAME ":" ] ( head "<-" node alt node | alt )
//! head   ::= "?" NAME [ "," "?" NAME ]
//! node   ::= "?" NAME | NAME | "\"" chars "\""
//! alt    ::= seq { "|" seq }
//! seq    ::= post { "/" post }
//! post   ::= prim { "+" }
//! prim   ::= NAME | "^" prim | "(" alt ")"
//!          | "anbn(" alt "," alt ")" | "sg(" alt ")" | "minus(" alt "," alt ")"
//! ```
//!
//! Every label denotes a relation with columns `s` and `t`. `a/b` joins the
//! target of `a` with the source of `b` through a fresh middle column; a
//! chain `a/b/c` becomes one join tree with every middle column
//! antiprojected above it. `a+` is the closure in the
//! right-to-left form `μX. a ∪ π̃_m(ρ_{t→m}a ⋈ ρ_{s→m}X)`. `anbn(a,b)` is
//! `μX. a/b ∪ a/X/b`, `sg(a)` is `anbn(a,^a)`, and `minus(a,b)` keeps the
//! `a`-pairs whose target starts no `b`-path.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::ParseError;
use crate::term::{schema, Atom, Catalog, FilterExpr, Name, Term};

/// Parses the S-expression form of a term.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = SexpParser { src: text.as_bytes(), pos: 0 };
    let t = p.term()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ParseError::new(p.pos, "trailing input"));
    }
    Ok(t)
}

pub fn print_term(t: &Term) -> String {
    t.to_string()
}

struct SexpParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> SexpParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::new(self.pos, format!("expected '{}'", c as char)))
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn atom(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_whitespace() || c == b'(' || c == b')' || c == b'"' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ParseError::new(start, "expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn string(&mut self) -> Result<String, ParseError> {
        self.expect(b'"')?;
        let mut out = String::new();
        loop {
            match self.src.get(self.pos) {
                None => return Err(ParseError::new(self.pos, "unterminated string")),
                Some(b'"') => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some(b'\\') => {
                    let c = *self
                        .src
                        .get(self.pos + 1)
                        .ok_or_else(|| ParseError::new(self.pos, "dangling escape"))?;
                    out.push(c as char);
                    self.pos += 2;
                }
                Some(_) => {
                    let rest = std::str::from_utf8(&self.src[self.pos..])
                        .map_err(|_| ParseError::new(self.pos, "invalid utf-8"))?;
                    let ch = rest.chars().next().unwrap();
                    out.push(ch);
                    self.pos += ch.len_utf8();
                }
            }
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.expect(b'(')?;
        let at = self.pos;
        let head = self.atom()?;
        let t = match head.as_str() {
            "rel" => Term::Rel(self.atom()?.into()),
            "var" => Term::Var(self.atom()?.into()),
            "filter" => {
                let p = self.pred()?;
                Term::Filter(p, Arc::new(self.term()?))
            }
            "rename" => {
                let a = self.atom()?;
                let b = self.atom()?;
                Term::Rename(a.into(), b.into(), Arc::new(self.term()?))
            }
            "antiproject" => {
                let a = self.atom()?;
                Term::AntiProject(a.into(), Arc::new(self.term()?))
            }
            "join" | "antijoin" | "union" => {
                let l = Arc::new(self.term()?);
                let r = Arc::new(self.term()?);
                match head.as_str() {
                    "join" => Term::Join(l, r),
                    "antijoin" => Term::AntiJoin(l, r),
                    _ => Term::Union(l, r),
                }
            }
            "fix" => {
                let x = self.atom()?;
                let c = Arc::new(self.term()?);
                let r = Arc::new(self.term()?);
                Term::Fix(x.into(), c, r)
            }
            other => return Err(ParseError::new(at, format!("unknown operator {}", other))),
        };
        self.expect(b')')?;
        Ok(t)
    }

    fn pred(&mut self) -> Result<FilterExpr, ParseError> {
        Ok(FilterExpr::new(self.atoms()?))
    }

    fn atoms(&mut self) -> Result<Vec<Atom>, ParseError> {
        self.expect(b'(')?;
        let at = self.pos;
        let head = self.atom()?;
        let out = match head.as_str() {
            "and" => {
                let mut v = Vec::new();
                while self.peek() == Some(b'(') {
                    v.extend(self.atoms()?);
                }
                if v.is_empty() {
                    return Err(ParseError::new(self.pos, "empty conjunction"));
                }
                v
            }
            "=" | "!=" => {
                let col: Name = self.atom()?.into();
                let quoted = self.peek() == Some(b'"');
                let atom = if quoted {
                    let lit: Name = self.string()?.into();
                    if head == "=" {
                        Atom::EqConst(col, lit)
                    } else {
                        Atom::NeConst(col, lit)
                    }
                } else if head == "=" {
                    Atom::EqCol(col, self.atom()?.into())
                } else {
                    return Err(ParseError::new(self.pos, "!= needs a literal"));
                };
                vec![atom]
            }
            other => return Err(ParseError::new(at, format!("unknown predicate {}", other))),
        };
        self.expect(b')')?;
        Ok(out)
    }
}

/// Regular-path expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathExpr {
    Label(Name),
    Inv(Box<PathExpr>),
    Seq(Box<PathExpr>, Box<PathExpr>),
    Alt(Box<PathExpr>, Box<PathExpr>),
    Plus(Box<PathExpr>),
    AnBn(Box<PathExpr>, Box<PathExpr>),
    Sg(Box<PathExpr>),
    Minus(Box<PathExpr>, Box<PathExpr>),
    /// The recursion variable of an enclosing `anbn` with its columns;
    /// internal only.
    Rec(Name, Name),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Var(String),
    Const(String),
}

/// A parsed query and its translation.
#[derive(Clone, Debug)]
pub struct Query {
    pub name: Option<String>,
    pub source: String,
    pub expr: PathExpr,
    pub subject: Endpoint,
    pub object: Endpoint,
    pub term: Term,
    pub catalog: Catalog,
}

/// Parses and translates one query.
pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    let mut p = QueryParser { src: text.as_bytes(), pos: 0 };
    let q = p.query(text)?;
    Ok(q)
}

/// Parses a query file: one query per line, `#` starts a comment.
pub fn parse_query_file(text: &str) -> Result<Vec<Query>, ParseError> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let body = line.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            let q = parse_query(body).map_err(|e| ParseError::new(offset + e.pos, e.msg))?;
            out.push(q);
        }
        offset += line.len();
    }
    Ok(out)
}

struct QueryParser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn is_ident(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'-' || c == b'.' || c == b':'
}

impl<'a> QueryParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(ParseError::new(self.pos, format!("expected '{}'", s)))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && is_ident(self.src[self.pos]) && self.src[self.pos] != b':' {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ParseError::new(start, "expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn query(&mut self, text: &str) -> Result<Query, ParseError> {
        let name = self.label_prefix();
        let save = self.pos;
        let (subject, object, expr) = if self.peek() == Some(b'?') {
            let head = self.head()?;
            self.expect("<-")?;
            let subject = self.node()?;
            let expr = self.alt()?;
            let object = self.node()?;
            let body_vars: Vec<&String> = [&subject, &object]
                .into_iter()
                .filter_map(|e| match e {
                    Endpoint::Var(v) => Some(v),
                    _ => None,
                })
                .collect();
            for h in &head {
                if !body_vars.contains(&h) {
                    return Err(ParseError::new(save, format!("head variable ?{} not in body", h)));
                }
            }
            if body_vars.iter().any(|v| !head.contains(v)) {
                return Err(ParseError::new(save, "every body variable must appear in the head"));
            }
            if let (Endpoint::Var(a), Endpoint::Var(b)) = (&subject, &object) {
                if a == b {
                    return Err(ParseError::new(save, "subject and object variables must differ"));
                }
            }
            if body_vars.is_empty() {
                return Err(ParseError::new(save, "query needs at least one variable"));
            }
            (subject, object, expr)
        } else {
            let expr = self.alt()?;
            (Endpoint::Var("s".into()), Endpoint::Var("t".into()), expr)
        };
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(ParseError::new(self.pos, "trailing input"));
        }
        let (term, catalog) = translate_query(&expr, &subject, &object);
        Ok(Query { name, source: text.trim().to_string(), expr, subject, object, term, catalog })
    }

    /// Optional `NAME:` prefix.
    fn label_prefix(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        let mut i = self.pos;
        while i < self.src.len() && is_ident(self.src[i]) && self.src[i] != b':' {
            i += 1;
        }
        if i > start && self.src.get(i) == Some(&b':') {
            self.pos = i + 1;
            Some(String::from_utf8_lossy(&self.src[start..i]).into_owned())
        } else {
            None
        }
    }

    fn head(&mut self) -> Result<Vec<String>, ParseError> {
        let mut vars = vec![self.var()?];
        while self.eat(",") {
            vars.push(self.var()?);
        }
        Ok(vars)
    }

    fn var(&mut self) -> Result<String, ParseError> {
        self.expect("?")?;
        self.ident()
    }

    fn node(&mut self) -> Result<Endpoint, ParseError> {
        match self.peek() {
            Some(b'?') => Ok(Endpoint::Var(self.var()?)),
            Some(b'"') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos] != b'"' {
                    self.pos += 1;
                }
                if self.pos >= self.src.len() {
                    return Err(ParseError::new(start, "unterminated constant"));
                }
                let s = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                self.pos += 1;
                Ok(Endpoint::Const(s))
            }
            _ => Ok(Endpoint::Const(self.ident()?)),
        }
    }

    fn alt(&mut self) -> Result<PathExpr, ParseError> {
        let mut e = self.seq()?;
        while self.eat("|") {
            e = PathExpr::Alt(Box::new(e), Box::new(self.seq()?));
        }
        Ok(e)
    }

    fn seq(&mut self) -> Result<PathExpr, ParseError> {
        let mut e = self.post()?;
        while self.eat("/") {
            e = PathExpr::Seq(Box::new(e), Box::new(self.post()?));
        }
        Ok(e)
    }

    fn post(&mut self) -> Result<PathExpr, ParseError> {
        let mut e = self.prim()?;
        while self.eat("+") {
            e = PathExpr::Plus(Box::new(e));
        }
        Ok(e)
    }

    fn prim(&mut self) -> Result<PathExpr, ParseError> {
        if self.eat("^") {
            return Ok(PathExpr::Inv(Box::new(self.prim()?)));
        }
        if self.eat("(") {
            let e = self.alt()?;
            self.expect(")")?;
            return Ok(e);
        }
        let at = self.pos;
        let id = self.ident()?;
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let e = match id.as_str() {
                "anbn" | "minus" => {
                    let a = self.alt()?;
                    self.expect(",")?;
                    let b = self.alt()?;
                    if id == "anbn" {
                        PathExpr::AnBn(Box::new(a), Box::new(b))
                    } else {
                        PathExpr::Minus(Box::new(a), Box::new(b))
                    }
                }
                "sg" => PathExpr::Sg(Box::new(self.alt()?)),
                other => return Err(ParseError::new(at, format!("unknown builtin {}", other))),
            };
            self.expect(")")?;
            return Ok(e);
        }
        Ok(PathExpr::Label(id.into()))
    }
}

struct Fresh {
    mids: usize,
    seqs: usize,
    vars: usize,
}

impl Fresh {
    fn mid(&mut self) -> Name {
        let n = self.mids;
        self.mids += 1;
        numbered("m", n)
    }

    fn seq(&mut self) -> Name {
        let n = self.seqs;
        self.seqs += 1;
        numbered("k", n)
    }

    fn var(&mut self) -> Name {
        let n = self.vars;
        self.vars += 1;
        numbered("X", n)
    }
}

fn numbered(base: &str, n: usize) -> Name {
    if n == 0 {
        Name::new(base)
    } else {
        Name::from(format!("{}{}", base, n))
    }
}

fn rename(from: &str, to: &Name, t: Term) -> Term {
    if from == to.as_str() {
        t
    } else {
        Term::Rename(from.into(), to.clone(), Arc::new(t))
    }
}

fn needs_fresh_endpoints(e: &PathExpr) -> bool {
    match e {
        PathExpr::Label(_) | PathExpr::Rec(..) => false,
        PathExpr::Inv(a) | PathExpr::Plus(a) => needs_fresh_endpoints(a),
        PathExpr::Alt(a, b) => needs_fresh_endpoints(a) || needs_fresh_endpoints(b),
        PathExpr::Seq(..) | PathExpr::AnBn(..) | PathExpr::Sg(..) | PathExpr::Minus(..) => true,
    }
}

/// Translates `e` into a term over columns `src` and `tgt`.
fn tr(e: &PathExpr, src: &Name, tgt: &Name, fresh: &mut Fresh, labels: &mut BTreeSet<Name>) -> Term {
    match e {
        PathExpr::Label(l) => {
            labels.insert(l.clone());
            place(Term::Rel(l.clone()), "s", "t", src, tgt)
        }
        PathExpr::Rec(s0, t0) => place(Term::Var("X".into()), s0.as_str(), t0.as_str(), src, tgt),
        PathExpr::Inv(a) => tr(a, tgt, src, fresh, labels),
        PathExpr::Seq(..) => {
            let mut parts = Vec::new();
            flatten_seq(e, &mut parts);
            let mids: Vec<Name> = (1..parts.len()).map(|_| fresh.seq()).collect();
            let mut joined: Option<Term> = None;
            for (i, p) in parts.iter().enumerate() {
                let from = if i == 0 { src } else { &mids[i - 1] };
                let to = if i + 1 == parts.len() { tgt } else { &mids[i] };
                let t = tr(p, from, to, fresh, labels);
                joined = Some(match joined {
                    None => t,
                    Some(j) => Term::join(j, t),
                });
            }
            let mut t = joined.expect("sequence has two parts");
            for k in mids.iter().rev() {
                t = Term::AntiProject(k.clone(), Arc::new(t));
            }
            t
        }
        PathExpr::Alt(a, b) => Term::union(tr(a, src, tgt, fresh, labels), tr(b, src, tgt, fresh, labels)),
        PathExpr::Plus(a) => {
            let m = fresh.mid();
            let x = fresh.var();
            let c = tr(a, src, tgt, fresh, labels);
            let step = Term::join(
                Term::Rename(tgt.clone(), m.clone(), Arc::new(c.clone())),
                Term::Rename(src.clone(), m.clone(), Arc::new(Term::Var(x.clone()))),
            );
            Term::Fix(x, Arc::new(c), Arc::new(Term::AntiProject(m, Arc::new(step))))
        }
        PathExpr::AnBn(a, b) => {
            let x = fresh.var();
            let base = PathExpr::Seq(a.clone(), b.clone());
            let rec = PathExpr::Seq(
                a.clone(),
                Box::new(PathExpr::Seq(Box::new(PathExpr::Rec(src.clone(), tgt.clone())), b.clone())),
            );
            let c = tr(&base, src, tgt, fresh, labels);
            let r = tr(&rec, src, tgt, fresh, labels);
            let r = rebind(&r, &x);
            Term::Fix(x, Arc::new(c), Arc::new(r))
        }
        PathExpr::Sg(a) => {
            let e = PathExpr::AnBn(a.clone(), Box::new(PathExpr::Inv(a.clone())));
            tr(&e, src, tgt, fresh, labels)
        }
        PathExpr::Minus(a, b) => {
            let l = tr(a, src, tgt, fresh, labels);
            let k = fresh.seq();
            let r = tr(b, tgt, &k, fresh, labels);
            Term::antijoin(l, Term::antiproject(k.as_str(), r))
        }
    }
}

fn flatten_seq<'e>(e: &'e PathExpr, out: &mut Vec<&'e PathExpr>) {
    match e {
        PathExpr::Seq(a, b) => {
            flatten_seq(a, out);
            flatten_seq(b, out);
        }
        _ => out.push(e),
    }
}

/// Places a relation with columns `(s0, t0)` onto `(src, tgt)`.
fn place(t: Term, s0: &str, t0: &str, src: &Name, tgt: &Name) -> Term {
    if src.as_str() == t0 && tgt.as_str() == s0 {
        let tmp = Name::new("swap");
        let t = rename(t0, &tmp, t);
        let t = rename(s0, src, t);
        return rename("swap", tgt, t);
    }
    if src.as_str() == t0 {
        let t = rename(t0, tgt, t);
        return rename(s0, src, t);
    }
    let t = rename(s0, src, t);
    rename(t0, tgt, t)
}

/// Replaces the placeholder recursion variable by `x`.
fn rebind(t: &Term, x: &Name) -> Term {
    match t {
        Term::Var(_) => Term::Var(x.clone()),
        Term::Rel(_) => t.clone(),
        Term::Filter(f, c) => Term::Filter(f.clone(), Arc::new(rebind(c, x))),
        Term::Rename(a, b, c) => Term::Rename(a.clone(), b.clone(), Arc::new(rebind(c, x))),
        Term::AntiProject(a, c) => Term::AntiProject(a.clone(), Arc::new(rebind(c, x))),
        Term::Join(l, r) => Term::Join(Arc::new(rebind(l, x)), Arc::new(rebind(r, x))),
        Term::AntiJoin(l, r) => Term::AntiJoin(Arc::new(rebind(l, x)), Arc::new(rebind(r, x))),
        Term::Union(l, r) => Term::Union(Arc::new(rebind(l, x)), Arc::new(rebind(r, x))),
        Term::Fix(y, c, r) => Term::Fix(y.clone(), Arc::new(rebind(c, x)), r.clone()),
    }
}

/// Translation of a whole query. The result has columns `s` and `t` for
/// variable endpoints; constant endpoints are filtered and dropped.
pub fn translate_query(e: &PathExpr, subject: &Endpoint, object: &Endpoint) -> (Term, Catalog) {
    let mut fresh = Fresh { mids: 0, seqs: 0, vars: 0 };
    let mut labels = BTreeSet::new();
    let (src, tgt) = if needs_fresh_endpoints(e) {
        (Name::new("s0"), Name::new("t0"))
    } else {
        (Name::new("s"), Name::new("t"))
    };
    let mut t = tr(e, &src, &tgt, &mut fresh, &mut labels);
    for (end, col) in [(subject, &src), (object, &tgt)] {
        if let Endpoint::Const(c) = end {
            t = Term::filter(FilterExpr::eq_const(col.as_str(), c), t);
        }
    }
    for (end, col) in [(subject, &src), (object, &tgt)] {
        if let Endpoint::Const(_) = end {
            t = Term::AntiProject(col.clone(), Arc::new(t));
        }
    }
    if src.as_str() != "s" {
        if matches!(subject, Endpoint::Var(_)) {
            t = rename(src.as_str(), &Name::new("s"), t);
        }
        if matches!(object, Endpoint::Var(_)) {
            t = rename(tgt.as_str(), &Name::new("t"), t);
        }
    }
    let catalog = labels.into_iter().map(|l| (l, schema(&["s", "t"]))).collect();
    (t, catalog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{canonicalize, check_restrictions, type_of};

    fn sigma() -> Term {
        Term::fix(
            "X",
            Term::rel("isLocatedIn"),
            Term::antiproject(
                "m",
                Term::join(
                    Term::rename("t", "m", Term::rel("isLocatedIn")),
                    Term::rename("s", "m", Term::var("X")),
                ),
            ),
        )
    }

    #[test]
    fn closure_query_gives_sigma() {
        let q = parse_query("?s,?t <- ?s isLocatedIn+ ?t").unwrap();
        assert_eq!(q.term, sigma());
        assert_eq!(q.catalog.len(), 1);
    }

    #[test]
    fn constant_becomes_filter_then_antiprojection() {
        let q = parse_query("?s <- ?s isLocatedIn+ Sweden").unwrap();
        let expect = Term::antiproject("t", Term::filter(FilterExpr::eq_const("t", "Sweden"), sigma()));
        assert_eq!(q.term, expect);
        assert_eq!(type_of(&q.term, &q.catalog).unwrap(), schema(&["s"]));
    }

    #[test]
    fn anbn_shape() {
        let q = parse_query("anbn(a,b)").unwrap();
        let Term::Rename(_, _, inner) = &q.term else { panic!("{}", q.term) };
        let Term::Rename(_, _, fix) = &**inner else { panic!() };
        let Term::Fix(_, c, r) = &**fix else { panic!() };
        assert_eq!(c.count_fix_join().1, 1);
        assert_eq!(r.count_fix_join().1, 2);
        assert!(check_restrictions(&q.term).is_empty());
        assert_eq!(type_of(&q.term, &q.catalog).unwrap(), schema(&["s", "t"]));
    }

    #[test]
    fn translations_typecheck() {
        for src in [
            "a/b",
            "a+/b+",
            "(a|b)+",
            "^a/b",
            "a/^a",
            "sg(up)",
            "minus(a+, b)",
            "?x <- Paris a+/b ?x",
            "(a/b)+",
            "a+/b+/c+",
        ] {
            let q = parse_query(src).unwrap_or_else(|e| panic!("{}: {}", src, e));
            assert!(check_restrictions(&q.term).is_empty(), "{}", src);
            let ty = type_of(&q.term, &q.catalog).unwrap_or_else(|e| panic!("{}: {}", src, e));
            assert!(ty.len() <= 2, "{}", src);
        }
    }

    #[test]
    fn term_round_trip() {
        let t = Term::filter(
            FilterExpr::new(vec![
                Atom::EqConst("t".into(), "Swe den".into()),
                Atom::EqCol("s".into(), "m".into()),
            ]),
            sigma(),
        );
        let s = print_term(&t);
        assert_eq!(parse_term(&s).unwrap(), t);
        let e = parse_term("(join (rel A)").unwrap_err();
        assert!(e.pos > 0);
        assert!(parse_term("(bogus)").is_err());
    }

    #[test]
    fn query_errors_have_positions() {
        let e = parse_query("?s,?t <- ?s a+ ").unwrap_err();
        assert!(e.pos >= 12);
        assert!(parse_query("a//b").is_err());
        assert!(parse_query("?s <- ?t a ?u").is_err());
    }

    #[test]
    fn query_file() {
        let qs = parse_query_file("# header\nq1: a+\n\nq2: ?s <- ?s b \"x y\" # trailing\n").unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[0].name.as_deref(), Some("q1"));
        assert_eq!(qs[1].name.as_deref(), Some("q2"));
    }

    #[test]
    fn inverse_swaps_columns() {
        let q = parse_query("^a").unwrap();
        assert_eq!(canonicalize(&q.term).to_string(), "(rename swap s (rename s t (rename t swap (rel a))))");
    }
}
