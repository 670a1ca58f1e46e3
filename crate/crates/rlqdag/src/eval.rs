//! Set-semantics evaluation of single plans over in-memory relations.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, TermError};
use crate::term::{rename_schema, Atom, Name, Schema, Term};

/// String interner for attribute values.
#[derive(Clone, Debug, Default)]
pub struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    pub fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }

    pub fn get(&self, s: &str) -> Option<u32> {
        self.ids.get(s).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// A set of rows over a sorted column list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    cols: Vec<Name>,
    rows: HashSet<Vec<u32>>,
}

impl Relation {
    pub fn empty(schema: &Schema) -> Self {
        Relation { cols: schema.iter().cloned().collect(), rows: HashSet::new() }
    }

    pub fn schema(&self) -> Schema {
        self.cols.iter().cloned().collect()
    }

    pub fn columns(&self) -> &[Name] {
        &self.cols
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.rows.iter()
    }

    pub fn contains(&self, row: &[u32]) -> bool {
        self.rows.contains(row)
    }

    /// Inserts a row given in column order; returns whether it was new.
    pub fn insert(&mut self, row: Vec<u32>) -> bool {
        debug_assert_eq!(row.len(), self.cols.len());
        self.rows.insert(row)
    }

    fn col(&self, c: &Name) -> usize {
        self.cols.iter().position(|x| x == c).expect("column in schema")
    }

    /// Number of distinct values in column `c`.
    pub fn distinct(&self, c: &Name) -> usize {
        let i = self.col(c);
        self.rows.iter().map(|r| r[i]).collect::<HashSet<_>>().len()
    }

    fn extend(&mut self, other: &Relation) {
        self.rows.extend(other.rows.iter().cloned());
    }

    fn minus(&self, other: &Relation) -> Relation {
        let rows = self.rows.iter().filter(|r| !other.rows.contains(*r)).cloned().collect();
        Relation { cols: self.cols.clone(), rows }
    }

    /// Rows as value strings, sorted lexicographically.
    pub fn sorted_rows(&self, names: &Interner) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> =
            self.rows.iter().map(|r| r.iter().map(|&v| names.name(v).to_string()).collect()).collect();
        out.sort();
        out
    }

    /// TSV dump with a header line.
    pub fn to_tsv(&self, names: &Interner) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self.cols.iter().map(|c| c.as_str()).collect();
        let _ = writeln!(out, "{}", header.join("\t"));
        for row in self.sorted_rows(names) {
            let _ = writeln!(out, "{}", row.join("\t"));
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelStats {
    pub rows: usize,
    pub distinct: BTreeMap<String, usize>,
}

/// Statistics sidecar.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub version: u32,
    /// Distinct values in the whole database.
    pub domain: usize,
    pub relations: BTreeMap<String, RelStats>,
}

pub const STATS_VERSION: u32 = 1;

impl Stats {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }

    pub fn from_json(text: &str) -> Result<Stats, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::Load { line: e.line(), msg: e.to_string() })
    }
}

#[derive(Clone, Debug, Default)]
pub struct Database {
    pub values: Interner,
    pub relations: BTreeMap<Name, Relation>,
    pub warnings: Vec<String>,
}

impl Database {
    pub fn new() -> Self {
        Database::default()
    }

    /// Adds an `s`/`t` edge under `label`.
    pub fn add_edge(&mut self, label: &str, src: &str, tgt: &str) {
        let s = self.values.intern(src);
        let t = self.values.intern(tgt);
        self.relations
            .entry(Name::new(label))
            .or_insert_with(|| Relation::empty(&edge_schema()))
            .insert(vec![s, t]);
    }

    pub fn edge_count(&self) -> usize {
        self.relations.values().map(|r| r.len()).sum()
    }

    pub fn stats(&self) -> Stats {
        let relations = self
            .relations
            .iter()
            .map(|(n, r)| {
                let distinct = r.cols.iter().map(|c| (c.to_string(), r.distinct(c))).collect();
                (n.to_string(), RelStats { rows: r.len(), distinct })
            })
            .collect();
        Stats { version: STATS_VERSION, domain: self.values.len(), relations }
    }

    /// Relation for `name`, or an empty `s`/`t` relation for labels
    /// absent from the data.
    fn relation(&self, name: &Name) -> Relation {
        self.relations.get(name).cloned().unwrap_or_else(|| Relation::empty(&edge_schema()))
    }
}

fn edge_schema() -> Schema {
    [Name::new("s"), Name::new("t")].into_iter().collect()
}

/// Which field of an edge line holds the label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    /// `source label target`
    Middle,
    /// `source target label`
    Last,
}

/// Parses an edge list. Fields are separated by tabs or spaces; blank
/// lines and `#` comments are skipped.
pub fn parse_edges(text: &str, mode: LabelColumn) -> Result<Database, EvalError> {
    let mut db = Database::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let f: Vec<&str> = if body.contains('\t') {
            body.split('\t').map(str::trim).collect()
        } else {
            body.split_whitespace().collect()
        };
        if f.len() != 3 || f.iter().any(|x| x.is_empty()) {
            return Err(EvalError::Load { line: i + 1, msg: format!("expected 3 fields, found {}", f.len()) });
        }
        match mode {
            LabelColumn::Middle => db.add_edge(f[1], f[0], f[2]),
            LabelColumn::Last => db.add_edge(f[2], f[0], f[1]),
        }
    }
    if db.relations.is_empty() {
        db.warnings.push("no edges loaded".to_string());
    }
    Ok(db)
}

pub fn load_edges(path: &Path, mode: LabelColumn) -> Result<Database, EvalError> {
    let text = std::fs::read_to_string(path)?;
    parse_edges(&text, mode)
}

/// Writes edges as `source<TAB>label<TAB>target`, sorted.
pub fn edges_to_tsv(db: &Database) -> String {
    let mut out = String::new();
    for (label, rel) in &db.relations {
        for row in rel.sorted_rows(&db.values) {
            let _ = writeln!(out, "{}\t{}\t{}", row[0], label, row[1]);
        }
    }
    out
}

/// Bindings of free recursion variables, innermost last.
pub type RelEnv = Vec<(Name, Relation)>;

/// Evaluates a closed term. Fixpoints use semi-naive iteration.
pub fn evaluate(t: &Term, db: &Database) -> Result<Relation, EvalError> {
    Evaluator { db, naive: false }.eval(t, &mut RelEnv::new()).map_err(EvalError::from)
}

/// Evaluates with free recursion variables bound by `env`.
pub fn evaluate_in(t: &Term, db: &Database, env: &mut RelEnv) -> Result<Relation, EvalError> {
    Evaluator { db, naive: false }.eval(t, env).map_err(EvalError::from)
}

/// Evaluation with naive fixpoint iteration.
pub fn evaluate_naive(t: &Term, db: &Database) -> Result<Relation, EvalError> {
    Evaluator { db, naive: true }.eval(t, &mut RelEnv::new()).map_err(EvalError::from)
}

struct Evaluator<'a> {
    db: &'a Database,
    naive: bool,
}

impl<'a> Evaluator<'a> {
    fn eval(&self, t: &Term, env: &mut RelEnv) -> Result<Relation, TermError> {
        match t {
            Term::Rel(n) => Ok(self.db.relation(n)),
            Term::Var(x) => env
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, r)| r.clone())
                .ok_or_else(|| TermError::UnboundVariable(x.to_string())),
            Term::Filter(f, c) => {
                let r = self.eval(c, env)?;
                let mut preds = Vec::new();
                for a in f.atoms() {
                    let col = |n: &Name| {
                        r.cols
                            .iter()
                            .position(|x| x == n)
                            .ok_or_else(|| TermError::Schema(format!("filter column {} missing", n)))
                    };
                    preds.push(match a {
                        Atom::EqConst(c, v) => Pred::Eq(col(c)?, self.db.values.get(v.as_str())),
                        Atom::NeConst(c, v) => Pred::Ne(col(c)?, self.db.values.get(v.as_str())),
                        Atom::EqCol(x, y) => Pred::Cols(col(x)?, col(y)?),
                    });
                }
                let rows = r.rows.into_iter().filter(|row| preds.iter().all(|p| p.holds(row))).collect();
                Ok(Relation { cols: r.cols, rows })
            }
            Term::Rename(a, b, c) => {
                let r = self.eval(c, env)?;
                let new = rename_schema(&r.schema(), a, b)?;
                let cols: Vec<Name> = new.into_iter().collect();
                let src: Vec<usize> =
                    cols.iter().map(|n| r.col(if n == b { a } else { n })).collect();
                let rows = r.rows.iter().map(|row| src.iter().map(|&i| row[i]).collect()).collect();
                Ok(Relation { cols, rows })
            }
            Term::AntiProject(a, c) => {
                let r = self.eval(c, env)?;
                let Some(drop) = r.cols.iter().position(|x| x == a) else {
                    return Err(TermError::Schema(format!("antiprojected {} missing", a)));
                };
                let mut cols = r.cols.clone();
                cols.remove(drop);
                let rows = r
                    .rows
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, v)| *v).collect())
                    .collect();
                Ok(Relation { cols, rows })
            }
            Term::Join(l, r) => {
                let l = self.eval(l, env)?;
                let r = self.eval(r, env)?;
                Ok(join(&l, &r))
            }
            Term::AntiJoin(l, r) => {
                let l = self.eval(l, env)?;
                let r = self.eval(r, env)?;
                Ok(antijoin(&l, &r))
            }
            Term::Union(l, r) => {
                let mut l = self.eval(l, env)?;
                let r = self.eval(r, env)?;
                if l.cols != r.cols {
                    return Err(TermError::Schema(format!("union of {:?} and {:?}", l.cols, r.cols)));
                }
                l.extend(&r);
                Ok(l)
            }
            Term::Fix(x, c, r) => {
                let base = self.eval(c, env)?;
                if self.naive {
                    self.naive_fix(x, base, r, env)
                } else {
                    self.semi_naive_fix(x, base, r, env)
                }
            }
        }
    }

    fn semi_naive_fix(&self, x: &Name, base: Relation, r: &Term, env: &mut RelEnv) -> Result<Relation, TermError> {
        let mut acc = base.clone();
        let mut delta = base;
        while !delta.is_empty() {
            env.push((x.clone(), delta));
            let step = self.eval(r, env);
            env.pop();
            let step = step?;
            if step.cols != acc.cols {
                return Err(TermError::Schema(format!("fixpoint step has {:?}, expected {:?}", step.cols, acc.cols)));
            }
            delta = step.minus(&acc);
            acc.extend(&delta);
        }
        Ok(acc)
    }

    fn naive_fix(&self, x: &Name, base: Relation, r: &Term, env: &mut RelEnv) -> Result<Relation, TermError> {
        let mut acc = base.clone();
        loop {
            env.push((x.clone(), acc.clone()));
            let step = self.eval(r, env);
            env.pop();
            let step = step?;
            if step.cols != acc.cols {
                return Err(TermError::Schema(format!("fixpoint step has {:?}, expected {:?}", step.cols, acc.cols)));
            }
            let mut next = base.clone();
            next.extend(&step);
            if next == acc {
                return Ok(acc);
            }
            acc = next;
        }
    }
}

enum Pred {
    Eq(usize, Option<u32>),
    Ne(usize, Option<u32>),
    Cols(usize, usize),
}

impl Pred {
    fn holds(&self, row: &[u32]) -> bool {
        match *self {
            Pred::Eq(i, v) => Some(row[i]) == v,
            Pred::Ne(i, v) => Some(row[i]) != v,
            Pred::Cols(i, j) => row[i] == row[j],
        }
    }
}

/// Natural join on shared columns.
pub fn join(l: &Relation, r: &Relation) -> Relation {
    let cols: Vec<Name> = l.cols.iter().chain(r.cols.iter()).cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let shared: Vec<&Name> = l.cols.iter().filter(|c| r.cols.contains(c)).collect();
    let lk: Vec<usize> = shared.iter().map(|c| l.col(c)).collect();
    let rk: Vec<usize> = shared.iter().map(|c| r.col(c)).collect();
    // Output column i reads from the left (true) or right (false) row.
    let from: Vec<(bool, usize)> = cols
        .iter()
        .map(|c| match l.cols.iter().position(|x| x == c) {
            Some(i) => (true, i),
            None => (false, r.col(c)),
        })
        .collect();
    let mut index: HashMap<Vec<u32>, Vec<&Vec<u32>>> = HashMap::new();
    for row in &r.rows {
        index.entry(rk.iter().map(|&i| row[i]).collect()).or_default().push(row);
    }
    let mut rows = HashSet::new();
    for lrow in &l.rows {
        let key: Vec<u32> = lk.iter().map(|&i| lrow[i]).collect();
        if let Some(matches) = index.get(&key) {
            for rrow in matches {
                rows.insert(from.iter().map(|&(left, i)| if left { lrow[i] } else { rrow[i] }).collect());
            }
        }
    }
    Relation { cols, rows }
}

/// Rows of `l` with no partner in `r` on the shared columns.
pub fn antijoin(l: &Relation, r: &Relation) -> Relation {
    let shared: Vec<&Name> = l.cols.iter().filter(|c| r.cols.contains(c)).collect();
    let lk: Vec<usize> = shared.iter().map(|c| l.col(c)).collect();
    let rk: Vec<usize> = shared.iter().map(|c| r.col(c)).collect();
    let keys: HashSet<Vec<u32>> = r.rows.iter().map(|row| rk.iter().map(|&i| row[i]).collect()).collect();
    let rows = l
        .rows
        .iter()
        .filter(|row| !keys.contains(&lk.iter().map(|&i| row[i]).collect::<Vec<u32>>()))
        .cloned()
        .collect();
    Relation { cols: l.cols.clone(), rows }
}

/// Random relation over `schema` with at most `n` rows drawn from values
/// `v0..v{domain}`.
pub fn random_relation<R: Rng>(db: &mut Database, schema: &Schema, n: usize, domain: usize, rng: &mut R) -> Relation {
    let mut rel = Relation::empty(schema);
    for _ in 0..n {
        let row = (0..schema.len()).map(|_| db.values.intern(&format!("v{}", rng.gen_range(0..domain)))).collect();
        rel.insert(row);
    }
    rel
}

/// Random edge-labelled graph. `extra` names are added as nodes so that
/// query constants can match.
pub fn random_graph<R: Rng>(
    labels: &[Name],
    nodes: usize,
    edges_per_label: usize,
    extra: &[String],
    rng: &mut R,
) -> Database {
    let mut db = Database::new();
    let mut names: Vec<String> = (0..nodes).map(|i| format!("v{}", i)).collect();
    names.extend(extra.iter().cloned());
    for n in &names {
        db.values.intern(n);
    }
    for l in labels {
        db.relations.insert(l.clone(), Relation::empty(&edge_schema()));
        for _ in 0..edges_per_label {
            let s = &names[rng.gen_range(0..names.len())];
            let t = &names[rng.gen_range(0..names.len())];
            db.add_edge(l.as_str(), s, t);
        }
    }
    db
}

/// Constants mentioned by filters in `t`.
pub fn constants(t: &Term) -> Vec<String> {
    let mut out = BTreeSet::new();
    t.visit(&mut |s| {
        if let Term::Filter(f, _) = s {
            for a in f.atoms() {
                if let Atom::EqConst(_, v) | Atom::NeConst(_, v) = a {
                    out.insert(v.to_string());
                }
            }
        }
    });
    out.into_iter().collect()
}
