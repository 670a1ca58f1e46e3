//! Stable JSON and GraphViz renderings of a store.
//!
//! JSON layout (version 1):
//!
//! ```text
//! { "version": 1, "root": <class>,
//!   "classes": [ { "id", "type", "free", "annotation": {destab, rigid} | null,
//!                  "binders": [ {name, class} ],
//!                  "members": [ {op, label, children} ] } ],
//!   "excluded": [ {parent, child} ] }
//! ```
//!
//! Classes are listed by id, live classes only, and ids are canonical.

use serde::Serialize;

use crate::store::{Annotation, EqId, Op, Store};
use crate::term::{Name, Schema};

pub const DAG_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct DagDump {
    pub version: u32,
    pub root: u32,
    pub classes: Vec<ClassDump>,
    pub excluded: Vec<ExcludedDump>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassDump {
    pub id: u32,
    #[serde(rename = "type")]
    pub ty: Schema,
    pub free: bool,
    pub annotation: Option<Annotation>,
    pub binders: Vec<BinderDump>,
    pub members: Vec<MemberDump>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BinderDump {
    pub name: Name,
    pub class: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberDump {
    pub op: &'static str,
    pub label: String,
    pub children: Vec<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcludedDump {
    pub parent: String,
    pub child: String,
}

/// Operator label without operands, e.g. `rename s k`.
pub fn op_label(op: &Op) -> String {
    match op {
        Op::Rel(n) => n.to_string(),
        Op::Var(ty) => {
            let cols: Vec<&str> = ty.iter().map(|c| c.as_str()).collect();
            format!("X{{{}}}", cols.join(","))
        }
        Op::Filter(f, _) => format!("filter {}", f),
        Op::Rename(a, b, _) => format!("rename {} {}", a, b),
        Op::AntiProject(a, _) => format!("antiproject {}", a),
        other => other.kind().to_string(),
    }
}

fn member(s: &Store, op: &Op) -> MemberDump {
    MemberDump {
        op: op.kind(),
        label: op_label(op),
        children: op.children().into_iter().flatten().map(|c| s.find(c).0).collect(),
    }
}

fn op_text(s: &Store, op: &Op) -> String {
    let ch: Vec<String> = op.children().into_iter().flatten().map(|c| s.find(c).to_string()).collect();
    if ch.is_empty() {
        op_label(op)
    } else {
        format!("{} {}", op_label(op), ch.join(" "))
    }
}

pub fn dump(s: &Store, root: EqId) -> DagDump {
    let classes = s
        .live_classes()
        .into_iter()
        .map(|c| {
            let cl = s.class(c);
            ClassDump {
                id: c.0,
                ty: cl.ty.clone(),
                free: cl.free,
                annotation: cl.ann.clone(),
                binders: cl.binders.iter().map(|(n, b)| BinderDump { name: n.clone(), class: s.find(*b).0 }).collect(),
                members: cl.members.iter().map(|m| member(s, m)).collect(),
            }
        })
        .collect();
    let excluded = s
        .replaced_pairs()
        .iter()
        .map(|(p, c)| ExcludedDump { parent: op_text(s, p), child: op_text(s, c) })
        .collect();
    DagDump { version: DAG_VERSION, root: s.find(root).0, classes, excluded }
}

pub fn to_json(s: &Store, root: EqId) -> String {
    serde_json::to_string_pretty(&dump(s, root)).expect("dump serializes")
}

/// GraphViz rendering: classes are dashed clusters, operations are boxes.
pub fn to_dot(s: &Store, root: EqId) -> String {
    let mut out = String::from("digraph rlqdag {\n  compound=true;\n  node [shape=box, fontname=\"monospace\"];\n");
    let root = s.find(root);
    for c in s.live_classes() {
        let cl = s.class(c);
        let mut label = format!("{} {{{}}}", c, cl.ty.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(","));
        if let Some(a) = &cl.ann {
            let j = |x: &Schema| x.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(",");
            label.push_str(&format!(" D={{{}}} R={{{}}}", j(&a.destab), j(&a.rigid)));
        }
        for (n, b) in &cl.binders {
            label.push_str(&format!(" let {}={}", n, s.find(*b)));
        }
        let style = if c == root { "bold" } else { "dashed" };
        out.push_str(&format!("  subgraph cluster_{} {{\n    label={:?}; style={};\n", c.0, label, style));
        out.push_str(&format!("    {}_anchor [shape=point, style=invis];\n", c));
        for (i, m) in cl.members.iter().enumerate() {
            out.push_str(&format!("    {}_{} [label={:?}];\n", c, i, op_label(m)));
        }
        out.push_str("  }\n");
    }
    for c in s.live_classes() {
        for (i, m) in s.class(c).members.iter().enumerate() {
            for ch in m.children().into_iter().flatten() {
                let ch = s.find(ch);
                out.push_str(&format!("  {}_{} -> {}_anchor [lhead=cluster_{}];\n", c, i, ch, ch.0));
            }
        }
    }
    out.push_str("}\n");
    out
}
