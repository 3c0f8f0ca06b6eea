use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ExprNode, IrError, Mapping, RelGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Dot,
}

/// On-disk graph schema: `{"nodes": [{id, label, kind, ordered, args}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphDoc {
    pub nodes: Vec<ExprNode>,
}

impl From<&RelGraph> for GraphDoc {
    fn from(g: &RelGraph) -> Self {
        GraphDoc { nodes: g.nodes().to_vec() }
    }
}

impl TryFrom<GraphDoc> for RelGraph {
    type Error = IrError;

    fn try_from(doc: GraphDoc) -> Result<Self, IrError> {
        RelGraph::from_nodes(doc.nodes)
    }
}

impl Serialize for RelGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GraphDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RelGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = GraphDoc::deserialize(d)?;
        RelGraph::try_from(doc).map_err(serde::de::Error::custom)
    }
}

pub fn graph_to_json(g: &RelGraph) -> String {
    serde_json::to_string(g).expect("graph serialization is infallible")
}

pub fn graph_from_json(text: &str) -> Result<RelGraph, IrError> {
    let doc: GraphDoc = serde_json::from_str(text)?;
    RelGraph::try_from(doc)
}

pub fn mapping_to_json(m: &Mapping) -> String {
    serde_json::to_string(m).expect("mapping serialization is infallible")
}

pub fn mapping_from_json(text: &str) -> Result<Mapping, IrError> {
    Ok(serde_json::from_str(text)?)
}

pub fn serialize_graph(g: &RelGraph, format: Format) -> String {
    match format {
        Format::Json => graph_to_json(g),
        Format::Dot => {
            let mut out = String::from("digraph G {\n  rankdir=BT;\n");
            write_cluster(&mut out, "g", "graph", g);
            out.push_str("}\n");
            out
        }
    }
}

pub fn serialize_mapping(base: &RelGraph, target: &RelGraph, m: &Mapping, format: Format) -> String {
    match format {
        Format::Json => mapping_to_json(m),
        Format::Dot => mapping_to_dot(base, target, m),
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn write_cluster(out: &mut String, prefix: &str, title: &str, g: &RelGraph) {
    let _ = writeln!(out, "  subgraph cluster_{prefix} {{\n    label=\"{title}\";");
    for n in g.nodes() {
        let shape = if n.is_entity() { "ellipse" } else { "box" };
        let _ = writeln!(
            out,
            "    {prefix}{} [label=\"[{}] {}\", shape={shape}];",
            n.id,
            n.id,
            escape(&n.label)
        );
    }
    for n in g.nodes() {
        for (i, a) in n.args.iter().enumerate() {
            let label = if n.is_positional() { format!(" [label=\"{i}\"]") } else { String::new() };
            let _ = writeln!(out, "    {prefix}{} -> {prefix}{a}{label};", n.id);
        }
    }
    out.push_str("  }\n");
}

/// Base and target side by side; correspondences are dashed green edges and
/// candidate inferences are filled.
pub fn mapping_to_dot(base: &RelGraph, target: &RelGraph, m: &Mapping) -> String {
    let mut out = String::from("digraph Mapping {\n  rankdir=BT;\n  compound=true;\n");
    write_cluster(&mut out, "b", "base", base);
    write_cluster(&mut out, "t", "target", target);
    for c in &m.inferences {
        let _ = writeln!(out, "  b{c} [style=filled, fillcolor=\"#f4cccc\"];");
    }
    for (b, t) in &m.correspondences {
        let _ = writeln!(
            out,
            "  b{b} -> t{t} [style=dashed, color=\"#6aa84f\", dir=none, constraint=false, class=correspondence];"
        );
    }
    out.push_str("}\n");
    out
}
