//! Graph codecs: a JSON document that round-trips and a DOT rendering.

use std::fmt::Write as _;

use hawkes_granger::graph::Adjacency;
use hawkes_granger::inference::EdgeInterval;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GraphFormat {
    Dot,
    Json,
}

impl std::str::FromStr for GraphFormat {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "dot" => Ok(GraphFormat::Dot),
            "json" => Ok(GraphFormat::Json),
            other => Err(CliError::Usage(format!("unknown graph format {other:?} (expected dot or json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub source: String,
    pub target: String,
    pub weight: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub exists: bool,
}

/// Directed graph; an edge `source -> target` means source influences target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<String>,
    pub edges: Vec<GraphEdge>,
}

impl GraphDocument {
    /// Nonzero entries of `adj`.
    pub fn from_adjacency(adj: &Adjacency) -> Self {
        let edges = adj
            .edges()
            .into_iter()
            .map(|(s, t, w)| GraphEdge {
                source: adj.labels[s].clone(),
                target: adj.labels[t].clone(),
                weight: w,
                lower: None,
                upper: None,
                exists: true,
            })
            .collect();
        Self { nodes: adj.labels.clone(), edges }
    }

    /// Existing bootstrap edges whose |weight| exceeds `threshold`.
    pub fn from_intervals(intervals: &[Vec<EdgeInterval>], labels: &[String], threshold: f64) -> Self {
        let edges = intervals
            .iter()
            .flatten()
            .filter(|e| e.exists && e.weight.abs() > threshold)
            .map(|e| GraphEdge {
                source: labels[e.source].clone(),
                target: labels[e.target].clone(),
                weight: e.weight,
                lower: Some(e.lower),
                upper: Some(e.upper),
                exists: true,
            })
            .collect();
        Self { nodes: labels.to_vec(), edges }
    }

    pub fn to_adjacency(&self) -> CliResult<Adjacency> {
        let n = self.nodes.len();
        let index = |name: &str| {
            self.nodes
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| CliError::Input(format!("edge refers to unknown node {name:?}")))
        };
        let mut w = vec![vec![0.0; n]; n];
        for e in self.edges.iter().filter(|e| e.exists) {
            w[index(&e.target)?][index(&e.source)?] = e.weight;
        }
        Adjacency::new(w, self.nodes.clone()).map_err(CliError::from)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes") + "\n"
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid graph JSON: {e}")))
    }

    /// Positive edges solid blue, negative edges dashed red, pen width
    /// proportional to |weight|.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph G {\n  rankdir=LR;\n  node [shape=ellipse];\n");
        for n in &self.nodes {
            let _ = writeln!(out, "  \"{}\";", escape(n));
        }
        for e in self.edges.iter().filter(|e| e.exists) {
            let (color, style) = if e.weight >= 0.0 { ("blue", "solid") } else { ("red", "dashed") };
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{:.3}\", color={color}, style={style}, penwidth={:.2}];",
                escape(&e.source),
                escape(&e.target),
                e.weight,
                1.0 + 2.0 * e.weight.abs().min(2.0)
            );
        }
        out.push_str("}\n");
        out
    }

    pub fn render(&self, format: GraphFormat) -> String {
        match format {
            GraphFormat::Dot => self.to_dot(),
            GraphFormat::Json => self.to_json(),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
