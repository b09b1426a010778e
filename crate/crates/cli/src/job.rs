//! Job specs: a graph, a coupling assignment and optional states, as JSON.
//!
//! ```json
//! {
//!   "schema": "consensus-lab/1",
//!   "graph": {"n": 3, "edges": [[1, 2], [2, 3], [1, 3]]},
//!   "coupling": {"kind": "odd_polynomial", "coeffs": [1.0, -1.0]},
//!   "x0": [0.1, 0.0, -0.3]
//! }
//! ```
//!
//! Node labels are 1-based. `graph` may also be a path to a file holding the
//! `{"n", "edges"}` object, and `coupling` may be `{"per_edge": [...]}` with one
//! entry per edge in input order.

use std::fs;
use std::path::{Path, PathBuf};

use consensus_core::{CouplingAssignment, CouplingFunction, CouplingSpec, Graph, System, SCHEMA};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl GraphJson {
    pub fn from_graph(g: &Graph) -> Self {
        GraphJson {
            n: g.node_count(),
            edges: g.edges().iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
        }
    }

    pub fn to_graph(&self) -> CliResult<Graph> {
        let mut pairs = Vec::with_capacity(self.edges.len());
        for &[a, b] in &self.edges {
            if a == 0 || b == 0 || a > self.n || b > self.n {
                return Err(CliError::Schema(format!(
                    "edge [{a}, {b}] out of range for n = {} (labels are 1-based)",
                    self.n
                )));
            }
            pairs.push((a - 1, b - 1));
        }
        Graph::new(self.n, &pairs).map_err(|e| CliError::Schema(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    Inline(GraphJson),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingJson {
    PerEdge { per_edge: Vec<CouplingSpec> },
    Uniform(CouplingSpec),
}

impl CouplingJson {
    pub fn to_assignment(&self, edge_count: usize) -> CliResult<CouplingAssignment> {
        let build =
            |s: &CouplingSpec| CouplingFunction::try_from(s.clone()).map_err(|e| CliError::Schema(e.to_string()));
        match self {
            CouplingJson::Uniform(s) => Ok(CouplingAssignment::Uniform(build(s)?)),
            CouplingJson::PerEdge { per_edge } => {
                if per_edge.len() != edge_count {
                    return Err(CliError::Schema(format!(
                        "per_edge lists {} couplings for {edge_count} edges",
                        per_edge.len()
                    )));
                }
                Ok(CouplingAssignment::PerEdge(
                    per_edge.iter().map(build).collect::<CliResult<_>>()?,
                ))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub graph: GraphSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingJson>,
    /// Initial state for `simulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// States for `classify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<Vec<f64>>>,
}

impl JobSpec {
    /// Reads a spec from a file, from stdin when `source` is `-`, or parses
    /// `source` itself when it starts with `{`.
    pub fn load(source: &str) -> CliResult<JobSpec> {
        let (text, base) = if source.trim_start().starts_with('{') {
            (source.to_string(), None)
        } else if source == "-" {
            (std::io::read_to_string(std::io::stdin())?, None)
        } else {
            let path = Path::new(source);
            (fs::read_to_string(path)?, path.parent().map(Path::to_path_buf))
        };
        let mut spec = JobSpec::parse(&text)?;
        if let (GraphSource::File(p), Some(base)) = (&spec.graph, base) {
            if p.is_relative() {
                spec.graph = GraphSource::File(base.join(p));
            }
        }
        Ok(spec)
    }

    pub fn parse(text: &str) -> CliResult<JobSpec> {
        let spec: JobSpec = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        if let Some(s) = &spec.schema {
            if s != SCHEMA {
                return Err(CliError::Schema(format!(
                    "unsupported schema '{s}', expected '{SCHEMA}'"
                )));
            }
        }
        Ok(spec)
    }

    pub fn graph(&self) -> CliResult<Graph> {
        match &self.graph {
            GraphSource::Inline(g) => g.to_graph(),
            GraphSource::File(p) => {
                let text = fs::read_to_string(p)?;
                let g: GraphJson =
                    serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", p.display())))?;
                g.to_graph()
            }
        }
    }

    /// Graph that must be connected.
    pub fn connected_graph(&self) -> CliResult<Graph> {
        let g = self.graph()?;
        let c = g.component_count();
        if c != 1 {
            return Err(CliError::Disconnected(c));
        }
        Ok(g)
    }

    pub fn system(&self) -> CliResult<System> {
        let g = self.connected_graph()?;
        let coupling = self
            .coupling
            .as_ref()
            .ok_or_else(|| CliError::Schema("missing 'coupling'".to_string()))?
            .to_assignment(g.edge_count())?;
        Ok(System::new(g, coupling)?)
    }

    pub fn check_state(&self, x: &[f64], n: usize, what: &str) -> CliResult<()> {
        if x.len() != n {
            return Err(CliError::Schema(format!(
                "{what} has {} entries for {n} nodes",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Schema(format!("{what} has a non-finite entry")));
        }
        Ok(())
    }
}
