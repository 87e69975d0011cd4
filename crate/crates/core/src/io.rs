//! JSON graph files.
//!
//! ```json
//! {"n": 3, "mode": "stochastic", "edges": [[0, 1, 0.25]], "s": 0, "t": 2, "diag": [0.75, 0.75, 1.0]}
//! ```
//!
//! `mode` is `resistance`, `conductance` or `stochastic`. For stochastic
//! files the edge values are the off-diagonal entries; `diag` is optional
//! and, when given, must complete every row to one.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{validate_stochastic, StochasticMatrix, ValueMode, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileMode {
    Resistance,
    Conductance,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub mode: FileMode,
    pub edges: Vec<(usize, usize, f64)>,
    pub s: usize,
    pub t: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag: Option<Vec<f64>>,
}

impl GraphFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph files always serialize")
    }

    pub fn from_graph(g: &WeightedGraph) -> Self {
        GraphFile {
            n: g.n(),
            mode: match g.mode() {
                ValueMode::Resistance => FileMode::Resistance,
                ValueMode::Conductance => FileMode::Conductance,
            },
            edges: g.edges().iter().map(|e| (e.u, e.v, e.value)).collect(),
            s: g.source(),
            t: g.sink(),
            diag: None,
        }
    }

    pub fn from_stochastic(p: &StochasticMatrix, s: usize, t: usize) -> Self {
        GraphFile {
            n: p.n(),
            mode: FileMode::Stochastic,
            edges: p.edges().iter().map(|&(i, j)| (i, j, p.get(i, j))).collect(),
            s,
            t,
            diag: Some((0..p.n()).map(|i| p.get(i, i)).collect()),
        }
    }

    /// Weighted graph view; stochastic entries are read as conductances.
    pub fn to_graph(&self) -> Result<WeightedGraph> {
        let mode = match self.mode {
            FileMode::Resistance => ValueMode::Resistance,
            FileMode::Conductance | FileMode::Stochastic => ValueMode::Conductance,
        };
        WeightedGraph::new(self.n, mode, self.edges.iter().copied(), self.s, self.t)
    }

    /// Stochastic view. Conductance files are accepted when their values
    /// form a valid stochastic matrix; resistance files are rejected.
    pub fn to_stochastic(&self) -> Result<StochasticMatrix> {
        match self.mode {
            FileMode::Resistance => {
                return Err(Error::InvalidInput(
                    "a resistance graph is not a stochastic matrix".into(),
                ))
            }
            FileMode::Conductance | FileMode::Stochastic => {}
        }
        // reuse graph validation for ids, duplicates and values
        self.to_graph()?;
        let Some(diag) = &self.diag else {
            return StochasticMatrix::from_conductances(self.n, &self.edges);
        };
        if diag.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: diag.len(),
            });
        }
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag));
        for &(i, j, p) in &self.edges {
            m[(i, j)] = p;
            m[(j, i)] = p;
        }
        validate_stochastic(m)
    }
}
