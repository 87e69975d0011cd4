//! Interdiction of consensus dynamics and of effective resistance.
//!
//! Node ids are 0-based throughout.

pub mod cip;
pub mod erip;
pub mod error;
pub mod graph;
pub mod harness;
pub mod instances;
pub mod io;
pub mod mincut;
pub mod oracle;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{EdgeCut, StochasticMatrix, ValueMode, WeightedGraph};
