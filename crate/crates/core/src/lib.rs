//! Random linear-Gaussian structural causal models.
//!
//! The crate samples static SCMs and structural vector autoregressions over
//! random graphs, simulates data from them, and scores the data with
//! var-/R²-sortability metrics. Everything here is `no_std` + `alloc`; file
//! formats, the CLI and the experiment drivers live in the `scmgen` crate.
//!
//! Node indices always follow a topological order of the contemporaneous
//! graph: an edge `j -> i` with lag 0 requires `j < i`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod draws;
pub mod error;
pub mod graph;
pub mod regression;
pub mod rng;
pub mod scm;
pub mod simulate;
pub mod sortability;
pub mod stats;
pub mod svar;

pub use error::{Error, Result};
pub use graph::{Adjacency, Dag, TsGraph};
pub use scm::{Method, Scm};
pub use simulate::{DataKind, Dataset, Init};
pub use sortability::{MetricFlag, MetricKind, MetricVector, SortabilityResult};
pub use svar::{ReducedForm, Svar};
