//! File formats, the command line and Monte-Carlo experiments built on
//! `scmgen-core`.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod io;

pub use error::{Error, Result};
