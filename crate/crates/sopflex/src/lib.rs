//! File formats, the parallel daily case study, reports and the `sopflex`
//! command line on top of [`sopflex_core`].

pub mod cli;
mod error;
pub mod harness;
pub mod io;
pub mod profiles;
pub mod report;
pub mod svg;

pub use error::{Error, Result};
pub use sopflex_core as core;
