//! File formats, manifests and the command-line front end for `linda-core`.

pub mod cli;
pub mod commands;
pub mod error;
pub mod formula;
pub mod io;
pub mod manifest;
pub mod number;

pub use error::{Error, Result};
