//! File formats, synthetic data and the command-line front end for
//! [`lat_core`].

pub mod bench;
pub mod cli;
pub mod config;
mod error;
pub mod io;
pub mod toy;

pub use error::{Error, Result};
