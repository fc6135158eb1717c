//! File formats, parallel drivers and the command-line interface around
//! [`reqa_core`].

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod embed;
pub mod error;
pub mod evaluate;
pub mod nq;
pub mod pipeline;
pub mod report;
pub mod squad;
pub mod vectors;

pub use error::{Error, Result};
