//! Pseudo-spectral Benjamin-Ono simulation on a periodic grid, with the
//! weighted virial diagnostics and inequality checks built on top of it.
//!
//! The `bo` binary drives [`experiment`]: scenario runs, lemma reports,
//! record analysis and the soliton profile check.

pub mod config;
pub mod error;
pub mod experiment;
pub mod lemmas;
pub mod records;
pub mod soliton;
pub mod solver;
pub mod spectral;
pub mod virial;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use spectral::{Field, Grid};
