//! Anisotropic α-stable Lévy processes: Lévy–Khintchine exponent, densities,
//! Riesz-type potentials, Kato-type regularity checks, and Monte Carlo
//! estimates of harmonic measure and Green functions of balls.

pub mod error;
pub mod catalog;
pub mod exponent;
pub mod geometry;
pub mod kato;
pub mod lab;
pub mod measure;
pub mod model;
pub mod potential;
pub mod quad;
pub mod simulator;
pub mod stats;

#[cfg(test)]
mod proptests;

pub use error::{Error, Result};
pub use measure::{SpectralMeasure, SpectralSpec};
pub use model::{LevyMeasureView, ModelSpec, StableModel};
pub use exponent::{DensityGrid, ExponentEvaluator};
pub use potential::PotentialProfile;
pub use kato::{classify, ConditionReport, Verdict};
pub use simulator::{ExitBatch, Simulator, SimulatorConfig, SmallJumps};
