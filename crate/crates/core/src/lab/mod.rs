//! Simulation-level verdicts: empirical Harnack ratios of harmonic measure,
//! the Poisson kernel through the Ikeda–Watanabe formula, Green function
//! comparisons, and closed-form oracles for the rotation-invariant process.

mod closure;
mod green;
mod harnack;
mod iw;
mod oracle;

pub use closure::{oracle_closure, ClosureCell, ClosureConfig, ClosureReport};
pub use green::{
    exit_time_profile, green_ratio_test, window_ratios, ExitTimeProfile, GreenCell, GreenComparison, GreenConfig,
};
pub use harnack::{
    harnack_from_batches, harnack_test, pairwise_sup, HarnackConfig, HarnackLevel, HarnackReport,
    HarnackVerdict,
};
pub use iw::{iw_cell_masses, iw_total_mass, nu_sector_mass, poisson_kernel_iw, IwEstimate};
pub use oracle::{
    ball_exit_time, ball_green, isotropic_model, isotropic_uniform_mass, IsotropicPoisson,
};
