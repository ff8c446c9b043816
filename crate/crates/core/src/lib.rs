//! Spectral solver and numerical verification toolkit for the spatially
//! homogeneous fractional Kramers-Fokker-Planck equation
//!
//! ```text
//! du/dt + <v>^gamma ((1 - Delta_v)^s + <v>^{2s}) u = f,   0 < s <= 1,  gamma + 2s > 0,
//! ```
//!
//! posed on a periodic velocity box `[-L, L)^d`.

pub mod error;
pub mod grid;
pub mod norms;
pub mod operators;
pub mod solver;
pub mod verify;

pub use error::{KfpError, Result};
pub use grid::{inner_product, l2_norm, make_grid, to_physical, to_spectral, Field, GridSpec, SpectralField};
pub use norms::{
    fit_gevrey, norm_report, weighted_l2, weighted_sobolev, GevreyFit, NormFlag, NormReport, Verdict,
};
pub use operators::{
    apply_kfp, bessel_power, bracket_weight, commutator_bessel_weight, symbol_bound, KfpOperator, OperatorParams,
};
pub use solver::{
    dense_oracle, evolve, stability_dt, InitialDataSpec, Method, Sample, SolverConfig, SourceSpec, StepSize,
    Trajectory,
};
pub use verify::{CheckResult, TestFamily, VerifyConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
