//! Shared fixtures for the benchmarks.

use kfp_core::{make_grid, Field, GridSpec};

/// Gaussian `exp(-|v|^2 / 2)` on `[-12, 12)^dim` with `n` points per axis.
pub fn gaussian_fixture(dim: usize, n: usize) -> Field {
    let grid: GridSpec = make_grid(dim, 12.0, n).expect("fixture grid is valid");
    Field::from_real_fn(&grid, |v| (-v.iter().map(|x| x * x).sum::<f64>() / 2.0).exp())
}
