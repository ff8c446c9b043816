//! Dense-matrix oracle for small grids: the generator is assembled column by
//! column from unit impulses and `exp(-tA)` is formed explicitly.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{KfpError, Result};
use crate::grid::{Field, GridSpec};
use crate::operators::{KfpOperator, OperatorParams};

/// Largest grid the dense oracle will assemble.
pub const MAX_DENSE_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpMethod {
    /// Symmetrize `A = W S W^{-1}` with `W = <v>^{gamma/2}` and diagonalize `S`.
    SymmetricEigen,
    /// Scaling and squaring with a truncated Taylor series.
    TaylorSquaring,
}

fn guard(grid: &GridSpec) -> Result<()> {
    if grid.total_points() > MAX_DENSE_POINTS {
        return Err(KfpError::OracleTooLarge {
            limit: MAX_DENSE_POINTS,
            points: grid.total_points(),
        });
    }
    Ok(())
}

/// Real matrix of a real-preserving linear map on fields, built from impulses.
pub fn assemble_dense(grid: &GridSpec, op: impl Fn(&Field) -> Field) -> Result<DMatrix<f64>> {
    guard(grid)?;
    let n = grid.total_points();
    let mut m = DMatrix::zeros(n, n);
    for col in 0..n {
        let image = op(&Field::impulse(grid, col));
        for (row, z) in image.values().iter().enumerate() {
            m[(row, col)] = z.re;
        }
    }
    Ok(m)
}

/// `exp(-t M)` by scaling and squaring: `t M` is scaled by `2^-j` until its
/// 1-norm is at most 1/2, a degree-18 Taylor polynomial is evaluated, and
/// the result is squared `j` times.
pub fn expm_neg(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let x = m * (-t);
    let norm1 = (0..n)
        .map(|c| x.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    if norm1 > 0.5 {
        squarings = (norm1 / 0.5).log2().ceil() as u32;
    }
    let scaled = x / 2f64.powi(squarings as i32);
    let identity = DMatrix::<f64>::identity(n, n);
    // Horner form of sum_{i<=18} X^i / i!
    let degree = 18;
    let mut acc = identity.clone();
    for i in (1..=degree).rev() {
        acc = &identity + (&scaled * acc) / i as f64;
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    acc
}

fn apply_real(m: &DMatrix<f64>, u: &Field) -> Field {
    let re = DVector::from_iterator(u.len(), u.values().iter().map(|z| z.re));
    let im = DVector::from_iterator(u.len(), u.values().iter().map(|z| z.im));
    let (re, im) = (m * re, m * im);
    let values = re.iter().zip(im.iter()).map(|(a, b)| Complex64::new(*a, *b)).collect();
    Field::new(u.grid(), values).expect("dense product keeps the grid size")
}

/// Dense representation of the generator together with what the eigen route
/// needs.
#[derive(Debug, Clone)]
pub struct DenseGenerator {
    grid: GridSpec,
    matrix: DMatrix<f64>,
    half_weight: Vec<f64>,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl DenseGenerator {
    pub fn new(grid: &GridSpec, p: &OperatorParams) -> Result<Self> {
        guard(grid)?;
        let op = KfpOperator::new(grid, *p);
        let matrix = assemble_dense(grid, |u| op.apply(u))?;
        let fractional = assemble_dense(grid, |u| op.apply_fractional(u))?;
        let n = grid.total_points();
        let half_weight: Vec<f64> = op.weight_gamma().iter().map(|w| w.sqrt()).collect();
        // S = W^{1/2} ((1-Delta)^s + <v>^{2s}) W^{1/2} is symmetric
        let mut sym = fractional;
        for i in 0..n {
            sym[(i, i)] += op.weight_2s()[i];
        }
        for i in 0..n {
            for j in 0..n {
                sym[(i, j)] *= half_weight[i] * half_weight[j];
            }
        }
        let sym = (&sym + sym.transpose()) * 0.5;
        let eigen = SymmetricEigen::new(sym);
        Ok(Self { grid: grid.clone(), matrix, half_weight, eigen })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Eigenvalues of `A` (real, by similarity to a symmetric matrix).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.eigen.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `exp(-t A) u0`.
    pub fn propagate(&self, u0: &Field, t: f64, method: ExpMethod) -> Result<Field> {
        if u0.grid() != &self.grid {
            return Err(KfpError::GridMismatch);
        }
        if t == 0.0 {
            return Ok(u0.clone());
        }
        match method {
            ExpMethod::TaylorSquaring => Ok(apply_real(&expm_neg(&self.matrix, t), u0)),
            ExpMethod::SymmetricEigen => {
                let q = &self.eigen.eigenvectors;
                let decay: Vec<f64> =
                    self.eigen.eigenvalues.iter().map(|l| (-t * l).exp()).collect();
                let n = self.grid.total_points();
                let mut e = q.clone();
                for j in 0..n {
                    for i in 0..n {
                        e[(i, j)] *= decay[j];
                    }
                }
                let mut prop = e * q.transpose();
                for i in 0..n {
                    for j in 0..n {
                        prop[(i, j)] *= self.half_weight[i] / self.half_weight[j];
                    }
                }
                Ok(apply_real(&prop, u0))
            }
        }
    }
}

/// `exp(-t A) u0` on a small grid via the symmetric eigen route.
pub fn dense_oracle(u0: &Field, p: &OperatorParams, grid: &GridSpec, t: f64) -> Result<Field> {
    if u0.grid() != grid {
        return Err(KfpError::GridMismatch);
    }
    guard(grid)?;
    if t == 0.0 {
        return Ok(u0.clone());
    }
    DenseGenerator::new(grid, p)?.propagate(u0, t, ExpMethod::SymmetricEigen)
}
