//! Uniform periodic truncation of velocity space.
//!
//! The box `[-L, L)^d` is sampled at `v_j = -L + j h`, `h = 2L/N`. Spectral
//! coefficients use the synthesis convention
//!
//! ```text
//! u(v) = sum_k c_k exp(i xi_k . v),    xi_k = pi k / L,   k in [-N/2, N/2)^d
//! ```
//!
//! so the forward transform carries the `1/N^d` factor and a constant field
//! has `c_0` equal to its value. Coefficients are stored in FFT order: index
//! `j` along an axis holds wavenumber `j` for `j < N/2` and `j - N` otherwise.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{KfpError, Result};

struct GridTables {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// |v|^2 at every sample point.
    v_sq: Vec<f64>,
    /// |xi_k|^2 at every coefficient slot.
    xi_sq: Vec<f64>,
}

/// Shape of the periodic velocity grid. Cheap to clone; transform plans and
/// coordinate tables are shared.
#[derive(Clone)]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    n: usize,
    tables: Arc<GridTables>,
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("dim", &self.dim)
            .field("half_width", &self.half_width)
            .field("n_per_axis", &self.n)
            .finish()
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && self.half_width.to_bits() == other.half_width.to_bits()
    }
}

/// Builds a grid on `[-L, L)^dim` with `N` points per axis.
pub fn make_grid(dim: usize, half_width: f64, n: usize) -> Result<GridSpec> {
    GridSpec::new(dim, half_width, n)
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(KfpError::InvalidGrid(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(KfpError::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(KfpError::InvalidGrid(format!(
                "points per axis must be even and at least 8, got {n}"
            )));
        }
        let total = n.pow(dim as u32);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        let h = 2.0 * half_width / n as f64;
        let axis_v: Vec<f64> = (0..n).map(|j| -half_width + j as f64 * h).collect();
        let axis_xi: Vec<f64> = (0..n)
            .map(|j| std::f64::consts::PI * wavenumber_of(j, n) as f64 / half_width)
            .collect();

        let mut v_sq = Vec::with_capacity(total);
        let mut xi_sq = Vec::with_capacity(total);
        for idx in 0..total {
            let mut vs = 0.0;
            let mut xs = 0.0;
            for axis in 0..dim {
                let j = axis_index(idx, axis, dim, n);
                vs += axis_v[j] * axis_v[j];
                xs += axis_xi[j] * axis_xi[j];
            }
            v_sq.push(vs);
            xi_sq.push(xs);
        }

        Ok(Self {
            dim,
            half_width,
            n,
            tables: Arc::new(GridTables { forward, inverse, v_sq, xi_sq }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn total_points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Grid spacing `h = 2L/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Quadrature weight `h^d` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Volume `(2L)^d` of the periodic box.
    pub fn box_volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Largest per-axis frequency magnitude, `pi (N/2) / L`.
    pub fn xi_axis_max(&self) -> f64 {
        std::f64::consts::PI * (self.n / 2) as f64 / self.half_width
    }

    /// Largest `|xi|` over all modes, `sqrt(d)` times the per-axis maximum.
    pub fn xi_max(&self) -> f64 {
        (self.dim as f64).sqrt() * self.xi_axis_max()
    }

    /// Largest `|v|` over all grid points (the corner `(-L, ..., -L)`).
    pub fn v_max(&self) -> f64 {
        (self.dim as f64).sqrt() * self.half_width
    }

    /// Physical frequency `pi k / L` of integer wavenumber `k`.
    pub fn frequency(&self, k: i64) -> f64 {
        std::f64::consts::PI * k as f64 / self.half_width
    }

    /// Index along `axis` of the flat (lexicographic, last axis fastest) index.
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        axis_index(idx, axis, self.dim, self.n)
    }

    /// Coordinates of grid point `idx`; unused trailing axes are zero.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let mut v = [0.0; 3];
        for (axis, slot) in v.iter_mut().enumerate().take(self.dim) {
            *slot = -self.half_width + self.axis_index(idx, axis) as f64 * h;
        }
        v
    }

    /// Signed wavenumber vector of coefficient slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> [i64; 3] {
        let mut k = [0i64; 3];
        for (axis, slot) in k.iter_mut().enumerate().take(self.dim) {
            *slot = wavenumber_of(self.axis_index(idx, axis), self.n);
        }
        k
    }

    /// Flat slot of a signed wavenumber vector (components taken mod N).
    pub fn slot_of(&self, k: &[i64]) -> usize {
        let n = self.n as i64;
        k.iter()
            .take(self.dim)
            .fold(0usize, |acc, &kk| acc * self.n + kk.rem_euclid(n) as usize)
    }

    /// `|v|^2` at every grid point.
    pub fn v_sq(&self) -> &[f64] {
        &self.tables.v_sq
    }

    /// `|xi_k|^2` at every coefficient slot.
    pub fn xi_sq(&self) -> &[f64] {
        &self.tables.xi_sq
    }

    /// True if the slot lies on the outermost wavenumber shell of some axis.
    pub fn is_edge_mode(&self, idx: usize) -> bool {
        let half = (self.n / 2) as i64;
        self.wavenumber(idx)[..self.dim]
            .iter()
            .any(|&k| k == -half || k == half - 1)
    }

    /// True if the point touches the periodic boundary `v_a = -L` on some axis.
    pub fn is_boundary_point(&self, idx: usize) -> bool {
        (0..self.dim).any(|axis| self.axis_index(idx, axis) == 0)
    }

    fn parity(&self, idx: usize) -> bool {
        (0..self.dim).map(|axis| self.axis_index(idx, axis)).sum::<usize>() % 2 == 1
    }

    fn transform_in_place(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.tables.inverse } else { &self.tables.forward };
        let n = self.n;
        let total = data.len();
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                for chunk in data.chunks_exact_mut(n) {
                    plan.process_with_scratch(chunk, &mut scratch);
                }
                continue;
            }
            let block = n * stride;
            for b in 0..total / block {
                for inner in 0..stride {
                    let base = b * block + inner;
                    for (j, x) in line.iter_mut().enumerate() {
                        *x = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, x) in line.iter().enumerate() {
                        data[base + j * stride] = *x;
                    }
                }
            }
        }
    }
}

fn wavenumber_of(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn axis_index(idx: usize, axis: usize, dim: usize, n: usize) -> usize {
    (idx / n.pow((dim - 1 - axis) as u32)) % n
}

/// Complex samples of a state on its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: &GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.total_points() {
            return Err(KfpError::LengthMismatch {
                expected: grid.total_points(),
                got: values.len(),
            });
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.total_points()],
        }
    }

    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.total_points())
            .map(|idx| f(&grid.point(idx)[..grid.dim()]))
            .collect();
        Self { grid: grid.clone(), values }
    }

    pub fn from_real_fn(grid: &GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |v| Complex64::new(f(v), 0.0))
    }

    /// Unit impulse at flat index `idx`.
    pub fn impulse(grid: &GridSpec, idx: usize) -> Self {
        let mut u = Self::zeros(grid);
        u.values[idx] = Complex64::new(1.0, 0.0);
        u
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| z * a).collect(),
        }
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &Field) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + y * a)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Self {
        self.add_scaled(-1.0, other)
    }

    /// Pointwise product with real samples of the same length.
    pub fn mul_real(&self, weights: &[f64]) -> Self {
        debug_assert_eq!(weights.len(), self.values.len());
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(weights).map(|(z, w)| z * *w).collect(),
        }
    }

    /// Pointwise product with another field.
    pub fn mul(&self, other: &Field) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }
}

/// Fourier coefficients of a field, stored in FFT slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: &GridSpec, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.total_points() {
            return Err(KfpError::LengthMismatch {
                expected: grid.total_points(),
                got: coefficients.len(),
            });
        }
        Ok(Self { grid: grid.clone(), coefficients })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    /// Coefficient of the signed wavenumber vector `k`.
    pub fn coefficient(&self, k: &[i64]) -> Complex64 {
        self.coefficients[self.grid.slot_of(k)]
    }

    /// `sqrt((2L)^d sum |c_k|^2)`, equal to the quadrature L2 norm of the
    /// synthesized field.
    pub fn norm(&self) -> f64 {
        let sum: f64 = self.coefficients.iter().map(|c| c.norm_sqr()).sum();
        (self.grid.box_volume() * sum).sqrt()
    }

    /// Multiplies every coefficient by `symbol(|xi_k|^2)`.
    pub fn apply_symbol(&mut self, symbol: impl Fn(f64) -> f64) {
        for (c, &xs) in self.coefficients.iter_mut().zip(self.grid.xi_sq()) {
            *c *= symbol(xs);
        }
    }

    pub fn to_physical(&self) -> Field {
        to_physical(self)
    }
}

/// Forward transform: samples to coefficients of `exp(i xi_k . v)`.
pub fn to_spectral(u: &Field) -> SpectralField {
    let grid = &u.grid;
    let mut data = u.values.clone();
    grid.transform_in_place(&mut data, false);
    let scale = 1.0 / grid.total_points() as f64;
    for (idx, c) in data.iter_mut().enumerate() {
        // exp(-i xi_k v_j) = (-1)^k exp(-2 pi i k j / N) because v_0 = -L
        *c *= if grid.parity(idx) { -scale } else { scale };
    }
    SpectralField { grid: grid.clone(), coefficients: data }
}

/// Inverse transform: synthesizes samples from coefficients.
pub fn to_physical(c: &SpectralField) -> Field {
    let grid = &c.grid;
    let mut data = c.coefficients.clone();
    for (idx, z) in data.iter_mut().enumerate() {
        if grid.parity(idx) {
            *z = -*z;
        }
    }
    grid.transform_in_place(&mut data, true);
    Field { grid: grid.clone(), values: data }
}

/// Rectangle-rule L2 norm `sqrt(h^d sum |u_j|^2)`.
pub fn l2_norm(u: &Field) -> f64 {
    let sum: f64 = u.values.iter().map(|z| z.norm_sqr()).sum();
    (u.grid.cell_volume() * sum).sqrt()
}

/// Rectangle-rule inner product `h^d sum u_j conj(w_j)`.
pub fn inner_product(u: &Field, w: &Field) -> Result<Complex64> {
    if u.grid != w.grid {
        return Err(KfpError::GridMismatch);
    }
    let sum: Complex64 = u.values.iter().zip(&w.values).map(|(a, b)| a * b.conj()).sum();
    Ok(sum * u.grid.cell_volume())
}
