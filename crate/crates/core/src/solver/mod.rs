//! Time integration of `du/dt = -A u + f(t)`.

mod dense;
mod stepping;

pub use dense::{assemble_dense, dense_oracle, expm_neg, DenseGenerator, ExpMethod, MAX_DENSE_POINTS};
pub use stepping::{
    gmres, step_backward_euler, step_rk4, FourierPreconditioner, KrylovSettings, KrylovStats,
};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KfpError, Result};
use crate::grid::{inner_product, l2_norm, to_physical, Field, GridSpec, SpectralField};
use crate::norms::{norm_report, weighted_l2, weighted_sobolev, NormReport};
use crate::operators::{symbol_bound, KfpOperator, OperatorParams};

/// Source term `f(t, v)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    #[default]
    Zero,
    /// `amplitude * exp(-time_decay t) * exp(-|v|^2 / (2 width^2))`
    Gaussian { amplitude: f64, width: f64, time_decay: f64 },
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SourceSpec::Zero => Ok(()),
            SourceSpec::Gaussian { amplitude, width, time_decay } => {
                if !amplitude.is_finite() {
                    return Err(KfpError::InvalidArgument("source amplitude must be finite".into()));
                }
                if !(width > 0.0 && width.is_finite()) {
                    return Err(KfpError::InvalidArgument("source width must be positive".into()));
                }
                if !(time_decay >= 0.0 && time_decay.is_finite()) {
                    return Err(KfpError::InvalidArgument(
                        "source time_decay must be nonnegative".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Samples the spatial profile once for repeated evaluation.
    pub fn bind(&self, grid: &GridSpec) -> BoundSource {
        match *self {
            SourceSpec::Zero => BoundSource { profile: None, time_decay: 0.0 },
            SourceSpec::Gaussian { amplitude, width, time_decay } => {
                let profile = Field::from_real_fn(grid, |v| {
                    let r2: f64 = v.iter().map(|x| x * x).sum();
                    amplitude * (-r2 / (2.0 * width * width)).exp()
                });
                BoundSource { profile: Some(profile), time_decay }
            }
        }
    }
}

/// A source sampled on a grid.
#[derive(Debug, Clone)]
pub struct BoundSource {
    profile: Option<Field>,
    time_decay: f64,
}

impl BoundSource {
    /// `f(t)`, or `None` for the zero source.
    pub fn at(&self, t: f64) -> Option<Field> {
        self.profile
            .as_ref()
            .map(|p| p.scaled(Complex64::new((-self.time_decay * t).exp(), 0.0)))
    }

    /// `df/dt`.
    pub fn derivative_at(&self, t: f64) -> Option<Field> {
        self.at(t).map(|f| f.scaled(Complex64::new(-self.time_decay, 0.0)))
    }
}

/// Initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDataSpec {
    Zero,
    /// `amplitude * exp(-|v|^2 / (2 width^2))`
    Gaussian { amplitude: f64, width: f64 },
    /// Real field with `|c_k| = (1 + |xi_k|^2)^{-(d/2 + epsilon)/4}`, uniform
    /// random phases and unit L2 norm.
    RoughRandom { epsilon: f64, seed: u64 },
}

impl InitialDataSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialDataSpec::Zero => Ok(()),
            InitialDataSpec::Gaussian { amplitude, width } => {
                if !amplitude.is_finite() || !(width > 0.0 && width.is_finite()) {
                    return Err(KfpError::InvalidArgument(
                        "gaussian initial data needs finite amplitude and positive width".into(),
                    ));
                }
                Ok(())
            }
            InitialDataSpec::RoughRandom { epsilon, .. } => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(KfpError::InvalidArgument(format!(
                        "rough data decay exponent must be positive, got {epsilon}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<Field> {
        self.validate()?;
        Ok(match *self {
            InitialDataSpec::Zero => Field::zeros(grid),
            InitialDataSpec::Gaussian { amplitude, width } => Field::from_real_fn(grid, |v| {
                let r2: f64 = v.iter().map(|x| x * x).sum();
                amplitude * (-r2 / (2.0 * width * width)).exp()
            }),
            InitialDataSpec::RoughRandom { epsilon, seed } => rough_random(grid, epsilon, seed),
        })
    }
}

/// Hermitian random spectrum with algebraic decay, synthesized and
/// normalized to unit L2 norm.
pub fn rough_random(grid: &GridSpec, epsilon: f64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.total_points();
    let exponent = -(grid.dim() as f64 / 2.0 + epsilon) / 4.0;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    let mut assigned = vec![false; n];
    for idx in 0..n {
        if assigned[idx] {
            continue;
        }
        let k = grid.wavenumber(idx);
        let neg: Vec<i64> = k[..grid.dim()].iter().map(|x| -x).collect();
        let partner = grid.slot_of(&neg);
        let amp = (1.0 + grid.xi_sq()[idx]).powf(exponent);
        if partner == idx {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            coeffs[idx] = Complex64::new(sign * amp, 0.0);
        } else {
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            coeffs[idx] = Complex64::from_polar(amp, phase);
            coeffs[partner] = coeffs[idx].conj();
            assigned[partner] = true;
        }
        assigned[idx] = true;
    }
    let spectrum = SpectralField::new(grid, coeffs).expect("coefficient count matches grid");
    let mut u = to_physical(&spectrum);
    for z in u.values_mut() {
        z.im = 0.0;
    }
    let norm = l2_norm(&u);
    u.scaled(Complex64::new(1.0 / norm, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
    BackwardEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSize {
    Fixed(f64),
    Auto(AutoTag),
}

/// Literal `"auto"` in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

impl StepSize {
    pub const AUTO: StepSize = StepSize::Auto(AutoTag::Auto);
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub dt: StepSize,
    pub t_end: f64,
    /// Strictly increasing times in `(0, t_end]`.
    pub sample_times: Vec<f64>,
    pub krylov: KrylovSettings,
}

/// `count` log-spaced times from `t_end / 100` to `t_end`.
pub fn default_sample_times(t_end: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![t_end];
    }
    let lo = (t_end / 100.0).ln();
    let hi = t_end.ln();
    (0..count)
        .map(|i| {
            if i + 1 == count {
                t_end
            } else {
                (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

impl SolverConfig {
    pub fn new(method: Method, dt: StepSize, t_end: f64, sample_times: Vec<f64>) -> Result<Self> {
        let cfg = Self { method, dt, t_end, sample_times, krylov: KrylovSettings::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(KfpError::InvalidArgument(format!("t_end must be positive, got {}", self.t_end)));
        }
        if let StepSize::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(KfpError::InvalidArgument(format!("dt must be positive, got {dt}")));
            }
        }
        if self.sample_times.is_empty() {
            return Err(KfpError::InvalidArgument("sample_times must be nonempty".into()));
        }
        let mut prev = 0.0;
        for &t in &self.sample_times {
            if !(t > prev) || t > self.t_end {
                return Err(KfpError::InvalidArgument(format!(
                    "sample times must increase strictly within (0, t_end], offending value {t}"
                )));
            }
            prev = t;
        }
        if !(self.krylov.tol > 0.0) || self.krylov.max_iter == 0 {
            return Err(KfpError::InvalidArgument("krylov tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }

    pub fn resolved_dt(&self, p: &OperatorParams, grid: &GridSpec) -> f64 {
        match self.dt {
            StepSize::Fixed(dt) => dt,
            StepSize::Auto(_) => stability_dt(p, grid),
        }
    }
}

/// Explicit step limit `2.5 / Lambda`, inside the RK4 real-axis stability
/// interval of about 2.785.
pub fn stability_dt(p: &OperatorParams, grid: &GridSpec) -> f64 {
    2.5 / symbol_bound(p, grid)
}

/// Residual of the discrete energy identity over the last step before a
/// sample: `|Delta ||u||^2 - Q| / dt`, where `Q` is the fourth-order
/// Hermite quadrature of `d/dt ||u||^2 = -2 Re(Au, u) + 2 Re(f, u)` over the
/// step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyResidual {
    pub dt: f64,
    pub residual: f64,
}

/// One recorded state.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub field: Field,
    pub report: NormReport,
    /// Running `int_0^t ||u||^2_{H^s_{gamma/2}}`.
    pub dissipation_h: f64,
    /// Running `int_0^t ||u||^2_{2, gamma/2 + s}`.
    pub dissipation_w: f64,
    /// Running `int_0^t ||f||^2`.
    pub source_energy: f64,
    /// `Re (A u, u)` at this sample.
    pub dissipation_rate: f64,
    pub energy_residual: Option<EnergyResidual>,
    /// Krylov iterations spent since the previous sample (implicit method).
    pub krylov_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub params: OperatorParams,
    pub source: SourceSpec,
    pub method: Method,
    pub dt: f64,
    pub k_max: usize,
    /// First entry is `t = 0`.
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn initial(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds the initial sample")
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|s| s.field.is_zero())
    }
}

struct RateTerms {
    h_sq: f64,
    w_sq: f64,
    f_sq: f64,
    /// `d/dt ||u||^2`
    rate: f64,
    /// `d^2/dt^2 ||u||^2`
    rate_prime: f64,
    dissipation: f64,
}

fn rate_terms(u: &Field, t: f64, op: &KfpOperator, source: &BoundSource) -> Result<RateTerms> {
    let p = op.params();
    let au = op.apply(u);
    let f = source.at(t);
    let dissipation = inner_product(&au, u)?.re;
    let mut du = au.scaled(Complex64::new(-1.0, 0.0));
    let mut f_sq = 0.0;
    let mut forcing = 0.0;
    if let Some(f) = &f {
        du = du.add_scaled(1.0, f);
        f_sq = l2_norm(f).powi(2);
        forcing = inner_product(f, u)?.re;
    }
    // u'' = -A u' + f'
    let mut ddu = op.apply(&du).scaled(Complex64::new(-1.0, 0.0));
    if let Some(fp) = source.derivative_at(t) {
        ddu = ddu.add_scaled(1.0, &fp);
    }
    let rate = -2.0 * dissipation + 2.0 * forcing;
    let rate_prime = 2.0 * inner_product(&ddu, u)?.re + 2.0 * l2_norm(&du).powi(2);
    Ok(RateTerms {
        h_sq: weighted_sobolev(u, p.s(), p.gamma() / 2.0).powi(2),
        w_sq: weighted_l2(u, p.weight_exponent()).powi(2),
        f_sq,
        rate,
        rate_prime,
        dissipation,
    })
}

/// Integrates from `u0` through every sample time and records norms.
pub fn evolve_field(
    u0: Field,
    config: &SolverConfig,
    p: &OperatorParams,
    source: &SourceSpec,
    k_max: usize,
) -> Result<Trajectory> {
    config.validate()?;
    source.validate()?;
    let grid = u0.grid().clone();
    let op = KfpOperator::new(&grid, *p);
    let bound = source.bind(&grid);
    let dt_target = config.resolved_dt(p, &grid);
    if !(dt_target > 0.0 && dt_target.is_finite()) {
        return Err(KfpError::InvalidArgument(format!("time step must be positive, got {dt_target}")));
    }
    if !u0.is_finite() {
        return Err(KfpError::NonFinite { step: 0, t: 0.0 });
    }

    let mut t = 0.0;
    let mut u = u0;
    let mut terms = rate_terms(&u, t, &op, &bound)?;
    let (mut diss_h, mut diss_w, mut src_energy) = (0.0, 0.0, 0.0);
    let mut samples = vec![Sample {
        t,
        field: u.clone(),
        report: norm_report(&u, t, p, k_max)?,
        dissipation_h: 0.0,
        dissipation_w: 0.0,
        source_energy: 0.0,
        dissipation_rate: terms.dissipation,
        energy_residual: None,
        krylov_iterations: 0,
    }];

    let mut step_index = 0usize;
    for &target in &config.sample_times {
        let span = target - t;
        let steps = ((span / dt_target) - 1e-9).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        let t_start = t;
        let mut krylov_iterations = 0;
        let mut residual = None;
        for i in 0..steps {
            let u_next = match config.method {
                Method::Rk4 => step_rk4(&u, t, dt, &op, &bound),
                Method::BackwardEuler => {
                    let (w, stats) = step_backward_euler(&u, t, dt, &op, &bound, &config.krylov)?;
                    krylov_iterations += stats.iterations;
                    w
                }
            };
            step_index += 1;
            let t_next = if i + 1 == steps { target } else { t_start + (i + 1) as f64 * dt };
            if !u_next.is_finite() {
                return Err(KfpError::NonFinite { step: step_index, t: t_next });
            }
            let next_terms = rate_terms(&u_next, t_next, &op, &bound)?;
            diss_h += 0.5 * dt * (terms.h_sq + next_terms.h_sq);
            diss_w += 0.5 * dt * (terms.w_sq + next_terms.w_sq);
            src_energy += 0.5 * dt * (terms.f_sq + next_terms.f_sq);
            if i + 1 == steps {
                let delta = l2_norm(&u_next).powi(2) - l2_norm(&u).powi(2);
                let quad = 0.5 * dt * (terms.rate + next_terms.rate)
                    + dt * dt / 12.0 * (terms.rate_prime - next_terms.rate_prime);
                residual = Some(EnergyResidual { dt, residual: (delta - quad).abs() / dt });
            }
            u = u_next;
            terms = next_terms;
            t = t_next;
        }
        samples.push(Sample {
            t,
            field: u.clone(),
            report: norm_report(&u, t, p, k_max)?,
            dissipation_h: diss_h,
            dissipation_w: diss_w,
            source_energy: src_energy,
            dissipation_rate: terms.dissipation,
            energy_residual: residual,
            krylov_iterations,
        });
    }

    Ok(Trajectory {
        grid,
        params: *p,
        source: *source,
        method: config.method,
        dt: dt_target,
        k_max,
        samples,
    })
}

/// Samples the initial data on `grid` and integrates it.
pub fn evolve(
    grid: &GridSpec,
    initial: &InitialDataSpec,
    config: &SolverConfig,
    p: &OperatorParams,
    source: &SourceSpec,
    k_max: usize,
) -> Result<Trajectory> {
    evolve_field(initial.sample(grid)?, config, p, source, k_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, to_spectral};

    #[test]
    fn stability_dt_formula() {
        let g = make_grid(1, 8.0, 32).unwrap();
        let p = OperatorParams::new(0.5, 0.5).unwrap();
        assert_eq!(stability_dt(&p, &g), 2.5 / symbol_bound(&p, &g));
        // doubling N with gamma = 0 shrinks dt by about 4^s
        for s in [0.5, 1.0] {
            let p = OperatorParams::new(0.0, s).unwrap();
            let a = stability_dt(&p, &make_grid(1, std::f64::consts::PI, 128).unwrap());
            let b = stability_dt(&p, &make_grid(1, std::f64::consts::PI, 256).unwrap());
            let ratio = a / b;
            assert!((ratio / 4f64.powf(s) - 1.0).abs() < 0.1, "s={s}, ratio={ratio}");
        }
    }

    #[test]
    fn rough_random_is_real_and_normalized() {
        for dim in 1..=2 {
            let g = make_grid(dim, 6.0, 32).unwrap();
            let u = rough_random(&g, 0.5, 7);
            assert!((l2_norm(&u) - 1.0).abs() < 1e-13);
            let c = to_spectral(&u);
            for idx in 0..g.total_points() {
                let k = g.wavenumber(idx);
                let neg: Vec<i64> = k[..dim].iter().map(|x| -x).collect();
                let partner = c.coefficient(&neg);
                assert!((c.coefficients()[idx] - partner.conj()).norm() < 1e-14);
            }
            let mag = |idx: usize| c.coefficients()[idx].norm();
            // the profile decays algebraically
            let k1 = g.slot_of(&[1, 0, 0][..dim]);
            let k8 = g.slot_of(&[8, 0, 0][..dim]);
            let expected = ((1.0 + g.xi_sq()[k1]) / (1.0 + g.xi_sq()[k8])).powf((dim as f64 / 2.0 + 0.5) / 4.0);
            assert!((mag(k8) / mag(k1) - expected).abs() < 1e-10);
        }
        let g = make_grid(1, 6.0, 32).unwrap();
        assert_eq!(rough_random(&g, 0.5, 7), rough_random(&g, 0.5, 7));
        assert_ne!(rough_random(&g, 0.5, 7), rough_random(&g, 0.5, 8));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(Method::Rk4, StepSize::AUTO, 1.0, vec![]).is_err());
        assert!(SolverConfig::new(Method::Rk4, StepSize::AUTO, 1.0, vec![0.5, 0.4]).is_err());
        assert!(SolverConfig::new(Method::Rk4, StepSize::AUTO, 1.0, vec![1.5]).is_err());
        assert!(SolverConfig::new(Method::Rk4, StepSize::Fixed(0.0), 1.0, vec![1.0]).is_err());
        assert!(SolverConfig::new(Method::Rk4, StepSize::AUTO, 1.0, vec![0.1, 1.0]).is_ok());
        let ts = default_sample_times(1.0, 32);
        assert_eq!(ts.len(), 32);
        assert!((ts[0] - 0.01).abs() < 1e-15 && ts[31] == 1.0);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let g = make_grid(1, 8.0, 32).unwrap();
        let p = OperatorParams::new(0.5, 0.5).unwrap();
        let cfg = SolverConfig::new(Method::Rk4, StepSize::AUTO, 1.0, vec![0.5, 1.0]).unwrap();
        let tr = evolve(&g, &InitialDataSpec::Zero, &cfg, &p, &SourceSpec::Zero, 4).unwrap();
        assert!(tr.is_zero());
        assert_eq!(tr.samples.len(), 3);
        assert!(tr.samples.iter().all(|s| s.dissipation_h == 0.0 && s.dissipation_w == 0.0));
    }

    #[test]
    fn nan_initial_data_is_rejected() {
        let g = make_grid(1, 8.0, 16).unwrap();
        let p = OperatorParams::new(0.5, 0.5).unwrap();
        let cfg = SolverConfig::new(Method::Rk4, StepSize::AUTO, 1.0, vec![1.0]).unwrap();
        let u = Field::from_real_fn(&g, |_| f64::NAN);
        assert!(matches!(
            evolve_field(u, &cfg, &p, &SourceSpec::Zero, 2),
            Err(KfpError::NonFinite { step: 0, .. })
        ));
    }

    #[test]
    fn oversized_step_is_caught_as_non_finite() {
        let g = make_grid(1, 8.0, 64).unwrap();
        let p = OperatorParams::new(0.5, 0.5).unwrap();
        let dt = 40.0 * stability_dt(&p, &g);
        let cfg = SolverConfig::new(Method::Rk4, StepSize::Fixed(dt), 2000.0 * dt, vec![2000.0 * dt]).unwrap();
        let u = rough_random(&g, 0.5, 1);
        assert!(matches!(
            evolve_field(u, &cfg, &p, &SourceSpec::Zero, 2),
            Err(KfpError::NonFinite { .. })
        ));
    }

    #[test]
    fn gaussian_source_is_sampled_with_time_decay() {
        let g = make_grid(1, 4.0, 16).unwrap();
        let src = SourceSpec::Gaussian { amplitude: 2.0, width: 1.0, time_decay: 0.5 }.bind(&g);
        let f = src.at(1.0).unwrap();
        assert!((f.values()[8].re - 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        assert!(SourceSpec::Zero.bind(&g).at(0.3).is_none());
        assert!(SourceSpec::Gaussian { amplitude: 1.0, width: 0.0, time_decay: 0.0 }.validate().is_err());
    }
}
