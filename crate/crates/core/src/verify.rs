//! Numerical pass/fail checks of the commutator, interpolation, energy and
//! smoothing estimates, each reporting an empirically fitted constant.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KfpError, Result};
use crate::grid::{l2_norm, to_physical, to_spectral, Field, GridSpec, SpectralField};
use crate::norms::{
    fit_gevrey_with_threshold, frequency_resolved_k_max, ln_factorial, log_bessel_moments,
    log_weight_moments, weighted_l2, weighted_sobolev, GEVREY_RATIO_THRESHOLD,
};
use crate::operators::{bessel_power, commutator_bessel_weight, OperatorParams};
use crate::solver::Trajectory;

pub use crate::norms::Verdict;

/// Default spread threshold for the lemma families and the energy growth.
pub const LEMMA_SPREAD_THRESHOLD: f64 = 100.0;

/// Relative spectral mass on the band edge above which a family member is
/// considered under-resolved.
pub const FAMILY_EDGE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Samples earlier than this are excluded from the smoothing fits.
    pub t_min: f64,
    /// Samples later than this are excluded from the smoothing fits.
    pub t_max: f64,
    pub gevrey_threshold: f64,
    pub lemma_threshold: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            t_min: 0.05,
            t_max: f64::INFINITY,
            gevrey_threshold: GEVREY_RATIO_THRESHOLD,
            lemma_threshold: LEMMA_SPREAD_THRESHOLD,
        }
    }
}

/// One row of a check's per-sample (or per-member) table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailRow {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub value: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_k: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub fitted_constant: f64,
    pub stability_ratio: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub flags: Vec<String>,
    pub extras: BTreeMap<String, f64>,
    pub details: Vec<DetailRow>,
}

impl CheckResult {
    fn new(name: &str, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            fitted_constant: 0.0,
            stability_ratio: 1.0,
            threshold,
            verdict: Verdict::Pass,
            flags: Vec::new(),
            extras: BTreeMap::new(),
            details: Vec::new(),
        }
    }

    fn settle(&mut self, all_finite: bool) {
        self.verdict = if all_finite
            && self.fitted_constant.is_finite()
            && self.stability_ratio.is_finite()
            && self.stability_ratio <= self.threshold
        {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

/// A named member of the lemma test family.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub name: String,
    pub field: Field,
    /// Largest per-axis wavenumber carried, when the member is band-limited.
    pub band: Option<usize>,
}

/// Smooth, rapidly decaying and band-limited test states.
#[derive(Debug, Clone)]
pub struct TestFamily {
    pub members: Vec<FamilyMember>,
}

fn gaussian(grid: &GridSpec, sigma: f64, shift: f64) -> Field {
    Field::from_real_fn(grid, |v| {
        let r2: f64 = v.iter().enumerate().map(|(a, x)| {
            let y = if a == 0 { x - shift } else { *x };
            y * y
        })
        .sum();
        (-r2 / (2.0 * sigma * sigma)).exp()
    })
}

/// Real random field whose coefficients vanish outside `|k_a| <= band`.
pub fn band_limited_random(grid: &GridSpec, band: usize, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.total_points();
    let dim = grid.dim();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    let mut assigned = vec![false; n];
    let band = band as i64;
    for idx in 0..n {
        let k = grid.wavenumber(idx);
        if assigned[idx] || k[..dim].iter().any(|x| x.abs() > band) {
            continue;
        }
        let neg: Vec<i64> = k[..dim].iter().map(|x| -x).collect();
        let partner = grid.slot_of(&neg);
        let re = rng.random::<f64>() * 2.0 - 1.0;
        let im = rng.random::<f64>() * 2.0 - 1.0;
        if partner == idx {
            coeffs[idx] = Complex64::new(re, 0.0);
        } else {
            coeffs[idx] = Complex64::new(re, im);
            coeffs[partner] = coeffs[idx].conj();
            assigned[partner] = true;
        }
        assigned[idx] = true;
    }
    let spectrum = SpectralField::new(grid, coeffs).expect("coefficient count matches grid");
    let u = to_physical(&spectrum);
    let norm = l2_norm(&u);
    u.scaled(Complex64::new(1.0 / norm, 0.0))
}

impl TestFamily {
    /// Dilated Gaussians (sigma = 0.5, 1, 2, 4), a Gaussian translated by 0
    /// and by L/4 along the first axis, and three seeded random fields
    /// band-limited to `|k| <= N/8`.
    pub fn standard(grid: &GridSpec) -> Self {
        Self::with_seed(grid, 1)
    }

    /// As [`TestFamily::standard`] with the random members seeded from
    /// `base_seed`, `base_seed + 1` and `base_seed + 2`.
    pub fn with_seed(grid: &GridSpec, base_seed: u64) -> Self {
        let mut members = Vec::new();
        for sigma in [0.5, 1.0, 2.0, 4.0] {
            members.push(FamilyMember {
                name: format!("gaussian sigma={sigma}"),
                field: gaussian(grid, sigma, 0.0),
                band: None,
            });
        }
        for (label, shift) in [("0", 0.0), ("L/4", grid.half_width() / 4.0)] {
            members.push(FamilyMember {
                name: format!("gaussian shift={label}"),
                field: gaussian(grid, 1.0, shift),
                band: None,
            });
        }
        let band = grid.n_per_axis() / 8;
        for seed in base_seed..base_seed + 3 {
            members.push(FamilyMember {
                name: format!("band-limited seed={seed}"),
                field: band_limited_random(grid, band, seed),
                band: Some(band),
            });
        }
        Self { members }
    }

    /// Names of members with significant spectral mass on the band edge.
    pub fn under_resolved(&self) -> Vec<String> {
        self.members
            .iter()
            .filter(|m| {
                let c = to_spectral(&m.field);
                let grid = c.grid();
                let edge: f64 = c
                    .coefficients()
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| grid.is_edge_mode(*idx))
                    .map(|(_, z)| z.norm_sqr())
                    .sum();
                (grid.box_volume() * edge).sqrt() > FAMILY_EDGE_TOLERANCE * c.norm()
            })
            .map(|m| m.name.clone())
            .collect()
    }

    fn flag_resolution(&self, result: &mut CheckResult) {
        let weak = self.under_resolved();
        if !weak.is_empty() {
            result.flags.push(format!("low-confidence: under-resolved members [{}]", weak.join(", ")));
        }
    }
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 && min == 0.0 {
        1.0
    } else {
        max / min
    }
}

/// `rho = ||[<D>^r, <v>^m] u|| / ||u||_{H^{r'}_m}` over the family, with
/// `r' = 0` for `r <= 1` and `r' = r - 1` otherwise.
pub fn check_commutator(family: &TestFamily, r: f64, m: f64, cfg: &VerifyConfig) -> Result<CheckResult> {
    if !(r > 0.0 && r.is_finite()) || !m.is_finite() {
        return Err(KfpError::InvalidArgument(format!("commutator needs r > 0 and finite m, got r={r}, m={m}")));
    }
    let denominator_order = if r <= 1.0 { 0.0 } else { r - 1.0 };
    let mut result = CheckResult::new("commutator", cfg.lemma_threshold);
    result.extras.insert("r".into(), r);
    result.extras.insert("m".into(), m);
    result.extras.insert("denominator_order".into(), denominator_order);
    let mut ratios = Vec::with_capacity(family.members.len());
    for member in &family.members {
        let num = l2_norm(&commutator_bessel_weight(&member.field, r, m));
        let den = weighted_sobolev(&member.field, denominator_order, m);
        if den == 0.0 {
            return Err(KfpError::Degenerate(format!("member '{}' has zero denominator", member.name)));
        }
        let rho = num / den;
        result.details.push(DetailRow { label: member.name.clone(), t: None, value: rho, per_k: vec![] });
        ratios.push(rho);
    }
    if m == 0.0 {
        result.flags.push("vanishing commutator (m = 0)".into());
    }
    result.fitted_constant = ratios.iter().copied().fold(0.0, f64::max);
    result.stability_ratio = spread(&ratios);
    family.flag_resolution(&mut result);
    result.settle(ratios.iter().all(|x| x.is_finite()));
    Ok(result)
}

/// `C_eps = max_u (||u||_{H^k_l} - eps ||u||_{H^{k+delta}_l})_+ / ||u||` for each
/// `eps`; passes iff every `C_eps` is finite.
pub fn check_interpolation_eps(
    family: &TestFamily,
    k: f64,
    l: f64,
    delta: f64,
    eps_list: &[f64],
    cfg: &VerifyConfig,
) -> Result<CheckResult> {
    if !(k > 0.0 && l > 0.0 && delta > 0.0) {
        return Err(KfpError::InvalidArgument(format!(
            "interpolation needs k, l, delta > 0, got ({k}, {l}, {delta})"
        )));
    }
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(KfpError::InvalidArgument("eps values must be positive".into()));
    }
    let mut result = CheckResult::new("interpolation-eps", cfg.lemma_threshold);
    for (key, val) in [("k", k), ("l", l), ("delta", delta)] {
        result.extras.insert(key.into(), val);
    }
    let norms: Vec<(f64, f64, f64)> = family
        .members
        .iter()
        .map(|m| {
            (
                weighted_sobolev(&m.field, k, l),
                weighted_sobolev(&m.field, k + delta, l),
                l2_norm(&m.field),
            )
        })
        .collect();
    let mut all_finite = true;
    let mut worst: f64 = 0.0;
    for &eps in eps_list {
        let per_member: Vec<f64> = norms
            .iter()
            .map(|(lo, hi, base)| (lo - eps * hi).max(0.0) / base)
            .collect();
        let c_eps = per_member.iter().copied().fold(0.0, f64::max);
        all_finite &= c_eps.is_finite();
        worst = worst.max(c_eps);
        result.extras.insert(format!("C_eps[{eps}]"), c_eps);
        result.details.push(DetailRow { label: format!("eps={eps}"), t: None, value: c_eps, per_k: per_member });
    }
    result.fitted_constant = worst;
    result.stability_ratio = if all_finite { 1.0 } else { f64::INFINITY };
    family.flag_resolution(&mut result);
    result.settle(all_finite);
    Ok(result)
}

/// `rho = ||u||^2_{H^k_l} / (||u||_{H^{k+delta}_{2l}} ||u||_{H^{k-delta}})` over
/// the family.
pub fn check_interpolation_product(
    family: &TestFamily,
    k: f64,
    l: f64,
    delta: f64,
    cfg: &VerifyConfig,
) -> Result<CheckResult> {
    if !(delta > 0.0) || !k.is_finite() || !l.is_finite() {
        return Err(KfpError::InvalidArgument(format!("product interpolation needs delta > 0, got {delta}")));
    }
    let mut result = CheckResult::new("interpolation-product", cfg.lemma_threshold);
    for (key, val) in [("k", k), ("l", l), ("delta", delta)] {
        result.extras.insert(key.into(), val);
    }
    let mut ratios = Vec::new();
    for member in &family.members {
        let num = weighted_sobolev(&member.field, k, l).powi(2);
        let den = weighted_sobolev(&member.field, k + delta, 2.0 * l) * weighted_sobolev(&member.field, k - delta, 0.0);
        if den == 0.0 {
            return Err(KfpError::Degenerate(format!("member '{}' has zero denominator", member.name)));
        }
        let rho = num / den;
        result.details.push(DetailRow { label: member.name.clone(), t: None, value: rho, per_k: vec![] });
        ratios.push(rho);
    }
    result.fitted_constant = ratios.iter().copied().fold(0.0, f64::max);
    result.stability_ratio = spread(&ratios);
    family.flag_resolution(&mut result);
    result.settle(ratios.iter().all(|x| x.is_finite()));
    Ok(result)
}

/// `E(t) = ||u(t)||^2 + int ||u||^2_{H^s_{gamma/2}} + int ||u||^2_{2,gamma/2+s}`
/// along the trajectory. The fitted constant is `max_t E(t)`; the stability
/// ratio is `max_t E(t) / (||u_0||^2 + 2 int ||f||^2)`, whose logarithm over
/// `t` gives the reported growth rate `c`.
pub fn check_energy(trajectory: &Trajectory, cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut result = CheckResult::new("energy", cfg.lemma_threshold);
    if trajectory.samples.iter().any(|s| !s.field.is_finite()) {
        return Err(KfpError::NonFinite { step: 0, t: f64::NAN });
    }
    let e0 = trajectory.initial().report.l2.powi(2);
    let mut b0: f64 = 0.0;
    let mut growth: f64 = 0.0;
    let mut ratio: f64 = 0.0;
    let mut all_finite = true;
    let mut k_fit: f64 = 0.0;
    let mut nonincreasing = true;
    let mut positive = true;
    let mut prev_l2 = f64::INFINITY;
    for s in &trajectory.samples {
        let e = s.report.l2.powi(2) + s.dissipation_h + s.dissipation_w;
        all_finite &= e.is_finite();
        b0 = b0.max(e);
        let budget = e0 + 2.0 * s.source_energy;
        let r = if budget > 0.0 { e / budget } else if e == 0.0 { 1.0 } else { f64::INFINITY };
        ratio = ratio.max(r);
        if s.t > 0.0 && r > 0.0 && r.is_finite() {
            growth = growth.max(r.ln() / s.t);
        }
        if let Some(res) = s.energy_residual {
            k_fit = k_fit.max(res.residual / res.dt.powi(4));
        }
        nonincreasing &= s.report.l2 <= prev_l2;
        prev_l2 = s.report.l2;
        if !trajectory.is_zero() && s.t > 0.0 {
            positive &= s.dissipation_rate > 0.0;
        }
        result.details.push(DetailRow { label: "E(t)".into(), t: Some(s.t), value: e, per_k: vec![] });
    }
    if trajectory.is_zero() {
        result.flags.push("vacuous: zero trajectory".into());
    }
    if !positive {
        result.flags.push("non-positive dissipation rate Re(Au, u) at some sample".into());
    }
    result.fitted_constant = b0;
    result.stability_ratio = ratio;
    result.extras.insert("B0".into(), b0);
    result.extras.insert("growth_rate_c".into(), growth);
    result.extras.insert("energy_identity_K".into(), k_fit);
    result.extras.insert("l2_nonincreasing".into(), if nonincreasing { 1.0 } else { 0.0 });
    result.settle(all_finite);
    Ok(result)
}

/// Which seminorm sequence a smoothing check fits.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Sequence {
    Frequency { order: f64 },
    Weight { order: f64 },
}

fn smoothing_samples<'a>(trajectory: &'a Trajectory, cfg: &VerifyConfig) -> Vec<&'a crate::solver::Sample> {
    trajectory
        .samples
        .iter()
        .filter(|s| s.t >= cfg.t_min && s.t <= cfg.t_max && s.t > 0.0)
        .collect()
}

fn trapezoid(ts: &[f64], ys: &[f64]) -> f64 {
    ts.windows(2)
        .zip(ys.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

/// Fitted aggregate constant: for each `k`, `Q_k = sup_t ||(t X)^k u||^2 +
/// int ||(t X)^k u||^2_{H^s_{gamma/2}} + int ||(t X)^k u||^2_{2,gamma/2+s}`
/// and `B_k = (sqrt(Q_k) / k!)^{1/(k+1)}`, where `X` is the frequency or
/// weight multiplier. Time integrals use the trapezoid rule on the samples.
fn aggregate_constant(trajectory: &Trajectory, seq: Sequence, k_max: usize) -> Vec<f64> {
    let p = &trajectory.params;
    let ts: Vec<f64> = trajectory.samples.iter().map(|s| s.t).collect();
    (0..=k_max)
        .map(|k| {
            let kf = k as f64;
            let mut sup: f64 = 0.0;
            let mut h_vals = Vec::with_capacity(ts.len());
            let mut w_vals = Vec::with_capacity(ts.len());
            for s in &trajectory.samples {
                let scale = if k == 0 { 1.0 } else { s.t.powf(2.0 * kf) };
                let (main, h, w) = match seq {
                    Sequence::Frequency { order } => {
                        let lifted = bessel_power(&s.field, order * kf);
                        (
                            l2_norm(&lifted),
                            weighted_sobolev(&lifted, p.s(), p.gamma() / 2.0),
                            weighted_l2(&lifted, p.weight_exponent()),
                        )
                    }
                    Sequence::Weight { order } => (
                        weighted_l2(&s.field, order * kf),
                        weighted_sobolev(&s.field, p.s(), p.gamma() / 2.0 + order * kf),
                        weighted_l2(&s.field, p.weight_exponent() + order * kf),
                    ),
                };
                sup = sup.max(scale * main * main);
                h_vals.push(scale * h * h);
                w_vals.push(scale * w * w);
            }
            let q = sup + trapezoid(&ts, &h_vals) + trapezoid(&ts, &w_vals);
            ((0.5 * q.ln() - ln_factorial(k)) / (kf + 1.0)).exp()
        })
        .collect()
}

fn check_smoothing(
    trajectory: &Trajectory,
    k_max: usize,
    cfg: &VerifyConfig,
    seq: Sequence,
    name: &str,
) -> Result<CheckResult> {
    trajectory.params.require_theorem_range()?;
    if k_max < 1 {
        return Err(KfpError::InvalidArgument("k_max must be at least 1".into()));
    }
    let k_max = k_max.min(trajectory.k_max);
    let mut result = CheckResult::new(name, cfg.gevrey_threshold);
    let samples = smoothing_samples(trajectory, cfg);
    if samples.is_empty() {
        return Err(KfpError::InvalidArgument(format!("no samples with t in [{}, {}]", cfg.t_min, cfg.t_max)));
    }
    if trajectory.is_zero() {
        result.flags.push("vacuous: zero trajectory".into());
        result.fitted_constant = 0.0;
        result.settle(true);
        return Ok(result);
    }
    let p = &trajectory.params;
    let order = match seq {
        Sequence::Frequency { order } | Sequence::Weight { order } => order,
    };
    result.extras.insert("order".into(), order);
    result.extras.insert("t_min".into(), cfg.t_min);

    let mut fitted: f64 = 0.0;
    let mut worst_ratio: f64 = 1.0;
    let mut all_pass = true;
    let mut truncation_limited = false;
    let mut all_finite = true;
    let mut aggregate_k = k_max;
    for s in samples {
        let (log_seq, k_used) = match seq {
            Sequence::Frequency { order } => {
                let spectrum = to_spectral(&s.field);
                let log_seq = if (order - 2.0 * p.s_tilde()).abs() == 0.0 {
                    s.report.log_a.clone()
                } else {
                    log_bessel_moments(&spectrum, order, trajectory.k_max)
                };
                let resolved = frequency_resolved_k_max(&spectrum, order, &log_seq);
                (log_seq, k_max.min(resolved))
            }
            Sequence::Weight { order } => {
                let log_seq = if (order - p.weight_exponent()).abs() == 0.0 {
                    s.report.log_b.clone()
                } else {
                    log_weight_moments(&s.field, order, trajectory.k_max)
                };
                let log_ceiling_base = order * (1.0 + trajectory.grid.v_max().powi(2)).sqrt().ln();
                let log_norm = log_seq[0];
                let limited = (1..=k_max)
                    .any(|k| log_seq[k] >= log_norm + k as f64 * log_ceiling_base - std::f64::consts::LN_2);
                if limited {
                    truncation_limited = true;
                    result.flags.push(format!("truncation-limited at t={}", s.t));
                }
                let ceiling = (log_norm + k_max as f64 * log_ceiling_base).exp();
                result.details.push(DetailRow {
                    label: "ceiling".into(),
                    t: Some(s.t),
                    value: ceiling,
                    per_k: vec![],
                });
                (log_seq, k_max)
            }
        };
        if k_used < k_max {
            result.flags.push(format!("k_max reduced to {k_used} at t={} by the resolution guard", s.t));
        }
        aggregate_k = aggregate_k.min(k_used.max(1));
        if k_used < 1 {
            continue;
        }
        if log_seq[..=k_used].iter().any(|x| !x.is_finite()) {
            all_finite = false;
            continue;
        }
        let fit = fit_gevrey_with_threshold(&log_seq, s.t, k_used, cfg.gevrey_threshold)?;
        fitted = fitted.max(fit.fitted_c);
        worst_ratio = worst_ratio.max(fit.stability_ratio);
        all_pass &= fit.verdict.passed();
        result.details.push(DetailRow {
            label: format!("k_used={k_used}"),
            t: Some(s.t),
            value: fit.stability_ratio,
            per_k: fit.per_k_constant,
        });
    }
    let aggregate = aggregate_constant(trajectory, seq, aggregate_k);
    let b = aggregate.iter().copied().fold(0.0, f64::max);
    result.extras.insert("aggregate_B".into(), b);
    result.extras.insert("aggregate_k_max".into(), aggregate_k as f64);
    result.flags.push("aggregate_B integrates on the sample grid; it is a lower bound on the true constant".into());

    result.fitted_constant = fitted;
    result.stability_ratio = worst_ratio;
    result.settle(all_finite && all_pass);
    if truncation_limited {
        result.verdict = Verdict::TruncationLimited;
    }
    Ok(result)
}

/// Smoothing in frequency: fits `a_k = ||<D>^{2 s~ k} u(t)||` against
/// `C^k k! / t^k` at every sample with `t_min <= t <= t_max`.
pub fn check_gevrey_frequency(trajectory: &Trajectory, k_max: usize, cfg: &VerifyConfig) -> Result<CheckResult> {
    let order = 2.0 * trajectory.params.s_tilde();
    check_smoothing(trajectory, k_max, cfg, Sequence::Frequency { order }, "gevrey-frequency")
}

/// As [`check_gevrey_frequency`] with an explicit multiplier order in place of
/// `2 s~`.
pub fn check_gevrey_frequency_with_order(
    trajectory: &Trajectory,
    k_max: usize,
    order: f64,
    cfg: &VerifyConfig,
) -> Result<CheckResult> {
    check_smoothing(trajectory, k_max, cfg, Sequence::Frequency { order }, "gevrey-frequency")
}

/// Decay in velocity: fits `b_k = ||<v>^{(gamma/2+s) k} u(t)||` against
/// `C^k k! / t^k`; reports a truncation-limited verdict when some `b_k` comes
/// within a factor 2 of the box ceiling `<L sqrt(d)>^{(gamma/2+s) k} ||u||`.
pub fn check_gevrey_weight(trajectory: &Trajectory, k_max: usize, cfg: &VerifyConfig) -> Result<CheckResult> {
    let order = trajectory.params.weight_exponent();
    check_smoothing(trajectory, k_max, cfg, Sequence::Weight { order }, "gevrey-weight")
}

/// The three lemma checks over one family, with the default parameter lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaPlan {
    pub commutator: Vec<(f64, f64)>,
    pub eps_triples: Vec<(f64, f64, f64)>,
    pub eps_values: Vec<f64>,
    pub product_triples: Vec<(f64, f64, f64)>,
}

impl LemmaPlan {
    /// Appends the commutator pair `(2s, gamma/2)` met by the generator.
    pub fn with_params(mut self, p: &OperatorParams) -> Self {
        let extra = (2.0 * p.s(), p.gamma() / 2.0);
        if p.gamma() != 0.0 && !self.commutator.contains(&extra) {
            self.commutator.push(extra);
        }
        self
    }
}

impl Default for LemmaPlan {
    fn default() -> Self {
        Self {
            commutator: vec![(0.6, 2.0), (1.5, 2.0), (1.0, -1.0)],
            eps_triples: vec![(1.0, 1.0, 1.0), (1.0, 1.0, 0.5), (0.5, 1.0, 0.25), (2.0, 2.0, 1.0)],
            eps_values: vec![0.5, 0.1, 0.01],
            product_triples: vec![(1.0, 1.0, 0.5), (0.5, 1.0, 0.25), (2.0, 2.0, 1.0)],
        }
    }
}

/// Runs every check of `plan`; each result is named after its parameters,
/// e.g. `commutator[r=0.6,m=2]`.
pub fn run_lemma_checks(family: &TestFamily, plan: &LemmaPlan, cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for &(r, m) in &plan.commutator {
        let mut c = check_commutator(family, r, m, cfg)?;
        c.name = format!("commutator[r={r},m={m}]");
        out.push(c);
    }
    for &(k, l, d) in &plan.eps_triples {
        let mut c = check_interpolation_eps(family, k, l, d, &plan.eps_values, cfg)?;
        c.name = format!("interpolation-eps[k={k},l={l},delta={d}]");
        out.push(c);
    }
    for &(k, l, d) in &plan.product_triples {
        let mut c = check_interpolation_product(family, k, l, d, cfg)?;
        c.name = format!("interpolation-product[k={k},l={l},delta={d}]");
        out.push(c);
    }
    Ok(out)
}
