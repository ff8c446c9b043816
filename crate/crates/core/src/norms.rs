//! Weighted Lebesgue/Sobolev norms and the seminorm sequences
//!
//! ```text
//! a_k = || <D>^{2 s~ k} u ||,        b_k = || <v>^{(gamma/2 + s) k} u ||
//! ```
//!
//! evaluated in the log domain so that large `k` never overflows.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{KfpError, Result};
use crate::grid::{l2_norm, to_spectral, Field, SpectralField};
use crate::operators::{bracket_weight_values, log_bracket_weight, OperatorParams};

/// Default pass threshold on the Gevrey stability ratio.
pub const GEVREY_RATIO_THRESHOLD: f64 = 3.0;

/// Largest fraction of a seminorm the outermost wavenumber shell may carry
/// before that order is treated as truncation-dominated.
pub const EDGE_SHARE_LIMIT: f64 = 1e-2;

/// `|| <v>^m u ||`.
pub fn weighted_l2(u: &Field, m: f64) -> f64 {
    if m == 0.0 {
        return l2_norm(u);
    }
    l2_norm(&u.mul_real(&bracket_weight_values(u.grid(), m)))
}

/// `|| u ||_{H^k_m} = || <D>^k (<v>^m u) ||`: weight first, then the Bessel
/// potential.
pub fn weighted_sobolev(u: &Field, order: f64, m: f64) -> f64 {
    let weighted = if m == 0.0 {
        u.clone()
    } else {
        u.mul_real(&bracket_weight_values(u.grid(), m))
    };
    sobolev_from_spectrum(&to_spectral(&weighted), order)
}

/// `|| <D>^k u ||` from coefficients, by Parseval.
pub fn sobolev_from_spectrum(c: &SpectralField, order: f64) -> f64 {
    let sum: f64 = c
        .coefficients()
        .iter()
        .zip(c.grid().xi_sq())
        .map(|(z, xs)| z.norm_sqr() * (order * xs.ln_1p()).exp())
        .sum();
    (c.grid().box_volume() * sum).sqrt()
}

/// `0.5 * ln( scale * sum_j exp(2 log_w_j) |z_j|^2 )` without leaving the log
/// domain. Returns `-inf` for an all-zero input.
fn log_weighted_sum(values: impl Iterator<Item = (f64, f64)>, log_scale: f64) -> f64 {
    // (log weight, log |z|)
    let terms: Vec<f64> = values
        .filter(|(_, lz)| *lz > f64::NEG_INFINITY)
        .map(|(lw, lz)| 2.0 * (lw + lz))
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    0.5 * (log_scale + max + sum.ln())
}

/// `ln || <D>^{order k} u ||` for `k = 0..=k_max`, from one forward transform.
pub fn log_bessel_moments(c: &SpectralField, order: f64, k_max: usize) -> Vec<f64> {
    let grid = c.grid();
    let log_abs: Vec<f64> = c.coefficients().iter().map(|z| z.norm().ln()).collect();
    let log_sym: Vec<f64> = grid.xi_sq().iter().map(|xs| 0.5 * order * xs.ln_1p()).collect();
    let log_scale = grid.box_volume().ln();
    (0..=k_max)
        .map(|k| {
            let kf = k as f64;
            log_weighted_sum(
                log_sym.iter().zip(&log_abs).map(|(ls, la)| (kf * ls, *la)),
                log_scale,
            )
        })
        .collect()
}

/// `ln || <v>^{order k} u ||` for `k = 0..=k_max`.
pub fn log_weight_moments(u: &Field, order: f64, k_max: usize) -> Vec<f64> {
    let grid = u.grid();
    let log_abs: Vec<f64> = u.values().iter().map(|z| z.norm().ln()).collect();
    let log_w = log_bracket_weight(grid, order);
    let log_scale = grid.cell_volume().ln();
    (0..=k_max)
        .map(|k| {
            let kf = k as f64;
            log_weighted_sum(log_w.iter().zip(&log_abs).map(|(lw, la)| (kf * lw, *la)), log_scale)
        })
        .collect()
}

/// Largest `K <= log_a.len() - 1` such that for every `k <= K` the outermost
/// wavenumber shell, amplified by the worst-case multiplier
/// `(1 + xi_max^2)^{order k / 2}`, stays below `EDGE_SHARE_LIMIT * a_k`.
///
/// The edge amplitude is floored at machine epsilon times `||u||` so that
/// roundoff noise in an otherwise resolved spectrum is accounted for.
pub fn frequency_resolved_k_max(c: &SpectralField, order: f64, log_a: &[f64]) -> usize {
    let grid = c.grid();
    let edge_sq: f64 = c
        .coefficients()
        .iter()
        .enumerate()
        .filter(|(idx, _)| grid.is_edge_mode(*idx))
        .map(|(_, z)| z.norm_sqr())
        .sum();
    let edge = (grid.box_volume() * edge_sq).sqrt().max(f64::EPSILON * c.norm());
    if edge == 0.0 {
        return log_a.len().saturating_sub(1);
    }
    let log_edge = edge.ln();
    let log_mult_step = 0.5 * order * grid.xi_max().powi(2).ln_1p();
    let mut resolved = 0;
    for (k, la) in log_a.iter().enumerate() {
        if k as f64 * log_mult_step + log_edge > la + EDGE_SHARE_LIMIT.ln() {
            return if k == 0 { 0 } else { resolved };
        }
        resolved = k;
    }
    resolved
}

/// Largest `|<v>^m u|` over points touching the periodic boundary.
pub fn boundary_magnitude(u: &Field, m: f64) -> f64 {
    let grid = u.grid();
    let w = bracket_weight_values(grid, m);
    u.values()
        .iter()
        .zip(&w)
        .enumerate()
        .filter(|(idx, _)| grid.is_boundary_point(*idx))
        .map(|(_, (z, w))| z.norm() * w)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormFlag {
    /// The field is identically zero; all log entries are `-inf`.
    ZeroField,
    /// Some log entry is `+inf` or NaN.
    Overflow,
}

/// Norms of one state at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub t: f64,
    pub l2: f64,
    /// `|| u ||_{H^s_{gamma/2}}`
    pub h_s_gamma2: f64,
    /// `|| u ||_{2, gamma/2 + s}`
    pub w_gamma2s: f64,
    /// `ln a_k`, `k = 0..=k_max`
    pub log_a: Vec<f64>,
    /// `ln b_k`, `k = 0..=k_max`
    pub log_b: Vec<f64>,
    /// Largest order for which `a_k` is not dominated by the band edge.
    pub resolved_k_max: usize,
    pub flags: Vec<NormFlag>,
}

impl NormReport {
    pub fn k_max(&self) -> usize {
        self.log_a.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.flags.contains(&NormFlag::ZeroField)
    }
}

pub fn norm_report(u: &Field, t: f64, p: &OperatorParams, k_max: usize) -> Result<NormReport> {
    if k_max < 1 {
        return Err(KfpError::InvalidArgument("k_max must be at least 1".into()));
    }
    let spectrum = to_spectral(u);
    let order = 2.0 * p.s_tilde();
    let log_a = log_bessel_moments(&spectrum, order, k_max);
    let log_b = log_weight_moments(u, p.weight_exponent(), k_max);
    let resolved_k_max = frequency_resolved_k_max(&spectrum, order, &log_a);

    let mut flags = Vec::new();
    if u.is_zero() {
        flags.push(NormFlag::ZeroField);
    }
    if log_a.iter().chain(&log_b).any(|x| x.is_nan() || *x == f64::INFINITY) {
        flags.push(NormFlag::Overflow);
    }

    Ok(NormReport {
        t,
        l2: l2_norm(u),
        h_s_gamma2: weighted_sobolev(u, p.s(), p.gamma() / 2.0),
        w_gamma2s: weighted_l2(u, p.weight_exponent()),
        log_a,
        log_b,
        resolved_k_max,
        flags,
    })
}

/// `ln k!`
pub fn ln_factorial(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The weighted sequence sits against the ceiling imposed by the box.
    TruncationLimited,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Per-order constants of the envelope `a_k <= C^k k! / t^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GevreyFit {
    pub t: f64,
    /// `C_0 = a_0`, `C_k = (a_k t^k / k!)^{1/k}` for `k >= 1`.
    pub per_k_constant: Vec<f64>,
    /// `max_{k >= 1} C_k`
    pub fitted_c: f64,
    /// `max C_k / median C_k` over `k in [2, k_max]`; 1 when that range is empty.
    pub stability_ratio: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

pub fn fit_gevrey(log_seq: &[f64], t: f64, k_max: usize) -> Result<GevreyFit> {
    fit_gevrey_with_threshold(log_seq, t, k_max, GEVREY_RATIO_THRESHOLD)
}

pub fn fit_gevrey_with_threshold(
    log_seq: &[f64],
    t: f64,
    k_max: usize,
    threshold: f64,
) -> Result<GevreyFit> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(KfpError::InvalidArgument(format!("fit time must be positive, got {t}")));
    }
    if k_max < 1 || log_seq.len() <= k_max {
        return Err(KfpError::InvalidArgument(format!(
            "need entries k = 0..={k_max}, got {}",
            log_seq.len()
        )));
    }
    if log_seq[..=k_max].iter().any(|x| !x.is_finite()) {
        return Err(KfpError::InvalidArgument("sequence entries must be finite".into()));
    }
    let ln_t = t.ln();
    let per_k_constant: Vec<f64> = log_seq[..=k_max]
        .iter()
        .enumerate()
        .map(|(k, la)| {
            if k == 0 {
                la.exp()
            } else {
                let kf = k as f64;
                ((la + kf * ln_t - ln_factorial(k)) / kf).exp()
            }
        })
        .collect();
    let fitted_c = per_k_constant[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let stability_ratio = if k_max >= 2 {
        let tail = &per_k_constant[2..];
        let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max / median(tail)
    } else {
        1.0
    };
    let verdict = if stability_ratio.is_finite() && fitted_c.is_finite() && stability_ratio <= threshold {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(GevreyFit { t, per_k_constant, fitted_c, stability_ratio, threshold, verdict })
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
