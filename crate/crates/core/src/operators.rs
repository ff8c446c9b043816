//! Fourier multipliers, polynomial weights and the generator
//! `A = <v>^gamma ((1 - Delta)^s + <v>^{2s})`.

use serde::{Deserialize, Serialize};

use crate::error::{KfpError, Result};
use crate::grid::{to_physical, to_spectral, Field, GridSpec};

/// The pair `(gamma, s)` with `0 < s <= 1` and `gamma + 2s > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct OperatorParams {
    gamma: f64,
    s: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    gamma: f64,
    s: f64,
}

impl TryFrom<RawParams> for OperatorParams {
    type Error = KfpError;

    fn try_from(raw: RawParams) -> Result<Self> {
        OperatorParams::new(raw.gamma, raw.s)
    }
}

impl OperatorParams {
    pub fn new(gamma: f64, s: f64) -> Result<Self> {
        if !gamma.is_finite() || !s.is_finite() {
            return Err(KfpError::InvalidParams("gamma and s must be finite".into()));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(KfpError::InvalidParams(format!("s must lie in (0, 1], got {s}")));
        }
        if gamma + 2.0 * s <= 0.0 {
            return Err(KfpError::InvalidParams(format!(
                "gamma + 2s must be positive, got {}",
                gamma + 2.0 * s
            )));
        }
        Ok(Self { gamma, s })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `min(1/2, s)`, the frequency order reached by the smoothing estimate.
    pub fn s_tilde(&self) -> f64 {
        self.s.min(0.5)
    }

    /// `gamma/2 + s`, the weight order reached by the decay estimate.
    pub fn weight_exponent(&self) -> f64 {
        self.gamma / 2.0 + self.s
    }

    /// The regularity theorems need `0 < s < 1`; the solver also accepts `s = 1`.
    pub fn require_theorem_range(&self) -> Result<()> {
        if self.s < 1.0 {
            Ok(())
        } else {
            Err(KfpError::OutsideTheoremRange(format!(
                "regularity estimates are stated for 0 < s < 1, got s = {}",
                self.s
            )))
        }
    }
}

/// `m/2 * ln(1 + |v|^2)` at every grid point, i.e. `ln <v>^m`.
pub fn log_bracket_weight(grid: &GridSpec, m: f64) -> Vec<f64> {
    grid.v_sq().iter().map(|vs| 0.5 * m * vs.ln_1p()).collect()
}

/// Samples of `<v>^m` as real numbers. Computed through the logarithm so very
/// large exponents saturate to `inf` instead of wrapping through `powf`.
pub fn bracket_weight_values(grid: &GridSpec, m: f64) -> Vec<f64> {
    if m == 0.0 {
        return vec![1.0; grid.total_points()];
    }
    log_bracket_weight(grid, m).into_iter().map(f64::exp).collect()
}

/// `<v>^m = (1 + |v|^2)^{m/2}` as a field.
pub fn bracket_weight(grid: &GridSpec, m: f64) -> Field {
    let w = bracket_weight_values(grid, m);
    Field::from_real_fn(grid, {
        let mut it = w.into_iter();
        move |_| it.next().unwrap_or(f64::NAN)
    })
}

/// Samples of the Bessel symbol `(1 + |xi_k|^2)^{r/2}` in slot order.
pub fn bessel_symbol(grid: &GridSpec, r: f64) -> Vec<f64> {
    grid.xi_sq().iter().map(|xs| (0.5 * r * xs.ln_1p()).exp()).collect()
}

/// `<D>^r u = (1 - Delta)^{r/2} u`.
pub fn bessel_power(u: &Field, r: f64) -> Field {
    if r == 0.0 {
        return u.clone();
    }
    let mut c = to_spectral(u);
    c.apply_symbol(|xs| (0.5 * r * xs.ln_1p()).exp());
    to_physical(&c)
}

/// `[(1 - Delta)^{r/2}, <v>^m] u`.
pub fn commutator_bessel_weight(u: &Field, r: f64, m: f64) -> Field {
    let weight = bracket_weight_values(u.grid(), m);
    let lhs = bessel_power(&u.mul_real(&weight), r);
    let rhs = bessel_power(u, r).mul_real(&weight);
    lhs.sub(&rhs)
}

/// The generator with its weights and symbol cached for repeated application.
#[derive(Debug, Clone)]
pub struct KfpOperator {
    grid: GridSpec,
    params: OperatorParams,
    weight_gamma: Vec<f64>,
    weight_2s: Vec<f64>,
    symbol_2s: Vec<f64>,
}

impl KfpOperator {
    pub fn new(grid: &GridSpec, params: OperatorParams) -> Self {
        Self {
            grid: grid.clone(),
            params,
            weight_gamma: bracket_weight_values(grid, params.gamma()),
            weight_2s: bracket_weight_values(grid, 2.0 * params.s()),
            symbol_2s: bessel_symbol(grid, 2.0 * params.s()),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &OperatorParams {
        &self.params
    }

    /// `A u`.
    pub fn apply(&self, u: &Field) -> Field {
        let mut c = to_spectral(u);
        for (z, sym) in c.coefficients_mut().iter_mut().zip(&self.symbol_2s) {
            *z *= *sym;
        }
        let mut out = to_physical(&c);
        for (((o, x), wg), w2s) in out
            .values_mut()
            .iter_mut()
            .zip(u.values())
            .zip(&self.weight_gamma)
            .zip(&self.weight_2s)
        {
            *o = (*o + x * *w2s) * *wg;
        }
        out
    }

    /// `(1 - Delta)^s u` without weights.
    pub fn apply_fractional(&self, u: &Field) -> Field {
        let mut c = to_spectral(u);
        for (z, sym) in c.coefficients_mut().iter_mut().zip(&self.symbol_2s) {
            *z *= *sym;
        }
        to_physical(&c)
    }

    pub fn weight_gamma(&self) -> &[f64] {
        &self.weight_gamma
    }

    pub fn weight_2s(&self) -> &[f64] {
        &self.weight_2s
    }
}

/// `A u = <v>^gamma ((1 - Delta)^s u + <v>^{2s} u)`.
pub fn apply_kfp(u: &Field, p: &OperatorParams) -> Field {
    KfpOperator::new(u.grid(), *p).apply(u)
}

/// Upper bound on the discrete operator norm of `A`:
/// `max <v>^gamma * ((1 + xi_max^2)^s + max <v>^{2s})`.
pub fn symbol_bound(p: &OperatorParams, grid: &GridSpec) -> f64 {
    let bracket_corner = (1.0 + grid.v_max().powi(2)).sqrt();
    // v = 0 is a grid point, so <v>^gamma peaks at 1 when gamma < 0.
    let weight_gamma_max = if p.gamma() >= 0.0 { bracket_corner.powf(p.gamma()) } else { 1.0 };
    let symbol_max = (1.0 + grid.xi_max().powi(2)).powf(p.s());
    let confinement_max = bracket_corner.powf(2.0 * p.s());
    weight_gamma_max * (symbol_max + confinement_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_product, l2_norm, make_grid};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn params_validation() {
        assert!(OperatorParams::new(-1.5, 0.5).is_err());
        assert!(OperatorParams::new(0.0, 0.0).is_err());
        assert!(OperatorParams::new(0.0, 1.2).is_err());
        assert!(OperatorParams::new(f64::NAN, 0.5).is_err());
        let p = OperatorParams::new(0.0, 1.0).unwrap();
        assert!(p.require_theorem_range().is_err());
        let p = OperatorParams::new(0.5, 0.75).unwrap();
        assert_eq!(p.s_tilde(), 0.5);
        assert_eq!(p.weight_exponent(), 1.0);
        assert_eq!(OperatorParams::new(1.0, 0.3).unwrap().s_tilde(), 0.3);
    }

    #[test]
    fn bracket_weight_examples() {
        let g = make_grid(1, 8.0, 16).unwrap();
        let w0 = bracket_weight(&g, 0.0);
        assert!(w0.values().iter().all(|z| *z == Complex64::new(1.0, 0.0)));
        let w = bracket_weight(&g, 2.0);
        // v_8 = 0, v_9 = 1
        assert!((w.values()[8].re - 1.0).abs() < 1e-15);
        assert!((w.values()[9].re - 2.0).abs() < 1e-14);
        let wneg = bracket_weight(&g, -7.3);
        assert!((wneg.values()[8].re - 1.0).abs() < 1e-15);
        assert!(wneg.values().iter().all(|z| z.re > 0.0));
    }

    #[test]
    fn bessel_power_on_single_mode() {
        let g = make_grid(1, PI, 16).unwrap();
        let u = Field::from_fn(&g, |v| Complex64::from_polar(1.0, v[0]));
        let out = bessel_power(&u, 1.0);
        for (o, x) in out.values().iter().zip(u.values()) {
            assert!((o - x * 2f64.sqrt()).norm() < 1e-13);
        }
        let c = Field::from_real_fn(&g, |_| 3.0);
        let out = bessel_power(&c, -1.7);
        for z in out.values() {
            assert!((z - Complex64::new(3.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn bessel_power_matches_finite_difference_to_second_order() {
        // (1 - d^2/dv^2) u against the centred three-point stencil
        let err_at = |n: usize| {
            let g = make_grid(1, 8.0, n).unwrap();
            let h = g.spacing();
            let u = Field::from_real_fn(&g, |v| (-v[0] * v[0] / 2.0).exp());
            let spectral = bessel_power(&u, 2.0);
            let vals = u.values();
            (0..n)
                .map(|j| {
                    let lap = (vals[(j + 1) % n] - vals[j] * 2.0 + vals[(j + n - 1) % n]) / (h * h);
                    (spectral.values()[j] - (vals[j] - lap)).norm()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err_at(64), err_at(128));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "observed order {order}");
    }

    #[test]
    fn apply_kfp_zero_and_positivity() {
        let g = make_grid(1, 8.0, 32).unwrap();
        let p = OperatorParams::new(0.0, 0.4).unwrap();
        assert!(apply_kfp(&Field::zeros(&g), &p).is_zero());
        let u = Field::from_real_fn(&g, |v| (-(v[0] - 1.0).powi(2)).exp() * (1.0 + v[0].sin()));
        let q = inner_product(&apply_kfp(&u, &p), &u).unwrap().re;
        let expected = l2_norm(&bessel_power(&u, p.s())).powi(2)
            + l2_norm(&u.mul_real(&bracket_weight_values(&g, p.s()))).powi(2);
        assert!(q > 0.0);
        assert!((q - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn commutator_vanishes_for_trivial_orders() {
        let g = make_grid(1, 8.0, 32).unwrap();
        let u = Field::from_real_fn(&g, |v| (-v[0] * v[0]).exp());
        assert!(commutator_bessel_weight(&u, 1.3, 0.0).max_abs() < 1e-13);
        assert!(commutator_bessel_weight(&u, 0.0, 2.0).max_abs() < 1e-13);
        assert!(commutator_bessel_weight(&u, 1.0, 2.0).max_abs() > 1e-3);
    }

    #[test]
    fn symbol_bound_examples() {
        // gamma = 0, s = 1, L = pi, N = 8: xi_max = 4, corner |v| = pi
        let g = make_grid(1, PI, 8).unwrap();
        let p = OperatorParams::new(0.0, 1.0).unwrap();
        let expected = (1.0 + 16.0) + (1.0 + PI * PI);
        assert!((symbol_bound(&p, &g) - expected).abs() < 1e-12);

        // gamma < 0: weight factor is 1 at the origin
        let p = OperatorParams::new(-0.5, 0.5).unwrap();
        let expected = (1.0 + 16.0f64).sqrt() + (1.0 + PI * PI).sqrt();
        assert!((symbol_bound(&p, &g) - expected).abs() < 1e-12);

        let g2 = make_grid(2, PI, 8).unwrap();
        let p = OperatorParams::new(0.0, 1.0).unwrap();
        let expected = (1.0 + 32.0) + (1.0 + 2.0 * PI * PI);
        assert!((symbol_bound(&p, &g2) - expected).abs() < 1e-12);
    }
}
