use num_complex::Complex64;

use crate::error::{KfpError, Result};
use crate::grid::{to_physical, to_spectral, Field};
use crate::norms::median;
use crate::operators::KfpOperator;

use super::BoundSource;

/// `-A u + f(t)`
fn rhs(u: &Field, t: f64, op: &KfpOperator, source: &BoundSource) -> Field {
    let mut out = op.apply(u).scaled(Complex64::new(-1.0, 0.0));
    if let Some(f) = source.at(t) {
        out = out.add_scaled(1.0, &f);
    }
    out
}

/// One classical four-stage Runge-Kutta step of `du/dt = -A u + f(t)`.
pub fn step_rk4(u: &Field, t: f64, dt: f64, op: &KfpOperator, source: &BoundSource) -> Field {
    let k1 = rhs(u, t, op, source);
    let k2 = rhs(&u.add_scaled(0.5 * dt, &k1), t + 0.5 * dt, op, source);
    let k3 = rhs(&u.add_scaled(0.5 * dt, &k2), t + 0.5 * dt, op, source);
    let k4 = rhs(&u.add_scaled(dt, &k3), t + dt, op, source);
    let mut out = u.clone();
    let w = dt / 6.0;
    for ((((o, a), b), c), d) in out
        .values_mut()
        .iter_mut()
        .zip(k1.values())
        .zip(k2.values())
        .zip(k3.values())
        .zip(k4.values())
    {
        *o += (a + b * 2.0 + c * 2.0 + d) * w;
    }
    out
}

/// Krylov settings for the implicit step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 500, restart: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Fourier-diagonal surrogate of `I + dt A`: the weights are frozen at the
/// median bracket `<v_ref>` over the grid.
#[derive(Debug, Clone)]
pub struct FourierPreconditioner {
    inverse_symbol: Vec<f64>,
}

impl FourierPreconditioner {
    pub fn new(op: &KfpOperator, dt: f64) -> Self {
        let grid = op.grid();
        let p = op.params();
        let brackets: Vec<f64> = grid.v_sq().iter().map(|vs| (1.0 + vs).sqrt()).collect();
        let v_ref = median(&brackets);
        let wg = v_ref.powf(p.gamma());
        let w2s = v_ref.powf(2.0 * p.s());
        let inverse_symbol = grid
            .xi_sq()
            .iter()
            .map(|xs| 1.0 / (1.0 + dt * wg * ((1.0 + xs).powf(p.s()) + w2s)))
            .collect();
        Self { inverse_symbol }
    }

    pub fn apply(&self, u: &Field) -> Field {
        let mut c = to_spectral(u);
        for (z, m) in c.coefficients_mut().iter_mut().zip(&self.inverse_symbol) {
            *z *= *m;
        }
        to_physical(&c)
    }
}

/// One backward-Euler step: solves `(I + dt A) w = u + dt f(t + dt)` with
/// right-preconditioned restarted GMRES, starting from `u`.
pub fn step_backward_euler(
    u: &Field,
    t: f64,
    dt: f64,
    op: &KfpOperator,
    source: &BoundSource,
    krylov: &KrylovSettings,
) -> Result<(Field, KrylovStats)> {
    let mut b = u.clone();
    if let Some(f) = source.at(t + dt) {
        b = b.add_scaled(dt, &f);
    }
    let precond = FourierPreconditioner::new(op, dt);
    gmres(
        |x| x.add_scaled(dt, &op.apply(x)),
        |x| precond.apply(x),
        &b,
        u.clone(),
        krylov,
    )
}

fn dot(a: &Field, b: &Field) -> Complex64 {
    // sum conj(a) b
    a.values().iter().zip(b.values()).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &Field) -> f64 {
    a.values().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Right-preconditioned restarted GMRES with Givens rotations. Residuals are
/// measured in the Euclidean norm of the samples.
pub fn gmres(
    apply: impl Fn(&Field) -> Field,
    precond: impl Fn(&Field) -> Field,
    b: &Field,
    x0: Field,
    settings: &KrylovSettings,
) -> Result<(Field, KrylovStats)> {
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((Field::zeros(b.grid()), KrylovStats { iterations: 0, relative_residual: 0.0 }));
    }
    let m = settings.restart.max(1);
    let mut x = x0;
    let mut iterations = 0usize;
    loop {
        let r = b.sub(&apply(&x));
        let beta = norm(&r);
        let rel = beta / b_norm;
        if !rel.is_finite() {
            return Err(KfpError::KrylovDiverged { iterations, residual: rel });
        }
        if rel < settings.tol {
            return Ok((x, KrylovStats { iterations, relative_residual: rel }));
        }
        if iterations >= settings.max_iter {
            return Err(KfpError::KrylovDiverged { iterations, residual: rel });
        }

        let mut basis: Vec<Field> = vec![r.scaled(Complex64::new(1.0 / beta, 0.0))];
        let mut directions: Vec<Field> = Vec::with_capacity(m);
        let mut hess: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<Complex64> = Vec::with_capacity(m);
        let mut g = vec![Complex64::new(0.0, 0.0); m + 1];
        g[0] = Complex64::new(beta, 0.0);

        for j in 0..m {
            let z = precond(&basis[j]);
            let mut w = apply(&z);
            directions.push(z);

            let mut col = vec![Complex64::new(0.0, 0.0); j + 2];
            for (i, vi) in basis.iter().enumerate() {
                let h = dot(vi, &w);
                col[i] = h;
                for (wv, vv) in w.values_mut().iter_mut().zip(vi.values()) {
                    *wv -= h * vv;
                }
            }
            let h_next = norm(&w);
            col[j + 1] = Complex64::new(h_next, 0.0);

            for i in 0..j {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = a * cs[i] + sn[i] * bb;
                col[i + 1] = -sn[i].conj() * a + bb * cs[i];
            }
            let (a, bb) = (col[j], col[j + 1]);
            let rad = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if rad == 0.0 {
                (1.0, Complex64::new(0.0, 0.0))
            } else if a.norm() == 0.0 {
                (0.0, bb.conj() / bb.norm())
            } else {
                (a.norm() / rad, (a / a.norm()) * bb.conj() / rad)
            };
            col[j] = a * c + s * bb;
            col[j + 1] = Complex64::new(0.0, 0.0);
            let (gj, gj1) = (g[j], g[j + 1]);
            g[j] = gj * c + s * gj1;
            g[j + 1] = -s.conj() * gj + gj1 * c;
            cs.push(c);
            sn.push(s);
            hess.push(col);
            iterations += 1;

            let done = g[j + 1].norm() / b_norm < settings.tol || iterations >= settings.max_iter;
            if done || h_next == 0.0 {
                break;
            }
            basis.push(w.scaled(Complex64::new(1.0 / h_next, 0.0)));
        }

        // back substitution on the rotated Hessenberg system
        let k = hess.len();
        let mut y = vec![Complex64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for (l, yl) in y.iter().enumerate().take(k).skip(i + 1) {
                acc -= hess[l][i] * yl;
            }
            y[i] = acc / hess[i][i];
        }
        for (yi, zi) in y.iter().zip(&directions) {
            for (xv, zv) in x.values_mut().iter_mut().zip(zi.values()) {
                *xv += yi * zv;
            }
        }
    }
}
