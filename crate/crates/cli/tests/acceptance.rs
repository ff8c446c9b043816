//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances and runtime limits are fixed; regression
//! baselines were produced by the first run of this suite and are frozen
//! below.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use kfp_cli::config::RunConfig;
use kfp_cli::run;
use kfp_core::norms::{fit_gevrey, ln_factorial};
use kfp_core::solver::{evolve_field, DenseGenerator, ExpMethod, Method, SolverConfig, SourceSpec, StepSize};
use kfp_core::verify::{
    check_commutator, check_energy, check_gevrey_frequency, check_gevrey_weight, check_interpolation_eps,
    check_interpolation_product, TestFamily, VerifyConfig,
};
use kfp_core::{
    apply_kfp, bessel_power, evolve, l2_norm, make_grid, stability_dt, to_physical, to_spectral, Field, GridSpec,
    OperatorParams, Trajectory, Verdict,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BASELINE_TOL: f64 = 1e-9;

/// Fitted commutator constants for `(r, m)` = (0.6, 2), (1.5, 2), (1, -1).
const COMMUTATOR_BASELINE: [f64; 3] = [3.30342860644490866e-1, 1.06008114155658051e0, 3.60774736581576549e-1];
/// `C_eps` for eps = 0.5, 0.1, 0.01 on each epsilon triple.
const EPS_BASELINE: [[f64; 3]; 4] = [
    [3.18101292308393946e0, 3.76248116576967817e1, 7.28162281079353306e1],
    [4.23117292728335759e0, 5.96187771987867023e1, 7.50156246620443170e1],
    [1.01400176834215543e1, 3.07929287263305334e1, 3.54867099571263083e1],
    [2.39699855746503516e1, 4.53233026843769312e3, 9.51690019649515125e3],
];
/// Fitted product-form constants on each product triple.
const PRODUCT_BASELINE: [f64; 3] = [1.00141910534793022e0, 1.00309405303482979e0, 8.07208461639799202e-1];
/// Energy-identity constant `K` of the reference run, rounded up in the 13th
/// significant digit so the bound survives last-bit differences across FFT
/// backends.
const ENERGY_K_BASELINE: f64 = 2.136606787156e7;
/// Fitted frequency constant `C` for s = 0.5 and s = 0.75.
const GEVREY_BASELINE: [f64; 2] = [6.12168310388748860e-1, 3.62600447070572818e-1];

const EPS_TRIPLES: [(f64, f64, f64); 4] = [(1.0, 1.0, 1.0), (1.0, 1.0, 0.5), (0.5, 1.0, 0.25), (2.0, 2.0, 1.0)];
const EPS_VALUES: [f64; 3] = [0.5, 0.1, 0.01];
const PRODUCT_TRIPLES: [(f64, f64, f64); 3] = [(1.0, 1.0, 0.5), (0.5, 1.0, 0.25), (2.0, 2.0, 1.0)];
const COMMUTATOR_PAIRS: [(f64, f64); 3] = [(0.6, 2.0), (1.5, 2.0), (1.0, -1.0)];

struct Outcome {
    passed: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, lines: Vec::new() }
    }

    fn require(&mut self, ok: bool, what: String) {
        self.passed &= ok;
        self.lines.push(format!("    [{}] {what}", if ok { "ok" } else { "FAILED" }));
    }

    fn baseline(&mut self, label: &str, measured: f64, archived: f64) {
        let rel = ((measured - archived) / archived).abs();
        self.require(
            rel <= BASELINE_TOL,
            format!("{label}: measured {measured:.17e}, archived {archived:.17e}, rel diff {rel:.2e}"),
        );
    }
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn reference_config() -> RunConfig {
    RunConfig::load(&config_path("reference.toml")).expect("reference config loads")
}

fn reference_trajectory(gamma: f64, s: f64, half_width: f64, k_max: usize) -> Trajectory {
    let mut config = reference_config();
    config.operator.gamma = gamma;
    config.operator.s = s;
    config.grid.half_width = half_width;
    let grid = config.grid().unwrap();
    let p = config.params().unwrap();
    evolve(&grid, &config.initial, &config.solver_config().unwrap(), &p, &config.source, k_max).unwrap()
}

fn window() -> VerifyConfig {
    VerifyConfig { t_min: 0.1, t_max: 1.0, ..VerifyConfig::default() }
}

fn single_mode(grid: &GridSpec, k: i64) -> Field {
    let xi = grid.frequency(k);
    Field::from_fn(grid, |v| Complex64::from_polar(1.0, xi * v[0]))
}

fn multiplier_exactness() -> Outcome {
    let mut out = Outcome::new();
    let g = make_grid(1, 8.0, 64).unwrap();
    for r in [-1.0, 0.6, 1.0, 2.0] {
        let mut worst: f64 = 0.0;
        for k in -32..32 {
            let u = single_mode(&g, k);
            let factor = (1.0 + g.frequency(k).powi(2)).powf(r / 2.0);
            let expected = u.scaled(Complex64::new(factor, 0.0));
            worst = worst.max(l2_norm(&bessel_power(&u, r).sub(&expected)) / l2_norm(&expected));
        }
        out.require(worst <= 1e-12, format!("r = {r}: worst relative error over 64 modes {worst:.2e} <= 1e-12"));
    }
    out
}

fn transform_parseval() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut round_trip, mut parseval): (f64, f64) = (0.0, 0.0);
    for i in 0..100 {
        let (dim, n) = if i % 2 == 0 { (1, 128) } else { (2, 32) };
        let g = make_grid(dim, 1.0 + 10.0 * rng.random::<f64>(), n).unwrap();
        let values = (0..g.total_points())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let u = Field::new(&g, values).unwrap();
        let c = to_spectral(&u);
        let norm = l2_norm(&u);
        round_trip = round_trip.max(l2_norm(&to_physical(&c).sub(&u)) / norm);
        parseval = parseval.max((c.norm() - norm).abs() / norm);
    }
    out.require(round_trip <= 1e-12, format!("round trip worst relative error {round_trip:.2e} <= 1e-12"));
    out.require(parseval <= 1e-12, format!("Parseval worst relative error {parseval:.2e} <= 1e-12"));
    out
}

/// `A` from explicit DFT sums, independent of the FFT path.
fn explicit_generator(grid: &GridSpec, p: &OperatorParams) -> DMatrix<Complex64> {
    let n = grid.n_per_axis();
    let l = grid.half_width();
    let xs: Vec<f64> = (0..n).map(|j| -l + j as f64 * 2.0 * l / n as f64).collect();
    let ks: Vec<f64> = (0..n).map(|i| (i as f64 - (n / 2) as f64) * PI / l).collect();
    let bessel = DMatrix::from_fn(n, n, |i, j| {
        ks.iter()
            .map(|k| Complex64::from_polar((1.0 + k * k).powf(p.s()) / n as f64, k * (xs[i] - xs[j])))
            .sum::<Complex64>()
    });
    let w = |m: f64| DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new((1.0 + xs[i] * xs[i]).powf(m / 2.0), 0.0) } else { Complex64::new(0.0, 0.0) });
    w(p.gamma()) * (bessel + w(2.0 * p.s()))
}

fn dense_oracle_equivalence() -> Outcome {
    let mut out = Outcome::new();
    let g = make_grid(1, 8.0, 32).unwrap();
    let p = OperatorParams::new(0.5, 0.5).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = Field::new(&g, (0..32).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()).unwrap();
    let dense = explicit_generator(&g, &p) * DVector::from_iterator(32, u.values().iter().copied());
    let fast = DVector::from_iterator(32, apply_kfp(&u, &p).values().iter().copied());
    let rel = (fast - &dense).norm() / dense.norm();
    out.require(rel <= 1e-12, format!("apply_kfp vs explicit dense matrix: {rel:.2e} <= 1e-12"));

    let generator = DenseGenerator::new(&g, &p).unwrap();
    let u0 = Field::from_real_fn(&g, |v| (-v[0] * v[0] / 2.0).exp());
    let t = 0.5;
    let exact = generator.propagate(&u0, t, ExpMethod::SymmetricEigen).unwrap();
    let error = |method: Method, dt: StepSize, u0: &Field, exact: &Field| {
        let cfg = SolverConfig::new(method, dt, t, vec![t]).unwrap();
        let tr = evolve_field(u0.clone(), &cfg, &p, &SourceSpec::Zero, 1).unwrap();
        l2_norm(&tr.final_sample().field.sub(exact)) / l2_norm(exact)
    };
    let dt_stab = stability_dt(&p, &g);
    let rk4_err = error(Method::Rk4, StepSize::AUTO, &u0, &exact);
    out.require(
        rk4_err <= 1e-6,
        format!("RK4 at stability_dt = {dt_stab:.4} vs exp(-tA)u0, Gaussian u0, t = 0.5: relative error {rk4_err:.3e} <= 1e-6"),
    );
    // Best case: data along the slowest eigenvector of A.
    let slowest = {
        let a = generator.matrix();
        let eig = a.clone().complex_eigenvalues();
        let lambda = eig.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let shifted = a - DMatrix::<f64>::identity(32, 32) * (lambda * (1.0 + 1e-10));
        let mut x = DVector::from_element(32, 1.0);
        let lu = shifted.lu();
        for _ in 0..20 {
            x = lu.solve(&x).unwrap();
            x /= x.norm();
        }
        Field::new(&g, x.iter().map(|v| Complex64::new(*v, 0.0)).collect()).unwrap()
    };
    let slow_exact = generator.propagate(&slowest, t, ExpMethod::SymmetricEigen).unwrap();
    let floor = error(Method::Rk4, StepSize::AUTO, &slowest, &slow_exact);
    out.lines.push(format!(
        "    [info] RK4 error at stability_dt for the slowest eigenvector (best case over all u0): {floor:.3e}"
    ));

    let slope = |method: Method, dts: &[f64]| -> Vec<f64> {
        let errs: Vec<f64> = dts.iter().map(|&dt| error(method, StepSize::Fixed(dt), &u0, &exact)).collect();
        errs.windows(2).map(|e| (e[0] / e[1]).log2()).collect()
    };
    for s in slope(Method::BackwardEuler, &[0.02, 0.01, 0.005]) {
        out.require((s - 1.0).abs() <= 0.1, format!("backward Euler observed order {s:.3} in 1.0 +- 0.1"));
    }
    for s in slope(Method::Rk4, &[0.05, 0.025, 0.0125]) {
        out.require((s - 4.0).abs() <= 0.3, format!("RK4 observed order {s:.3} in 4.0 +- 0.3"));
    }
    out
}

fn lemma_family() -> TestFamily {
    TestFamily::standard(&make_grid(1, 32.0, 512).unwrap())
}

fn commutator_bound() -> Outcome {
    let mut out = Outcome::new();
    let family = lemma_family();
    for (i, &(r, m)) in COMMUTATOR_PAIRS.iter().enumerate() {
        let c = check_commutator(&family, r, m, &VerifyConfig::default()).unwrap();
        let finite = c.details.iter().all(|d| d.value.is_finite());
        out.require(
            finite && c.stability_ratio <= 1e2,
            format!("(r, m) = ({r}, {m}): ratios finite = {finite}, spread {:.3} <= 1e2", c.stability_ratio),
        );
        out.baseline(&format!("(r, m) = ({r}, {m}) fitted constant"), c.fitted_constant, COMMUTATOR_BASELINE[i]);
    }
    out
}

fn interpolation() -> Outcome {
    let mut out = Outcome::new();
    let family = lemma_family();
    let cfg = VerifyConfig::default();
    for (i, &(k, l, d)) in EPS_TRIPLES.iter().enumerate() {
        let c = check_interpolation_eps(&family, k, l, d, &EPS_VALUES, &cfg).unwrap();
        for (j, row) in c.details.iter().enumerate() {
            out.require(row.value.is_finite(), format!("(k, l, delta) = ({k}, {l}, {d}), {}: C = {:.6e} finite", row.label, row.value));
            out.baseline(&format!("C for ({k}, {l}, {d}), {}", row.label), row.value, EPS_BASELINE[i][j]);
        }
    }
    for (i, &(k, l, d)) in PRODUCT_TRIPLES.iter().enumerate() {
        let c = check_interpolation_product(&family, k, l, d, &cfg).unwrap();
        out.require(
            c.stability_ratio <= 1e2 && c.fitted_constant.is_finite(),
            format!("product ({k}, {l}, {d}): spread {:.3} <= 1e2", c.stability_ratio),
        );
        out.baseline(&format!("product ({k}, {l}, {d}) fitted constant"), c.fitted_constant, PRODUCT_BASELINE[i]);
    }
    out
}

fn energy_estimate(reference: &Trajectory) -> Outcome {
    let mut out = Outcome::new();
    let check = check_energy(reference, &VerifyConfig::default()).unwrap();
    let finite = check.details.iter().all(|d| d.value.is_finite());
    out.require(finite, format!("E(t) finite at all {} samples", check.details.len()));
    let k = check.extras["energy_identity_K"];
    out.baseline("energy-identity K", k, ENERGY_K_BASELINE);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for s in &reference.samples {
        if let Some(r) = s.energy_residual {
            let bound = ENERGY_K_BASELINE * r.dt.powi(4);
            ok &= r.residual <= bound;
            worst = worst.max(r.residual / bound);
        }
    }
    out.require(ok, format!("residual <= archived K dt^4 at every sample (worst ratio {worst:.6})"));

    let flat = reference_trajectory(0.0, 0.5, 12.0, 2);
    let strictly = flat.samples.windows(2).all(|w| w[1].report.l2 < w[0].report.l2);
    out.require(strictly, "gamma = 0: ||u(t)|| strictly decreasing sample to sample".into());
    out
}

fn gevrey_smoothing(reference: &Trajectory) -> Outcome {
    let mut out = Outcome::new();
    let runs = [("s = 0.5", reference.clone()), ("s = 0.75", reference_trajectory(0.5, 0.75, 12.0, 10))];
    for (i, (label, tr)) in runs.iter().enumerate() {
        let c = check_gevrey_frequency(tr, 10, &window()).unwrap();
        let fits: Vec<_> = c.details.iter().filter(|d| d.t.is_some()).collect();
        let worst = fits.iter().map(|d| d.value).fold(0.0, f64::max);
        out.require(
            c.verdict == Verdict::Pass && fits.iter().all(|d| d.value <= 3.0),
            format!("{label}: {} samples in [0.1, 1], worst stability ratio {worst:.4} <= 3", fits.len()),
        );
        out.baseline(&format!("{label}: fitted C"), c.fitted_constant, GEVREY_BASELINE[i]);
    }
    out
}

fn weight_decay() -> Outcome {
    let mut out = Outcome::new();
    let tr = reference_trajectory(0.5, 0.5, 16.0, 10);
    let c = check_gevrey_weight(&tr, 8, &window()).unwrap();
    let worst = c.details.iter().filter(|d| d.label != "ceiling").map(|d| d.value).fold(0.0, f64::max);
    out.require(worst <= 3.0, format!("L = 16, k <= 8: worst stability ratio {worst:.4} <= 3"));
    out.require(
        c.verdict != Verdict::TruncationLimited,
        format!("no truncation-limited verdict (verdict {:?})", c.verdict),
    );
    out
}

fn determinism() -> Outcome {
    let mut out = Outcome::new();
    let config = reference_config();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut bytes = Vec::new();
    for dir in &dirs {
        let result = run::run(&config).unwrap();
        run::write_run(&result, dir.path(), false).unwrap();
        bytes.push(std::fs::read(dir.path().join("report.json")).unwrap());
    }
    out.require(bytes[0] == bytes[1], format!("two runs give identical report.json ({} bytes)", bytes[0].len()));
    out
}

fn synthetic_envelope() -> Outcome {
    let mut out = Outcome::new();
    for t in [0.25f64, 1.0] {
        let seq: Vec<f64> = (0..=20).map(|k| ln_factorial(k) + k as f64 * (2.0 / t).ln()).collect();
        let fit = fit_gevrey(&seq, t, 20).unwrap();
        let worst = fit.per_k_constant[1..].iter().map(|c| (c - 2.0).abs()).fold(0.0, f64::max);
        out.require(worst <= 1e-12, format!("t = {t}: max |C_k - 2| over 1 <= k <= 20 is {worst:.2e} <= 1e-12"));
    }
    out
}

fn main() -> ExitCode {
    // criteria 6 and 7 share one reference trajectory; each is charged its cost
    let start = Instant::now();
    let reference = reference_trajectory(0.5, 0.5, 12.0, 10);
    let reference_time = start.elapsed();

    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(u32, &str, f64, Duration, Check)> = vec![
        (1, "multiplier exactness", 1.0, Duration::ZERO, Box::new(multiplier_exactness)),
        (2, "transform round trip and Parseval", 5.0, Duration::ZERO, Box::new(transform_parseval)),
        (3, "dense-oracle equivalence", 30.0, Duration::ZERO, Box::new(dense_oracle_equivalence)),
        (4, "commutator bound", 10.0, Duration::ZERO, Box::new(commutator_bound)),
        (5, "interpolation checks", 10.0, Duration::ZERO, Box::new(interpolation)),
        (6, "energy estimate", 60.0, reference_time, Box::new(|| energy_estimate(&reference))),
        (7, "Gevrey smoothing", 120.0, reference_time, Box::new(|| gevrey_smoothing(&reference))),
        (8, "weight decay", 120.0, Duration::ZERO, Box::new(weight_decay)),
        (9, "determinism", 120.0, Duration::ZERO, Box::new(determinism)),
        (10, "synthetic envelope self-test", 1.0, Duration::ZERO, Box::new(synthetic_envelope)),
    ];
    let mut all = true;
    for (id, name, limit, shared, check) in &criteria {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = (start.elapsed() + *shared).as_secs_f64();
        outcome.require(elapsed < *limit, format!("runtime {elapsed:.3} s < {limit} s"));
        all &= outcome.passed;
        println!("ACCEPTANCE {id:>2} {} {name}", if outcome.passed { "PASS" } else { "FAIL" });
        for line in &outcome.lines {
            println!("{line}");
        }
    }
    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria FAILED");
        ExitCode::FAILURE
    }
}
