//! TOML run configuration.

use std::path::{Path, PathBuf};

use kfp_core::solver::{default_sample_times, KrylovSettings, Method, SolverConfig, StepSize};
use kfp_core::verify::{LemmaPlan, VerifyConfig};
use kfp_core::{make_grid, GridSpec, InitialDataSpec, OperatorParams, SourceSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), message: message.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub half_width: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub gamma: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub method: Method,
    pub dt: StepSize,
    pub t_end: f64,
    /// Number of log-spaced samples in `[t_end / 100, t_end]`; ignored when
    /// `sample_times` is given.
    pub samples: usize,
    pub sample_times: Option<Vec<f64>>,
    pub krylov_tol: f64,
    pub krylov_max_iter: usize,
    pub krylov_restart: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let krylov = KrylovSettings::default();
        Self {
            method: Method::Rk4,
            dt: StepSize::AUTO,
            t_end: 1.0,
            samples: 32,
            sample_times: None,
            krylov_tol: krylov.tol,
            krylov_max_iter: krylov.max_iter,
            krylov_restart: krylov.restart,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub k_max: usize,
    pub weight_k_max: usize,
    pub t_min: f64,
    pub t_max: Option<f64>,
    pub gevrey_threshold: f64,
    pub lemma_threshold: f64,
    /// Extra multiplier orders for the frequency fit, reported alongside the
    /// default `2 s~`.
    pub extra_frequency_orders: Vec<f64>,
    /// Sup of `<v>^{gamma/2+s} |u|` on boundary cells above which a warning
    /// is raised.
    pub boundary_tolerance: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        let d = VerifyConfig::default();
        Self {
            k_max: 10,
            weight_k_max: 8,
            t_min: d.t_min,
            t_max: None,
            gevrey_threshold: d.gevrey_threshold,
            lemma_threshold: d.lemma_threshold,
            extra_frequency_orders: Vec::new(),
            boundary_tolerance: 1e-10,
        }
    }
}

impl VerifySection {
    pub fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            t_min: self.t_min,
            t_max: self.t_max.unwrap_or(f64::INFINITY),
            gevrey_threshold: self.gevrey_threshold,
            lemma_threshold: self.lemma_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaSection {
    /// First seed of the three random band-limited family members.
    pub family_seed: u64,
    /// `(r, m)` pairs.
    pub commutator: Vec<(f64, f64)>,
    /// `(k, l, delta)` triples for the epsilon form.
    pub eps_triples: Vec<(f64, f64, f64)>,
    pub eps_values: Vec<f64>,
    /// `(k, l, delta)` triples for the product form.
    pub product_triples: Vec<(f64, f64, f64)>,
}

impl Default for LemmaSection {
    fn default() -> Self {
        let plan = LemmaPlan::default();
        Self {
            family_seed: 1,
            commutator: plan.commutator,
            eps_triples: plan.eps_triples,
            eps_values: plan.eps_values,
            product_triples: plan.product_triples,
        }
    }
}

impl LemmaSection {
    pub fn plan(&self) -> LemmaPlan {
        LemmaPlan {
            commutator: self.commutator.clone(),
            eps_triples: self.eps_triples.clone(),
            eps_values: self.eps_values.clone(),
            product_triples: self.product_triples.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub operator: OperatorSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub initial: InitialDataSpec,
    #[serde(default)]
    pub source: SourceSpec,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub lemmas: LemmaSection,
    #[serde(default, skip_serializing)]
    pub output: OutputSection,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |span| line_column(text, span.start));
            ConfigError::Parse { path: path.to_path_buf(), line, column, message: e.message().to_string() }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid()?;
        self.params()?;
        self.solver_config()?;
        self.initial.validate().map_err(|e| invalid("initial", e))?;
        self.source.validate().map_err(|e| invalid("source", e))?;
        let v = &self.verify;
        if v.k_max < 1 {
            return Err(invalid("verify.k_max", "must be at least 1"));
        }
        if v.weight_k_max < 1 || v.weight_k_max > v.k_max {
            return Err(invalid("verify.weight_k_max", "must lie in 1..=verify.k_max"));
        }
        if !(v.t_min >= 0.0 && v.t_min.is_finite()) {
            return Err(invalid("verify.t_min", "must be finite and nonnegative"));
        }
        if let Some(t_max) = v.t_max {
            if !(t_max > v.t_min) {
                return Err(invalid("verify.t_max", "must exceed verify.t_min"));
            }
        }
        if !(v.gevrey_threshold >= 1.0) {
            return Err(invalid("verify.gevrey_threshold", "must be at least 1"));
        }
        if !(v.lemma_threshold >= 1.0) {
            return Err(invalid("verify.lemma_threshold", "must be at least 1"));
        }
        if v.extra_frequency_orders.iter().any(|o| !(*o > 0.0 && o.is_finite())) {
            return Err(invalid("verify.extra_frequency_orders", "orders must be positive"));
        }
        if !(v.boundary_tolerance >= 0.0) {
            return Err(invalid("verify.boundary_tolerance", "must be nonnegative"));
        }
        let plan = &self.lemmas;
        if plan.commutator.iter().any(|(r, m)| !(*r > 0.0) || !m.is_finite()) {
            return Err(invalid("lemmas.commutator", "each pair needs r > 0 and finite m"));
        }
        if plan.eps_values.iter().any(|e| !(*e > 0.0)) {
            return Err(invalid("lemmas.eps_values", "must be positive"));
        }
        let positive = |t: &(f64, f64, f64)| t.0 > 0.0 && t.1 > 0.0 && t.2 > 0.0;
        if !plan.eps_triples.iter().all(positive) {
            return Err(invalid("lemmas.eps_triples", "k, l and delta must be positive"));
        }
        if !plan.product_triples.iter().all(positive) {
            return Err(invalid("lemmas.product_triples", "k, l and delta must be positive"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec, ConfigError> {
        make_grid(self.grid.dim, self.grid.half_width, self.grid.n).map_err(|e| invalid("grid", e))
    }

    pub fn params(&self) -> Result<OperatorParams, ConfigError> {
        OperatorParams::new(self.operator.gamma, self.operator.s).map_err(|e| invalid("operator", e))
    }

    pub fn solver_config(&self) -> Result<SolverConfig, ConfigError> {
        let s = &self.solver;
        if s.sample_times.is_none() && s.samples == 0 {
            return Err(invalid("solver.samples", "must be positive"));
        }
        if !(s.t_end > 0.0 && s.t_end.is_finite()) {
            return Err(invalid("solver.t_end", "must be positive"));
        }
        let times = s.sample_times.clone().unwrap_or_else(|| default_sample_times(s.t_end, s.samples));
        let mut cfg = SolverConfig::new(s.method, s.dt, s.t_end, times).map_err(|e| invalid("solver", e))?;
        cfg.krylov = KrylovSettings { tol: s.krylov_tol, max_iter: s.krylov_max_iter, restart: s.krylov_restart };
        cfg.validate().map_err(|e| invalid("solver.krylov", e))?;
        if s.krylov_restart == 0 {
            return Err(invalid("solver.krylov_restart", "must be positive"));
        }
        Ok(cfg)
    }

    /// Replaces the seed of random initial data and of the lemma family.
    pub fn override_seed(&mut self, seed: u64) {
        if let InitialDataSpec::RoughRandom { seed: s, .. } = &mut self.initial {
            *s = seed;
        }
        self.lemmas.family_seed = seed;
    }

    /// Seed recorded in reports: the initial-data seed when present, else the
    /// lemma family seed.
    pub fn seed(&self) -> u64 {
        match self.initial {
            InitialDataSpec::RoughRandom { seed, .. } => seed,
            _ => self.lemmas.family_seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
dim = 1
half_width = 12.0
n = 64

[operator]
gamma = 0.5
s = 0.5

[initial]
kind = "gaussian"
amplitude = 1.0
width = 1.0
"#;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_toml(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.solver.dt, StepSize::AUTO);
        assert_eq!(c.solver.samples, 32);
        assert_eq!(c.verify.k_max, 10);
        assert_eq!(c.source, SourceSpec::Zero);
        assert_eq!(c.solver_config().unwrap().sample_times.len(), 32);
    }

    #[test]
    fn fixed_dt_and_explicit_samples() {
        let text = format!("{MINIMAL}\n[solver]\ndt = 0.01\nt_end = 0.5\nsample_times = [0.1, 0.5]\nmethod = \"backward_euler\"\n");
        let c = parse(&text).unwrap();
        assert_eq!(c.solver.dt, StepSize::Fixed(0.01));
        assert_eq!(c.solver.method, Method::BackwardEuler);
    }

    #[test]
    fn unknown_key_reports_position() {
        let text = MINIMAL.replace("n = 64", "n = 64\npoints = 3");
        match parse(&text) {
            Err(ConfigError::Parse { line, column, message, .. }) => {
                assert_eq!(line, 6);
                assert_eq!(column, 1);
                assert!(message.contains("points"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn validation_names_the_field() {
        let cases = [
            (MINIMAL.replace("s = 0.5", "s = 1.5"), "operator"),
            (MINIMAL.replace("n = 64", "n = 63"), "grid"),
            (format!("{MINIMAL}\n[verify]\nk_max = 0\n"), "verify.k_max"),
            (format!("{MINIMAL}\n[solver]\nt_end = -1.0\n"), "solver.t_end"),
            (format!("{MINIMAL}\n[verify]\nweight_k_max = 12\n"), "verify.weight_k_max"),
        ];
        for (text, field) in cases {
            match parse(&text) {
                Err(ConfigError::Invalid { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected invalid {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn seed_override_reaches_rough_data_and_family() {
        let text = MINIMAL.replace(
            "kind = \"gaussian\"\namplitude = 1.0\nwidth = 1.0",
            "kind = \"rough_random\"\nepsilon = 0.5\nseed = 7",
        );
        let mut c = parse(&text).unwrap();
        assert_eq!(c.seed(), 7);
        c.override_seed(11);
        assert_eq!(c.seed(), 11);
        assert_eq!(c.lemmas.family_seed, 11);
    }
}
