//! The three commands: a single run, the lemma checks and a parameter sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kfp_core::norms::boundary_magnitude;
use kfp_core::verify::{
    check_energy, check_gevrey_frequency, check_gevrey_frequency_with_order, check_gevrey_weight,
    run_lemma_checks, CheckResult, TestFamily,
};
use kfp_core::{evolve, stability_dt, symbol_bound, KfpError, Trajectory};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::report::{trajectory_csv, Report, Skipped};
use crate::svg::{Chart, Series};

pub struct RunOutput {
    pub report: Report,
    pub trajectory: Trajectory,
}

/// Records a check, or the reason it could not be evaluated.
fn record(report: &mut Report, name: &str, outcome: kfp_core::Result<CheckResult>) -> Result<()> {
    match outcome {
        Ok(mut check) => {
            check.name = name.to_string();
            report.checks.push(check);
            Ok(())
        }
        Err(e @ (KfpError::OutsideTheoremRange(_) | KfpError::InvalidArgument(_))) => {
            report.skipped.push(Skipped { name: name.to_string(), reason: e.to_string() });
            Ok(())
        }
        Err(e) => Err(e).with_context(|| format!("check `{name}`")),
    }
}

fn boundary_warning(trajectory: &Trajectory, tolerance: f64) -> Option<String> {
    let m = trajectory.params.weight_exponent();
    let hits: Vec<(f64, f64)> = trajectory
        .samples
        .iter()
        .map(|s| (s.t, boundary_magnitude(&s.field, m)))
        .filter(|(_, b)| *b > tolerance)
        .collect();
    let worst = hits.iter().map(|h| h.1).fold(0.0, f64::max);
    hits.first().map(|(t, _)| {
        format!(
            "boundary: <v>^{m}|u| exceeds {tolerance:e} on boundary cells at {} of {} samples (first t = {t}, max {worst:e}); enlarge the box",
            hits.len(),
            trajectory.samples.len()
        )
    })
}

/// Integrates the configured problem and evaluates the energy and smoothing
/// checks.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let grid = config.grid()?;
    let p = config.params()?;
    let solver = config.solver_config()?;
    let trajectory = evolve(&grid, &config.initial, &solver, &p, &config.source, config.verify.k_max)
        .context("time integration failed")?;

    let mut report = Report::new("run", config);
    let derived = &mut report.derived;
    derived.insert("symbol_bound".into(), symbol_bound(&p, &grid));
    derived.insert("stability_dt".into(), stability_dt(&p, &grid));
    derived.insert("dt".into(), trajectory.dt);
    derived.insert("s_tilde".into(), p.s_tilde());
    derived.insert("weight_exponent".into(), p.weight_exponent());
    derived.insert("final_l2".into(), trajectory.final_sample().report.l2);

    let vc = config.verify.verify_config();
    record(&mut report, "energy", check_energy(&trajectory, &vc))?;
    record(
        &mut report,
        "gevrey-frequency",
        check_gevrey_frequency(&trajectory, config.verify.k_max, &vc),
    )?;
    for &order in &config.verify.extra_frequency_orders {
        record(
            &mut report,
            &format!("gevrey-frequency[order={order}]"),
            check_gevrey_frequency_with_order(&trajectory, config.verify.k_max, order, &vc),
        )?;
    }
    record(
        &mut report,
        "gevrey-weight",
        check_gevrey_weight(&trajectory, config.verify.weight_k_max, &vc),
    )?;
    if let Some(w) = boundary_warning(&trajectory, config.verify.boundary_tolerance) {
        report.warnings.push(w);
    }
    for check in &report.checks {
        if check.verdict == kfp_core::Verdict::TruncationLimited {
            report
                .warnings
                .push(format!("{}: truncation-limited, the box is too small for the requested k_max", check.name));
        }
    }
    report.settle();
    Ok(RunOutput { report, trajectory })
}

/// Evaluates the commutator and interpolation checks over the test family on
/// the configured grid.
pub fn verify_lemmas(config: &RunConfig) -> Result<Report> {
    let grid = config.grid()?;
    let p = config.params()?;
    let family = TestFamily::with_seed(&grid, config.lemmas.family_seed);
    let plan = config.lemmas.plan().with_params(&p);
    let mut report = Report::new("verify-lemmas", config);
    report.checks = run_lemma_checks(&family, &plan, &config.verify.verify_config())?;
    let weak = family.under_resolved();
    if !weak.is_empty() {
        report.warnings.push(format!(
            "low-confidence: family members [{}] carry spectral mass on the band edge; refine the grid",
            weak.join(", ")
        ));
    }
    report.derived.insert("family_size".into(), family.members.len() as f64);
    report.settle();
    Ok(report)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn plots(out: &RunOutput) -> Vec<(&'static str, String)> {
    let samples = &out.trajectory.samples;
    let series = |label: &str, f: &dyn Fn(&kfp_core::Sample) -> f64| Series {
        label: label.to_string(),
        points: samples.iter().map(|s| (s.t, f(s))).collect(),
    };
    let norms = Chart {
        title: "norms along the trajectory".into(),
        x_label: "t".into(),
        y_label: "norm".into(),
        log_x: true,
        log_y: true,
        series: vec![
            series("L2", &|s| s.report.l2),
            series("H^s_{g/2}", &|s| s.report.h_s_gamma2),
            series("L2_{g/2+s}", &|s| s.report.w_gamma2s),
        ],
        reference_lines: vec![],
    };
    let mut fits = Chart {
        title: "Gevrey fit stability ratio".into(),
        x_label: "t".into(),
        y_label: "max C_k / median C_k".into(),
        log_x: true,
        log_y: false,
        series: vec![],
        reference_lines: vec![(out.report.thresholds["gevrey_stability_ratio"], "threshold".into())],
    };
    for check in out.report.checks.iter().filter(|c| c.name.starts_with("gevrey")) {
        fits.series.push(Series {
            label: check.name.clone(),
            points: check
                .details
                .iter()
                .filter(|d| d.label != "ceiling")
                .filter_map(|d| Some((d.t?, d.value)))
                .collect(),
        });
    }
    vec![("norms.svg", norms.render()), ("gevrey.svg", fits.render())]
}

/// Writes `report.json`, `trajectory.csv` and, when asked, the SVG charts.
pub fn write_run(out: &RunOutput, dir: &Path, plot: bool) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write(&dir.join("report.json"), &out.report.to_json())?;
    write(&dir.join("trajectory.csv"), &trajectory_csv(&out.trajectory))?;
    if plot {
        for (name, svg) in plots(out) {
            write(&dir.join(name), &svg)?;
        }
    }
    Ok(())
}

pub fn write_lemmas(report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write(&dir.join("report.json"), &report.to_json())
}

/// One row of the sweep index.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub gamma: f64,
    pub s: f64,
    pub dir: PathBuf,
    pub outcome: std::result::Result<Report, String>,
}

impl SweepEntry {
    pub fn passed(&self) -> bool {
        self.outcome.as_ref().is_ok_and(|r| r.passed)
    }
}

fn fitted(report: &Report, name: &str) -> String {
    report.check(name).map_or(String::new(), |c| format!("{:e}", c.fitted_constant))
}

/// Runs every `(gamma, s)` combination in parallel, each into its own
/// subdirectory, and writes `index.csv`.
pub fn sweep(config: &RunConfig, gammas: &[f64], ss: &[f64], dir: &Path, plot: bool) -> Result<Vec<SweepEntry>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let jobs: Vec<(f64, f64)> = gammas.iter().flat_map(|&g| ss.iter().map(move |&s| (g, s))).collect();
    let entries: Vec<SweepEntry> = jobs
        .par_iter()
        .map(|&(gamma, s)| {
            let sub = dir.join(format!("gamma_{gamma}_s_{s}"));
            let mut cfg = config.clone();
            cfg.operator.gamma = gamma;
            cfg.operator.s = s;
            let outcome = cfg
                .validate()
                .map_err(anyhow::Error::from)
                .and_then(|_| run(&cfg))
                .and_then(|out| write_run(&out, &sub, plot).map(|_| out.report))
                .map_err(|e| format!("{e:#}"));
            SweepEntry { gamma, s, dir: sub, outcome }
        })
        .collect();

    let mut index = String::from("gamma,s,dir,passed,energy_B0,gevrey_frequency_C,gevrey_weight_C,error\n");
    for e in &entries {
        let name = e.dir.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        let (b0, fc, wc, err) = match &e.outcome {
            Ok(r) => (fitted(r, "energy"), fitted(r, "gevrey-frequency"), fitted(r, "gevrey-weight"), String::new()),
            Err(msg) => (String::new(), String::new(), String::new(), msg.replace([',', '\n'], ";")),
        };
        let _ = writeln!(index, "{},{},{},{},{b0},{fc},{wc},{err}", e.gamma, e.s, name, e.passed());
    }
    write(&dir.join("index.csv"), &index)?;
    Ok(entries)
}
