//! `report.json` and `trajectory.csv`.

use std::collections::BTreeMap;
use std::fmt::Write;

use kfp_core::verify::CheckResult;
use kfp_core::Trajectory;
use serde::Serialize;

use crate::config::RunConfig;

pub const REPORT_SCHEMA: &str = "kfp-report/1";
pub const TRAJECTORY_SCHEMA: &str = "kfp-trajectory/1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub name: String,
    pub reason: String,
}

/// Everything a run or lemma check produces, minus the raw fields. Contains
/// no timestamps or paths, so identical inputs give identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub versions: BTreeMap<String, String>,
    pub seed: u64,
    pub config: RunConfig,
    pub derived: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, f64>,
    pub checks: Vec<CheckResult>,
    pub skipped: Vec<Skipped>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let versions = BTreeMap::from([
            ("kfp-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("kfp-core".to_string(), kfp_core::VERSION.to_string()),
        ]);
        let thresholds = BTreeMap::from([
            ("gevrey_stability_ratio".to_string(), config.verify.gevrey_threshold),
            ("lemma_spread".to_string(), config.verify.lemma_threshold),
            ("boundary_magnitude".to_string(), config.verify.boundary_tolerance),
        ]);
        Self {
            schema: REPORT_SCHEMA,
            command: command.to_string(),
            versions,
            seed: config.seed(),
            config: config.clone(),
            derived: BTreeMap::new(),
            thresholds,
            checks: Vec::new(),
            skipped: Vec::new(),
            warnings: Vec::new(),
            passed: false,
        }
    }

    /// Sets `passed` from the checks: every check must pass, skipped ones do
    /// not count.
    pub fn settle(&mut self) {
        self.passed = self.checks.iter().all(CheckResult::passed);
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn log10_cell(ln: f64) -> String {
    let v = ln / std::f64::consts::LN_10;
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}

/// One row per sample: `t, l2, h_s_gamma2, w_gamma2s, log10_a_0..k,
/// log10_b_0..k`, preceded by a schema comment.
pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    let k = trajectory.k_max;
    let mut out = String::new();
    let _ = writeln!(out, "# {TRAJECTORY_SCHEMA}");
    let mut header = vec!["t".to_string(), "l2".into(), "h_s_gamma2".into(), "w_gamma2s".into()];
    header.extend((0..=k).map(|i| format!("log10_a_{i}")));
    header.extend((0..=k).map(|i| format!("log10_b_{i}")));
    let _ = writeln!(out, "{}", header.join(","));
    for s in &trajectory.samples {
        let r = &s.report;
        let mut row = vec![format!("{:e}", s.t), format!("{:e}", r.l2), format!("{:e}", r.h_s_gamma2), format!("{:e}", r.w_gamma2s)];
        row.extend(r.log_a.iter().map(|x| log10_cell(*x)));
        row.extend(r.log_b.iter().map(|x| log10_cell(*x)));
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}
