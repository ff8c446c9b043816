//! Configuration, orchestration and file output behind the `kfp` binary.

pub mod config;
pub mod report;
pub mod run;
pub mod svg;

use std::path::{Path, PathBuf};

pub use config::{ConfigError, RunConfig};
pub use report::Report;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "KFP_OUT_DIR";

/// `--out`, else `KFP_OUT_DIR`, else `output.dir` from the config, else
/// `kfp-out`.
pub fn resolve_out_dir(flag: Option<&Path>, env: Option<&str>, config: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| env.filter(|e| !e.is_empty()).map(PathBuf::from))
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("kfp-out"))
}
