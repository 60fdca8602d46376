//! Runs an experiment in a worker pool and writes its artifacts and manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiments::{self, Check, Output};

pub const MANIFEST_SCHEMA: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub total: usize,
    pub failed: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub artifacts: Vec<Artifact>,
    pub stages: Vec<StageTiming>,
    pub checks: Vec<Check>,
    pub summary: CheckSummary,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.summary.pass
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Output directory: the command-line override, then the config, then
/// `runs/<experiment>`.
pub fn output_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| Path::new("runs").join(cfg.experiment.name()))
}

/// Runs the configured experiment and writes CSV, JSON and SVG artifacts
/// plus `manifest.json` into the output directory. Files are written by this
/// thread only, after the computation has finished.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<RunManifest> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let dir = output_dir(&cfg, opts);

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = opts.jobs {
        if k == 0 {
            return Err(CliError::Pool("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| CliError::Pool(e.to_string()))?;
    let output: Output = pool.install(|| experiments::run(&cfg))?;

    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut artifacts = Vec::new();
    for (name, bytes) in output.files()? {
        let path = dir.join(&name);
        fs::write(&path, &bytes).map_err(io_err(&path))?;
        artifacts.push(Artifact {
            file: name,
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len(),
        });
    }
    let failed = output.checks.iter().filter(|c| !c.pass).count();
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA,
        experiment: cfg.experiment.name().into(),
        artifacts,
        stages: output
            .stages
            .iter()
            .map(|(stage, seconds)| StageTiming {
                stage: stage.clone(),
                seconds: *seconds,
            })
            .collect(),
        summary: CheckSummary {
            total: output.checks.len(),
            failed,
            pass: failed == 0,
        },
        checks: output.checks,
        config: cfg,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(manifest)
}

/// Times a stage and records it in the output.
pub(crate) fn timed<T>(out: &mut Output, stage: impl Into<String>, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let v = f();
    out.stages.push((stage.into(), start.elapsed().as_secs_f64()));
    v
}
