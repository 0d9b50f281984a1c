use std::fs;
use std::path::{Path, PathBuf};

use recomp::corpus::BucketRange;
use recomp::llm::HttpConfig;
use recomp::metrics::DEFAULT_THRESHOLDS;
use recomp::pipeline::PipelineConfig;
use serde::Deserialize;

use crate::args::{BackendKind, Command, CommonArgs};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Contents of `--config`. Every field is optional; flags override it.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub pipeline: PipelineConfig,
    pub http: HttpConfig,
    pub rules: Option<PathBuf>,
    pub bucket_range: Option<String>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub thresholds: Option<Vec<u32>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Refine,
    Baseline,
    PreprocessOnly,
    Report,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub manifest: PathBuf,
    pub backend: BackendKind,
    pub fixtures: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub jobs: usize,
    pub rules_path: Option<PathBuf>,
    pub bucket_range: BucketRange,
    pub out: PathBuf,
    pub thresholds: Vec<u32>,
    pub outcomes: Option<PathBuf>,
    pub pipeline: PipelineConfig,
    pub http: HttpConfig,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl RunConfig {
    pub fn resolve(command: Command) -> Result<Self, ConfigError> {
        let (mode, common) = match &command {
            Command::Refine(a) => (Mode::Refine, &a.common),
            Command::Baseline(c) => (Mode::Baseline, c),
            Command::Preprocess(c) => (Mode::PreprocessOnly, c),
            Command::Report(a) => (Mode::Report, &a.common),
        };
        let CommonArgs {
            manifest,
            rules,
            bucket_range,
            out,
            jobs,
            seed,
            config,
        } = common;
        let file = match config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };

        let range_text = bucket_range.clone().or(file.bucket_range);
        let bucket_range = match range_text {
            Some(t) => BucketRange::parse(&t).map_err(|e| ConfigError(format!("--bucket-range: {e}")))?,
            None => BucketRange::default(),
        };
        let jobs = jobs.or(file.jobs).unwrap_or_else(default_jobs);
        if jobs == 0 {
            return Err(ConfigError("--jobs must be at least 1".into()));
        }

        let mut pipeline = file.pipeline;
        if let Some(s) = seed {
            pipeline.seed = *s;
        }
        let mut cfg = RunConfig {
            mode,
            manifest: manifest.clone(),
            backend: BackendKind::Replay,
            fixtures: None,
            record: None,
            jobs,
            rules_path: rules.clone().or(file.rules),
            bucket_range,
            out: out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("recomp-out")),
            thresholds: file.thresholds.unwrap_or_else(|| DEFAULT_THRESHOLDS.to_vec()),
            outcomes: None,
            pipeline,
            http: file.http,
        };

        match command {
            Command::Refine(a) => {
                cfg.backend = a.backend;
                cfg.fixtures = a.fixtures;
                cfg.record = a.record;
                if let Some(b) = a.budget {
                    cfg.pipeline.budget = b;
                }
                cfg.pipeline.always_refine |= a.always_refine;
                match cfg.backend {
                    BackendKind::Replay | BackendKind::Record if cfg.fixtures.is_none() => {
                        return Err(ConfigError("--backend replay/record requires --fixtures".into()));
                    }
                    BackendKind::Replay if cfg.record.is_some() => {
                        return Err(ConfigError("--record needs a live backend".into()));
                    }
                    _ => {}
                }
            }
            Command::Report(a) => {
                cfg.outcomes = a.outcomes;
                if let Some(t) = a.thresholds {
                    cfg.thresholds = t;
                }
            }
            _ => {}
        }
        if cfg.pipeline.budget == 0 {
            return Err(ConfigError("--budget must be at least 1".into()));
        }
        if cfg.thresholds.contains(&0) {
            return Err(ConfigError("thresholds must be positive".into()));
        }
        Ok(cfg)
    }
}
