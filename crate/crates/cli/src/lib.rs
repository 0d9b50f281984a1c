//! `recomp` command-line driver.
//!
//! Exit codes: 0 when the run completes (failing programs are data, not
//! errors), 1 on infrastructure failure or interruption, 2 on usage or
//! configuration errors.

mod args;
mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Once};

use clap::Parser;
use rayon::prelude::*;
use recomp::corpus::{bucket_by_context, load_manifest, ProgramEntry};
use recomp::llm::{CompletionBackend, HttpBackend, RecordingBackend, ReplayBackend};
use recomp::metrics::{aggregate, emit_report, ReportFormat};
use recomp::pipeline::{self, read_records, write_record, OutcomeRecord, PipelineError};
use recomp::preprocess::{Origin, RuleConfig, Rules, SourceUnit};

pub use args::{BackendKind, Cli, Command};
pub use config::{ConfigError, FileConfig, Mode, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFRA: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

static INTERRUPTED: AtomicBool = AtomicBool::new(false);
static HANDLERS: Once = Once::new();

fn install_handlers() {
    HANDLERS.call_once(|| {
        let _ = tracing_subscriber::fmt()
            .with_writer(std::io::stderr)
            .with_env_filter(
                tracing_subscriber::EnvFilter::try_from_default_env()
                    .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
            )
            .try_init();
        // in-flight programs finish; no new ones start
        let _ = ctrlc::set_handler(|| INTERRUPTED.store(true, Ordering::SeqCst));
    });
}

enum Failure {
    Config(String),
    Infra(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

/// Parses `argv` (program name first) and runs the selected mode.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    install_handlers();
    let result = RunConfig::resolve(cli.command)
        .map_err(Failure::from)
        .and_then(|cfg| dispatch(&cfg));
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Infra(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INFRA
        }
    }
}

fn dispatch(cfg: &RunConfig) -> Result<(), Failure> {
    let entries = load_manifest(&cfg.manifest).map_err(|e| Failure::Config(e.to_string()))?;
    let r = cfg.bucket_range;
    let entries = bucket_by_context(entries, r.lo, r.hi, r.k).map_err(|e| Failure::Config(e.to_string()))?;
    let rule_cfg = match &cfg.rules_path {
        Some(p) => RuleConfig::load(p).map_err(|e| Failure::Config(e.to_string()))?,
        None => RuleConfig::default(),
    };
    let rules = Rules::new(&rule_cfg).map_err(|e| Failure::Config(e.to_string()))?;
    fs::create_dir_all(&cfg.out).map_err(|e| Failure::Infra(format!("{}: {e}", cfg.out.display())))?;

    match cfg.mode {
        Mode::Refine => {
            let backend = make_backend(cfg)?;
            let records = run_programs(cfg, &entries, |e| {
                pipeline::refine(e, &rules, backend.as_ref(), &cfg.pipeline, &cfg.out).map(|o| o.record())
            })?;
            write_reports(cfg, &records, &entries)
        }
        Mode::Baseline => {
            let records = run_programs(cfg, &entries, |e| {
                pipeline::run_baseline(e, &rules, &cfg.pipeline, &cfg.out).map(|o| o.record())
            })?;
            write_reports(cfg, &records, &entries)
        }
        Mode::PreprocessOnly => {
            let dir = cfg.out.join("preprocessed");
            fs::create_dir_all(&dir).map_err(|e| Failure::Infra(format!("{}: {e}", dir.display())))?;
            for e in &entries {
                let unit = rules.preprocess(&SourceUnit::new(e.id.clone(), e.pseudocode.clone(), Origin::Decompiler));
                let path = dir.join(format!("{}.c", e.id));
                fs::write(&path, unit.code).map_err(|err| Failure::Infra(format!("{}: {err}", path.display())))?;
            }
            println!("wrote {} cleaned sources to {}", entries.len(), dir.display());
            Ok(())
        }
        Mode::Report => {
            let path = cfg.outcomes.clone().unwrap_or_else(|| cfg.out.join("outcomes.jsonl"));
            let text = fs::read_to_string(&path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let records = read_records(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            write_reports(cfg, &records, &entries)
        }
    }
}

fn make_backend(cfg: &RunConfig) -> Result<Box<dyn CompletionBackend>, Failure> {
    let http = || HttpBackend::new(cfg.http.clone()).map_err(|e| Failure::Config(e.to_string()));
    let fixtures = || cfg.fixtures.clone().expect("validated: fixtures present");
    let backend: Box<dyn CompletionBackend> = match cfg.backend {
        BackendKind::Replay => Box::new(ReplayBackend::new(fixtures())),
        BackendKind::Record => Box::new(RecordingBackend::new(http()?, fixtures())),
        BackendKind::Http => Box::new(http()?),
    };
    Ok(match &cfg.record {
        Some(dir) => Box::new(RecordingBackend::new(backend, dir.clone())),
        None => backend,
    })
}

/// Runs `job` over every entry on a worker pool and appends records to
/// `<out>/outcomes.jsonl` in manifest order as soon as each prefix is done.
fn run_programs<F>(cfg: &RunConfig, entries: &[ProgramEntry], job: F) -> Result<Vec<OutcomeRecord>, Failure>
where
    F: Fn(&ProgramEntry) -> Result<OutcomeRecord, PipelineError> + Sync,
{
    let path = cfg.out.join("outcomes.jsonl");
    let file = File::create(&path).map_err(|e| Failure::Infra(format!("{}: {e}", path.display())))?;
    let mut writer = BufWriter::new(file);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Failure::Infra(e.to_string()))?;
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<OutcomeRecord, PipelineError>)>();

    let mut slots: Vec<Option<OutcomeRecord>> = vec![None; entries.len()];
    let mut written = 0;
    let mut first_error = None;
    std::thread::scope(|scope| {
        scope.spawn(|| {
            pool.install(|| {
                entries.par_iter().enumerate().for_each_with(tx, |tx, (i, e)| {
                    if INTERRUPTED.load(Ordering::SeqCst) || abort.load(Ordering::SeqCst) {
                        return;
                    }
                    tracing::info!(program = %e.id, "start");
                    let res = job(e);
                    if res.is_err() {
                        abort.store(true, Ordering::SeqCst);
                    }
                    let _ = tx.send((i, res));
                });
            });
        });
        for (i, res) in rx {
            match res {
                Ok(rec) => {
                    println!("{:<24} {:?} queries={}", rec.program_id, rec.status, rec.queries_used);
                    slots[i] = Some(rec);
                }
                Err(e) => {
                    if first_error.is_none() {
                        first_error = Some(format!("{}: {e}", entries[i].id));
                    }
                }
            }
            while written < slots.len() {
                let Some(rec) = &slots[written] else { break };
                if let Err(e) = write_record(&mut writer, rec).and_then(|_| writer.flush()) {
                    first_error.get_or_insert(format!("{}: {e}", path.display()));
                    abort.store(true, Ordering::SeqCst);
                    break;
                }
                written += 1;
            }
        }
    });
    if let Some(msg) = first_error {
        return Err(Failure::Infra(msg));
    }
    if written < entries.len() {
        return Err(Failure::Infra(format!(
            "interrupted after {written} of {} programs; partial outcomes in {}",
            entries.len(),
            path.display()
        )));
    }
    Ok(slots.into_iter().map(|r| r.expect("all written")).collect())
}

fn write_reports(cfg: &RunConfig, records: &[OutcomeRecord], entries: &[ProgramEntry]) -> Result<(), Failure> {
    let report = aggregate(records, entries, &cfg.thresholds).map_err(|e| Failure::Config(e.to_string()))?;
    for (ext, fmt) in [("json", ReportFormat::Json), ("csv", ReportFormat::Csv), ("txt", ReportFormat::Text)] {
        write_file(&cfg.out.join(format!("report.{ext}")), &emit_report(&report, fmt))?;
    }
    print!("{}", emit_report(&report, ReportFormat::Text));
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Infra(format!("{}: {e}", path.display())))
}
