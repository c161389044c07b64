//! Batch evaluation: episode runner, logs, replay and suite reports.

mod config;
mod log;

use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::env::{make_env, EnvError, EnvSpec, Environment, SpecError};
use crate::metrics::{write_csv, ReportRow};
use crate::policies::{make_policy, Policy, PolicyError, PolicyKind};

pub use config::{RawConfig, RunConfig};
pub use log::{spec_hash, EpisodeLog, LogFooter, LogHeader, Outcome, Recorder, StepRecord, OBJECT_SNAPSHOT_RATE};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("config: {0}")]
    Config(String),
    #[error("log: {0}")]
    Log(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Runs one episode from `seed` to termination or truncation. Errors
/// raised mid-episode end the episode and are stored in the log.
pub fn run_episode(env: &mut Environment, policy: &mut dyn Policy, seed: u64) -> Result<EpisodeLog, HarnessError> {
    env.reset_state(seed)?;
    policy.reset(env);
    let mut rec = Recorder::new(env, policy.name());
    let mut error = None;
    while env.is_active() {
        let obs = policy.needs_observation().then(|| env.observe());
        let action = policy.act(obs.as_ref(), env);
        match env.step_with(action, false) {
            Ok(t) => rec.record(env, action, &t),
            Err(e) => {
                env.abort();
                error = Some(e.to_string());
            }
        }
    }
    Ok(rec.finish(env, error))
}

/// Result of re-simulating a log from its header and recorded actions.
#[derive(Debug, Clone)]
pub struct Replay {
    pub log: EpisodeLog,
    /// Whether every record, footer included, matched.
    pub identical: bool,
    pub footer_identical: bool,
}

pub fn replay(original: &EpisodeLog) -> Result<Replay, HarnessError> {
    let h = &original.header;
    if spec_hash(&h.spec) != h.spec_hash {
        return Err(HarnessError::Log("spec hash does not match the embedded spec".into()));
    }
    let mut env = make_env(h.spec.clone())?;
    env.reset_state(h.seed)?;
    let mut rec = Recorder::new(&env, &h.policy);
    let mut error = None;
    for action in original.actions() {
        if !env.is_active() {
            break;
        }
        match env.step_with(action, false) {
            Ok(t) => rec.record(&env, action, &t),
            Err(e) => {
                env.abort();
                error = Some(e.to_string());
            }
        }
    }
    // a log cut short (e.g. an operator leaving mid-episode) ended in an abort
    if env.is_active() && original.footer.outcome.truncated && !original.footer.outcome.terminated {
        env.abort();
    }
    let log = rec.finish(&env, error);
    let footer_identical = log.footer == original.footer;
    let identical = footer_identical && log == *original;
    Ok(Replay { log, identical, footer_identical })
}

pub fn read_log(path: &Path) -> Result<EpisodeLog, HarnessError> {
    EpisodeLog::read_from(BufReader::new(fs::File::open(path)?))
}

#[derive(Debug, Clone)]
pub struct EpisodeFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    /// Completed episodes in seed order.
    pub rows: Vec<ReportRow>,
    pub logs: Vec<EpisodeLog>,
    pub failures: Vec<EpisodeFailure>,
}

impl SuiteReport {
    pub fn csv(&self) -> Result<String, HarnessError> {
        let mut buf = Vec::new();
        write_csv(&mut buf, &self.rows)?;
        Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
    }
}

fn one_episode(spec: &EnvSpec, kind: PolicyKind, seed: u64) -> Result<(EpisodeLog, f64), HarnessError> {
    let start = Instant::now();
    let mut env = make_env(spec.clone())?;
    let mut policy = make_policy(kind, spec)?;
    let log = run_episode(&mut env, policy.as_mut(), seed)?;
    Ok((log, start.elapsed().as_secs_f64()))
}

pub fn log_file_name(log: &EpisodeLog) -> String {
    format!("{}_{}_seed{}.jsonl", log.header.spec.env, log.header.policy, log.header.seed)
}

/// Runs `cfg.episodes` episodes with seeds `seed + i` on a pool of
/// `cfg.parallelism` workers. Results are ordered by seed, so the report
/// does not depend on scheduling. With an output directory, writes
/// `report.csv` and one log per episode under `logs/`.
pub fn run_suite(cfg: &RunConfig) -> Result<SuiteReport, HarnessError> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.episodes as u64).map(|i| cfg.seed + i).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let results: Vec<(u64, Result<(EpisodeLog, f64), HarnessError>)> =
        pool.install(|| seeds.par_iter().map(|&s| (s, one_episode(&cfg.spec, cfg.policy, s))).collect());

    let mut report = SuiteReport { rows: Vec::new(), logs: Vec::new(), failures: Vec::new() };
    for (seed, result) in results {
        match result {
            Ok((log, wall_time)) => {
                if let Some(e) = &log.footer.outcome.error {
                    report.failures.push(EpisodeFailure { seed, error: e.clone() });
                } else {
                    report.rows.push(ReportRow {
                        env: cfg.spec.env.to_string(),
                        variant: cfg.spec.variant_label(),
                        policy: cfg.policy.to_string(),
                        seed,
                        metrics: log.footer.metrics.clone(),
                        steps: log.footer.outcome.steps,
                        wall_time,
                    });
                }
                report.logs.push(log);
            }
            Err(e) => report.failures.push(EpisodeFailure { seed, error: e.to_string() }),
        }
    }
    if let Some(dir) = &cfg.out {
        write_outputs(dir, &report)?;
    }
    Ok(report)
}

fn write_outputs(dir: &Path, report: &SuiteReport) -> Result<(), HarnessError> {
    let logs = dir.join("logs");
    fs::create_dir_all(&logs)?;
    for log in &report.logs {
        log.write_to(std::io::BufWriter::new(fs::File::create(logs.join(log_file_name(log)))?))?;
    }
    fs::write(dir.join("report.csv"), report.csv()?)?;
    if !report.failures.is_empty() {
        let lines: Vec<String> = report.failures.iter().map(|f| format!("seed {}: {}", f.seed, f.error)).collect();
        fs::write(dir.join("failures.txt"), lines.join("\n") + "\n")?;
    }
    Ok(())
}
