//! Line-delimited episode logs.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{Action, EnvSpec, Environment, Transition, ROBOT};
use crate::geom::Pose;
use crate::metrics::{EpisodeMetrics, EpisodeTrace};
use crate::physics::BodyId;

use super::HarnessError;

/// Object poses are logged at this rate (Hz).
pub const OBJECT_SNAPSHOT_RATE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    /// Hex SHA-256 of the spec's JSON form.
    pub spec_hash: String,
    pub seed: u64,
    pub policy: String,
    pub version: String,
    pub spec: EnvSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Control step index, from 0.
    pub tick: u64,
    /// Robot pose after the step.
    pub pose: Pose,
    pub action: Action,
    pub reward: f64,
    pub contacts: Vec<(BodyId, BodyId)>,
    /// Object poses, present on steps that cross a snapshot boundary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objects: Option<Vec<Pose>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub terminated: bool,
    pub truncated: bool,
    pub steps: u64,
    pub total_reward: f64,
    /// Set when the episode ended on an error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Outcome {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFooter {
    pub outcome: Outcome,
    pub trace: EpisodeTrace,
    pub metrics: EpisodeMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Header(LogHeader),
    Step(StepRecord),
    Footer(LogFooter),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: LogHeader,
    pub steps: Vec<StepRecord>,
    pub footer: LogFooter,
}

pub fn spec_hash(spec: &EnvSpec) -> String {
    let json = serde_json::to_string(spec).expect("spec serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

impl EpisodeLog {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), HarnessError> {
        let mut line = |l: &Line| -> Result<(), HarnessError> {
            serde_json::to_writer(&mut out, l)?;
            out.write_all(b"\n")?;
            Ok(())
        };
        line(&Line::Header(self.header.clone()))?;
        for s in &self.steps {
            line(&Line::Step(s.clone()))?;
        }
        line(&Line::Footer(self.footer.clone()))?;
        out.flush()?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, HarnessError> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut footer = None;
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| HarnessError::Log(format!("line {}: {what}", n + 1));
            match serde_json::from_str::<Line>(&line).map_err(|e| bad(&e.to_string()))? {
                Line::Header(h) if header.is_none() && n == 0 => header = Some(h),
                Line::Header(_) => return Err(bad("unexpected header")),
                Line::Step(_) | Line::Footer(_) if header.is_none() => return Err(bad("first line must be the header")),
                Line::Step(s) if footer.is_none() => steps.push(s),
                Line::Footer(f) if footer.is_none() => footer = Some(f),
                _ => return Err(bad("record after footer")),
            }
        }
        let header = header.ok_or_else(|| HarnessError::Log("empty log".into()))?;
        let footer = footer.ok_or_else(|| HarnessError::Log("missing footer".into()))?;
        Ok(EpisodeLog { header, steps, footer })
    }

    pub fn actions(&self) -> impl Iterator<Item = Action> + '_ {
        self.steps.iter().map(|s| s.action)
    }
}

/// Builds an `EpisodeLog` while an episode runs. Create it right after the
/// reset, feed it every transition, then `finish`.
pub struct Recorder {
    header: LogHeader,
    steps: Vec<StepRecord>,
    substeps: u64,
    period: u64,
    last_bucket: u64,
}

impl Recorder {
    pub fn new(env: &Environment, policy: &str) -> Self {
        let spec = env.spec();
        let period = ((1.0 / OBJECT_SNAPSHOT_RATE) / spec.physics.dt).round().max(1.0) as u64;
        Self {
            header: LogHeader {
                spec_hash: spec_hash(spec),
                seed: env.seed(),
                policy: policy.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                spec: spec.clone(),
            },
            steps: Vec::new(),
            substeps: 0,
            period,
            last_bucket: 0,
        }
    }

    pub fn record(&mut self, env: &Environment, action: Action, t: &Transition) {
        self.substeps += t.info.substeps as u64;
        let bucket = self.substeps / self.period;
        let objects = (bucket > self.last_bucket).then(|| env.objects().iter().map(|&id| env.world().body(id).pose).collect());
        self.last_bucket = bucket;
        self.steps.push(StepRecord {
            tick: self.steps.len() as u64,
            pose: env.world().body(ROBOT).pose,
            action,
            reward: t.reward,
            contacts: t.info.contacts.clone(),
            objects,
        });
    }

    pub fn steps(&self) -> usize {
        self.steps.len()
    }

    pub fn finish(self, env: &Environment, error: Option<String>) -> EpisodeLog {
        let outcome = Outcome {
            terminated: env.terminated(),
            truncated: env.truncated(),
            steps: self.steps.len() as u64,
            total_reward: env.total_reward(),
            error,
        };
        EpisodeLog {
            header: self.header,
            steps: self.steps,
            footer: LogFooter { outcome, trace: env.trace(), metrics: env.metrics() },
        }
    }
}
