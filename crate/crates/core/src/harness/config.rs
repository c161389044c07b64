//! Run configuration from TOML files and command-line flags.

use std::path::PathBuf;

use serde::Deserialize;

use crate::env::{EnvKind, EnvSpec};
use crate::policies::PolicyKind;

use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: EnvSpec,
    pub policy: PolicyKind,
    pub episodes: usize,
    /// Episode `i` uses seed `seed + i`.
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub parallelism: usize,
}

impl RunConfig {
    pub fn new(spec: EnvSpec, policy: PolicyKind) -> Self {
        Self { spec, policy, episodes: 20, seed: 0, out: None, parallelism: 1 }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.episodes == 0 {
            return Err(HarnessError::Config("episodes must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(HarnessError::Config("parallelism must be at least 1".into()));
        }
        self.spec.validate()?;
        if !self.policy.supports(&self.spec) {
            return Err(crate::policies::PolicyError::Incompatible {
                policy: self.policy.as_str(),
                env: self.spec.env,
                mode: self.spec.action_mode.as_str(),
            }
            .into());
        }
        Ok(())
    }
}

/// Partially specified configuration. Files and flags each produce one;
/// later layers override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub env: Option<EnvKind>,
    pub variant: Option<String>,
    pub policy: Option<PolicyKind>,
    pub episodes: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub parallelism: Option<usize>,
    /// Spec fields as `key = value`, dotted for nested keys (`reward.c_dist`).
    pub fields: Vec<(String, String)>,
}

#[derive(Deserialize)]
struct FileTop {
    env: Option<String>,
    variant: Option<String>,
    policy: Option<String>,
    episodes: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    parallelism: Option<usize>,
    #[serde(flatten)]
    rest: toml::Table,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, String)>) -> Result<(), HarnessError> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out)?,
            toml::Value::String(s) => out.push((key, s.clone())),
            toml::Value::Integer(i) => out.push((key, i.to_string())),
            toml::Value::Float(f) => out.push((key, f.to_string())),
            toml::Value::Boolean(b) => out.push((key, b.to_string())),
            _ => return Err(HarnessError::Config(format!("unsupported value for `{key}`"))),
        }
    }
    Ok(())
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let top: FileTop = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let mut fields = Vec::new();
        flatten("", &top.rest, &mut fields)?;
        Ok(RawConfig {
            env: top.env.map(|s| s.parse()).transpose()?,
            variant: top.variant,
            policy: top.policy.map(|s| s.parse()).transpose()?,
            episodes: top.episodes,
            seed: top.seed,
            out: top.out,
            parallelism: top.parallelism,
            fields,
        })
    }

    /// Layers `other` on top of `self`.
    pub fn merge(mut self, other: RawConfig) -> RawConfig {
        self.env = other.env.or(self.env);
        self.variant = other.variant.or(self.variant);
        self.policy = other.policy.or(self.policy);
        self.episodes = other.episodes.or(self.episodes);
        self.seed = other.seed.or(self.seed);
        self.out = other.out.or(self.out);
        self.parallelism = other.parallelism.or(self.parallelism);
        self.fields.extend(other.fields);
        self
    }

    /// Resolves defaults: the environment's default spec, then the variant
    /// string, then individual fields in order.
    pub fn build(&self) -> Result<RunConfig, HarnessError> {
        let env = self.env.ok_or_else(|| HarnessError::Config("`env` is required".into()))?;
        let mut spec = EnvSpec::new(env);
        if let Some(v) = &self.variant {
            spec.apply_variant(v)?;
        }
        for (k, v) in &self.fields {
            spec.set(k, v)?;
        }
        let policy = self.policy.unwrap_or(if env.is_navigation() { PolicyKind::DtFollower } else { PolicyKind::GreedyPush });
        let mut cfg = RunConfig::new(spec, policy);
        cfg.episodes = self.episodes.unwrap_or(cfg.episodes);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.out = self.out.clone();
        cfg.parallelism = self.parallelism.unwrap_or(cfg.parallelism);
        cfg.validate()?;
        Ok(cfg)
    }
}
