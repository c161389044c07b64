//! Policy interface and the non-learned baselines.

mod follower;
mod greedy;
mod rrt;
mod teleop;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, ActionMode, EnvKind, EnvSpec, Environment};
use crate::geom::wrap_angle;
use crate::observation::Observation;
use crate::physics::DEFAULT_WHEEL_BASE;

pub use follower::DtFollower;
pub use greedy::{approach_point, push_direction, GreedyPush, APPROACH_FACTOR};
pub use rrt::{goal_reached, rrt_plan, RrtConfig, RrtError, RrtPlan, RrtPolicy};
pub use teleop::{key_action, Keys};

/// A controller bound to one environment at a time.
///
/// `act` may read privileged state through `env`; it must return an action
/// valid for the environment's action mode.
pub trait Policy: Send {
    fn name(&self) -> &'static str;

    /// Called after every environment reset, before the first `act`.
    fn reset(&mut self, env: &Environment);

    fn act(&mut self, obs: Option<&Observation>, env: &Environment) -> Action;

    /// Whether `act` reads the observation; if not, callers may skip rendering.
    fn needs_observation(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Idle,
    Random,
    DtFollower,
    Rrt,
    GreedyPush,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] =
        [PolicyKind::Idle, PolicyKind::Random, PolicyKind::DtFollower, PolicyKind::Rrt, PolicyKind::GreedyPush];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Idle => "idle",
            PolicyKind::Random => "random",
            PolicyKind::DtFollower => "dt_follower",
            PolicyKind::Rrt => "rrt",
            PolicyKind::GreedyPush => "greedy_push",
        }
    }

    /// Whether this baseline can drive an environment built from `spec`.
    pub fn supports(self, spec: &EnvSpec) -> bool {
        match self {
            PolicyKind::Idle | PolicyKind::Random => true,
            PolicyKind::DtFollower => spec.env.is_navigation(),
            PolicyKind::Rrt => spec.env == EnvKind::Maze && spec.action_mode != ActionMode::HeadingStep,
            PolicyKind::GreedyPush => !spec.env.is_navigation(),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "idle" => Ok(PolicyKind::Idle),
            "random" => Ok(PolicyKind::Random),
            "dt_follower" | "dt" | "follower" => Ok(PolicyKind::DtFollower),
            "rrt" => Ok(PolicyKind::Rrt),
            "greedy_push" | "greedy" => Ok(PolicyKind::GreedyPush),
            other => Err(PolicyError::Unknown(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("unknown policy {0:?}")]
    Unknown(String),
    #[error("policy {policy} does not support {env} with action mode {mode}")]
    Incompatible { policy: &'static str, env: EnvKind, mode: &'static str },
}

pub fn make_policy(kind: PolicyKind, spec: &EnvSpec) -> Result<Box<dyn Policy>, PolicyError> {
    if !kind.supports(spec) {
        return Err(PolicyError::Incompatible { policy: kind.as_str(), env: spec.env, mode: spec.action_mode.as_str() });
    }
    Ok(match kind {
        PolicyKind::Idle => Box::new(Idle),
        PolicyKind::Random => Box::new(RandomPolicy::default()),
        PolicyKind::DtFollower => Box::new(DtFollower),
        PolicyKind::Rrt => Box::new(RrtPolicy::new(RrtConfig::default())),
        PolicyKind::GreedyPush => Box::new(GreedyPush::default()),
    })
}

/// Action that steers toward `heading` (rad) in the environment's mode.
pub fn steer_toward(spec: &EnvSpec, theta: f64, heading: f64) -> Action {
    let err = wrap_angle(heading - theta);
    let horizon = spec.action_repeat as f64 * spec.physics.dt;
    match spec.action_mode {
        ActionMode::HeadingStep => Action::Heading { heading: wrap_angle(heading) },
        ActionMode::AngularVelocity => Action::Angular { omega: (err / horizon).clamp(-spec.max_turn_rate, spec.max_turn_rate) },
        ActionMode::WheelVelocities => {
            let vmax = spec.max_wheel_speed;
            let omega = err / horizon;
            let v = vmax * err.cos().max(0.0);
            let half = omega * DEFAULT_WHEEL_BASE / 2.0;
            let (l, r) = (v - half, v + half);
            let scale = (l.abs().max(r.abs()) / vmax).max(1.0);
            Action::Wheels { left: l / scale, right: r / scale }
        }
    }
}

/// Does nothing useful: zero turn, zero wheel speed, or the current heading.
pub struct Idle;

impl Policy for Idle {
    fn name(&self) -> &'static str {
        "idle"
    }

    fn reset(&mut self, _env: &Environment) {}

    fn act(&mut self, _obs: Option<&Observation>, env: &Environment) -> Action {
        match env.spec().action_mode {
            ActionMode::AngularVelocity => Action::Angular { omega: 0.0 },
            ActionMode::HeadingStep => Action::Heading { heading: wrap_angle(env.robot_pose().theta) },
            ActionMode::WheelVelocities => Action::Wheels { left: 0.0, right: 0.0 },
        }
    }
}

/// Uniformly random valid actions, seeded from the episode seed.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl Default for RandomPolicy {
    fn default() -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(0) }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn reset(&mut self, env: &Environment) {
        self.rng = ChaCha8Rng::seed_from_u64(env.seed() ^ 0x5e_ed0f_7a11);
    }

    fn act(&mut self, _obs: Option<&Observation>, env: &Environment) -> Action {
        let s = env.spec();
        match s.action_mode {
            ActionMode::AngularVelocity => Action::Angular { omega: self.rng.random_range(-s.max_turn_rate..=s.max_turn_rate) },
            ActionMode::HeadingStep => {
                Action::Heading { heading: wrap_angle(self.rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)) }
            }
            ActionMode::WheelVelocities => Action::Wheels {
                left: self.rng.random_range(-s.max_wheel_speed..=s.max_wheel_speed),
                right: self.rng.random_range(-s.max_wheel_speed..=s.max_wheel_speed),
            },
        }
    }
}
