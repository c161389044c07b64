//! Messages exchanged with the operator client, one JSON text frame each.

use serde::{Deserialize, Serialize};

use crate::env::{Action, EnvKind, EnvSpec, Environment, ROBOT};
use crate::geom::Pose;
use crate::harness::Outcome;
use crate::metrics::EpisodeMetrics;
use crate::physics::{BodyId, Role};
use crate::policies::{key_action, Keys};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    State(StateMessage),
    Cmd {
        cmd: Command,
    },
    /// Starts a new episode. Omitted fields keep the current values.
    Reset {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        env: Option<EnvKind>,
        /// Spec overrides as `key=value,...`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variant: Option<String>,
    },
    EpisodeEnd {
        tick: u64,
        seed: u64,
        metrics: EpisodeMetrics,
        outcome: Outcome,
        /// Where the episode log was written, if anywhere.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        log: Option<String>,
    },
    Busy {
        reason: String,
    },
    Error {
        reason: String,
    },
}

impl WireMessage {
    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("wire messages serialize")
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Operator input: held arrow keys, or an explicit action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Command {
    Keys { keys: Keys },
    Action(Action),
}

impl Default for Command {
    fn default() -> Self {
        Command::Keys { keys: Keys(0) }
    }
}

impl Command {
    /// The action to apply in `spec`'s mode; `None` means hold still.
    pub fn action(self, spec: &EnvSpec) -> Option<Action> {
        match self {
            Command::Keys { keys } => key_action(keys, spec),
            Command::Action(a) => Some(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyView {
    pub id: BodyId,
    pub kind: Role,
    /// World-frame outline of each shape, rounded to 0.1 mm.
    pub vertices: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LiveMetrics {
    pub steps: u64,
    pub reward: f64,
    /// Robot path length so far (m).
    pub robot_path: f64,
    /// Σ mᵢ lᵢ over objects so far.
    pub object_work: f64,
    /// Static shortest path over the path so far; final only on success.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projected_e_nav: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i_nav: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_manip: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    pub tick: u64,
    pub seed: u64,
    pub bodies: Vec<BodyView>,
    pub pose: Pose,
    pub metrics: LiveMetrics,
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Snapshot of `env`. `shortest` is the static shortest path from the
/// robot start, used for the projected efficiency.
pub fn snapshot(env: &Environment, tick: u64, shortest: Option<f64>) -> StateMessage {
    let world = env.world();
    let bodies = world
        .bodies
        .iter()
        .map(|b| BodyView {
            id: b.id,
            kind: b.role,
            vertices: b
                .world_outlines()
                .iter()
                .map(|poly| poly.iter().map(|v| [round4(v.x), round4(v.y)]).collect())
                .collect(),
        })
        .collect();
    let trace = env.trace();
    let robot_work = trace.robot_mass * trace.robot_path_length;
    let object_work = trace.object_work();
    let mut metrics = LiveMetrics {
        steps: env.steps(),
        reward: env.total_reward(),
        robot_path: trace.robot_path_length,
        object_work,
        ..LiveMetrics::default()
    };
    if env.spec().env.is_navigation() {
        metrics.projected_e_nav =
            shortest.filter(|s| s.is_finite()).map(|s| if trace.robot_path_length > 0.0 { (s / trace.robot_path_length).min(1.0) } else { 0.0 });
        metrics.i_nav = Some(if robot_work + object_work > 0.0 { robot_work / (robot_work + object_work) } else { 1.0 });
    } else {
        metrics.s_manip = Some(trace.completed() as f64 / trace.objects.len().max(1) as f64);
    }
    StateMessage { tick, seed: env.seed(), bodies, pose: world.body(ROBOT).pose, metrics }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::make_env;

    #[test]
    fn field_names_on_the_wire() {
        let cmd = WireMessage::Cmd { cmd: Command::Keys { keys: Keys(5) } }.to_text();
        assert_eq!(cmd, r#"{"type":"cmd","cmd":{"keys":5}}"#);
        let a = WireMessage::parse(r#"{"type":"cmd","cmd":{"kind":"angular","omega":0.5}}"#).unwrap();
        assert_eq!(a, WireMessage::Cmd { cmd: Command::Action(Action::Angular { omega: 0.5 }) });
        let r = WireMessage::parse(r#"{"type":"reset","seed":3}"#).unwrap();
        assert_eq!(r, WireMessage::Reset { seed: Some(3), env: None, variant: None });

        let mut env = make_env(EnvSpec::new(EnvKind::Maze)).unwrap();
        env.reset_state(0).unwrap();
        let text = WireMessage::State(snapshot(&env, 7, None)).to_text();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["type", "tick", "seed", "bodies", "pose", "metrics"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["type"], "state");
        assert_eq!(v["bodies"][0]["kind"], "robot");
    }

    #[test]
    fn state_fits_in_64_kib() {
        for kind in EnvKind::ALL {
            let mut env = make_env(EnvSpec::new(kind)).unwrap();
            for seed in 0..3 {
                env.reset_state(seed).unwrap();
                let n = WireMessage::State(snapshot(&env, 0, Some(1.0))).to_text().len();
                assert!(n < 64 * 1024, "{kind}: {n} bytes");
            }
        }
    }
}
