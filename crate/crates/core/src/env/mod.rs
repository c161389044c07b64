//! The four task environments behind a common reset/step interface.

mod environment;
pub mod ice;
pub mod layout;
mod spec;

pub use environment::{make_env, Action, EnvError, Environment, RewardTerms, StepInfo, Transition, ROBOT};
pub use spec::{ActionMode, EnvKind, EnvSpec, MazeLayout, ObsConfig, RewardConfig, SpecError};
