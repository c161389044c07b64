use crate::env::{Action, Environment};
use crate::observation::Observation;

use super::{steer_toward, Policy};

/// Steers down the gradient of the static goal distance field.
pub struct DtFollower;

impl Policy for DtFollower {
    fn name(&self) -> &'static str {
        "dt_follower"
    }

    fn reset(&mut self, _env: &Environment) {}

    fn act(&mut self, _obs: Option<&Observation>, env: &Environment) -> Action {
        let pose = env.robot_pose();
        let g = env.map().goal_field().gradient(pose.position());
        let heading = if g.length() > 1e-9 { (-g).angle() } else { pose.theta };
        steer_toward(env.spec(), pose.theta, heading)
    }
}
