//! Keyboard state to actions for human operators.

use serde::{Deserialize, Serialize};

use crate::env::{Action, ActionMode, EnvSpec};
use crate::geom::{wrap_angle, Vec2};

/// Held arrow keys as a bitmask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Keys(pub u8);

impl Keys {
    pub const UP: u8 = 1;
    pub const DOWN: u8 = 2;
    pub const LEFT: u8 = 4;
    pub const RIGHT: u8 = 8;

    pub fn held(self, key: u8) -> bool {
        self.0 & key != 0
    }

    /// −1, 0 or +1 per axis: (right − left, up − down).
    fn axes(self) -> (f64, f64) {
        let a = |pos: u8, neg: u8| (self.held(pos) as i8 - self.held(neg) as i8) as f64;
        (a(Self::RIGHT, Self::LEFT), a(Self::UP, Self::DOWN))
    }
}

/// Maps held keys to an action.
///
/// Angular mode: left turns at +ω_max, right at −ω_max. Heading mode: the
/// eight arrow combinations give world-frame headings (up = +y); no keys
/// means no step, so `None`. Wheel mode: up/down drive, left/right turn.
pub fn key_action(keys: Keys, spec: &EnvSpec) -> Option<Action> {
    let (x, y) = keys.axes();
    match spec.action_mode {
        ActionMode::AngularVelocity => Some(Action::Angular { omega: -x * spec.max_turn_rate }),
        ActionMode::HeadingStep => {
            if x == 0.0 && y == 0.0 {
                None
            } else {
                Some(Action::Heading { heading: wrap_angle(Vec2::new(x, y).angle()) })
            }
        }
        ActionMode::WheelVelocities => {
            let v = spec.max_wheel_speed;
            let (fwd, turn) = (y, -x);
            let scale = (fwd.abs() + turn.abs()).max(1.0);
            Some(Action::Wheels { left: v * (fwd - turn) / scale, right: v * (fwd + turn) / scale })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvKind;
    use std::f64::consts::PI;

    #[test]
    fn left_is_full_positive_turn() {
        let spec = EnvSpec::new(EnvKind::Maze);
        assert_eq!(key_action(Keys(Keys::LEFT), &spec), Some(Action::Angular { omega: spec.max_turn_rate }));
        assert_eq!(key_action(Keys(Keys::RIGHT), &spec), Some(Action::Angular { omega: -spec.max_turn_rate }));
        assert_eq!(key_action(Keys(0), &spec), Some(Action::Angular { omega: 0.0 }));
    }

    #[test]
    fn heading_table() {
        let spec = EnvSpec::new(EnvKind::BoxDelivery);
        let h = |k: u8| match key_action(Keys(k), &spec) {
            Some(Action::Heading { heading }) => heading,
            other => panic!("{other:?}"),
        };
        assert_eq!(h(Keys::RIGHT), 0.0);
        assert_eq!(h(Keys::UP), PI / 2.0);
        assert!((h(Keys::UP | Keys::LEFT) - 3.0 * PI / 4.0).abs() < 1e-12);
        assert_eq!(h(Keys::LEFT), PI);
        assert!((h(Keys::DOWN | Keys::RIGHT) + PI / 4.0).abs() < 1e-12);
        assert_eq!(key_action(Keys(0), &spec), None);
        assert_eq!(key_action(Keys(Keys::UP | Keys::DOWN), &spec), None);
    }

    #[test]
    fn wheels_stay_in_range() {
        let mut spec = EnvSpec::new(EnvKind::Maze);
        spec.action_mode = ActionMode::WheelVelocities;
        for k in 0..16u8 {
            if let Some(Action::Wheels { left, right }) = key_action(Keys(k), &spec) {
                assert!(left.abs() <= spec.max_wheel_speed && right.abs() <= spec.max_wheel_speed);
            }
        }
        assert_eq!(key_action(Keys(Keys::UP), &spec), Some(Action::Wheels { left: 0.3, right: 0.3 }));
    }
}
