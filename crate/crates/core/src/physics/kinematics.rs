use crate::geom::{wrap_angle, Pose};

/// Below this turn rate the straight-line branch is used.
pub const STRAIGHT_LINE_OMEGA: f64 = 1e-6;

/// TurtleBot3 Burger wheel separation (m).
pub const DEFAULT_WHEEL_BASE: f64 = 0.16;

/// Exact arc integration of unicycle motion over `dt`.
pub fn integrate_unicycle(pose: Pose, v_fwd: f64, omega: f64, dt: f64) -> Pose {
    let theta = pose.theta;
    if omega.abs() < STRAIGHT_LINE_OMEGA {
        let (s, c) = theta.sin_cos();
        return Pose::new(pose.x + v_fwd * c * dt, pose.y + v_fwd * s * dt, wrap_angle(theta + omega * dt));
    }
    // chord form of x = (v/ω)(sin(θ+ωt) − sin θ), stable for small ω
    let half = 0.5 * omega * dt;
    let chord = v_fwd * dt * half.sin() / half;
    let (s, c) = (theta + half).sin_cos();
    Pose::new(pose.x + chord * c, pose.y + chord * s, wrap_angle(theta + omega * dt))
}

/// Differential-drive wheel speeds to (forward speed, turn rate).
pub fn wheels_to_unicycle(v_left: f64, v_right: f64, wheel_base: f64) -> (f64, f64) {
    ((v_left + v_right) / 2.0, (v_right - v_left) / wheel_base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn straight() {
        let p = integrate_unicycle(Pose::new(0.0, 0.0, 0.0), 1.0, 0.0, 1.0);
        assert_eq!(p, Pose::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn quarter_arc() {
        let p = integrate_unicycle(Pose::new(0.0, 0.0, 0.0), 1.0, FRAC_PI_2, 1.0);
        assert!((p.x - 2.0 / PI).abs() < 1e-12);
        assert!((p.y - 2.0 / PI).abs() < 1e-12);
        assert!((p.theta - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn arc_converges_to_line_near_threshold() {
        let a = integrate_unicycle(Pose::new(0.5, 0.5, 0.3), 0.2, 2e-6, 0.1);
        let b = integrate_unicycle(Pose::new(0.5, 0.5, 0.3), 0.2, 0.0, 0.1);
        // lateral deviation is v·dt·ω·dt/2 = 2e-9
        assert!((a.x - b.x).abs() < 1e-8 && (a.y - b.y).abs() < 1e-8);
    }

    #[test]
    fn symmetric_wheels() {
        assert_eq!(wheels_to_unicycle(1.0, 1.0, DEFAULT_WHEEL_BASE), (1.0, 0.0));
        let (v, w) = wheels_to_unicycle(-0.1, 0.1, DEFAULT_WHEEL_BASE);
        assert_eq!(v, 0.0);
        assert!((w - 1.25).abs() < 1e-12);
    }

    #[test]
    fn wraps_heading() {
        let p = integrate_unicycle(Pose::new(0.0, 0.0, 3.0), 0.0, 1.0, 1.0);
        assert!(p.theta <= PI && p.theta > -PI);
        assert!((p.theta - (4.0 - 2.0 * PI)).abs() < 1e-12);
    }
}
