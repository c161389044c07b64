//! Deterministic top-down rigid-body simulation.

mod body;
mod bumper;
mod collide;
mod kinematics;
mod shape;
mod world;

use serde::{Deserialize, Serialize};

pub use body::{Body, BodyId, Material, Role};
pub use bumper::{robot_shapes, Bumper, CHASSIS_RADIUS};
pub use collide::{collide_convex, manifold, Contact, ContactGeometry, Manifold, ManifoldPoint};
pub use kinematics::{integrate_unicycle, wheels_to_unicycle, DEFAULT_WHEEL_BASE, STRAIGHT_LINE_OMEGA};
pub use shape::{ConvexPolygon, Shape, ShapeError, WorldShape, MAX_POLYGON_VERTICES, MIN_POLYGON_VERTICES};
pub use world::{drag_decay, StepEvents, World};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhysicsError {
    #[error("solver diverged: body {body} reached {speed} m/s")]
    SolverDivergence { body: BodyId, speed: f64 },
    #[error("invalid physics parameter: {0}")]
    InvalidParams(String),
}

/// Linear and quadratic drag coefficients, translational and rotational.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragParams {
    /// N·s/m
    pub linear: f64,
    /// N·s²/m²
    pub quadratic: f64,
    pub angular_linear: f64,
    pub angular_quadratic: f64,
}

impl Default for DragParams {
    fn default() -> Self {
        Self { linear: 1.0, quadratic: 2.0, angular_linear: 0.1, angular_quadratic: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsParams {
    pub dt: f64,
    pub solver_iterations: usize,
    pub position_iterations: usize,
    /// Ground kinetic friction coefficient.
    pub ground_mu: f64,
    pub gravity: f64,
    pub baumgarte: f64,
    /// Overlap tolerated by the positional pass (m).
    pub linear_slop: f64,
    /// Largest positional correction per contact per pass (m).
    pub max_correction: f64,
    /// Coulomb coefficient between bodies.
    pub contact_friction: f64,
    /// Default restitution for new bodies.
    pub restitution: f64,
    pub drag: Option<DragParams>,
    /// Ground friction scale for wheeled boxes.
    pub wheeled_multiplier: f64,
    /// Divergence cap (m/s).
    pub max_speed: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            dt: 1.0 / 60.0,
            solver_iterations: 10,
            position_iterations: 20,
            ground_mu: 0.5,
            gravity: 9.81,
            baumgarte: 0.2,
            linear_slop: 1e-4,
            max_correction: 0.02,
            contact_friction: 0.3,
            restitution: 0.0,
            drag: None,
            wheeled_multiplier: 0.1,
            max_speed: 50.0,
        }
    }
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        let bad = |m: &str| Err(PhysicsError::InvalidParams(m.to_string()));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt must be positive");
        }
        if !(self.ground_mu >= 0.0) {
            return bad("ground_mu must be non-negative");
        }
        if self.solver_iterations < 1 {
            return bad("solver_iterations must be at least 1");
        }
        if !(self.gravity >= 0.0) {
            return bad("gravity must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.baumgarte) {
            return bad("baumgarte must lie in [0, 1]");
        }
        if !(self.wheeled_multiplier >= 0.0) {
            return bad("wheeled_multiplier must be non-negative");
        }
        if !(self.max_speed > 0.0) {
            return bad("max_speed must be positive");
        }
        Ok(())
    }
}
