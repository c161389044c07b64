use serde::{Deserialize, Serialize};

use crate::geom::{wrap_angle, Pose, Vec2};

use super::shape::{Shape, WorldShape};
use super::PhysicsParams;

pub type BodyId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Robot,
    Box,
    WheeledBox,
    IceFloe,
    Wall,
}

impl Role {
    pub fn is_movable(self) -> bool {
        matches!(self, Role::Box | Role::WheeledBox | Role::IceFloe)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Robot => "robot",
            Role::Box => "box",
            Role::WheeledBox => "wheeled_box",
            Role::IceFloe => "ice_floe",
            Role::Wall => "wall",
        }
    }
}

/// Ground interaction and bounce for one body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Ground kinetic friction coefficient.
    pub ground_mu: f64,
    pub restitution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub id: BodyId,
    pub role: Role,
    pub shapes: Vec<Shape>,
    pub pose: Pose,
    pub velocity: Vec2,
    pub angular_velocity: f64,
    /// Zero for static bodies.
    pub mass: f64,
    pub inertia: f64,
    pub material: Material,
    pub is_static: bool,
}

impl Body {
    /// Dynamic body with inertia derived from uniform density over its shapes.
    pub fn dynamic(role: Role, shapes: Vec<Shape>, pose: Pose, mass: f64, material: Material) -> Body {
        assert!(mass > 0.0, "dynamic bodies need positive mass");
        let area: f64 = shapes.iter().map(Shape::area).sum();
        let moment: f64 = shapes.iter().map(Shape::second_moment).sum();
        let inertia = mass * moment / area;
        Body {
            id: 0,
            role,
            shapes,
            pose: Pose { theta: wrap_angle(pose.theta), ..pose },
            velocity: Vec2::ZERO,
            angular_velocity: 0.0,
            mass,
            inertia,
            material,
            is_static: false,
        }
    }

    pub fn wall(shape: Shape, pose: Pose) -> Body {
        Body {
            id: 0,
            role: Role::Wall,
            shapes: vec![shape],
            pose,
            velocity: Vec2::ZERO,
            angular_velocity: 0.0,
            mass: 0.0,
            inertia: 0.0,
            material: Material { ground_mu: 0.0, restitution: 0.0 },
            is_static: true,
        }
    }

    /// Box or wheeled box with the ground coefficient taken from `params`.
    pub fn pushable_box(width: f64, height: f64, pose: Pose, mass: f64, wheeled: bool, params: &PhysicsParams) -> Body {
        let shape = Shape::Polygon { vertices: super::ConvexPolygon::rectangle(width, height) };
        let (role, mu) = if wheeled {
            (Role::WheeledBox, params.ground_mu * params.wheeled_multiplier)
        } else {
            (Role::Box, params.ground_mu)
        };
        Body::dynamic(role, vec![shape], pose, mass, Material { ground_mu: mu, restitution: params.restitution })
    }

    #[inline]
    pub fn inv_mass(&self) -> f64 {
        if self.is_static {
            0.0
        } else {
            1.0 / self.mass
        }
    }

    #[inline]
    pub fn inv_inertia(&self) -> f64 {
        if self.is_static || self.inertia <= 0.0 {
            0.0
        } else {
            1.0 / self.inertia
        }
    }

    /// Radius of gyration; sets the lever arm of ground friction torque.
    pub fn gyration_radius(&self) -> f64 {
        if self.mass > 0.0 {
            (self.inertia / self.mass).sqrt()
        } else {
            0.0
        }
    }

    pub fn kinetic_energy(&self) -> f64 {
        if self.is_static {
            return 0.0;
        }
        0.5 * self.mass * self.velocity.length_squared() + 0.5 * self.inertia * self.angular_velocity.powi(2)
    }

    pub fn world_shapes(&self) -> impl Iterator<Item = WorldShape> + '_ {
        self.shapes.iter().map(move |s| s.to_world(&self.pose))
    }

    /// World-frame outline of every part, for rendering and containment checks.
    pub fn world_outlines(&self) -> Vec<Vec<Vec2>> {
        self.world_shapes().map(|s| s.outline()).collect()
    }

    pub fn contains_point(&self, p: Vec2) -> bool {
        self.world_shapes().any(|s| s.contains(p))
    }
}
