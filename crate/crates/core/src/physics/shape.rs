use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::geom::{polygon_centroid, signed_area, Aabb, Pose, Vec2};

pub const MIN_POLYGON_VERTICES: usize = 3;
pub const MAX_POLYGON_VERTICES: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShapeError {
    #[error("polygon has {0} vertices, expected 3..=32")]
    VertexCount(usize),
    #[error("polygon is not convex and counter-clockwise at vertex {0}")]
    NotConvex(usize),
    #[error("polygon has zero area")]
    Degenerate,
    #[error("disc radius must be positive, got {0}")]
    BadRadius(f64),
}

/// Convex polygon in body-frame coordinates, counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec2>", into = "Vec<Vec2>")]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
    normals: Vec<Vec2>,
}

impl TryFrom<Vec<Vec2>> for ConvexPolygon {
    type Error = ShapeError;
    fn try_from(v: Vec<Vec2>) -> Result<Self, ShapeError> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Vec2> {
    fn from(p: ConvexPolygon) -> Vec<Vec2> {
        p.vertices
    }
}

impl ConvexPolygon {
    /// Validates vertex count, convexity and winding. Collinear runs are
    /// allowed; zero-area polygons are rejected.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, ShapeError> {
        let n = vertices.len();
        if !(MIN_POLYGON_VERTICES..=MAX_POLYGON_VERTICES).contains(&n) {
            return Err(ShapeError::VertexCount(n));
        }
        if signed_area(&vertices) <= 1e-12 {
            return Err(ShapeError::Degenerate);
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) < -1e-12 {
                return Err(ShapeError::NotConvex((i + 1) % n));
            }
        }
        let mut normals = Vec::with_capacity(n);
        for i in 0..n {
            let e = vertices[(i + 1) % n] - vertices[i];
            if e.length() <= 1e-12 {
                return Err(ShapeError::Degenerate);
            }
            normals.push(Vec2::new(e.y, -e.x).normalized());
        }
        Ok(Self { vertices, normals })
    }

    /// Builds a polygon from world-ish coordinates and shifts it so its area
    /// centroid sits at the origin. Returns the polygon and the removed offset.
    pub fn centered(vertices: Vec<Vec2>) -> Result<(Self, Vec2), ShapeError> {
        let c = polygon_centroid(&vertices);
        let shifted = vertices.into_iter().map(|v| v - c).collect();
        Ok((Self::new(shifted)?, c))
    }

    pub fn rectangle(width: f64, height: f64) -> Self {
        let (hw, hh) = (width / 2.0, height / 2.0);
        Self::new(vec![
            Vec2::new(-hw, -hh),
            Vec2::new(hw, -hh),
            Vec2::new(hw, hh),
            Vec2::new(-hw, hh),
        ])
        .expect("rectangle with positive extents is convex")
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// Outward unit normal of edge `i` (from vertex `i` to `i + 1`).
    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Vec2 {
        polygon_centroid(&self.vertices)
    }

    /// Second moment of area about the body origin.
    pub fn second_moment(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            acc += p.cross(q) * (p.dot(p) + p.dot(q) + q.dot(q));
        }
        acc / 12.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Polygon { vertices: ConvexPolygon },
    Disc { center: Vec2, radius: f64 },
}

impl Shape {
    pub fn polygon(vertices: Vec<Vec2>) -> Result<Shape, ShapeError> {
        Ok(Shape::Polygon { vertices: ConvexPolygon::new(vertices)? })
    }

    pub fn disc(radius: f64) -> Result<Shape, ShapeError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(ShapeError::BadRadius(radius));
        }
        Ok(Shape::Disc { center: Vec2::ZERO, radius })
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Polygon { vertices } => vertices.area(),
            Shape::Disc { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Shape::Polygon { vertices } => vertices.second_moment(),
            Shape::Disc { center, radius } => {
                let a = std::f64::consts::PI * radius * radius;
                a * (0.5 * radius * radius + center.length_squared())
            }
        }
    }

    /// Places the shape in the world.
    pub fn to_world(&self, pose: &Pose) -> WorldShape {
        match self {
            Shape::Polygon { vertices } => {
                let (s, c) = pose.theta.sin_cos();
                let t = pose.position();
                WorldShape::Polygon {
                    vertices: vertices.vertices().iter().map(|v| v.rotate_cs(c, s) + t).collect(),
                    normals: vertices.normals().iter().map(|n| n.rotate_cs(c, s)).collect(),
                }
            }
            Shape::Disc { center, radius } => {
                WorldShape::Disc { center: pose.transform_point(*center), radius: *radius }
            }
        }
    }
}

/// A shape in world coordinates, cached once per solver pass.
#[derive(Debug, Clone)]
pub enum WorldShape {
    Polygon { vertices: SmallVec<[Vec2; 12]>, normals: SmallVec<[Vec2; 12]> },
    Disc { center: Vec2, radius: f64 },
}

impl WorldShape {
    pub fn aabb(&self) -> Aabb {
        match self {
            WorldShape::Polygon { vertices, .. } => Aabb::from_points(vertices.iter().copied()),
            WorldShape::Disc { center, radius } => Aabb {
                min: Vec2::new(center.x - radius, center.y - radius),
                max: Vec2::new(center.x + radius, center.y + radius),
            },
        }
    }

    /// Outline for display or rasterization; discs become a 16-gon.
    pub fn outline(&self) -> Vec<Vec2> {
        match self {
            WorldShape::Polygon { vertices, .. } => vertices.to_vec(),
            WorldShape::Disc { center, radius } => (0..16)
                .map(|k| *center + Vec2::from_angle(k as f64 * std::f64::consts::TAU / 16.0) * *radius)
                .collect(),
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            WorldShape::Polygon { vertices, .. } => crate::geom::point_in_convex(vertices, p),
            WorldShape::Disc { center, radius } => (p - *center).length_squared() <= radius * radius,
        }
    }
}
