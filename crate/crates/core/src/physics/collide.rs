//! Narrow-phase collision between convex polygons and discs.
//!
//! Polygon pairs use the separating-axis test over both edge sets followed by
//! reference/incident face clipping, giving up to two manifold points.
//! Disc-polygon pairs use the closest boundary feature.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::geom::{closest_point_on_segment, Pose, Vec2};

use super::body::BodyId;
use super::shape::{Shape, WorldShape};

/// Geometry of a single contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactGeometry {
    pub point: Vec2,
    /// Unit normal pointing from the first shape to the second.
    pub normal: Vec2,
    pub penetration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub bodies: (BodyId, BodyId),
    pub point: Vec2,
    pub normal: Vec2,
    pub penetration: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ManifoldPoint {
    pub point: Vec2,
    pub depth: f64,
}

#[derive(Debug, Clone)]
pub struct Manifold {
    /// From shape A to shape B.
    pub normal: Vec2,
    pub points: SmallVec<[ManifoldPoint; 2]>,
}

impl Manifold {
    pub fn deepest(&self) -> Option<ContactGeometry> {
        self.points
            .iter()
            .max_by(|a, b| a.depth.total_cmp(&b.depth))
            .map(|p| ContactGeometry { point: p.point, normal: self.normal, penetration: p.depth })
    }
}

/// Contact between two shapes placed at the given poses, or `None` when they
/// are separated. The normal points from A to B.
pub fn collide_convex(a: &Shape, pose_a: Pose, b: &Shape, pose_b: Pose) -> Option<ContactGeometry> {
    manifold(&a.to_world(&pose_a), &b.to_world(&pose_b)).and_then(|m| m.deepest())
}

pub fn manifold(a: &WorldShape, b: &WorldShape) -> Option<Manifold> {
    match (a, b) {
        (WorldShape::Polygon { vertices: va, normals: na }, WorldShape::Polygon { vertices: vb, normals: nb }) => {
            polygon_polygon(va, na, vb, nb)
        }
        (WorldShape::Polygon { vertices, normals }, WorldShape::Disc { center, radius }) => {
            polygon_disc(vertices, normals, *center, *radius)
        }
        (WorldShape::Disc { center, radius }, WorldShape::Polygon { vertices, normals }) => {
            polygon_disc(vertices, normals, *center, *radius).map(|mut m| {
                m.normal = -m.normal;
                m
            })
        }
        (WorldShape::Disc { center: ca, radius: ra }, WorldShape::Disc { center: cb, radius: rb }) => {
            disc_disc(*ca, *ra, *cb, *rb)
        }
    }
}

/// Largest signed distance of `b`'s vertices behind any face of `a`.
fn max_separation(va: &[Vec2], na: &[Vec2], vb: &[Vec2]) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 0;
    for (i, (&v, &n)) in va.iter().zip(na.iter()).enumerate() {
        let mut s = f64::INFINITY;
        for &w in vb {
            s = s.min(n.dot(w - v));
        }
        if s > best {
            best = s;
            best_i = i;
        }
    }
    (best, best_i)
}

fn polygon_polygon(va: &[Vec2], na: &[Vec2], vb: &[Vec2], nb: &[Vec2]) -> Option<Manifold> {
    let (sep_a, edge_a) = max_separation(va, na, vb);
    if sep_a >= 0.0 {
        return None;
    }
    let (sep_b, edge_b) = max_separation(vb, nb, va);
    if sep_b >= 0.0 {
        return None;
    }

    // Prefer A's face unless B's is clearly better; keeps results stable
    // under tiny perturbations.
    let flip = sep_b > sep_a + 1e-9;
    let (ref_v, ref_n, inc_v, inc_n, ref_edge) =
        if flip { (vb, nb, va, na, edge_b) } else { (va, na, vb, nb, edge_a) };

    let normal = ref_n[ref_edge];
    let v1 = ref_v[ref_edge];
    let v2 = ref_v[(ref_edge + 1) % ref_v.len()];

    // Incident edge: most anti-parallel to the reference normal.
    let mut inc_edge = 0;
    let mut min_dot = f64::INFINITY;
    for (i, n) in inc_n.iter().enumerate() {
        let d = n.dot(normal);
        if d < min_dot {
            min_dot = d;
            inc_edge = i;
        }
    }
    let i1 = inc_v[inc_edge];
    let i2 = inc_v[(inc_edge + 1) % inc_v.len()];

    let tangent = (v2 - v1).normalized();
    let mut clip: SmallVec<[Vec2; 2]> = SmallVec::from_buf([i1, i2]);
    clip = clip_segment(&clip, -tangent, -tangent.dot(v1));
    if clip.len() < 2 {
        return fallback_deepest(ref_v, ref_n, ref_edge, inc_v, flip);
    }
    clip = clip_segment(&clip, tangent, tangent.dot(v2));
    if clip.len() < 2 {
        return fallback_deepest(ref_v, ref_n, ref_edge, inc_v, flip);
    }

    let mut points: SmallVec<[ManifoldPoint; 2]> = SmallVec::new();
    for &p in clip.iter() {
        let depth = -normal.dot(p - v1);
        if depth > 0.0 {
            points.push(ManifoldPoint { point: p, depth });
        }
    }
    if points.is_empty() {
        return fallback_deepest(ref_v, ref_n, ref_edge, inc_v, flip);
    }
    Some(Manifold { normal: if flip { -normal } else { normal }, points })
}

/// Single deepest incident vertex; only hit in near-degenerate configurations.
fn fallback_deepest(ref_v: &[Vec2], ref_n: &[Vec2], ref_edge: usize, inc_v: &[Vec2], flip: bool) -> Option<Manifold> {
    let normal = ref_n[ref_edge];
    let v1 = ref_v[ref_edge];
    let (p, depth) = inc_v
        .iter()
        .map(|&p| (p, -normal.dot(p - v1)))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    if depth <= 0.0 {
        return None;
    }
    let mut points = SmallVec::new();
    points.push(ManifoldPoint { point: p, depth });
    Some(Manifold { normal: if flip { -normal } else { normal }, points })
}

/// Keeps the part of a segment with `n·p <= offset`.
fn clip_segment(input: &[Vec2], n: Vec2, offset: f64) -> SmallVec<[Vec2; 2]> {
    let mut out = SmallVec::new();
    let (p0, p1) = (input[0], input[1]);
    let d0 = n.dot(p0) - offset;
    let d1 = n.dot(p1) - offset;
    if d0 <= 0.0 {
        out.push(p0);
    }
    if d1 <= 0.0 {
        out.push(p1);
    }
    if d0 * d1 < 0.0 {
        let t = d0 / (d0 - d1);
        out.push(p0 + (p1 - p0) * t);
    }
    out
}

/// Normal points from the polygon to the disc.
fn polygon_disc(vertices: &[Vec2], normals: &[Vec2], center: Vec2, radius: f64) -> Option<Manifold> {
    let mut max_sep = f64::NEG_INFINITY;
    let mut face = 0;
    for (i, (&v, &n)) in vertices.iter().zip(normals.iter()).enumerate() {
        let s = n.dot(center - v);
        if s > radius {
            return None;
        }
        if s > max_sep {
            max_sep = s;
            face = i;
        }
    }

    let (normal, depth) = if max_sep <= 0.0 {
        // center inside the polygon
        (normals[face], radius - max_sep)
    } else {
        let mut closest = vertices[0];
        let mut best = f64::INFINITY;
        for i in 0..vertices.len() {
            let q = closest_point_on_segment(vertices[i], vertices[(i + 1) % vertices.len()], center);
            let d = (center - q).length_squared();
            if d < best {
                best = d;
                closest = q;
            }
        }
        let dist = best.sqrt();
        if dist >= radius {
            return None;
        }
        let n = if dist > 1e-12 { (center - closest) / dist } else { normals[face] };
        (n, radius - dist)
    };
    let mut points = SmallVec::new();
    points.push(ManifoldPoint { point: center - normal * radius, depth });
    Some(Manifold { normal, points })
}

fn disc_disc(ca: Vec2, ra: f64, cb: Vec2, rb: f64) -> Option<Manifold> {
    let d = cb - ca;
    let dist = d.length();
    let r = ra + rb;
    if dist >= r {
        return None;
    }
    let normal = if dist > 1e-12 { d / dist } else { Vec2::new(1.0, 0.0) };
    let mut points = SmallVec::new();
    points.push(ManifoldPoint { point: ca + normal * ra, depth: r - dist });
    Some(Manifold { normal, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::ConvexPolygon;

    fn square() -> Shape {
        Shape::Polygon { vertices: ConvexPolygon::rectangle(1.0, 1.0) }
    }

    #[test]
    fn disjoint_squares() {
        assert!(collide_convex(&square(), Pose::new(0.0, 0.0, 0.0), &square(), Pose::new(2.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn overlapping_squares_axis_aligned() {
        let c = collide_convex(&square(), Pose::new(0.0, 0.0, 0.0), &square(), Pose::new(0.9, 0.0, 0.0)).unwrap();
        assert!((c.penetration - 0.1).abs() < 1e-12);
        assert!((c.normal.x.abs() - 1.0).abs() < 1e-12 && c.normal.y.abs() < 1e-12);
        assert!(c.normal.x > 0.0);
    }

    #[test]
    fn face_contact_has_two_points() {
        let m = manifold(
            &square().to_world(&Pose::new(0.0, 0.0, 0.0)),
            &square().to_world(&Pose::new(0.95, 0.2, 0.0)),
        )
        .unwrap();
        assert_eq!(m.points.len(), 2);
        for p in &m.points {
            assert!((p.depth - 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn disc_against_square_face_and_corner() {
        let disc = Shape::disc(0.5).unwrap();
        let c = collide_convex(&square(), Pose::default(), &disc, Pose::new(0.9, 0.0, 0.0)).unwrap();
        assert!((c.penetration - 0.1).abs() < 1e-12);
        assert!((c.normal - Vec2::new(1.0, 0.0)).length() < 1e-12);

        // corner region: distance from (0.5,0.5) to (0.8,0.8) is 0.3√2 ≈ 0.424
        let c = collide_convex(&square(), Pose::default(), &disc, Pose::new(0.8, 0.8, 0.0)).unwrap();
        assert!((c.penetration - (0.5 - 0.3 * 2f64.sqrt())).abs() < 1e-12);
        let reversed = collide_convex(&disc, Pose::new(0.8, 0.8, 0.0), &square(), Pose::default()).unwrap();
        assert!((reversed.normal + c.normal).length() < 1e-12);

        assert!(collide_convex(&square(), Pose::default(), &disc, Pose::new(1.2, 0.0, 0.0)).is_none());
    }

    #[test]
    fn disc_disc_overlap() {
        let a = Shape::disc(0.5).unwrap();
        let c = collide_convex(&a, Pose::default(), &a, Pose::new(0.0, 0.8, 0.0)).unwrap();
        assert!((c.penetration - 0.2).abs() < 1e-12);
        assert!((c.normal - Vec2::new(0.0, 1.0)).length() < 1e-12);
    }

    #[test]
    fn symmetric_up_to_sign() {
        let tri = Shape::polygon(vec![Vec2::new(-0.4, -0.3), Vec2::new(0.5, -0.2), Vec2::new(0.0, 0.6)]).unwrap();
        let pa = Pose::new(0.1, 0.0, 0.3);
        let pb = Pose::new(0.6, 0.2, -1.1);
        let ab = collide_convex(&tri, pa, &square(), pb).unwrap();
        let ba = collide_convex(&square(), pb, &tri, pa).unwrap();
        assert!((ab.penetration - ba.penetration).abs() < 1e-9);
        assert!((ab.normal + ba.normal).length() < 1e-9);
    }
}
