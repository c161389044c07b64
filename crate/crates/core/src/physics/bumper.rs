//! Robot collision outlines: a disc chassis with one of three front bumpers.
//!
//! Each bumper starts from an 8-segment polyline across the front of the
//! robot (body +x is forward). Straight and outward-curved bumpers thicken
//! into one convex part; the inward-curved collector is split into three.

use serde::{Deserialize, Serialize};

use crate::geom::{convex_hull, Vec2};

use super::shape::{ConvexPolygon, Shape};

/// TurtleBot3 Burger footprint radius (m).
pub const CHASSIS_RADIUS: f64 = 0.105;
const BUMPER_HALF_WIDTH: f64 = 0.115;
const BUMPER_THICKNESS: f64 = 0.02;
const SEGMENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Bumper {
    /// Inward-curved collector.
    Collector,
    /// Straight-edge pusher.
    #[default]
    Pusher,
    /// Outward-curved navigation bumper.
    Navigation,
}

impl Bumper {
    pub const ALL: [Bumper; 3] = [Bumper::Collector, Bumper::Pusher, Bumper::Navigation];

    pub fn as_str(self) -> &'static str {
        match self {
            Bumper::Collector => "collector",
            Bumper::Pusher => "pusher",
            Bumper::Navigation => "navigation",
        }
    }

    pub fn parse(s: &str) -> Option<Bumper> {
        match s {
            "collector" | "inward" => Some(Bumper::Collector),
            "pusher" | "straight" => Some(Bumper::Pusher),
            "navigation" | "outward" => Some(Bumper::Navigation),
            _ => None,
        }
    }

    /// Front face polyline, 9 points from right (−y) to left (+y).
    pub fn polyline(self) -> Vec<Vec2> {
        let base_x = CHASSIS_RADIUS + 0.01;
        (0..=SEGMENTS)
            .map(|k| {
                let t = -1.0 + 2.0 * k as f64 / SEGMENTS as f64;
                let y = t * BUMPER_HALF_WIDTH;
                let bulge = 0.03 * (1.0 - t * t);
                let x = match self {
                    Bumper::Pusher => base_x,
                    Bumper::Navigation => base_x + bulge,
                    Bumper::Collector => base_x + 0.03 - bulge,
                };
                Vec2::new(x, y)
            })
            .collect()
    }

    /// Convex parts of the bumper in body frame.
    pub fn parts(self) -> Vec<ConvexPolygon> {
        let line = self.polyline();
        let thicken = |pts: &[Vec2]| {
            let mut all: Vec<Vec2> = pts.to_vec();
            all.extend(pts.iter().map(|p| *p - Vec2::new(BUMPER_THICKNESS, 0.0)));
            ConvexPolygon::new(convex_hull(&all)).expect("bumper part is a valid convex polygon")
        };
        match self {
            Bumper::Pusher | Bumper::Navigation => {
                // back corners sit inside the chassis so the part fuses with it
                let mut pts = line.clone();
                pts.push(Vec2::new(CHASSIS_RADIUS * 0.6, -BUMPER_HALF_WIDTH));
                pts.push(Vec2::new(CHASSIS_RADIUS * 0.6, BUMPER_HALF_WIDTH));
                vec![ConvexPolygon::new(convex_hull(&pts)).expect("bumper part is a valid convex polygon")]
            }
            Bumper::Collector => vec![thicken(&line[0..=3]), thicken(&line[3..=5]), thicken(&line[5..=8])],
        }
    }

    /// Farthest forward reach of the bumper from the robot origin.
    pub fn front_reach(self) -> f64 {
        self.polyline().iter().map(|p| p.x).fold(CHASSIS_RADIUS, f64::max)
    }
}

/// Chassis disc plus bumper parts.
pub fn robot_shapes(bumper: Bumper) -> Vec<Shape> {
    let mut shapes = vec![Shape::Disc { center: Vec2::ZERO, radius: CHASSIS_RADIUS }];
    shapes.extend(bumper.parts().into_iter().map(|p| Shape::Polygon { vertices: p }));
    shapes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bumper_has_eight_segments_and_few_parts() {
        for b in Bumper::ALL {
            assert_eq!(b.polyline().len(), SEGMENTS + 1);
            let parts = b.parts();
            assert!(!parts.is_empty() && parts.len() <= 3, "{b:?}");
            for p in &parts {
                assert!(p.vertices().len() <= 32);
            }
        }
        assert_eq!(Bumper::Collector.parts().len(), 3);
    }

    #[test]
    fn curvature_direction() {
        let nav = Bumper::Navigation.polyline();
        let col = Bumper::Collector.polyline();
        // outward: middle ahead of the ends; inward: behind
        assert!(nav[4].x > nav[0].x);
        assert!(col[4].x < col[0].x);
    }

    #[test]
    fn parse_round_trip() {
        for b in Bumper::ALL {
            assert_eq!(Bumper::parse(b.as_str()), Some(b));
        }
    }
}
