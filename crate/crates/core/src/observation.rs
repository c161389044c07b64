//! Egocentric multi-channel grid observations.

use serde::{Deserialize, Serialize};

use crate::env::{EnvKind, ObsConfig};
use crate::geom::{point_in_convex, Vec2};
use crate::map::StaticMap;
use crate::physics::{BodyId, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Static obstacles only.
    StaticOccupancy,
    /// Movable bodies only.
    MovableOccupancy,
    /// Static cells 1.0, movable cells 0.5.
    Occupancy,
    /// Robot silhouette.
    Footprint,
    /// Geodesic distance to the goal, normalized.
    GoalDistance,
    /// Euclidean distance from the robot center, normalized.
    EgoDistance,
    /// One-cell ray from the robot along its heading.
    Heading,
}

impl Channel {
    pub fn for_kind(kind: EnvKind) -> &'static [Channel] {
        use Channel::*;
        match kind {
            EnvKind::Maze => &[StaticOccupancy, MovableOccupancy, Footprint, GoalDistance],
            EnvKind::ShipIce => &[StaticOccupancy, MovableOccupancy, Footprint, GoalDistance, Heading],
            EnvKind::BoxDelivery | EnvKind::AreaClearing => &[Occupancy, Footprint, EgoDistance, GoalDistance],
        }
    }
}

/// `C × H × W` tensor in row-major order. Row 0 is the window's most
/// negative local y; column 0 its most negative local x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub channels: Vec<Channel>,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Observation {
    fn zeros(channels: &[Channel], height: usize, width: usize) -> Self {
        Self { channels: channels.to_vec(), height, width, data: vec![0.0; channels.len() * height * width] }
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.data[(channel * self.height + row) * self.width + col]
    }

    #[inline]
    fn set(&mut self, channel: usize, row: usize, col: usize, v: f32) {
        self.data[(channel * self.height + row) * self.width + col] = v;
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_index(&self, ch: Channel) -> Option<usize> {
        self.channels.iter().position(|&c| c == ch)
    }
}

/// Window geometry: local offsets of cell centers and the local→world map.
struct Frame {
    origin: Vec2,
    cos: f64,
    sin: f64,
    size: usize,
    res: f64,
}

impl Frame {
    #[inline]
    fn local(&self, row: usize, col: usize) -> Vec2 {
        let half = self.size as f64 / 2.0;
        Vec2::new((col as f64 + 0.5 - half) * self.res, (row as f64 + 0.5 - half) * self.res)
    }

    #[inline]
    fn to_world(&self, local: Vec2) -> Vec2 {
        self.origin + local.rotate_cs(self.cos, self.sin)
    }

    #[inline]
    fn to_local(&self, world: Vec2) -> Vec2 {
        (world - self.origin).rotate_cs(self.cos, -self.sin)
    }

    /// Inclusive cell range covering local points in `[lo, hi]`.
    fn cells(&self, lo: Vec2, hi: Vec2) -> Option<(usize, usize, usize, usize)> {
        let half = self.size as f64 / 2.0;
        let idx = |v: f64| (v / self.res + half).floor();
        let (c0, c1) = (idx(lo.x).max(0.0), idx(hi.x).min(self.size as f64 - 1.0));
        let (r0, r1) = (idx(lo.y).max(0.0), idx(hi.y).min(self.size as f64 - 1.0));
        if c1 < c0 || r1 < r0 {
            return None;
        }
        Some((r0 as usize, r1 as usize, c0 as usize, c1 as usize))
    }
}

fn raster_shape(obs: &mut Observation, frame: &Frame, channel: usize, shape: &crate::physics::WorldShape, value: f32) {
    use crate::physics::WorldShape;
    match shape {
        WorldShape::Polygon { vertices, .. } => {
            let local: Vec<Vec2> = vertices.iter().map(|&v| frame.to_local(v)).collect();
            let (lo, hi) = bounds(&local);
            let Some((r0, r1, c0, c1)) = frame.cells(lo, hi) else { return };
            for row in r0..=r1 {
                for col in c0..=c1 {
                    if point_in_convex(&local, frame.local(row, col)) && obs.get(channel, row, col) < value {
                        obs.set(channel, row, col, value);
                    }
                }
            }
        }
        WorldShape::Disc { center, radius } => {
            let c = frame.to_local(*center);
            let r = Vec2::new(*radius, *radius);
            let Some((r0, r1, c0, c1)) = frame.cells(c - r, c + r) else { return };
            for row in r0..=r1 {
                for col in c0..=c1 {
                    if frame.local(row, col).distance(c) <= *radius && obs.get(channel, row, col) < value {
                        obs.set(channel, row, col, value);
                    }
                }
            }
        }
    }
}

fn bounds(points: &[Vec2]) -> (Vec2, Vec2) {
    points.iter().fold(
        (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), p| (Vec2::new(lo.x.min(p.x), lo.y.min(p.y)), Vec2::new(hi.x.max(p.x), hi.y.max(p.y))),
    )
}

/// Renders the observation for `kind` around the robot.
pub fn render_observation(world: &World, robot: BodyId, map: &StaticMap, kind: EnvKind, cfg: &ObsConfig) -> Observation {
    let channels = Channel::for_kind(kind);
    let size = cfg.size;
    let mut obs = Observation::zeros(channels, size, size);
    let rb = world.body(robot);
    let rotate = cfg.rotate && kind != EnvKind::ShipIce;
    let theta = if rotate { rb.pose.theta } else { 0.0 };
    let frame = Frame { origin: rb.pose.position(), cos: theta.cos(), sin: theta.sin(), size, res: cfg.resolution };
    let goal_field = map.goal_field();
    let goal_scale = goal_field.max_finite();
    let half_diag = std::f64::consts::SQRT_2 * size as f64 / 2.0 * cfg.resolution;

    for (ci, &ch) in channels.iter().enumerate() {
        match ch {
            Channel::StaticOccupancy | Channel::Occupancy | Channel::GoalDistance | Channel::EgoDistance => {
                for row in 0..size {
                    for col in 0..size {
                        let local = frame.local(row, col);
                        let v = match ch {
                            Channel::StaticOccupancy | Channel::Occupancy => {
                                if map.grid.is_free_at(frame.to_world(local)) {
                                    0.0
                                } else {
                                    1.0
                                }
                            }
                            Channel::GoalDistance => {
                                let d = goal_field.at(frame.to_world(local));
                                if d.is_finite() && goal_scale > 0.0 {
                                    (d / goal_scale).min(1.0)
                                } else if d.is_finite() {
                                    0.0
                                } else {
                                    1.0
                                }
                            }
                            _ => (local.length() / half_diag).min(1.0),
                        };
                        obs.set(ci, row, col, v as f32);
                    }
                }
                if ch == Channel::Occupancy {
                    for b in world.bodies.iter().filter(|b| b.role.is_movable()) {
                        for s in b.world_shapes() {
                            raster_shape(&mut obs, &frame, ci, &s, 0.5);
                        }
                    }
                }
            }
            Channel::MovableOccupancy => {
                for b in world.bodies.iter().filter(|b| b.role.is_movable()) {
                    for s in b.world_shapes() {
                        raster_shape(&mut obs, &frame, ci, &s, 1.0);
                    }
                }
            }
            Channel::Footprint => {
                for s in rb.world_shapes() {
                    raster_shape(&mut obs, &frame, ci, &s, 1.0);
                }
            }
            Channel::Heading => {
                for (row, col) in heading_ray(size, rb.pose.theta - theta) {
                    obs.set(ci, row, col, 1.0);
                }
            }
        }
    }
    obs
}

/// Bresenham ray from the window center cell to the window edge.
pub fn heading_ray(size: usize, heading: f64) -> Vec<(usize, usize)> {
    let c = (size / 2) as i64;
    let reach = 2.0 * size as f64;
    let (x0, y0) = (c, c);
    let x1 = x0 + (heading.cos() * reach).round() as i64;
    let y1 = y0 + (heading.sin() * reach).round() as i64;
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    let mut out = Vec::new();
    while x >= 0 && y >= 0 && x < size as i64 && y < size as i64 {
        out.push((y as usize, x as usize));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}
