//! Scripted push policy for the manipulation tasks.

use crate::env::layout::robot_radius;
use crate::env::{Action, Environment, ROBOT};
use crate::geom::{Rect, Vec2};
use crate::grid::{geodesic_distance_field, DistanceField, GridSpec, OccupancyGrid};
use crate::map::{Goal, StaticMap};
use crate::observation::Observation;
use crate::physics::BodyId;

use super::{steer_toward, Policy};

/// Approach distance behind a box, in box half-widths, from the box center
/// to the bumper face.
pub const APPROACH_FACTOR: f64 = 1.5;
const GRID_RESOLUTION: f64 = 0.05;
/// Another box must be this much cheaper (m) before the target switches.
const SWITCH_MARGIN: f64 = 0.3;
/// Aim point ahead of the box while pushing (m).
const PUSH_LEAD: f64 = 0.3;
/// Lateral offset from the push line still counted as docked, in box half-widths.
const DOCK_LATERAL: f64 = 0.8;

/// Direction in which to push a box centered at `c` toward its goal.
pub fn push_direction(map: &StaticMap, c: Vec2) -> Vec2 {
    match map.goal {
        Goal::Clearance { rect } => exit_direction(rect, c),
        Goal::Receptacle { rect } => {
            let g = map.goal_field().gradient(c);
            if rect.expanded_contains(c, 0.3) || g.length() < 1e-9 {
                (rect.center() - c).normalized()
            } else {
                (-g).normalized()
            }
        }
        _ => {
            let g = map.goal_field().gradient(c);
            (-g).normalized()
        }
    }
}

/// Outward normal of the rectangle side nearest to `c` (inside), or of the
/// side `c` lies farthest beyond (outside). Ties keep the first side in
/// the order −x, +x, −y, +y.
fn exit_direction(rect: Rect, c: Vec2) -> Vec2 {
    let sides = [
        (c.x - rect.min.x, Vec2::new(-1.0, 0.0)),
        (rect.max.x - c.x, Vec2::new(1.0, 0.0)),
        (c.y - rect.min.y, Vec2::new(0.0, -1.0)),
        (rect.max.y - c.y, Vec2::new(0.0, 1.0)),
    ];
    let mut best = sides[0];
    for s in &sides[1..] {
        if s.0 < best.0 {
            best = *s;
        }
    }
    best.1
}

/// Robot-center position from which pushing along `dir` starts.
pub fn approach_point(c: Vec2, dir: Vec2, half_width: f64, front_reach: f64) -> Vec2 {
    c - dir * (APPROACH_FACTOR * half_width + front_reach)
}

/// Picks the cheapest incomplete box, drives behind it and pushes it along
/// its goal direction. Recomputed every step.
#[derive(Default)]
pub struct GreedyPush {
    target: Option<BodyId>,
}

impl GreedyPush {
    pub fn target(&self) -> Option<BodyId> {
        self.target
    }
}

struct Candidate {
    id: BodyId,
    center: Vec2,
    dir: Vec2,
    approach: Vec2,
    cost: f64,
}

fn clear_disc(grid: &mut OccupancyGrid, center: Vec2, radius: f64) {
    let r = Vec2::new(radius, radius);
    let Some((c0, r0, c1, r1)) = grid.spec.cell_range(center - r, center + r) else { return };
    for row in r0..=r1 {
        for col in c0..=c1 {
            if grid.spec.cell_center(col, row).distance(center) <= radius {
                grid.set(col, row, false);
            }
        }
    }
}

/// Field value at `p`, falling back to the best finite neighbor.
fn lookup(field: &DistanceField, p: Vec2) -> f64 {
    let v = field.at(p);
    if v.is_finite() {
        return v;
    }
    let h = field.spec.resolution;
    let mut best = f64::INFINITY;
    for dy in -1..=1 {
        for dx in -1..=1 {
            best = best.min(field.at(p + Vec2::new(dx as f64 * h, dy as f64 * h)) + h * 1.5);
        }
    }
    best
}

impl Policy for GreedyPush {
    fn name(&self) -> &'static str {
        "greedy_push"
    }

    fn reset(&mut self, _env: &Environment) {
        self.target = None;
    }

    fn act(&mut self, _obs: Option<&Observation>, env: &Environment) -> Action {
        let spec = env.spec();
        let world = env.world();
        let map = env.map();
        let pose = env.robot_pose();
        let p = pose.position();
        let robot = world.body(ROBOT);
        let reach = spec.bumper.front_reach();
        let radius = robot_radius(robot);

        let incomplete: Vec<BodyId> = env.objects().iter().copied().filter(|&id| !env.object_done(id)).collect();
        if incomplete.is_empty() {
            self.target = None;
            return steer_toward(spec, pose.theta, pose.theta);
        }

        // coarse planning grid: static obstacles and every box, inflated by the robot
        let mut grid = OccupancyGrid::new(GridSpec::covering(spec.arena, GRID_RESOLUTION));
        for poly in &map.obstacles {
            grid.fill_convex(poly);
        }
        for &id in env.objects() {
            for outline in world.body(id).world_outlines() {
                grid.fill_convex(&outline);
            }
        }
        let grid = grid.inflated(radius);
        let mut from_robot = grid.clone();
        clear_disc(&mut from_robot, p, 2.0 * GRID_RESOLUTION);
        let robot_field = match from_robot.spec.cell_of(p) {
            Some((c, r)) => geodesic_distance_field(&from_robot, &[from_robot.spec.index(c, r)]),
            None => geodesic_distance_field(&from_robot, &[]),
        };

        let statics = map.grid.inflated(radius);
        let mut candidates: Vec<Candidate> = Vec::new();
        for &id in &incomplete {
            let b = world.body(id);
            let c = b.pose.position();
            let hw = spec.box_size / 2.0;
            let base = push_direction(map, c);
            // if the ideal approach is blocked by a wall, try nearby directions
            let mut chosen = None;
            for turn in [0.0, 0.5, -0.5, 1.0, -1.0] {
                let dir = base.rotate(turn);
                let a = approach_point(c, dir, hw, reach);
                if statics.is_free_at(a) {
                    chosen = Some((dir, a));
                    break;
                }
            }
            let Some((dir, approach)) = chosen else { continue };
            let to_goal = map.goal_distance(c);
            let cost = lookup(&robot_field, approach) + if to_goal.is_finite() { to_goal } else { 1e3 };
            candidates.push(Candidate { id, center: c, dir, approach, cost });
        }
        if candidates.is_empty() {
            // every approach is walled off: nudge toward the lowest-id box
            let c = world.body(incomplete[0]).pose.position();
            self.target = Some(incomplete[0]);
            return steer_toward(spec, pose.theta, (c - p).angle());
        }
        let mut best = 0;
        for (i, cand) in candidates.iter().enumerate() {
            if cand.cost < candidates[best].cost {
                best = i;
            }
        }
        if let Some(cur) = self.target.and_then(|t| candidates.iter().position(|c| c.id == t)) {
            if candidates[cur].cost <= candidates[best].cost + SWITCH_MARGIN {
                best = cur;
            }
        }
        let cand = &candidates[best];
        self.target = Some(cand.id);

        let hw = spec.box_size / 2.0;
        let rel = p - cand.center;
        let along = rel.dot(cand.dir);
        let lateral = rel.cross(cand.dir).abs();
        let approach_dist = APPROACH_FACTOR * hw + reach;
        let docked = along <= -(hw + reach - 0.05) && along >= -(approach_dist + 0.1) && lateral <= DOCK_LATERAL * hw;
        let heading = if docked {
            (cand.center + cand.dir * PUSH_LEAD - p).angle()
        } else if p.distance(cand.approach) <= spec.step_distance {
            (cand.approach - p).angle()
        } else {
            let mut to_approach = grid.clone();
            clear_disc(&mut to_approach, cand.approach, 2.0 * GRID_RESOLUTION);
            clear_disc(&mut to_approach, p, 2.0 * GRID_RESOLUTION);
            let field = match to_approach.spec.cell_of(cand.approach) {
                Some((c, r)) => geodesic_distance_field(&to_approach, &[to_approach.spec.index(c, r)]),
                None => geodesic_distance_field(&to_approach, &[]),
            };
            let g = field.gradient(p);
            if field.sample(p).is_finite() && g.length() > 1e-9 {
                (-g).angle()
            } else if rel.length() < hw * std::f64::consts::SQRT_2 + radius + 0.05 {
                // too close to the box to plan around it: back away first
                rel.angle()
            } else {
                (cand.approach - p).angle()
            }
        };
        steer_toward(spec, pose.theta, heading)
    }
}
