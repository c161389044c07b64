//! Kinodynamic RRT over unicycle motion primitives, tracked by pure pursuit.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::layout::robot_radius;
use crate::env::{Action, ActionMode, Environment, ROBOT};
use crate::geom::{wrap_angle, Pose, Rect, Vec2};
use crate::grid::OccupancyGrid;
use crate::map::Goal;
use crate::observation::Observation;
use crate::physics::{integrate_unicycle, CHASSIS_RADIUS};

use super::{steer_toward, Policy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrtConfig {
    pub goal_bias: f64,
    /// Distance to the goal set at which a node counts as arrived (m).
    pub goal_tolerance: f64,
    /// Duration of one motion primitive (s).
    pub primitive_duration: f64,
    pub max_nodes: usize,
    /// Clearance added to the robot radius when inflating obstacles (m).
    pub margin: f64,
    /// Pure-pursuit lookahead (m).
    pub lookahead: f64,
    /// Distance from the path that triggers a replan (m).
    pub replan_deviation: f64,
}

impl Default for RrtConfig {
    fn default() -> Self {
        Self {
            goal_bias: 0.1,
            goal_tolerance: 0.15,
            primitive_duration: 0.25,
            max_nodes: 20_000,
            margin: 0.05,
            lookahead: 0.3,
            replan_deviation: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RrtError {
    #[error("no path found within {0} nodes")]
    NoPath(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrtPlan {
    /// Poses from the start to the arrival node, one per primitive.
    pub path: Vec<Pose>,
    pub nodes: usize,
}

/// Whether `p` is within `tolerance` of the goal set.
pub fn goal_reached(goal: &Goal, p: Vec2, tolerance: f64) -> bool {
    match *goal {
        Goal::Disc { center, radius } => p.distance(center) <= radius + tolerance,
        Goal::Line { y } => p.y >= y - tolerance,
        _ => goal.contains(p),
    }
}

fn goal_sample(goal: &Goal, region: Rect, rng: &mut ChaCha8Rng) -> Vec2 {
    match *goal {
        Goal::Disc { center, .. } => center,
        Goal::Line { y } => Vec2::new(rng.random_range(region.min.x..region.max.x), (y + 0.2).min(region.max.y)),
        Goal::Receptacle { rect } | Goal::Clearance { rect } => rect.center(),
    }
}

/// Uniform buckets over the plane for nearest-node queries.
struct Buckets {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
}

impl Buckets {
    fn key(&self, p: Vec2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Vec2, id: usize) {
        let k = self.key(p);
        self.map.entry(k).or_default().push(id);
    }

    /// Nearest stored point; ties go to the lower id.
    fn nearest(&self, p: Vec2, points: &[Pose]) -> usize {
        let (kx, ky) = self.key(p);
        let mut best: Option<(f64, usize)> = None;
        let mut ring = 0i64;
        loop {
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    if let Some(ids) = self.map.get(&(kx + dx, ky + dy)) {
                        for &id in ids {
                            let d = points[id].position().distance(p);
                            if best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
                                best = Some((d, id));
                            }
                        }
                    }
                }
            }
            // every point outside the ring is at least `ring · cell` away
            if let Some((d, id)) = best {
                if d <= ring as f64 * self.cell {
                    return id;
                }
            }
            ring += 1;
            if ring > 10_000 {
                return best.map(|b| b.1).unwrap_or(0);
            }
        }
    }
}

/// Grows a tree from `start` with primitives of forward speed `v0` and turn
/// rates {−ω_max, 0, +ω_max}; the first node within tolerance of the goal
/// ends the search. `free` is the (already inflated) occupancy grid.
pub fn rrt_plan(
    free: &OccupancyGrid,
    goal: &Goal,
    region: Rect,
    start: Pose,
    v0: f64,
    omega_max: f64,
    cfg: &RrtConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RrtPlan, RrtError> {
    let mut poses = vec![start];
    let mut parents: Vec<usize> = vec![usize::MAX];
    let mut buckets = Buckets { cell: 0.25, map: HashMap::new() };
    buckets.insert(start.position(), 0);
    let checks = 5;
    let dt = cfg.primitive_duration / checks as f64;

    let finish = |node: usize, poses: &[Pose], parents: &[usize]| {
        let mut path = Vec::new();
        let mut n = node;
        while n != usize::MAX {
            path.push(poses[n]);
            n = parents[n];
        }
        path.reverse();
        RrtPlan { path, nodes: poses.len() }
    };
    if goal_reached(goal, start.position(), cfg.goal_tolerance) {
        return Ok(finish(0, &poses, &parents));
    }

    while poses.len() < cfg.max_nodes {
        let sample = if rng.random_bool(cfg.goal_bias) {
            goal_sample(goal, region, rng)
        } else {
            Vec2::new(rng.random_range(region.min.x..region.max.x), rng.random_range(region.min.y..region.max.y))
        };
        let near = buckets.nearest(sample, &poses);
        let from = poses[near];
        let mut best: Option<(f64, Pose)> = None;
        for omega in [-omega_max, 0.0, omega_max] {
            let mut p = from;
            let mut ok = true;
            for _ in 0..checks {
                p = integrate_unicycle(p, v0, omega, dt);
                if !free.is_free_at(p.position()) {
                    ok = false;
                    break;
                }
            }
            if ok {
                let d = p.position().distance(sample);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, p));
                }
            }
        }
        let Some((_, pose)) = best else { continue };
        let id = poses.len();
        poses.push(pose);
        parents.push(near);
        buckets.insert(pose.position(), id);
        if goal_reached(goal, pose.position(), cfg.goal_tolerance) {
            return Ok(finish(id, &poses, &parents));
        }
    }
    Err(RrtError::NoPath(cfg.max_nodes))
}

const FAILURE_COOLDOWN: usize = 20;

/// Plans with RRT against a snapshot of static and movable obstacles, then
/// tracks the path with pure pursuit. Replans when the robot strays from
/// the path or runs out of it.
pub struct RrtPolicy {
    cfg: RrtConfig,
    rng: ChaCha8Rng,
    path: Vec<Vec2>,
    index: usize,
    pub plans: usize,
    /// Steps to wait before planning again after a failed plan.
    cooldown: usize,
}

impl RrtPolicy {
    pub fn new(cfg: RrtConfig) -> Self {
        Self { cfg, rng: ChaCha8Rng::seed_from_u64(0), path: Vec::new(), index: 0, plans: 0, cooldown: 0 }
    }

    pub fn path(&self) -> &[Vec2] {
        &self.path
    }

    fn plan(&mut self, env: &Environment) {
        self.plans += 1;
        let spec = env.spec();
        let world = env.world();
        let map = env.map();
        let pose = env.robot_pose();
        let radius = robot_radius(world.body(ROBOT));
        let mut with_movables = map.grid.clone();
        for &id in env.objects() {
            for outline in world.body(id).world_outlines() {
                with_movables.fill_convex(&outline);
            }
        }
        let (v0, omega_max) = match spec.action_mode {
            ActionMode::WheelVelocities => (spec.max_wheel_speed, spec.max_turn_rate),
            _ => (spec.forward_speed, spec.max_turn_rate),
        };
        let region = Rect::new(Vec2::ZERO, spec.arena);
        // progressively more permissive obstacle sets
        let attempts = [
            (&with_movables, radius + self.cfg.margin),
            (&with_movables, CHASSIS_RADIUS + 0.01),
            (&map.grid, radius + self.cfg.margin),
            (&map.grid, CHASSIS_RADIUS + 0.01),
        ];
        for (grid, inflate) in attempts {
            let mut free = grid.inflated(inflate);
            clear_disc(&mut free, pose.position(), inflate);
            if let Ok(plan) = rrt_plan(&free, &map.goal, region, pose, v0, omega_max, &self.cfg, &mut self.rng) {
                self.path = plan.path.iter().map(Pose::position).collect();
                self.index = 0;
                return;
            }
        }
        self.path.clear();
        self.index = 0;
        self.cooldown = FAILURE_COOLDOWN;
    }

    fn deviation(&self, p: Vec2) -> f64 {
        let end = (self.index + 40).min(self.path.len());
        self.path[self.index..end].iter().map(|q| q.distance(p)).fold(f64::INFINITY, f64::min)
    }
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

impl Policy for RrtPolicy {
    fn name(&self) -> &'static str {
        "rrt"
    }

    fn reset(&mut self, env: &Environment) {
        self.rng = ChaCha8Rng::seed_from_u64(env.seed() ^ 0x7272_7472);
        self.path.clear();
        self.index = 0;
        self.plans = 0;
        self.cooldown = 0;
    }

    fn act(&mut self, _obs: Option<&Observation>, env: &Environment) -> Action {
        let pose = env.robot_pose();
        let p = pose.position();
        let goal = env.map().goal;
        let near_end = !self.path.is_empty() && self.index + 1 >= self.path.len() && !goal_reached(&goal, p, 0.0);
        let lost = self.path.is_empty() || self.deviation(p) > self.cfg.replan_deviation;
        if self.cooldown > 0 {
            self.cooldown -= 1;
        } else if lost || near_end && p.distance(*self.path.last().unwrap()) > self.cfg.lookahead {
            self.plan(env);
        }

        let target = if self.path.is_empty() {
            goal_point(&goal, p)
        } else {
            // advance along the path to the closest point in a forward window
            let end = (self.index + 40).min(self.path.len());
            let mut best = self.index;
            for i in self.index..end {
                if self.path[i].distance(p) < self.path[best].distance(p) {
                    best = i;
                }
            }
            self.index = best;
            self.path[self.index..]
                .iter()
                .copied()
                .find(|q| q.distance(p) >= self.cfg.lookahead)
                .unwrap_or_else(|| goal_point(&goal, p))
        };

        let spec = env.spec();
        let rel = target - p;
        match spec.action_mode {
            ActionMode::AngularVelocity => {
                let alpha = wrap_angle(rel.angle() - pose.theta);
                let curvature = 2.0 * alpha.sin() / rel.length().max(1e-6);
                let omega = if alpha.cos() < 0.0 {
                    // target behind: turn as hard as allowed
                    alpha.signum() * spec.max_turn_rate
                } else {
                    spec.forward_speed * curvature
                };
                Action::Angular { omega: omega.clamp(-spec.max_turn_rate, spec.max_turn_rate) }
            }
            _ => steer_toward(spec, pose.theta, rel.angle()),
        }
    }
}

/// Point the tracker heads for once the path is exhausted.
fn goal_point(goal: &Goal, p: Vec2) -> Vec2 {
    match *goal {
        Goal::Disc { center, .. } => center,
        Goal::Line { y } => Vec2::new(p.x, y + 1.0),
        Goal::Receptacle { rect } | Goal::Clearance { rect } => rect.center(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn empty(w: f64, h: f64) -> OccupancyGrid {
        OccupancyGrid::new(GridSpec::covering(Vec2::new(w, h), 0.02))
    }

    #[test]
    fn empty_map_path_is_short() {
        let grid = empty(6.0, 6.0);
        let goal = Goal::Disc { center: Vec2::new(5.0, 5.0), radius: 0.3 };
        let start = Pose::new(1.0, 1.0, std::f64::consts::FRAC_PI_4);
        let region = Rect::new(Vec2::ZERO, Vec2::new(6.0, 6.0));
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let plan = rrt_plan(&grid, &goal, region, start, 0.2, 1.0, &RrtConfig::default(), &mut rng).unwrap();
            let length: f64 = plan.path.windows(2).map(|w| w[0].position().distance(w[1].position())).sum();
            let straight = start.position().distance(Vec2::new(5.0, 5.0)) - 0.3 - 0.15;
            assert!(length <= 1.3 * straight, "seed {seed}: {length} vs {straight}");
        }
    }

    #[test]
    fn walled_off_goal_fails() {
        let mut grid = empty(4.0, 4.0);
        let wall = Rect::new(Vec2::new(1.9, 0.0), Vec2::new(2.1, 4.0)).corners().to_vec();
        grid.fill_convex(&wall);
        let goal = Goal::Disc { center: Vec2::new(3.0, 2.0), radius: 0.3 };
        let region = Rect::new(Vec2::ZERO, Vec2::new(4.0, 4.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = RrtConfig { max_nodes: 3000, ..RrtConfig::default() };
        let r = rrt_plan(&grid, &goal, region, Pose::new(1.0, 2.0, 0.0), 0.2, 1.0, &cfg, &mut rng);
        assert_eq!(r, Err(RrtError::NoPath(3000)));
    }

    #[test]
    fn same_seed_same_plan() {
        let grid = empty(6.0, 6.0);
        let goal = Goal::Disc { center: Vec2::new(5.0, 1.0), radius: 0.3 };
        let region = Rect::new(Vec2::ZERO, Vec2::new(6.0, 6.0));
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            rrt_plan(&grid, &goal, region, Pose::new(1.0, 5.0, 0.0), 0.2, 1.0, &RrtConfig::default(), &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }
}
