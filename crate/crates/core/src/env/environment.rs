use std::collections::BTreeSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{wrap_angle, Pose, Vec2};
use crate::map::{MapError, StaticMap};
use crate::metrics::{episode_metrics, EpisodeMetrics, EpisodeTrace, ObjectRecord, PathAccumulator, JITTER_THRESHOLD};
use crate::observation::{render_observation, Observation};
use crate::physics::{
    integrate_unicycle, wheels_to_unicycle, BodyId, PhysicsError, Role, World, DEFAULT_WHEEL_BASE,
};

use super::layout::{layout, place, robot_body, wall_bodies, Layout, PlacementError};
use super::spec::{ActionMode, EnvKind, EnvSpec, MazeLayout, SpecError};

/// Body id of the robot in every environment.
pub const ROBOT: BodyId = 0;

/// One control command. The variant must match the environment's action mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    /// Turn rate (rad/s) at constant forward speed.
    Angular { omega: f64 },
    /// Turn in place to `heading` (rad), then advance the step distance.
    Heading { heading: f64 },
    /// Left and right wheel speeds (m/s).
    Wheels { left: f64, right: f64 },
}

impl Action {
    pub fn mode(&self) -> ActionMode {
        match self {
            Action::Angular { .. } => ActionMode::AngularVelocity,
            Action::Heading { .. } => ActionMode::HeadingStep,
            Action::Wheels { .. } => ActionMode::WheelVelocities,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("action mode {got} does not match environment mode {expected}")]
    WrongActionMode { expected: &'static str, got: &'static str },
    #[error("action out of range: {0}")]
    ActionOutOfRange(String),
    #[error("no active episode")]
    NotActive,
}

/// Reward broken down by term; `total` is their sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardTerms {
    pub distance: f64,
    pub collision: f64,
    pub heading: f64,
    pub done: f64,
    pub static_contact: f64,
    pub terminal: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.distance + self.collision + self.heading + self.done + self.static_contact + self.terminal
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Body pairs touching at any sub-step of this step.
    pub contacts: Vec<(BodyId, BodyId)>,
    /// Robot contacts with movable bodies that began during this step.
    pub new_contacts: Vec<(BodyId, BodyId)>,
    /// Net centroid displacement of each object over the step, by object order.
    pub displacement: Vec<f64>,
    /// Objects that completed their sub-task for the first time.
    pub completed: Vec<BodyId>,
    pub substeps: usize,
    pub terms: RewardTerms,
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub observation: Option<Observation>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Active,
    Done,
}

pub struct Environment {
    spec: EnvSpec,
    layout: Layout,
    map: Arc<StaticMap>,
    world: World,
    objects: Vec<BodyId>,
    phase: Phase,
    seed: u64,
    steps: u64,
    terminated: bool,
    truncated: bool,
    robot_start: Vec2,
    robot_length: f64,
    object_paths: Vec<PathAccumulator>,
    initial_centroids: Vec<Vec2>,
    goal_distances: Vec<f64>,
    robot_goal_distance: f64,
    ever_done: Vec<bool>,
    touching: BTreeSet<(BodyId, BodyId)>,
    total_reward: f64,
}

/// Builds an environment for `spec`; no episode is active until `reset`.
pub fn make_env(spec: EnvSpec) -> Result<Environment, EnvError> {
    spec.validate()?;
    spec.physics_params().validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let layout = layout(&spec, &mut rng);
    let map = StaticMap::new(spec.arena, layout.obstacles.clone(), layout.goal, spec.map_resolution)?;
    Ok(Environment {
        world: World::new(spec.physics_params()),
        layout,
        map: Arc::new(map),
        spec,
        objects: Vec::new(),
        phase: Phase::Idle,
        seed: 0,
        steps: 0,
        terminated: false,
        truncated: false,
        robot_start: Vec2::ZERO,
        robot_length: 0.0,
        object_paths: Vec::new(),
        initial_centroids: Vec::new(),
        goal_distances: Vec::new(),
        robot_goal_distance: 0.0,
        ever_done: Vec::new(),
        touching: BTreeSet::new(),
        total_reward: 0.0,
    })
}

impl Environment {
    /// Starts a new episode from `seed` and returns the first observation.
    pub fn reset(&mut self, seed: u64) -> Result<Observation, EnvError> {
        self.reset_state(seed)?;
        Ok(self.observe())
    }

    /// `reset` without rendering.
    pub fn reset_state(&mut self, seed: u64) -> Result<(), EnvError> {
        self.phase = Phase::Idle;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if self.spec.env == EnvKind::Maze && self.spec.layout == MazeLayout::Open {
            self.layout = layout(&self.spec, &mut rng);
            self.map = Arc::new(StaticMap::new(
                self.spec.arena,
                self.layout.obstacles.clone(),
                self.layout.goal,
                self.spec.map_resolution,
            )?);
        }
        let walls = wall_bodies(&self.spec, &self.layout.obstacles);
        let placement = place(&self.spec, &self.layout, &self.map, &walls, &mut rng)?;

        let mut world = World::new(self.spec.physics_params());
        world.add_body(robot_body(&self.spec, placement.robot));
        for w in walls {
            world.add_body(w);
        }
        self.objects = placement.objects.into_iter().map(|b| world.add_body(b)).collect();
        self.world = world;

        self.seed = seed;
        self.begin_episode(placement.robot.position());
        Ok(())
    }

    /// Resets from `seed`, then moves the robot and keeps only the first
    /// `objects.len()` objects at the given poses. For scripted scenarios;
    /// overlap is the caller's responsibility.
    pub fn reset_with_poses(&mut self, seed: u64, robot: Option<Pose>, objects: Option<&[Pose]>) -> Result<(), EnvError> {
        self.reset_state(seed)?;
        if let Some(pose) = robot {
            self.world.body_mut(ROBOT).pose = pose;
        }
        if let Some(poses) = objects {
            if poses.len() > self.objects.len() {
                return Err(SpecError::invalid("objects", format!("{} poses for {} objects", poses.len(), self.objects.len())).into());
            }
            let keep = poses.len();
            let first = self.objects.first().copied().unwrap_or(self.world.bodies.len());
            self.world.bodies.truncate(first + keep);
            self.objects.truncate(keep);
            for (&id, &pose) in self.objects.iter().zip(poses) {
                self.world.body_mut(id).pose = pose;
            }
        }
        let start = self.world.body(ROBOT).pose.position();
        self.begin_episode(start);
        Ok(())
    }

    fn begin_episode(&mut self, robot_start: Vec2) {
        self.steps = 0;
        self.terminated = false;
        self.truncated = false;
        self.robot_start = robot_start;
        self.robot_length = 0.0;
        self.initial_centroids = self.objects.iter().map(|&id| self.world.body(id).pose.position()).collect();
        self.object_paths = self.initial_centroids.iter().map(|&c| PathAccumulator::new(c)).collect();
        self.goal_distances = self.initial_centroids.iter().map(|&c| self.map.goal_distance(c)).collect();
        self.robot_goal_distance = self.map.goal_distance(self.robot_start);
        self.ever_done = self.objects.iter().map(|&id| self.object_done(id)).collect();
        let pairs: Vec<(BodyId, BodyId)> = self.world.contacts().iter().map(|c| c.bodies).collect();
        self.touching = self.robot_movable_contacts(&pairs);
        self.total_reward = 0.0;
        self.phase = Phase::Active;
    }

    pub fn observe(&self) -> Observation {
        render_observation(&self.world, ROBOT, &self.map, self.spec.env, &self.spec.obs)
    }

    pub fn step(&mut self, action: Action) -> Result<Transition, EnvError> {
        self.step_with(action, true)
    }

    /// Advances one control step; the observation is rendered only if `render`.
    pub fn step_with(&mut self, action: Action, render: bool) -> Result<Transition, EnvError> {
        if self.phase != Phase::Active {
            return Err(EnvError::NotActive);
        }
        let commands = self.expand(action)?;
        let mut info = StepInfo { displacement: vec![0.0; self.objects.len()], ..StepInfo::default() };
        let start_centroids: Vec<Vec2> = self.objects.iter().map(|&id| self.world.body(id).pose.position()).collect();
        let mut all_pairs: BTreeSet<(BodyId, BodyId)> = BTreeSet::new();
        let mut onsets: BTreeSet<(BodyId, BodyId)> = BTreeSet::new();
        let mut terms = RewardTerms::default();
        let mut static_hit = false;
        let mut done = false;

        for (v, omega) in commands {
            let ke_before: Vec<f64> = if self.spec.env == EnvKind::ShipIce {
                self.objects.iter().map(|&id| self.world.body(id).kinetic_energy()).collect()
            } else {
                Vec::new()
            };
            let before = self.world.body(ROBOT).pose;
            let dt = self.world.params.dt;
            let target = integrate_unicycle(before, v, omega, dt);
            {
                let robot = self.world.body_mut(ROBOT);
                robot.velocity = (target.position() - before.position()) * (1.0 / dt);
                robot.angular_velocity = omega;
            }
            let events = match self.world.advance() {
                Ok(e) => e,
                Err(e) => {
                    self.phase = Phase::Done;
                    return Err(e.into());
                }
            };
            info.substeps += 1;
            let pairs: Vec<(BodyId, BodyId)> = events.contacts.iter().map(|c| c.bodies).collect();
            all_pairs.extend(pairs.iter().copied());

            let robot_pos = self.world.body(ROBOT).pose.position();
            self.robot_length += robot_pos.distance(before.position());
            for (k, &id) in self.objects.iter().enumerate() {
                self.object_paths[k].update(self.world.body(id).pose.position(), JITTER_THRESHOLD);
            }

            let now = self.robot_movable_contacts(&pairs);
            onsets.extend(now.difference(&self.touching).copied());
            self.touching = now;

            for &(a, b) in &pairs {
                if a == ROBOT || b == ROBOT {
                    let other = if a == ROBOT { b } else { a };
                    if self.world.body(other).role == Role::Wall {
                        static_hit = true;
                    }
                }
            }

            if self.spec.env == EnvKind::ShipIce {
                for (k, &id) in self.objects.iter().enumerate() {
                    let in_contact = pairs.iter().any(|&(a, b)| (a == ROBOT && b == id) || (b == ROBOT && a == id));
                    if in_contact {
                        let gain = self.world.body(id).kinetic_energy() - ke_before[k];
                        if gain > 0.0 {
                            terms.collision -= self.spec.reward.c_coll * gain;
                        }
                    }
                }
            }

            if self.task_complete() {
                done = true;
                break;
            }
        }

        let r = self.spec.reward;
        match self.spec.env {
            EnvKind::Maze => {
                let d = self.map.goal_distance(self.world.body(ROBOT).pose.position());
                if d.is_finite() && self.robot_goal_distance.is_finite() {
                    terms.distance = r.c_dist * (self.robot_goal_distance - d);
                }
                self.robot_goal_distance = d;
                terms.collision = -r.c_coll * onsets.len() as f64;
            }
            EnvKind::ShipIce => {
                let vel = self.world.body(ROBOT).velocity;
                let speed = vel.length();
                let cos = if speed > 1e-12 { vel.y / speed } else { self.world.body(ROBOT).pose.theta.sin() };
                terms.heading = r.c_head * cos;
            }
            EnvKind::BoxDelivery | EnvKind::AreaClearing => {
                for k in 0..self.objects.len() {
                    let id = self.objects[k];
                    let d = self.map.goal_distance(self.world.body(id).pose.position());
                    if d.is_finite() && self.goal_distances[k].is_finite() {
                        terms.distance += r.c_box * (self.goal_distances[k] - d);
                    }
                    self.goal_distances[k] = d;
                    if !self.ever_done[k] && self.object_done(id) {
                        self.ever_done[k] = true;
                        info.completed.push(id);
                        terms.done += r.r_done;
                    }
                }
                if static_hit {
                    terms.static_contact = -r.c_stat;
                }
            }
        }
        if done && self.spec.env.is_navigation() {
            terms.terminal = r.r_terminal;
        }

        for (k, &id) in self.objects.iter().enumerate() {
            info.displacement[k] = self.world.body(id).pose.position().distance(start_centroids[k]);
        }
        info.contacts = all_pairs.into_iter().collect();
        info.new_contacts = onsets.into_iter().collect();
        info.terms = terms;

        self.steps += 1;
        self.terminated = done;
        self.truncated = !done && self.steps >= self.spec.max_steps;
        if self.terminated || self.truncated {
            self.phase = Phase::Done;
        }
        let reward = terms.total();
        self.total_reward += reward;
        Ok(Transition {
            observation: render.then(|| self.observe()),
            reward,
            terminated: self.terminated,
            truncated: self.truncated,
            info,
        })
    }

    /// Ends the active episode early; it counts as truncated.
    pub fn abort(&mut self) {
        if self.phase == Phase::Active {
            self.truncated = true;
            self.phase = Phase::Done;
        }
    }

    /// Sub-step commands `(v, ω)` for one action.
    fn expand(&mut self, action: Action) -> Result<Vec<(f64, f64)>, EnvError> {
        let s = &self.spec;
        if action.mode() != s.action_mode {
            return Err(EnvError::WrongActionMode { expected: s.action_mode.as_str(), got: action.mode().as_str() });
        }
        let tol = 1e-9;
        match action {
            Action::Angular { omega } => {
                if !omega.is_finite() || omega.abs() > s.max_turn_rate + tol {
                    return Err(EnvError::ActionOutOfRange(format!("omega {omega} exceeds {}", s.max_turn_rate)));
                }
                Ok(vec![(s.forward_speed, omega); s.action_repeat])
            }
            Action::Wheels { left, right } => {
                for w in [left, right] {
                    if !w.is_finite() || w.abs() > s.max_wheel_speed + tol {
                        return Err(EnvError::ActionOutOfRange(format!("wheel speed {w} exceeds {}", s.max_wheel_speed)));
                    }
                }
                let (v, omega) = wheels_to_unicycle(left, right, DEFAULT_WHEEL_BASE);
                Ok(vec![(v, omega); s.action_repeat])
            }
            Action::Heading { heading } => {
                if !heading.is_finite() || heading.abs() > std::f64::consts::PI + tol {
                    return Err(EnvError::ActionOutOfRange(format!("heading {heading} outside [-pi, pi]")));
                }
                let dt = self.world.params.dt;
                let (v0, dist) = (s.forward_speed, s.step_distance);
                let robot = self.world.body_mut(ROBOT);
                robot.pose.theta = wrap_angle(heading);
                let mut out = Vec::new();
                let mut remaining = dist;
                while remaining > 1e-12 {
                    let v = v0.min(remaining / dt);
                    out.push((v, 0.0));
                    remaining -= v * dt;
                }
                Ok(out)
            }
        }
    }

    fn robot_movable_contacts(&self, pairs: &[(BodyId, BodyId)]) -> BTreeSet<(BodyId, BodyId)> {
        pairs
            .iter()
            .copied()
            .filter(|&(a, b)| {
                (a == ROBOT && self.world.body(b).role.is_movable()) || (b == ROBOT && self.world.body(a).role.is_movable())
            })
            .collect()
    }

    /// Sub-task predicate of one object at its current pose.
    pub fn object_done(&self, id: BodyId) -> bool {
        if self.spec.env.is_navigation() {
            return false;
        }
        let b = self.world.body(id);
        let vertices: Vec<Vec2> = b.world_outlines().into_iter().flatten().collect();
        self.map.goal.object_done(b.pose.position(), &vertices)
    }

    fn task_complete(&self) -> bool {
        match self.spec.env {
            EnvKind::Maze | EnvKind::ShipIce => self.map.goal.contains(self.world.body(ROBOT).pose.position()),
            EnvKind::BoxDelivery | EnvKind::AreaClearing => self.objects.iter().all(|&id| self.object_done(id)),
        }
    }

    /// Trace of the episode so far, with sub-task flags at the current state.
    pub fn trace(&self) -> EpisodeTrace {
        let objects = self
            .objects
            .iter()
            .enumerate()
            .map(|(k, &id)| ObjectRecord {
                id,
                mass: self.world.body(id).mass,
                path_length: self.object_paths[k].length,
                initial_centroid: self.initial_centroids[k],
                success: self.object_done(id),
            })
            .collect::<Vec<_>>();
        let success = if self.spec.env.is_navigation() {
            self.terminated
        } else {
            objects.iter().all(|o| o.success)
        };
        EpisodeTrace {
            robot_mass: self.world.body(ROBOT).mass,
            robot_path_length: self.robot_length,
            robot_start: self.robot_start,
            objects,
            success,
        }
    }

    pub fn metrics(&self) -> EpisodeMetrics {
        episode_metrics(&self.trace(), &self.map)
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn map(&self) -> &StaticMap {
        &self.map
    }

    pub fn shared_map(&self) -> Arc<StaticMap> {
        Arc::clone(&self.map)
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn robot_pose(&self) -> Pose {
        self.world.body(ROBOT).pose
    }

    pub fn objects(&self) -> &[BodyId] {
        &self.objects
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn is_active(&self) -> bool {
        self.phase == Phase::Active
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn total_reward(&self) -> f64 {
        self.total_reward
    }

    pub fn robot_path_length(&self) -> f64 {
        self.robot_length
    }

    /// Current goal distance of each object, by object order.
    pub fn object_goal_distances(&self) -> &[f64] {
        &self.goal_distances
    }

    pub fn robot_goal_distance(&self) -> f64 {
        self.map.goal_distance(self.world.body(ROBOT).pose.position())
    }
}
