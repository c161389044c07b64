use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::physics::{Bumper, DragParams, PhysicsParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Maze,
    ShipIce,
    BoxDelivery,
    AreaClearing,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [EnvKind::Maze, EnvKind::ShipIce, EnvKind::BoxDelivery, EnvKind::AreaClearing];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvKind::Maze => "maze",
            EnvKind::ShipIce => "ship_ice",
            EnvKind::BoxDelivery => "box_delivery",
            EnvKind::AreaClearing => "area_clearing",
        }
    }

    pub fn is_navigation(self) -> bool {
        matches!(self, EnvKind::Maze | EnvKind::ShipIce)
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvKind {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "maze" => Ok(EnvKind::Maze),
            "ship_ice" | "shipice" | "ship" => Ok(EnvKind::ShipIce),
            "box_delivery" | "boxdelivery" | "delivery" => Ok(EnvKind::BoxDelivery),
            "area_clearing" | "areaclearing" | "clearing" => Ok(EnvKind::AreaClearing),
            _ => Err(SpecError::invalid("env", format!("unknown environment `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionMode {
    /// Constant forward speed, commanded turn rate.
    AngularVelocity,
    /// Turn in place to a heading, then drive a fixed distance.
    HeadingStep,
    /// Left and right wheel speeds.
    WheelVelocities,
}

impl ActionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionMode::AngularVelocity => "angular_velocity",
            ActionMode::HeadingStep => "heading_step",
            ActionMode::WheelVelocities => "wheel_velocities",
        }
    }
}

impl FromStr for ActionMode {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "angular_velocity" | "angular" | "omega" => Ok(ActionMode::AngularVelocity),
            "heading_step" | "heading" => Ok(ActionMode::HeadingStep),
            "wheel_velocities" | "wheels" | "wheel" => Ok(ActionMode::WheelVelocities),
            _ => Err(SpecError::invalid("action_mode", format!("unknown action mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MazeLayout {
    U,
    S,
    Z,
    Corridor,
    /// No interior walls; start and goal drawn per seed.
    Open,
}

impl MazeLayout {
    pub fn as_str(self) -> &'static str {
        match self {
            MazeLayout::U => "u",
            MazeLayout::S => "s",
            MazeLayout::Z => "z",
            MazeLayout::Corridor => "corridor",
            MazeLayout::Open => "open",
        }
    }
}

impl FromStr for MazeLayout {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "u" => Ok(MazeLayout::U),
            "s" => Ok(MazeLayout::S),
            "z" => Ok(MazeLayout::Z),
            "corridor" => Ok(MazeLayout::Corridor),
            "open" | "empty" => Ok(MazeLayout::Open),
            _ => Err(SpecError::invalid("layout", format!("unknown maze layout `{s}`"))),
        }
    }
}

/// Reward coefficients. Each applies only to the environments that use it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Per meter of goal-distance decrease (Maze).
    pub c_dist: f64,
    /// Per new movable contact (Maze) or per joule of floe energy gain (ShipIce).
    pub c_coll: f64,
    /// Scale of the heading alignment term (ShipIce).
    pub c_head: f64,
    /// Per meter of object goal-distance decrease (manipulation).
    pub c_box: f64,
    /// Per completed object (manipulation).
    pub r_done: f64,
    /// On reaching the goal (navigation).
    pub r_terminal: f64,
    /// Per step with robot–wall contact (manipulation).
    pub c_stat: f64,
}

impl RewardConfig {
    pub fn for_kind(kind: EnvKind) -> Self {
        Self {
            c_dist: 1.0,
            c_coll: if kind == EnvKind::ShipIce { 1.0 } else { 0.1 },
            c_head: 0.05,
            c_box: 1.0,
            r_done: 5.0,
            r_terminal: 10.0,
            c_stat: 1.0,
        }
    }
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self::for_kind(EnvKind::Maze)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObsConfig {
    /// Window side in cells; must be even.
    pub size: usize,
    /// Meters per cell.
    pub resolution: f64,
    /// Align the window with the robot heading. Ignored for ShipIce.
    pub rotate: bool,
}

impl Default for ObsConfig {
    fn default() -> Self {
        Self { size: 128, resolution: 0.04, rotate: true }
    }
}

/// Full description of an environment variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvSpec {
    pub env: EnvKind,
    /// Arena width and height (m).
    pub arena: Vec2,
    pub layout: MazeLayout,
    /// Movable obstacles in Maze.
    pub obstacles: usize,
    pub ice_concentration: f64,
    /// Objects in the manipulation tasks.
    pub boxes: usize,
    pub static_obstacles: bool,
    pub wheeled_fraction: f64,
    pub bumper: Bumper,
    pub action_mode: ActionMode,
    /// Robot forward speed (m/s).
    pub forward_speed: f64,
    /// Turn-rate bound (rad/s).
    pub max_turn_rate: f64,
    /// Wheel-speed bound (m/s).
    pub max_wheel_speed: f64,
    /// Heading-step travel distance (m).
    pub step_distance: f64,
    /// Physics sub-steps per angular or wheel action.
    pub action_repeat: usize,
    pub max_steps: u64,
    pub robot_mass: f64,
    /// Side of a square movable box (m).
    pub box_size: f64,
    pub box_mass: f64,
    /// Floe areal density (kg/m²).
    pub ice_density: f64,
    /// Enable hydrodynamic drag on floes and ship (ShipIce).
    pub drag: bool,
    pub drag_params: DragParams,
    /// Resolution of the static map and metric grids (m).
    pub map_resolution: f64,
    pub reward: RewardConfig,
    pub obs: ObsConfig,
    pub physics: PhysicsParams,
}

impl EnvSpec {
    pub fn new(env: EnvKind) -> Self {
        let base = EnvSpec {
            env,
            arena: Vec2::new(6.0, 6.0),
            layout: MazeLayout::U,
            obstacles: 3,
            ice_concentration: 0.2,
            boxes: 5,
            static_obstacles: false,
            wheeled_fraction: 0.0,
            bumper: Bumper::Pusher,
            action_mode: ActionMode::AngularVelocity,
            forward_speed: 0.2,
            max_turn_rate: 1.0,
            max_wheel_speed: 0.3,
            step_distance: 0.15,
            action_repeat: 6,
            max_steps: 1500,
            robot_mass: 1.0,
            box_size: 0.3,
            box_mass: 0.3,
            ice_density: 10.0,
            drag: false,
            drag_params: DragParams::default(),
            map_resolution: 0.02,
            reward: RewardConfig::for_kind(env),
            obs: ObsConfig::default(),
            physics: PhysicsParams::default(),
        };
        match env {
            EnvKind::Maze => base,
            EnvKind::ShipIce => EnvSpec {
                arena: Vec2::new(6.0, 12.0),
                forward_speed: 0.5,
                max_steps: 1000,
                robot_mass: 6.0,
                obs: ObsConfig { rotate: false, ..ObsConfig::default() },
                physics: PhysicsParams { ground_mu: 0.1, ..PhysicsParams::default() },
                ..base
            },
            EnvKind::BoxDelivery | EnvKind::AreaClearing => EnvSpec {
                arena: Vec2::new(5.0, 5.0),
                action_mode: ActionMode::HeadingStep,
                forward_speed: 0.25,
                max_steps: 600,
                box_size: 0.25,
                box_mass: 0.2,
                ..base
            },
        }
    }

    /// Checks every field and names the first offender.
    pub fn validate(&self) -> Result<(), SpecError> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SpecError::invalid(name, format!("must be positive, got {v}")))
            }
        };
        positive("arena.x", self.arena.x)?;
        positive("arena.y", self.arena.y)?;
        positive("forward_speed", self.forward_speed)?;
        positive("max_turn_rate", self.max_turn_rate)?;
        positive("max_wheel_speed", self.max_wheel_speed)?;
        positive("step_distance", self.step_distance)?;
        positive("robot_mass", self.robot_mass)?;
        positive("box_size", self.box_size)?;
        positive("box_mass", self.box_mass)?;
        positive("ice_density", self.ice_density)?;
        positive("map_resolution", self.map_resolution)?;
        positive("obs.resolution", self.obs.resolution)?;
        if !(0.0..=0.5).contains(&self.ice_concentration) {
            return Err(SpecError::invalid("ice_concentration", format!("must lie in [0, 0.5], got {}", self.ice_concentration)));
        }
        if !(0.0..=1.0).contains(&self.wheeled_fraction) {
            return Err(SpecError::invalid("wheeled_fraction", "must lie in [0, 1]"));
        }
        if !self.env.is_navigation() && self.boxes == 0 {
            return Err(SpecError::invalid("boxes", "manipulation tasks need at least one box"));
        }
        if self.obs.size == 0 || !self.obs.size.is_multiple_of(2) {
            return Err(SpecError::invalid("obs.size", format!("window must be even-sized, got {}", self.obs.size)));
        }
        if self.action_repeat == 0 {
            return Err(SpecError::invalid("action_repeat", "must be at least 1"));
        }
        if self.max_steps == 0 {
            return Err(SpecError::invalid("max_steps", "must be at least 1"));
        }
        let mode_ok = match self.env {
            EnvKind::Maze => self.action_mode != ActionMode::HeadingStep,
            EnvKind::ShipIce => self.action_mode == ActionMode::AngularVelocity,
            EnvKind::BoxDelivery | EnvKind::AreaClearing => self.action_mode != ActionMode::AngularVelocity,
        };
        if !mode_ok {
            return Err(SpecError::invalid(
                "action_mode",
                format!("{} is not available in {}", self.action_mode.as_str(), self.env),
            ));
        }
        self.physics.validate().map_err(|e| SpecError::invalid("physics", e.to_string()))?;
        Ok(())
    }

    /// Applies a `key=value,key=value` variant string.
    pub fn apply_variant(&mut self, variant: &str) -> Result<(), SpecError> {
        for part in variant.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| SpecError::invalid("variant", format!("expected key=value, got `{part}`")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SpecError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, SpecError> {
            v.parse().map_err(|_| SpecError::invalid(key.to_string(), format!("cannot parse `{v}`")))
        }
        fn flag(key: &str, v: &str) -> Result<bool, SpecError> {
            match v {
                "1" | "true" | "on" | "yes" => Ok(true),
                "0" | "false" | "off" | "no" => Ok(false),
                _ => Err(SpecError::invalid(key.to_string(), format!("expected a boolean, got `{v}`"))),
            }
        }
        match key {
            "layout" => self.layout = value.parse()?,
            "obs" | "obstacles" => self.obstacles = num(key, value)?,
            "ice" | "concentration" | "ice_concentration" => self.ice_concentration = num(key, value)?,
            "boxes" => self.boxes = num(key, value)?,
            "static" | "static_obstacles" => self.static_obstacles = flag(key, value)?,
            "wheeled" | "wheeled_fraction" => self.wheeled_fraction = num(key, value)?,
            "bumper" => {
                self.bumper =
                    Bumper::parse(value).ok_or_else(|| SpecError::invalid("bumper", format!("unknown bumper `{value}`")))?
            }
            "action_mode" => self.action_mode = value.parse()?,
            "drag" => self.drag = flag(key, value)?,
            "max_steps" => self.max_steps = num(key, value)?,
            "forward_speed" => self.forward_speed = num(key, value)?,
            "max_turn_rate" => self.max_turn_rate = num(key, value)?,
            "step_distance" => self.step_distance = num(key, value)?,
            "action_repeat" => self.action_repeat = num(key, value)?,
            "reward.c_dist" => self.reward.c_dist = num(key, value)?,
            "reward.c_coll" => self.reward.c_coll = num(key, value)?,
            "reward.c_head" => self.reward.c_head = num(key, value)?,
            "reward.c_box" => self.reward.c_box = num(key, value)?,
            "reward.r_done" => self.reward.r_done = num(key, value)?,
            "reward.r_terminal" => self.reward.r_terminal = num(key, value)?,
            "reward.c_stat" => self.reward.c_stat = num(key, value)?,
            "obs.size" => self.obs.size = num(key, value)?,
            "obs.resolution" => self.obs.resolution = num(key, value)?,
            "obs.rotate" => self.obs.rotate = flag(key, value)?,
            _ => return Err(SpecError::invalid(key.to_string(), "unknown key")),
        }
        Ok(())
    }

    /// Canonical variant label used in reports.
    pub fn variant_label(&self) -> String {
        let mut parts = Vec::new();
        match self.env {
            EnvKind::Maze => {
                parts.push(format!("layout={}", self.layout.as_str()));
                parts.push(format!("obs={}", self.obstacles));
            }
            EnvKind::ShipIce => parts.push(format!("ice={}", self.ice_concentration)),
            EnvKind::BoxDelivery | EnvKind::AreaClearing => {
                parts.push(format!("boxes={}", self.boxes));
                parts.push(format!("static={}", self.static_obstacles));
            }
        }
        if self.wheeled_fraction > 0.0 {
            parts.push(format!("wheeled={}", self.wheeled_fraction));
        }
        if self.bumper != Bumper::Pusher {
            parts.push(format!("bumper={}", self.bumper.as_str()));
        }
        parts.join(",")
    }

    pub(crate) fn physics_params(&self) -> PhysicsParams {
        let mut p = self.physics;
        if self.drag {
            p.drag = Some(self.drag_params);
        }
        p
    }
}

impl Default for EnvSpec {
    fn default() -> Self {
        EnvSpec::new(EnvKind::Maze)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid spec field `{field}`: {reason}")]
pub struct SpecError {
    pub field: String,
    pub reason: String,
}

impl SpecError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { field: field.into(), reason: reason.into() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for kind in EnvKind::ALL {
            EnvSpec::new(kind).validate().unwrap();
        }
    }

    #[test]
    fn variant_round_trip() {
        let mut s = EnvSpec::new(EnvKind::Maze);
        s.apply_variant("layout=corridor, obs=10").unwrap();
        assert_eq!(s.layout, MazeLayout::Corridor);
        assert_eq!(s.obstacles, 10);
        assert_eq!(s.variant_label(), "layout=corridor,obs=10");
    }

    #[test]
    fn invalid_fields_are_named() {
        let mut s = EnvSpec::new(EnvKind::ShipIce);
        s.ice_concentration = 0.7;
        assert_eq!(s.validate().unwrap_err().field, "ice_concentration");
        let mut s = EnvSpec::new(EnvKind::BoxDelivery);
        s.boxes = 0;
        assert_eq!(s.validate().unwrap_err().field, "boxes");
        let mut s = EnvSpec::new(EnvKind::ShipIce);
        s.action_mode = ActionMode::HeadingStep;
        assert_eq!(s.validate().unwrap_err().field, "action_mode");
        assert!(EnvSpec::new(EnvKind::Maze).apply_variant("bogus").is_err());
    }
}
