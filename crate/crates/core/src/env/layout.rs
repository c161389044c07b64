//! Static geometry and seeded initial placement for each environment.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geom::{convex_separated, Pose, Rect, Vec2};
use crate::map::{Goal, StaticMap};
use crate::physics::{robot_shapes, Body, ConvexPolygon, Material, PhysicsParams, Role, Shape};

use super::ice::{generate_ice_field, IceError};
use super::spec::{EnvKind, EnvSpec, MazeLayout};

/// Rejection-sampling budget per placed body.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;
/// Minimum gap between placed movable bodies (m).
pub const PLACEMENT_CLEARANCE: f64 = 0.01;

const WALL_THICKNESS: f64 = 0.1;
const BOUNDARY_THICKNESS: f64 = 0.5;
pub const GOAL_RADIUS: f64 = 0.3;
pub const SHIP_LENGTH: f64 = 1.0;
pub const SHIP_BEAM: f64 = 0.3;
/// Goal line and ice band of the ship channel, as offsets from its ends (m).
const SHIP_GOAL_MARGIN: f64 = 1.0;
const ICE_MARGIN: f64 = 1.5;
const AREA_SIDE: f64 = 1.5;
const PILLAR: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlacementError {
    #[error("could not place {what} after {attempts} attempts")]
    Exhausted { what: &'static str, attempts: usize },
    #[error(transparent)]
    Ice(#[from] IceError),
}

/// Fixed geometry of a variant, before any seeded placement.
#[derive(Debug, Clone)]
pub struct Layout {
    pub obstacles: Vec<Vec<Vec2>>,
    pub goal: Goal,
    /// `None` when the start is drawn per seed.
    pub start: Option<Pose>,
    /// Region objects are drawn from.
    pub object_region: Rect,
}

fn bar(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Vec2> {
    Rect::new(Vec2::new(x0, y0), Vec2::new(x1, y1)).corners().to_vec()
}

/// Static layout for `spec`; for randomized layouts `rng` draws the start and goal.
pub fn layout(spec: &EnvSpec, rng: &mut ChaCha8Rng) -> Layout {
    let (w, h) = (spec.arena.x, spec.arena.y);
    let t = WALL_THICKNESS / 2.0;
    let arena = Rect::new(Vec2::ZERO, spec.arena);
    match spec.env {
        EnvKind::Maze => {
            let fx = w / 6.0;
            let fy = h / 6.0;
            let p = |x: f64, y: f64| Vec2::new(x * fx, y * fy);
            let (obstacles, start, goal) = match spec.layout {
                MazeLayout::U => (
                    vec![bar(3.0 * fx - t, 0.0, 3.0 * fx + t, 4.0 * fy)],
                    Pose::new(1.5 * fx, 1.0 * fy, std::f64::consts::FRAC_PI_2),
                    p(4.5, 1.0),
                ),
                MazeLayout::S => (
                    vec![bar(2.0 * fx - t, 0.0, 2.0 * fx + t, 4.0 * fy), bar(4.0 * fx - t, 2.0 * fy, 4.0 * fx + t, h)],
                    Pose::new(1.0 * fx, 1.0 * fy, std::f64::consts::FRAC_PI_2),
                    p(5.0, 5.0),
                ),
                MazeLayout::Z => (
                    vec![bar(0.0, 4.0 * fy - t, 4.5 * fx, 4.0 * fy + t), bar(1.5 * fx, 2.0 * fy - t, w, 2.0 * fy + t)],
                    Pose::new(1.0 * fx, 5.0 * fy, 0.0),
                    p(5.0, 1.0),
                ),
                MazeLayout::Corridor => (
                    vec![bar(0.0, 2.25 * fy - 2.0 * t, w, 2.25 * fy), bar(0.0, 3.75 * fy, w, 3.75 * fy + 2.0 * t)],
                    Pose::new(0.6 * fx, 3.0 * fy, 0.0),
                    p(5.4, 3.0),
                ),
                MazeLayout::Open => {
                    let margin = 0.5;
                    let draw = |rng: &mut ChaCha8Rng| {
                        Vec2::new(rng.random_range(margin..w - margin), rng.random_range(margin..h - margin))
                    };
                    let start = draw(rng);
                    let mut goal = draw(rng);
                    while goal.distance(start) < 2.0 {
                        goal = draw(rng);
                    }
                    let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                    (vec![], Pose::new(start.x, start.y, heading), goal)
                }
            };
            Layout {
                obstacles,
                goal: Goal::Disc { center: goal, radius: GOAL_RADIUS },
                start: Some(start),
                object_region: arena,
            }
        }
        EnvKind::ShipIce => Layout {
            obstacles: vec![],
            goal: Goal::Line { y: h - SHIP_GOAL_MARGIN },
            start: Some(Pose::new(w / 2.0, 0.25 + SHIP_LENGTH / 2.0, std::f64::consts::FRAC_PI_2)),
            object_region: ice_region(spec),
        },
        EnvKind::BoxDelivery | EnvKind::AreaClearing => {
            let obstacles = if spec.static_obstacles {
                vec![
                    Rect::from_center(Vec2::new(0.25 * w, 0.75 * h), PILLAR, PILLAR).corners().to_vec(),
                    Rect::from_center(Vec2::new(0.75 * w, 0.25 * h), PILLAR, PILLAR).corners().to_vec(),
                ]
            } else {
                vec![]
            };
            let (goal, object_region) = if spec.env == EnvKind::BoxDelivery {
                (Goal::Receptacle { rect: Rect::new(Vec2::new(w - AREA_SIDE, h - AREA_SIDE), spec.arena) }, arena)
            } else {
                let rect = Rect::from_center(Vec2::new(w / 2.0, h / 2.0), AREA_SIDE, AREA_SIDE);
                (Goal::Clearance { rect }, rect)
            };
            Layout { obstacles, goal, start: None, object_region }
        }
    }
}

/// Band of the channel that receives ice; concentration is measured against it.
pub fn ice_region(spec: &EnvSpec) -> Rect {
    Rect::new(Vec2::new(0.0, ICE_MARGIN), Vec2::new(spec.arena.x, spec.arena.y - ICE_MARGIN))
}

/// Boundary walls just outside the arena plus the interior obstacles.
pub fn wall_bodies(spec: &EnvSpec, obstacles: &[Vec<Vec2>]) -> Vec<Body> {
    let (w, h) = (spec.arena.x, spec.arena.y);
    let b = BOUNDARY_THICKNESS;
    let mut out: Vec<Body> = [
        Rect::new(Vec2::new(-b, -b), Vec2::new(w + b, 0.0)),
        Rect::new(Vec2::new(-b, h), Vec2::new(w + b, h + b)),
        Rect::new(Vec2::new(-b, 0.0), Vec2::new(0.0, h)),
        Rect::new(Vec2::new(w, 0.0), Vec2::new(w + b, h)),
    ]
    .iter()
    .map(|r| static_polygon(&r.corners()))
    .collect();
    out.extend(obstacles.iter().map(|p| static_polygon(p)));
    out
}

fn static_polygon(points: &[Vec2]) -> Body {
    let (poly, center) = ConvexPolygon::centered(points.to_vec()).expect("layout walls are convex");
    Body::wall(Shape::Polygon { vertices: poly }, Pose::new(center.x, center.y, 0.0))
}

pub fn robot_body(spec: &EnvSpec, pose: Pose) -> Body {
    let shapes = if spec.env == EnvKind::ShipIce {
        let half = SHIP_LENGTH / 2.0;
        let beam = SHIP_BEAM / 2.0;
        let hull = vec![
            Vec2::new(half, 0.0),
            Vec2::new(0.3 * half, beam),
            Vec2::new(-half, beam),
            Vec2::new(-half, -beam),
            Vec2::new(0.3 * half, -beam),
        ];
        let (hull, _) = ConvexPolygon::centered(hull).expect("ship hull is convex");
        vec![Shape::Polygon { vertices: hull }]
    } else {
        robot_shapes(spec.bumper)
    };
    Body::dynamic(Role::Robot, shapes, pose, spec.robot_mass, Material { ground_mu: 0.0, restitution: 0.0 })
}

/// Radius of a disc enclosing the robot outline.
pub fn robot_radius(robot: &Body) -> f64 {
    robot
        .shapes
        .iter()
        .map(|s| match s {
            Shape::Disc { center, radius } => center.length() + radius,
            Shape::Polygon { vertices } => vertices.vertices().iter().map(|v| v.length()).fold(0.0, f64::max),
        })
        .fold(0.0, f64::max)
}

fn world_polygon(body: &Body) -> Vec<Vec<Vec2>> {
    body.world_outlines()
}

fn clear_of(candidate: &[Vec<Vec2>], others: &[Body], gap: f64) -> bool {
    others.iter().all(|o| {
        o.world_outlines()
            .iter()
            .all(|op| candidate.iter().all(|cp| convex_separated(cp, op, gap)))
    })
}

/// Seeded movable bodies plus the robot start, placed without overlap.
pub struct Placement {
    pub robot: Pose,
    pub objects: Vec<Body>,
}

pub fn place(
    spec: &EnvSpec,
    layout: &Layout,
    map: &StaticMap,
    walls: &[Body],
    rng: &mut ChaCha8Rng,
) -> Result<Placement, PlacementError> {
    let params = spec.physics_params();
    let mut objects: Vec<Body> = Vec::new();
    match spec.env {
        EnvKind::ShipIce => {
            let floes = generate_ice_field(layout.object_region, spec.ice_concentration, rng)?;
            for poly in floes {
                let (shape, center) = ConvexPolygon::centered(poly).expect("generated floes are valid");
                let mass = spec.ice_density * shape.area();
                objects.push(Body::dynamic(
                    Role::IceFloe,
                    vec![Shape::Polygon { vertices: shape }],
                    Pose::new(center.x, center.y, 0.0),
                    mass,
                    Material { ground_mu: params.ground_mu, restitution: params.restitution },
                ));
            }
            let start = layout.start.expect("ship start is fixed");
            Ok(Placement { robot: start, objects })
        }
        EnvKind::Maze => {
            let start = layout.start.expect("maze start is fixed");
            let reach = map.field_from(start.position());
            let goal_center = match layout.goal {
                Goal::Disc { center, .. } => center,
                _ => unreachable!("maze goal is a disc"),
            };
            let half = spec.box_size / 2.0;
            for k in 0..spec.obstacles {
                let wheeled = (k as f64) < spec.wheeled_fraction * spec.obstacles as f64;
                let body = sample_box(spec, &params, layout.object_region.shrunk(half), wheeled, rng, |p, body| {
                    p.distance(start.position()) > 0.6
                        && p.distance(goal_center) > GOAL_RADIUS + 0.3
                        && reach.as_ref().is_some_and(|f| f.at(p).is_finite())
                        && map.is_free(p)
                        && clear_of(&world_polygon(body), walls, PLACEMENT_CLEARANCE)
                        && clear_of(&world_polygon(body), &objects, PLACEMENT_CLEARANCE)
                })?;
                objects.push(body);
            }
            Ok(Placement { robot: start, objects })
        }
        EnvKind::BoxDelivery | EnvKind::AreaClearing => {
            let half = spec.box_size / 2.0;
            let margin = if spec.env == EnvKind::BoxDelivery { 0.3 } else { half * std::f64::consts::SQRT_2 + 0.01 };
            for k in 0..spec.boxes {
                let wheeled = (k as f64) < spec.wheeled_fraction * spec.boxes as f64;
                let body = sample_box(spec, &params, layout.object_region.shrunk(margin), wheeled, rng, |p, body| {
                    let outline = world_polygon(body);
                    let outside_goal = match layout.goal {
                        Goal::Receptacle { rect } => outline.iter().flatten().all(|v| !rect.expanded_contains(*v, 0.05)),
                        Goal::Clearance { rect } => outline.iter().flatten().all(|v| rect.contains_strict(*v)),
                        _ => true,
                    };
                    outside_goal
                        && map.is_free(p)
                        && clear_of(&outline, walls, PLACEMENT_CLEARANCE)
                        && clear_of(&outline, &objects, 0.05)
                })?;
                objects.push(body);
            }
            let probe = robot_body(spec, Pose::default());
            let r = robot_radius(&probe);
            let arena = Rect::new(Vec2::ZERO, spec.arena).shrunk(r + 0.05);
            for _ in 0..MAX_PLACEMENT_ATTEMPTS {
                let p = Vec2::new(rng.random_range(arena.min.x..arena.max.x), rng.random_range(arena.min.y..arena.max.y));
                let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let pose = Pose::new(p.x, p.y, theta);
                let robot = robot_body(spec, pose);
                let in_area = match layout.goal {
                    Goal::Receptacle { rect } | Goal::Clearance { rect } => rect.expanded_contains(p, r),
                    _ => false,
                };
                if !in_area
                    && map.is_free(p)
                    && clear_of(&world_polygon(&robot), walls, 0.05)
                    && clear_of(&world_polygon(&robot), &objects, 0.05)
                {
                    return Ok(Placement { robot: pose, objects });
                }
            }
            Err(PlacementError::Exhausted { what: "robot", attempts: MAX_PLACEMENT_ATTEMPTS })
        }
    }
}

fn sample_box(
    spec: &EnvSpec,
    params: &PhysicsParams,
    region: Rect,
    wheeled: bool,
    rng: &mut ChaCha8Rng,
    accept: impl Fn(Vec2, &Body) -> bool,
) -> Result<Body, PlacementError> {
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let p = Vec2::new(rng.random_range(region.min.x..region.max.x), rng.random_range(region.min.y..region.max.y));
        let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let body = Body::pushable_box(spec.box_size, spec.box_size, Pose::new(p.x, p.y, theta), spec.box_mass, wheeled, params);
        if accept(p, &body) {
            return Ok(body);
        }
    }
    Err(PlacementError::Exhausted { what: "box", attempts: MAX_PLACEMENT_ATTEMPTS })
}
