//! Efficiency, effort and success scores computed from episode traces.

mod mst;
mod report;

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::grid::DistanceField;
use crate::map::StaticMap;
use crate::physics::BodyId;

pub use mst::{kruskal, preorder, Edge};
pub use report::{aggregate_rows, write_csv, AggregateRow, ReportRow, CSV_HEADER};

/// Per-step centroid motion below this is treated as solver jitter (m).
pub const JITTER_THRESHOLD: f64 = 1e-3;

/// Largest overshoot of `I_manip` above 1 that is silently clamped.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: BodyId,
    pub mass: f64,
    pub path_length: f64,
    pub initial_centroid: Vec2,
    pub success: bool,
}

/// Everything the scores need from one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub robot_mass: f64,
    pub robot_path_length: f64,
    pub robot_start: Vec2,
    pub objects: Vec<ObjectRecord>,
    /// Navigation success; for manipulation, whether every object is done.
    pub success: bool,
}

impl EpisodeTrace {
    pub fn completed(&self) -> usize {
        self.objects.iter().filter(|o| o.success).count()
    }

    /// Σ mᵢ lᵢ over movable objects.
    pub fn object_work(&self) -> f64 {
        self.objects.iter().map(|o| o.mass * o.path_length).sum()
    }
}

/// Accumulates path length while ignoring sub-threshold jitter: motion is
/// measured from the last counted position and only booked once it
/// exceeds the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathAccumulator {
    anchor: Vec2,
    pub length: f64,
}

impl PathAccumulator {
    pub fn new(start: Vec2) -> Self {
        Self { anchor: start, length: 0.0 }
    }

    pub fn update(&mut self, p: Vec2, threshold: f64) {
        let d = p.distance(self.anchor);
        if d >= threshold {
            self.length += d;
            self.anchor = p;
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("start point lies in a static obstacle")]
    StartInObstacle,
    #[error("vertex {0} of the spanning graph is unreachable")]
    Unreachable(usize),
    #[error("corrupt trace: {0}")]
    CorruptTrace(&'static str),
}

/// Per-episode scores; fields not applicable to the task class are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub e_nav: Option<f64>,
    pub i_nav: Option<f64>,
    pub s_manip: Option<f64>,
    pub e_manip: Option<f64>,
    pub i_manip: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Static-only shortest path length from `start` to the goal set.
pub fn shortest_path_length(map: &StaticMap, start: Vec2) -> Result<f64, MetricsError> {
    if !map.grid.is_free_at(start) {
        return Err(MetricsError::StartInObstacle);
    }
    Ok(map.goal_distance(start))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavScores {
    pub e_nav: f64,
    pub i_nav: f64,
    pub optimal_length: f64,
}

/// Navigation efficiency and effort.
pub fn nav_scores(trace: &EpisodeTrace, map: &StaticMap) -> Result<NavScores, MetricsError> {
    let l0 = trace.robot_path_length;
    let optimal_length = shortest_path_length(map, trace.robot_start)?;
    let e_nav = match (trace.success, l0 > 0.0) {
        (false, _) => 0.0,
        (true, true) => optimal_length / l0,
        // already at the goal
        (true, false) => 1.0,
    };
    let robot = trace.robot_mass * l0;
    let denom = robot + trace.object_work();
    let i_nav = if denom > 0.0 { robot / denom } else { 1.0 };
    Ok(NavScores { e_nav, i_nav, optimal_length })
}

/// Spanning graph used for the manipulation lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct MstBound {
    /// Robot start, then each completed object, then each object's goal point.
    pub vertices: Vec<Vec2>,
    pub edges: Vec<Edge>,
    pub tree: Vec<Edge>,
    pub weight: f64,
}

/// Minimum spanning tree over the robot start, completed objects' initial
/// centroids and their nearest goal points, with geodesic edge weights.
pub fn mst_lower_bound(trace: &EpisodeTrace, map: &StaticMap) -> Result<MstBound, MetricsError> {
    let done: Vec<&ObjectRecord> = trace.objects.iter().filter(|o| o.success).collect();
    let k = done.len();
    let mut vertices = Vec::with_capacity(2 * k + 1);
    vertices.push(trace.robot_start);
    vertices.extend(done.iter().map(|o| o.initial_centroid));
    if k == 0 {
        return Ok(MstBound { vertices, edges: vec![], tree: vec![], weight: 0.0 });
    }
    let fields: Vec<DistanceField> = vertices[..=k]
        .iter()
        .enumerate()
        .map(|(i, &p)| map.field_from(p).ok_or(MetricsError::Unreachable(i)))
        .collect::<Result<_, _>>()?;
    let mut edges = Vec::new();
    for i in 0..=k {
        for j in (i + 1)..=k {
            edges.push(Edge { a: i, b: j, weight: fields[i].sample(vertices[j]) });
        }
    }
    for (n, o) in done.iter().enumerate() {
        let v = n + 1;
        let goal = map.nearest_goal_point(o.initial_centroid).ok_or(MetricsError::Unreachable(v))?;
        vertices.push(goal);
        edges.push(Edge { a: v, b: k + v, weight: map.goal_distance(o.initial_centroid) });
    }
    if let Some(e) = edges.iter().find(|e| !e.weight.is_finite()) {
        return Err(MetricsError::Unreachable(e.b));
    }
    let tree = kruskal(vertices.len(), &edges);
    if tree.len() + 1 != vertices.len() {
        return Err(MetricsError::Unreachable(0));
    }
    let weight = tree.iter().map(|e| e.weight).sum();
    Ok(MstBound { vertices, edges, tree, weight })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManipScores {
    pub s_manip: f64,
    pub e_manip: f64,
    pub i_manip: f64,
    pub lower_bound: f64,
    /// Set when effort exceeded 1 by more than the clamp tolerance.
    pub effort_warning: bool,
}

/// Manipulation success, efficiency and effort.
pub fn manip_scores(trace: &EpisodeTrace, map: &StaticMap) -> Result<ManipScores, MetricsError> {
    let k = trace.objects.len();
    if k == 0 {
        return Err(MetricsError::CorruptTrace("manipulation trace without objects"));
    }
    let done = trace.completed();
    let l0 = trace.robot_path_length;
    if done > 0 && l0 <= 0.0 && trace.objects.iter().any(|o| o.success && o.path_length > 0.0) {
        return Err(MetricsError::CorruptTrace("objects moved but the robot did not"));
    }
    let s_manip = done as f64 / k as f64;
    let bound = mst_lower_bound(trace, map)?;
    let e_manip = if done == 0 || l0 <= 0.0 {
        if done == 0 {
            0.0
        } else {
            1.0
        }
    } else {
        bound.weight / l0
    };
    let mut ideal = trace.robot_mass * l0;
    for o in trace.objects.iter().filter(|o| o.success) {
        ideal += o.mass * map.goal_distance(o.initial_centroid);
    }
    let denom = trace.robot_mass * l0 + trace.object_work();
    let raw = if denom > 0.0 { ideal / denom } else { 1.0 };
    let (i_manip, effort_warning) = if raw > 1.0 {
        if raw - 1.0 < CLAMP_TOLERANCE {
            (1.0, false)
        } else {
            (raw, true)
        }
    } else {
        (raw, false)
    };
    Ok(ManipScores { s_manip, e_manip, i_manip, lower_bound: bound.weight, effort_warning })
}

/// Scores for the trace's task class, with errors folded into warnings.
pub fn episode_metrics(trace: &EpisodeTrace, map: &StaticMap) -> EpisodeMetrics {
    let mut m = EpisodeMetrics::default();
    if map.goal.is_navigation() {
        match nav_scores(trace, map) {
            Ok(s) => {
                m.e_nav = Some(s.e_nav);
                m.i_nav = Some(s.i_nav);
            }
            Err(e) => m.warnings.push(e.to_string()),
        }
    } else {
        match manip_scores(trace, map) {
            Ok(s) => {
                m.s_manip = Some(s.s_manip);
                m.e_manip = Some(s.e_manip);
                m.i_manip = Some(s.i_manip);
                if s.effort_warning {
                    m.warnings.push("I_manip exceeds 1".into());
                }
            }
            Err(e) => {
                m.s_manip = Some(trace.completed() as f64 / trace.objects.len().max(1) as f64);
                m.warnings.push(e.to_string());
            }
        }
    }
    m
}
