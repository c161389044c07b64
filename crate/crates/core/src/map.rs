//! Static obstacles and goal regions.

use serde::{Deserialize, Serialize};

use crate::geom::{Rect, Vec2};
use crate::grid::{geodesic_distance_field, DistanceField, GridSpec, OccupancyGrid};

/// Where the task wants the robot (navigation) or the objects (manipulation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Goal {
    /// Robot center must enter the disc.
    Disc { center: Vec2, radius: f64 },
    /// Robot center must reach `y ≥ y`.
    Line { y: f64 },
    /// Objects must end fully inside.
    Receptacle { rect: Rect },
    /// Objects must end fully outside.
    Clearance { rect: Rect },
}

impl Goal {
    /// Whether a point belongs to the goal set.
    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            Goal::Disc { center, radius } => p.distance(center) <= radius,
            Goal::Line { y } => p.y >= y,
            Goal::Receptacle { rect } => rect.contains(p),
            Goal::Clearance { rect } => !rect.contains_strict(p),
        }
    }

    /// Whether `cell` overlaps the goal set with positive area; cells that
    /// only touch it along an edge do not count.
    pub fn overlaps(&self, cell: Rect) -> bool {
        let eps = 1e-9 * (cell.max.x - cell.min.x);
        match *self {
            Goal::Disc { center, radius } => {
                let nearest = Vec2::new(center.x.clamp(cell.min.x, cell.max.x), center.y.clamp(cell.min.y, cell.max.y));
                nearest.distance(center) < radius - eps
            }
            Goal::Line { y } => cell.max.y > y + eps,
            Goal::Receptacle { rect } => {
                cell.min.x < rect.max.x - eps
                    && cell.max.x > rect.min.x + eps
                    && cell.min.y < rect.max.y - eps
                    && cell.max.y > rect.min.y + eps
            }
            Goal::Clearance { rect } => {
                cell.min.x < rect.min.x - eps
                    || cell.max.x > rect.max.x + eps
                    || cell.min.y < rect.min.y - eps
                    || cell.max.y > rect.max.y + eps
            }
        }
    }

    /// Whether an object with these world vertices counts as done.
    pub fn object_done(&self, centroid: Vec2, vertices: &[Vec2]) -> bool {
        match *self {
            Goal::Receptacle { rect } => rect.contains(centroid) && vertices.iter().all(|&v| rect.contains(v)),
            Goal::Clearance { rect } => vertices.iter().all(|&v| !rect.contains_strict(v)),
            _ => self.contains(centroid),
        }
    }

    pub fn is_navigation(&self) -> bool {
        matches!(self, Goal::Disc { .. } | Goal::Line { .. })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("goal region has no free cell")]
    EmptyGoal,
    #[error("resolution must be positive")]
    BadResolution,
}

/// Static occupancy plus goal, with the goal distance field precomputed.
#[derive(Debug, Clone)]
pub struct StaticMap {
    /// Arena extent; the grid covers `[0, size.x] × [0, size.y]`.
    pub size: Vec2,
    /// Interior static obstacles as convex world-frame polygons.
    pub obstacles: Vec<Vec<Vec2>>,
    pub grid: OccupancyGrid,
    pub goal: Goal,
    goal_cells: Vec<usize>,
    goal_field: DistanceField,
}

impl StaticMap {
    pub fn new(size: Vec2, obstacles: Vec<Vec<Vec2>>, goal: Goal, resolution: f64) -> Result<Self, MapError> {
        if !(resolution > 0.0) {
            return Err(MapError::BadResolution);
        }
        let mut grid = OccupancyGrid::new(GridSpec::covering(size, resolution));
        for poly in &obstacles {
            grid.fill_convex(poly);
        }
        let goal_cells = goal_cells(&grid, &goal);
        if goal_cells.is_empty() {
            return Err(MapError::EmptyGoal);
        }
        let goal_field = geodesic_distance_field(&grid, &goal_cells);
        Ok(Self { size, obstacles, grid, goal, goal_cells, goal_field })
    }

    pub fn resolution(&self) -> f64 {
        self.grid.spec.resolution
    }

    pub fn goal_cells(&self) -> &[usize] {
        &self.goal_cells
    }

    pub fn goal_field(&self) -> &DistanceField {
        &self.goal_field
    }

    /// Interpolated geodesic distance from `p` to the goal set.
    pub fn goal_distance(&self, p: Vec2) -> f64 {
        if self.goal.contains(p) {
            return 0.0;
        }
        self.goal_field.sample(p)
    }

    /// Geodesic field from the cell containing `p`; `None` if that cell is blocked or off-grid.
    pub fn field_from(&self, p: Vec2) -> Option<DistanceField> {
        let (c, r) = self.grid.spec.cell_of(p)?;
        if self.grid.is_blocked(c, r) {
            return None;
        }
        Some(geodesic_distance_field(&self.grid, &[self.grid.spec.index(c, r)]))
    }

    /// Free cell of the goal set geodesically nearest to `p`, as a point.
    pub fn nearest_goal_point(&self, p: Vec2) -> Option<Vec2> {
        if self.goal.contains(p) && self.grid.is_free_at(p) {
            return Some(p);
        }
        let field = self.field_from(p)?;
        let spec = self.grid.spec;
        self.goal_cells
            .iter()
            .copied()
            .filter(|&i| field.get_index(i).is_finite())
            .min_by(|&a, &b| field.get_index(a).total_cmp(&field.get_index(b)).then(a.cmp(&b)))
            .map(|i| {
                let (c, r) = spec.coords(i);
                spec.cell_center(c, r)
            })
    }

    /// Whether `p` is within the arena and not inside a static obstacle.
    pub fn is_free(&self, p: Vec2) -> bool {
        p.x > 0.0 && p.y > 0.0 && p.x < self.size.x && p.y < self.size.y && self.grid.is_free_at(p)
    }
}

/// Free cells touching the goal, so grid paths end at its boundary rather
/// than up to a cell inside it.
fn goal_cells(grid: &OccupancyGrid, goal: &Goal) -> Vec<usize> {
    let spec = grid.spec;
    let half = spec.resolution / 2.0;
    (0..spec.len())
        .filter(|&i| {
            let (c, r) = spec.coords(i);
            let cell = Rect::from_center(spec.cell_center(c, r), 2.0 * half, 2.0 * half);
            !grid.is_blocked(c, r) && goal.overlaps(cell)
        })
        .collect()
}
