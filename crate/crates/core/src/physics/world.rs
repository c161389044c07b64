use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::{cross_sv, wrap_angle, Aabb, Vec2};

use super::body::{Body, BodyId, Role};
use super::collide::{manifold, Contact, Manifold};
use super::shape::WorldShape;
use super::{PhysicsError, PhysicsParams};

/// Everything the simulator owns. Bodies are indexed by their id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub bodies: Vec<Body>,
    pub params: PhysicsParams,
    pub tick: u64,
}

/// What happened during one `advance`.
#[derive(Debug, Clone, Default)]
pub struct StepEvents {
    /// One entry per touching body pair, deepest point, ordered by pair.
    pub contacts: Vec<Contact>,
    /// Largest overlap left after the positional pass.
    pub max_penetration: f64,
}

struct VelocityPoint {
    a: usize,
    b: usize,
    normal: Vec2,
    tangent: Vec2,
    ra: Vec2,
    rb: Vec2,
    normal_mass: f64,
    tangent_mass: f64,
    target_normal_velocity: f64,
    friction: f64,
    normal_impulse: f64,
    tangent_impulse: f64,
}

struct PairManifold {
    a: usize,
    b: usize,
    manifold: Manifold,
}

impl World {
    pub fn new(params: PhysicsParams) -> Self {
        Self { bodies: Vec::new(), params, tick: 0 }
    }

    /// Adds a body and assigns its id.
    pub fn add_body(&mut self, mut body: Body) -> BodyId {
        let id = self.bodies.len();
        body.id = id;
        self.bodies.push(body);
        id
    }

    pub fn body(&self, id: BodyId) -> &Body {
        &self.bodies[id]
    }

    pub fn body_mut(&mut self, id: BodyId) -> &mut Body {
        &mut self.bodies[id]
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.bodies.iter().map(Body::kinetic_energy).sum()
    }

    pub fn linear_momentum(&self) -> Vec2 {
        self.bodies
            .iter()
            .filter(|b| !b.is_static)
            .fold(Vec2::ZERO, |acc, b| acc + b.velocity * b.mass)
    }

    /// All touching pairs at the current poses.
    pub fn contacts(&self) -> Vec<Contact> {
        let shapes = self.world_shapes();
        let pairs = self.broadphase(&shapes, 0.0);
        let manifolds = narrowphase(&shapes, &pairs);
        summarize(&manifolds)
    }

    pub fn max_penetration(&self) -> f64 {
        self.contacts().iter().map(|c| c.penetration).fold(0.0, f64::max)
    }

    /// Advances one fixed step of `params.dt`: ground friction and drag on
    /// passive bodies, sequential-impulse contact solve, position
    /// integration, then positional correction.
    pub fn advance(&mut self) -> Result<StepEvents, PhysicsError> {
        let dt = self.params.dt;
        self.apply_passive_forces(dt);

        let shapes = self.world_shapes();
        let margin = self.broadphase_margin(dt);
        let pairs = self.broadphase(&shapes, margin);
        let manifolds = narrowphase(&shapes, &pairs);
        let mut contacts: BTreeMap<(BodyId, BodyId), Contact> =
            summarize(&manifolds).into_iter().map(|c| (c.bodies, c)).collect();

        let mut points = self.prepare_velocity_points(&manifolds);
        for _ in 0..self.params.solver_iterations {
            self.solve_velocities(&mut points);
        }

        for b in self.bodies.iter() {
            if b.is_static {
                continue;
            }
            let speed = b.velocity.length();
            if !speed.is_finite() || speed > self.params.max_speed {
                return Err(PhysicsError::SolverDivergence { body: b.id, speed });
            }
        }

        for b in self.bodies.iter_mut() {
            if b.is_static {
                continue;
            }
            b.pose.x += b.velocity.x * dt;
            b.pose.y += b.velocity.y * dt;
            b.pose.theta = wrap_angle(b.pose.theta + b.angular_velocity * dt);
        }

        let max_penetration = self.correct_positions(&pairs, &mut contacts);
        self.tick += 1;
        Ok(StepEvents { contacts: contacts.into_values().collect(), max_penetration })
    }

    fn apply_passive_forces(&mut self, dt: f64) {
        let g = self.params.gravity;
        let drag = self.params.drag;
        for b in self.bodies.iter_mut() {
            if b.is_static || b.role == Role::Robot {
                continue;
            }
            let mu = b.material.ground_mu;
            if mu > 0.0 {
                let dv = mu * g * dt;
                let speed = b.velocity.length();
                b.velocity = if speed <= dv { Vec2::ZERO } else { b.velocity * ((speed - dv) / speed) };
                let k = b.gyration_radius();
                if k > 0.0 {
                    let dw = mu * g * dt / k;
                    let w = b.angular_velocity;
                    b.angular_velocity = if w.abs() <= dw { 0.0 } else { w - dw.copysign(w) };
                }
            }
            if let Some(d) = drag {
                let speed = b.velocity.length();
                if speed > 0.0 {
                    let s = drag_decay(speed, d.linear / b.mass, d.quadratic / b.mass, dt);
                    b.velocity = b.velocity * (s / speed);
                }
                if b.inertia > 0.0 && b.angular_velocity != 0.0 {
                    let w = b.angular_velocity.abs();
                    let s = drag_decay(w, d.angular_linear / b.inertia, d.angular_quadratic / b.inertia, dt);
                    b.angular_velocity = s.copysign(b.angular_velocity);
                }
            }
        }
    }

    fn world_shapes(&self) -> Vec<Vec<WorldShape>> {
        self.bodies.iter().map(|b| b.world_shapes().collect()).collect()
    }

    fn broadphase_margin(&self, dt: f64) -> f64 {
        let vmax = self
            .bodies
            .iter()
            .filter(|b| !b.is_static)
            .map(|b| b.velocity.length() + b.angular_velocity.abs() * 0.5)
            .fold(0.0, f64::max);
        vmax * dt + 0.01
    }

    /// Sweep-and-prune on x. Returned pairs are sorted and have `a < b`.
    fn broadphase(&self, shapes: &[Vec<WorldShape>], margin: f64) -> Vec<(usize, usize)> {
        let boxes: Vec<Aabb> = shapes
            .iter()
            .map(|parts| {
                parts
                    .iter()
                    .map(WorldShape::aabb)
                    .reduce(|a, b| a.union(&b))
                    .expect("every body has at least one shape")
                    .expanded(margin)
            })
            .collect();
        let mut order: Vec<usize> = (0..boxes.len()).collect();
        order.sort_by(|&i, &j| boxes[i].min.x.total_cmp(&boxes[j].min.x).then(i.cmp(&j)));
        let mut pairs = Vec::new();
        for (k, &i) in order.iter().enumerate() {
            for &j in order[k + 1..].iter() {
                if boxes[j].min.x > boxes[i].max.x {
                    break;
                }
                if self.bodies[i].is_static && self.bodies[j].is_static {
                    continue;
                }
                if boxes[i].overlaps(&boxes[j]) {
                    pairs.push((i.min(j), i.max(j)));
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }

    fn prepare_velocity_points(&self, manifolds: &[PairManifold]) -> Vec<VelocityPoint> {
        let mut out = Vec::new();
        for pm in manifolds {
            let (ba, bb) = (&self.bodies[pm.a], &self.bodies[pm.b]);
            let (ima, imb) = (ba.inv_mass(), bb.inv_mass());
            let (iia, iib) = (ba.inv_inertia(), bb.inv_inertia());
            let restitution = ba.material.restitution.max(bb.material.restitution);
            let normal = pm.manifold.normal;
            let tangent = normal.perp();
            for p in &pm.manifold.points {
                let ra = p.point - ba.pose.position();
                let rb = p.point - bb.pose.position();
                let rna = ra.cross(normal);
                let rnb = rb.cross(normal);
                let kn = ima + imb + iia * rna * rna + iib * rnb * rnb;
                let rta = ra.cross(tangent);
                let rtb = rb.cross(tangent);
                let kt = ima + imb + iia * rta * rta + iib * rtb * rtb;
                let dv = bb.velocity + cross_sv(bb.angular_velocity, rb) - ba.velocity - cross_sv(ba.angular_velocity, ra);
                let vn = dv.dot(normal);
                let target = if vn < -RESTITUTION_THRESHOLD { -restitution * vn } else { 0.0 };
                out.push(VelocityPoint {
                    a: pm.a,
                    b: pm.b,
                    normal,
                    tangent,
                    ra,
                    rb,
                    normal_mass: if kn > 0.0 { 1.0 / kn } else { 0.0 },
                    tangent_mass: if kt > 0.0 { 1.0 / kt } else { 0.0 },
                    target_normal_velocity: target,
                    friction: self.params.contact_friction,
                    normal_impulse: 0.0,
                    tangent_impulse: 0.0,
                });
            }
        }
        out
    }

    fn solve_velocities(&mut self, points: &mut [VelocityPoint]) {
        for c in points.iter_mut() {
            let (ima, iia, imb, iib) = {
                let (ba, bb) = (&self.bodies[c.a], &self.bodies[c.b]);
                (ba.inv_mass(), ba.inv_inertia(), bb.inv_mass(), bb.inv_inertia())
            };

            // friction
            let dv = self.relative_velocity(c);
            let vt = dv.dot(c.tangent);
            let max_f = c.friction * c.normal_impulse;
            let new_t = (c.tangent_impulse - vt * c.tangent_mass).clamp(-max_f, max_f);
            let d_t = new_t - c.tangent_impulse;
            c.tangent_impulse = new_t;
            self.apply_impulse(c, c.tangent * d_t, ima, iia, imb, iib);

            // normal
            let dv = self.relative_velocity(c);
            let vn = dv.dot(c.normal);
            let new_n = (c.normal_impulse - (vn - c.target_normal_velocity) * c.normal_mass).max(0.0);
            let d_n = new_n - c.normal_impulse;
            c.normal_impulse = new_n;
            self.apply_impulse(c, c.normal * d_n, ima, iia, imb, iib);
        }
    }

    #[inline]
    fn relative_velocity(&self, c: &VelocityPoint) -> Vec2 {
        let (ba, bb) = (&self.bodies[c.a], &self.bodies[c.b]);
        bb.velocity + cross_sv(bb.angular_velocity, c.rb) - ba.velocity - cross_sv(ba.angular_velocity, c.ra)
    }

    #[inline]
    fn apply_impulse(&mut self, c: &VelocityPoint, p: Vec2, ima: f64, iia: f64, imb: f64, iib: f64) {
        {
            let ba = &mut self.bodies[c.a];
            ba.velocity -= p * ima;
            ba.angular_velocity -= iia * c.ra.cross(p);
        }
        let bb = &mut self.bodies[c.b];
        bb.velocity += p * imb;
        bb.angular_velocity += iib * c.rb.cross(p);
    }

    /// Nonlinear Gauss-Seidel position projection with Baumgarte factor.
    /// Returns the largest remaining overlap. Pairs that first touch during
    /// this pass are added to `contacts`.
    fn correct_positions(
        &mut self,
        pairs: &[(usize, usize)],
        contacts: &mut BTreeMap<(BodyId, BodyId), Contact>,
    ) -> f64 {
        let beta = self.params.baumgarte;
        let slop = self.params.linear_slop;
        let max_corr = self.params.max_correction;
        let mut max_depth = 0.0;
        for iter in 0..=self.params.position_iterations {
            let shapes = self.world_shapes();
            let manifolds = narrowphase(&shapes, pairs);
            if iter == 0 {
                for c in summarize(&manifolds) {
                    contacts.entry(c.bodies).or_insert(c);
                }
            }
            max_depth = manifolds
                .iter()
                .flat_map(|m| m.manifold.points.iter().map(|p| p.depth))
                .fold(0.0, f64::max);
            if iter == self.params.position_iterations || max_depth <= slop * 1.5 {
                break;
            }
            for pm in &manifolds {
                let n = pm.manifold.normal;
                for p in &pm.manifold.points {
                    let correction = (beta * (p.depth - slop)).clamp(0.0, max_corr);
                    if correction <= 0.0 {
                        continue;
                    }
                    let (xa, ima, iia) = {
                        let b = &self.bodies[pm.a];
                        (b.pose.position(), b.inv_mass(), b.inv_inertia())
                    };
                    let (xb, imb, iib) = {
                        let b = &self.bodies[pm.b];
                        (b.pose.position(), b.inv_mass(), b.inv_inertia())
                    };
                    let ra = p.point - xa;
                    let rb = p.point - xb;
                    let rna = ra.cross(n);
                    let rnb = rb.cross(n);
                    let k = ima + imb + iia * rna * rna + iib * rnb * rnb;
                    if k <= 0.0 {
                        continue;
                    }
                    let impulse = n * (correction / k);
                    let ba = &mut self.bodies[pm.a];
                    ba.pose.x -= impulse.x * ima;
                    ba.pose.y -= impulse.y * ima;
                    ba.pose.theta = wrap_angle(ba.pose.theta - iia * ra.cross(impulse));
                    let bb = &mut self.bodies[pm.b];
                    bb.pose.x += impulse.x * imb;
                    bb.pose.y += impulse.y * imb;
                    bb.pose.theta = wrap_angle(bb.pose.theta + iib * rb.cross(impulse));
                }
            }
        }
        max_depth
    }
}

/// Relative approach speed below which restitution is ignored (m/s).
const RESTITUTION_THRESHOLD: f64 = 0.05;

/// Exact solution of `ṡ = −(a s + b s²)` over `dt` for `s ≥ 0`.
pub fn drag_decay(s: f64, a: f64, b: f64, dt: f64) -> f64 {
    if a > 0.0 {
        let e = (-a * dt).exp();
        a * s * e / (a + b * s * (1.0 - e))
    } else if b > 0.0 {
        s / (1.0 + b * s * dt)
    } else {
        s
    }
}

fn narrowphase(shapes: &[Vec<WorldShape>], pairs: &[(usize, usize)]) -> Vec<PairManifold> {
    let mut out = Vec::new();
    for &(a, b) in pairs {
        for sa in &shapes[a] {
            for sb in &shapes[b] {
                if !sa.aabb().overlaps(&sb.aabb()) {
                    continue;
                }
                if let Some(m) = manifold(sa, sb) {
                    out.push(PairManifold { a, b, manifold: m });
                }
            }
        }
    }
    out
}

fn summarize(manifolds: &[PairManifold]) -> Vec<Contact> {
    let mut by_pair: BTreeMap<(usize, usize), Contact> = BTreeMap::new();
    for pm in manifolds {
        if let Some(g) = pm.manifold.deepest() {
            let c = Contact { bodies: (pm.a, pm.b), point: g.point, normal: g.normal, penetration: g.penetration };
            by_pair
                .entry((pm.a, pm.b))
                .and_modify(|e| {
                    if c.penetration > e.penetration {
                        *e = c;
                    }
                })
                .or_insert(c);
        }
    }
    by_pair.into_values().collect()
}
