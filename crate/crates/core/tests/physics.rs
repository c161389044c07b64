mod common;

use pushnav::geom::{Pose, Vec2};
use pushnav::physics::{
    collide_convex, robot_shapes, Body, Bumper, ConvexPolygon, DragParams, Material, PhysicsError, PhysicsParams,
    Role, Shape, World,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arena_walls(world: &mut World, w: f64, h: f64) {
    let t = 0.2;
    let walls = [
        (Vec2::new(w / 2.0, -t / 2.0), w + 2.0 * t, t),
        (Vec2::new(w / 2.0, h + t / 2.0), w + 2.0 * t, t),
        (Vec2::new(-t / 2.0, h / 2.0), t, h),
        (Vec2::new(w + t / 2.0, h / 2.0), t, h),
    ];
    for (c, ww, hh) in walls {
        world.add_body(Body::wall(
            Shape::Polygon { vertices: ConvexPolygon::rectangle(ww, hh) },
            Pose::new(c.x, c.y, 0.0),
        ));
    }
}

fn robot(pose: Pose) -> Body {
    Body::dynamic(Role::Robot, robot_shapes(Bumper::Pusher), pose, 1.0, Material { ground_mu: 0.0, restitution: 0.0 })
}

#[test]
fn friction_stop_time_matches_closed_form() {
    let params = PhysicsParams { ground_mu: 0.5, ..Default::default() };
    let mut world = World::new(params);
    let id = world.add_body(Body::pushable_box(0.25, 0.25, Pose::new(0.0, 0.0, 0.0), 0.2, false, &params));
    world.body_mut(id).velocity = Vec2::new(1.0, 0.0);
    let analytic = 1.0 / (0.5 * 9.81);
    let mut t = 0.0;
    while world.body(id).velocity.length() > 0.0 {
        world.advance().unwrap();
        t += params.dt;
        assert!(t < 1.0);
    }
    assert!((t - analytic).abs() <= params.dt, "stopped at {t}, analytic {analytic}");
    // Distance travelled tracks v²/(2μg) within one step of travel.
    let travelled = world.body(id).pose.x;
    assert!((travelled - 1.0 / (2.0 * 0.5 * 9.81)).abs() < 1.0 * params.dt);
}

#[test]
fn resting_world_is_a_fixed_point() {
    let params = PhysicsParams::default();
    let mut world = World::new(params);
    arena_walls(&mut world, 5.0, 5.0);
    world.add_body(Body::pushable_box(0.25, 0.25, Pose::new(1.0, 1.0, 0.3), 0.2, false, &params));
    world.add_body(robot(Pose::new(3.0, 3.0, 1.0)));
    let before = world.clone();
    world.advance().unwrap();
    assert_eq!(world.tick, 1);
    assert_eq!(world.bodies, before.bodies);
}

#[test]
fn head_on_push_conserves_normal_momentum() {
    let params = PhysicsParams { ground_mu: 0.0, restitution: 0.0, ..Default::default() };
    let mut world = World::new(params);
    let r = world.add_body(robot(Pose::new(0.0, 0.0, 0.0)));
    let front = Bumper::Pusher.front_reach();
    let b = world.add_body(Body::pushable_box(
        0.25,
        0.25,
        Pose::new(front + 0.125 - 0.002, 0.0, 0.0),
        0.5,
        false,
        &params,
    ));
    world.body_mut(r).velocity = Vec2::new(0.3, 0.0);
    let before = world.linear_momentum().x;
    let events = world.advance().unwrap();
    assert!(events.contacts.iter().any(|c| c.bodies == (r, b)));
    let after = world.linear_momentum().x;
    assert!((after - before).abs() < 1e-6, "{before} -> {after}");
    // restitution 0: bodies leave with equal normal speed
    assert!((world.body(r).velocity.x - world.body(b).velocity.x).abs() < 1e-3);
    assert!(world.body(b).velocity.x > 0.0);
}

fn random_world(seed: u64, boxes: usize) -> World {
    let params = PhysicsParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut world = World::new(params);
    arena_walls(&mut world, 5.0, 5.0);
    world.add_body(robot(Pose::new(2.5, 2.5, 0.0)));
    let mut placed: Vec<Vec2> = vec![Vec2::new(2.5, 2.5)];
    while placed.len() < boxes + 1 {
        let p = Vec2::new(rng.random_range(0.3..4.7), rng.random_range(0.3..4.7));
        if placed.iter().all(|q| q.distance(p) > 0.45) {
            placed.push(p);
            let wheeled = rng.random_bool(0.3);
            world.add_body(Body::pushable_box(
                0.25,
                0.25,
                Pose::new(p.x, p.y, rng.random_range(-3.0..3.0)),
                0.2,
                wheeled,
                &params,
            ));
        }
    }
    world
}

fn drive(world: &mut World, rng: &mut ChaCha8Rng, steps: usize, mut check: impl FnMut(&World, f64)) {
    let robot_id = world.bodies.iter().position(|b| b.role == Role::Robot).unwrap();
    let mut cmd = (0.0, 0.0);
    for k in 0..steps {
        if k % 30 == 0 {
            cmd = (rng.random_range(-0.3..0.3), rng.random_range(-2.0..2.0));
        }
        let theta = world.body(robot_id).pose.theta;
        world.body_mut(robot_id).velocity = Vec2::from_angle(theta) * cmd.0;
        world.body_mut(robot_id).angular_velocity = cmd.1;
        let ev = world.advance().unwrap();
        check(world, ev.max_penetration);
    }
}

#[test]
fn identical_worlds_stay_bit_identical() {
    let mut a = random_world(7, 12);
    let mut b = random_world(7, 12);
    let mut ra = ChaCha8Rng::seed_from_u64(1);
    let mut rb = ChaCha8Rng::seed_from_u64(1);
    drive(&mut a, &mut ra, 2000, |_, _| {});
    drive(&mut b, &mut rb, 2000, |_, _| {});
    assert_eq!(a, b);
    let bits = |w: &World| {
        w.bodies
            .iter()
            .flat_map(|b| [b.pose.x.to_bits(), b.pose.y.to_bits(), b.pose.theta.to_bits(), b.velocity.x.to_bits()])
            .collect::<Vec<u64>>()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn penetration_stays_below_half_millimeter() {
    let mut world = random_world(3, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    drive(&mut world, &mut rng, 3000, |w, pen| {
        worst = worst.max(pen);
        assert!(pen <= 5e-4, "tick {} penetration {pen}", w.tick);
    });
    assert!(worst <= 5e-4);
}

#[test]
fn kinetic_energy_never_increases_without_actuation() {
    let mut world = random_world(11, 15);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for b in world.bodies.iter_mut().filter(|b| !b.is_static) {
        b.velocity = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        b.angular_velocity = rng.random_range(-3.0..3.0);
        b.material.restitution = 0.0;
        // the robot has no drive here, so give it ground friction as well
        if b.role == Role::Robot {
            b.role = Role::Box;
            b.material.ground_mu = 0.5;
        }
    }
    let mut ke = world.kinetic_energy();
    for _ in 0..400 {
        world.advance().unwrap();
        let next = world.kinetic_energy();
        assert!(next <= ke + 1e-12, "tick {}: {ke} -> {next}", world.tick);
        ke = next;
    }
}

#[test]
fn wheeled_box_slides_farther() {
    let params = PhysicsParams::default();
    let mut world = World::new(params);
    let plain = world.add_body(Body::pushable_box(0.25, 0.25, Pose::new(0.0, 0.0, 0.0), 0.2, false, &params));
    let wheeled = world.add_body(Body::pushable_box(0.25, 0.25, Pose::new(0.0, 2.0, 0.0), 0.2, true, &params));
    assert_eq!(world.body(wheeled).role, Role::WheeledBox);
    world.body_mut(plain).velocity = Vec2::new(0.5, 0.0);
    world.body_mut(wheeled).velocity = Vec2::new(0.5, 0.0);
    for _ in 0..600 {
        world.advance().unwrap();
    }
    assert!(world.body(wheeled).pose.x > world.body(plain).pose.x);
}

/// Classical RK4 on v̇ = −(c_lin v + c_quad v²)/m with a fine step.
fn rk4_speed(v0: f64, c_lin: f64, c_quad: f64, m: f64, t: f64) -> f64 {
    let f = |v: f64| -(c_lin * v + c_quad * v * v) / m;
    let n = 100_000;
    let h = t / n as f64;
    let mut v = v0;
    for _ in 0..n {
        let k1 = f(v);
        let k2 = f(v + 0.5 * h * k1);
        let k3 = f(v + 0.5 * h * k2);
        let k4 = f(v + h * k3);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    v
}

#[test]
fn drag_matches_ode_within_one_percent() {
    let drag = DragParams { linear: 1.5, quadratic: 3.0, angular_linear: 0.0, angular_quadratic: 0.0 };
    let params = PhysicsParams { ground_mu: 0.0, drag: Some(drag), ..Default::default() };
    let mut world = World::new(params);
    let floe = Body::dynamic(
        Role::IceFloe,
        vec![Shape::Polygon { vertices: ConvexPolygon::rectangle(0.5, 0.4) }],
        Pose::default(),
        2.0,
        Material { ground_mu: 0.0, restitution: 0.0 },
    );
    let id = world.add_body(floe);
    world.body_mut(id).velocity = Vec2::new(1.2, 0.5);
    let v0 = world.body(id).velocity.length();
    for _ in 0..60 {
        world.advance().unwrap();
    }
    let got = world.body(id).velocity.length();
    let want = rk4_speed(v0, 1.5, 3.0, 2.0, 1.0);
    assert!(((got - want) / want).abs() < 0.01, "{got} vs {want}");
}

#[test]
fn runaway_speed_is_reported() {
    let params = PhysicsParams { max_speed: 5.0, ground_mu: 0.0, ..Default::default() };
    let mut world = World::new(params);
    let id = world.add_body(Body::pushable_box(0.25, 0.25, Pose::default(), 0.2, false, &params));
    world.body_mut(id).velocity = Vec2::new(6.0, 0.0);
    assert!(matches!(world.advance(), Err(PhysicsError::SolverDivergence { .. })));
}

fn random_convex(rng: &mut ChaCha8Rng) -> Vec<Vec2> {
    let n = rng.random_range(3..10);
    let r = rng.random_range(0.2..0.8);
    let pts: Vec<Vec2> = (0..n.max(3) + 3)
        .map(|_| {
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let rr = r * rng.random_range(0.3..1.0);
            Vec2::new(rr * a.cos(), rr * a.sin())
        })
        .collect();
    common::gift_wrap(&pts)
}

#[test]
fn sat_verdict_matches_clipping_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cases = 0;
    let mut overlaps = 0;
    while cases < 200 {
        let a = random_convex(&mut rng);
        let b = random_convex(&mut rng);
        if a.len() < 3 || b.len() < 3 || common::shoelace(&a) < 1e-3 || common::shoelace(&b) < 1e-3 {
            continue;
        }
        let (Ok(sa), Ok(sb)) = (Shape::polygon(a.clone()), Shape::polygon(b.clone())) else {
            continue;
        };
        let pa = Pose::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), rng.random_range(-3.0..3.0));
        let pb = Pose::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), rng.random_range(-3.0..3.0));
        let wa: Vec<Vec2> = a.iter().map(|&v| pa.transform_point(v)).collect();
        let wb: Vec<Vec2> = b.iter().map(|&v| pb.transform_point(v)).collect();
        let area = common::intersection_area(&wa, &wb);
        if area > 0.0 && area < 1e-9 {
            continue; // grazing; both verdicts acceptable
        }
        let contact = collide_convex(&sa, pa, &sb, pb);
        assert_eq!(area > 0.0, contact.is_some(), "case {cases}: area {area}");
        if let Some(c) = contact {
            overlaps += 1;
            assert!(c.penetration >= 0.0);
            assert!((c.normal.length() - 1.0).abs() < 1e-9);
        }
        cases += 1;
    }
    assert!(overlaps > 20 && overlaps < 190, "oracle sample is one-sided: {overlaps}");
}

#[test]
fn disc_polygon_verdict_matches_clipping_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let a = random_convex(&mut rng);
        let Ok(sa) = Shape::polygon(a.clone()) else { continue };
        let r = rng.random_range(0.05..0.4);
        let disc = Shape::disc(r).unwrap();
        let pa = Pose::new(0.0, 0.0, rng.random_range(-3.0..3.0));
        let pb = Pose::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
        let wa: Vec<Vec2> = a.iter().map(|&v| pa.transform_point(v)).collect();
        // fine polygonal disc for the oracle
        let ring: Vec<Vec2> = (0..256)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 256.0;
                Vec2::new(pb.x + r * t.cos(), pb.y + r * t.sin())
            })
            .collect();
        let area = common::intersection_area(&ring, &wa);
        let contact = collide_convex(&sa, pa, &disc, pb);
        if let Some(c) = contact {
            // the 256-gon is inscribed; a sliver deeper than its sagitta must show up
            if c.penetration > 1e-4 {
                assert!(area > 0.0);
            }
        } else {
            assert_eq!(area, 0.0);
        }
    }
}
