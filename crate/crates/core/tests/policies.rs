use std::f64::consts::FRAC_PI_2;

use pushnav::env::{make_env, Action, ActionMode, EnvKind, EnvSpec, Environment};
use pushnav::geom::{wrap_angle, Pose};
use pushnav::policies::{make_policy, DtFollower, GreedyPush, Policy, PolicyKind};

fn run(env: &mut Environment, policy: &mut dyn Policy, steps: usize) -> usize {
    policy.reset(env);
    for k in 0..steps {
        let a = policy.act(None, env);
        let t = env.step_with(a, false).unwrap_or_else(|e| panic!("{} step {k}: {e}", policy.name()));
        if t.terminated || t.truncated {
            return k + 1;
        }
    }
    steps
}

#[test]
fn every_baseline_drives_every_compatible_env() {
    let mut specs = Vec::new();
    for kind in EnvKind::ALL {
        for mode in [ActionMode::AngularVelocity, ActionMode::HeadingStep, ActionMode::WheelVelocities] {
            let mut s = EnvSpec::new(kind);
            s.action_mode = mode;
            if s.validate().is_ok() {
                specs.push(s);
            }
        }
    }
    for spec in specs {
        for kind in PolicyKind::ALL {
            if !kind.supports(&spec) {
                assert!(make_policy(kind, &spec).is_err());
                continue;
            }
            let mut env = make_env(spec.clone()).unwrap();
            let mut policy = make_policy(kind, &spec).unwrap();
            let seeds: u64 = if matches!(kind, PolicyKind::Rrt | PolicyKind::GreedyPush) { 3 } else { 10 };
            for seed in 0..seeds {
                env.reset_state(seed).unwrap();
                run(&mut env, policy.as_mut(), 500);
            }
        }
    }
}

#[test]
fn dt_follower_turns_ship_up_channel() {
    let mut s = EnvSpec::new(EnvKind::ShipIce);
    s.ice_concentration = 0.0;
    let mut env = make_env(s).unwrap();
    let start = Pose::new(3.0, 1.0, FRAC_PI_2 + 0.4);
    env.reset_with_poses(0, Some(start), None).unwrap();
    let mut p = DtFollower;
    p.reset(&env);
    for _ in 0..5 {
        let a = p.act(None, &env);
        env.step_with(a, false).unwrap();
    }
    assert!(wrap_angle(env.robot_pose().theta - FRAC_PI_2).abs() < 1e-6, "{}", env.robot_pose().theta);
}

fn delivery_one_box() -> Environment {
    let mut s = EnvSpec::new(EnvKind::BoxDelivery);
    s.boxes = 1;
    make_env(s).unwrap()
}

#[test]
fn greedy_push_in_line_keeps_box_progressing() {
    let mut env = delivery_one_box();
    env.reset_with_poses(0, Some(Pose::new(1.5, 1.5, 0.785)), Some(&[Pose::new(2.3, 2.3, 0.785)])).unwrap();
    let mut p = GreedyPush::default();
    p.reset(&env);
    let mut last = env.object_goal_distances()[0];
    for _ in 0..200 {
        let a = p.act(None, &env);
        let t = env.step_with(a, false).unwrap();
        let d = env.object_goal_distances()[0];
        assert!(d <= last + 1e-3, "{d} > {last}");
        last = d;
        if t.terminated {
            break;
        }
    }
    assert!(env.terminated());
    assert_eq!(env.metrics().s_manip, Some(1.0));
}

#[test]
fn greedy_push_idles_when_done() {
    let mut env = delivery_one_box();
    env.reset_with_poses(0, Some(Pose::new(1.0, 1.0, 0.3)), Some(&[Pose::new(4.25, 4.25, 0.0)])).unwrap();
    let mut p = GreedyPush::default();
    p.reset(&env);
    assert_eq!(p.act(None, &env), Action::Heading { heading: 0.3 });
    assert!(env.step_with(Action::Heading { heading: 0.3 }, false).unwrap().terminated);
}

#[test]
fn greedy_push_breaks_ties_by_id() {
    let mut s = EnvSpec::new(EnvKind::AreaClearing);
    s.boxes = 2;
    let mut env = make_env(s).unwrap();
    env.reset_with_poses(0, Some(Pose::new(2.5, 0.5, FRAC_PI_2)), Some(&[Pose::new(3.0, 2.5, 0.0), Pose::new(2.0, 2.5, 0.0)]))
        .unwrap();
    let mut p = GreedyPush::default();
    p.reset(&env);
    p.act(None, &env);
    assert_eq!(p.target(), Some(env.objects()[0]));
}

#[test]
fn rrt_is_deterministic() {
    let spec = EnvSpec::new(EnvKind::Maze);
    let go = || {
        let mut env = make_env(spec.clone()).unwrap();
        env.reset_state(4).unwrap();
        let mut p = make_policy(PolicyKind::Rrt, &spec).unwrap();
        let n = run(&mut env, p.as_mut(), 300);
        (n, env.world().clone())
    };
    assert_eq!(go(), go());
}
