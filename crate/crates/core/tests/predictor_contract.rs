use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ps_core::frenet::{build_reference_line, to_cartesian, FrenetState};
use ps_core::harness::bundled;
use ps_core::planner::mcts::{SearchDomain, Step};
use ps_core::planner::{Planner, PlannerConfig};
use ps_core::predictor::{predictor_by_name, BranchContext, ConstantVelocity, Predictor, PREDICTOR_NAMES};
use ps_core::scene::{AgentState, Scenario, DT};

fn scene(name: &str) -> Scenario {
    bundled(name).unwrap().unwrap()
}

/// Advances every non-ego agent at its own velocity and puts `ego` first.
fn next_frame(tip: &[AgentState], ego: AgentState) -> Vec<AgentState> {
    let mut f = vec![ego];
    f.extend(tip[1..].iter().map(|a| AgentState {
        x: a.x + a.vx * DT,
        y: a.y + a.vy * DT,
        ..*a
    }));
    f
}

fn extend_n(p: &dyn Predictor, mut ctx: BranchContext, egos: &[AgentState]) -> BranchContext {
    for &e in egos {
        let frame = next_frame(ctx.tip(), e);
        ctx = p.extend_branch(&ctx, &frame).unwrap();
    }
    ctx
}

fn straight_egos(start: AgentState, n: usize) -> Vec<AgentState> {
    (1..=n)
        .map(|k| AgentState {
            x: start.x + start.vx * k as f64 * DT,
            y: start.y + start.vy * k as f64 * DT,
            ..start
        })
        .collect()
}

#[test]
fn map_is_encoded_once_per_branch_root() {
    let sc = scene("scene2_lane_change");
    for name in PREDICTOR_NAMES {
        let p = predictor_by_name(name).unwrap();
        let root = p.init_branch(&sc);
        let egos = straight_egos(root.tip()[0], 12);
        let a = extend_n(p.as_ref(), root.clone(), &egos);
        let b = extend_n(p.as_ref(), root, &egos[..5]);
        let stats = p.stats();
        assert_eq!(a.len(), sc.observation_horizon + 12);
        assert_eq!(b.len(), sc.observation_horizon + 5);
        assert_eq!(stats.extends, 17, "{name}");
        if name.starts_with("lane_follow") {
            assert_eq!(stats.map_encodings, 1, "{name}");
        }
    }
}

#[test]
fn extend_work_does_not_grow_with_history() {
    let sc = scene("scene3_merge");
    for name in PREDICTOR_NAMES {
        let p = predictor_by_name(name).unwrap();
        let root = p.init_branch(&sc);
        let start = root.tip()[0];
        let before = p.stats().extend_work;
        let short = extend_n(p.as_ref(), root.clone(), &straight_egos(start, 10));
        let short_work = p.stats().extend_work - before;
        let long = extend_n(p.as_ref(), root, &straight_egos(start, 200));
        let mid = p.stats().extend_work;
        let _ = extend_n(p.as_ref(), long, &straight_egos(start, 10));
        let long_work = p.stats().extend_work - mid;
        assert_eq!(short_work, long_work, "{name}");
        assert!(short.len() < 100);
    }
}

#[test]
fn extending_leaves_the_parent_untouched() {
    let sc = scene("straight_two_agents");
    let p = predictor_by_name("lane_follow").unwrap();
    let root = p.init_branch(&sc);
    let (id, len, tip) = (root.id(), root.len(), root.tip().to_vec());
    let e = root.tip()[0];
    let slow = p
        .extend_branch(&root, &next_frame(root.tip(), AgentState { x: e.x + 0.5, ..e }))
        .unwrap();
    let fast = p
        .extend_branch(&root, &next_frame(root.tip(), AgentState { x: e.x + 1.5, ..e }))
        .unwrap();
    assert_eq!((root.id(), root.len(), root.tip()), (id, len, tip.as_slice()));
    assert_ne!(slow.id(), fast.id());
    assert_eq!(slow.len(), len + 1);
    assert_eq!(slow.agent_history(1), fast.agent_history(1));
}

#[test]
fn constant_velocity_agent_moves_v_times_one_second() {
    let sc = scene("straight_two_agents");
    let p = ConstantVelocity::new();
    let ctx = p.init_branch(&sc);
    let lead = ctx.tip()[1];
    let pred = p.predict(&ctx, 10);
    let end = pred.agents[0].modes[0][9];
    assert!((end[0] - (lead.x + lead.vx)).abs() < 1e-9);
    assert!((end[1] - (lead.y + lead.vy)).abs() < 1e-9);
}

#[test]
fn ego_merge_changes_yielding_prediction() {
    let sc = scene("cut_in");
    let line = build_reference_line(&sc).unwrap();
    let p = predictor_by_name("lane_follow_yield").unwrap();
    let root = p.init_branch(&sc);
    let e = root.tip()[0];
    let s0 = ps_core::frenet::to_frenet(&line, &e).unwrap().s;
    let merge: Vec<AgentState> = (1..=15)
        .map(|k| {
            let fs = FrenetState {
                s: s0 + e.speed() * k as f64 * DT,
                s_dot: e.speed(),
                ..Default::default()
            };
            to_cartesian(&line, &fs).unwrap()
        })
        .collect();
    let cut = extend_n(p.as_ref(), root.clone(), &merge);
    let keep = extend_n(p.as_ref(), root, &straight_egos(e, 15));
    let (a, b) = (p.predict(&cut, 30), p.predict(&keep, 30));
    let gap = a.agents[0].modes[0]
        .iter()
        .zip(&b.agents[0].modes[0])
        .map(|(u, v)| ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    assert!(gap > 0.5, "max deviation {gap}");

    let plain = predictor_by_name("lane_follow").unwrap();
    let root = plain.init_branch(&sc);
    let cut = extend_n(plain.as_ref(), root.clone(), &merge);
    let keep = extend_n(plain.as_ref(), root, &straight_egos(e, 15));
    assert_eq!(plain.predict(&cut, 30), plain.predict(&keep, 30));
}

#[test]
fn two_actions_differ_only_in_ego_history() {
    let sc = scene("straight_two_agents");
    let line = build_reference_line(&sc).unwrap();
    let p = predictor_by_name("lane_follow").unwrap();
    let planner = Planner::new(
        &line,
        p.as_ref(),
        Default::default(),
        Default::default(),
        PlannerConfig::default(),
    )
    .unwrap();
    let root = planner.root_state(&sc).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let domain = planner.domain(&root, &mut rng);
    let next = |a| match domain.transition(&root, a, &mut rng.clone()) {
        Step::Next { state, .. } => state,
        Step::Failed => panic!("action {a} failed"),
    };
    let (slow, fast) = (next(0), next(domain.num_actions() - 1));
    assert_eq!(slow.ctx.len(), root.ctx.len() + 10);
    assert_ne!(slow.ctx.agent_history(0), fast.ctx.agent_history(0));
    for i in 1..slow.ctx.num_agents() {
        assert_eq!(slow.ctx.agent_history(i), fast.ctx.agent_history(i));
    }
    assert_eq!(root.ctx.len(), sc.observation_horizon);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn branch_id_tracks_content(dx in prop::collection::vec(0.0f64..2.0, 1..12)) {
        let sc = scene("straight_two_agents");
        let p = predictor_by_name("constant_velocity").unwrap();
        let root = p.init_branch(&sc);
        let e = root.tip()[0];
        let mut egos = Vec::new();
        let mut x = e.x;
        for d in &dx {
            x += d;
            egos.push(AgentState { x, ..e });
        }
        let a = extend_n(p.as_ref(), root.clone(), &egos);
        let b = extend_n(p.as_ref(), root.clone(), &egos);
        prop_assert_eq!(a.id(), b.id());
        prop_assert_eq!(a.len(), root.len() + dx.len());
        prop_assert_eq!(root.len(), sc.observation_horizon);
    }
}
