use ps_core::harness::{self, bundled, compute_metrics, AblationMode, RunConfig};
use ps_core::planner::{
    min_clearance, plan_episode, EpisodeConfig, EpisodeHeader, EpisodeLog, EpisodeStatus, EpisodeSummary,
    PlannerVariant, StepRecord,
};
use ps_core::scene::{AgentState, Footprint, Goal, Scenario, DT};

const CAR: Footprint = Footprint {
    length: 4.8,
    width: 2.0,
};

fn scene(name: &str) -> Scenario {
    bundled(name).unwrap().unwrap()
}

fn quick() -> EpisodeConfig {
    let mut cfg = EpisodeConfig::default();
    cfg.planner.iterations = 60;
    cfg
}

/// Ego driving along x at `v` for `n` steps, one record per 10 steps.
fn synthetic_log(v: f64, n: usize, agent: Option<AgentState>) -> EpisodeLog {
    let ego: Vec<AgentState> = (0..=n)
        .map(|k| AgentState::new(v * k as f64 * DT, 0.0, v, 0.0, 0.0))
        .collect();
    let others: Vec<AgentState> = agent.into_iter().collect();
    let mut footprints = vec![CAR];
    footprints.extend(others.iter().map(|_| CAR));
    let mut start = vec![ego[0]];
    start.extend_from_slice(&others);
    let steps = ego[1..]
        .chunks(10)
        .enumerate()
        .map(|(i, chunk)| StepRecord {
            decision: i,
            step: 49 + 10 * i,
            action: v,
            q_table: Vec::new(),
            tree_size: 1,
            cost: Default::default(),
            ego: chunk.to_vec(),
            controls: vec![Default::default(); chunk.len()],
            agents: vec![others.clone(); chunk.len()],
            planned_ego: Vec::new(),
            planned_agents: Vec::new(),
        })
        .collect::<Vec<_>>();
    EpisodeLog {
        header: EpisodeHeader {
            format: 1,
            scenario: "synthetic".into(),
            predictor: "lane_follow".into(),
            world: "playback".into(),
            variant: PlannerVariant::Full,
            seed: 0,
            dt: DT,
            macro_step: 1.0,
            track_ids: (0..footprints.len()).map(|i| format!("t{i}")).collect(),
            footprints,
            goal: Goal {
                x: 1e3,
                y: 0.0,
                radius: 2.0,
            },
            start,
            reference: ego[1..].iter().map(AgentState::position).collect(),
        },
        summary: EpisodeSummary {
            status: EpisodeStatus::Reached,
            decisions: steps.len(),
            steps: n,
            reason: None,
        },
        steps,
    }
}

#[test]
fn metrics_of_a_steady_drive() {
    let m = compute_metrics(&synthetic_log(10.0, 50, None));
    assert!((m.completion_time - 5.0).abs() < 1e-12);
    assert!((m.avg_velocity - 10.0).abs() < 1e-9);
    assert_eq!(m.collision_distance, None);
    assert!(m.planning_error.unwrap().abs() < 1e-12);
    assert_eq!((m.decisions, m.steps), (5, 50));
}

#[test]
fn abeam_clearance_is_the_lateral_gap() {
    let c = min_clearance(
        &AgentState::new(0.0, 0.0, 0.0, 0.0, 0.0),
        &[AgentState::new(0.0, 3.0, 0.0, 0.0, 0.0)],
        &[CAR, CAR],
    );
    assert!((c.unwrap() - 1.0).abs() < 1e-12);
    let m = compute_metrics(&synthetic_log(0.0, 10, Some(AgentState::new(0.0, 3.0, 0.0, 0.0, 0.0))));
    assert!((m.collision_distance.unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn log_survives_jsonl() {
    let log = plan_episode(&scene("straight_two_agents"), &quick()).unwrap();
    let text = log.to_jsonl();
    assert_eq!(EpisodeLog::from_jsonl(&text).unwrap(), log);
    assert_eq!(text.lines().count(), log.steps.len() + 2);
}

#[test]
fn starting_on_the_goal_is_immediately_reached() {
    let mut sc = scene("empty_straight");
    let e = sc.current_states()[0];
    sc.goal = Goal {
        x: e.x,
        y: e.y,
        radius: 2.0,
    };
    let log = plan_episode(&sc, &quick()).unwrap();
    assert_eq!(log.summary.status, EpisodeStatus::Reached);
    assert!(log.steps.is_empty());
    let m = compute_metrics(&log);
    assert_eq!((m.completion_time, m.avg_velocity), (0.0, 0.0));
}

#[test]
fn empty_road_respects_the_speed_limit() {
    let sc = scene("empty_straight");
    let log = plan_episode(&sc, &quick()).unwrap();
    let m = compute_metrics(&log);
    assert_eq!(m.status, EpisodeStatus::Reached);
    let start = sc.current_states()[0];
    let dist = (sc.goal.x - start.x).hypot(sc.goal.y - start.y) - sc.goal.radius;
    assert!(m.completion_time >= dist / 15.0, "{}", m.completion_time);
    assert!(m.avg_velocity <= 15.0 + 1e-9);
}

#[test]
fn blocked_road_never_reaches_the_goal() {
    let log = plan_episode(&scene("wall"), &quick()).unwrap();
    assert!(
        matches!(log.summary.status, EpisodeStatus::Collision | EpisodeStatus::Timeout),
        "{:?}",
        log.summary
    );
}

#[test]
fn identical_seeds_give_identical_logs() {
    let sc = scene("scene3_merge");
    let a = plan_episode(&sc, &quick()).unwrap().to_jsonl();
    let b = plan_episode(&sc, &quick()).unwrap().to_jsonl();
    assert_eq!(a, b);
}

#[test]
fn scenario_json_round_trip() {
    for name in harness::bundled_names() {
        let sc = scene(name);
        assert_eq!(Scenario::from_json_str(&sc.to_json_string()).unwrap(), sc);
    }
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        "scenarios = [\"empty_straight\", \"straight_two_agents\"]\nout = \"results\"\nmode = \"PS-Fixed\"\n[planner]\niterations = 40\n",
    )
    .unwrap();
    let cfg = RunConfig::from_toml_file(&cfg_path).unwrap();
    assert_eq!(cfg.mode, AblationMode::PsFixed);
    let outcomes = harness::run(&cfg).unwrap();
    assert_eq!(outcomes.len(), 2);
    let out = dir.path().join("results");
    for name in ["empty_straight", "straight_two_agents"] {
        for file in ["episode.jsonl", "metrics.json", "trajectory.svg"] {
            assert!(out.join(name).join(file).is_file(), "{name}/{file}");
        }
    }
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().contains("PS-Fixed"));
    let svg = std::fs::read_to_string(out.join("empty_straight/trajectory.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn duplicate_scenarios_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        scenarios: vec!["s1".into(), "scene1_left_turn".into()],
        out: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    assert!(harness::run(&cfg).is_err());
}
