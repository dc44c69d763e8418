use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{segment_cost, CostBreakdown, CostWeights, EgoControlSample, Segment};
use crate::frenet::build_reference_line;
use crate::geometry::{box_clearance, OrientedBox};
use crate::predictor::{predictor_by_name, select_transition, ModePolicy};
use crate::scene::{AgentState, Footprint, Goal, Scenario, DT};
use crate::trajgen::SamplingConfig;

use super::mcts::{Edge, SearchTree};
use super::{ActionStat, JointState, PlanError, Planner, PlannerConfig, PlannerVariant};

/// Version of the JSON-lines episode log layout.
pub const LOG_FORMAT: u32 = 1;

/// Everything that shapes one closed-loop episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    /// Predictor used inside the search tree.
    pub predictor: String,
    /// Predictor that moves the simulated world; `playback` replays the log.
    pub world: String,
    pub planner: PlannerConfig,
    pub cost: CostWeights,
    pub sampling: SamplingConfig,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            predictor: "lane_follow".into(),
            world: "playback".into(),
            planner: PlannerConfig::default(),
            cost: CostWeights::default(),
            sampling: SamplingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Reached,
    Collision,
    Timeout,
    PlanFail,
}

impl fmt::Display for EpisodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EpisodeStatus::Reached => "Reached",
            EpisodeStatus::Collision => "Collision",
            EpisodeStatus::Timeout => "Timeout",
            EpisodeStatus::PlanFail => "PlanFail",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub format: u32,
    pub scenario: String,
    pub predictor: String,
    pub world: String,
    pub variant: PlannerVariant,
    pub seed: u64,
    pub dt: f64,
    pub macro_step: f64,
    pub track_ids: Vec<String>,
    pub footprints: Vec<Footprint>,
    pub goal: Goal,
    /// Every track at the planning start, ego first.
    pub start: Vec<AgentState>,
    /// Recorded ego positions after the observation window.
    pub reference: Vec<[f64; 2]>,
}

/// One executed macro-step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub decision: usize,
    /// Scenario step index before execution.
    pub step: usize,
    pub action: f64,
    pub q_table: Vec<ActionStat>,
    pub tree_size: usize,
    /// Cost of the executed part of the segment.
    pub cost: CostBreakdown,
    /// Executed ego states, one per simulation step.
    pub ego: Vec<AgentState>,
    pub controls: Vec<EgoControlSample>,
    /// Non-ego states per executed step.
    pub agents: Vec<Vec<AgentState>>,
    pub planned_ego: Vec<[f64; 2]>,
    pub planned_agents: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub status: EpisodeStatus,
    pub decisions: usize,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Header(EpisodeHeader),
    Step(StepRecord),
    Summary(EpisodeSummary),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: EpisodeHeader,
    pub steps: Vec<StepRecord>,
    pub summary: EpisodeSummary,
}

impl EpisodeLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |r: LogRecord| {
            out.push_str(&serde_json::to_string(&r).expect("log records serialize"));
            out.push('\n');
        };
        push(LogRecord::Header(self.header.clone()));
        for s in &self.steps {
            push(LogRecord::Step(s.clone()));
        }
        push(LogRecord::Summary(self.summary.clone()));
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, String> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut summary = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            match serde_json::from_str::<LogRecord>(line).map_err(|e| format!("line {}: {e}", i + 1))? {
                LogRecord::Header(h) => header = Some(h),
                LogRecord::Step(s) => steps.push(s),
                LogRecord::Summary(s) => summary = Some(s),
            }
        }
        Ok(Self {
            header: header.ok_or("missing header record")?,
            steps,
            summary: summary.ok_or("missing summary record")?,
        })
    }

    /// Ego states from the planning start through the last executed step.
    pub fn ego_states(&self) -> Vec<AgentState> {
        let mut out = vec![self.header.start[0]];
        for s in &self.steps {
            out.extend_from_slice(&s.ego);
        }
        out
    }

    /// Non-ego states aligned with [`Self::ego_states`].
    pub fn agent_states(&self) -> Vec<Vec<AgentState>> {
        let mut out = vec![self.header.start[1..].to_vec()];
        for s in &self.steps {
            out.extend(s.agents.iter().cloned());
        }
        out
    }
}

fn agent_box(s: &AgentState, f: &Footprint) -> OrientedBox {
    OrientedBox::new(s.x, s.y, s.heading, f.length, f.width)
}

/// Smallest rectangle clearance between the ego and any other agent.
pub fn min_clearance(ego: &AgentState, agents: &[AgentState], footprints: &[Footprint]) -> Option<f64> {
    let e = agent_box(ego, &footprints[0]);
    agents
        .iter()
        .zip(&footprints[1..])
        .map(|(a, f)| box_clearance(&e, &agent_box(a, f)))
        .min_by(f64::total_cmp)
}

fn same_state(a: &JointState, b: &JointState) -> bool {
    a.joint() == b.joint()
}

/// Closed-loop receding-horizon run: plan, execute one macro-step, repeat
/// until the goal, a collision, a planning failure or the time budget.
///
/// Errors are reserved for unusable inputs; driving failures end up in the
/// returned log.
pub fn plan_episode(scenario: &Scenario, cfg: &EpisodeConfig) -> Result<EpisodeLog, PlanError> {
    let line = build_reference_line(scenario).map_err(PlanError::Reference)?;
    let predictor = predictor_by_name(&cfg.predictor)?;
    let world = predictor_by_name(&cfg.world)?;
    let planner = Planner::new(&line, predictor.as_ref(), cfg.cost, cfg.sampling, cfg.planner.clone())?;
    let mut root = planner.root_state(scenario)?;
    let mut world_ctx = world.init_branch(scenario);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.planner.rng_seed);
    let footprints: Vec<Footprint> = scenario.tracks.iter().map(|t| t.footprint).collect();

    let header = EpisodeHeader {
        format: LOG_FORMAT,
        scenario: scenario.name.clone(),
        predictor: cfg.predictor.clone(),
        world: cfg.world.clone(),
        variant: cfg.planner.variant,
        seed: cfg.planner.rng_seed,
        dt: DT,
        macro_step: cfg.planner.macro_step,
        track_ids: scenario.tracks.iter().map(|t| t.id.clone()).collect(),
        footprints: footprints.clone(),
        goal: scenario.goal,
        start: root.joint(),
        reference: scenario
            .recorded_ego_future()
            .iter()
            .map(AgentState::position)
            .collect(),
    };

    let max_steps = (cfg.planner.time_budget / DT).round() as usize;
    let mut steps = Vec::new();
    let mut executed = 0usize;
    let mut reason = None;
    let mut tree: Option<SearchTree<JointState>> = None;

    let status = if scenario.goal.reached_by(&root.ego) {
        EpisodeStatus::Reached
    } else if min_clearance(&root.ego, &root.agents, &footprints).is_some_and(|c| c <= 0.0) {
        EpisodeStatus::Collision
    } else {
        loop {
            if executed >= max_steps {
                break EpisodeStatus::Timeout;
            }
            let mut t = tree
                .take()
                .unwrap_or_else(|| SearchTree::new(root.clone(), cfg.planner.actions.len()));
            let decision = match planner.search(&mut t, &mut rng, |_| {}) {
                Ok(d) => d,
                Err(e) => {
                    reason = Some(e.to_string());
                    break EpisodeStatus::PlanFail;
                }
            };
            let seg = match planner.ego_segment(&root, decision.target_speed) {
                Ok(s) => s,
                Err(e) => {
                    reason = Some(e.to_string());
                    break EpisodeStatus::PlanFail;
                }
            };
            log::debug!(
                "{}: step {} action {:.1} m/s (tree {} nodes)",
                scenario.name,
                root.step,
                decision.target_speed,
                decision.tree_size
            );

            let mut ego = Vec::new();
            let mut controls = Vec::new();
            let mut agents_hist = Vec::new();
            let mut plan_ctx = root.ctx.clone();
            let mut outcome = None;
            for k in 0..seg.states.len() {
                let pred = world.predict(&world_ctx, cfg.planner.substeps());
                let agents = select_transition(&pred, ModePolicy::MostProbable, &mut rng);
                let mut joint = Vec::with_capacity(agents.len() + 1);
                joint.push(seg.states[k]);
                joint.extend_from_slice(&agents);
                world_ctx = world.extend_branch(&world_ctx, &joint)?;
                plan_ctx = predictor.extend_branch(&plan_ctx, &joint)?;
                ego.push(seg.states[k]);
                controls.push(seg.controls[k]);
                agents_hist.push(agents);
                executed += 1;
                let last = agents_hist.last().expect("just pushed");
                if min_clearance(&seg.states[k], last, &footprints).is_some_and(|c| c <= 0.0) {
                    outcome = Some(EpisodeStatus::Collision);
                } else if scenario.goal.reached_by(&seg.states[k]) {
                    outcome = Some(EpisodeStatus::Reached);
                } else if executed >= max_steps {
                    outcome = Some(EpisodeStatus::Timeout);
                }
                if outcome.is_some() {
                    break;
                }
            }
            let n = ego.len();
            let cost = segment_cost(
                &Segment {
                    ego: &ego,
                    controls: &controls,
                    prev_control: root.last_control,
                    others: &agents_hist,
                },
                &cfg.cost,
            );
            let next = JointState {
                step: root.step + n,
                ego_frenet: seg.frenet[n - 1],
                ego: ego[n - 1],
                last_control: controls.last().copied(),
                agents: agents_hist[n - 1].clone(),
                ctx: plan_ctx,
                trace: None,
            };
            if cfg.planner.reuse_subtree && outcome.is_none() {
                if let Some(Edge::Child { node, .. }) = t.root().edges[decision.action_index] {
                    if same_state(&t.node(node).state, &next) {
                        tree = Some(t.reroot(node));
                    }
                }
            }
            steps.push(StepRecord {
                decision: steps.len(),
                step: root.step,
                action: decision.target_speed,
                q_table: decision.q_table,
                tree_size: decision.tree_size,
                cost,
                ego,
                controls,
                agents: agents_hist,
                planned_ego: decision.planned_ego,
                planned_agents: decision.planned_agents,
            });
            root = next;
            if let Some(s) = outcome {
                break s;
            }
        }
    };

    Ok(EpisodeLog {
        header,
        summary: EpisodeSummary {
            status,
            decisions: steps.len(),
            steps: executed,
            reason,
        },
        steps,
    })
}
