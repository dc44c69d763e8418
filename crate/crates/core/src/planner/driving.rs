use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{segment_cost, CostBreakdown, CostWeights, EgoControlSample, Segment};
use crate::frenet::{to_cartesian, to_frenet, FrenetState, ReferenceLine};
use crate::predictor::{rollout_modes, select_transition, BranchContext, Predictor};
use crate::scene::{AgentState, Scenario, DT};
use crate::trajgen::{best_path, recover_controls, SamplingConfig, TrajSample};

use super::mcts::{Edge, SearchDomain, SearchTree, Step};
use super::{PlanError, PlannerConfig, PlannerVariant};

/// Ego motion over one macro-step, excluding the start state.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoSegment {
    pub frenet: Vec<FrenetState>,
    pub states: Vec<AgentState>,
    pub controls: Vec<EgoControlSample>,
}

/// What happened along the edge into a tree node.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTrace {
    pub ego: Vec<AgentState>,
    pub agents: Vec<Vec<AgentState>>,
    pub cost: CostBreakdown,
}

/// Joint world state at a tree node.
#[derive(Debug, Clone)]
pub struct JointState {
    /// Scenario step index of this state.
    pub step: usize,
    /// Carried exactly (with accelerations) so consecutive ego segments join smoothly.
    pub ego_frenet: FrenetState,
    pub ego: AgentState,
    pub last_control: Option<EgoControlSample>,
    /// Non-ego agents in track order.
    pub agents: Vec<AgentState>,
    pub ctx: BranchContext,
    pub trace: Option<Arc<SegmentTrace>>,
}

impl JointState {
    /// Every agent, ego first.
    pub fn joint(&self) -> Vec<AgentState> {
        let mut v = Vec::with_capacity(self.agents.len() + 1);
        v.push(self.ego);
        v.extend_from_slice(&self.agents);
        v
    }
}

/// Agent futures fixed at the decision root.
struct Frozen {
    base_step: usize,
    frames: Vec<Vec<AgentState>>,
}

/// Search domain over [`JointState`]s for one decision.
pub struct DrivingDomain<'a> {
    planner: &'a Planner<'a>,
    frozen: Option<Frozen>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionStat {
    pub target_speed: f64,
    pub q: f64,
    pub visits: u64,
    pub failed: bool,
}

/// Outcome of one planning call.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action_index: usize,
    pub target_speed: f64,
    pub q_table: Vec<ActionStat>,
    /// Ego positions along the greedy chain.
    pub planned_ego: Vec<[f64; 2]>,
    /// Per non-ego agent, positions along the greedy chain.
    pub planned_agents: Vec<Vec<[f64; 2]>>,
    pub tree_size: usize,
    pub untried_first_violations: u64,
}

/// Everything a decision needs besides the root state.
pub struct Planner<'a> {
    pub line: &'a ReferenceLine,
    pub predictor: &'a dyn Predictor,
    pub weights: CostWeights,
    pub sampling: SamplingConfig,
    pub cfg: PlannerConfig,
}

impl<'a> Planner<'a> {
    pub fn new(
        line: &'a ReferenceLine,
        predictor: &'a dyn Predictor,
        weights: CostWeights,
        sampling: SamplingConfig,
        cfg: PlannerConfig,
    ) -> Result<Self, PlanError> {
        cfg.validate()?;
        sampling.validate()?;
        weights.validate().map_err(|e| PlanError::Config(e.to_string()))?;
        Ok(Self {
            line,
            predictor,
            weights,
            sampling,
            cfg,
        })
    }

    /// Root state at the end of the scenario's observation window.
    pub fn root_state(&self, scenario: &Scenario) -> Result<JointState, PlanError> {
        let states = scenario.current_states();
        let ego_frenet = to_frenet(self.line, &states[0]).map_err(PlanError::Start)?;
        Ok(JointState {
            step: scenario.current_step(),
            ego_frenet,
            ego: states[0],
            last_control: None,
            agents: states[1..].to_vec(),
            ctx: self.predictor.init_branch(scenario),
            trace: None,
        })
    }

    /// Ego motion for one macro-step at `target_speed`.
    pub fn ego_segment(&self, state: &JointState, target_speed: f64) -> Result<EgoSegment, PlanError> {
        let n = self.cfg.substeps();
        let samples = match self.cfg.variant {
            PlannerVariant::FixedProfiles => self.fixed_profile(&state.ego_frenet, target_speed, n)?,
            _ => {
                let path = best_path(self.line, &state.ego_frenet, target_speed, &self.sampling)?;
                let mut samples = path.samples;
                extend_at_constant_speed(self.line, &mut samples, n, self.sampling.wheelbase)?;
                samples
            }
        };
        Ok(EgoSegment {
            frenet: samples[1..=n].iter().map(|s| s.frenet).collect(),
            states: samples[1..=n].iter().map(|s| s.state).collect(),
            controls: samples[1..=n]
                .iter()
                .enumerate()
                .map(|(k, s)| EgoControlSample {
                    t: state.step + k + 1,
                    accel: s.accel,
                    steer: s.steer,
                })
                .collect(),
        })
    }

    /// Constant acceleration toward the target speed, capped at the target,
    /// with the lateral offset decaying linearly toward zero over two seconds.
    fn fixed_profile(&self, start: &FrenetState, target: f64, n: usize) -> Result<Vec<TrajSample>, PlanError> {
        let a_mag = self.cfg.fixed_accel;
        let d_rate = start.d.abs() / 2.0;
        let (mut s, mut v) = (start.s, start.s_dot);
        let mut samples = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let t = k as f64 * DT;
            if k > 0 {
                let dv = (target - v).clamp(-a_mag * DT, a_mag * DT);
                let v_next = v + dv;
                s += 0.5 * (v + v_next) * DT;
                v = v_next;
            }
            let d = start.d.signum() * (start.d.abs() - d_rate * t).max(0.0);
            let d_dot = if d != 0.0 { -start.d.signum() * d_rate } else { 0.0 };
            let frenet = FrenetState {
                s,
                d,
                s_dot: v,
                d_dot,
                s_ddot: 0.0,
                d_ddot: 0.0,
            };
            let state = to_cartesian(self.line, &frenet).map_err(PlanError::Reference)?;
            samples.push(TrajSample {
                t,
                frenet,
                state,
                accel: 0.0,
                steer: 0.0,
                curvature: 0.0,
            });
        }
        recover_controls(&mut samples, self.sampling.wheelbase);
        Ok(samples)
    }

    pub fn domain(&self, root: &JointState, rng: &mut ChaCha8Rng) -> DrivingDomain<'_> {
        let frozen = (self.cfg.variant == PlannerVariant::PredictOnce).then(|| {
            let horizon = (self.cfg.max_depth + 1) * self.cfg.substeps();
            let pred = self.predictor.predict(&root.ctx, horizon);
            Frozen {
                base_step: root.step,
                frames: rollout_modes(&pred, self.cfg.mode_policy, horizon, rng),
            }
        });
        DrivingDomain { planner: self, frozen }
    }

    /// Runs a full search from `root` and picks the action.
    pub fn select_action(
        &self,
        root: &JointState,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Decision, SearchTree<JointState>), PlanError> {
        let mut tree = SearchTree::new(root.clone(), self.cfg.actions.len());
        let decision = self.search(&mut tree, rng, |_| {})?;
        Ok((decision, tree))
    }

    /// Adds `cfg.iterations` simulations to an existing tree and picks the action.
    pub fn search<F: FnMut(&SearchTree<JointState>)>(
        &self,
        tree: &mut SearchTree<JointState>,
        rng: &mut ChaCha8Rng,
        observer: F,
    ) -> Result<Decision, PlanError> {
        let domain = self.domain(&tree.root().state, rng);
        tree.search(&domain, &self.cfg.search_params(), rng, observer);
        let action_index = tree.best_root_action().ok_or(PlanError::Infeasible)?;
        Ok(self.decision(tree, action_index))
    }

    fn decision(&self, tree: &SearchTree<JointState>, action_index: usize) -> Decision {
        let root = tree.root();
        let q_table = self
            .cfg
            .actions
            .iter()
            .enumerate()
            .map(|(a, &target_speed)| ActionStat {
                target_speed,
                q: root.q[a],
                visits: root.n[a],
                failed: matches!(root.edges[a], Some(Edge::Failed)),
            })
            .collect();
        let mut planned_ego = vec![root.state.ego.position()];
        let mut planned_agents: Vec<Vec<[f64; 2]>> = root.state.agents.iter().map(|a| vec![a.position()]).collect();
        for (_, node) in tree.best_chain() {
            if let Some(trace) = &tree.node(node).state.trace {
                planned_ego.extend(trace.ego.iter().map(AgentState::position));
                for frame in &trace.agents {
                    for (i, a) in frame.iter().enumerate() {
                        planned_agents[i].push(a.position());
                    }
                }
            }
        }
        Decision {
            action_index,
            target_speed: self.cfg.actions[action_index],
            q_table,
            planned_ego,
            planned_agents,
            tree_size: tree.len(),
            untried_first_violations: tree.untried_first_violations(),
        }
    }
}

/// Pads a trajectory shorter than `n` steps by holding its final speed.
fn extend_at_constant_speed(
    line: &ReferenceLine,
    samples: &mut Vec<TrajSample>,
    n: usize,
    wheelbase: f64,
) -> Result<(), PlanError> {
    if samples.len() > n {
        return Ok(());
    }
    let last = *samples.last().expect("trajectories have samples");
    let base = samples.len() - 1;
    for j in samples.len()..=n {
        let k = (j - base) as f64;
        let frenet = FrenetState {
            s: last.frenet.s + last.frenet.s_dot * k * DT,
            d: last.frenet.d,
            s_dot: last.frenet.s_dot,
            ..FrenetState::default()
        };
        let state = to_cartesian(line, &frenet).map_err(PlanError::Reference)?;
        samples.push(TrajSample {
            t: last.t + k * DT,
            frenet,
            state,
            accel: 0.0,
            steer: 0.0,
            curvature: 0.0,
        });
    }
    recover_controls(samples, wheelbase);
    Ok(())
}

impl DrivingDomain<'_> {
    fn advance(&self, state: &JointState, action: usize, rng: &mut ChaCha8Rng, cheap: bool) -> Option<JointState> {
        let p = self.planner;
        let seg = match p.ego_segment(state, p.cfg.actions[action]) {
            Ok(seg) => seg,
            Err(e) => {
                log::trace!("transition failed at step {} for action {action}: {e}", state.step);
                return None;
            }
        };
        let n = seg.states.len();
        let mut ctx = state.ctx.clone();
        let mut frames: Vec<Vec<AgentState>> = Vec::with_capacity(n);
        if let Some(frozen) = &self.frozen {
            for k in 1..=n {
                let idx = (state.step + k).saturating_sub(frozen.base_step + 1);
                let frame = frozen.frames.get(idx).or(frozen.frames.last());
                frames.push(frame.cloned().unwrap_or_else(|| state.agents.clone()));
            }
        } else if cheap {
            for k in 1..=n {
                let t = k as f64 * DT;
                frames.push(
                    state
                        .agents
                        .iter()
                        .map(|a| AgentState {
                            x: a.x + a.vx * t,
                            y: a.y + a.vy * t,
                            ..*a
                        })
                        .collect(),
                );
            }
        } else {
            for ego_k in &seg.states {
                let pred = p.predictor.predict(&ctx, p.cfg.substeps());
                let agents = select_transition(&pred, p.cfg.mode_policy, rng);
                let mut joint = Vec::with_capacity(agents.len() + 1);
                joint.push(*ego_k);
                joint.extend_from_slice(&agents);
                ctx = p
                    .predictor
                    .extend_branch(&ctx, &joint)
                    .expect("joint state covers every agent");
                frames.push(agents);
            }
        }
        let cost = segment_cost(
            &Segment {
                ego: &seg.states,
                controls: &seg.controls,
                prev_control: state.last_control,
                others: &frames,
            },
            &p.weights,
        );
        Some(JointState {
            step: state.step + n,
            ego_frenet: seg.frenet[n - 1],
            ego: seg.states[n - 1],
            last_control: seg.controls.last().copied(),
            agents: frames.last().cloned().unwrap_or_default(),
            ctx,
            trace: Some(Arc::new(SegmentTrace {
                ego: seg.states,
                agents: frames,
                cost,
            })),
        })
    }

    fn step(&self, state: &JointState, action: usize, rng: &mut ChaCha8Rng, cheap: bool) -> Step<JointState> {
        match self.advance(state, action, rng, cheap) {
            Some(next) => {
                let total = next.trace.as_ref().map_or(0.0, |t| t.cost.total);
                Step::Next {
                    reward: self.planner.weights.reward(total),
                    state: next,
                }
            }
            None => Step::Failed,
        }
    }
}

impl SearchDomain for DrivingDomain<'_> {
    type State = JointState;

    fn num_actions(&self) -> usize {
        self.planner.cfg.actions.len()
    }

    fn transition(&self, state: &JointState, action: usize, rng: &mut ChaCha8Rng) -> Step<JointState> {
        self.step(state, action, rng, false)
    }

    fn rollout_transition(&self, state: &JointState, action: usize, rng: &mut ChaCha8Rng) -> Step<JointState> {
        self.step(state, action, rng, self.planner.cfg.cheap_rollout)
    }
}
