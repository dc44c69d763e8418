//! Multi-modal agent prediction behind a branch-incremental interface.
//!
//! A predictor owns a [`BranchContext`] per scenario-tree branch. Map
//! processing happens once in [`Predictor::init_branch`]; each
//! [`Predictor::extend_branch`] appends one joint state (ego included) and
//! updates the private cache from that state alone, so the cost of extending
//! does not depend on how long the branch already is. [`Predictor::predict`]
//! returns [`NUM_MODES`] weighted futures for every non-ego agent.

mod branch;
mod lane_follow;
mod playback;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{AgentState, Scenario, DT};

pub use branch::{BranchCache, BranchContext, BranchId};
pub use lane_follow::{IdmParams, LaneFollow};
pub use playback::Playback;

pub const NUM_MODES: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum PredictError {
    #[error("expected one state per agent ({expected}), got {got}")]
    AgentCountMismatch { expected: usize, got: usize },
    #[error("unknown predictor '{0}' (expected constant_velocity, lane_follow, lane_follow_yield or playback)")]
    UnknownPredictor(String),
}

/// Future of one non-ego agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPrediction {
    /// Track index in the scenario (ego is 0, so this is at least 1).
    pub agent: usize,
    /// State at the branch tip the modes start from.
    pub origin: AgentState,
    /// `NUM_MODES` position sequences, one entry per future step.
    pub modes: Vec<Vec<[f64; 2]>>,
    pub probabilities: [f64; NUM_MODES],
}

impl AgentPrediction {
    /// One real mode with probability 1 padded by zero-probability copies.
    pub fn single_mode(agent: usize, origin: AgentState, path: Vec<[f64; 2]>) -> Self {
        let mut probabilities = [0.0; NUM_MODES];
        probabilities[0] = 1.0;
        Self {
            agent,
            origin,
            modes: vec![path; NUM_MODES],
            probabilities,
        }
    }

    pub fn horizon(&self) -> usize {
        self.modes.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictionSet {
    pub agents: Vec<AgentPrediction>,
}

impl PredictionSet {
    /// Checks the simplex and shape invariants.
    pub fn validate(&self) -> Result<(), String> {
        for a in &self.agents {
            if a.modes.len() != NUM_MODES {
                return Err(format!("agent {}: {} modes", a.agent, a.modes.len()));
            }
            let h = a.horizon();
            if a.modes.iter().any(|m| m.len() != h) {
                return Err(format!("agent {}: modes differ in length", a.agent));
            }
            if a.probabilities.iter().any(|p| !(*p >= 0.0)) {
                return Err(format!("agent {}: negative probability", a.agent));
            }
            let sum: f64 = a.probabilities.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(format!("agent {}: probabilities sum to {sum}", a.agent));
            }
        }
        Ok(())
    }
}

/// How one future is picked from the modes of a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModePolicy {
    /// Highest probability; ties go to the lowest mode index.
    #[default]
    MostProbable,
    /// Draw a mode in proportion to its probability.
    Sample,
}

pub fn choose_mode<R: Rng + ?Sized>(probabilities: &[f64; NUM_MODES], policy: ModePolicy, rng: &mut R) -> usize {
    match policy {
        ModePolicy::MostProbable => {
            let mut best = 0;
            for k in 1..NUM_MODES {
                if probabilities[k] > probabilities[best] {
                    best = k;
                }
            }
            best
        }
        ModePolicy::Sample => {
            let total: f64 = probabilities.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut last_positive = 0;
            for (k, &p) in probabilities.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                last_positive = k;
                if u < p {
                    return k;
                }
                u -= p;
            }
            last_positive
        }
    }
}

/// State reached after `steps` steps along a chosen mode, with velocity and
/// heading from the finite difference to the previous point.
fn state_along(pred: &AgentPrediction, mode: usize, steps: usize) -> AgentState {
    let path = &pred.modes[mode];
    let prev = if steps <= 1 {
        pred.origin.position()
    } else {
        path[steps - 2]
    };
    let p = path[steps - 1];
    let (vx, vy) = ((p[0] - prev[0]) / DT, (p[1] - prev[1]) / DT);
    let heading = if vx.hypot(vy) > 1e-6 {
        vy.atan2(vx)
    } else {
        pred.origin.heading
    };
    AgentState::new(p[0], p[1], vx, vy, heading)
}

/// Next-step state of every predicted agent, in prediction order.
pub fn select_transition<R: Rng + ?Sized>(pred: &PredictionSet, policy: ModePolicy, rng: &mut R) -> Vec<AgentState> {
    pred.agents
        .iter()
        .map(|a| {
            let k = choose_mode(&a.probabilities, policy, rng);
            if a.horizon() == 0 {
                a.origin
            } else {
                state_along(a, k, 1)
            }
        })
        .collect()
}

/// Plays one chosen mode per agent for `steps` steps. Returns `steps` frames
/// of non-ego states.
pub fn rollout_modes<R: Rng + ?Sized>(
    pred: &PredictionSet,
    policy: ModePolicy,
    steps: usize,
    rng: &mut R,
) -> Vec<Vec<AgentState>> {
    let chosen: Vec<usize> = pred
        .agents
        .iter()
        .map(|a| choose_mode(&a.probabilities, policy, rng))
        .collect();
    (1..=steps)
        .map(|k| {
            pred.agents
                .iter()
                .zip(&chosen)
                .map(|(a, &m)| {
                    if a.horizon() == 0 {
                        a.origin
                    } else {
                        state_along(a, m, k.min(a.horizon()))
                    }
                })
                .collect()
        })
        .collect()
}

/// Instrumentation counters, shared by all branches of one predictor.
#[derive(Debug, Default)]
pub struct Counters {
    map_encodings: AtomicU64,
    extends: AtomicU64,
    extend_work: AtomicU64,
    predicts: AtomicU64,
}

impl Counters {
    pub fn add_map_encoding(&self) {
        self.map_encodings.fetch_add(1, Ordering::Relaxed);
    }

    /// Records one extension that did `work` units of work.
    pub fn add_extend(&self, work: u64) {
        self.extends.fetch_add(1, Ordering::Relaxed);
        self.extend_work.fetch_add(work, Ordering::Relaxed);
    }

    pub fn add_predict(&self) {
        self.predicts.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> PredictorStats {
        PredictorStats {
            map_encodings: self.map_encodings.load(Ordering::Relaxed),
            extends: self.extends.load(Ordering::Relaxed),
            extend_work: self.extend_work.load(Ordering::Relaxed),
            predicts: self.predicts.load(Ordering::Relaxed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PredictorStats {
    pub map_encodings: u64,
    pub extends: u64,
    /// Frames and agent projections touched by extensions.
    pub extend_work: u64,
    pub predicts: u64,
}

pub trait Predictor: Send + Sync {
    fn name(&self) -> &'static str;

    /// How many of the most recent history frames `predict` reads.
    fn window(&self) -> usize;

    fn init_branch(&self, scenario: &Scenario) -> BranchContext;

    /// `new_states` holds one state per agent, ego first.
    fn extend_branch(&self, ctx: &BranchContext, new_states: &[AgentState]) -> Result<BranchContext, PredictError>;

    /// Futures of every non-ego agent over `horizon` steps (at least 1).
    fn predict(&self, ctx: &BranchContext, horizon: usize) -> PredictionSet;

    fn stats(&self) -> PredictorStats;
}

/// Observation-window frames of a scenario, ego first in every frame.
pub fn observed_frames(scenario: &Scenario) -> Vec<Vec<AgentState>> {
    (0..scenario.observation_horizon)
        .map(|t| scenario.tracks.iter().map(|tr| tr.states[t]).collect())
        .collect()
}

/// Straight-line extrapolation at the current velocity.
#[derive(Debug, Default)]
pub struct ConstantVelocity {
    counters: Counters,
}

impl ConstantVelocity {
    pub fn new() -> Self {
        Self::default()
    }
}

pub(crate) fn constant_velocity_path(s: &AgentState, horizon: usize) -> Vec<[f64; 2]> {
    (1..=horizon)
        .map(|k| {
            let t = k as f64 * DT;
            [s.x + s.vx * t, s.y + s.vy * t]
        })
        .collect()
}

impl Predictor for ConstantVelocity {
    fn name(&self) -> &'static str {
        "constant_velocity"
    }

    fn window(&self) -> usize {
        1
    }

    fn init_branch(&self, scenario: &Scenario) -> BranchContext {
        BranchContext::from_frames(observed_frames(scenario), Arc::new(()))
    }

    fn extend_branch(&self, ctx: &BranchContext, new_states: &[AgentState]) -> Result<BranchContext, PredictError> {
        let child = ctx.child(new_states, ctx.cache().clone())?;
        self.counters.add_extend(1);
        Ok(child)
    }

    fn predict(&self, ctx: &BranchContext, horizon: usize) -> PredictionSet {
        self.counters.add_predict();
        let tip = ctx.tip();
        PredictionSet {
            agents: (1..tip.len())
                .map(|i| AgentPrediction::single_mode(i, tip[i], constant_velocity_path(&tip[i], horizon)))
                .collect(),
        }
    }

    fn stats(&self) -> PredictorStats {
        self.counters.snapshot()
    }
}

/// Names accepted by [`predictor_by_name`].
pub const PREDICTOR_NAMES: [&str; 4] = ["constant_velocity", "lane_follow", "lane_follow_yield", "playback"];

pub fn predictor_by_name(name: &str) -> Result<Box<dyn Predictor>, PredictError> {
    Ok(match name {
        "constant_velocity" => Box::new(ConstantVelocity::new()),
        "lane_follow" => Box::new(LaneFollow::new()),
        "lane_follow_yield" => Box::new(LaneFollow::yielding()),
        "playback" => Box::new(Playback::new()),
        other => return Err(PredictError::UnknownPredictor(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pred_with(p: [f64; NUM_MODES]) -> PredictionSet {
        let origin = AgentState::new(0.0, 0.0, 0.0, 0.0, 0.0);
        let modes = (0..NUM_MODES).map(|k| vec![[k as f64, 0.0]]).collect();
        PredictionSet {
            agents: vec![AgentPrediction {
                agent: 1,
                origin,
                modes,
                probabilities: p,
            }],
        }
    }

    #[test]
    fn most_probable_tie_goes_low() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let next = select_transition(
            &pred_with([0.5, 0.5, 0.0, 0.0, 0.0, 0.0]),
            ModePolicy::MostProbable,
            &mut rng,
        );
        assert_eq!(next[0].x, 0.0);
    }

    #[test]
    fn degenerate_sample() {
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let next = select_transition(&pred_with([0.0, 1.0, 0.0, 0.0, 0.0, 0.0]), ModePolicy::Sample, &mut rng);
            assert_eq!(next[0].x, 1.0);
        }
    }

    #[test]
    fn sample_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = [0.3, 0.7, 0.0, 0.0, 0.0, 0.0];
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| choose_mode(&p, ModePolicy::Sample, &mut rng) == 1)
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.7).abs() <= 0.02, "freq {freq}");
    }

    #[test]
    fn finite_difference_velocity() {
        let origin = AgentState::new(0.0, 0.0, 10.0, 0.0, 0.0);
        let set = PredictionSet {
            agents: vec![AgentPrediction::single_mode(
                1,
                origin,
                constant_velocity_path(&origin, 10),
            )],
        };
        set.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let next = select_transition(&set, ModePolicy::MostProbable, &mut rng);
        assert!((next[0].x - 1.0).abs() < 1e-12);
        assert!((next[0].vx - 10.0).abs() < 1e-9);
        let frames = rollout_modes(&set, ModePolicy::MostProbable, 3, &mut rng);
        assert!((frames[2][0].x - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            predictor_by_name("neural"),
            Err(PredictError::UnknownPredictor(_))
        ));
        for n in PREDICTOR_NAMES {
            assert_eq!(predictor_by_name(n).unwrap().name(), n);
        }
    }
}
