//! Scenario-tree planner: Monte Carlo tree search over target-speed actions
//! where each edge pairs a Frenet ego segment with predicted agent motion.

mod driving;
mod episode;
pub mod mcts;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frenet::FrenetError;
use crate::predictor::{ModePolicy, PredictError};
use crate::scene::DT;
use crate::trajgen::TrajError;

pub use driving::{ActionStat, Decision, DrivingDomain, EgoSegment, JointState, Planner, SegmentTrace};
pub use episode::{
    min_clearance, plan_episode, EpisodeConfig, EpisodeHeader, EpisodeLog, EpisodeStatus, EpisodeSummary, LogRecord,
    StepRecord, LOG_FORMAT,
};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid planner config: {0}")]
    Config(String),
    #[error("reference line: {0}")]
    Reference(#[source] FrenetError),
    #[error("ego start state is off the reference line: {0}")]
    Start(#[source] FrenetError),
    #[error("no action has a feasible ego trajectory from the current state")]
    Infeasible,
    #[error("ego trajectory: {0}")]
    Trajectory(#[from] TrajError),
    #[error(transparent)]
    Predict(#[from] PredictError),
}

/// How tree edges are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerVariant {
    /// Frenet ego segments and per-substep re-prediction on the extended branch.
    #[default]
    Full,
    /// Agents are predicted once from the decision root and replayed on every
    /// branch, so their motion ignores the ego's choices.
    PredictOnce,
    /// Ego follows a fixed kinematic profile per action instead of the
    /// Frenet planning set.
    FixedProfiles,
}

/// The fifteen target speeds 0.5, 1.5, ..., 14.5 m/s.
pub fn default_actions() -> Vec<f64> {
    (0..15).map(|k| 0.5 + k as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Target speeds, m/s, strictly increasing.
    pub actions: Vec<f64>,
    pub iterations: usize,
    /// Tree depth in macro-steps.
    pub max_depth: usize,
    pub exploration_c: f64,
    pub discount: f64,
    pub rollout_depth: usize,
    /// Seconds per tree edge; a whole number of simulation steps.
    pub macro_step: f64,
    pub rng_seed: u64,
    pub mode_policy: ModePolicy,
    pub variant: PlannerVariant,
    /// Keep the matching subtree between decisions when the world evolved
    /// exactly as the tree predicted.
    pub reuse_subtree: bool,
    /// Rollouts move agents at constant velocity instead of querying the predictor.
    pub cheap_rollout: bool,
    pub failure_penalty: f64,
    /// Acceleration magnitude of the fixed profiles, m/s^2.
    pub fixed_accel: f64,
    /// Simulated time after which an episode times out, seconds.
    pub time_budget: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            actions: default_actions(),
            iterations: 300,
            max_depth: 3,
            exploration_c: 1.0,
            discount: 0.9,
            rollout_depth: 2,
            macro_step: 1.0,
            rng_seed: 7,
            mode_policy: ModePolicy::MostProbable,
            variant: PlannerVariant::Full,
            reuse_subtree: false,
            cheap_rollout: false,
            failure_penalty: -100.0,
            fixed_accel: 3.0,
            time_budget: 30.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::Config(m.to_string()));
        if self.actions.is_empty() {
            return bad("actions must be non-empty");
        }
        if self.actions.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return bad("actions must be positive and finite");
        }
        if self.actions.windows(2).any(|w| w[1] <= w[0]) {
            return bad("actions must be strictly increasing");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return bad("discount must lie in (0, 1]");
        }
        if !(self.exploration_c >= 0.0) {
            return bad("exploration_c must be non-negative");
        }
        let steps = self.macro_step / DT;
        if !(steps >= 0.5) || (steps - steps.round()).abs() > 1e-6 {
            return bad("macro_step must be a positive multiple of 0.1 s");
        }
        if !self.failure_penalty.is_finite() {
            return bad("failure_penalty must be finite");
        }
        if !(self.fixed_accel > 0.0) {
            return bad("fixed_accel must be positive");
        }
        if !(self.time_budget > 0.0) {
            return bad("time_budget must be positive");
        }
        Ok(())
    }

    /// Simulation steps per macro-step.
    pub fn substeps(&self) -> usize {
        (self.macro_step / DT).round() as usize
    }

    pub fn search_params(&self) -> mcts::SearchParams {
        mcts::SearchParams {
            iterations: self.iterations,
            max_depth: self.max_depth,
            exploration_c: self.exploration_c,
            discount: self.discount,
            rollout_depth: self.rollout_depth,
            failure_penalty: self.failure_penalty,
        }
    }
}
