use std::sync::Arc;

use crate::scene::{AgentState, Scenario, DT};

use super::{
    observed_frames, AgentPrediction, BranchContext, Counters, PredictError, PredictionSet, Predictor, PredictorStats,
};

struct Recording {
    tracks: Vec<Vec<AgentState>>,
}

/// Replays the recorded future of every agent, ignoring the ego. Past the
/// end of a recording the agent keeps its last recorded velocity.
///
/// Stands in for a learned model whose most likely mode matches the logged
/// behavior, and doubles as the non-reactive world in closed-loop runs.
#[derive(Debug, Default)]
pub struct Playback {
    counters: Counters,
}

impl Playback {
    pub fn new() -> Self {
        Self::default()
    }
}

fn recorded_position(track: &[AgentState], idx: usize) -> [f64; 2] {
    match track.get(idx) {
        Some(s) => s.position(),
        None => {
            let last = track.last().expect("tracks are non-empty");
            let t = (idx - (track.len() - 1)) as f64 * DT;
            [last.x + last.vx * t, last.y + last.vy * t]
        }
    }
}

impl Predictor for Playback {
    fn name(&self) -> &'static str {
        "playback"
    }

    fn window(&self) -> usize {
        1
    }

    fn init_branch(&self, scenario: &Scenario) -> BranchContext {
        self.counters.add_map_encoding();
        let rec = Recording {
            tracks: scenario.tracks.iter().map(|t| t.states.clone()).collect(),
        };
        BranchContext::from_frames(observed_frames(scenario), Arc::new(rec))
    }

    fn extend_branch(&self, ctx: &BranchContext, new_states: &[AgentState]) -> Result<BranchContext, PredictError> {
        let child = ctx.child(new_states, ctx.cache().clone())?;
        self.counters.add_extend(1);
        Ok(child)
    }

    fn predict(&self, ctx: &BranchContext, horizon: usize) -> PredictionSet {
        self.counters.add_predict();
        let rec = ctx
            .cache_as::<Recording>()
            .expect("branch was not created by this predictor");
        let tip = ctx.tip();
        let now = ctx.len() - 1;
        let agents = (1..tip.len())
            .map(|i| {
                let path = (1..=horizon)
                    .map(|k| recorded_position(&rec.tracks[i], now + k))
                    .collect();
                AgentPrediction::single_mode(i, tip[i], path)
            })
            .collect();
        PredictionSet { agents }
    }

    fn stats(&self) -> PredictorStats {
        self.counters.snapshot()
    }
}
