use serde::{Deserialize, Serialize};

use crate::planner::min_clearance;
use crate::planner::{EpisodeLog, EpisodeStatus};

/// Episode-level evaluation numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub scenario: String,
    pub status: EpisodeStatus,
    /// Seconds of simulated driving.
    pub completion_time: f64,
    /// Path length over completion time, m/s.
    pub avg_velocity: f64,
    /// Smallest ego-to-agent rectangle clearance, meters (negative on
    /// overlap). Absent when the scene has no other agents.
    pub collision_distance: Option<f64>,
    /// Mean distance to the recorded ego trajectory over the shared steps.
    pub planning_error: Option<f64>,
    pub decisions: usize,
    pub steps: usize,
}

/// Recomputes every metric from a log alone.
pub fn compute_metrics(log: &EpisodeLog) -> Metrics {
    let ego = log.ego_states();
    let agents = log.agent_states();
    let steps = ego.len() - 1;
    let completion_time = steps as f64 * log.header.dt;
    let path_length: f64 = ego.windows(2).map(|w| w[0].distance_to(&w[1])).sum();
    let avg_velocity = if completion_time > 0.0 {
        path_length / completion_time
    } else {
        0.0
    };
    let collision_distance = ego
        .iter()
        .zip(&agents)
        .filter_map(|(e, a)| min_clearance(e, a, &log.header.footprints))
        .min_by(f64::total_cmp);
    let reference = &log.header.reference;
    let shared = steps.min(reference.len());
    let planning_error = (shared > 0).then(|| {
        (0..shared)
            .map(|k| {
                let p = ego[k + 1].position();
                (p[0] - reference[k][0]).hypot(p[1] - reference[k][1])
            })
            .sum::<f64>()
            / shared as f64
    });
    Metrics {
        scenario: log.header.scenario.clone(),
        status: log.summary.status,
        completion_time,
        avg_velocity,
        collision_distance,
        planning_error,
        decisions: log.steps.len(),
        steps,
    }
}

pub const CSV_HEADER: &str = "scenario,mode,status,completion_time,avg_velocity,collision_distance,planning_error";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.3}"))
}

impl Metrics {
    pub fn csv_row(&self, mode: &str) -> String {
        format!(
            "{},{},{},{:.1},{:.3},{},{}",
            self.scenario,
            mode,
            self.status,
            self.completion_time,
            self.avg_velocity,
            opt(self.collision_distance),
            opt(self.planning_error)
        )
    }
}
