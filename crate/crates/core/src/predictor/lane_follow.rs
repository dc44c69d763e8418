use std::sync::Arc;

use crate::frenet::{to_cartesian, to_frenet, to_frenet_near, FrenetState, ReferenceLine};
use crate::geometry::wrap_angle;
use crate::scene::{AgentState, Footprint, Scenario, DT};

use super::{
    constant_velocity_path, observed_frames, AgentPrediction, BranchContext, Counters, PredictError, PredictionSet,
    Predictor, PredictorStats,
};

/// Agents further than this from every lane are extrapolated straight.
const MAX_ASSIGN_OFFSET: f64 = 2.5;
/// Successor chaining stops after this much extra length.
const CHAIN_LOOKAHEAD: f64 = 200.0;
/// Search window for re-projecting an agent after one step.
const TRACK_WINDOW: f64 = 15.0;
/// How far ahead of an agent the ego is considered a leader.
const LEADER_RANGE: f64 = 50.0;

/// Intelligent-driver parameters used by the yielding variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmParams {
    pub max_accel: f64,
    pub comfort_decel: f64,
    pub time_headway: f64,
    pub min_gap: f64,
    pub max_decel: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            max_accel: 2.0,
            comfort_decel: 3.0,
            time_headway: 1.2,
            min_gap: 2.0,
            max_decel: 8.0,
        }
    }
}

impl IdmParams {
    /// Acceleration for speed `v` (desired `v0`) behind a leader at `gap`
    /// moving at `v_lead`.
    pub fn accel(&self, v: f64, v0: f64, gap: f64, v_lead: f64) -> f64 {
        let v0 = v0.max(0.5);
        let s_star = self.min_gap
            + (v * self.time_headway + v * (v - v_lead) / (2.0 * (self.max_accel * self.comfort_decel).sqrt()))
                .max(0.0);
        let gap = gap.max(0.1);
        let a = self.max_accel * (1.0 - (v / v0).powi(4) - (s_star / gap).powi(2));
        a.max(-self.max_decel)
    }
}

/// Processed map: one reference line per lane, extended through its first
/// successors so agents can be followed across junctions.
struct MapEncoding {
    lines: Vec<ReferenceLine>,
    footprints: Vec<Footprint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Anchor {
    lane: usize,
    s: f64,
    d: f64,
}

struct LaneCache {
    map: Arc<MapEncoding>,
    /// Per track; `None` for the ego and for agents off every lane.
    anchors: Vec<Option<Anchor>>,
}

/// Follows the lane an agent currently occupies at constant speed and
/// constant lateral offset. The yielding variant slows down behind the ego
/// when the ego is ahead in the agent's lane.
#[derive(Debug, Default)]
pub struct LaneFollow {
    yield_to_ego: bool,
    idm: IdmParams,
    counters: Counters,
}

fn encode_map(scenario: &Scenario) -> MapEncoding {
    let lines = scenario
        .lanes
        .iter()
        .filter_map(|lane| {
            let mut pts = lane.points.clone();
            let mut visited = vec![lane.id.as_str()];
            let mut extra = 0.0;
            let mut cur = lane;
            while extra < CHAIN_LOOKAHEAD {
                let Some(next) = cur.successors.first().and_then(|id| scenario.lane(id)) else {
                    break;
                };
                if visited.contains(&next.id.as_str()) {
                    break;
                }
                visited.push(&next.id);
                let last = *pts.last().expect("lane has points");
                let skip = usize::from(
                    next.points[0] == last || (next.points[0][0] - last[0]).hypot(next.points[0][1] - last[1]) < 0.05,
                );
                pts.extend_from_slice(&next.points[skip..]);
                extra += next.length();
                cur = next;
            }
            match ReferenceLine::from_polyline(&pts) {
                Ok(line) => Some(line),
                Err(e) => {
                    log::warn!("lane '{}' skipped by the lane-following predictor: {e}", lane.id);
                    None
                }
            }
        })
        .collect();
    MapEncoding {
        lines,
        footprints: scenario.tracks.iter().map(|t| t.footprint).collect(),
    }
}

fn heading_aligned(line: &ReferenceLine, fs: &FrenetState, state: &AgentState) -> bool {
    if state.speed() > 0.5 {
        fs.s_dot > 0.0
    } else {
        wrap_angle(state.heading - line.eval(fs.s).heading).abs() < std::f64::consts::FRAC_PI_2
    }
}

fn assign(map: &MapEncoding, state: &AgentState) -> Option<Anchor> {
    let mut best: Option<Anchor> = None;
    for (lane, line) in map.lines.iter().enumerate() {
        let Ok(fs) = to_frenet(line, state) else {
            continue;
        };
        if fs.d.abs() > MAX_ASSIGN_OFFSET || !heading_aligned(line, &fs, state) {
            continue;
        }
        if best.is_none_or(|b| fs.d.abs() < b.d.abs()) {
            best = Some(Anchor { lane, s: fs.s, d: fs.d });
        }
    }
    best
}

impl LaneFollow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn yielding() -> Self {
        Self {
            yield_to_ego: true,
            ..Self::default()
        }
    }

    /// Speed profile over `horizon` steps; constant unless the ego leads.
    fn speed_profile(
        &self,
        map: &MapEncoding,
        ego: &AgentState,
        agent: usize,
        a: &Anchor,
        v: f64,
        horizon: usize,
    ) -> Vec<f64> {
        let line = &map.lines[a.lane];
        let leader = if self.yield_to_ego {
            to_frenet_near(line, ego, a.s + LEADER_RANGE / 2.0, LEADER_RANGE / 2.0 + 1.0)
                .ok()
                .filter(|e| {
                    let ds = e.s - a.s;
                    ds > 0.0
                        && ds <= LEADER_RANGE
                        && (e.d - a.d).abs() < (map.footprints[0].width + map.footprints[agent].width) / 2.0 + 0.5
                })
        } else {
            None
        };
        let Some(lead) = leader else {
            return vec![v; horizon];
        };
        let half = (map.footprints[0].length + map.footprints[agent].length) / 2.0;
        let v_lead = lead.s_dot.max(0.0);
        let (mut s_lead, mut s, mut v_cur) = (lead.s, a.s, v);
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let acc = self.idm.accel(v_cur, v, s_lead - s - half, v_lead);
            v_cur = (v_cur + acc * DT).max(0.0);
            s += v_cur * DT;
            s_lead += v_lead * DT;
            out.push(v_cur);
        }
        out
    }
}

impl Predictor for LaneFollow {
    fn name(&self) -> &'static str {
        if self.yield_to_ego {
            "lane_follow_yield"
        } else {
            "lane_follow"
        }
    }

    fn window(&self) -> usize {
        1
    }

    fn init_branch(&self, scenario: &Scenario) -> BranchContext {
        self.counters.add_map_encoding();
        let map = Arc::new(encode_map(scenario));
        let frames = observed_frames(scenario);
        let tip = frames.last().expect("observation window is non-empty");
        let anchors = tip
            .iter()
            .enumerate()
            .map(|(i, s)| if i == 0 { None } else { assign(&map, s) })
            .collect();
        BranchContext::from_frames(frames, Arc::new(LaneCache { map, anchors }))
    }

    fn extend_branch(&self, ctx: &BranchContext, new_states: &[AgentState]) -> Result<BranchContext, PredictError> {
        let cache = ctx
            .cache_as::<LaneCache>()
            .expect("branch was not created by this predictor");
        if new_states.len() != cache.anchors.len() {
            return Err(PredictError::AgentCountMismatch {
                expected: cache.anchors.len(),
                got: new_states.len(),
            });
        }
        let anchors = cache
            .anchors
            .iter()
            .zip(new_states)
            .map(|(a, st)| {
                let a = (*a)?;
                to_frenet_near(&cache.map.lines[a.lane], st, a.s, TRACK_WINDOW)
                    .ok()
                    .filter(|fs| fs.d.abs() <= MAX_ASSIGN_OFFSET)
                    .map(|fs| Anchor {
                        lane: a.lane,
                        s: fs.s,
                        d: fs.d,
                    })
            })
            .collect();
        let child = ctx.child(
            new_states,
            Arc::new(LaneCache {
                map: cache.map.clone(),
                anchors,
            }),
        )?;
        self.counters.add_extend(new_states.len() as u64);
        Ok(child)
    }

    fn predict(&self, ctx: &BranchContext, horizon: usize) -> PredictionSet {
        self.counters.add_predict();
        let cache = ctx
            .cache_as::<LaneCache>()
            .expect("branch was not created by this predictor");
        let tip = ctx.tip();
        let agents = (1..tip.len())
            .map(|i| {
                let st = tip[i];
                let path = match cache.anchors[i] {
                    Some(a) => {
                        let line = &cache.map.lines[a.lane];
                        let speeds = self.speed_profile(&cache.map, &tip[0], i, &a, st.speed(), horizon);
                        let mut s = a.s;
                        let mut path = Vec::with_capacity(horizon);
                        for v in speeds {
                            s += v * DT;
                            let fs = FrenetState {
                                s,
                                d: a.d,
                                ..FrenetState::default()
                            };
                            match to_cartesian(line, &fs) {
                                Ok(c) => path.push([c.x, c.y]),
                                Err(_) => break,
                            }
                        }
                        if path.len() < horizon {
                            constant_velocity_path(&st, horizon)
                        } else {
                            path
                        }
                    }
                    None => constant_velocity_path(&st, horizon),
                };
                AgentPrediction::single_mode(i, st, path)
            })
            .collect();
        PredictionSet { agents }
    }

    fn stats(&self) -> PredictorStats {
        self.counters.snapshot()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idm_free_road_at_desired_speed() {
        let idm = IdmParams::default();
        assert!(idm.accel(10.0, 10.0, 1e6, 10.0).abs() < 1e-6);
    }

    #[test]
    fn idm_brakes_when_close() {
        let idm = IdmParams::default();
        assert!(idm.accel(10.0, 10.0, 5.0, 0.0) < -1.0);
        assert_eq!(idm.accel(10.0, 10.0, 0.0, 0.0), -idm.max_decel);
    }
}
