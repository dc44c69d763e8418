//! Scenario domain types, the versioned scenario JSON format, and centerline
//! resampling.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::wrap_angle;

/// Simulation clock period in seconds. Every horizon is an integer number of
/// these steps.
pub const DT: f64 = 0.1;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_OBSERVATION_STEPS: usize = 50;
pub const DEFAULT_PLANNING_STEPS: usize = 60;
pub const DEFAULT_FOOTPRINT: Footprint = Footprint {
    length: 4.8,
    width: 2.0,
};
pub const DEFAULT_GOAL_RADIUS: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("resample spacing must be positive, got {0}")]
    BadSpacing(f64),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Pose and velocity of one agent at one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// Radians in `[-pi, pi)`.
    pub heading: f64,
}

impl AgentState {
    pub fn new(x: f64, y: f64, vx: f64, vy: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            vx,
            vy,
            heading: wrap_angle(heading),
        }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance_to(&self, other: &AgentState) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.vx, self.vy, self.heading]
            .iter()
            .all(|v| v.is_finite())
    }
}

impl Serialize for AgentState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y, self.vx, self.vy, self.heading].serialize(s)
    }
}

impl<'de> Deserialize<'de> for AgentState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y, vx, vy, heading] = <[f64; 5]>::deserialize(d)?;
        Ok(Self { x, y, vx, vy, heading })
    }
}

/// Rectangle footprint, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub length: f64,
    pub width: f64,
}

impl Serialize for Footprint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.length, self.width].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Footprint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [length, width] = <[f64; 2]>::deserialize(d)?;
        Ok(Self { length, width })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentTrack {
    pub id: String,
    pub footprint: Footprint,
    /// Uniformly spaced at [`DT`]. The first `observation_horizon` states are
    /// the observed history; anything after is a recorded future.
    pub states: Vec<AgentState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaneCenterline {
    pub id: String,
    pub points: Vec<[f64; 2]>,
    pub successors: Vec<String>,
    pub speed_limit: f64,
}

impl LaneCenterline {
    pub fn length(&self) -> f64 {
        polyline_length(&self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Goal {
    pub x: f64,
    pub y: f64,
    #[serde(default = "default_goal_radius")]
    pub radius: f64,
}

impl Goal {
    pub fn reached_by(&self, s: &AgentState) -> bool {
        (s.x - self.x).hypot(s.y - self.y) <= self.radius
    }
}

fn default_goal_radius() -> f64 {
    DEFAULT_GOAL_RADIUS
}

/// The planner's input world. `tracks[0]` is always the ego vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub lanes: Vec<LaneCenterline>,
    pub tracks: Vec<AgentTrack>,
    pub ego_route: Vec<String>,
    pub goal: Goal,
    pub observation_horizon: usize,
    pub planning_horizon: usize,
}

impl Scenario {
    pub fn ego(&self) -> &AgentTrack {
        &self.tracks[0]
    }

    pub fn lane(&self, id: &str) -> Option<&LaneCenterline> {
        self.lanes.iter().find(|l| l.id == id)
    }

    /// Index of the last observed state, i.e. the planning start time.
    pub fn current_step(&self) -> usize {
        self.observation_horizon - 1
    }

    /// States of every track at the planning start time, ego first.
    pub fn current_states(&self) -> Vec<AgentState> {
        let t = self.current_step();
        self.tracks.iter().map(|tr| tr.states[t]).collect()
    }

    /// Recorded ego states after the observation window, if the file carries any.
    pub fn recorded_ego_future(&self) -> &[AgentState] {
        let ego = self.ego();
        if ego.states.len() > self.observation_horizon {
            &ego.states[self.observation_horizon..]
        } else {
            &[]
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }

    fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        if file.schema != SCHEMA_VERSION {
            return Err(invalid(
                "schema",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", file.schema),
            ));
        }
        let lanes: Vec<LaneCenterline> = file
            .lanes
            .into_iter()
            .map(|l| LaneCenterline {
                id: l.id,
                points: l.points,
                successors: l.successors,
                speed_limit: l.speed_limit,
            })
            .collect();

        let mut ego = None;
        let mut others = Vec::new();
        for (i, t) in file.tracks.into_iter().enumerate() {
            let track = AgentTrack {
                id: t.id,
                footprint: t.footprint.unwrap_or(DEFAULT_FOOTPRINT),
                states: t
                    .states
                    .into_iter()
                    .map(|s| AgentState {
                        heading: wrap_angle(s.heading),
                        ..s
                    })
                    .collect(),
            };
            if t.is_ego {
                if ego.is_some() {
                    return Err(invalid(format!("tracks[{i}].is_ego"), "more than one ego track"));
                }
                ego = Some(track);
            } else {
                others.push(track);
            }
        }
        let ego = ego.ok_or_else(|| invalid("tracks", "no track has is_ego = true"))?;
        let mut tracks = vec![ego];
        tracks.extend(others);

        let scenario = Scenario {
            name: file.name.unwrap_or_default(),
            lanes,
            tracks,
            ego_route: file.ego_route,
            goal: file.goal,
            observation_horizon: file.observation_horizon.unwrap_or(DEFAULT_OBSERVATION_STEPS),
            planning_horizon: file.planning_horizon.unwrap_or(DEFAULT_PLANNING_STEPS),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            schema: SCHEMA_VERSION,
            name: (!self.name.is_empty()).then(|| self.name.clone()),
            lanes: self
                .lanes
                .iter()
                .map(|l| LaneFile {
                    id: l.id.clone(),
                    points: l.points.clone(),
                    successors: l.successors.clone(),
                    speed_limit: l.speed_limit,
                })
                .collect(),
            tracks: self
                .tracks
                .iter()
                .enumerate()
                .map(|(i, t)| TrackFile {
                    id: t.id.clone(),
                    is_ego: i == 0,
                    footprint: Some(t.footprint),
                    states: t.states.clone(),
                })
                .collect(),
            ego_route: self.ego_route.clone(),
            goal: self.goal,
            observation_horizon: Some(self.observation_horizon),
            planning_horizon: Some(self.planning_horizon),
        }
    }

    /// Checks every type invariant. `load_scenario` calls this; programmatic
    /// builders should too.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.observation_horizon == 0 {
            return Err(invalid("observation_horizon", "must be at least 1"));
        }
        if self.planning_horizon == 0 {
            return Err(invalid("planning_horizon", "must be at least 1"));
        }
        let mut ids: HashMap<&str, usize> = HashMap::new();
        for (i, lane) in self.lanes.iter().enumerate() {
            let f = |k: &str| format!("lanes[{i}].{k}");
            if ids.insert(lane.id.as_str(), i).is_some() {
                return Err(invalid(f("id"), format!("duplicate lane id '{}'", lane.id)));
            }
            if lane.points.len() < 2 {
                return Err(invalid(f("points"), "a lane needs at least 2 points"));
            }
            for (j, w) in lane.points.windows(2).enumerate() {
                if !(w[0][0].is_finite() && w[0][1].is_finite() && w[1][0].is_finite() && w[1][1].is_finite()) {
                    return Err(invalid(f("points"), format!("non-finite coordinate near index {j}")));
                }
                if (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]) <= 0.0 {
                    return Err(invalid(f("points"), format!("points {j} and {} coincide", j + 1)));
                }
            }
            if !(lane.speed_limit.is_finite() && lane.speed_limit > 0.0) {
                return Err(invalid(f("speed_limit"), "must be positive"));
            }
        }
        for (i, lane) in self.lanes.iter().enumerate() {
            for (j, succ) in lane.successors.iter().enumerate() {
                if !ids.contains_key(succ.as_str()) {
                    return Err(invalid(
                        format!("lanes[{i}].successors[{j}]"),
                        format!("unknown lane id '{succ}'"),
                    ));
                }
            }
        }

        if self.ego_route.is_empty() {
            return Err(invalid("ego_route", "route is empty"));
        }
        for (i, id) in self.ego_route.iter().enumerate() {
            if !ids.contains_key(id.as_str()) {
                return Err(invalid(format!("ego_route[{i}]"), format!("unknown lane id '{id}'")));
            }
        }
        for (i, pair) in self.ego_route.windows(2).enumerate() {
            let from = &self.lanes[ids[pair[0].as_str()]];
            if !from.successors.iter().any(|s| s == &pair[1]) {
                return Err(invalid(
                    format!("ego_route[{}]", i + 1),
                    format!("lane '{}' is not a successor of '{}'", pair[1], pair[0]),
                ));
            }
        }

        if self.tracks.is_empty() {
            return Err(invalid("tracks", "no ego track"));
        }
        for (i, t) in self.tracks.iter().enumerate() {
            let f = |k: &str| format!("tracks[{i}].{k}");
            if !(t.footprint.length > 0.0 && t.footprint.width > 0.0) {
                return Err(invalid(f("footprint"), "dimensions must be positive"));
            }
            if t.states.len() < self.observation_horizon {
                return Err(invalid(
                    f("states"),
                    format!(
                        "{} states do not cover the {}-step observation window",
                        t.states.len(),
                        self.observation_horizon
                    ),
                ));
            }
            if let Some(j) = t.states.iter().position(|s| !s.is_finite()) {
                return Err(invalid(f("states"), format!("non-finite value in state {j}")));
            }
        }
        if !(self.goal.x.is_finite() && self.goal.y.is_finite() && self.goal.radius > 0.0) {
            return Err(invalid("goal", "coordinates must be finite and radius positive"));
        }
        Ok(())
    }
}

/// Reads and validates a scenario JSON file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut scenario = Scenario::from_json_str(&text)?;
    if scenario.name.is_empty() {
        scenario.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(scenario)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    lanes: Vec<LaneFile>,
    tracks: Vec<TrackFile>,
    ego_route: Vec<String>,
    goal: Goal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    observation_horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    planning_horizon: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LaneFile {
    id: String,
    points: Vec<[f64; 2]>,
    #[serde(default)]
    successors: Vec<String>,
    speed_limit: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackFile {
    id: String,
    #[serde(default)]
    is_ego: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    footprint: Option<Footprint>,
    states: Vec<AgentState>,
}

pub fn polyline_length(points: &[[f64; 2]]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .sum()
}

/// Cumulative arc length at each vertex.
pub fn cumulative_arc_length(points: &[[f64; 2]]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in points.windows(2) {
        acc += (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        out.push(acc);
    }
    out
}

/// Resamples a polyline at uniform arc-length spacing no larger than `spacing`.
/// Both endpoints are kept bit-exact.
pub fn resample_polyline(points: &[[f64; 2]], spacing: f64) -> Result<Vec<[f64; 2]>, ScenarioError> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(ScenarioError::BadSpacing(spacing));
    }
    let cum = cumulative_arc_length(points);
    let total = *cum.last().unwrap_or(&0.0);
    if points.len() < 2 || total <= 0.0 {
        return Ok(points.to_vec());
    }
    let segments = ((total / spacing) - 1e-9).ceil().max(1.0) as usize;
    let step = total / segments as f64;
    let mut out = Vec::with_capacity(segments + 1);
    out.push(points[0]);
    let mut seg = 0;
    for k in 1..segments {
        let s = k as f64 * step;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let u = if len > 0.0 { (s - cum[seg]) / len } else { 0.0 };
        let (a, b) = (points[seg], points[seg + 1]);
        out.push([a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]);
    }
    out.push(*points.last().unwrap());
    Ok(out)
}

pub fn resample_centerline(lane: &LaneCenterline, spacing: f64) -> Result<LaneCenterline, ScenarioError> {
    Ok(LaneCenterline {
        points: resample_polyline(&lane.points, spacing)?,
        ..lane.clone()
    })
}
