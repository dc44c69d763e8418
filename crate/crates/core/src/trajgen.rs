//! Ego planning-set generation in the Frenet frame.
//!
//! For one target speed the generator sweeps a grid of terminal times and
//! lateral offsets. Each grid point yields a quintic `d(t)` that lands on the
//! offset with zero lateral velocity and acceleration, and a quartic `s(t)`
//! that reaches the target speed with zero acceleration (terminal position is
//! left free). Candidates are realized in Cartesian space at the simulation
//! clock and scored by a jerk/time trade-off.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frenet::{to_cartesian, FrenetState, ReferenceLine};
use crate::geometry::wrap_angle;
use crate::scene::{AgentState, DT};

#[derive(Debug, Error, PartialEq)]
pub enum TrajError {
    #[error("invalid sampling config: {0}")]
    InvalidConfig(&'static str),
    #[error("target speed must be positive, got {0}")]
    BadTargetSpeed(f64),
    #[error("start state is not finite")]
    BadStart,
    #[error("sampling grid is empty")]
    EmptyGrid,
    #[error("no feasible trajectory among {0} candidates")]
    NoFeasible(usize),
}

/// Grid, scoring weights and hard feasibility limits for the planning set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub t_step: f64,
    /// Largest lateral offset sampled on either side of the reference line.
    pub d_max: f64,
    pub d_step: f64,
    pub k_jerk: f64,
    pub k_time: f64,
    pub k_offset: f64,
    pub k_speed: f64,
    pub max_accel: f64,
    pub max_curvature: f64,
    pub wheelbase: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            t_min: 2.0,
            t_max: 4.0,
            t_step: 1.0,
            d_max: 3.0,
            d_step: 1.0,
            k_jerk: 0.1,
            k_time: 0.1,
            k_offset: 1.0,
            k_speed: 1.0,
            max_accel: 8.0,
            max_curvature: 0.3,
            wheelbase: 2.8,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), TrajError> {
        if !(self.t_min > 0.0 && self.t_min <= self.t_max) {
            return Err(TrajError::InvalidConfig("need 0 < t_min <= t_max"));
        }
        if !(self.t_step > 0.0) {
            return Err(TrajError::InvalidConfig("t_step must be positive"));
        }
        if !(self.d_max > 0.0 && self.d_step > 0.0) {
            return Err(TrajError::InvalidConfig("d_max and d_step must be positive"));
        }
        if !(self.wheelbase > 0.0) {
            return Err(TrajError::InvalidConfig("wheelbase must be positive"));
        }
        Ok(())
    }

    /// Terminal times, ascending.
    pub fn durations(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let t = self.t_min + k as f64 * self.t_step;
            if t > self.t_max + 1e-9 {
                break;
            }
            out.push(t);
            k += 1;
        }
        out
    }

    /// Terminal lateral offsets, ascending and symmetric about zero.
    pub fn offsets(&self) -> Vec<f64> {
        let half = (self.d_max / self.d_step + 1e-9).floor() as i64;
        (-half..=half).map(|k| k as f64 * self.d_step).collect()
    }
}

/// Polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial(self.0.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect())
    }

    /// Exact `integral_0^t p(x)^2 dx`.
    pub fn square_integral(&self, t: f64) -> f64 {
        let n = self.0.len();
        if n == 0 {
            return 0.0;
        }
        let mut sq = vec![0.0; 2 * n - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in self.0.iter().enumerate() {
                sq[i + j] += a * b;
            }
        }
        sq.iter()
            .enumerate()
            .map(|(k, c)| c * t.powi(k as i32 + 1) / (k as f64 + 1.0))
            .sum()
    }
}

/// Quintic through position/velocity/acceleration at both ends of `[0, t]`.
pub fn quintic_coefficients(start: [f64; 3], end: [f64; 3], t: f64) -> [f64; 6] {
    let (a0, a1, a2) = (start[0], start[1], 0.5 * start[2]);
    let (t2, t3) = (t * t, t * t * t);
    let b1 = end[0] - a0 - a1 * t - a2 * t2;
    let b2 = end[1] - a1 - 2.0 * a2 * t;
    let b3 = end[2] - 2.0 * a2;
    let a3 = (10.0 * b1 - 4.0 * b2 * t + 0.5 * b3 * t2) / t3;
    let a4 = (-15.0 * b1 + 7.0 * b2 * t - b3 * t2) / (t3 * t);
    let a5 = (6.0 * b1 - 3.0 * b2 * t + 0.5 * b3 * t2) / (t3 * t2);
    [a0, a1, a2, a3, a4, a5]
}

/// Quartic through start position/velocity/acceleration and end
/// velocity/acceleration; the end position is free.
pub fn quartic_coefficients(start: [f64; 3], end_vel: f64, end_acc: f64, t: f64) -> [f64; 5] {
    let (a0, a1, a2) = (start[0], start[1], 0.5 * start[2]);
    let b2 = end_vel - a1 - 2.0 * a2 * t;
    let b3 = end_acc - 2.0 * a2;
    let a3 = (3.0 * b2 - b3 * t) / (3.0 * t * t);
    let a4 = (b3 * t - 2.0 * b2) / (4.0 * t * t * t);
    [a0, a1, a2, a3, a4]
}

/// One realized step of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajSample {
    pub t: f64,
    pub frenet: FrenetState,
    pub state: AgentState,
    /// Finite difference of Cartesian speed.
    pub accel: f64,
    /// Bicycle-model steering angle from path curvature.
    pub steer: f64,
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrenetTrajectory {
    pub lat_coeffs: [f64; 6],
    pub lon_coeffs: [f64; 5],
    pub duration: f64,
    pub target_speed: f64,
    pub target_offset: f64,
    /// At `t = 0, DT, 2 DT, ...` up to `duration`.
    pub samples: Vec<TrajSample>,
    pub jerk_integral: f64,
    pub score: f64,
    /// False when some sample hit the Frenet singularity.
    pub realizable: bool,
}

impl FrenetTrajectory {
    pub fn lateral(&self) -> Polynomial {
        Polynomial(self.lat_coeffs.to_vec())
    }

    pub fn longitudinal(&self) -> Polynomial {
        Polynomial(self.lon_coeffs.to_vec())
    }

    pub fn max_abs_accel(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.accel.abs()))
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.curvature.abs()))
    }

    pub fn max_abs_offset(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.frenet.d.abs()))
    }

    /// Hard limits: acceleration, path curvature, lateral corridor, and no
    /// reversing along the reference line.
    pub fn is_feasible(&self, cfg: &SamplingConfig) -> bool {
        self.realizable
            && self.score.is_finite()
            && self.max_abs_accel() <= cfg.max_accel
            && self.max_abs_curvature() <= cfg.max_curvature
            && self.max_abs_offset() <= cfg.d_max + 1e-9
            && self.samples.iter().all(|s| s.frenet.s_dot >= -1e-9)
    }
}

/// Path score: jerk/time compromise plus terminal offset and speed error.
pub fn path_score(
    jerk_integral: f64,
    duration: f64,
    terminal_offset: f64,
    terminal_speed: f64,
    target_speed: f64,
    cfg: &SamplingConfig,
) -> f64 {
    cfg.k_jerk * jerk_integral
        + cfg.k_time * duration
        + cfg.k_offset * terminal_offset * terminal_offset
        + cfg.k_speed * (terminal_speed - target_speed).powi(2)
}

/// Fills accel, curvature and steer from consecutive Cartesian states.
pub fn recover_controls(samples: &mut [TrajSample], wheelbase: f64) {
    let n = samples.len();
    if n < 2 {
        return;
    }
    for k in 1..n {
        let (a, b) = (samples[k - 1].state, samples[k].state);
        let dt = samples[k].t - samples[k - 1].t;
        samples[k].accel = (b.speed() - a.speed()) / dt;
        let ds = a.distance_to(&b);
        samples[k].curvature = if ds > 1e-3 {
            wrap_angle(b.heading - a.heading) / ds
        } else {
            0.0
        };
        samples[k].steer = (wheelbase * samples[k].curvature).atan();
    }
    samples[0].accel = samples[1].accel;
    samples[0].curvature = samples[1].curvature;
    samples[0].steer = samples[1].steer;
}

fn realize(
    line: &ReferenceLine,
    lat: &Polynomial,
    lon: &Polynomial,
    duration: f64,
    wheelbase: f64,
) -> (Vec<TrajSample>, bool) {
    let (lat1, lon1) = (lat.derivative(), lon.derivative());
    let (lat2, lon2) = (lat1.derivative(), lon1.derivative());
    let steps = (duration / DT).round() as usize;
    let mut realizable = true;
    let mut samples = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * DT;
        let frenet = FrenetState {
            s: lon.eval(t),
            d: lat.eval(t),
            s_dot: lon1.eval(t),
            d_dot: lat1.eval(t),
            s_ddot: lon2.eval(t),
            d_ddot: lat2.eval(t),
        };
        let state = match to_cartesian(line, &frenet) {
            Ok(s) => s,
            Err(_) => {
                realizable = false;
                AgentState::default()
            }
        };
        samples.push(TrajSample {
            t,
            frenet,
            state,
            accel: 0.0,
            steer: 0.0,
            curvature: 0.0,
        });
    }
    recover_controls(&mut samples, wheelbase);
    (samples, realizable)
}

/// Builds one candidate for terminal time `duration` and offset `offset`.
pub fn build_candidate(
    line: &ReferenceLine,
    start: &FrenetState,
    target_speed: f64,
    duration: f64,
    offset: f64,
    cfg: &SamplingConfig,
) -> FrenetTrajectory {
    let lat_coeffs = quintic_coefficients([start.d, start.d_dot, start.d_ddot], [offset, 0.0, 0.0], duration);
    let lon_coeffs = quartic_coefficients([start.s, start.s_dot, start.s_ddot], target_speed, 0.0, duration);
    let lat = Polynomial(lat_coeffs.to_vec());
    let lon = Polynomial(lon_coeffs.to_vec());
    let jerk_integral = lat.derivative().derivative().derivative().square_integral(duration)
        + lon.derivative().derivative().derivative().square_integral(duration);
    let score = path_score(
        jerk_integral,
        duration,
        lat.eval(duration),
        lon.derivative().eval(duration),
        target_speed,
        cfg,
    );
    let (samples, realizable) = realize(line, &lat, &lon, duration, cfg.wheelbase);
    FrenetTrajectory {
        lat_coeffs,
        lon_coeffs,
        duration,
        target_speed,
        target_offset: offset,
        samples,
        jerk_integral,
        score,
        realizable,
    }
}

/// One candidate per (duration, offset) grid point, durations outermost.
pub fn generate_planning_set(
    line: &ReferenceLine,
    start: &FrenetState,
    target_speed: f64,
    cfg: &SamplingConfig,
) -> Result<Vec<FrenetTrajectory>, TrajError> {
    cfg.validate()?;
    if !(target_speed > 0.0 && target_speed.is_finite()) {
        return Err(TrajError::BadTargetSpeed(target_speed));
    }
    let fields = [start.s, start.d, start.s_dot, start.d_dot, start.s_ddot, start.d_ddot];
    if !fields.iter().all(|v| v.is_finite()) {
        return Err(TrajError::BadStart);
    }
    let durations = cfg.durations();
    let offsets = cfg.offsets();
    if durations.is_empty() || offsets.is_empty() {
        return Err(TrajError::EmptyGrid);
    }
    let mut out = Vec::with_capacity(durations.len() * offsets.len());
    for &t in &durations {
        for &d in &offsets {
            out.push(build_candidate(line, start, target_speed, t, d, cfg));
        }
    }
    if !out.iter().any(|c| c.is_feasible(cfg)) {
        return Err(TrajError::NoFeasible(out.len()));
    }
    Ok(out)
}

/// Lowest-score feasible candidate; ties keep the earliest in grid order.
pub fn select_best_path(
    candidates: Vec<FrenetTrajectory>,
    cfg: &SamplingConfig,
) -> Result<FrenetTrajectory, TrajError> {
    let total = candidates.len();
    let mut best: Option<FrenetTrajectory> = None;
    for c in candidates {
        if !c.is_feasible(cfg) {
            continue;
        }
        if best.as_ref().is_none_or(|b| c.score < b.score) {
            best = Some(c);
        }
    }
    best.ok_or(TrajError::NoFeasible(total))
}

/// [`generate_planning_set`] followed by [`select_best_path`].
pub fn best_path(
    line: &ReferenceLine,
    start: &FrenetState,
    target_speed: f64,
    cfg: &SamplingConfig,
) -> Result<FrenetTrajectory, TrajError> {
    select_best_path(generate_planning_set(line, start, target_speed, cfg)?, cfg)
}
