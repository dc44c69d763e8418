//! Five-term segment cost: speed efficiency, acceleration and steering
//! smoothness, harsh acceleration/braking, and a sigmoid collision-proximity
//! term in the ego body frame.
//!
//! The weighted sum is reward-like: the speed term carries a positive weight
//! and the four penalty terms negative ones.

use serde::{Deserialize, Serialize};

use crate::scene::AgentState;

/// Speeds at or below this are clamped before evaluating the speed term.
pub const MIN_SPEED_FOR_COST: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub w5: f64,
    pub v_max: f64,
    /// Comfortable acceleration bound, m/s^2.
    pub alpha: f64,
    /// Comfortable braking bound, m/s^2 (negative).
    pub beta: f64,
    pub kappa: f64,
    pub l_x: f64,
    pub l_y: f64,
    pub lambda_x: f64,
    pub lambda_y: f64,
    /// When true the planner maximizes `-total`, reading the sum as a cost.
    /// The default (false) maximizes `total` itself, which is what its sign
    /// structure calls for.
    pub reward_is_negcost: bool,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: -0.01,
            w3: -1.5,
            w4: -1.0,
            w5: -14.0,
            v_max: 15.0,
            alpha: 4.0,
            beta: -5.0,
            kappa: 15.0,
            l_x: 10.0,
            l_y: 2.0,
            lambda_x: 0.5,
            lambda_y: 9.0,
            reward_is_negcost: false,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.kappa > 0.0) {
            return Err("kappa must be positive");
        }
        if !(self.l_x > 0.0 && self.l_y > 0.0) {
            return Err("l_x and l_y must be positive");
        }
        if !(self.v_max > 0.0) {
            return Err("v_max must be positive");
        }
        Ok(())
    }

    /// Planner reward for a segment with the given weighted total.
    pub fn reward(&self, total: f64) -> f64 {
        if self.reward_is_negcost {
            -total
        } else {
            total
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub total: f64,
    /// The speed term was evaluated at [`MIN_SPEED_FOR_COST`].
    pub speed_clamped: bool,
}

/// One control sample of the ego vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EgoControlSample {
    pub t: usize,
    pub accel: f64,
    pub steer: f64,
}

/// `1 - ((v - v_max) / v)^2`, with `v` clamped to [`MIN_SPEED_FOR_COST`].
/// Returns the value and whether the clamp applied.
pub fn speed_cost(v_tau: f64, v_max: f64) -> (f64, bool) {
    let clamped = !(v_tau > MIN_SPEED_FOR_COST);
    let v = if clamped { MIN_SPEED_FOR_COST } else { v_tau };
    let r = (v - v_max) / v;
    (1.0 - r * r, clamped)
}

/// Sums of squared consecutive differences of acceleration and steering.
pub fn smoothness_costs(controls: &[EgoControlSample]) -> (f64, f64) {
    controls.windows(2).fold((0.0, 0.0), |(c2, c3), w| {
        (
            c2 + (w[1].accel - w[0].accel).powi(2),
            c3 + (w[1].steer - w[0].steer).powi(2),
        )
    })
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn harshness_cost(controls: &[EgoControlSample], w: &CostWeights) -> f64 {
    controls
        .iter()
        .map(|c| softplus(w.kappa * (c.accel - w.alpha)) + softplus(-w.kappa * (c.accel - w.beta)))
        .sum()
}

/// Sigmoid shifted to pass through the origin.
pub fn shifted_sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp()) - 0.5
}

/// Per-step proximity term for a body-frame offset `(dx, dy)`.
pub fn proximity(dx: f64, dy: f64, w: &CostWeights) -> f64 {
    let sx = shifted_sigmoid(w.lambda_x * (dx + w.l_x)) + shifted_sigmoid(w.lambda_x * (w.l_x - dx));
    let sy = shifted_sigmoid(w.lambda_y * (dy + w.l_y)) + shifted_sigmoid(w.lambda_y * (w.l_y - dy));
    sx * sy
}

/// Body-frame offset from `ego` to `other`'s center.
pub fn body_frame_offset(ego: &AgentState, other: &AgentState) -> (f64, f64) {
    let (dx, dy) = (other.x - ego.x, other.y - ego.y);
    let (s, c) = ego.heading.sin_cos();
    (c * dx + s * dy, -s * dx + c * dy)
}

/// Body-frame offset of the nearest (by center distance) agent at each step.
/// `others[t]` holds the surrounding agents at step `t`.
pub fn nearest_offsets(ego_states: &[AgentState], others: &[Vec<AgentState>]) -> Vec<Option<(f64, f64)>> {
    ego_states
        .iter()
        .zip(others)
        .map(|(e, agents)| {
            agents
                .iter()
                .min_by(|a, b| e.distance_to(a).total_cmp(&e.distance_to(b)))
                .map(|a| body_frame_offset(e, a))
        })
        .collect()
}

/// Sum of per-step proximity terms; steps without agents contribute zero.
pub fn collision_cost(offsets: &[Option<(f64, f64)>], w: &CostWeights) -> f64 {
    offsets.iter().flatten().map(|&(dx, dy)| proximity(dx, dy, w)).sum()
}

/// Everything needed to cost one simulated ego segment.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a> {
    /// Ego states at the segment's steps (excluding the start state).
    pub ego: &'a [AgentState],
    /// Controls applied during the segment, one per ego state.
    pub controls: &'a [EgoControlSample],
    /// Last control before the segment, if any; enters the smoothness terms.
    pub prev_control: Option<EgoControlSample>,
    /// Surrounding agents at each step, aligned with `ego`.
    pub others: &'a [Vec<AgentState>],
}

pub fn segment_cost(seg: &Segment<'_>, w: &CostWeights) -> CostBreakdown {
    let v_tau = seg.ego.last().map(|s| s.speed()).unwrap_or(0.0);
    let (c1, speed_clamped) = speed_cost(v_tau, w.v_max);
    let (c2, c3) = match seg.prev_control {
        Some(p) => {
            let mut with_prev = Vec::with_capacity(seg.controls.len() + 1);
            with_prev.push(p);
            with_prev.extend_from_slice(seg.controls);
            smoothness_costs(&with_prev)
        }
        None => smoothness_costs(seg.controls),
    };
    let c4 = harshness_cost(seg.controls, w);
    let c5 = collision_cost(&nearest_offsets(seg.ego, seg.others), w);
    let total = w.w1 * c1 + w.w2 * c2 + w.w3 * c3 + w.w4 * c4 + w.w5 * c5;
    CostBreakdown {
        c1,
        c2,
        c3,
        c4,
        c5,
        total,
        speed_clamped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl(accel: f64, steer: f64) -> EgoControlSample {
        EgoControlSample { t: 0, accel, steer }
    }

    #[test]
    fn speed_term_values() {
        assert_eq!(speed_cost(15.0, 15.0), (1.0, false));
        assert_eq!(speed_cost(7.5, 15.0), (0.0, false));
        assert!((speed_cost(30.0, 15.0).0 - 0.75).abs() < 1e-15);
        let (v, clamped) = speed_cost(0.0, 15.0);
        assert!(clamped);
        assert_eq!(v, speed_cost(MIN_SPEED_FOR_COST, 15.0).0);
    }

    #[test]
    fn smoothness_values() {
        assert_eq!(smoothness_costs(&[ctl(1.0, 0.2); 4]), (0.0, 0.0));
        assert_eq!(smoothness_costs(&[ctl(0.0, 0.0), ctl(1.0, 0.0), ctl(0.0, 0.0)]).0, 2.0);
        assert!((smoothness_costs(&[ctl(0.0, 0.0), ctl(0.0, 0.1)]).1 - 0.01).abs() < 1e-15);
        assert_eq!(smoothness_costs(&[ctl(3.0, 1.0)]), (0.0, 0.0));
        assert_eq!(smoothness_costs(&[]), (0.0, 0.0));
    }

    #[test]
    fn harshness_values() {
        let w = CostWeights::default();
        assert!(harshness_cost(&[ctl(0.0, 0.0)], &w) < 1e-20);
        assert!((harshness_cost(&[ctl(4.0, 0.0)], &w) - 2f64.ln()).abs() < 1e-9);
        assert!((harshness_cost(&[ctl(8.0, 0.0)], &w) - 60.0).abs() < 1e-9);
        for a in [-1e6, -1e3, 1e3, 1e6] {
            assert!(harshness_cost(&[ctl(a, 0.0)], &w).is_finite());
        }
    }

    #[test]
    fn proximity_values() {
        let w = CostWeights::default();
        assert_eq!(shifted_sigmoid(0.0), 0.0);
        assert!((proximity(0.0, 0.0, &w) - 0.98661).abs() < 1e-5);
        assert!(proximity(100.0, 100.0, &w) < 1e-10);
        assert!(proximity(100.0, 100.0, &w) < proximity(50.0, 100.0, &w) || proximity(50.0, 100.0, &w) == 0.0);
        assert_eq!(collision_cost(&[None, None], &w), 0.0);
    }

    #[test]
    fn body_frame_rotation() {
        let ego = AgentState::new(1.0, 1.0, 0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let other = AgentState::new(1.0, 4.0, 0.0, 0.0, 0.0);
        let (dx, dy) = body_frame_offset(&ego, &other);
        assert!((dx - 3.0).abs() < 1e-12 && dy.abs() < 1e-12);
    }

    #[test]
    fn empty_world_segment_at_speed_limit() {
        let w = CostWeights::default();
        let ego = vec![AgentState::new(0.0, 0.0, 15.0, 0.0, 0.0); 10];
        let controls = vec![ctl(0.0, 0.0); 10];
        let others = vec![vec![]; 10];
        let b = segment_cost(
            &Segment {
                ego: &ego,
                controls: &controls,
                prev_control: None,
                others: &others,
            },
            &w,
        );
        assert_eq!((b.c1, b.c2, b.c3, b.c5), (1.0, 0.0, 0.0, 0.0));
        assert!(b.c4 < 1e-20);
        assert!((b.total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reward_sign_switch() {
        let mut w = CostWeights::default();
        assert_eq!(w.reward(2.5), 2.5);
        w.reward_is_negcost = true;
        assert_eq!(w.reward(2.5), -2.5);
    }
}
