//! Arc-length reference lines and Cartesian/Frenet conversions.
//!
//! A [`ReferenceLine`] is a dense table sampled at uniform arc-length spacing
//! (at most [`REFERENCE_SPACING`]). Between samples position, tangent heading
//! and curvature are interpolated linearly, which makes the line a continuous
//! curve that both conversions agree on: `to_cartesian` places a point at
//! `r(s) + d * n(s)`, and `to_frenet` solves `(p - r(s)) . t(s) = 0` for `s`
//! on that same curve, so the round trip is exact up to root-finding tolerance.
//!
//! Lateral offsets are positive to the left of the tangent direction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::wrap_angle;
use crate::scene::{resample_polyline, AgentState, Scenario};

pub const REFERENCE_SPACING: f64 = 0.1;
/// Largest endpoint gap tolerated between consecutive route lanes.
pub const MAX_ROUTE_GAP: f64 = 0.5;
/// Points further than this from the line are not projected.
pub const MAX_LATERAL_OFFSET: f64 = 20.0;

const ENDPOINT_TOLERANCE: f64 = 1e-9;
const SINGULARITY_MARGIN: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum FrenetError {
    #[error("reference line needs at least two distinct points")]
    Degenerate,
    #[error("route lane '{lane}' is unknown")]
    UnknownLane { lane: String },
    #[error("route gap of {gap:.3} m between lanes '{from}' and '{to}' exceeds {MAX_ROUTE_GAP} m")]
    RouteGap { from: String, to: String, gap: f64 },
    #[error("point projects {overshoot:.3} m beyond the {end} of the reference line")]
    OutOfRange { end: LineEnd, overshoot: f64 },
    #[error("lateral offset {d:.3} m exceeds the {MAX_LATERAL_OFFSET} m projection bound")]
    TooFar { d: f64 },
    #[error("lateral offset {d:.3} m is at or beyond the center of curvature (kappa = {kappa:.4})")]
    Singular { d: f64, kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineEnd {
    Start,
    End,
}

impl std::fmt::Display for LineEnd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LineEnd::Start => "start",
            LineEnd::End => "end",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefSample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    /// Unwrapped, so adjacent samples never differ by more than pi.
    pub tangent_heading: f64,
    pub curvature: f64,
}

/// Interpolated point on a reference line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPoint {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub curvature: f64,
}

impl RefPoint {
    fn tangent(&self) -> [f64; 2] {
        [self.heading.cos(), self.heading.sin()]
    }

    fn normal(&self) -> [f64; 2] {
        [-self.heading.sin(), self.heading.cos()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceLine {
    samples: Vec<RefSample>,
    spacing: f64,
    total_length: f64,
}

/// Position and derivatives in the curvilinear frame of a reference line.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrenetState {
    pub s: f64,
    pub d: f64,
    pub s_dot: f64,
    pub d_dot: f64,
    pub s_ddot: f64,
    pub d_ddot: f64,
}

impl ReferenceLine {
    /// Builds a reference line through `points`, resampled at
    /// [`REFERENCE_SPACING`] or finer.
    pub fn from_polyline(points: &[[f64; 2]]) -> Result<Self, FrenetError> {
        let mut pts: Vec<[f64; 2]> = Vec::with_capacity(points.len());
        for &p in points {
            if pts
                .last()
                .is_none_or(|q: &[f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]) > 1e-9)
            {
                pts.push(p);
            }
        }
        if pts.len() < 2 {
            return Err(FrenetError::Degenerate);
        }
        let dense = resample_polyline(&pts, REFERENCE_SPACING).map_err(|_| FrenetError::Degenerate)?;
        let n = dense.len();
        let total_length = crate::scene::polyline_length(&pts);
        let spacing = total_length / (n - 1) as f64;

        let mut headings = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (dense[i.saturating_sub(1)], dense[(i + 1).min(n - 1)]);
            headings.push((b[1] - a[1]).atan2(b[0] - a[0]));
        }
        for i in 1..n {
            let delta = wrap_angle(headings[i] - headings[i - 1]);
            headings[i] = headings[i - 1] + delta;
        }
        // One-sided differences at the ends lag by half a sample; extrapolate
        // from the interior instead.
        if n >= 4 {
            headings[0] = 2.0 * headings[1] - headings[2];
            headings[n - 1] = 2.0 * headings[n - 2] - headings[n - 3];
        }
        let mut curvature = vec![0.0; n];
        if n >= 3 {
            for i in 1..n - 1 {
                curvature[i] = (headings[i + 1] - headings[i - 1]) / (2.0 * spacing);
            }
            curvature[0] = curvature[1];
            curvature[n - 1] = curvature[n - 2];
        }
        let samples = (0..n)
            .map(|i| RefSample {
                s: if i == n - 1 { total_length } else { i as f64 * spacing },
                x: dense[i][0],
                y: dense[i][1],
                tangent_heading: headings[i],
                curvature: curvature[i],
            })
            .collect();
        Ok(Self {
            samples,
            spacing,
            total_length,
        })
    }

    pub fn samples(&self) -> &[RefSample] {
        &self.samples
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Interpolates the line at arc length `s`. Outside `[0, total_length]`
    /// the line continues straight along its end tangents.
    pub fn eval(&self, s: f64) -> RefPoint {
        let first = &self.samples[0];
        let last = &self.samples[self.samples.len() - 1];
        if s <= 0.0 {
            let (sn, cs) = first.tangent_heading.sin_cos();
            return RefPoint {
                x: first.x + s * cs,
                y: first.y + s * sn,
                heading: first.tangent_heading,
                curvature: if s == 0.0 { first.curvature } else { 0.0 },
            };
        }
        if s >= self.total_length {
            let extra = s - self.total_length;
            let (sn, cs) = last.tangent_heading.sin_cos();
            return RefPoint {
                x: last.x + extra * cs,
                y: last.y + extra * sn,
                heading: last.tangent_heading,
                curvature: if extra == 0.0 { last.curvature } else { 0.0 },
            };
        }
        let i = ((s / self.spacing) as usize).min(self.samples.len() - 2);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let u = ((s - a.s) / (b.s - a.s)).clamp(0.0, 1.0);
        RefPoint {
            x: a.x + u * (b.x - a.x),
            y: a.y + u * (b.y - a.y),
            heading: a.tangent_heading + u * (b.tangent_heading - a.tangent_heading),
            curvature: a.curvature + u * (b.curvature - a.curvature),
        }
    }

    /// Index of the sample nearest to `p` within `[lo, hi]`; ties go to the
    /// smaller index.
    fn nearest_sample(&self, p: [f64; 2], lo: usize, hi: usize) -> usize {
        let mut best = lo;
        let mut best_d2 = f64::INFINITY;
        for (i, q) in self.samples[lo..=hi].iter().enumerate() {
            let d2 = (p[0] - q.x).powi(2) + (p[1] - q.y).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                best = lo + i;
            }
        }
        best
    }

    /// Tangential residual `(p - r(s)) . t(s)`; zero at the foot point.
    fn residual(&self, p: [f64; 2], s: f64) -> f64 {
        let r = self.eval(s);
        let t = r.tangent();
        (p[0] - r.x) * t[0] + (p[1] - r.y) * t[1]
    }

    /// Arc length of the foot point of `p`, searching samples `[lo, hi]`.
    fn project(&self, p: [f64; 2], lo: usize, hi: usize) -> Result<f64, FrenetError> {
        let last = self.samples.len() - 1;
        let start = self.nearest_sample(p, lo, hi);
        let f0 = self.residual(p, self.samples[start].s);
        if f0 == 0.0 {
            return Ok(self.samples[start].s);
        }
        // Walk towards the sign change of the residual.
        let (a, b) = if f0 > 0.0 {
            let mut j = start;
            loop {
                if j == last {
                    if f0 <= ENDPOINT_TOLERANCE || self.residual(p, self.total_length) <= ENDPOINT_TOLERANCE {
                        return Ok(self.total_length);
                    }
                    return Err(FrenetError::OutOfRange {
                        end: LineEnd::End,
                        overshoot: self.residual(p, self.total_length),
                    });
                }
                if self.residual(p, self.samples[j + 1].s) <= 0.0 {
                    break (j, j + 1);
                }
                j += 1;
            }
        } else {
            let mut j = start;
            loop {
                if j == 0 {
                    let r = self.residual(p, 0.0);
                    if r >= -ENDPOINT_TOLERANCE {
                        return Ok(0.0);
                    }
                    return Err(FrenetError::OutOfRange {
                        end: LineEnd::Start,
                        overshoot: -r,
                    });
                }
                if self.residual(p, self.samples[j - 1].s) >= 0.0 {
                    break (j - 1, j);
                }
                j -= 1;
            }
        };
        // Illinois regula falsi on [s_a, s_b] with f(s_a) >= 0 >= f(s_b).
        let (mut sa, mut sb) = (self.samples[a].s, self.samples[b].s);
        let (mut fa, mut fb) = (self.residual(p, sa), self.residual(p, sb));
        if fa == 0.0 {
            return Ok(sa);
        }
        if fb == 0.0 {
            return Ok(sb);
        }
        let mut side = 0i8;
        for _ in 0..200 {
            let sm = (sa * fb - sb * fa) / (fb - fa);
            let fm = self.residual(p, sm);
            if fm == 0.0 || (sb - sa).abs() < 1e-14 {
                return Ok(sm);
            }
            if fm > 0.0 {
                sa = sm;
                fa = fm;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            } else {
                sb = sm;
                fb = fm;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            }
            if fm.abs() < 1e-13 {
                return Ok(sm);
            }
        }
        Ok(0.5 * (sa + sb))
    }
}

/// Concatenates the ego route centerlines into one reference line.
pub fn build_reference_line(scenario: &Scenario) -> Result<ReferenceLine, FrenetError> {
    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut prev: Option<&str> = None;
    for id in &scenario.ego_route {
        let lane = scenario
            .lane(id)
            .ok_or_else(|| FrenetError::UnknownLane { lane: id.clone() })?;
        if let (Some(last), Some(first)) = (points.last(), lane.points.first()) {
            let gap = (first[0] - last[0]).hypot(first[1] - last[1]);
            if gap > MAX_ROUTE_GAP {
                return Err(FrenetError::RouteGap {
                    from: prev.unwrap_or_default().to_string(),
                    to: id.clone(),
                    gap,
                });
            }
        }
        points.extend_from_slice(&lane.points);
        prev = Some(id);
    }
    ReferenceLine::from_polyline(&points)
}

fn frenet_from_foot(line: &ReferenceLine, state: &AgentState, s: f64) -> Result<FrenetState, FrenetError> {
    let r = line.eval(s);
    let (t, n) = (r.tangent(), r.normal());
    let dp = [state.x - r.x, state.y - r.y];
    let d = dp[0] * n[0] + dp[1] * n[1];
    if d.abs() >= MAX_LATERAL_OFFSET {
        return Err(FrenetError::TooFar { d });
    }
    let scale = 1.0 - r.curvature * d;
    if scale <= SINGULARITY_MARGIN {
        return Err(FrenetError::Singular { d, kappa: r.curvature });
    }
    let v_t = state.vx * t[0] + state.vy * t[1];
    let v_n = state.vx * n[0] + state.vy * n[1];
    Ok(FrenetState {
        s,
        d,
        s_dot: v_t / scale,
        d_dot: v_n,
        s_ddot: 0.0,
        d_ddot: 0.0,
    })
}

/// Projects a Cartesian state onto the reference line. Accelerations are not
/// observable from an [`AgentState`] and come back as zero.
pub fn to_frenet(line: &ReferenceLine, state: &AgentState) -> Result<FrenetState, FrenetError> {
    let s = line.project(state.position(), 0, line.samples.len() - 1)?;
    frenet_from_foot(line, state, s)
}

/// Like [`to_frenet`] but only considers foot points within `window` meters of
/// `s_hint`. Cost is independent of the line length.
pub fn to_frenet_near(
    line: &ReferenceLine,
    state: &AgentState,
    s_hint: f64,
    window: f64,
) -> Result<FrenetState, FrenetError> {
    let last = line.samples.len() - 1;
    let lo = (((s_hint - window) / line.spacing).floor().max(0.0) as usize).min(last);
    let hi = (((s_hint + window) / line.spacing).ceil().max(0.0) as usize).min(last);
    let s = line.project(state.position(), lo, hi)?;
    frenet_from_foot(line, state, s)
}

/// Maps a Frenet state back to Cartesian position, velocity and heading.
pub fn to_cartesian(line: &ReferenceLine, fs: &FrenetState) -> Result<AgentState, FrenetError> {
    let r = line.eval(fs.s);
    let scale = 1.0 - r.curvature * fs.d;
    if scale <= SINGULARITY_MARGIN {
        return Err(FrenetError::Singular {
            d: fs.d,
            kappa: r.curvature,
        });
    }
    let (t, n) = (r.tangent(), r.normal());
    let v_t = fs.s_dot * scale;
    Ok(AgentState {
        x: r.x + fs.d * n[0],
        y: r.y + fs.d * n[1],
        vx: v_t * t[0] + fs.d_dot * n[0],
        vy: v_t * t[1] + fs.d_dot * n[1],
        heading: wrap_angle(r.heading + fs.d_dot.atan2(v_t)),
    })
}
