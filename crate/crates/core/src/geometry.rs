//! Small planar geometry helpers: angle wrapping and oriented-box clearance.

use std::f64::consts::PI;

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can land exactly on 2*pi for inputs a hair below a multiple of 2*pi.
    if w >= PI {
        w -= 2.0 * PI;
    }
    w
}

/// Oriented rectangle in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub cx: f64,
    pub cy: f64,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedBox {
    pub fn new(cx: f64, cy: f64, heading: f64, length: f64, width: f64) -> Self {
        Self {
            cx,
            cy,
            heading,
            half_length: 0.5 * length,
            half_width: 0.5 * width,
        }
    }

    fn axes(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.heading.sin_cos();
        [[c, s], [-s, c]]
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        let [u, v] = self.axes();
        let (l, w) = (self.half_length, self.half_width);
        let pt = |a: f64, b: f64| [self.cx + a * u[0] + b * v[0], self.cy + a * u[1] + b * v[1]];
        [pt(l, w), pt(-l, w), pt(-l, -w), pt(l, -w)]
    }

    fn project(&self, axis: [f64; 2]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in self.corners() {
            let p = c[0] * axis[0] + c[1] * axis[1];
            lo = lo.min(p);
            hi = hi.max(p);
        }
        (lo, hi)
    }
}

/// Signed clearance between two oriented boxes.
///
/// Positive values are the Euclidean gap between the rectangles. When they
/// overlap the result is minus the smallest penetration depth over the four
/// separating-axis candidates, so `<= 0` means contact.
pub fn box_clearance(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let mut max_sep = f64::NEG_INFINITY;
    for axis in a.axes().into_iter().chain(b.axes()) {
        let (a0, a1) = a.project(axis);
        let (b0, b1) = b.project(axis);
        let sep = (b0 - a1).max(a0 - b1);
        max_sep = max_sep.max(sep);
    }
    if max_sep <= 0.0 {
        return max_sep;
    }
    let ca = a.corners();
    let cb = b.corners();
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let (p0, p1) = (ca[i], ca[(i + 1) % 4]);
        let (q0, q1) = (cb[i], cb[(i + 1) % 4]);
        for &q in &cb {
            best = best.min(point_segment_distance(q, p0, p1));
        }
        for &p in &ca {
            best = best.min(point_segment_distance(p, q0, q1));
        }
    }
    best
}

pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dx = ap[0] - t * ab[0];
    let dy = ap[1] - t * ab[1];
    dx.hypot(dy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_stays_half_open() {
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(-PI / 2.0) + PI / 2.0).abs() < 1e-12);
        for k in -20..20 {
            let w = wrap_angle(k as f64 * 0.77);
            assert!((-PI..PI).contains(&w));
        }
    }

    #[test]
    fn abeam_boxes() {
        let a = OrientedBox::new(0.0, 0.0, 0.0, 4.8, 2.0);
        let b = OrientedBox::new(0.0, 3.0, 0.0, 4.8, 2.0);
        assert!((box_clearance(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_boxes_negative() {
        let a = OrientedBox::new(0.0, 0.0, 0.0, 4.8, 2.0);
        let b = OrientedBox::new(1.0, 0.5, 0.3, 4.8, 2.0);
        assert!(box_clearance(&a, &b) < 0.0);
        let c = OrientedBox::new(4.0, 0.0, 0.0, 4.8, 2.0);
        assert!((box_clearance(&a, &c) + 0.8).abs() < 1e-12);
    }

    #[test]
    fn corner_to_corner_gap_is_euclidean() {
        let a = OrientedBox::new(0.0, 0.0, 0.0, 2.0, 2.0);
        let b = OrientedBox::new(3.0, 3.0, 0.0, 2.0, 2.0);
        assert!((box_clearance(&a, &b) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn clearance_is_symmetric() {
        let a = OrientedBox::new(0.3, -1.0, 0.4, 4.8, 2.0);
        let b = OrientedBox::new(6.0, 2.5, -1.1, 4.0, 1.8);
        assert!((box_clearance(&a, &b) - box_clearance(&b, &a)).abs() < 1e-12);
    }
}
