mod common;

use proptest::prelude::*;
use ps_core::frenet::{FrenetState, ReferenceLine};
use ps_core::trajgen::{generate_planning_set, quartic_coefficients, quintic_coefficients, Polynomial, SamplingConfig};

use common::solve;

fn pow(t: f64, k: i32) -> f64 {
    if k < 0 {
        0.0
    } else {
        t.powi(k)
    }
}

/// Row of the k-th derivative of sum a_i t^i, evaluated at t.
fn deriv_row(t: f64, order: usize, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let mut c = 1.0;
            for j in 0..order {
                c *= i as f64 - j as f64;
            }
            c * pow(t, i as i32 - order as i32)
        })
        .collect()
}

fn quintic_oracle(start: [f64; 3], end: [f64; 3], t: f64) -> Vec<f64> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (k, v) in start.iter().enumerate() {
        a.push(deriv_row(0.0, k, 6));
        b.push(*v);
    }
    for (k, v) in end.iter().enumerate() {
        a.push(deriv_row(t, k, 6));
        b.push(*v);
    }
    solve(a, b)
}

fn quartic_oracle(start: [f64; 3], end_vel: f64, end_acc: f64, t: f64) -> Vec<f64> {
    let a = vec![
        deriv_row(0.0, 0, 5),
        deriv_row(0.0, 1, 5),
        deriv_row(0.0, 2, 5),
        deriv_row(t, 1, 5),
        deriv_row(t, 2, 5),
    ];
    solve(a, vec![start[0], start[1], start[2], end_vel, end_acc])
}

fn derivs(p: &Polynomial, t: f64) -> [f64; 3] {
    let d1 = p.derivative();
    let d2 = d1.derivative();
    [p.eval(t), d1.eval(t), d2.eval(t)]
}

#[test]
fn unit_lateral_move_is_smoothstep() {
    let c = quintic_coefficients([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0);
    let oracle = quintic_oracle([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0);
    for (x, y) in c.iter().zip(&oracle) {
        assert!((x - y).abs() < 1e-12);
    }
    for (x, y) in oracle[3..].iter().zip([10.0, -15.0, 6.0]) {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
    let p = Polynomial(c.to_vec());
    assert!((p.eval(0.5) - 0.5).abs() < 1e-15);
}

proptest! {
    #[test]
    fn quintic_matches_linear_solve(
        s in prop::array::uniform3(-5.0f64..5.0),
        e in prop::array::uniform3(-5.0f64..5.0),
        t in 0.5f64..6.0,
    ) {
        let c = quintic_coefficients(s, e, t);
        let oracle = quintic_oracle(s, e, t);
        let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (x, y) in c.iter().zip(&oracle) {
            prop_assert!((x - y).abs() < 1e-9 * scale);
        }
        let p = Polynomial(c.to_vec());
        let (r0, r1) = (derivs(&p, 0.0), derivs(&p, t));
        for k in 0..3 {
            prop_assert!((r0[k] - s[k]).abs() < 1e-9);
            prop_assert!((r1[k] - e[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn quartic_matches_linear_solve(
        s in prop::array::uniform3(-5.0f64..5.0),
        v in -5.0f64..20.0,
        acc in -3.0f64..3.0,
        t in 0.5f64..6.0,
    ) {
        let c = quartic_coefficients(s, v, acc, t);
        let oracle = quartic_oracle(s, v, acc, t);
        let scale = oracle.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for (x, y) in c.iter().zip(&oracle) {
            prop_assert!((x - y).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn planning_set_boundary_residuals(
        d0 in -2.0f64..2.0,
        d_dot in -1.0f64..1.0,
        s_dot in 0.0f64..15.0,
        target in 0.5f64..15.0,
    ) {
        let line = ReferenceLine::from_polyline(&[[0.0, 0.0], [400.0, 0.0]]).unwrap();
        let start = FrenetState { s: 10.0, d: d0, s_dot, d_dot, ..Default::default() };
        let cfg = SamplingConfig::default();
        let Ok(set) = generate_planning_set(&line, &start, target, &cfg) else {
            return Ok(());
        };
        for c in &set {
            let (lat, lon) = (c.lateral(), c.longitudinal());
            let (l0, l1) = (derivs(&lat, 0.0), derivs(&lat, c.duration));
            let (s0, s1) = (derivs(&lon, 0.0), derivs(&lon, c.duration));
            let residuals = [
                l0[0] - d0, l0[1] - d_dot, l0[2],
                l1[0] - c.target_offset, l1[1], l1[2],
                s0[0] - 10.0, s0[1] - s_dot, s0[2],
                s1[1] - target, s1[2],
            ];
            for r in residuals {
                prop_assert!(r.abs() < 1e-9, "residual {r}");
            }
        }
    }
}
