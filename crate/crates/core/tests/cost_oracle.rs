use proptest::prelude::*;
use ps_core::cost::{
    collision_cost, harshness_cost, proximity, segment_cost, shifted_sigmoid, smoothness_costs, speed_cost,
    CostWeights, EgoControlSample, Segment,
};
use ps_core::scene::AgentState;

// Oracles below are written from the closed forms, without calling the crate.
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn overlap_oracle(w: &CostWeights) -> f64 {
    let sx = 2.0 * (logistic(w.lambda_x * w.l_x) - 0.5);
    let sy = 2.0 * (logistic(w.lambda_y * w.l_y) - 0.5);
    sx * sy
}

fn ctl(accel: f64, steer: f64) -> EgoControlSample {
    EgoControlSample { t: 0, accel, steer }
}

#[test]
fn scalar_oracles() {
    let w = CostWeights::default();
    assert_eq!(speed_cost(15.0, 15.0).0, 1.0);
    assert_eq!(speed_cost(7.5, 15.0).0, 0.0);
    assert!((harshness_cost(&[ctl(4.0, 0.0)], &w) - 2f64.ln()).abs() < 1e-9);
    assert_eq!(shifted_sigmoid(0.0), 0.0);
    let oracle = overlap_oracle(&w);
    assert!((oracle - 0.98661).abs() < 1e-5);
    assert!((proximity(0.0, 0.0, &w) - oracle).abs() < 1e-12);
}

#[test]
fn proximity_monotone_on_grid() {
    let w = CostWeights::default();
    let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.5).collect();
    let ys: Vec<f64> = (0..50).map(|j| j as f64 * 0.2).collect();
    for &y in &ys {
        for pair in xs.windows(2) {
            assert!(proximity(pair[1], y, &w) <= proximity(pair[0], y, &w));
            assert!(proximity(-pair[1], y, &w) <= proximity(-pair[0], y, &w));
        }
    }
    for &x in &xs {
        for pair in ys.windows(2) {
            assert!(proximity(x, pair[1], &w) <= proximity(x, pair[0], &w));
            assert!(proximity(x, -pair[1], &w) <= proximity(x, -pair[0], &w));
        }
    }
    assert!(proximity(0.0, 0.0, &w) > proximity(24.5, 0.0, &w));
    assert!(proximity(0.0, 0.0, &w) > proximity(0.0, 9.8, &w));
}

#[test]
fn cruising_alone_at_the_limit_costs_one() {
    let w = CostWeights::default();
    let ego = vec![AgentState::new(0.0, 0.0, 15.0, 0.0, 0.0); 10];
    let controls = vec![ctl(0.0, 0.0); 10];
    let others = vec![Vec::new(); 10];
    let b = segment_cost(
        &Segment {
            ego: &ego,
            controls: &controls,
            prev_control: None,
            others: &others,
        },
        &w,
    );
    assert!((b.total - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn proximity_even_and_bounded(dx in -30.0f64..30.0, dy in -10.0f64..10.0) {
        let w = CostWeights::default();
        let p = proximity(dx, dy, &w);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - proximity(-dx, dy, &w)).abs() < 1e-12);
        prop_assert!((p - proximity(dx, -dy, &w)).abs() < 1e-12);
    }

    #[test]
    fn penalty_terms_non_negative(accels in prop::collection::vec(-20.0f64..20.0, 1..20), steer in -0.5f64..0.5) {
        let w = CostWeights::default();
        let controls: Vec<_> = accels.iter().enumerate().map(|(i, &a)| ctl(a, steer * i as f64 / 20.0)).collect();
        let (c2, c3) = smoothness_costs(&controls);
        prop_assert!(c2 >= 0.0 && c3 >= 0.0);
        let c4 = harshness_cost(&controls, &w);
        prop_assert!(c4 >= 0.0 && c4.is_finite());
    }

    #[test]
    fn speed_term_peaks_at_limit(v in 0.0f64..40.0) {
        let (c1, _) = speed_cost(v, 15.0);
        prop_assert!(c1 <= 1.0);
        prop_assert!(c1.is_finite());
    }

    #[test]
    fn collision_term_adds_per_step(offsets in prop::collection::vec((-20.0f64..20.0, -5.0f64..5.0), 0..15)) {
        let w = CostWeights::default();
        let opts: Vec<_> = offsets.iter().copied().map(Some).collect();
        let sum: f64 = offsets.iter().map(|&(x, y)| proximity(x, y, &w)).sum();
        prop_assert!((collision_cost(&opts, &w) - sum).abs() < 1e-9);
    }
}
