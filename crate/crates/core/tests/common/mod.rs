#![allow(dead_code)]

use ps_core::frenet::ReferenceLine;

/// Smooth random-looking line: heading follows `amp * sin(freq * s + phase)`,
/// integrated at 0.5 m steps over `length` meters.
pub fn wavy_line(amp: f64, freq: f64, phase: f64, length: f64) -> ReferenceLine {
    let n = (length / 0.5) as usize;
    let mut pts = vec![[0.0, 0.0]];
    for i in 0..n {
        let s = (i as f64 + 0.5) * 0.5;
        let h = amp * (freq * s + phase).sin();
        let [x, y] = pts[i];
        pts.push([x + 0.5 * h.cos(), y + 0.5 * h.sin()]);
    }
    ReferenceLine::from_polyline(&pts).unwrap()
}

/// Dense Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}
