//! Fixture builders shared by the benchmarks.

use glaeser_core::{
    decide, select_section, BhkInstance, Bundle, Jet, JetField, RefinementConfig, Status,
};

/// Deterministic values in `[-1, 1]`.
fn wobble(k: usize, salt: f64) -> f64 {
    (k as f64 * 1.618_033_988_75 + salt).sin()
}

/// `count` jets of order `m` in `n` variables at a shared basepoint.
pub fn jets(n: usize, m: usize, count: usize) -> Vec<Jet> {
    let x: Vec<f64> = (0..n).map(|i| 0.1 * i as f64).collect();
    let len = glaeser_core::scalar_dim(m, n);
    (0..count)
        .map(|c| Jet::new(x.clone(), m, (0..len).map(|k| wobble(k, c as f64)).collect()).unwrap())
        .collect()
}

/// `{0} ∪ {±2^{-s} : 1 <= s <= smax}`.
pub fn dyadic_line(smax: i32) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0]];
    for s in 1..=smax {
        let h = 0.5f64.powi(s);
        pts.push(vec![h]);
        pts.push(vec![-h]);
    }
    pts
}

/// Origin plus axis and diagonal points at each dyadic scale.
pub fn axes_diagonal_grid(smax: i32) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0, 0.0]];
    for s in 1..=smax {
        let h = 0.5f64.powi(s);
        for p in [[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h], [h, h], [-h, -h]] {
            pts.push(p.to_vec());
        }
    }
    pts
}

/// Interpolation of `x|x|` with `m = 1`.
pub fn signed_square(smax: i32) -> Bundle {
    let pts = dyadic_line(smax);
    let vals: Vec<f64> = pts.iter().map(|p| p[0] * p[0].abs()).collect();
    Bundle::from_interpolation(pts, &vals, 1).unwrap()
}

/// `φ₁ + x φ₂ = φ` on an axes and diagonal grid, `m = 1`.
pub fn coefficient_grid(smax: i32) -> Bundle {
    let pts = axes_diagonal_grid(smax);
    let f = vec![vec![1.0; pts.len()], pts.iter().map(|p| p[0]).collect()];
    let phi = pts.iter().map(|p| (0.3 * p[0] + 0.2 * p[1]).sin()).collect();
    Bundle::from_bhk(&BhkInstance::new(pts, f, phi).unwrap(), 1).unwrap()
}

/// A section of the stabilized `x|x|` bundle.
pub fn signed_square_field(smax: i32) -> JetField {
    let v = decide(&signed_square(smax), &RefinementConfig::default()).unwrap();
    assert_eq!(v.status, Status::Solvable);
    select_section(&v.stabilized).unwrap()
}
