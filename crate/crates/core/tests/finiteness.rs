mod common;

use common::{multiscale_points, rng};
use glaeser_core::{
    finiteness_scan, subset_feasibility, BhkInstance, Constraints, Jet, JetShape, MultiIndex, RegularModulus,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Objective residual vector of the stacked coefficients `z`, evaluated with
/// jet derivatives directly.
fn residuals(points: &[Vec<f64>], shape: JetShape, omega: &RegularModulus, z: &DVector<f64>) -> Vec<f64> {
    let sd = shape.scalar_dim();
    let nn = shape.dim();
    let b = shape.basis();
    let jet = |k: usize, j: usize| {
        let c = z.rows(k * nn + j * sd, sd).iter().copied().collect();
        Jet::new(points[k].clone(), shape.m, c).unwrap()
    };
    let mut out = Vec::new();
    for k in 0..points.len() {
        for j in 0..shape.d {
            for a in b.indices() {
                out.push(jet(k, j).deriv_eval(a, &points[k]).unwrap());
            }
        }
    }
    for k in 0..points.len() {
        for k2 in k + 1..points.len() {
            let d: f64 = points[k].iter().zip(&points[k2]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            if d > 1.0 {
                continue;
            }
            for j in 0..shape.d {
                for a in b.indices() {
                    let diff = jet(k, j).deriv_eval(a, &points[k]).unwrap() - jet(k2, j).deriv_eval(a, &points[k]).unwrap();
                    out.push(diff / (omega.eval(d) * d.powi((shape.m - a.order()) as i32)));
                }
            }
        }
    }
    out
}

fn operator(points: &[Vec<f64>], shape: JetShape, omega: &RegularModulus) -> DMatrix<f64> {
    let cols = points.len() * shape.dim();
    let columns: Vec<Vec<f64>> = (0..cols)
        .map(|c| {
            let mut e = DVector::zeros(cols);
            e[c] = 1.0;
            residuals(points, shape, omega, &e)
        })
        .collect();
    DMatrix::from_fn(columns[0].len(), cols, |i, j| columns[j][i])
}

/// Modified Gram-Schmidt on rows of `c` with the right-hand side carried
/// along. `None` when the system is inconsistent.
fn orthonormal_rows(c: &DMatrix<f64>, r: &DVector<f64>) -> Option<(Vec<DVector<f64>>, Vec<f64>)> {
    let mut qs: Vec<DVector<f64>> = Vec::new();
    let mut ss: Vec<f64> = Vec::new();
    for i in 0..c.nrows() {
        let mut v = c.row(i).transpose();
        let mut s = r[i];
        for _ in 0..2 {
            for (q, sq) in qs.iter().zip(&ss) {
                let a = q.dot(&v);
                v -= q * a;
                s -= a * sq;
            }
        }
        let n = v.norm();
        if n <= 1e-12 {
            if s.abs() > 1e-9 {
                return None;
            }
            continue;
        }
        qs.push(v / n);
        ss.push(s / n);
    }
    Some((qs, ss))
}

/// Null-space method: `z = z_p + N y` with `y` from a QR solve on `A N`.
fn global_value(a: &DMatrix<f64>, c: &DMatrix<f64>, r: &DVector<f64>) -> f64 {
    let Some((qs, ss)) = orthonormal_rows(c, r) else {
        return f64::INFINITY;
    };
    let n = a.ncols();
    let mut zp = DVector::zeros(n);
    for (q, s) in qs.iter().zip(&ss) {
        zp += q * *s;
    }
    let mut basis: Vec<DVector<f64>> = qs.clone();
    let mut null: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        for _ in 0..2 {
            for q in &basis {
                let a = q.dot(&v);
                v -= q * a;
            }
        }
        if v.norm() > 1e-8 {
            let v = v.normalize();
            basis.push(v.clone());
            null.push(v);
        }
    }
    if null.is_empty() {
        return (a * zp).norm();
    }
    let nm = DMatrix::from_columns(&null);
    let an = a * &nm;
    let qr = an.qr();
    let rhs = -(qr.q().transpose() * (a * &zp));
    let y = qr.r().solve_upper_triangular(&rhs).unwrap();
    (a * (zp + nm * y)).norm()
}

fn bhk_constraints(inst: &BhkInstance, shape: JetShape, subset: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
    let nn = shape.dim();
    let sd = shape.scalar_dim();
    let mut c = DMatrix::zeros(subset.len(), subset.len() * nn);
    let mut r = DVector::zeros(subset.len());
    for (row, &k) in subset.iter().enumerate() {
        for j in 0..shape.d {
            c[(row, row * nn + j * sd)] = inst.f_values[j][k];
        }
        r[row] = inst.phi_values[k];
    }
    (c, r)
}

fn oracle(inst: &BhkInstance, m: usize, subset: &[usize], omega: &RegularModulus) -> f64 {
    let shape = JetShape::new(m, inst.nvars(), inst.d());
    let pts: Vec<Vec<f64>> = subset.iter().map(|&k| inst.points[k].clone()).collect();
    let (c, r) = bhk_constraints(inst, shape, subset);
    global_value(&operator(&pts, shape, omega), &c, &r)
}

fn random_instance(seed: u64) -> (BhkInstance, usize) {
    let mut r = rng(seed);
    let n = r.gen_range(1..=2);
    let d = r.gen_range(1..=2);
    let m = r.gen_range(0..=1);
    let count = r.gen_range(2..=6);
    let pts = multiscale_points(&mut r, n, count);
    let f = (0..d)
        .map(|_| pts.iter().map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    let phi = pts.iter().map(|_| r.gen_range(-1.0..1.0)).collect();
    (BhkInstance::new(pts, f, phi).unwrap(), m)
}

#[test]
fn full_scan_matches_global_least_squares() {
    let omega = RegularModulus::lipschitz();
    for seed in 0..40 {
        let (inst, m) = random_instance(seed);
        let all: Vec<usize> = (0..inst.points.len()).collect();
        let cons = Constraints::Bhk { inst: &inst, m };
        let scan = finiteness_scan(&cons, &omega, all.len(), 1 << 12, 0).unwrap();
        assert!(scan.exhaustive);
        let want = oracle(&inst, m, &all, &omega);
        assert!(
            (scan.best.value - want).abs() <= 1e-8 * (1.0 + want),
            "seed {seed}: {} vs {want}",
            scan.best.value
        );
    }
}

#[test]
fn every_subset_matches_oracle_on_four_points() {
    let omega = RegularModulus::power(0.5).unwrap();
    let mut r = rng(99);
    let pts = multiscale_points(&mut r, 2, 4);
    let f = vec![pts.iter().map(|p| 1.0 + p[0]).collect(), pts.iter().map(|p| p[1]).collect()];
    let phi = pts.iter().map(|p| (p[0] - p[1]).cos()).collect();
    let inst = BhkInstance::new(pts, f, phi).unwrap();
    let cons = Constraints::Bhk { inst: &inst, m: 1 };
    let mut best: f64 = 0.0;
    for mask in 1u32..16 {
        let s: Vec<usize> = (0..4).filter(|i| mask >> i & 1 == 1).collect();
        let got = subset_feasibility(&s, &cons, &omega).unwrap();
        let want = oracle(&inst, 1, &s, &omega);
        assert!((got.value - want).abs() <= 1e-8 * (1.0 + want));
        assert!(got.constraint_residual <= 1e-10);
        best = best.max(want);
    }
    let scan = finiteness_scan(&cons, &omega, 4, 100, 0).unwrap();
    assert_eq!(scan.examined, 15);
    assert!((scan.best.value - best).abs() <= 1e-8 * (1.0 + best));
}

#[test]
fn larger_subsets_never_cost_less() {
    let omega = RegularModulus::lipschitz();
    for seed in 100..200 {
        let (inst, m) = random_instance(seed);
        let cons = Constraints::Bhk { inst: &inst, m };
        let n = inst.points.len();
        let mut r = rng(seed);
        let big: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.7)).collect();
        if big.is_empty() {
            continue;
        }
        let small: Vec<usize> = big.iter().copied().filter(|_| r.gen_bool(0.6)).collect();
        if small.is_empty() {
            continue;
        }
        let vb = subset_feasibility(&big, &cons, &omega).unwrap().value;
        let vs = subset_feasibility(&small, &cons, &omega).unwrap().value;
        assert!(vs <= vb * (1.0 + 1e-9) + 1e-12, "seed {seed}: {vs} > {vb}");
    }
}

#[test]
fn lipschitz_pairs_have_closed_form() {
    // m = 0, f ≡ 1: the jets are the data, so M² = a² + b² + ((a − b)/d)².
    let omega = RegularModulus::lipschitz();
    for (x, y, a, b) in [(0.0, 0.5, 1.0, -1.0), (0.1, 0.1001, 0.3, 0.31), (-0.4, 0.4, 2.0, 2.0)] {
        let inst = BhkInstance::new(vec![vec![x], vec![y]], vec![vec![1.0, 1.0]], vec![a, b]).unwrap();
        let c = subset_feasibility(&[0, 1], &Constraints::Bhk { inst: &inst, m: 0 }, &omega).unwrap();
        let d: f64 = (y - x) as f64;
        let want = (a * a + b * b + ((a - b) / d.abs()).powi(2)).sqrt();
        assert!((c.value - want).abs() <= 1e-9 * want, "{} vs {want}", c.value);
    }
    // Samples of a jump: the scan value grows like the inverse gap.
    let mut last = 0.0;
    for s in 1..8 {
        let h = 0.5f64.powi(s);
        let inst = BhkInstance::new(vec![vec![-h], vec![h]], vec![vec![1.0, 1.0]], vec![0.0, 1.0]).unwrap();
        let v = finiteness_scan(&Constraints::Bhk { inst: &inst, m: 0 }, &omega, 2, 10, 0).unwrap().best.value;
        assert!(v > last && v >= 1.0 / (2.0 * h));
        last = v;
    }
}

#[test]
fn zero_target_costs_nothing() {
    let mut r = rng(5);
    let pts = multiscale_points(&mut r, 2, 5);
    let f = vec![pts.iter().map(|_| r.gen_range(-1.0..1.0)).collect()];
    let inst = BhkInstance::new(pts.clone(), f, vec![0.0; pts.len()]).unwrap();
    let scan = finiteness_scan(&Constraints::Bhk { inst: &inst, m: 2 }, &RegularModulus::lipschitz(), 3, 100, 0).unwrap();
    assert_eq!(scan.best.value, 0.0);
    let w = &scan.best.witness[0];
    assert!(w.component(0).coeff(&MultiIndex::zero(2)).unwrap().abs() <= 1e-12);
}
