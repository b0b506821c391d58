#![allow(dead_code)]

use glaeser_core::{
    submodule_closure, AffineFiber, BhkInstance, Bundle, JetShape, JetVec, LinSubspace, MultiIndex, Polynomial,
    RefinementConfig,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Points clustered at several dyadic scales around the origin, at least
/// 1e-3 apart.
pub fn multiscale_points(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    while pts.len() < count {
        let scale = 0.5f64.powi(rng.gen_range(0..6));
        let p: Vec<f64> = (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        // Jet data carry rounding of order 1e-16 that refinement amplifies by
        // d^{-m}; keep samples apart so a 1e-8 residual stays meaningful.
        let far = |q: &Vec<f64>| q.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() >= 1e-6;
        if pts.iter().all(far) {
            pts.push(p);
        }
    }
    pts
}

pub fn random_polynomial(rng: &mut ChaCha8Rng, n: usize, degree: usize) -> Polynomial {
    let b = glaeser_core::basis(n, degree);
    let terms: Vec<(f64, MultiIndex)> = b
        .indices()
        .iter()
        .map(|a| (rng.gen_range(-1.0..1.0), a.clone()))
        .collect();
    Polynomial::new(n, terms).unwrap()
}

pub fn poly_jets(polys: &[Polynomial], x: &[f64], m: usize) -> JetVec {
    JetVec::new(polys.iter().map(|p| p.jet(x, m).unwrap()).collect()).unwrap()
}

pub fn random_submodule(rng: &mut ChaCha8Rng, x: &[f64], shape: JetShape) -> LinSubspace {
    let k = rng.gen_range(0..=2);
    let vs: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..shape.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let v = LinSubspace::span_of(shape.dim(), &vs).unwrap();
    submodule_closure(&v, x, shape).unwrap()
}

/// How the fibers of a random bundle were drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Bhk,
    Submodules,
    Seeded,
}

pub struct RandomBundle {
    pub bundle: Bundle,
    pub kind: Kind,
    /// Polynomial whose jets lie in every fiber, for `Kind::Seeded`.
    pub section: Option<Vec<Polynomial>>,
    pub cfg: RefinementConfig,
}

pub fn random_bundle(seed: u64) -> RandomBundle {
    let mut r = rng(seed);
    let m = r.gen_range(0..=2);
    let n = r.gen_range(1..=2);
    let d = r.gen_range(1..=2);
    let shape = JetShape::new(m, n, d);
    let count = r.gen_range(2..=12);
    let points = multiscale_points(&mut r, n, count);
    let kind = match r.gen_range(0..3) {
        0 => Kind::Bhk,
        1 => Kind::Submodules,
        _ => Kind::Seeded,
    };
    let mut section = None;
    let bundle = match kind {
        Kind::Bhk => {
            let f: Vec<Vec<f64>> = (0..d)
                .map(|_| {
                    points
                        .iter()
                        .map(|_| if r.gen_bool(0.1) { 0.0 } else { r.gen_range(-1.0..1.0) })
                        .collect()
                })
                .collect();
            let phi: Vec<f64> = points.iter().map(|_| r.gen_range(-1.0..1.0)).collect();
            Bundle::from_bhk(&BhkInstance::new(points, f, phi).unwrap(), m).unwrap()
        }
        Kind::Submodules => {
            let fibers = points
                .iter()
                .map(|x| {
                    let base = DVector::from_iterator(shape.dim(), (0..shape.dim()).map(|_| r.gen_range(-1.0..1.0)));
                    AffineFiber::new(base, random_submodule(&mut r, x, shape)).unwrap()
                })
                .collect();
            Bundle::new(shape, points, fibers).unwrap()
        }
        Kind::Seeded => {
            let polys: Vec<Polynomial> = (0..d).map(|_| random_polynomial(&mut r, n, m)).collect();
            let fibers = points
                .iter()
                .map(|x| {
                    let base = DVector::from_vec(poly_jets(&polys, x, m).flatten());
                    AffineFiber::new(base, random_submodule(&mut r, x, shape)).unwrap()
                })
                .collect();
            section = Some(polys);
            Bundle::new(shape, points, fibers).unwrap()
        }
    };
    let mut cfg = RefinementConfig::default();
    if r.gen_bool(0.5) {
        cfg.scales = vec![0.6];
    }
    RandomBundle {
        bundle,
        kind,
        section,
        cfg,
    }
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

/// Origin plus, at each dyadic scale, points on both axes and the diagonal.
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

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}
