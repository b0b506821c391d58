mod common;

use common::{dyadic_line, random_submodule, rng};
use glaeser_core::finiteness::{convexity_check, WhitneyConvexSet};
use glaeser_core::lift::{lift_bundle, lifted_point, lifted_shape, restriction_size};
use glaeser_core::{
    lift_jet, lift_submodule, stabilize, unlift, Bundle, Jet, JetShape, JetVec, MultiIndex, RefinementConfig,
    RegularModulus,
};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

fn shape_strategy() -> impl Strategy<Value = JetShape> {
    (0usize..=2, 1usize..=2, 1usize..=2).prop_map(|(m, n, d)| JetShape::new(m, n, d))
}

fn random_jetvec(seed: u64, x: &[f64], shape: JetShape) -> JetVec {
    let mut r = rng(seed);
    let flat: Vec<f64> = (0..shape.dim()).map(|_| r.gen_range(-1.0..1.0)).collect();
    JetVec::from_flat(x, shape.m, shape.d, &flat).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lifted_space_is_closed_under_coordinate_products(shape in shape_strategy(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let x: Vec<f64> = (0..shape.n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let i = random_submodule(&mut r, &x, shape);
        let hat = lift_submodule(&i, &x, shape).unwrap();
        let ls = lifted_shape(shape);
        let xh = lifted_point(&x, shape.d);
        for col in hat.basis().column_iter() {
            let g = Jet::new(xh.clone(), ls.m, col.iter().copied().collect()).unwrap();
            for k in 0..ls.n {
                let y = Jet::monomial(xh.clone(), ls.m, &MultiIndex::unit(ls.n, k)).unwrap();
                let prod = DVector::from_vec(g.multiply(&y).unwrap().into_coeffs());
                prop_assert!(hat.residual(&prod) <= 1e-10);
            }
        }
    }

    #[test]
    fn lift_then_unlift_is_identity(shape in shape_strategy(), seed in any::<u64>()) {
        let x: Vec<f64> = (0..shape.n).map(|k| 0.25 * k as f64 - 0.1).collect();
        let p = random_jetvec(seed, &x, shape);
        let g = lift_jet(&p);
        prop_assert_eq!(g.order(), shape.m + 1);
        prop_assert_eq!(restriction_size(&g, shape.n), 0.0);
        prop_assert_eq!(unlift(&g, shape.n, shape.d).unwrap(), p);
    }

    #[test]
    fn lifted_submodule_sets_are_whitney_convex(shape in shape_strategy(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let x: Vec<f64> = (0..shape.n).map(|_| r.gen_range(-0.5..0.5)).collect();
        let i = random_submodule(&mut r, &x, shape);
        let hat = lift_submodule(&i, &x, shape).unwrap();
        let sigma = WhitneyConvexSet::submodule(hat, lifted_point(&x, shape.d), lifted_shape(shape)).unwrap();
        let out = convexity_check(&sigma, &RegularModulus::lipschitz(), 32, seed).unwrap();
        prop_assert!(out.passed(), "{:?}", out);
    }
}

#[test]
fn lifted_products_match_pointwise_action() {
    // v̂_j P_j(x̂) times Q(x̂) lifts the action P⃗ ⊙ Q.
    let shape = JetShape::new(2, 2, 2);
    let x = vec![0.3, -0.2];
    let p = random_jetvec(1, &x, shape);
    let q = Jet::new(x.clone(), 2, (0..6).map(|k| 0.5 - 0.1 * k as f64).collect()).unwrap();
    let ls = lifted_shape(shape);
    let qh_coeffs: Vec<f64> = ls
        .basis()
        .indices()
        .iter()
        .map(|a| match a.exponents()[shape.n..].iter().any(|&e| e > 0) {
            true => 0.0,
            false => q.coeff(&MultiIndex::new(a.exponents()[..shape.n].to_vec())).unwrap_or(0.0),
        })
        .collect();
    let qh = Jet::new(lifted_point(&x, shape.d), ls.m, qh_coeffs).unwrap();
    let lhs = lift_jet(&p).multiply(&qh).unwrap();
    let rhs = lift_jet(&p.act(&q).unwrap());
    for (a, b) in lhs.coeffs().iter().zip(rhs.coeffs()) {
        assert!((a - b).abs() <= 1e-14);
    }
}

#[test]
fn lifted_chain_tracks_original_chain() {
    // One lifted monomial (v̂²) exceeds the original dimension count.
    let pts = dyadic_line(6);
    let cfg = RefinementConfig::default();
    let data: [Vec<f64>; 3] = [
        vec![0.0; pts.len()],
        pts.iter().map(|p| p[0] * p[0]).collect(),
        pts.iter().map(|p| p[0].abs()).collect(),
    ];
    for vals in data {
        let b = Bundle::from_interpolation(pts.clone(), &vals, 1).unwrap();
        let lb = lift_bundle(&b).unwrap();
        let s = stabilize(&b, &cfg).unwrap();
        let ls = stabilize(&lb, &cfg).unwrap();
        let last = s.dims_per_round.last().unwrap();
        let llast = ls.dims_per_round.last().unwrap();
        for (d, ld) in last.iter().zip(llast) {
            if *d < 0 {
                assert_eq!(*ld, -1);
            } else {
                assert_eq!(*ld, d + 1);
            }
        }
    }
}
