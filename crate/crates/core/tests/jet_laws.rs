use std::collections::HashMap;

use glaeser_core::{basis, scalar_dim, Jet, JetVec, MultiIndex};
use proptest::collection::vec;
use proptest::prelude::*;

type Dense = HashMap<Vec<u32>, f64>;

fn dense(j: &Jet) -> Dense {
    j.basis()
        .indices()
        .iter()
        .zip(j.coeffs())
        .map(|(a, &c)| (a.exponents().to_vec(), c))
        .collect()
}

fn naive_mul(p: &Dense, q: &Dense) -> Dense {
    let mut out = Dense::new();
    for (a, x) in p {
        for (b, y) in q {
            let e: Vec<u32> = a.iter().zip(b).map(|(s, t)| s + t).collect();
            *out.entry(e).or_insert(0.0) += x * y;
        }
    }
    out
}

fn truncate(p: &Dense, m: usize, n: usize) -> Vec<f64> {
    let b = basis(n, m);
    b.indices()
        .iter()
        .map(|a| p.get(a.exponents()).copied().unwrap_or(0.0))
        .collect()
}

fn choose(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Substitutes `h = h' + shift` into a polynomial in `h`.
fn translate(p: &Dense, shift: &[f64]) -> Dense {
    let mut out = Dense::new();
    for (a, c) in p {
        let mut terms: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), *c)];
        for (i, &ai) in a.iter().enumerate() {
            let mut next = Vec::new();
            for (e, v) in &terms {
                for k in 0..=ai {
                    let mut e2 = e.clone();
                    e2.push(k);
                    next.push((e2, v * choose(ai, k) * shift[i].powi((ai - k) as i32)));
                }
            }
            terms = next;
        }
        for (e, v) in terms {
            *out.entry(e).or_insert(0.0) += v;
        }
    }
    out
}

fn jet_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>, [Vec<f64>; 3])> {
    (0..=3usize, 1..=3usize).prop_flat_map(|(m, n)| {
        let sd = scalar_dim(m, n);
        (
            Just(m),
            Just(n),
            vec(-1.0..1.0f64, n),
            [vec(-1.0..1.0f64, sd), vec(-1.0..1.0f64, sd), vec(-1.0..1.0f64, sd)],
        )
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn product_matches_naive_truncation((m, n, x, cs) in jet_strategy()) {
        let [p, q, r] = cs.map(|c| Jet::new(x.clone(), m, c).unwrap());
        let pq = p.multiply(&q).unwrap();
        let oracle = truncate(&naive_mul(&dense(&p), &dense(&q)), m, n);
        prop_assert!(max_diff(pq.coeffs(), &oracle) <= 1e-11);
        prop_assert!(max_diff(pq.coeffs(), q.multiply(&p).unwrap().coeffs()) <= 1e-11);
        let left = pq.multiply(&r).unwrap();
        let right = p.multiply(&q.multiply(&r).unwrap()).unwrap();
        prop_assert!(max_diff(left.coeffs(), right.coeffs()) <= 1e-11);
        let one = Jet::constant(x.clone(), m, 1.0);
        prop_assert!(max_diff(p.multiply(&one).unwrap().coeffs(), p.coeffs()) <= 1e-15);
        let dist = p.multiply(&q.add(&r).unwrap()).unwrap();
        let sum = pq.add(&p.multiply(&r).unwrap()).unwrap();
        prop_assert!(max_diff(dist.coeffs(), sum.coeffs()) <= 1e-11);
    }

    #[test]
    fn recenter_matches_substitution((m, n, x, cs) in jet_strategy(), shift in vec(-0.5..0.5f64, 3)) {
        let p = Jet::new(x.clone(), m, cs[0].clone()).unwrap();
        let y: Vec<f64> = x.iter().zip(&shift).map(|(a, s)| a + s).collect();
        let moved = p.recenter(&y).unwrap();
        let oracle = truncate(&translate(&dense(&p), &shift[..n]), m, n);
        prop_assert!(max_diff(moved.coeffs(), &oracle) <= 1e-12);
        let z = vec![0.1; n];
        prop_assert!((moved.eval(&z).unwrap() - p.eval(&z).unwrap()).abs() <= 1e-11);
        let back = moved.recenter(&x).unwrap();
        prop_assert!(max_diff(back.coeffs(), p.coeffs()) <= 1e-11);
    }

    #[test]
    fn projection_is_a_ring_map((m, _n, x, cs) in jet_strategy(), k in 0..=3usize) {
        let k = k.min(m);
        let [p, q, _] = cs.map(|c| Jet::new(x.clone(), m, c).unwrap());
        let lhs = p.multiply(&q).unwrap().project(k).unwrap();
        let rhs = p.project(k).unwrap().multiply(&q.project(k).unwrap()).unwrap();
        prop_assert!(max_diff(lhs.coeffs(), rhs.coeffs()) <= 1e-12);
    }

    #[test]
    fn units_invert((m, _n, x, cs) in jet_strategy()) {
        let mut c = cs[0].clone();
        c[0] = 1.5 + c[0].abs();
        let p = Jet::new(x.clone(), m, c).unwrap();
        let prod = p.multiply(&p.inverse().unwrap()).unwrap();
        let one = Jet::constant(x, m, 1.0);
        prop_assert!(max_diff(prod.coeffs(), one.coeffs()) <= 1e-11);
    }

    #[test]
    fn module_action_is_componentwise((m, n, x, cs) in jet_strategy()) {
        let q = Jet::new(x.clone(), m, cs[2].clone()).unwrap();
        let v = JetVec::new(vec![
            Jet::new(x.clone(), m, cs[0].clone()).unwrap(),
            Jet::new(x.clone(), m, cs[1].clone()).unwrap(),
        ])
        .unwrap();
        let acted = v.act(&q).unwrap();
        for j in 0..2 {
            let oracle = truncate(&naive_mul(&dense(v.component(j)), &dense(&q)), m, n);
            prop_assert!(max_diff(acted.component(j).coeffs(), &oracle) <= 1e-11);
        }
    }
}

#[test]
fn derivatives_of_monomials() {
    let a = MultiIndex::new(vec![2, 1]);
    let p = Jet::monomial(vec![0.0, 0.0], 3, &a).unwrap();
    // ∂^(1,1) x²y = 2x
    let v = p.deriv_eval(&MultiIndex::new(vec![1, 1]), &[0.5, 7.0]).unwrap();
    assert!((v - 1.0).abs() < 1e-15);
}
