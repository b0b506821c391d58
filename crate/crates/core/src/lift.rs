//! Reduction of vector-valued problems to scalar ones.
//!
//! A jet vector `(P_1, ..., P_d)` of order `m` at `x ∈ R^n` lifts to the scalar
//! jet `P̂(x̂, v̂) = Σ_j v̂_j P_j(x̂)` of order `m + 1` at `(x, 0) ∈ R^{n+d}`.
//! Variables are ordered `x̂_1..x̂_n, v̂_1..v̂_d`. Lifted objects are ordinary
//! jets and subspaces of the `(m+1, n+d)` ring.

use nalgebra::DVector;

use crate::bundles::Bundle;
use crate::error::{Error, Result};
use crate::finiteness::WhitneyConvexSet;
use crate::jets::{basis, Jet, JetShape, JetVec, MultiIndex};
use crate::linalg;
use crate::linspaces::{is_submodule, AffineFiber, LinSubspace, DEFAULT_TOL};

/// Shape of the lifted scalar ambient.
pub fn lifted_shape(shape: JetShape) -> JetShape {
    JetShape::new(shape.m + 1, shape.n + shape.d, 1)
}

/// `(x, 0)`
pub fn lifted_point(x: &[f64], d: usize) -> Vec<f64> {
    let mut p = x.to_vec();
    p.extend(std::iter::repeat(0.0).take(d));
    p
}

/// Position in the lifted basis of `x̂^α v̂^{e_j}`, for every `j` and `α` of
/// the base basis in order. Indexed `[j * sd + pos(α)]`.
fn lift_positions(shape: JetShape) -> Vec<usize> {
    let b = basis(shape.n, shape.m);
    let lb = basis(shape.n + shape.d, shape.m + 1);
    let mut out = Vec::with_capacity(shape.dim());
    for j in 0..shape.d {
        for alpha in b.indices() {
            let mut e = alpha.exponents().to_vec();
            e.extend((0..shape.d).map(|k| u32::from(k == j)));
            out.push(lb.position(&MultiIndex::new(e)).expect("order m+1 fits"));
        }
    }
    out
}

fn v_degree(alpha: &MultiIndex, n: usize) -> usize {
    alpha.exponents()[n..].iter().map(|&a| a as usize).sum()
}

/// `Σ_j v̂_j P_j(x̂)` at `(x, 0)`.
pub fn lift_jet(p: &JetVec) -> Jet {
    let shape = p.shape();
    let ls = lifted_shape(shape);
    let mut coeffs = vec![0.0; ls.scalar_dim()];
    for (pos, v) in lift_positions(shape).into_iter().zip(p.flatten()) {
        coeffs[pos] = v;
    }
    Jet::new(lifted_point(p.basepoint(), shape.d), ls.m, coeffs).expect("lifted length matches")
}

/// `((∂_{v̂_1} Ĝ)|_{v̂=0}, ..., (∂_{v̂_d} Ĝ)|_{v̂=0})` as `d` jets of order
/// `order(Ĝ) − 1` at `x`.
pub fn unlift(g: &Jet, n: usize, d: usize) -> Result<JetVec> {
    if g.nvars() != n + d {
        return Err(Error::DimensionMismatch {
            expected: n + d,
            found: g.nvars(),
            context: "lifted variables",
        });
    }
    if g.order() == 0 {
        return Err(Error::InvalidInput("lifted jets have order at least 1".into()));
    }
    let shape = JetShape::new(g.order() - 1, n, d);
    let flat: Vec<f64> = lift_positions(shape).into_iter().map(|p| g.coeffs()[p]).collect();
    JetVec::from_flat(&g.basepoint()[..n], shape.m, d, &flat)
}

/// Largest coefficient of `Ĝ|_{v̂=0}`.
pub fn restriction_size(g: &Jet, n: usize) -> f64 {
    let b = g.basis();
    b.indices()
        .iter()
        .zip(g.coeffs())
        .filter(|(a, _)| v_degree(a, n) == 0)
        .fold(0.0, |m, (_, c)| m.max(c.abs()))
}

/// The lifted submodule `Î`: lifts of a basis of `I⃗` together with every
/// monomial of `v̂`-degree at least 2 and total degree at most `m + 1`.
pub fn lift_submodule(i: &LinSubspace, x: &[f64], shape: JetShape) -> Result<LinSubspace> {
    if !is_submodule(i, x, shape, DEFAULT_TOL)? {
        return Err(Error::NotSubmodule);
    }
    let ls = lifted_shape(shape);
    let lb = ls.basis();
    let pos = lift_positions(shape);
    let extra: Vec<usize> = (0..lb.len()).filter(|&k| v_degree(lb.index(k), shape.n) >= 2).collect();
    let mut m = nalgebra::DMatrix::zeros(ls.dim(), i.dim() + extra.len());
    for (c, col) in i.basis().column_iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            m[(pos[k], c)] = *v;
        }
    }
    for (c, &k) in extra.iter().enumerate() {
        m[(k, i.dim() + c)] = 1.0;
    }
    linalg::canonical_signs(&mut m);
    LinSubspace::from_orthonormal(m)
}

/// `P̂ ∈ σ̂(x, 0)`: the restriction to `v̂ = 0` vanishes and the extracted
/// jet vector lies in `σ(x)`.
pub fn lift_sigma_membership(sigma: &WhitneyConvexSet, p: &Jet, tol: f64) -> Result<bool> {
    let shape = sigma.shape;
    if p.nvars() != shape.n + shape.d || p.order() != shape.m + 1 {
        return Err(Error::DimensionMismatch {
            expected: shape.n + shape.d,
            found: p.nvars(),
            context: "lifted jet shape",
        });
    }
    if restriction_size(p, shape.n) > tol {
        return Ok(false);
    }
    let v = unlift(p, shape.n, shape.d)?;
    Ok(sigma.gauge(&DVector::from_vec(v.flatten())) <= sigma.whitney_constant * (1.0 + tol))
}

/// Lifts every fiber `P⃗^x + I⃗(x)` to `lift(P⃗^x) + Î(x, 0)` over `E × {0}`.
/// Direction spaces must be submodules.
pub fn lift_bundle(b: &Bundle) -> Result<Bundle> {
    let shape = b.shape();
    let ls = lifted_shape(shape);
    let points: Vec<Vec<f64>> = b.points().iter().map(|x| lifted_point(x, shape.d)).collect();
    let fibers = b
        .points()
        .iter()
        .zip(b.fibers())
        .map(|(x, f)| match f {
            AffineFiber::Empty => Ok(AffineFiber::Empty),
            AffineFiber::Affine { base, directions } => {
                let jv = JetVec::from_flat(x, shape.m, shape.d, base.as_slice())?;
                let lb = DVector::from_vec(lift_jet(&jv).into_coeffs());
                AffineFiber::new(lb, lift_submodule(directions, x, shape)?)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Bundle::new(ls, points, fibers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::scalar_dim;

    #[test]
    fn constant_lifts_to_linear_in_v() {
        let p = JetVec::new(vec![Jet::new(vec![0.0], 0, vec![2.5]).unwrap()]).unwrap();
        let g = lift_jet(&p);
        assert_eq!(g.order(), 1);
        assert_eq!(g.basepoint(), &[0.0, 0.0]);
        // basis (0,0), (1,0), (0,1)
        assert_eq!(g.coeffs(), &[0.0, 0.0, 2.5]);
        assert_eq!(unlift(&g, 1, 1).unwrap(), p);
    }

    #[test]
    fn zero_round_trip() {
        let z = JetVec::zero(&[0.1, 0.2], 2, 2);
        let g = lift_jet(&z);
        assert!(g.coeffs().iter().all(|c| *c == 0.0));
        assert_eq!(unlift(&g, 2, 2).unwrap(), z);
    }

    #[test]
    fn full_and_zero_lifted_dims() {
        for (m, n, d) in [(0, 1, 1), (1, 1, 2), (2, 2, 1), (1, 2, 2)] {
            let shape = JetShape::new(m, n, d);
            let x = vec![0.0; n];
            let full = lift_submodule(&LinSubspace::full(shape.dim()), &x, shape).unwrap();
            assert_eq!(full.dim(), scalar_dim(m + 1, n + d) - scalar_dim(m + 1, n));
            let zero = lift_submodule(&LinSubspace::zero(shape.dim()), &x, shape).unwrap();
            assert_eq!(zero.dim(), full.dim() - shape.dim());
        }
    }

    #[test]
    fn non_submodule_is_rejected() {
        let shape = JetShape::new(1, 1, 1);
        let v = LinSubspace::span_of(2, &[vec![1.0, -1.0]]).unwrap();
        assert_eq!(lift_submodule(&v, &[0.0], shape), Err(Error::NotSubmodule));
    }

    #[test]
    fn sigma_membership() {
        let shape = JetShape::new(1, 1, 1);
        let ideal = LinSubspace::span_of(2, &[vec![0.0, 1.0]]).unwrap();
        let sigma = WhitneyConvexSet::submodule(ideal, vec![0.0], shape).unwrap();
        let p = JetVec::new(vec![Jet::new(vec![0.0], 1, vec![0.0, 3.0]).unwrap()]).unwrap();
        assert!(lift_sigma_membership(&sigma, &lift_jet(&p), 1e-10).unwrap());
        let mut c = lift_jet(&p).into_coeffs();
        c[0] = 1.0;
        let bad = Jet::new(vec![0.0, 0.0], 2, c).unwrap();
        assert!(!lift_sigma_membership(&sigma, &bad, 1e-10).unwrap());
    }
}
