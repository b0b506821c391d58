//! Linear and affine subspaces of the coefficient space of `(P_{m,n})^d`, and
//! the submodule calculus over the jet ring.
//!
//! Coefficient vectors are flattened component-major (see [`JetVec::flatten`]).
//! In Taylor coordinates about the basepoint, multiplying by the coordinate
//! jet `(y - x)_i` is a fixed coefficient shift, so the module action does not
//! depend on where the basepoint sits. The `x` arguments below are kept for the
//! contract and validated, but the matrices are basepoint-free.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jets::{JetShape, JetVec};
use crate::linalg::{self, DEFAULT_RANK_TOL};

/// Default tolerance for membership and submodule tests.
pub const DEFAULT_TOL: f64 = 1e-8;

/// A linear subspace with an orthonormal basis stored as matrix columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LinSubspace {
    basis: DMatrix<f64>,
}

impl LinSubspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Span of the columns of `vectors`.
    pub fn span(vectors: &DMatrix<f64>) -> Self {
        Self::span_with_tol(vectors, DEFAULT_RANK_TOL)
    }

    pub fn span_with_tol(vectors: &DMatrix<f64>, rank_tol: f64) -> Self {
        Self {
            basis: linalg::range_basis(vectors, rank_tol),
        }
    }

    pub fn span_of(ambient_dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        let mut m = DMatrix::zeros(ambient_dim, vectors.len());
        for (k, v) in vectors.iter().enumerate() {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    found: v.len(),
                    context: "spanning vector",
                });
            }
            m.set_column(k, &DVector::from_column_slice(v));
        }
        Ok(Self::span(&m))
    }

    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        let k = basis.ncols();
        let gram = basis.transpose() * &basis;
        if (gram - DMatrix::identity(k, k)).amax() > 1e-10 {
            return Err(Error::InvalidInput("basis is not orthonormal".into()));
        }
        Ok(Self { basis })
    }

    /// `{z : a z = 0}`
    pub fn kernel(a: &DMatrix<f64>, rank_tol: f64) -> Self {
        Self {
            basis: linalg::null_basis(a, rank_tol),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Distance from `v` to the subspace.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        self.residual(v) <= tol
    }

    /// `(I - B Bᵀ) m`
    pub fn reject(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m - &self.basis * (self.basis.transpose() * m)
    }

    pub fn is_subspace_of(&self, other: &LinSubspace, tol: f64) -> bool {
        linalg::max_column_norm(&other.reject(&self.basis)) <= tol
    }

    pub fn orthogonal_complement(&self) -> LinSubspace {
        LinSubspace::kernel(&self.basis.transpose(), DEFAULT_RANK_TOL)
    }

    pub fn sum(&self, other: &LinSubspace) -> LinSubspace {
        let stacked = linalg::hstack(&[&self.basis, &other.basis], self.ambient_dim());
        LinSubspace::span(&stacked)
    }
}

/// An affine subset of `(P_{m,n})^d`: empty, or `base + span(directions)` with
/// `base` orthogonal to the directions (the minimum-norm point).
#[derive(Debug, Clone, PartialEq)]
pub enum AffineFiber {
    Empty,
    Affine {
        base: DVector<f64>,
        directions: LinSubspace,
    },
}

impl AffineFiber {
    pub fn full(ambient_dim: usize) -> Self {
        AffineFiber::Affine {
            base: DVector::zeros(ambient_dim),
            directions: LinSubspace::full(ambient_dim),
        }
    }

    pub fn point(p: DVector<f64>) -> Self {
        let n = p.len();
        AffineFiber::Affine {
            base: p,
            directions: LinSubspace::zero(n),
        }
    }

    /// `p + V`, with the base normalized to the minimum-norm representative.
    pub fn new(p: DVector<f64>, directions: LinSubspace) -> Result<Self> {
        if p.len() != directions.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: directions.ambient_dim(),
                found: p.len(),
                context: "fiber base",
            });
        }
        let base = &p - directions.project(&p);
        Ok(AffineFiber::Affine { base, directions })
    }

    /// Solution set of `c z = r`; empty if the least-squares residual exceeds
    /// `tol · (1 + |r|)`.
    pub fn from_constraints(c: &DMatrix<f64>, r: &DVector<f64>, tol: f64) -> Result<Self> {
        if c.nrows() != r.len() {
            return Err(Error::DimensionMismatch {
                expected: c.nrows(),
                found: r.len(),
                context: "constraint right-hand side",
            });
        }
        let z = linalg::lstsq(c, r, DEFAULT_RANK_TOL);
        let resid = (c * &z - r).norm();
        if resid > tol * (1.0 + r.norm()) {
            return Ok(AffineFiber::Empty);
        }
        let directions = LinSubspace::kernel(c, DEFAULT_RANK_TOL);
        AffineFiber::new(z, directions)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, AffineFiber::Empty)
    }

    /// Dimension, `None` for the empty fiber.
    pub fn dim(&self) -> Option<usize> {
        match self {
            AffineFiber::Empty => None,
            AffineFiber::Affine { directions, .. } => Some(directions.dim()),
        }
    }

    /// Dimension with `-1` standing for empty.
    pub fn signed_dim(&self) -> i64 {
        self.dim().map_or(-1, |d| d as i64)
    }

    pub fn base(&self) -> Option<&DVector<f64>> {
        match self {
            AffineFiber::Empty => None,
            AffineFiber::Affine { base, .. } => Some(base),
        }
    }

    pub fn directions(&self) -> Option<&LinSubspace> {
        match self {
            AffineFiber::Empty => None,
            AffineFiber::Affine { directions, .. } => Some(directions),
        }
    }

    /// Distance from `p` to the fiber, `+∞` when empty.
    pub fn distance(&self, p: &DVector<f64>) -> f64 {
        match self {
            AffineFiber::Empty => f64::INFINITY,
            AffineFiber::Affine { base, directions } => directions.residual(&(p - base)),
        }
    }

    pub fn contains(&self, p: &DVector<f64>, tol: f64) -> bool {
        self.distance(p) <= tol
    }

    pub fn contains_jet(&self, p: &JetVec, tol: f64) -> bool {
        self.contains(&DVector::from_vec(p.flatten()), tol)
    }

    /// Whether `self ⊆ other` up to `tol`.
    pub fn is_subset_of(&self, other: &AffineFiber, tol: f64) -> bool {
        match (self, other) {
            (AffineFiber::Empty, _) => true,
            (_, AffineFiber::Empty) => false,
            (
                AffineFiber::Affine { base, directions },
                AffineFiber::Affine {
                    directions: od, ..
                },
            ) => other.contains(base, tol) && directions.is_subspace_of(od, tol),
        }
    }

    /// The base as a jet vector at `x`.
    pub fn base_jet(&self, x: &[f64], shape: JetShape) -> Option<JetVec> {
        self.base()
            .map(|b| JetVec::from_flat(x, shape.m, shape.d, b.as_slice()).expect("fiber ambient matches shape"))
    }

    fn constraint_rows(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        match self {
            AffineFiber::Empty => None,
            AffineFiber::Affine { base, directions } => {
                let n = base.len();
                let proj = directions.reject(&DMatrix::identity(n, n));
                let rhs = &proj * base;
                Some((proj, rhs))
            }
        }
    }
}

/// Intersection of two affine fibers in the same ambient space.
pub fn affine_intersect(a: &AffineFiber, b: &AffineFiber, tol: f64) -> Result<AffineFiber> {
    let (ca, ra) = match a.constraint_rows() {
        Some(x) => x,
        None => return Ok(AffineFiber::Empty),
    };
    let (cb, rb) = match b.constraint_rows() {
        Some(x) => x,
        None => return Ok(AffineFiber::Empty),
    };
    let n = ca.ncols();
    if cb.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cb.ncols(),
            context: "fiber ambient dimension",
        });
    }
    let c = linalg::vstack(&[ca, cb], n);
    let mut r = DVector::zeros(ra.len() + rb.len());
    r.rows_mut(0, ra.len()).copy_from(&ra);
    r.rows_mut(ra.len(), rb.len()).copy_from(&rb);
    AffineFiber::from_constraints(&c, &r, tol)
}

/// Matrices of multiplication by `(y - x)_i`, `i = 1..n`, on the flattened
/// coefficient space of `(P_{m,n})^d`.
pub fn multiplication_matrices(shape: JetShape) -> Vec<DMatrix<f64>> {
    let b = shape.basis();
    let sd = b.len();
    (0..shape.n)
        .map(|i| {
            let mut m = DMatrix::zeros(shape.dim(), shape.dim());
            for (col, alpha) in b.indices().iter().enumerate() {
                if alpha.order() == shape.m {
                    continue;
                }
                let mut e = alpha.exponents().to_vec();
                e[i] += 1;
                let row = b
                    .position(&crate::jets::MultiIndex::new(e))
                    .expect("degree within range");
                for j in 0..shape.d {
                    m[(j * sd + row, j * sd + col)] = 1.0;
                }
            }
            m
        })
        .collect()
}

fn check_space(v: &LinSubspace, x: &[f64], shape: JetShape) -> Result<()> {
    if v.ambient_dim() != shape.dim() {
        return Err(Error::DimensionMismatch {
            expected: shape.dim(),
            found: v.ambient_dim(),
            context: "subspace ambient dimension",
        });
    }
    if x.len() != shape.n {
        return Err(Error::DimensionMismatch {
            expected: shape.n,
            found: x.len(),
            context: "basepoint",
        });
    }
    Ok(())
}

/// Smallest submodule containing `v`.
pub fn submodule_closure(v: &LinSubspace, x: &[f64], shape: JetShape) -> Result<LinSubspace> {
    check_space(v, x, shape)?;
    let mults = multiplication_matrices(shape);
    let mut cur = v.clone();
    loop {
        let mut blocks: Vec<DMatrix<f64>> = vec![cur.basis().clone()];
        blocks.extend(mults.iter().map(|m| m * cur.basis()));
        let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
        let next = LinSubspace::span(&linalg::hstack(&refs, shape.dim()));
        if next.dim() == cur.dim() {
            return Ok(cur);
        }
        cur = next;
    }
}

/// Largest submodule contained in `v`.
pub fn submodule_core(v: &LinSubspace, x: &[f64], shape: JetShape) -> Result<LinSubspace> {
    check_space(v, x, shape)?;
    let mults = multiplication_matrices(shape);
    let mut cur = v.clone();
    loop {
        if cur.dim() == 0 {
            return Ok(cur);
        }
        let blocks: Vec<DMatrix<f64>> = mults.iter().map(|m| cur.reject(&(m * cur.basis()))).collect();
        let stacked = linalg::vstack(&blocks, cur.dim());
        let keep = linalg::null_basis(&stacked, DEFAULT_RANK_TOL);
        if keep.ncols() == cur.dim() {
            return Ok(cur);
        }
        cur = LinSubspace::span(&(cur.basis() * keep));
    }
}

/// Whether `x_i ⊙ b` stays in `v` for every generator and basis vector.
pub fn is_submodule(v: &LinSubspace, x: &[f64], shape: JetShape, tol: f64) -> Result<bool> {
    check_space(v, x, shape)?;
    Ok(multiplication_matrices(shape)
        .iter()
        .all(|m| linalg::max_column_norm(&v.reject(&(m * v.basis()))) <= tol))
}
