//! The `C^{m,ω}` side: subset feasibility certificates, the finiteness scan
//! over small subsets, and Whitney ω-convex sets with a sampling check.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bundles::{distance, BhkInstance, Bundle};
use crate::error::{Error, Result};
use crate::jets::{basis, Jet, JetShape, JetVec};
use crate::linalg;
use crate::linspaces::{is_submodule, AffineFiber, LinSubspace, DEFAULT_TOL};
use crate::subsets;

pub use crate::modulus::RegularModulus;

/// Where the per-point linear constraints come from.
#[derive(Debug, Clone, Copy)]
pub enum Constraints<'a> {
    /// `Σ_j f_j(x_k) P_k^j(x_k) = φ(x_k)` with jets of order `m`.
    Bhk { inst: &'a BhkInstance, m: usize },
    /// `P⃗_k ∈ H⃗(x_k)`.
    Bundle(&'a Bundle),
}

impl Constraints<'_> {
    pub fn points(&self) -> &[Vec<f64>] {
        match self {
            Constraints::Bhk { inst, .. } => &inst.points,
            Constraints::Bundle(b) => b.points(),
        }
    }

    pub fn shape(&self) -> JetShape {
        match self {
            Constraints::Bhk { inst, m } => JetShape::new(*m, inst.nvars(), inst.d()),
            Constraints::Bundle(b) => b.shape(),
        }
    }

    /// Rows `(c, r)` constraining the flattened jet at point `k`, or `None`
    /// when the constraint is inconsistent.
    fn rows(&self, k: usize) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let shape = self.shape();
        match self {
            Constraints::Bhk { inst, .. } => {
                let sd = shape.scalar_dim();
                let mut c = DMatrix::zeros(1, shape.dim());
                for j in 0..shape.d {
                    c[(0, j * sd)] = inst.f_values[j][k];
                }
                let phi = inst.phi_values[k];
                if c.iter().all(|v| *v == 0.0) && phi != 0.0 {
                    return None;
                }
                Some((c, DVector::from_vec(vec![phi])))
            }
            Constraints::Bundle(b) => match b.fiber_at(k) {
                AffineFiber::Empty => None,
                AffineFiber::Affine { base, directions } => {
                    let n = shape.dim();
                    let p = directions.reject(&DMatrix::identity(n, n));
                    let r = &p * base;
                    Some((p, r))
                }
            },
        }
    }
}

/// Optimal value and witness of the subset problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetCertificate {
    /// Indices into the point list, increasing.
    pub subset: Vec<usize>,
    /// `M_S`, `+∞` when the constraints are inconsistent.
    pub value: f64,
    /// One jet vector per point of the subset; empty when `value` is infinite.
    pub witness: Vec<JetVec>,
    /// Norm of the objective gradient projected onto the constraint null
    /// space; zero at an exact minimizer.
    pub kkt_residual: f64,
    /// `|C z − r|` of the linear constraints.
    pub constraint_residual: f64,
}

impl SubsetCertificate {
    fn infinite(subset: Vec<usize>) -> Self {
        Self {
            subset,
            value: f64::INFINITY,
            witness: Vec::new(),
            kkt_residual: 0.0,
            constraint_residual: f64::INFINITY,
        }
    }
}

/// Objective operator `A` with `‖A z‖²` the subset objective:
/// `Σ_k |∂^α P_k^j(x_k)|²` plus, for `k < k'` with `0 < d <= 1`,
/// `|∂^α(P_k^j − P_k'^j)(x_k)|² / (ω(d) d^{m−|α|})²`.
pub fn objective_operator(points: &[Vec<f64>], shape: JetShape, omega: &RegularModulus) -> DMatrix<f64> {
    let b = basis(shape.n, shape.m);
    let sd = b.len();
    let nn = shape.dim();
    let s = points.len();
    let facts: Vec<f64> = b.indices().iter().map(|a| a.factorial()).collect();
    let mut pairs = Vec::new();
    for k in 0..s {
        for k2 in k + 1..s {
            let d = distance(&points[k], &points[k2]);
            if d > 0.0 && d <= 1.0 {
                pairs.push((k, k2, d));
            }
        }
    }
    let mut a = DMatrix::zeros((s + pairs.len()) * nn, s * nn);
    for k in 0..s {
        for i in 0..nn {
            a[(k * nn + i, k * nn + i)] = facts[i % sd];
        }
    }
    for (pi, &(k, k2, d)) in pairs.iter().enumerate() {
        let r0 = (s + pi) * nn;
        let h: Vec<f64> = points[k].iter().zip(&points[k2]).map(|(x, y)| x - y).collect();
        let shift = b.shift_matrix(&h);
        let w_om = omega.eval(d);
        for p in 0..sd {
            let w = facts[p] / (w_om * d.powi((shape.m - b.index(p).order()) as i32));
            for j in 0..shape.d {
                let r = r0 + j * sd + p;
                a[(r, k * nn + j * sd + p)] += w;
                for q in 0..sd {
                    let v = shift[(p, q)];
                    if v != 0.0 {
                        a[(r, k2 * nn + j * sd + q)] -= w * v;
                    }
                }
            }
        }
    }
    a
}

/// Solves the equality-constrained least-squares problem on `subset`.
pub fn subset_feasibility(
    subset: &[usize],
    cons: &Constraints<'_>,
    omega: &RegularModulus,
) -> Result<SubsetCertificate> {
    let all = cons.points();
    if subset.is_empty() {
        return Err(Error::InvalidInput("subset must be nonempty".into()));
    }
    let mut sub = subset.to_vec();
    sub.sort_unstable();
    sub.dedup();
    if sub.iter().any(|&k| k >= all.len()) {
        return Err(Error::InvalidInput("subset index out of range".into()));
    }
    let shape = cons.shape();
    let nn = shape.dim();
    let s = sub.len();
    let mut cblocks = Vec::with_capacity(s);
    for &k in &sub {
        match cons.rows(k) {
            Some(r) => cblocks.push(r),
            None => return Ok(SubsetCertificate::infinite(sub)),
        }
    }
    let pts: Vec<Vec<f64>> = sub.iter().map(|&k| all[k].clone()).collect();
    let a = objective_operator(&pts, shape, omega);
    let ncon: usize = cblocks.iter().map(|(c, _)| c.nrows()).sum();
    let mut c = DMatrix::zeros(ncon, s * nn);
    let mut r = DVector::zeros(ncon);
    let mut row = 0;
    for (k, (ck, rk)) in cblocks.iter().enumerate() {
        c.view_mut((row, k * nn), (ck.nrows(), nn)).copy_from(ck);
        r.rows_mut(row, rk.len()).copy_from(rk);
        row += ck.nrows();
    }
    // Null-space method: z = z_p + N y. Forming AᵀA would square the
    // d^{-m-1} pair weights and swamp the constraints.
    let z_p = linalg::lstsq(&c, &r, 1e-12);
    let constraint_residual = (&c * &z_p - &r).norm();
    if constraint_residual > 1e-8 * (1.0 + r.norm()) {
        return Ok(SubsetCertificate::infinite(sub));
    }
    let null = linalg::null_basis(&c, 1e-12);
    let az_p = &a * &z_p;
    let (z, kkt_residual) = if null.ncols() == 0 {
        (z_p, 0.0)
    } else {
        let an = &a * &null;
        let y = linalg::lstsq(&an, &(-&az_p), 1e-13);
        let res = &az_p + &an * &y;
        let grad = (an.transpose() * &res).norm();
        (z_p + &null * y, grad)
    };
    let constraint_residual = (&c * &z - &r).norm();
    let value = (&a * &z).norm();
    let witness = pts
        .iter()
        .enumerate()
        .map(|(k, x)| JetVec::from_flat(x, shape.m, shape.d, z.rows(k * nn, nn).as_slice()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SubsetCertificate {
        subset: sub,
        value,
        witness,
        kkt_residual,
        constraint_residual,
    })
}

/// Result of scanning all small subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// Certificate with the largest `M_S` (first in enumeration order on ties).
    pub best: SubsetCertificate,
    pub examined: usize,
    pub exhaustive: bool,
}

/// Largest `M_S` over subsets with at most `k_sharp` points. Subsets are
/// enumerated by size then lexicographically; above `budget` subsets, the
/// sizes that do not fit are subsampled with the given seed.
pub fn finiteness_scan(
    cons: &Constraints<'_>,
    omega: &RegularModulus,
    k_sharp: usize,
    budget: usize,
    seed: u64,
) -> Result<ScanResult> {
    if k_sharp == 0 {
        return Err(Error::InvalidInput("k_sharp must be at least 1".into()));
    }
    let n = cons.points().len();
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let (list, exhaustive) = subsets::subsets(n, k_sharp, budget.max(1), seed);
    let certs = list
        .par_iter()
        .map(|s| subset_feasibility(s, cons, omega))
        .collect::<Result<Vec<_>>>()?;
    let examined = certs.len();
    let mut best: Option<SubsetCertificate> = None;
    for c in certs {
        if best.as_ref().map_or(true, |b| c.value > b.value) {
            best = Some(c);
        }
    }
    Ok(ScanResult {
        best: best.expect("at least one subset"),
        examined,
        exhaustive,
    })
}

/// Shape of a Whitney ω-convex set.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexKind {
    /// A linear subspace, meant to be a submodule.
    Submodule(LinSubspace),
    /// `core + {Σ y_k e_k : Σ (y_k/r_k)² <= 1}` with `e_k` an orthonormal
    /// basis of the complement of `core`.
    Capped {
        core: LinSubspace,
        axes: DMatrix<f64>,
        radii: Vec<f64>,
    },
}

/// A closed convex set of jet vectors at a basepoint, with a claimed Whitney
/// constant.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitneyConvexSet {
    pub kind: ConvexKind,
    pub basepoint: Vec<f64>,
    pub shape: JetShape,
    pub whitney_constant: f64,
    /// Translation of the set; nonzero centers off the core break symmetry.
    pub center: DVector<f64>,
}

impl WhitneyConvexSet {
    pub fn submodule(space: LinSubspace, basepoint: Vec<f64>, shape: JetShape) -> Result<Self> {
        if space.ambient_dim() != shape.dim() {
            return Err(Error::DimensionMismatch {
                expected: shape.dim(),
                found: space.ambient_dim(),
                context: "subspace ambient dimension",
            });
        }
        Ok(Self {
            kind: ConvexKind::Submodule(space),
            center: DVector::zeros(shape.dim()),
            basepoint,
            shape,
            whitney_constant: 1.0,
        })
    }

    /// Capped set around `core` with one radius per complement direction.
    pub fn capped(core: LinSubspace, radii: Vec<f64>, basepoint: Vec<f64>, shape: JetShape, a: f64) -> Result<Self> {
        if core.ambient_dim() != shape.dim() {
            return Err(Error::DimensionMismatch {
                expected: shape.dim(),
                found: core.ambient_dim(),
                context: "core ambient dimension",
            });
        }
        let axes = core.orthogonal_complement().basis().clone();
        if radii.len() != axes.ncols() {
            return Err(Error::DimensionMismatch {
                expected: axes.ncols(),
                found: radii.len(),
                context: "radii",
            });
        }
        if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidInput("radii must be positive and finite".into()));
        }
        Ok(Self {
            kind: ConvexKind::Capped { core, axes, radii },
            center: DVector::zeros(shape.dim()),
            basepoint,
            shape,
            whitney_constant: a,
        })
    }

    pub fn with_center(mut self, center: DVector<f64>) -> Self {
        self.center = center;
        self
    }

    /// `p ∈ σ ⇔ −p ∈ σ`, which holds iff the center lies in the core.
    pub fn is_symmetric(&self) -> bool {
        let tol = DEFAULT_TOL * (1.0 + self.center.norm());
        match &self.kind {
            ConvexKind::Submodule(v) => v.residual(&self.center) <= tol,
            ConvexKind::Capped { axes, .. } => (axes.transpose() * &self.center).norm() <= tol,
        }
    }

    /// Minkowski gauge: `p ∈ t·σ` iff `gauge(p) <= t`.
    pub fn gauge(&self, p: &DVector<f64>) -> f64 {
        let q = p - &self.center;
        match &self.kind {
            ConvexKind::Submodule(v) => {
                if v.residual(&q) <= DEFAULT_TOL * (1.0 + q.norm()) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ConvexKind::Capped { axes, radii, .. } => {
                let y = axes.transpose() * q;
                y.iter().zip(radii).map(|(v, r)| (v / r).powi(2)).sum::<f64>().sqrt()
            }
        }
    }

    pub fn contains(&self, p: &DVector<f64>, scale: f64) -> bool {
        self.gauge(p) <= scale * (1.0 + 1e-9)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let n = self.shape.dim();
        let mut p = self.center.clone();
        match &self.kind {
            ConvexKind::Submodule(v) => {
                for c in v.basis().column_iter() {
                    p += c * rng.gen_range(-1.0..=1.0);
                }
            }
            ConvexKind::Capped { core, axes, radii } => {
                for c in core.basis().column_iter() {
                    p += c * rng.gen_range(-1.0..=1.0);
                }
                let mut u: Vec<f64> = (0..radii.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                let shrink = rng.gen_range(0.0..=1.0) / norm.max(1e-300);
                for v in &mut u {
                    *v *= shrink;
                }
                for (k, c) in axes.column_iter().enumerate() {
                    p += c * (u[k] * radii[k]);
                }
            }
        }
        debug_assert_eq!(p.len(), n);
        p
    }
}

/// Outcome of [`convexity_check`].
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexityOutcome {
    Pass {
        /// Largest gauge of `P⃗ ⊙ Q` over the samples.
        max_gauge: f64,
        samples: usize,
    },
    Counterexample {
        delta: f64,
        p: JetVec,
        q: Jet,
        gauge: f64,
    },
    /// The set is not symmetric about the origin.
    NotSymmetric,
    /// A submodule-kind set whose space is not closed under the action.
    NotSubmodule,
}

impl ConvexityOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, ConvexityOutcome::Pass { .. })
    }
}

/// Samples `P⃗ ∈ σ` with `|∂^α P_j(x)| <= ω(δ) δ^{m−|α|}` and `Q` with
/// `|∂^α Q(x)| <= δ^{−|α|}`, and checks `P⃗ ⊙ Q ∈ A·σ`. Radii `δ` cycle through
/// `1, 1/2, ..., 1/32`. Sampling can only refute; the submodule kind is in
/// addition checked exactly.
pub fn convexity_check(
    sigma: &WhitneyConvexSet,
    omega: &RegularModulus,
    trials: usize,
    seed: u64,
) -> Result<ConvexityOutcome> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    if !sigma.is_symmetric() {
        return Ok(ConvexityOutcome::NotSymmetric);
    }
    let shape = sigma.shape;
    let x = &sigma.basepoint;
    if let ConvexKind::Submodule(v) = &sigma.kind {
        if !is_submodule(v, x, shape, DEFAULT_TOL)? {
            return Ok(ConvexityOutcome::NotSubmodule);
        }
    }
    let b = basis(shape.n, shape.m);
    let sd = b.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_gauge: f64 = 0.0;
    for t in 0..trials {
        let delta = 0.5f64.powi((t % 6) as i32);
        let od = omega.eval(delta);
        let mut p = sigma.sample(&mut rng);
        let mut factor: f64 = 1.0;
        for (i, v) in p.iter().enumerate() {
            let alpha = b.index(i % sd);
            let deriv = (v * alpha.factorial()).abs();
            let bound = od * delta.powi((shape.m - alpha.order()) as i32);
            if deriv > bound {
                factor = factor.min(bound / deriv);
            }
        }
        p *= factor;
        let qc: Vec<f64> = b
            .indices()
            .iter()
            .map(|alpha| rng.gen_range(-1.0..=1.0) * delta.powi(-(alpha.order() as i32)) / alpha.factorial())
            .collect();
        let q = Jet::new(x.clone(), shape.m, qc)?;
        let pv = JetVec::from_flat(x, shape.m, shape.d, p.as_slice())?;
        let prod = pv.act(&q)?;
        let g = sigma.gauge(&DVector::from_vec(prod.flatten()));
        if !(g <= sigma.whitney_constant * (1.0 + 1e-9)) {
            return Ok(ConvexityOutcome::Counterexample {
                delta,
                p: pv,
                q,
                gauge: g,
            });
        }
        max_gauge = max_gauge.max(g);
    }
    Ok(ConvexityOutcome::Pass {
        max_gauge,
        samples: trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_min_norm() {
        let inst = BhkInstance::new(vec![vec![0.3, 0.1]], vec![vec![1.0], vec![0.7]], vec![-2.5]).unwrap();
        let cons = Constraints::Bhk { inst: &inst, m: 0 };
        let om = RegularModulus::lipschitz();
        // f = (1, 0.7): min-norm point on the line p1 + 0.7 p2 = φ
        let c = subset_feasibility(&[0], &cons, &om).unwrap();
        let s: f64 = 1.0 + 0.49;
        assert!((c.value - 2.5 / s.sqrt()).abs() < 1e-12);
        assert!((c.witness[0].component(0).coeffs()[0] + 2.5 / s).abs() < 1e-12);
    }

    #[test]
    fn unit_coefficient_example() {
        let inst = BhkInstance::new(vec![vec![0.0, 0.0]], vec![vec![1.0], vec![0.0]], vec![-1.5]).unwrap();
        let c = subset_feasibility(&[0], &Constraints::Bhk { inst: &inst, m: 0 }, &RegularModulus::lipschitz()).unwrap();
        assert!((c.value - 1.5).abs() < 1e-12);
        assert!((c.witness[0].flatten()[0] + 1.5).abs() < 1e-12);
        assert!(c.witness[0].flatten()[1].abs() < 1e-12);
    }

    #[test]
    fn inconsistent_and_zero() {
        let inst = BhkInstance::new(vec![vec![0.0], vec![1.0]], vec![vec![0.0, 1.0]], vec![1.0, 0.0]).unwrap();
        let cons = Constraints::Bhk { inst: &inst, m: 1 };
        let om = RegularModulus::lipschitz();
        assert!(subset_feasibility(&[0], &cons, &om).unwrap().value.is_infinite());
        let c = subset_feasibility(&[1], &cons, &om).unwrap();
        assert_eq!(c.value, 0.0);
        let scan = finiteness_scan(&cons, &om, 2, 100, 0).unwrap();
        assert!(scan.best.value.is_infinite());
        assert_eq!(scan.best.subset, vec![0]);
    }

    #[test]
    fn submodule_passes_with_constant_one() {
        let shape = JetShape::new(2, 1, 1);
        let ideal = LinSubspace::span_of(3, &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let s = WhitneyConvexSet::submodule(ideal, vec![0.0], shape).unwrap();
        let out = convexity_check(&s, &RegularModulus::lipschitz(), 200, 1).unwrap();
        assert!(out.passed(), "{out:?}");
        let bad = LinSubspace::span_of(3, &[vec![1.0, -1.0, 0.0]]).unwrap();
        let s = WhitneyConvexSet::submodule(bad, vec![0.0], shape).unwrap();
        assert_eq!(convexity_check(&s, &RegularModulus::lipschitz(), 10, 1).unwrap(), ConvexityOutcome::NotSubmodule);
    }

    #[test]
    fn off_center_set_is_not_symmetric() {
        let shape = JetShape::new(1, 1, 1);
        let s = WhitneyConvexSet::capped(LinSubspace::zero(2), vec![1.0, 1.0], vec![0.0], shape, 1.0)
            .unwrap()
            .with_center(DVector::from_vec(vec![0.5, 0.0]));
        assert!(!s.is_symmetric());
        assert_eq!(convexity_check(&s, &RegularModulus::lipschitz(), 5, 0).unwrap(), ConvexityOutcome::NotSymmetric);
    }

    #[test]
    fn wide_cap_behaves_like_submodule() {
        let shape = JetShape::new(2, 2, 1);
        let core = LinSubspace::span_of(6, &(1..6).map(|i| {
            let mut v = vec![0.0; 6];
            v[i] = 1.0;
            v
        }).collect::<Vec<_>>()).unwrap();
        let s = WhitneyConvexSet::capped(core, vec![1e6], vec![0.0, 0.0], shape, 1.0 + 1e-3).unwrap();
        let out = convexity_check(&s, &RegularModulus::power(0.5).unwrap(), 300, 3).unwrap();
        assert!(out.passed(), "{out:?}");
    }
}
