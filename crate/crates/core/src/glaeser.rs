//! Glaeser refinement of bundles and the solvability decision.
//!
//! For a basepoint `x0` and nearby points `x1..xk`, the compatibility form is
//!
//! ```text
//! Q(P0..Pk; x0..xk) = Σ_{i != i'} Σ_j Σ_{|α|<=m} |∂^α(P_{i,j} − P_{i',j})(x_i)|² / |x_i − x_i'|^{2(m−|α|)}
//! ```
//!
//! Minimizing over the fibers at `x1..xk` leaves a positive semidefinite
//! quadratic in the jet at `x0`. A refinement pass sums these quadratics over
//! all tuples of at most `k_sharp` points in the finest ball around `x0` and
//! keeps the near-null directions around the minimizer.
//!
//! All quadratic forms are assembled in a unit-scaled frame: with
//! `y = x0 + s·u` and `P̂(u) = s^{-m} P(x0 + s·u)`, every summand of `Q` is
//! unchanged, and the coefficient matrices stay well conditioned even when the
//! sample spacing is tiny.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bundles::{distance, Bundle};
use crate::error::{Error, Result};
use crate::jets::{basis, JetShape, JetVec};
use crate::linalg;
use crate::linspaces::{submodule_core, AffineFiber, LinSubspace};
use crate::subsets;

/// Knobs of the refinement and the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementConfig {
    /// Largest tuple size, not counting the basepoint.
    pub k_sharp: usize,
    /// Strictly decreasing radii. Empty means dyadic radii from the data.
    pub scales: Vec<f64>,
    /// Relative eigenvalue cutoff for near-null directions.
    pub eta: f64,
    /// Largest minimum of the aggregated form that still counts as zero.
    pub tol_min: f64,
    /// Replace refined direction spaces by their submodule core.
    pub snap_to_submodule: bool,
    /// Tuples per point above which tuples are subsampled.
    pub tuple_budget: usize,
    pub seed: u64,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            k_sharp: 2,
            scales: Vec::new(),
            eta: 1e-6,
            tol_min: 1e-6,
            snap_to_submodule: false,
            tuple_budget: 2048,
            seed: 0,
        }
    }
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_sharp == 0 {
            return Err(Error::InvalidInput("k_sharp must be at least 1".into()));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidInput("eta must lie in (0, 1)".into()));
        }
        if !(self.tol_min >= 0.0 && self.tol_min.is_finite()) {
            return Err(Error::InvalidInput("tol_min must be finite and nonnegative".into()));
        }
        if self.tuple_budget == 0 {
            return Err(Error::InvalidInput("tuple_budget must be positive".into()));
        }
        if self.scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidInput("scales must be positive and finite".into()));
        }
        if self.scales.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput("scales must be strictly decreasing".into()));
        }
        Ok(())
    }

    /// The configured scales, or the data-driven default.
    pub fn resolved_scales(&self, points: &[Vec<f64>]) -> Vec<f64> {
        if self.scales.is_empty() {
            default_scales(points)
        } else {
            self.scales.clone()
        }
    }
}

/// `δ_min · 2^j` for `j = J, ..., 0`, where `δ_min` is the smallest pairwise
/// distance and the largest radius does not exceed the diameter (at most 31
/// radii).
pub fn default_scales(points: &[Vec<f64>]) -> Vec<f64> {
    let mut dmin = f64::INFINITY;
    let mut dmax: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = distance(&points[i], &points[j]);
            dmin = dmin.min(d);
            dmax = dmax.max(d);
        }
    }
    if !dmin.is_finite() {
        return Vec::new();
    }
    let mut out = vec![dmin];
    while out.len() < 31 {
        let next = out.last().unwrap() * 2.0;
        if next > dmax * (1.0 + 1e-12) {
            break;
        }
        out.push(next);
    }
    out.reverse();
    out
}

fn check_points(xs: &[Vec<f64>], n: usize) -> Result<()> {
    for x in xs {
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
                context: "point coordinates",
            });
        }
    }
    Ok(())
}

/// Direct evaluation of the compatibility form `Q`.
pub fn q_form(jets: &[JetVec], xs: &[Vec<f64>]) -> Result<f64> {
    if jets.len() != xs.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: jets.len(),
            context: "jets per point",
        });
    }
    let Some(first) = jets.first() else {
        return Ok(0.0);
    };
    let m = first.order();
    let d = first.d();
    check_points(xs, first.basepoint().len())?;
    for j in jets {
        if j.order() != m {
            return Err(Error::OrderMismatch {
                left: m,
                right: j.order(),
            });
        }
        if j.d() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: j.d(),
                context: "jet vector length",
            });
        }
    }
    let b = basis(xs[0].len(), m);
    let mut total = 0.0;
    for i in 0..xs.len() {
        for k in 0..xs.len() {
            let dist = distance(&xs[i], &xs[k]);
            if i == k || dist == 0.0 {
                continue;
            }
            for c in 0..d {
                for alpha in b.indices() {
                    let a = jets[i].component(c).deriv_eval(alpha, &xs[i])?;
                    let bb = jets[k].component(c).deriv_eval(alpha, &xs[i])?;
                    total += ((a - bb) / dist.powi((m - alpha.order()) as i32)).powi(2);
                }
            }
        }
    }
    Ok(total)
}

/// Per-coefficient factors `s^{|α| − m}` mapping coefficients about a point to
/// the unit-scaled frame of radius `s`.
fn frame_weights(shape: JetShape, s: f64) -> DVector<f64> {
    let b = shape.basis();
    let per: Vec<f64> = b
        .indices()
        .iter()
        .map(|a| s.powi(a.order() as i32 - shape.m as i32))
        .collect();
    DVector::from_iterator(shape.dim(), (0..shape.d).flat_map(|_| per.iter().copied()))
}

/// The linear map `z ↦ residual vector` whose squared norm is `Q`, for points
/// already expressed in the unit-scaled frame. Columns are the concatenated
/// flattened coefficients, each about its own point.
fn q_operator(shape: JetShape, us: &[Vec<f64>]) -> DMatrix<f64> {
    let b = shape.basis();
    let sd = b.len();
    let nn = shape.dim();
    let k = us.len();
    let pairs = k * k.saturating_sub(1);
    let mut a = DMatrix::zeros(pairs * nn, k * nn);
    let facts: Vec<f64> = b.indices().iter().map(|al| al.factorial()).collect();
    let mut row0 = 0;
    for i in 0..k {
        for i2 in 0..k {
            if i == i2 {
                continue;
            }
            let dist = distance(&us[i], &us[i2]);
            let h: Vec<f64> = us[i].iter().zip(&us[i2]).map(|(a, b)| a - b).collect();
            let shift = b.shift_matrix(&h);
            for p in 0..sd {
                let w = facts[p] / dist.powi((shape.m - b.index(p).order()) as i32);
                for j in 0..shape.d {
                    let r = row0 + j * sd + p;
                    a[(r, i * nn + j * sd + p)] += w;
                    for q in 0..sd {
                        let sv = shift[(p, q)];
                        if sv != 0.0 {
                            a[(r, i2 * nn + j * sd + q)] -= w * sv;
                        }
                    }
                }
            }
            row0 += nn;
        }
    }
    a
}

/// A fiber re-expressed in the scaled frame: `ŵ + Q t` with orthonormal `Q`.
/// `r_inv_factor` maps scaled parameters `t` back to coefficients of the
/// original orthonormal direction basis.
struct ScaledFiber {
    w: DVector<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

fn scale_fiber(base: &DVector<f64>, dirs: &LinSubspace, weights: &DVector<f64>) -> ScaledFiber {
    let w = base.component_mul(weights);
    let k = dirs.dim();
    if k == 0 {
        return ScaledFiber {
            w,
            q: DMatrix::zeros(base.len(), 0),
            r: DMatrix::zeros(0, 0),
        };
    }
    let mut wu = dirs.basis().clone();
    for (mut row, &s) in wu.row_iter_mut().zip(weights.iter()) {
        row *= s;
    }
    let qr = wu.qr();
    ScaledFiber {
        w,
        q: qr.q(),
        r: qr.r(),
    }
}

/// Per-tuple pieces `q_T(t) = |H t + g|²`.
struct TupleForm {
    h: DMatrix<f64>,
    g: DVector<f64>,
}

fn tuple_form(
    shape: JetShape,
    x0: &[f64],
    s: f64,
    center: &ScaledFiber,
    others: &[(&[f64], &AffineFiber)],
) -> Option<TupleForm> {
    let nn = shape.dim();
    let mut us = vec![vec![0.0; x0.len()]];
    for (x, _) in others {
        us.push(x.iter().zip(x0).map(|(a, b)| (a - b) / s).collect());
    }
    let a = q_operator(shape, &us);
    let rows = a.nrows();
    let weights = frame_weights(shape, s);
    let a0 = a.columns(0, nn).into_owned();
    let mut g = &a0 * &center.w;
    let mut gblocks = Vec::new();
    for (i, (_, fib)) in others.iter().enumerate() {
        let (base, dirs) = match fib {
            AffineFiber::Empty => return None,
            AffineFiber::Affine { base, directions } => (base, directions),
        };
        let sf = scale_fiber(base, dirs, &weights);
        let ai = a.columns((i + 1) * nn, nn);
        g += &ai * &sf.w;
        if sf.q.ncols() > 0 {
            gblocks.push(&ai * &sf.q);
        }
    }
    let h0 = &a0 * &center.q;
    let (h, g) = if gblocks.is_empty() {
        (h0, g)
    } else {
        let refs: Vec<&DMatrix<f64>> = gblocks.iter().collect();
        let gm = linalg::hstack(&refs, rows);
        let range = LinSubspace::span_with_tol(&gm, linalg::DEFAULT_RANK_TOL);
        (range.reject(&h0), &g - range.project(&g))
    };
    Some(TupleForm { h, g })
}

/// `MIN(x0, P0; x1..xk)`: the least value of `Q` with `P0` fixed and the other
/// jets ranging over their fibers. `+∞` if any fiber is empty.
pub fn min_over_fibers(x0: &[f64], p0: &JetVec, tuple: &[(Vec<f64>, AffineFiber)]) -> Result<f64> {
    let shape = p0.shape();
    check_points(&tuple.iter().map(|t| t.0.clone()).collect::<Vec<_>>(), x0.len())?;
    if x0.len() != shape.n {
        return Err(Error::DimensionMismatch {
            expected: shape.n,
            found: x0.len(),
            context: "basepoint",
        });
    }
    if tuple.iter().any(|(_, f)| f.is_empty()) {
        return Ok(f64::INFINITY);
    }
    for (i, (x, f)) in tuple.iter().enumerate() {
        if x.as_slice() == x0 || tuple[..i].iter().any(|(y, _)| y == x) {
            return Err(Error::DuplicatePoint(i + 1));
        }
        if f.base().map(|b| b.len()) != Some(shape.dim()) {
            return Err(Error::DimensionMismatch {
                expected: shape.dim(),
                found: f.base().map_or(0, |b| b.len()),
                context: "fiber ambient dimension",
            });
        }
    }
    if tuple.is_empty() {
        return Ok(0.0);
    }
    let s = tuple
        .iter()
        .map(|(x, _)| distance(x, x0))
        .fold(0.0, f64::max);
    let p = p0.recenter(x0)?;
    let base = DVector::from_vec(p.flatten());
    let center = scale_fiber(&base, &LinSubspace::zero(shape.dim()), &frame_weights(shape, s));
    let others: Vec<(&[f64], &AffineFiber)> = tuple.iter().map(|(x, f)| (x.as_slice(), f)).collect();
    let form = tuple_form(shape, x0, s, &center, &others).expect("fibers checked nonempty");
    Ok(form.g.norm_squared())
}

/// Outcome of refining one fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRefinement {
    pub fiber: AffineFiber,
    /// Minimum of the aggregated form over the incoming fiber.
    pub q_min: Option<f64>,
    pub tuples: usize,
    /// False when the ball around the point held no other sample.
    pub resolved: bool,
}

/// Aggregated quadratic `Σ_T q_T` on the fiber at `x0`, in scaled parameters.
struct Aggregate {
    forms: Vec<TupleForm>,
    center: ScaledFiber,
    hit_empty: bool,
}

fn neighbors_within(b: &Bundle, i0: usize, radius: f64) -> Vec<usize> {
    let x0 = &b.points()[i0];
    let r = radius * (1.0 + 1e-9);
    (0..b.len())
        .filter(|&j| j != i0 && distance(&b.points()[j], x0) <= r)
        .collect()
}

fn point_seed(seed: u64, i0: usize, salt: u64) -> u64 {
    seed ^ (i0 as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn aggregate(
    b: &Bundle,
    i0: usize,
    nbrs: &[usize],
    cfg: &RefinementConfig,
    budget: usize,
    salt: u64,
) -> Option<Aggregate> {
    let shape = b.shape();
    let x0 = &b.points()[i0];
    let (base, dirs) = match b.fiber_at(i0) {
        AffineFiber::Empty => return None,
        AffineFiber::Affine { base, directions } => (base, directions),
    };
    let s = nbrs
        .iter()
        .map(|&j| distance(&b.points()[j], x0))
        .fold(0.0, f64::max);
    let center = scale_fiber(base, dirs, &frame_weights(shape, s));
    let (tuples, _) = subsets::subsets(nbrs.len(), cfg.k_sharp, budget, point_seed(cfg.seed, i0, salt));
    let mut forms = Vec::with_capacity(tuples.len());
    let mut hit_empty = false;
    for t in &tuples {
        let others: Vec<(&[f64], &AffineFiber)> = t
            .iter()
            .map(|&k| (b.points()[nbrs[k]].as_slice(), b.fiber_at(nbrs[k])))
            .collect();
        match tuple_form(shape, x0, s, &center, &others) {
            Some(f) => forms.push(f),
            None => hit_empty = true,
        }
    }
    // Normalize by the number of ordered pairs so that tol_min bounds an
    // average summand of Q rather than a total that grows with k_sharp.
    let pairs: usize = tuples.iter().map(|t| (t.len() + 1) * t.len()).sum();
    if pairs > 0 {
        let w = 1.0 / (pairs as f64).sqrt();
        for f in &mut forms {
            f.h *= w;
            f.g *= w;
        }
    }
    Some(Aggregate {
        forms,
        center,
        hit_empty,
    })
}

struct Minimizer {
    t: DVector<f64>,
    /// Minimum over `t + span(null)`.
    q_min: f64,
    /// Near-null eigenvectors as columns.
    null: DMatrix<f64>,
}

fn minimize(agg: &Aggregate, eta: f64) -> Minimizer {
    let k = agg.center.q.ncols();
    let (t, t_full, null) = if k == 0 {
        (DVector::zeros(0), DVector::zeros(0), DMatrix::zeros(0, 0))
    } else {
        // Reduce the stacked system to a k×k triangle and take its SVD, so the
        // spectrum of the form is never squared.
        let rows: usize = agg.forms.iter().map(|f| f.h.nrows()).sum();
        let mut hs = DMatrix::zeros(rows.max(k), k);
        let mut gs = DVector::zeros(rows.max(k));
        let mut r0 = 0;
        for f in &agg.forms {
            hs.view_mut((r0, 0), f.h.shape()).copy_from(&f.h);
            gs.rows_mut(r0, f.g.len()).copy_from(&f.g);
            r0 += f.h.nrows();
        }
        let qr = hs.qr();
        let r = qr.r();
        qr.q_tr_mul(&mut gs);
        let z = gs.rows(0, k).into_owned();
        let svd = linalg::svd(&r);
        let (u, vt) = (&svd.u, &svd.v_t);
        let smax = svd.singular_values.max();
        let cut = eta * (1.0 + smax * smax);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        let mut t = DVector::zeros(k);
        let mut t_full = DVector::zeros(k);
        let mut null_cols = Vec::new();
        for &i in &order {
            let v = vt.row(i).transpose();
            let sv = svd.singular_values[i];
            let step = &v * (u.column(i).dot(&z) / sv);
            if sv * sv <= cut {
                if sv > 1e-14 * smax {
                    t_full -= step;
                }
                null_cols.push(v);
            } else {
                t -= &step;
                t_full -= step;
            }
        }
        let mut null = DMatrix::zeros(k, null_cols.len());
        for (c, v) in null_cols.iter().enumerate() {
            null.set_column(c, v);
        }
        linalg::canonical_signs(&mut null);
        (t, t_full, null)
    };
    // The refined fiber keeps the near-null directions, so its minimum is
    // attained at the untruncated solution.
    let q_min = agg
        .forms
        .iter()
        .map(|f| (&f.h * &t_full + &f.g).norm_squared())
        .sum();
    Minimizer { t, q_min, null }
}

fn refine_point(b: &Bundle, i0: usize, cfg: &RefinementConfig, radius: f64) -> Result<PointRefinement> {
    let fib = b.fiber_at(i0);
    let unchanged = |resolved, q_min, tuples| PointRefinement {
        fiber: fib.clone(),
        q_min,
        tuples,
        resolved,
    };
    if fib.is_empty() {
        return Ok(unchanged(false, None, 0));
    }
    let nbrs = neighbors_within(b, i0, radius);
    if nbrs.is_empty() {
        return Ok(unchanged(false, None, 0));
    }
    let agg = aggregate(b, i0, &nbrs, cfg, cfg.tuple_budget, 0).expect("fiber is nonempty");
    let ntuples = agg.forms.len();
    if agg.hit_empty {
        return Ok(PointRefinement {
            fiber: AffineFiber::Empty,
            q_min: Some(f64::INFINITY),
            tuples: ntuples,
            resolved: true,
        });
    }
    let mz = minimize(&agg, cfg.eta);
    if !(mz.q_min <= cfg.tol_min) {
        return Ok(PointRefinement {
            fiber: AffineFiber::Empty,
            q_min: Some(mz.q_min),
            tuples: ntuples,
            resolved: true,
        });
    }
    let k = agg.center.q.ncols();
    if mz.null.ncols() == k {
        return Ok(unchanged(true, Some(mz.q_min), ntuples));
    }
    let (base, dirs) = match fib {
        AffineFiber::Affine { base, directions } => (base, directions),
        AffineFiber::Empty => unreachable!(),
    };
    // Scaled parameters t relate to the original direction coordinates by
    // W U = Q R, so the original coordinates are R⁻¹ t.
    let r = &agg.center.r;
    let solve = |v: &DMatrix<f64>| -> DMatrix<f64> {
        r.clone()
            .solve_upper_triangular(v)
            .expect("R is invertible since W U has full column rank")
    };
    let t_orig = solve(&DMatrix::from_column_slice(k, 1, mz.t.as_slice()));
    let new_base = base + dirs.basis() * t_orig.column(0);
    let mut directions = if mz.null.ncols() == 0 {
        LinSubspace::zero(base.len())
    } else {
        let z = solve(&mz.null);
        let qz = z.clone().qr().q();
        LinSubspace::from_orthonormal(dirs.basis() * qz)
            .unwrap_or_else(|_| LinSubspace::span(&(dirs.basis() * &z)))
    };
    if cfg.snap_to_submodule {
        directions = submodule_core(&directions, &b.points()[i0], b.shape())?;
    }
    Ok(PointRefinement {
        fiber: AffineFiber::new(new_base, directions)?,
        q_min: Some(mz.q_min),
        tuples: ntuples,
        resolved: true,
    })
}

/// One refinement pass with per-point details.
pub fn refine_bundle_detailed(b: &Bundle, cfg: &RefinementConfig) -> Result<(Bundle, Vec<PointRefinement>)> {
    cfg.validate()?;
    let scales = cfg.resolved_scales(b.points());
    let Some(&radius) = scales.last() else {
        let details = b
            .fibers()
            .iter()
            .map(|f| PointRefinement {
                fiber: f.clone(),
                q_min: None,
                tuples: 0,
                resolved: false,
            })
            .collect();
        return Ok((b.clone(), details));
    };
    let details = (0..b.len())
        .into_par_iter()
        .map(|i| refine_point(b, i, cfg, radius))
        .collect::<Result<Vec<_>>>()?;
    let fibers = details.iter().map(|d| d.fiber.clone()).collect();
    Ok((b.with_fibers(fibers)?, details))
}

/// One refinement pass.
pub fn refine_bundle(b: &Bundle, cfg: &RefinementConfig) -> Result<Bundle> {
    refine_bundle_detailed(b, cfg).map(|(r, _)| r)
}

/// Result of iterating the refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct Stabilization {
    pub bundle: Bundle,
    /// Number of refinement passes performed.
    pub iterations: usize,
    /// Fiber dimensions per round, round 0 being the input (`-1` = empty).
    pub dims_per_round: Vec<Vec<i64>>,
    /// Whether the last pass left every fiber unchanged.
    pub reached_fixpoint: bool,
    /// `2 · dim[(P_{m,n})^d] + 1`
    pub bound: usize,
}

/// Refines until nothing changes, a fiber empties, or the round cap is hit.
pub fn stabilize(b: &Bundle, cfg: &RefinementConfig) -> Result<Stabilization> {
    cfg.validate()?;
    let bound = b.shape().stabilization_bound();
    let mut cur = b.clone();
    let mut dims = vec![cur.dims()];
    let mut iterations = 0;
    let mut fixpoint = false;
    if cur.first_empty().is_none() {
        while iterations < bound {
            let next = refine_bundle(&cur, cfg)?;
            iterations += 1;
            let nd = next.dims();
            let same = nd == *dims.last().unwrap();
            dims.push(nd);
            cur = next;
            if cur.first_empty().is_some() {
                break;
            }
            if same {
                fixpoint = true;
                break;
            }
        }
    }
    Ok(Stabilization {
        bundle: cur,
        iterations,
        dims_per_round: dims,
        reached_fixpoint: fixpoint,
        bound,
    })
}

/// Three-valued verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Solvable,
    Unsolvable,
    Inconclusive,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Solvable => "SOLVABLE",
            Status::Unsolvable => "UNSOLVABLE",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }

    /// Process exit code for the verdict.
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Solvable => 0,
            Status::Unsolvable => 1,
            Status::Inconclusive => 2,
        }
    }
}

/// Residual summary of the stabilized bundle at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleRow {
    pub delta: f64,
    /// Points with at least one other sample within `delta`.
    pub points_resolved: usize,
    pub tuples: usize,
    /// Largest (over points) minimum of the summed form.
    pub max_min_q: f64,
    /// Largest (over points) minimum of the form averaged per tuple.
    pub max_mean_q: f64,
}

/// Outcome of [`decide`].
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: Status,
    pub stabilized: Bundle,
    pub iterations: usize,
    pub first_empty_point: Option<Vec<f64>>,
    pub first_empty_index: Option<usize>,
    pub scale_report: Vec<ScaleRow>,
    pub dims_per_round: Vec<Vec<i64>>,
    pub reached_fixpoint: bool,
    pub bound: usize,
}

/// Tuples per point sampled at radii coarser than the finest.
const REPORT_BUDGET: usize = 128;

/// Residual trace of `b` at each radius. Empty fibers are skipped. Rows above
/// the finest radius sample at most 128 tuples per point.
pub fn scale_report(b: &Bundle, cfg: &RefinementConfig) -> Result<Vec<ScaleRow>> {
    cfg.validate()?;
    let scales = cfg.resolved_scales(b.points());
    scales
        .iter()
        .enumerate()
        .map(|(si, &delta)| {
            let per_point: Vec<Option<(usize, f64)>> = (0..b.len())
                .into_par_iter()
                .map(|i| {
                    let nbrs = neighbors_within(b, i, delta);
                    if nbrs.is_empty() {
                        return None;
                    }
                    let budget = if si + 1 == scales.len() {
                        cfg.tuple_budget
                    } else {
                        cfg.tuple_budget.min(REPORT_BUDGET)
                    };
                    let agg = aggregate(b, i, &nbrs, cfg, budget, si as u64 + 1)?;
                    if agg.hit_empty {
                        return Some((agg.forms.len(), f64::INFINITY));
                    }
                    Some((agg.forms.len(), minimize(&agg, cfg.eta).q_min))
                })
                .collect();
            let mut row = ScaleRow {
                delta,
                points_resolved: 0,
                tuples: 0,
                max_min_q: 0.0,
                max_mean_q: 0.0,
            };
            for (nt, q) in per_point.into_iter().flatten() {
                row.points_resolved += 1;
                row.tuples += nt;
                row.max_min_q = row.max_min_q.max(q);
                row.max_mean_q = row.max_mean_q.max(q / nt.max(1) as f64);
            }
            Ok(row)
        })
        .collect()
}

/// Stabilizes `b` and classifies the result.
///
/// An empty fiber gives `Unsolvable`. Otherwise the verdict is `Solvable` when
/// the fixpoint was reached and the per-tuple residual at the finest radius is
/// below `tol_min` and has decayed: it is negligible (below `1e-4 · tol_min`),
/// at most half the largest coarser residual, or there is no coarser radius to
/// compare with. Everything else is `Inconclusive`.
pub fn decide(b: &Bundle, cfg: &RefinementConfig) -> Result<Verdict> {
    let st = stabilize(b, cfg)?;
    let first_empty_index = st.bundle.first_empty();
    let mut verdict = Verdict {
        status: Status::Inconclusive,
        stabilized: st.bundle.clone(),
        iterations: st.iterations,
        first_empty_point: first_empty_index.map(|i| st.bundle.points()[i].clone()),
        first_empty_index,
        scale_report: Vec::new(),
        dims_per_round: st.dims_per_round,
        reached_fixpoint: st.reached_fixpoint,
        bound: st.bound,
    };
    if first_empty_index.is_some() {
        verdict.status = Status::Unsolvable;
        return Ok(verdict);
    }
    verdict.scale_report = scale_report(&st.bundle, cfg)?;
    if !st.reached_fixpoint {
        return Ok(verdict);
    }
    let rows = &verdict.scale_report;
    let Some(finest) = rows.last().filter(|r| r.points_resolved > 0) else {
        return Ok(verdict);
    };
    let coarser = rows[..rows.len() - 1]
        .iter()
        .filter(|r| r.points_resolved > 0)
        .map(|r| r.max_mean_q)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    let r = finest.max_mean_q;
    let decayed = r <= 1e-4 * cfg.tol_min || coarser.map_or(true, |c| r <= 0.5 * c);
    if r <= cfg.tol_min && decayed {
        verdict.status = Status::Solvable;
    }
    Ok(verdict)
}
