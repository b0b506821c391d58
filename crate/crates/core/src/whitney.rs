//! Whitney extension of a jet field on a finite set, and the Whitney
//! compatibility seminorm.
//!
//! The complement of `E` in the root cube is covered by maximal dyadic cubes
//! `Q` with `4·diam(Q) <= dist(Q, E)`. Each cube carries the jet of the point
//! of `E` nearest its center and a tensor-product bump that equals 1 on `Q`
//! and vanishes outside `(1 + a)Q`. The extension is the normalized blend
//!
//! ```text
//! F = Σ_Q θ_Q P_Q / Σ_Q θ_Q
//! ```
//!
//! whose m-jet at `y` is computed exactly in the jet ring. At points of `E`
//! the stored jets are returned as they are.

use nalgebra::{DMatrix, DVector};

use crate::bundles::{distance, validate_points, Bundle};
use crate::error::{Error, Result};
use crate::jets::{basis, binomial, factorial, Jet, JetShape, JetVec, MultiIndex};
use crate::linalg;
use crate::linspaces::AffineFiber;
use crate::modulus::RegularModulus;

/// Expansion factor: bumps are supported on `(1 + EXPANSION)·Q`.
const EXPANSION: f64 = 0.125;
const MAX_DEPTH: usize = 64;

/// One jet vector per point of a finite set.
#[derive(Debug, Clone, PartialEq)]
pub struct JetField {
    points: Vec<Vec<f64>>,
    jets: Vec<JetVec>,
}

impl JetField {
    pub fn new(points: Vec<Vec<f64>>, jets: Vec<JetVec>) -> Result<Self> {
        let n = points.first().ok_or(Error::EmptyPointSet)?.len();
        validate_points(n, &points)?;
        if jets.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: jets.len(),
                context: "jets per point",
            });
        }
        let shape = jets[0].shape();
        if shape.n != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: shape.n,
                context: "jet variables",
            });
        }
        let jets = jets
            .into_iter()
            .zip(&points)
            .map(|(j, x)| {
                if j.shape() != shape {
                    return Err(Error::OrderMismatch {
                        left: shape.m,
                        right: j.order(),
                    });
                }
                if j.basepoint() == x.as_slice() {
                    Ok(j)
                } else {
                    j.recenter(x)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { points, jets })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn jets(&self) -> &[JetVec] {
        &self.jets
    }

    pub fn shape(&self) -> JetShape {
        self.jets[0].shape()
    }

    /// Smallest axis-aligned box containing the points, padded by `pad` on
    /// every side, or by 1 when a side would be degenerate.
    pub fn bounding_box(&self, pad: f64) -> DomainBox {
        let n = self.points[0].len();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in &self.points {
            for i in 0..n {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        for i in 0..n {
            let extra = if hi[i] - lo[i] > 0.0 { pad } else { pad.max(1.0) };
            lo[i] -= extra;
            hi[i] += extra;
        }
        DomainBox { lo, hi }
    }
}

/// Axis-aligned box `Π [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput("box bounds must have equal nonzero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidInput("box bounds must be finite with lo <= hi".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Regular grid with `per_axis` samples per coordinate, first coordinate
    /// varying slowest.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let n = self.lo.len();
        if per_axis == 0 {
            return Vec::new();
        }
        let axis = |i: usize, k: usize| {
            if per_axis == 1 {
                0.5 * (self.lo[i] + self.hi[i])
            } else {
                self.lo[i] + (self.hi[i] - self.lo[i]) * k as f64 / (per_axis - 1) as f64
            }
        };
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                let mut p = vec![0.0; n];
                for i in (0..n).rev() {
                    p[i] = axis(i, idx % per_axis);
                    idx /= per_axis;
                }
                p
            })
            .collect()
    }
}

/// One-dimensional cutoff `ψ`: 1 on `|t| <= 1`, 0 on `|t| >= 1 + a`, joined by
/// a smoothstep polynomial whose first `order` derivatives vanish at both ends.
#[derive(Debug, Clone, PartialEq)]
struct Cutoff {
    /// Coefficients of the smoothstep in ascending powers of `u`.
    step: Vec<f64>,
    a: f64,
}

impl Cutoff {
    fn new(order: usize, a: f64) -> Self {
        let nn = order;
        let mut step = vec![0.0; 2 * nn + 2];
        for k in 0..=nn {
            let c = binomial(nn + k, k) as f64 * binomial(2 * nn + 1, nn - k) as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            step[nn + 1 + k] = sign * c;
        }
        Self { step, a }
    }

    /// `d^k/du^k S(u)`
    fn step_deriv(&self, u: f64, k: usize) -> f64 {
        self.step
            .iter()
            .enumerate()
            .skip(k)
            .map(|(p, &c)| {
                let falling: f64 = (p - k + 1..=p).map(|v| v as f64).product();
                c * falling * u.powi((p - k) as i32)
            })
            .sum()
    }

    /// Derivatives `ψ^{(k)}(y)`, `k = 0..=m`, for the interval of center `c`
    /// and half-width `hw`.
    fn derivs(&self, y: f64, c: f64, hw: f64, m: usize) -> Vec<f64> {
        let t = (y - c) / hw;
        let at = t.abs();
        let mut out = vec![0.0; m + 1];
        if at <= 1.0 {
            out[0] = 1.0;
            return out;
        }
        if at >= 1.0 + self.a {
            return out;
        }
        let u = (at - 1.0) / self.a;
        let du = t.signum() / (self.a * hw);
        out[0] = 1.0 - self.step_deriv(u, 0);
        for (k, o) in out.iter_mut().enumerate().skip(1) {
            *o = -self.step_deriv(u, k) * du.powi(k as i32);
        }
        out
    }
}

/// A Whitney cube of the decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitneyCube {
    pub center: Vec<f64>,
    pub side: f64,
    /// Index of the point of `E` nearest the center (lowest index on ties).
    pub source: usize,
}

/// The extension built by [`extend`].
#[derive(Debug, Clone)]
pub struct ExtensionFunction {
    field: JetField,
    domain: DomainBox,
    root_center: Vec<f64>,
    root_side: f64,
    cutoff: Cutoff,
}

/// Builds the Whitney extension of `field` on `domain`.
pub fn extend(field: &JetField, domain: &DomainBox) -> Result<ExtensionFunction> {
    let n = field.points()[0].len();
    if domain.lo.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: domain.lo.len(),
            context: "box dimension",
        });
    }
    if field.points().iter().any(|p| !domain.contains(p)) {
        return Err(Error::InvalidInput("every point must lie in the box".into()));
    }
    let root_center: Vec<f64> = domain.lo.iter().zip(&domain.hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let side = domain
        .lo
        .iter()
        .zip(&domain.hi)
        .map(|(a, b)| b - a)
        .fold(0.0, f64::max);
    let root_side = if side > 0.0 { side } else { 1.0 };
    Ok(ExtensionFunction {
        field: field.clone(),
        domain: domain.clone(),
        root_center,
        root_side,
        cutoff: Cutoff::new(field.shape().m + 1, EXPANSION),
    })
}

fn dist_to_cube(p: &[f64], c: &[f64], side: f64) -> f64 {
    p.iter()
        .zip(c)
        .map(|(v, cc)| ((v - cc).abs() - side / 2.0).max(0.0).powi(2))
        .sum::<f64>()
        .sqrt()
}

impl ExtensionFunction {
    pub fn field(&self) -> &JetField {
        &self.field
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn shape(&self) -> JetShape {
        self.field.shape()
    }

    fn check_point(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.root_center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.root_center.len(),
                found: y.len(),
                context: "evaluation point",
            });
        }
        let inside = y
            .iter()
            .zip(&self.root_center)
            .all(|(v, c)| (v - c).abs() <= self.root_side / 2.0 * (1.0 + 1e-12));
        if !inside || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutsideDomain);
        }
        Ok(())
    }

    fn nearest(&self, y: &[f64]) -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (k, p) in self.field.points().iter().enumerate() {
            let d = distance(p, y);
            if d < bd {
                bd = d;
                best = k;
            }
        }
        best
    }

    /// Whitney cubes whose expanded cube contains `y`. Empty for `y` in `E`.
    pub fn cubes_at(&self, y: &[f64]) -> Result<Vec<WhitneyCube>> {
        self.check_point(y)?;
        if self.field.points().iter().any(|p| p.as_slice() == y) {
            return Ok(Vec::new());
        }
        let n = y.len();
        let pts = self.field.points();
        let mut out = Vec::new();
        let mut stack = vec![(self.root_center.clone(), self.root_side, 0usize)];
        while let Some((c, side, depth)) = stack.pop() {
            let reach = side / 2.0 + EXPANSION * side;
            if y.iter().zip(&c).any(|(v, cc)| (v - cc).abs() > reach) {
                continue;
            }
            let dist = pts
                .iter()
                .map(|p| dist_to_cube(p, &c, side))
                .fold(f64::INFINITY, f64::min);
            if 4.0 * side * (n as f64).sqrt() <= dist {
                let source = self.nearest(&c);
                out.push(WhitneyCube { center: c, side, source });
                continue;
            }
            if depth >= MAX_DEPTH {
                continue;
            }
            for mask in 0..(1usize << n) {
                let child: Vec<f64> = c
                    .iter()
                    .enumerate()
                    .map(|(i, cc)| if mask >> i & 1 == 1 { cc + side / 4.0 } else { cc - side / 4.0 })
                    .collect();
                stack.push((child, side / 2.0, depth + 1));
            }
        }
        out.sort_by(|a, b| {
            a.side
                .total_cmp(&b.side)
                .then_with(|| a.center.iter().zip(&b.center).fold(std::cmp::Ordering::Equal, |o, (x, z)| o.then(x.total_cmp(z))))
        });
        Ok(out)
    }

    /// Taylor coefficients of `θ_Q` about `y`.
    fn bump_jet(&self, cube: &WhitneyCube, y: &[f64]) -> Jet {
        let m = self.shape().m;
        let b = basis(y.len(), m);
        let per_axis: Vec<Vec<f64>> = y
            .iter()
            .zip(&cube.center)
            .map(|(v, c)| self.cutoff.derivs(*v, *c, cube.side / 2.0, m))
            .collect();
        let coeffs = b
            .indices()
            .iter()
            .map(|alpha| {
                alpha
                    .exponents()
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| per_axis[i][a as usize] / factorial(a as usize))
                    .product()
            })
            .collect();
        Jet::new(y.to_vec(), m, coeffs).expect("length matches basis")
    }

    /// Normalized partition-of-unity weights `θ_Q(y) / Σ θ` of the cubes
    /// returned by [`Self::cubes_at`].
    pub fn weights(&self, y: &[f64]) -> Result<Vec<f64>> {
        let cubes = self.cubes_at(y)?;
        let raw: Vec<f64> = cubes.iter().map(|q| self.bump_jet(q, y).coeffs()[0]).collect();
        let total: f64 = raw.iter().sum();
        Ok(raw.iter().map(|w| w / total).collect())
    }

    /// The m-jet of the extension at `y`.
    pub fn jet_at(&self, y: &[f64]) -> Result<JetVec> {
        self.check_point(y)?;
        if let Some(k) = self.field.points().iter().position(|p| p.as_slice() == y) {
            return Ok(self.field.jets()[k].clone());
        }
        let cubes = self.cubes_at(y)?;
        let shape = self.shape();
        if cubes.is_empty() {
            return self.field.jets()[self.nearest(y)].recenter(y);
        }
        let mut by_source: Vec<Option<Jet>> = vec![None; self.field.points().len()];
        for q in &cubes {
            let th = self.bump_jet(q, y);
            let slot = &mut by_source[q.source];
            *slot = Some(match slot.take() {
                Some(acc) => acc.add(&th)?,
                None => th,
            });
        }
        let mut den = Jet::zero(y.to_vec(), shape.m);
        let mut num: Vec<Jet> = (0..shape.d).map(|_| Jet::zero(y.to_vec(), shape.m)).collect();
        for (k, th) in by_source.iter().enumerate() {
            let Some(th) = th else { continue };
            den = den.add(th)?;
            let pk = self.field.jets()[k].recenter(y)?;
            for (j, acc) in num.iter_mut().enumerate() {
                *acc = acc.add(&th.multiply(pk.component(j))?)?;
            }
        }
        let inv = den.inverse()?;
        JetVec::new(num.iter().map(|p| p.multiply(&inv)).collect::<Result<Vec<_>>>()?)
    }

    /// `∂^α F_j(y)` for every component `j`.
    pub fn eval(&self, y: &[f64], alpha: &MultiIndex) -> Result<Vec<f64>> {
        let jet = self.jet_at(y)?;
        let m = jet.order();
        if alpha.order() > m {
            return Err(Error::IndexOutOfRange {
                index_order: alpha.order(),
                jet_order: m,
            });
        }
        jet.components().iter().map(|c| c.deriv_eval(alpha, y)).collect()
    }
}

/// Parts of the Whitney seminorm of a jet field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seminorm {
    /// `max |∂^α(P_k − P_k')(x_k)| / (ω(d) d^{m−|α|})` over ordered pairs with
    /// `0 < d = |x_k − x_k'| <= 1`.
    pub pair_part: f64,
    /// `max |∂^α P_k(x_k)|`.
    pub cm_part: f64,
    pub total: f64,
}

/// Whitney compatibility seminorm of `field` for the modulus `omega`.
pub fn whitney_seminorm(field: &JetField, omega: &RegularModulus) -> Result<Seminorm> {
    let shape = field.shape();
    let b = basis(shape.n, shape.m);
    let pts = field.points();
    let jets = field.jets();
    let mut cm: f64 = 0.0;
    for (x, p) in pts.iter().zip(jets) {
        for c in p.components() {
            for alpha in b.indices() {
                cm = cm.max(c.deriv_eval(alpha, x)?.abs());
            }
        }
    }
    let mut pair: f64 = 0.0;
    for k in 0..pts.len() {
        for k2 in 0..pts.len() {
            let d = distance(&pts[k], &pts[k2]);
            if k == k2 || d > 1.0 || d == 0.0 {
                continue;
            }
            let w = omega.eval(d);
            for j in 0..shape.d {
                for alpha in b.indices() {
                    let a = jets[k].component(j).deriv_eval(alpha, &pts[k])?;
                    let c = jets[k2].component(j).deriv_eval(alpha, &pts[k])?;
                    let r = (a - c).abs() / (w * d.powi((shape.m - alpha.order()) as i32));
                    pair = pair.max(r);
                }
            }
        }
    }
    Ok(Seminorm {
        pair_part: pair,
        cm_part: cm,
        total: pair.max(cm),
    })
}

/// Chooses one jet per fiber so that neighboring jets agree as well as
/// possible.
///
/// Minimizes `Σ |∂^α(P_k − P_k')(x_k)|² / d^{2(m+1−|α|)}` over ordered pairs of
/// points within twice the nearest-neighbor distance of `x_k`, with each jet
/// constrained to its fiber. A tiny ridge term picks the minimizer closest to
/// the fiber bases. Every fiber must be nonempty.
pub fn select_section(bundle: &Bundle) -> Result<JetField> {
    let shape = bundle.shape();
    let pts = bundle.points();
    let nn = shape.dim();
    let b = basis(shape.n, shape.m);
    let sd = b.len();
    let mut bases = Vec::with_capacity(pts.len());
    let mut dirs = Vec::with_capacity(pts.len());
    for f in bundle.fibers() {
        match f {
            AffineFiber::Empty => {
                return Err(Error::InvalidInput("cannot select a section of an empty fiber".into()))
            }
            AffineFiber::Affine { base, directions } => {
                bases.push(base.clone());
                dirs.push(directions.basis().clone());
            }
        }
    }
    let npts = pts.len();
    let nearest: Vec<f64> = (0..npts)
        .map(|k| {
            (0..npts)
                .filter(|&j| j != k)
                .map(|j| distance(&pts[k], &pts[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .map(|d| if d.is_finite() { d } else { 1.0 })
        .collect();
    // Per point: c_k = b_k + M_k s_k with M_k = R_k⁻¹ Q_k, where
    // R_k U_k = Q_k S_k and R_k = diag(r_k^{|α|}).
    let mut maps = Vec::with_capacity(npts);
    let mut offsets = Vec::with_capacity(npts);
    let mut ncols = 0;
    for k in 0..npts {
        let r = nearest[k];
        let u = &dirs[k];
        let kd = u.ncols();
        offsets.push(ncols);
        ncols += kd;
        if kd == 0 {
            maps.push(DMatrix::zeros(nn, 0));
            continue;
        }
        let scale: Vec<f64> = (0..nn).map(|i| r.powi(b.index(i % sd).order() as i32)).collect();
        let mut ru = u.clone();
        for (mut row, s) in ru.row_iter_mut().zip(&scale) {
            row *= *s;
        }
        let q = ru.qr().q();
        let mut mk = q;
        for (mut row, s) in mk.row_iter_mut().zip(&scale) {
            row /= *s;
        }
        maps.push(mk);
    }
    let jets_from = |s: &DVector<f64>| -> Result<Vec<JetVec>> {
        (0..npts)
            .map(|k| {
                let kd = dirs[k].ncols();
                let c = &bases[k] + &maps[k] * s.rows(offsets[k], kd);
                JetVec::from_flat(&pts[k], shape.m, shape.d, c.as_slice())
            })
            .collect()
    };
    if ncols == 0 {
        return JetField::new(pts.to_vec(), jets_from(&DVector::zeros(0))?);
    }
    let facts: Vec<f64> = b.indices().iter().map(|a| a.factorial()).collect();
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    for k in 0..npts {
        for k2 in 0..npts {
            if k != k2 && distance(&pts[k], &pts[k2]) <= 2.0 * nearest[k] * (1.0 + 1e-9) {
                blocks.push((k, k2));
            }
        }
    }
    let rows = blocks.len() * nn + ncols;
    let mut a = DMatrix::zeros(rows, ncols);
    let mut rhs = DVector::zeros(rows);
    for (bi, &(k, k2)) in blocks.iter().enumerate() {
        let d = distance(&pts[k], &pts[k2]);
        let h: Vec<f64> = pts[k].iter().zip(&pts[k2]).map(|(x, y)| x - y).collect();
        let shift = b.shift_matrix(&h);
        let mut op2 = DMatrix::zeros(nn, nn);
        for j in 0..shape.d {
            op2.view_mut((j * sd, j * sd), (sd, sd)).copy_from(&shift);
        }
        let w: Vec<f64> = (0..nn)
            .map(|i| facts[i % sd] / d.powi((shape.m + 1 - b.index(i % sd).order()) as i32))
            .collect();
        let wd = DMatrix::from_diagonal(&DVector::from_vec(w));
        let r0 = bi * nn;
        let lhs_k = &wd * &maps[k];
        let lhs_k2 = -(&wd * &op2 * &maps[k2]);
        a.view_mut((r0, offsets[k]), (nn, maps[k].ncols())).copy_from(&lhs_k);
        let cur = a.view((r0, offsets[k2]), (nn, maps[k2].ncols())).into_owned();
        a.view_mut((r0, offsets[k2]), (nn, maps[k2].ncols())).copy_from(&(cur + lhs_k2));
        let res = -(&wd * (&bases[k] - &op2 * &bases[k2]));
        rhs.rows_mut(r0, nn).copy_from(&res);
    }
    let ridge = 1e-8 * linalg::max_column_norm(&a).max(1.0);
    let r0 = blocks.len() * nn;
    for c in 0..ncols {
        a[(r0 + c, c)] = ridge;
    }
    let s = linalg::lstsq(&a, &rhs, 1e-14);
    JetField::new(pts.to_vec(), jets_from(&s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Polynomial;

    fn poly1(coeffs: &[f64]) -> Polynomial {
        Polynomial::new(
            1,
            coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| (c, MultiIndex::new(vec![i as u32])))
                .collect(),
        )
        .unwrap()
    }

    fn field_from_poly(p: &Polynomial, pts: &[Vec<f64>], m: usize) -> JetField {
        let jets = pts
            .iter()
            .map(|x| JetVec::new(vec![p.jet(x, m).unwrap()]).unwrap())
            .collect();
        JetField::new(pts.to_vec(), jets).unwrap()
    }

    #[test]
    fn cutoff_is_smooth_at_the_joins() {
        let c = Cutoff::new(3, 0.125);
        assert!((c.step_deriv(0.0, 0)).abs() < 1e-15);
        assert!((c.step_deriv(1.0, 0) - 1.0).abs() < 1e-12);
        for k in 1..=3 {
            assert!(c.step_deriv(0.0, k).abs() < 1e-9);
            assert!(c.step_deriv(1.0, k).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn reproduces_polynomials() {
        let p = poly1(&[0.5, -1.0, 2.0]);
        let pts: Vec<Vec<f64>> = [-0.7, -0.1, 0.0, 0.3, 0.9].iter().map(|&v| vec![v]).collect();
        let field = field_from_poly(&p, &pts, 2);
        let f = extend(&field, &field.bounding_box(0.1)).unwrap();
        for y in f.domain().grid(41) {
            let v = f.eval(&y, &MultiIndex::new(vec![0])).unwrap()[0];
            assert!((v - p.eval(&y)).abs() < 1e-10, "{y:?}");
            let w: f64 = f.weights(&y).unwrap().iter().sum();
            if !pts.contains(&y) {
                assert!((w - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_point_gives_its_polynomial() {
        let p = poly1(&[1.0, 2.0]);
        let field = field_from_poly(&p, &[vec![0.0]], 1);
        let f = extend(&field, &field.bounding_box(0.0)).unwrap();
        for y in [-0.5, 0.01, 0.7] {
            assert!((f.eval(&[y], &MultiIndex::zero(1)).unwrap()[0] - p.eval(&[y])).abs() < 1e-12);
        }
    }

    #[test]
    fn seminorm_of_abs_pair() {
        let h = 0.01;
        let pts = vec![vec![h], vec![-h]];
        let jets = vec![
            JetVec::new(vec![Jet::new(vec![h], 1, vec![h, 1.0]).unwrap()]).unwrap(),
            JetVec::new(vec![Jet::new(vec![-h], 1, vec![h, -1.0]).unwrap()]).unwrap(),
        ];
        let field = JetField::new(pts, jets).unwrap();
        let s = whitney_seminorm(&field, &RegularModulus::lipschitz()).unwrap();
        assert!((s.pair_part - 1.0 / h).abs() < 1e-9);
        assert!((s.cm_part - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scaling_is_linear() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![0.5], vec![1.0]];
        let jets: Vec<JetVec> = pts
            .iter()
            .enumerate()
            .map(|(i, x)| JetVec::new(vec![Jet::new(x.clone(), 1, vec![i as f64, 1.0 - i as f64]).unwrap()]).unwrap())
            .collect();
        let f = extend(&JetField::new(pts.clone(), jets.clone()).unwrap(), &DomainBox::new(vec![0.0], vec![1.0]).unwrap()).unwrap();
        let scaled: Vec<JetVec> = jets.iter().map(|j| j.scale(3.0)).collect();
        let g = extend(&JetField::new(pts, scaled).unwrap(), &DomainBox::new(vec![0.0], vec![1.0]).unwrap()).unwrap();
        for y in [0.1, 0.26, 0.77] {
            let a = f.eval(&[y], &MultiIndex::new(vec![1])).unwrap()[0];
            let b = g.eval(&[y], &MultiIndex::new(vec![1])).unwrap()[0];
            assert!((3.0 * a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
    }
}
