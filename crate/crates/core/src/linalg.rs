//! Dense helpers built on a singular value decomposition.
//!
//! Rank decisions use a relative threshold on singular values with a small
//! absolute floor so that an all-zero matrix has rank 0.

use nalgebra::{DMatrix, DVector};

/// Default relative cutoff `σ_i <= tol · σ_max` for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

const ABS_FLOOR: f64 = 1e-14;

fn cutoff(sigma_max: f64, rel: f64) -> f64 {
    (rel * sigma_max).max(ABS_FLOOR)
}

/// Thin singular value decomposition `a = U diag(s) Vᵀ` with `s` sorted in
/// decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

/// SVD computed by faer. nalgebra's SVD loses accuracy on some small
/// triangular inputs, which the refinement cannot tolerate.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Svd {
            u: DMatrix::zeros(m, 0),
            singular_values: DVector::zeros(0),
            v_t: DMatrix::zeros(0, n),
        };
    }
    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    match fa.thin_svd() {
        Ok(d) => {
            let (u, s, v) = (d.U(), d.S().column_vector(), d.V());
            Svd {
                u: DMatrix::from_fn(m, k, |i, j| u[(i, j)]),
                singular_values: DVector::from_fn(k, |i, _| s[i]),
                v_t: DMatrix::from_fn(k, n, |i, j| v[(j, i)]),
            }
        }
        Err(_) => {
            let d = a.clone().svd(true, true);
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&x, &y| d.singular_values[y].total_cmp(&d.singular_values[x]));
            let (u, vt) = (d.u.expect("requested U"), d.v_t.expect("requested V^T"));
            Svd {
                u: DMatrix::from_fn(m, k, |i, j| u[(i, order[j])]),
                singular_values: DVector::from_fn(k, |i, _| d.singular_values[order[i]]),
                v_t: DMatrix::from_fn(k, n, |i, j| vt[(order[i], j)]),
            }
        }
    }
}

/// Orthonormal basis of the column space of `a`.
pub fn range_basis(a: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let rows = a.nrows();
    if a.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = svd(a);
    let u = &svd.u;
    let smax = svd.singular_values.max();
    let cut = cutoff(smax, rel);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cut)
        .collect();
    let mut out = DMatrix::zeros(rows, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        out.set_column(k, &u.column(i));
    }
    canonical_signs(&mut out);
    out
}

/// Orthonormal basis of `{z : a z = 0}`.
pub fn null_basis(a: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let cols = a.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    // Pad to at least square so the SVD returns a complete V.
    let padded = if a.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = svd(&padded);
    let vt = &svd.v_t;
    let smax = svd.singular_values.max();
    let cut = cutoff(smax, rel);
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cut)
        .collect();
    let mut out = DMatrix::zeros(cols, null.len());
    for (k, &i) in null.iter().enumerate() {
        out.set_column(k, &vt.row(i).transpose());
    }
    canonical_signs(&mut out);
    out
}

/// Minimum-norm least-squares solution of `a z = b`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel: f64) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    if a.nrows() == 0 {
        return DVector::zeros(a.ncols());
    }
    let svd = svd(a);
    let smax = svd.singular_values.max();
    let cut = cutoff(smax, rel);
    let mut x = DVector::zeros(a.ncols());
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv > cut {
            x += svd.v_t.row(i).transpose() * (svd.u.column(i).dot(b) / sv);
        }
    }
    x
}

/// Flips each column so that its largest-magnitude entry is positive.
/// Keeps bases reproducible regardless of the solver's sign choices.
pub fn canonical_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0.0f64;
        for &v in col.iter() {
            if v.abs() > best.abs() + 1e-12 {
                best = v;
            }
        }
        if best < 0.0 {
            col.neg_mut();
        }
    }
}

/// Horizontal concatenation.
pub fn hstack(blocks: &[&DMatrix<f64>], rows: usize) -> DMatrix<f64> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Vertical concatenation.
pub fn vstack(blocks: &[DMatrix<f64>], cols: usize) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Largest column norm, a cheap upper-bound proxy for "is this matrix zero".
pub fn max_column_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().fold(0.0, |acc, c| acc.max(c.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_basis(&a, DEFAULT_RANK_TOL);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).norm() < 1e-14);
        assert!((n.transpose() * &n - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn range_drops_dependent_columns() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0]);
        assert_eq!(range_basis(&a, DEFAULT_RANK_TOL).ncols(), 2);
        assert_eq!(range_basis(&DMatrix::zeros(3, 2), DEFAULT_RANK_TOL).ncols(), 0);
    }

    #[test]
    fn lstsq_min_norm() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let z = lstsq(&a, &DVector::from_vec(vec![2.0]), DEFAULT_RANK_TOL);
        assert!((z[0] - 1.0).abs() < 1e-14 && (z[1] - 1.0).abs() < 1e-14);
    }
}
