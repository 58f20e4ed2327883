//! Small dense linear-algebra helpers.
//!
//! Fisher matrices in this crate mix entries that differ by more than twenty
//! orders of magnitude (seconds against hertz against metres). Every inverse,
//! pseudo-inverse and rank decision is therefore taken on the Jacobi-scaled
//! matrix `D A D` with `D = diag(1/sqrt(a_ii))`.

use nalgebra::{DMatrix, DVector, Matrix3x2, SMatrix, SymmetricEigen, Vector3};

/// Relative eigenvalue threshold for pseudo-inverses.
pub const PINV_REL_TOL: f64 = 1e-12;
/// Relative singular-value threshold for numerical rank.
pub const RANK_REL_TOL: f64 = 1e-10;

/// `1/sqrt(a_ii)` for positive diagonal entries, zero otherwise.
pub fn jacobi_scaling(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        a.nrows(),
        a.diagonal().iter().map(|&x| if x > 0.0 { 1.0 / x.sqrt() } else { 0.0 }),
    )
}

fn scale_sym(a: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut s = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            s[(i, j)] = d[i] * a[(i, j)] * d[j];
        }
    }
    // exact symmetry so the eigensolver sees a symmetric input
    for j in 0..n {
        for i in 0..j {
            let m = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = m;
            s[(j, i)] = m;
        }
    }
    s
}

/// Eigen pseudo-inverse of a symmetric matrix with relative threshold `rel_tol`.
pub fn sym_pinv(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(a.clone());
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |m, &l| m.max(l.abs()));
    let mut out = DMatrix::zeros(n, n);
    if lmax == 0.0 {
        return out;
    }
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > rel_tol * lmax {
            let v = eig.eigenvectors.column(i);
            out += (v * v.transpose()) / l;
        }
    }
    out
}

/// Pseudo-inverse of a symmetric PSD matrix computed on its Jacobi-scaled form.
pub fn scaled_pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let d = jacobi_scaling(a);
    let p = sym_pinv(&scale_sym(a, &d), PINV_REL_TOL);
    scale_sym(&p, &d)
}

#[derive(Debug, Clone)]
pub struct RankInfo {
    pub rank: usize,
    /// Singular values of the scaled matrix, descending.
    pub singular_values: Vec<f64>,
    /// sigma_max / sigma_min of the scaled matrix (infinite when singular).
    pub condition_number: f64,
}

/// Numerical rank of a symmetric PSD matrix after Jacobi scaling.
pub fn scaled_rank(a: &DMatrix<f64>, rel_tol: f64) -> RankInfo {
    let n = a.nrows();
    let d = jacobi_scaling(a);
    let s = scale_sym(a, &d);
    let mut sv: Vec<f64> = s.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&x| smax > 0.0 && x > rel_tol * smax).count();
    let smin = sv.last().copied().unwrap_or(0.0);
    let condition_number = if rank == n && smin > 0.0 { smax / smin } else { f64::INFINITY };
    RankInfo { rank, singular_values: sv, condition_number }
}

/// Inverse of a symmetric positive definite matrix via the scaled Cholesky
/// factor. Returns `None` when the scaled matrix is not positive definite.
pub fn scaled_spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let d = jacobi_scaling(a);
    if d.iter().any(|&x| x == 0.0) {
        return None;
    }
    let s = scale_sym(a, &d);
    let inv = s.cholesky()?.inverse();
    Some(scale_sym(&inv, &d))
}

/// Two orthonormal vectors spanning the plane orthogonal to the unit vector
/// `s`, taken from columns 2 and 3 of the Householder reflector that maps
/// `e1` onto `-sign(s_1) s`.
pub fn householder_tangent(s: &Vector3<f64>) -> Matrix3x2<f64> {
    let sign = if s[0] >= 0.0 { 1.0 } else { -1.0 };
    let w = s + Vector3::new(sign, 0.0, 0.0);
    let ww = w.dot(&w);
    let h = nalgebra::Matrix3::identity() - (w * w.transpose()) * (2.0 / ww);
    h.fixed_columns::<2>(1).into_owned()
}

/// Basis of the 8-dimensional tangent space of `[p; v; s]` under `|s| = 1`.
pub fn tangent_basis(s: &Vector3<f64>) -> SMatrix<f64, 9, 8> {
    let mut u = SMatrix::<f64, 9, 8>::zeros();
    for i in 0..6 {
        u[(i, i)] = 1.0;
    }
    let b = householder_tangent(s);
    u.fixed_view_mut::<3, 2>(6, 6).copy_from(&b);
    u
}

pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..j {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangent_is_orthonormal_and_orthogonal_to_s() {
        for s in [
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(0.3, -0.4, 0.5).normalize(),
        ] {
            let b = householder_tangent(&s);
            let g = b.transpose() * b;
            assert!((g - nalgebra::Matrix2::identity()).abs().max() < 1e-14);
            assert!((b.transpose() * s).abs().max() < 1e-14);
        }
    }

    #[test]
    fn scaled_pinv_handles_wild_scales() {
        let a = DMatrix::from_row_slice(2, 2, &[1e20, 1e4, 1e4, 2.0]);
        let p = scaled_pinv(&a);
        let det = 2e20 - 1e8;
        let exact = DMatrix::from_row_slice(2, 2, &[2.0 / det, -1e4 / det, -1e4 / det, 1e20 / det]);
        for (x, y) in p.iter().zip(exact.iter()) {
            assert!((x - y).abs() <= 1e-9 * y.abs());
        }
    }

    #[test]
    fn scaled_pinv_of_singular_block() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let p = scaled_pinv(&a);
        assert!((p[(0, 0)] - 0.25).abs() < 1e-15);
        assert_eq!(p[(1, 1)], 0.0);
    }

    #[test]
    fn rank_sees_through_scaling() {
        let a = DMatrix::from_row_slice(2, 2, &[1e24, 0.0, 0.0, 1e-6]);
        assert_eq!(scaled_rank(&a, RANK_REL_TOL).rank, 2);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(scaled_rank(&b, RANK_REL_TOL).rank, 1);
    }
}
