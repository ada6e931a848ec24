//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

/// Singular values sorted in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// The `k`-th largest singular value (1-based). Zero when the matrix has
/// fewer than `k` singular values, which is the case for a wide matrix
/// asked for its `ncols`-th value.
pub fn sigma_k(m: &DMatrix<f64>, k: usize) -> f64 {
    assert!(k >= 1);
    singular_values(m).get(k - 1).copied().unwrap_or(0.0)
}

/// Moore-Penrose pseudo-inverse; singular values `<= tol` are dropped.
pub fn pseudo_inverse(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            // out += v_i * u_i^T / s
            let vi = v_t.row(i).transpose();
            let ui = u.column(i);
            out += (vi * ui.transpose()) / s;
        }
    }
    out
}

/// Induced 1 -> 1 operator norm: the maximum absolute column sum.
pub fn norm_11(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn l1(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Smallest singular value of an `n x k` matrix together with a matching
/// unit right singular vector. Wide matrices are zero-padded to square so
/// the returned vector spans the null space when `n < k`.
pub fn min_right_singular_pair(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let k = m.ncols();
    let padded = if m.nrows() < k {
        let mut p = DMatrix::zeros(k, k);
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty matrix");
    (sigma, v_t.row(idx).transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_11_examples() {
        assert_eq!(norm_11(&DMatrix::identity(3, 3)), 1.0);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 4.0]);
        assert_eq!(norm_11(&m), 6.0);
    }

    #[test]
    fn pinv_of_full_column_rank_is_left_inverse() {
        let m = DMatrix::from_row_slice(3, 2, &[0.7, 0.1, 0.2, 0.3, 0.1, 0.6]);
        let p = pseudo_inverse(&m, 1e-10);
        let id = &p * &m;
        assert!((id - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-12);
    }

    #[test]
    fn sigma_of_wide_matrix_is_zero() {
        let m = DMatrix::from_row_slice(1, 2, &[0.5, 0.5]);
        assert_eq!(sigma_k(&m, 2), 0.0);
        let (s, v) = min_right_singular_pair(&m);
        assert!(s.abs() < 1e-15);
        assert!((&m * v).norm() < 1e-15);
    }

    #[test]
    fn singular_values_descending() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 2.0, 0.0]);
        let sv = singular_values(&m);
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14, "{sv:?}");
    }
}
