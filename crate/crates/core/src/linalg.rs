//! Dense helpers on top of nalgebra.

use nalgebra::DMatrix;

/// Orthonormal basis (as columns) of the null space of `a`; singular values
/// below `rel_tol · σ_max` count as zero.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (r, c) = a.shape();
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    // pad to at least square so that V carries a full basis of ℝ^c
    let mut padded = DMatrix::zeros(r.max(c), c);
    padded.view_mut((0, 0), (r, c)).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let tol = rel_tol * smax.max(1.0);
    let cols: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] <= tol).collect();
    let mut out = DMatrix::zeros(c, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        for k in 0..c {
            out[(k, j)] = vt[(i, k)];
        }
    }
    out
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().iter().fold(0.0f64, |m, &s| m.max(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0]);
        let n = null_space(&a, 1e-12);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).norm() < 1e-14);
        assert!((n.transpose() * &n - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, -3.0, 1.0]));
        assert!((spectral_norm(&a) - 3.0).abs() < 1e-14);
    }
}
