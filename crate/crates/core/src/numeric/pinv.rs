use nalgebra::DMatrix;

/// Singular values at or below this are treated as zero by the undamped inverse.
pub const SINGULAR_VALUE_CUTOFF: f64 = 1e-12;

/// Moore-Penrose pseudo-inverse via SVD when `damping == 0`, otherwise the
/// damped least-squares inverse `Jᵀ(JJᵀ + λ²I)⁻¹`.
pub fn pseudo_inverse(j: &DMatrix<f64>, damping: f64) -> DMatrix<f64> {
    let (rows, cols) = j.shape();
    if damping > 0.0 {
        let mut jjt = j * j.transpose();
        for i in 0..rows {
            jjt[(i, i)] += damping * damping;
        }
        // JJᵀ + λ²I is symmetric positive definite for λ > 0
        return match jjt.clone().cholesky() {
            Some(chol) => j.transpose() * chol.inverse(),
            None => j.transpose() * jjt.try_inverse().unwrap_or_else(|| DMatrix::zeros(rows, rows)),
        };
    }
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    j.clone()
        .svd(true, true)
        .pseudo_inverse(SINGULAR_VALUE_CUTOFF)
        .expect("cutoff is non-negative and both singular bases were requested")
}
