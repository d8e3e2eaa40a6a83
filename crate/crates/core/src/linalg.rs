//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Eigenvalues of a Hermitian complex matrix, ascending.
///
/// Computed on the real symmetric embedding [[Re, -Im], [Im, Re]], whose
/// spectrum is that of the Hermitian matrix with every eigenvalue doubled.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let n = m.nrows();
    let mut real = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            real[(i, j)] = z.re;
            real[(i, j + n)] = -z.im;
            real[(i + n, j)] = z.im;
            real[(i + n, j + n)] = z.re;
        }
    }
    // Symmetrize away floating-point asymmetry before the eigensolve.
    let sym = (&real + real.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    // Every eigenvalue appears twice; keep one of each pair.
    vals.into_iter().step_by(2).collect()
}

/// Entrywise maximum modulus.
pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Maximum-column-sum norm.
pub(crate) fn norm1(m: &DMatrix<Complex64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Hermitian part (m + m^dagger) / 2 and the largest correction applied.
pub(crate) fn hermitize(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, f64) {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let correction = max_abs(&(&herm - m));
    (herm, correction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermitian_eigenvalues_of_pauli_like_matrix() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        let vals = hermitian_eigenvalues(&m);
        assert_eq!(vals.len(), 2);
        assert_relative_eq!(vals[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn hermitize_reports_correction() {
        let mut m = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        m[(0, 1)] = Complex64::new(1.0, 0.5);
        m[(1, 0)] = Complex64::new(1.0, -0.3);
        let (h, corr) = hermitize(&m);
        assert_relative_eq!((h[(0, 1)] - h[(1, 0)].conj()).norm(), 0.0, epsilon = 1e-15);
        assert!(corr > 0.0);
    }
}
