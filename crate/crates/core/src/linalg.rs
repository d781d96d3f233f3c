//! Small dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn real_matrix(m: &DMatrix<f64>) -> CMat {
    m.map(c)
}

pub fn real_vector(v: &[f64]) -> CVec {
    DVector::from_iterator(v.len(), v.iter().map(|&x| c(x)))
}

/// Induced 2-norm (largest singular value). Zero for empty matrices.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with tolerance `rel_tol * sigma_max`.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > rel_tol * smax).count(),
        _ => 0,
    }
}

/// Eigenvalues of a general complex square matrix, read off the diagonal of
/// its complex Schur form.
pub fn eigenvalues(m: &CMat) -> Vec<Complex64> {
    let n = m.nrows();
    match n {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        2 => {
            // closed form is more accurate for defective 2x2 blocks
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = (tr * tr * 0.25 - det).sqrt();
            vec![tr * 0.5 + disc, tr * 0.5 - disc]
        }
        _ => {
            let (_, t) = Schur::new(m.clone()).unpack();
            (0..n).map(|i| t[(i, i)]).collect()
        }
    }
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
pub fn hermitian_extremes(m: &CMat) -> (f64, f64) {
    let ev = SymmetricEigen::new(m.clone()).eigenvalues;
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

pub fn max_abs_imag<'a>(it: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    it.into_iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

/// Largest entry modulus (sup norm).
pub fn max_abs(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sorts complex numbers by (real part, imaginary part).
pub fn sort_canonical(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Monic polynomial coefficients `[1, c_1, ..., c_n]` of `prod (s - r_i)`.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![ONE];
    for &r in roots {
        let mut next = vec![ZERO; coeffs.len() + 1];
        for (i, &ci) in coeffs.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= ci * r;
        }
        coeffs = next;
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigenvalues_of_triangular_complex_matrix() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                Complex64::new(1.0, 1.0),
                c(2.0),
                c(3.0),
                ZERO,
                c(-2.0),
                c(1.0),
                ZERO,
                ZERO,
                Complex64::new(0.5, -3.0),
            ],
        );
        let mut ev = eigenvalues(&m);
        sort_canonical(&mut ev);
        assert_relative_eq!(ev[0].re, -2.0, epsilon = 1e-10);
        assert_relative_eq!(ev[1].im, -3.0, epsilon = 1e-10);
        assert_relative_eq!(ev[2].im, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn eigenvalues_of_full_complex_matrix_match_similarity() {
        // S diag(d) S^{-1} with a well-conditioned S
        let d = [c(-1.0), Complex64::new(-2.0, 1.0), c(0.5), Complex64::new(3.0, -0.5)];
        let s = CMat::from_fn(4, 4, |i, j| {
            if i == j {
                c(2.0)
            } else {
                Complex64::new(0.1 * (i + 2 * j) as f64, 0.05 * (i as f64 - j as f64))
            }
        });
        let m = &s * CMat::from_diagonal(&CVec::from_vec(d.to_vec())) * s.clone().try_inverse().unwrap();
        let mut ev = eigenvalues(&m);
        let mut want = d.to_vec();
        sort_canonical(&mut ev);
        sort_canonical(&mut want);
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn polynomial_from_roots() {
        let p = poly_from_roots(&[c(-3.0), c(-3.0)]);
        assert_eq!(p, vec![ONE, c(6.0), c(9.0)]);
    }

    #[test]
    fn rank_and_norm() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(4.0)]);
        assert_eq!(rank(&m, 1e-9), 1);
        assert_relative_eq!(spectral_norm(&m), 5.0, epsilon = 1e-12);
        assert_eq!(spectral_norm(&CMat::zeros(0, 0)), 0.0);
    }
}
