//! Modal representation of a Riesz-spectral boundary control system.
//!
//! A [`SpectralSystem`] stores the eigenvalues `λ_n` of the disturbance-free
//! operator, the modal input coefficients
//! `b_{n,k} = -λ_n <B e_k, ψ_n> + <𝒜 B e_k, ψ_n>` and the lifting data needed
//! by the certificate constants. Modes are 1-indexed in the mathematics and
//! 0-indexed in storage: row `n - 1` holds mode `n`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{self, c, CMat, CVec};

/// Default number of Simpson intervals for modal projections.
pub const DEFAULT_QUADRATURE_INTERVALS: usize = 2048;
/// Default number of stored modes.
pub const DEFAULT_MAX_MODES: usize = 10;
/// Relative tolerance deciding whether two eigenvalues coincide.
pub const EIGEN_EQUALITY_TOL: f64 = 1e-9;
/// Relative singular value tolerance for the PBH rank test.
pub const RANK_TOL: f64 = 1e-9;
/// Imaginary parts below this are treated as round-off when exporting reals.
pub const REAL_EXPORT_TOL: f64 = 1e-10;

/// Eigenfunction family used to move between functions of space and modal
/// coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModalBasis {
    /// `φ_n(ξ) = ψ_n(ξ) = sqrt(2/L) sin(nπξ/L)` on `(0, L)`.
    OrthonormalSine { length: f64 },
}

impl ModalBasis {
    pub fn length(&self) -> f64 {
        match *self {
            ModalBasis::OrthonormalSine { length } => length,
        }
    }

    /// Value of the `n`-th (1-indexed) eigenfunction at `xi`.
    pub fn phi(&self, n: usize, xi: f64) -> f64 {
        match *self {
            ModalBasis::OrthonormalSine { length } => {
                (2.0 / length).sqrt() * (n as f64 * PI * xi / length).sin()
            }
        }
    }

    /// Value of the `n`-th biorthogonal function. Equal to `phi` for an
    /// orthonormal basis.
    pub fn psi(&self, n: usize, xi: f64) -> f64 {
        self.phi(n, xi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSystem {
    eigenvalues: Vec<Complex64>,
    input_coeffs: CMat,
    lifting_coeffs: CMat,
    riesz_lower: f64,
    riesz_upper: f64,
    domain_length: f64,
    lifting_norms: Vec<f64>,
    lifting_generator_norms: Vec<f64>,
    lifting_gram: CMat,
    basis: Option<ModalBasis>,
}

/// Lifting operator data: `<B e_k, ψ_n>`, `‖B e_k‖`, `‖𝒜 B e_k‖` and the Gram
/// matrix `G_jk = <B e_j, B e_k>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftingData {
    pub coeffs: CMat,
    pub norms: Vec<f64>,
    pub generator_norms: Vec<f64>,
    pub gram: CMat,
}

impl SpectralSystem {
    pub fn new(
        eigenvalues: Vec<Complex64>,
        input_coeffs: CMat,
        lifting: LiftingData,
        riesz_lower: f64,
        riesz_upper: f64,
        domain_length: f64,
        basis: Option<ModalBasis>,
    ) -> Result<Self> {
        let n_max = eigenvalues.len();
        let m = input_coeffs.ncols();
        if n_max == 0 || m == 0 {
            return Err(Error::InvalidParameter("system needs at least one mode and one input".into()));
        }
        if input_coeffs.nrows() != n_max || lifting.coeffs.shape() != (n_max, m) {
            return Err(Error::InvalidParameter(format!(
                "coefficient matrices must be {n_max}x{m}"
            )));
        }
        if lifting.norms.len() != m || lifting.generator_norms.len() != m || lifting.gram.shape() != (m, m) {
            return Err(Error::InvalidParameter(format!("lifting data must cover {m} inputs")));
        }
        if !(riesz_lower > 0.0 && riesz_lower <= riesz_upper) {
            return Err(Error::InvalidParameter(format!(
                "Riesz bounds must satisfy 0 < m_R <= M_R (got {riesz_lower}, {riesz_upper})"
            )));
        }
        if eigenvalues.windows(2).any(|w| w[1].re > w[0].re) {
            return Err(Error::InvalidParameter(
                "eigenvalues must be sorted by nonincreasing real part".into(),
            ));
        }
        Ok(Self {
            eigenvalues,
            input_coeffs,
            lifting_coeffs: lifting.coeffs,
            riesz_lower,
            riesz_upper,
            domain_length,
            lifting_norms: lifting.norms,
            lifting_generator_norms: lifting.generator_norms,
            lifting_gram: lifting.gram,
            basis,
        })
    }

    pub fn n_max(&self) -> usize {
        self.eigenvalues.len()
    }
    pub fn input_dim(&self) -> usize {
        self.input_coeffs.ncols()
    }
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }
    pub fn eigenvalue(&self, n: usize) -> Complex64 {
        self.eigenvalues[n - 1]
    }
    pub fn input_coeffs(&self) -> &CMat {
        &self.input_coeffs
    }
    pub fn lifting_coeffs(&self) -> &CMat {
        &self.lifting_coeffs
    }
    pub fn riesz_lower(&self) -> f64 {
        self.riesz_lower
    }
    pub fn riesz_upper(&self) -> f64 {
        self.riesz_upper
    }
    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }
    pub fn lifting_norms(&self) -> &[f64] {
        &self.lifting_norms
    }
    pub fn lifting_generator_norms(&self) -> &[f64] {
        &self.lifting_generator_norms
    }
    pub fn lifting_gram(&self) -> &CMat {
        &self.lifting_gram
    }
    pub fn basis(&self) -> Option<ModalBasis> {
        self.basis
    }

    /// `A_{N0} = diag(λ_1, ..., λ_{N0})`.
    pub fn truncated_generator(&self, n0: usize) -> CMat {
        CMat::from_diagonal(&CVec::from_column_slice(&self.eigenvalues[..n0]))
    }

    /// `B_{N0}`: the first `n0` rows of the modal input matrix.
    pub fn truncated_input(&self, n0: usize) -> CMat {
        self.input_coeffs.rows(0, n0).into_owned()
    }

    /// Same plant restricted (or extended) to the first `n_modes` stored modes.
    pub fn with_modes(&self, n_modes: usize) -> Result<Self> {
        if n_modes == 0 || n_modes > self.n_max() {
            return Err(Error::InvalidParameter(format!(
                "mode count {n_modes} outside 1..={}",
                self.n_max()
            )));
        }
        let mut out = self.clone();
        out.eigenvalues.truncate(n_modes);
        out.input_coeffs = self.input_coeffs.rows(0, n_modes).into_owned();
        out.lifting_coeffs = self.lifting_coeffs.rows(0, n_modes).into_owned();
        Ok(out)
    }
}

/// Number of retained modes together with the spectral gap of the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    pub n0: usize,
    pub alpha: f64,
}

/// Reaction-diffusion plant `y_t = a y_ξξ + c y` on `(0, L)` with Dirichlet
/// boundary inputs `(y(0), y(L))` and the affine lifting
/// `B(u1, u2)(ξ) = u1 + (u2 - u1) ξ / L`.
pub fn build_heat_system(a: f64, c_react: f64, length: f64, n_max: usize) -> Result<SpectralSystem> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("diffusion coefficient a must be positive (got {a})")));
    }
    if !(length > 0.0) {
        return Err(Error::InvalidParameter(format!("domain length L must be positive (got {length})")));
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter("N_max must be at least 1".into()));
    }
    if !c_react.is_finite() {
        return Err(Error::InvalidParameter(format!("reaction coefficient c must be finite (got {c_react})")));
    }
    let l = length;
    let mut eigenvalues = Vec::with_capacity(n_max);
    let mut input = CMat::zeros(n_max, 2);
    let mut lifting = CMat::zeros(n_max, 2);
    for n in 1..=n_max {
        let nf = n as f64;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        eigenvalues.push(c(c_react - a * nf * nf * PI * PI / (l * l)));
        let b = a * nf * PI * (2.0 / (l * l * l)).sqrt();
        input[(n - 1, 0)] = c(b);
        input[(n - 1, 1)] = c(sign * b);
        let lift = (2.0 * l).sqrt() / (nf * PI);
        lifting[(n - 1, 0)] = c(lift);
        lifting[(n - 1, 1)] = c(sign * lift);
    }
    let norm = (l / 3.0).sqrt();
    let gram = linalg::real_matrix(&DMatrix::from_row_slice(2, 2, &[l / 3.0, l / 6.0, l / 6.0, l / 3.0]));
    SpectralSystem::new(
        eigenvalues,
        input,
        LiftingData {
            coeffs: lifting,
            norms: vec![norm; 2],
            generator_norms: vec![c_react.abs() * norm; 2],
            gram,
        },
        1.0,
        1.0,
        length,
        Some(ModalBasis::OrthonormalSine { length }),
    )
}

/// Finds the spectral gap `α = -max_{n > N0} Re λ_n` of the discarded modes.
pub fn check_truncation(sys: &SpectralSystem, n0: usize) -> Result<TruncationSpec> {
    let n_max = sys.n_max();
    if n0 >= n_max {
        return Err(Error::InvalidParameter(format!(
            "N0 = {n0} must be smaller than the number of stored modes ({n_max})"
        )));
    }
    let (worst_idx, worst) = sys.eigenvalues()[n0..]
        .iter()
        .enumerate()
        .map(|(i, z)| (i + n0 + 1, z.re))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    if worst >= 0.0 {
        return Err(Error::AssumptionViolated(format!(
            "unstable mode discarded: Re λ_{worst_idx} = {worst} >= 0 with N0 = {n0}"
        )));
    }
    if n0 == 0 {
        return Err(Error::InvalidParameter("N0 must be at least 1".into()));
    }
    Ok(TruncationSpec { n0, alpha: -worst })
}

/// Kalman condition for `(A_{N0}, B_{N0})` via the PBH test on the diagonal
/// generator: equal eigenvalues are grouped and each group's block of input
/// rows must have full row rank.
pub fn check_kalman(sys: &SpectralSystem, n0: usize) -> bool {
    if n0 == 0 || n0 > sys.n_max() {
        return false;
    }
    let lambdas = &sys.eigenvalues()[..n0];
    let b = sys.truncated_input(n0);
    kalman_diagonal(lambdas, &b)
}

/// PBH test for a diagonal generator with entries `lambdas` and input `b`.
pub fn kalman_diagonal(lambdas: &[Complex64], b: &CMat) -> bool {
    let n = lambdas.len();
    let m = b.ncols();
    if n == 0 || b.nrows() != n {
        return false;
    }
    let scale = linalg::spectral_norm(b);
    if !(scale > 0.0) || !scale.is_finite() {
        return false;
    }
    let mut assigned = vec![false; n];
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let tol = EIGEN_EQUALITY_TOL * lambdas[i].norm().max(1.0);
        let group: Vec<usize> = (i..n)
            .filter(|&j| !assigned[j] && (lambdas[j] - lambdas[i]).norm() < tol)
            .collect();
        for &j in &group {
            assigned[j] = true;
        }
        if group.len() > m {
            return false;
        }
        let block = CMat::from_fn(group.len(), m, |r, k| b[(group[r], k)]);
        let s = linalg::singular_values(&block);
        let rank = s.iter().filter(|&&x| x > RANK_TOL * scale).count();
        if rank != group.len() {
            return false;
        }
    }
    true
}

/// Composite Simpson rule on `[lo, hi]` with `intervals` (even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, intervals: usize) -> Result<f64> {
    if intervals == 0 || intervals % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "Simpson quadrature needs a positive even number of intervals (got {intervals})"
        )));
    }
    let h = (hi - lo) / intervals as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    Ok(acc * h / 3.0)
}

fn require_basis(sys: &SpectralSystem) -> Result<ModalBasis> {
    sys.basis()
        .ok_or_else(|| Error::InvalidArgument("system has no spatial basis attached".into()))
}

/// `<d, ψ_n>_H` by composite Simpson quadrature.
pub fn project_disturbance<F>(sys: &SpectralSystem, profile: F, n: usize, intervals: usize) -> Result<Complex64>
where
    F: Fn(f64) -> f64,
{
    let basis = require_basis(sys)?;
    if n == 0 || n > sys.n_max() {
        return Err(Error::InvalidParameter(format!("mode index {n} outside 1..={}", sys.n_max())));
    }
    let l = basis.length();
    simpson(|xi| profile(xi) * basis.psi(n, xi), 0.0, l, intervals).map(c)
}

/// Projects `profile` on the first `n_modes` modes, one quadrature per mode.
pub fn project_profile<F>(
    sys: &SpectralSystem,
    profile: F,
    n_modes: usize,
    intervals: usize,
    exec: Exec,
) -> Result<CVec>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let values = exec.map_range(n_modes, |i| project_disturbance(sys, &profile, i + 1, intervals));
    let values: Result<Vec<Complex64>> = values.into_iter().collect();
    Ok(CVec::from_vec(values?))
}

/// Pointwise evaluation of `Σ c_n φ_n(ξ)`.
pub fn reconstruct(sys: &SpectralSystem, coeffs: &[Complex64], xi_grid: &[f64]) -> Result<Vec<f64>> {
    let basis = require_basis(sys)?;
    if coeffs.len() > sys.n_max() {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients exceed the {} stored modes",
            coeffs.len(),
            sys.n_max()
        )));
    }
    xi_grid
        .iter()
        .map(|&xi| {
            let v: Complex64 = coeffs
                .iter()
                .enumerate()
                .map(|(i, &cn)| cn * basis.phi(i + 1, xi))
                .sum();
            if v.im.abs() > REAL_EXPORT_TOL * v.norm().max(1.0) {
                Err(Error::InvalidArgument(format!("reconstruction is complex at ξ = {xi}")))
            } else {
                Ok(v.re)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn case_study() -> SpectralSystem {
        build_heat_system(5.0, 2.5, 2.0 * PI, 10).unwrap()
    }

    #[test]
    fn heat_spectrum_and_input_coefficients() {
        let sys = build_heat_system(5.0, 2.5, 2.0 * PI, 3).unwrap();
        let ev: Vec<f64> = sys.eigenvalues().iter().map(|z| z.re).collect();
        assert_relative_eq!(ev[0], 1.25, epsilon = 1e-12);
        assert_relative_eq!(ev[1], -2.5, epsilon = 1e-12);
        assert_relative_eq!(ev[2], -8.75, epsilon = 1e-12);

        let sys1 = build_heat_system(5.0, 2.5, 2.0 * PI, 1).unwrap();
        assert_relative_eq!(sys1.input_coeffs()[(0, 0)].re, 5.0 / (2.0 * PI.sqrt()), epsilon = 1e-12);
        assert_relative_eq!(sys1.input_coeffs()[(0, 0)].re, 1.41047, epsilon = 1e-5);

        let lap = build_heat_system(1.0, 0.0, PI, 2).unwrap();
        assert_relative_eq!(lap.eigenvalue(1).re, -1.0, epsilon = 1e-12);
        assert_relative_eq!(lap.eigenvalue(2).re, -4.0, epsilon = 1e-12);
    }

    #[test]
    fn input_coefficients_follow_lifting_identity() {
        // b_{n,k} = -λ_n <B e_k, ψ_n> + <𝒜 B e_k, ψ_n>, with 𝒜 B e_k = c B e_k
        let sys = case_study();
        for n in 0..sys.n_max() {
            for k in 0..2 {
                let lift = sys.lifting_coeffs()[(n, k)];
                let expected = -sys.eigenvalues()[n] * lift + 2.5 * lift;
                assert!((sys.input_coeffs()[(n, k)] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lifting_coefficients_match_quadrature() {
        let sys = case_study();
        let l = 2.0 * PI;
        for n in 1..=4 {
            let q1 = project_disturbance(&sys, |xi| 1.0 - xi / l, n, 2048).unwrap();
            let q2 = project_disturbance(&sys, |xi| xi / l, n, 2048).unwrap();
            assert_relative_eq!(q1.re, sys.lifting_coeffs()[(n - 1, 0)].re, epsilon = 1e-9);
            assert_relative_eq!(q2.re, sys.lifting_coeffs()[(n - 1, 1)].re, epsilon = 1e-9);
        }
        let g01 = simpson(|xi| (1.0 - xi / l) * xi / l, 0.0, l, 2048).unwrap();
        assert_relative_eq!(sys.lifting_gram()[(0, 1)].re, g01, epsilon = 1e-10);
    }

    #[test]
    fn invalid_heat_parameters() {
        assert!(matches!(build_heat_system(0.0, 1.0, 1.0, 3), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_heat_system(1.0, 1.0, -1.0, 3), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_heat_system(1.0, 1.0, 1.0, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn truncation_examples() {
        let sys = case_study();
        assert_relative_eq!(check_truncation(&sys, 2).unwrap().alpha, 8.75, epsilon = 1e-12);
        assert!(matches!(check_truncation(&sys, 0), Err(Error::AssumptionViolated(_))));
        assert!(matches!(check_truncation(&sys, 10), Err(Error::InvalidParameter(_))));

        let toy = toy_system(&[-1.0, -2.0, -3.0], &[1.0, 1.0, 1.0]);
        assert_relative_eq!(check_truncation(&toy, 1).unwrap().alpha, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn truncation_gap_equals_next_eigenvalue_for_heat() {
        let sys = build_heat_system(0.3, 4.0, 1.0, 10).unwrap();
        for n0 in 1..9 {
            match check_truncation(&sys, n0) {
                Ok(t) => assert_relative_eq!(t.alpha, -sys.eigenvalue(n0 + 1).re, epsilon = 1e-12),
                Err(Error::AssumptionViolated(_)) => assert!(sys.eigenvalue(n0 + 1).re >= 0.0),
                Err(e) => panic!("{e}"),
            }
        }
    }

    pub(crate) fn toy_system(lambdas: &[f64], b: &[f64]) -> SpectralSystem {
        let n = lambdas.len();
        SpectralSystem::new(
            lambdas.iter().map(|&x| c(x)).collect(),
            CMat::from_iterator(n, 1, b.iter().map(|&x| c(x))),
            LiftingData {
                coeffs: CMat::zeros(n, 1),
                norms: vec![0.0],
                generator_norms: vec![0.0],
                gram: CMat::zeros(1, 1),
            },
            1.0,
            1.0,
            1.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn kalman_examples() {
        assert!(check_kalman(&case_study(), 2));
        // zero input coefficient
        assert!(!kalman_diagonal(&[c(1.0), c(2.0)], &CMat::from_row_slice(2, 1, &[c(0.5), c(0.0)])));
        // multiplicity 3 exceeds two inputs
        let b = CMat::from_fn(3, 2, |i, j| c((i + 2 * j + 1) as f64));
        assert!(!kalman_diagonal(&[c(1.0); 3], &b));
        // repeated eigenvalue, independent rows
        let b = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(1.0)]);
        assert!(kalman_diagonal(&[c(1.0), c(1.0)], &b));
        let b = CMat::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(4.0)]);
        assert!(!kalman_diagonal(&[c(1.0), c(1.0)], &b));
        // single input with distinct eigenvalues
        assert!(kalman_diagonal(&[c(1.0), c(2.0)], &CMat::from_row_slice(2, 1, &[c(0.5), c(0.1)])));
        assert!(!kalman_diagonal(&[c(1.0), c(1.0)], &CMat::from_row_slice(2, 1, &[c(0.5), c(0.1)])));
    }

    #[test]
    fn projection_orthonormality() {
        let sys = case_study();
        let basis = sys.basis().unwrap();
        let p11 = project_disturbance(&sys, |xi| basis.psi(1, xi), 1, 2048).unwrap();
        let p12 = project_disturbance(&sys, |xi| basis.psi(1, xi), 2, 2048).unwrap();
        assert!((p11.re - 1.0).abs() < 1e-8);
        assert!(p12.re.abs() < 1e-8);
        assert!(matches!(
            project_disturbance(&sys, |_| 1.0, 1, 2047),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn projection_of_square_root_profile_matches_midpoint_oracle() {
        let sys = case_study();
        let l = 2.0 * PI;
        let theta1 = |xi: f64| (2.0 * xi).sqrt() / l;
        let got = project_disturbance(&sys, theta1, 1, DEFAULT_QUADRATURE_INTERVALS).unwrap().re;
        // independent midpoint rule with 10^6 cells
        let cells = 1_000_000;
        let h = l / cells as f64;
        let oracle: f64 = (0..cells)
            .map(|i| {
                let xi = (i as f64 + 0.5) * h;
                theta1(xi) * (2.0 / l).sqrt() * (PI * xi / l).sin()
            })
            .sum::<f64>()
            * h;
        assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
    }

    #[test]
    fn reconstruction_examples() {
        let sys = case_study();
        let l = 2.0 * PI;
        let v = reconstruct(&sys, &[c(1.0)], &[l / 2.0]).unwrap();
        assert_relative_eq!(v[0], (2.0 / l).sqrt(), epsilon = 1e-14);
        let z = reconstruct(&sys, &vec![c(0.0); 10], &[0.1, 1.0, 3.0]).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
        assert!(reconstruct(&sys, &vec![c(0.0); 11], &[0.1]).is_err());

        let x0 = |xi: f64| -5.0 * xi * (l / 2.0 - xi) * (l - xi);
        let coeffs = project_profile(&sys, x0, 10, 2048, Exec::Sequential).unwrap();
        let grid: Vec<f64> = (0..=100).map(|i| l * i as f64 / 100.0).collect();
        let rec = reconstruct(&sys, coeffs.as_slice(), &grid).unwrap();
        let max_ref = grid.iter().map(|&xi| x0(xi).abs()).fold(0.0, f64::max);
        let max_err = grid.iter().zip(&rec).map(|(&xi, r)| (x0(xi) - r).abs()).fold(0.0, f64::max);
        assert!(max_err < 0.05 * max_ref, "max error {max_err} vs {max_ref}");
    }
}
