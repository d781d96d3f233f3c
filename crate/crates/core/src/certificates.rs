//! Explicit Lyapunov and ISS constants for the predictor closed loop, the
//! Lyapunov functional itself, and small-gain conditions for a PDE-ODE
//! interconnection.

use std::fmt::Write as _;

use crate::buffer::DelayBuffer;
use crate::error::{Error, Result};
use crate::format;
use crate::linalg::{self, CMat, CVec};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::predictor::PredictorDesign;
use crate::spectral::SpectralSystem;
use num_complex::Complex64;

/// `C1 = 2 max(1, D e^{2D‖A_{N0}‖} ‖B_{N0} K‖²)`.
pub fn c1_constant(delay: f64, norm_a: f64, norm_bk_modal: f64) -> f64 {
    2.0 * f64::max(1.0, delay * (2.0 * delay * norm_a).exp() * norm_bk_modal * norm_bk_modal)
}

/// Quantities that depend on the design but not on `(β, γ1, γ2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignConstants {
    pub delay: f64,
    pub alpha: f64,
    pub riesz_lower: f64,
    pub riesz_upper: f64,
    pub c1: f64,
    pub c5: f64,
    pub c7: f64,
    pub c8: f64,
    pub lam_min_p: f64,
    pub lam_max_p: f64,
    pub norm_p: f64,
    pub norm_bk: f64,
    pub norm_k: f64,
}

impl DesignConstants {
    pub fn new(sys: &SpectralSystem, design: &PredictorDesign) -> Result<Self> {
        let ly = design.require_lyapunov()?;
        if sys.input_dim() != design.input_dim() {
            return Err(Error::InvalidArgument("plant and design disagree on the input dimension".into()));
        }
        let k = design.gain();
        let m = k.nrows();
        let delay = design.delay();
        let alpha = design.alpha();
        let m_r = sys.riesz_lower();
        let norm_a = linalg::spectral_norm(design.a());
        let norm_bn0k = linalg::spectral_norm(&(design.b() * k));
        let c1 = c1_constant(delay, norm_a, norm_bn0k);

        let a_cl = design.a_cl();
        let c5_sum: f64 = (0..m)
            .map(|i| {
                let k_i = k.rows(i, 1).into_owned();
                let gen = sys.lifting_generator_norms()[i];
                let lift = sys.lifting_norms()[i];
                let k_norm = k_i.norm();
                let kacl_norm = (&k_i * a_cl).norm();
                gen * gen * k_norm * k_norm + lift * lift * kacl_norm * kacl_norm
            })
            .sum();
        let c5 = 2.0 * m as f64 / (alpha * m_r) * c5_sum;

        let gram_form: CMat = k.adjoint() * sys.lifting_gram() * k;
        let norm_bk = linalg::hermitian_extremes(&gram_form).1.max(0.0).sqrt();
        let norm_k = linalg::spectral_norm(k);
        let norm_ebk = linalg::spectral_norm(&(design.exp_da() * design.b() * k));
        let c7 = norm_a + norm_ebk + 0.5;
        let c8 = design.transition().max_rate() * norm_k + norm_k * (norm_a + norm_ebk);

        Ok(Self {
            delay,
            alpha,
            riesz_lower: m_r,
            riesz_upper: sys.riesz_upper(),
            c1,
            c5,
            c7,
            c8,
            lam_min_p: ly.lam_min,
            lam_max_p: ly.lam_max,
            norm_p: ly.lam_max,
            norm_bk,
            norm_k,
        })
    }

    pub fn gamma1_bound(&self) -> f64 {
        self.c1 / self.lam_min_p
    }

    pub fn gamma2_bound(&self, beta: f64) -> f64 {
        f64::max(self.norm_bk * self.norm_bk / (self.riesz_lower * self.lam_min_p), self.c5 / (1.0 - beta))
    }

    /// Full bundle at `(β, γ1, γ2)`, or the first violated hypothesis.
    pub fn bundle(&self, beta: f64, gamma1: f64, gamma2: f64) -> Result<CertificateBundle> {
        let fail = |msg: String| Err(Error::InvalidCertificateParameters(msg));
        if !(beta > 0.0 && beta < 1.0) {
            return fail(format!("beta = {beta} outside (0, 1)"));
        }
        if !(gamma1 > self.gamma1_bound()) {
            return fail(format!("gamma1 = {gamma1} <= C1/lambda_min(P) = {}", self.gamma1_bound()));
        }
        let bk2 = self.norm_bk * self.norm_bk;
        let m_r = self.riesz_lower;
        let g2_lyap = bk2 / (m_r * self.lam_min_p);
        if !(gamma2 > g2_lyap) {
            return fail(format!("gamma2 = {gamma2} <= |BK|^2/(m_R lambda_min(P)) = {g2_lyap}"));
        }
        let g2_tail = self.c5 / (1.0 - beta);
        if !(gamma2 > g2_tail) {
            return fail(format!("gamma2 = {gamma2} <= C5/(1 - beta) = {g2_tail}"));
        }
        let c2g1 = gamma1 * self.lam_min_p - self.c1;
        let c3g2 = gamma2 * self.lam_min_p - bk2 / m_r;
        if !(c2g1 > 0.0 && c3g2 > 0.0) {
            return fail(format!("C2(gamma1) = {c2g1} and C3(gamma2) = {c3g2} must be positive"));
        }
        let c4 = (2.0 * self.riesz_upper).sqrt() + self.norm_bk / c3g2.sqrt();
        let c6 = (2.0 * (m_r + bk2) / (self.alpha * m_r)
            + (gamma1 * (1.0 + self.delay) + gamma2) * self.norm_p * self.norm_p / beta)
            / m_r;
        let kappa0 = 0.5
            * f64::min(
                f64::min((1.0 - beta) / self.lam_max_p, (1.0 - beta - self.c5 / gamma2) / self.lam_max_p),
                self.alpha / 2.0,
            );
        if !(kappa0 > 0.0) {
            return fail(format!("kappa0 = {kappa0} is not positive"));
        }
        Ok(CertificateBundle {
            beta,
            gamma1,
            gamma2,
            c1: self.c1,
            c2g1,
            c3g2,
            c4,
            c5: self.c5,
            c6,
            c7: self.c7,
            c8: self.c8,
            kappa0,
            small_gain_constant: c4 * (c6 / (2.0 * kappa0)).sqrt(),
            lam_min_p: self.lam_min_p,
            lam_max_p: self.lam_max_p,
            norm_p: self.norm_p,
            norm_bk: self.norm_bk,
            norm_k: self.norm_k,
        })
    }

    /// Small-gain constant, `+∞` outside the feasible set.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.bundle(x[0], x[1], x[2])
            .map(|b| b.small_gain_constant)
            .unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateBundle {
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2g1: f64,
    pub c3g2: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub kappa0: f64,
    /// `C4 √(C6 / (2 κ0))`.
    pub small_gain_constant: f64,
    pub lam_min_p: f64,
    pub lam_max_p: f64,
    pub norm_p: f64,
    pub norm_bk: f64,
    pub norm_k: f64,
}

impl CertificateBundle {
    /// `‖K‖ / √C2(γ1)`, the factor in `‖u‖ ≤ ‖K‖/√C2 · √V`.
    pub fn control_gain(&self) -> f64 {
        self.norm_k / self.c2g1.sqrt()
    }

    /// Flat `name = value` document. `margin` is written as `nan` when absent.
    pub fn report(&self, margin: Option<f64>) -> String {
        let mut out = String::new();
        let rows = [
            ("beta", self.beta),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("C1", self.c1),
            ("C2g1", self.c2g1),
            ("C3g2", self.c3g2),
            ("C4", self.c4),
            ("C5", self.c5),
            ("C6", self.c6),
            ("kappa0", self.kappa0),
            ("small_gain_constant", self.small_gain_constant),
            ("margin", margin.unwrap_or(f64::NAN)),
            ("C7", self.c7),
            ("C8", self.c8),
        ];
        for (name, value) in rows {
            let _ = writeln!(out, "{name} = {}", format::sig(value, 12));
        }
        out
    }
}

/// Parses a `name = value` certificate document back into pairs.
pub fn parse_report(text: &str) -> Vec<(String, f64)> {
    text.lines()
        .filter_map(|line| {
            let (k, v) = line.split_once('=')?;
            Some((k.trim().to_string(), v.trim().parse().ok()?))
        })
        .collect()
}

pub fn compute_constants(
    sys: &SpectralSystem,
    design: &PredictorDesign,
    beta: f64,
    gamma1: f64,
    gamma2: f64,
) -> Result<CertificateBundle> {
    DesignConstants::new(sys, design)?.bundle(beta, gamma1, gamma2)
}

/// Interconnection constants: the ODE gains `C̃0, C̃1, C̃2` and the coupling
/// bounds `‖f2(x, X, v)‖ ≤ D1|x| + D2‖X‖ + D3|v|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConstants {
    pub ct0: f64,
    pub ct1: f64,
    pub ct2: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl CouplingConstants {
    pub fn new(ct0: f64, ct1: f64, ct2: f64, d1: f64, d2: f64, d3: f64) -> Result<Self> {
        let all = [ct0, ct1, ct2, d1, d2, d3];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter("coupling constants must be finite and nonnegative".into()));
        }
        if ct0 < 1.0 {
            return Err(Error::InvalidParameter(format!("Ct0 = {ct0} must be at least 1")));
        }
        Ok(Self { ct0, ct1, ct2, d1, d2, d3 })
    }

    /// Constants for `ẋ = -a1 x + (b1/L)<η1, X> + c1 v` coupled through
    /// `f2 = a2 x θ1 + b2 arctan((d2/L)<η2, X>) θ2 + c2 v θ3` with unit-norm
    /// profiles.
    #[allow(clippy::too_many_arguments)]
    pub fn scalar_loop(a1: f64, b1: f64, c1: f64, a2: f64, b2: f64, c2: f64, d2: f64, length: f64) -> Result<Self> {
        if !(a1 > 0.0) {
            return Err(Error::InvalidParameter(format!("a1 must be positive (got {a1})")));
        }
        if !(length > 0.0) {
            return Err(Error::InvalidParameter(format!("L must be positive (got {length})")));
        }
        Self::new(
            2f64.sqrt(),
            2.0 * b1.abs() / (a1 * length),
            2.0 * c1.abs() / a1,
            a2.abs(),
            (b2 * d2).abs() / length,
            c2.abs(),
        )
    }

    /// `D1 C̃1 + D2`.
    pub fn loop_gain(&self) -> f64 {
        self.d1 * self.ct1 + self.d2
    }
}

/// `1 - (D1 C̃1 + D2) C4 √(C6/(2κ0))`; positive when the interconnection is
/// certified stable.
pub fn small_gain_margin(bundle: &CertificateBundle, coupling: &CouplingConstants) -> f64 {
    1.0 - coupling.loop_gain() * bundle.small_gain_constant
}

/// `1 - (D1 C̃1 + D2) C4 √C10` for a caller-supplied `C10`.
pub fn no_blowup_margin(c4: f64, c10: f64, coupling: &CouplingConstants) -> Result<f64> {
    if !(c10 >= 0.0) {
        return Err(Error::InvalidParameter(format!("C10 must be nonnegative (got {c10})")));
    }
    Ok(1.0 - coupling.loop_gain() * c4 * c10.sqrt())
}

/// Grid scan and Nelder–Mead settings for [`optimize_parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub betas: Vec<f64>,
    pub multipliers: Vec<f64>,
    /// Number of best scan points refined by Nelder–Mead.
    pub refine: usize,
    /// Additional candidate starts `(β, γ1, γ2)`, used only when feasible.
    pub extra_starts: Vec<[f64; 3]>,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            betas: (1..=9).map(|i| i as f64 / 10.0).collect(),
            multipliers: vec![1.5, 3.0, 10.0],
            refine: 3,
            extra_starts: Vec::new(),
            nelder_mead: NelderMeadOptions::default(),
        }
    }
}

/// Minimizes the small-gain constant over `(β, γ1, γ2)`.
///
/// Feasible starts come from a grid over `β` and multiples of the lower
/// bounds on `γ1`, `γ2`. The best `refine` starts are polished by
/// Nelder–Mead, each restarted once from its own optimum.
pub fn optimize_parameters(
    sys: &SpectralSystem,
    design: &PredictorDesign,
    search: &SearchConfig,
) -> Result<CertificateBundle> {
    let consts = DesignConstants::new(sys, design)?;
    optimize_constants(&consts, search)
}

pub fn optimize_constants(consts: &DesignConstants, search: &SearchConfig) -> Result<CertificateBundle> {
    let mut starts: Vec<([f64; 3], f64)> = Vec::new();
    for &beta in &search.betas {
        for &m1 in &search.multipliers {
            for &m2 in &search.multipliers {
                let x = [beta, m1 * consts.gamma1_bound(), m2 * consts.gamma2_bound(beta)];
                let fx = consts.objective(&x);
                if fx.is_finite() {
                    starts.push((x, fx));
                }
            }
        }
    }
    for x in &search.extra_starts {
        let fx = consts.objective(x);
        if fx.is_finite() {
            starts.push((*x, fx));
        }
    }
    if starts.is_empty() {
        return Err(Error::InfeasibleCertificate("no feasible starting point in the parameter scan".into()));
    }
    starts.sort_by(|a, b| a.1.total_cmp(&b.1));

    let objective = |x: &[f64]| consts.objective(x);
    let mut best = starts[0];
    for (x0, _) in starts.iter().take(search.refine.max(1)) {
        let first = nelder_mead(objective, x0, &search.nelder_mead);
        let second = nelder_mead(objective, &first.x, &search.nelder_mead);
        for r in [first, second] {
            if r.fx < best.1 {
                best = ([r.x[0], r.x[1], r.x[2]], r.fx);
            }
        }
    }
    log::debug!("certificate optimum {:?} -> {}", best.0, best.1);
    consts.bundle(best.0[0], best.0[1], best.0[2])
}

/// Lyapunov functional
/// `V = γ1 {Z*PZ + ∫_{t-D}^t φ Z*PZ ds} + γ2 φ(t-D) Z(t-D)*PZ(t-D)
///      + ½ Σ_{k>N0} |<X - B u_D, ψ_k>|²`.
///
/// The tail runs over the modes in `x_coeffs`.
pub fn evaluate_v(
    sys: &SpectralSystem,
    design: &PredictorDesign,
    bundle: &CertificateBundle,
    t: f64,
    z_history: &DelayBuffer,
    x_coeffs: &[Complex64],
    u_d: &CVec,
) -> Result<f64> {
    let n0 = design.n0();
    let p = &design.require_lyapunov()?.p;
    if x_coeffs.len() < n0 || x_coeffs.len() > sys.n_max() {
        return Err(Error::InvalidArgument(format!(
            "X coefficients must cover between {n0} and {} modes",
            sys.n_max()
        )));
    }
    if u_d.len() != design.input_dim() {
        return Err(Error::InvalidArgument(format!("u_D must have {} entries", design.input_dim())));
    }
    let quad = |z: &CVec| (z.adjoint() * p * z)[(0, 0)].re;
    let sig = design.transition();
    let delay = design.delay();

    let z_now = z_history.at(t)?;
    let integral: f64 = z_history
        .quadrature(t - delay, t)?
        .iter()
        .map(|(s, w, z)| w * sig.phi(*s) * quad(z))
        .sum();
    let phi_past = sig.phi(t - delay);
    let past = if phi_past > 0.0 { phi_past * quad(&z_history.at(t - delay)?) } else { 0.0 };

    let lift = sys.lifting_coeffs();
    let tail: f64 = (n0..x_coeffs.len())
        .map(|k| {
            let bu: Complex64 = (0..u_d.len()).map(|i| lift[(k, i)] * u_d[i]).sum();
            (x_coeffs[k] - bu).norm_sqr()
        })
        .sum();
    Ok(bundle.gamma1 * (quad(&z_now) + integral) + bundle.gamma2 * past + 0.5 * tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::predictor::PlacementStrategy;
    use crate::spectral::build_heat_system;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn case() -> (SpectralSystem, PredictorDesign) {
        let sys = build_heat_system(5.0, 2.5, 2.0 * PI, 10).unwrap();
        let design =
            PredictorDesign::synthesize(&sys, 2, 0.1, 0.2, &[c(-3.0), c(-3.0)], PlacementStrategy::Auto).unwrap();
        (sys, design)
    }

    #[test]
    fn c1_floor_and_limits() {
        let (sys, design) = case();
        let consts = DesignConstants::new(&sys, &design).unwrap();
        let norm_a = linalg::spectral_norm(design.a());
        assert_eq!(c1_constant(0.0, norm_a, 0.9), 2.0);
        assert_eq!(c1_constant(0.1, 0.0, 1.0), 2.0);
        assert!(consts.c1 > 2.0);

        let b = consts.bundle(0.4, 2.0 * consts.gamma1_bound(), 1e10).unwrap();
        let two_term = 0.5 * f64::min((1.0 - 0.4) / consts.lam_max_p, consts.alpha / 2.0);
        assert!((b.kappa0 - two_term).abs() < 1e-6);
    }

    #[test]
    fn norm_bk_matches_quadrature() {
        let (sys, design) = case();
        let consts = DesignConstants::new(&sys, &design).unwrap();
        // ‖B K v‖² = ∫ |(Kv)_1 (1 - ξ/L) + (Kv)_2 ξ/L|² dξ maximized over unit v
        let l = 2.0 * PI;
        let k = design.gain().map(|z| z.re);
        let mut best: f64 = 0.0;
        for i in 0..3600 {
            let th = PI * i as f64 / 3600.0;
            let v = nalgebra::DVector::from_vec(vec![th.cos(), th.sin()]);
            let kv = &k * v;
            let f = |xi: f64| (kv[0] * (1.0 - xi / l) + kv[1] * xi / l).powi(2);
            best = best.max(crate::spectral::simpson(f, 0.0, l, 256).unwrap());
        }
        assert_relative_eq!(consts.norm_bk, best.sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn report_lists_names_in_order() {
        let (sys, design) = case();
        let b = compute_constants(&sys, &design, 0.4131, 106.3290, 337.1938).unwrap();
        let doc = b.report(Some(0.25));
        let names: Vec<String> = parse_report(&doc).into_iter().map(|(k, _)| k).collect();
        assert_eq!(
            names,
            [
                "beta", "gamma1", "gamma2", "C1", "C2g1", "C3g2", "C4", "C5", "C6", "kappa0",
                "small_gain_constant", "margin", "C7", "C8"
            ]
        );
    }

    #[test]
    fn margins() {
        let (sys, design) = case();
        let b = compute_constants(&sys, &design, 0.4131, 106.3290, 337.1938).unwrap();
        let decoupled = CouplingConstants::new(1.0, 0.3, 0.1, 0.0, 0.0, 2.0).unwrap();
        assert_eq!(small_gain_margin(&b, &decoupled), 1.0);
        let cc = CouplingConstants::scalar_loop(1.5, 0.5, 0.2, 0.7, 0.55, 10.0, 0.45, 2.0 * PI).unwrap();
        let sg = small_gain_margin(&b, &cc);
        let nb = no_blowup_margin(b.c4, b.c6 / (2.0 * b.kappa0), &cc).unwrap();
        assert_relative_eq!(sg, nb, epsilon = 1e-12);
        assert_eq!(no_blowup_margin(b.c4, 0.0, &cc).unwrap(), 1.0);
        assert!(no_blowup_margin(b.c4, -1.0, &cc).is_err());
        let c10 = (1.0 / (cc.loop_gain() * b.c4)).powi(2);
        assert!(no_blowup_margin(b.c4, c10, &cc).unwrap().abs() < 1e-12);
    }

    #[test]
    fn coupling_constants_validate() {
        assert!(CouplingConstants::new(0.5, 0.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(CouplingConstants::scalar_loop(0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn v_of_zero_state_and_single_tail_mode() {
        let (sys, design) = case();
        let b = compute_constants(&sys, &design, 0.4131, 106.3290, 337.1938).unwrap();
        let mut zb = DelayBuffer::new(0.01, 0.1, 2).unwrap();
        for _ in 0..5 {
            zb.push(CVec::zeros(2)).unwrap();
        }
        let mut x = vec![c(0.0); 10];
        let u = CVec::zeros(2);
        assert_eq!(evaluate_v(&sys, &design, &b, 0.04, &zb, &x, &u).unwrap(), 0.0);
        x[2] = c(1.0);
        assert_relative_eq!(evaluate_v(&sys, &design, &b, 0.04, &zb, &x, &u).unwrap(), 0.5, epsilon = 1e-15);
    }
}
