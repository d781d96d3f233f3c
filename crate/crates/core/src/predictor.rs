//! Delay-compensating predictor feedback for the unstable modes.
//!
//! The retained modes obey `Ẏ = A Y + B u(t - D) + D_{N0}`. With the
//! Artstein state `Z(t) = Y(t) + ∫_{t-D}^t e^{(t-s-D)A} B u(s) ds` the delay
//! disappears: `Ż = A Z + e^{-DA} B u + D_{N0}`. The control law is
//! `u = φ(t) K Z(t)` where `φ` ramps from 0 to 1 over `[0, t0]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::buffer::{trapezoid_nodes, DelayBuffer};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{self, c, CMat, CVec, ONE, ZERO};
use crate::spectral::{check_truncation, kalman_diagonal, SpectralSystem};

/// Maximum distance between placed and requested closed-loop poles.
pub const POLE_TOL: f64 = 1e-6;
/// Default Picard iteration cap for [`invert_artstein`].
pub const PICARD_MAX_ITER: usize = 200;
/// Number of seed vectors tried by the rank-one placement.
const RANK_ONE_RETRIES: usize = 16;

/// Quintic C² ramp: `φ(t) = 10s³ - 15s⁴ + 6s⁵`, `s = clamp(t/t0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionSignal {
    t0: f64,
}

impl TransitionSignal {
    pub fn new(t0: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::InvalidParameter(format!("transition time t0 must be positive (got {t0})")));
        }
        Ok(Self { t0 })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// `(φ(t), φ̇(t))`.
    pub fn value(&self, t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return (0.0, 0.0);
        }
        if t >= self.t0 {
            return (1.0, 0.0);
        }
        let s = t / self.t0;
        let s2 = s * s;
        let phi = s2 * s * (10.0 - 15.0 * s + 6.0 * s2);
        let dphi = 30.0 * s2 * (1.0 - s) * (1.0 - s) / self.t0;
        (phi, dphi)
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.value(t).0
    }

    /// `sup |φ̇| = 15 / (8 t0)`, attained at `t0 / 2`.
    pub fn max_rate(&self) -> f64 {
        15.0 / (8.0 * self.t0)
    }
}

/// Matrix exponential `e^{sA}` of a diagonal matrix.
pub fn diagonal_exponential(a: &CMat, s: f64) -> CMat {
    let n = a.nrows();
    CMat::from_fn(n, n, |i, j| if i == j { (a[(i, i)] * s).exp() } else { ZERO })
}

/// How a gain is chosen when several inputs are available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlacementStrategy {
    /// Direct assignment when `B̃` has full row rank, rank-one otherwise.
    #[default]
    Auto,
    /// `A + B̃K` is made equal to a fixed matrix with the requested spectrum
    /// (diagonal, or real 2x2 blocks for conjugate pairs of a real plant).
    Direct,
    /// `K = q k` with `k` from Ackermann's formula for `(A, B̃q)`.
    RankOne,
}

fn is_diagonal(a: &CMat) -> bool {
    a.is_square()
        && (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| i == j || a[(i, j)] == ZERO))
}

fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Matches `got` to `want` greedily and returns the largest distance.
pub fn spectrum_distance(got: &[Complex64], want: &[Complex64]) -> f64 {
    let mut pool: Vec<Complex64> = got.to_vec();
    let mut worst: f64 = 0.0;
    for w in want {
        let (idx, d) = pool
            .iter()
            .enumerate()
            .map(|(i, g)| (i, (g - w).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if idx == usize::MAX {
            return f64::INFINITY;
        }
        worst = worst.max(d);
        pool.swap_remove(idx);
    }
    worst
}

/// Single-input Ackermann gain for `u = k x`: `k = -e_nᵀ C⁻¹ p(A)`.
pub fn ackermann(a: &CMat, b: &CVec, poles: &[Complex64]) -> Result<CMat> {
    let n = a.nrows();
    let mut ctrb = CMat::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        ctrb.set_column(j, &col);
        col = a * col;
    }
    let coeffs = linalg::poly_from_roots(poles);
    // p(A) by Horner
    let mut p_a = CMat::identity(n, n) * coeffs[0];
    for &ck in &coeffs[1..] {
        p_a = a * p_a + CMat::identity(n, n) * ck;
    }
    let mut e_n = CVec::zeros(n);
    e_n[n - 1] = ONE;
    let w = ctrb
        .transpose()
        .lu()
        .solve(&e_n)
        .ok_or_else(|| Error::SynthesisFailure("controllability matrix is singular".into()))?;
    let k = -(w.transpose() * p_a);
    Ok(CMat::from_row_slice(1, n, k.as_slice()))
}

/// Closed-loop matrix with the requested spectrum. Real poles (or all poles of
/// a complex plant) go on the diagonal, each slot taking the nearest remaining
/// pole to the open-loop eigenvalue there; conjugate pairs of a real plant
/// become real 2x2 rotation blocks.
fn target_matrix(lambdas: &[Complex64], poles: &[Complex64], real: bool) -> CMat {
    let n = poles.len();
    let mut t = CMat::zeros(n, n);
    let mut used = vec![false; n];
    let mut pairs = Vec::new();
    if real {
        for i in 0..n {
            if used[i] || poles[i].im == 0.0 {
                continue;
            }
            let tol = POLE_TOL * poles[i].norm().max(1.0);
            if let Some(j) = (i + 1..n).find(|&j| !used[j] && (poles[j] - poles[i].conj()).norm() <= tol) {
                used[i] = true;
                used[j] = true;
                pairs.push(poles[i]);
            }
        }
    }
    let mut slot = 0;
    for p in pairs {
        let (s, w) = (p.re, p.im.abs());
        t[(slot, slot)] = c(s);
        t[(slot, slot + 1)] = c(w);
        t[(slot + 1, slot)] = c(-w);
        t[(slot + 1, slot + 1)] = c(s);
        slot += 2;
    }
    while slot < n {
        let nearest = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&i, &j| (poles[i] - lambdas[slot]).norm().total_cmp(&(poles[j] - lambdas[slot]).norm()))
            .unwrap();
        used[nearest] = true;
        t[(slot, slot)] = poles[nearest];
        slot += 1;
    }
    t
}

fn place_direct(a: &CMat, b: &CMat, poles: &[Complex64]) -> Result<CMat> {
    let n = a.nrows();
    if linalg::rank(b, crate::spectral::RANK_TOL) < n {
        return Err(Error::SynthesisFailure("direct assignment needs B with full row rank".into()));
    }
    let lambdas: Vec<Complex64> = (0..n).map(|i| a[(i, i)]).collect();
    let target = target_matrix(&lambdas, poles, is_real(a) && is_real(b));
    let pinv = b
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::SynthesisFailure(format!("pseudo-inverse failed: {e}")))?;
    Ok(pinv * (target - a))
}

/// Seed vector for the `r`-th rank-one attempt: all ones at `r = 0`, then
/// `q_i ∝ 1 + 0.1 r i`.
pub fn rank_one_seed(m: usize, r: usize) -> CVec {
    let q = CVec::from_fn(m, |i, _| c(1.0 + 0.1 * r as f64 * i as f64));
    let norm = q.norm();
    q / c(norm)
}

fn place_rank_one(a: &CMat, b: &CMat, poles: &[Complex64]) -> Result<CMat> {
    let lambdas: Vec<Complex64> = (0..a.nrows()).map(|i| a[(i, i)]).collect();
    for r in 0..RANK_ONE_RETRIES {
        let q = rank_one_seed(b.ncols(), r);
        let bq = b * &q;
        if !kalman_diagonal(&lambdas, &CMat::from_column_slice(bq.len(), 1, bq.as_slice())) {
            log::debug!("rank-one seed {r} leaves (A, Bq) uncontrollable");
            continue;
        }
        let Ok(k) = ackermann(a, &bq, poles) else { continue };
        let gain = &q * k;
        let placed = linalg::eigenvalues(&(a + b * &gain));
        if spectrum_distance(&placed, poles) <= POLE_TOL {
            return Ok(gain);
        }
    }
    Err(Error::SynthesisFailure(format!(
        "no rank-one seed among {RANK_ONE_RETRIES} places the requested poles"
    )))
}

/// Gain `K` with `spec(A + B̃K) = poles` using [`PlacementStrategy::Auto`].
pub fn place_poles(a: &CMat, b_tilde: &CMat, poles: &[Complex64]) -> Result<CMat> {
    place_poles_with(a, b_tilde, poles, PlacementStrategy::Auto)
}

pub fn place_poles_with(
    a: &CMat,
    b_tilde: &CMat,
    poles: &[Complex64],
    strategy: PlacementStrategy,
) -> Result<CMat> {
    let n = a.nrows();
    if !is_diagonal(a) {
        return Err(Error::InvalidArgument("pole placement expects a diagonal generator".into()));
    }
    if b_tilde.nrows() != n || poles.len() != n {
        return Err(Error::InvalidArgument(format!(
            "need {n} poles and an input matrix with {n} rows"
        )));
    }
    let lambdas: Vec<Complex64> = (0..n).map(|i| a[(i, i)]).collect();
    if !kalman_diagonal(&lambdas, b_tilde) {
        return Err(Error::SynthesisFailure("(A, B) is not controllable".into()));
    }
    let mut sorted = poles.to_vec();
    linalg::sort_canonical(&mut sorted);
    let gain = match strategy {
        PlacementStrategy::Direct => place_direct(a, b_tilde, &sorted)?,
        PlacementStrategy::RankOne => place_rank_one(a, b_tilde, &sorted)?,
        PlacementStrategy::Auto => {
            if linalg::rank(b_tilde, crate::spectral::RANK_TOL) == n {
                place_direct(a, b_tilde, &sorted)?
            } else {
                place_rank_one(a, b_tilde, &sorted)?
            }
        }
    };
    let placed = linalg::eigenvalues(&(a + b_tilde * &gain));
    let dist = spectrum_distance(&placed, &sorted);
    if dist > POLE_TOL {
        return Err(Error::SynthesisFailure(format!(
            "placed spectrum misses the requested poles by {dist:e}"
        )));
    }
    Ok(gain)
}

/// Solves `A* P + P A = -I` by vectorization and returns the Hermitian part.
pub fn solve_lyapunov(a_cl: &CMat) -> Result<CMat> {
    let n = a_cl.nrows();
    if !a_cl.is_square() || n == 0 {
        return Err(Error::InvalidArgument("Lyapunov equation needs a nonempty square matrix".into()));
    }
    let spectrum = linalg::eigenvalues(a_cl);
    if let Some(bad) = spectrum.iter().find(|z| z.re >= 0.0) {
        return Err(Error::InvalidArgument(format!("closed-loop matrix is not Hurwitz (eigenvalue {bad})")));
    }
    let id = CMat::identity(n, n);
    // vec(A* P) = (I ⊗ A*) vec P and vec(P A) = (Aᵀ ⊗ I) vec P, column-major
    let lhs = id.kronecker(&a_cl.adjoint()) + a_cl.transpose().kronecker(&id);
    let rhs = -CVec::from_column_slice(id.as_slice());
    let x = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SynthesisFailure("singular Lyapunov system".into()))?;
    let p = CMat::from_column_slice(n, n, x.as_slice());
    Ok((&p + p.adjoint()) * c(0.5))
}

/// Lyapunov data of a Hurwitz closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovData {
    pub p: CMat,
    pub lam_min: f64,
    pub lam_max: f64,
    pub residual: f64,
}

/// Predictor feedback for the first `N0` modes of a plant.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorDesign {
    delay: f64,
    n0: usize,
    alpha: f64,
    a: CMat,
    b: CMat,
    exp_da: CMat,
    gain: CMat,
    a_cl: CMat,
    poles: Vec<Complex64>,
    transition: TransitionSignal,
    lyapunov: Option<LyapunovData>,
}

impl PredictorDesign {
    /// Places the spectrum of `A + e^{-DA}BK` at `poles` and solves the
    /// closed-loop Lyapunov equation.
    pub fn synthesize(
        sys: &SpectralSystem,
        n0: usize,
        delay: f64,
        t0: f64,
        poles: &[Complex64],
        strategy: PlacementStrategy,
    ) -> Result<Self> {
        let design = Self::place(sys, n0, delay, t0, poles, strategy)?;
        if design.lyapunov.is_none() {
            return Err(Error::SynthesisFailure("closed loop is not Hurwitz".into()));
        }
        Ok(design)
    }

    /// Same placement as [`PredictorDesign::synthesize`], but a non-Hurwitz
    /// target spectrum is returned as a design without Lyapunov data.
    pub fn place(
        sys: &SpectralSystem,
        n0: usize,
        delay: f64,
        t0: f64,
        poles: &[Complex64],
        strategy: PlacementStrategy,
    ) -> Result<Self> {
        let (a, b, exp_da, alpha, transition) = Self::plant_blocks(sys, n0, delay, t0)?;
        let b_tilde = &exp_da * &b;
        let gain = place_poles_with(&a, &b_tilde, poles, strategy)?;
        Self::assemble(a, b, exp_da, gain, alpha, delay, n0, poles.to_vec(), transition)
    }

    /// Whether `A_cl` is Hurwitz, i.e. the Lyapunov equation was solved.
    pub fn is_hurwitz(&self) -> bool {
        self.lyapunov.is_some()
    }

    /// Design with a prescribed gain. The Lyapunov data is present only when
    /// the resulting closed loop is Hurwitz.
    pub fn with_gain(sys: &SpectralSystem, n0: usize, delay: f64, t0: f64, gain: CMat) -> Result<Self> {
        let (a, b, exp_da, alpha, transition) = Self::plant_blocks(sys, n0, delay, t0)?;
        if gain.shape() != (b.ncols(), n0) {
            return Err(Error::InvalidArgument(format!(
                "gain must be {}x{n0}, got {}x{}",
                b.ncols(),
                gain.nrows(),
                gain.ncols()
            )));
        }
        let a_cl = &a + &exp_da * &b * &gain;
        let poles = linalg::eigenvalues(&a_cl);
        Self::assemble(a, b, exp_da, gain, alpha, delay, n0, poles, transition)
    }

    fn plant_blocks(
        sys: &SpectralSystem,
        n0: usize,
        delay: f64,
        t0: f64,
    ) -> Result<(CMat, CMat, CMat, f64, TransitionSignal)> {
        if !(delay > 0.0 && delay.is_finite()) {
            return Err(Error::InvalidParameter(format!("delay D must be positive (got {delay})")));
        }
        let transition = TransitionSignal::new(t0)?;
        let alpha = check_truncation(sys, n0)?.alpha;
        let a = sys.truncated_generator(n0);
        let b = sys.truncated_input(n0);
        let exp_da = diagonal_exponential(&a, -delay);
        Ok((a, b, exp_da, alpha, transition))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        a: CMat,
        b: CMat,
        exp_da: CMat,
        gain: CMat,
        alpha: f64,
        delay: f64,
        n0: usize,
        poles: Vec<Complex64>,
        transition: TransitionSignal,
    ) -> Result<Self> {
        let a_cl = &a + &exp_da * &b * &gain;
        let lyapunov = match solve_lyapunov(&a_cl) {
            Ok(p) => {
                let residual = (a_cl.adjoint() * &p + &p * &a_cl + CMat::identity(n0, n0)).norm();
                let (lam_min, lam_max) = linalg::hermitian_extremes(&p);
                if !(lam_min > 0.0) {
                    return Err(Error::SynthesisFailure(format!(
                        "Lyapunov matrix is not positive definite (min eigenvalue {lam_min})"
                    )));
                }
                Some(LyapunovData { p, lam_min, lam_max, residual })
            }
            Err(Error::InvalidArgument(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self { delay, n0, alpha, a, b, exp_da, gain, a_cl, poles, transition, lyapunov })
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }
    pub fn n0(&self) -> usize {
        self.n0
    }
    /// Spectral gap of the discarded modes.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
    pub fn a(&self) -> &CMat {
        &self.a
    }
    pub fn b(&self) -> &CMat {
        &self.b
    }
    pub fn exp_da(&self) -> &CMat {
        &self.exp_da
    }
    pub fn gain(&self) -> &CMat {
        &self.gain
    }
    pub fn a_cl(&self) -> &CMat {
        &self.a_cl
    }
    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }
    pub fn transition(&self) -> TransitionSignal {
        self.transition
    }
    pub fn lyapunov(&self) -> Option<&LyapunovData> {
        self.lyapunov.as_ref()
    }

    pub fn require_lyapunov(&self) -> Result<&LyapunovData> {
        self.lyapunov
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("design has no Lyapunov matrix (closed loop not Hurwitz)".into()))
    }

    pub fn closed_loop_spectrum(&self) -> Vec<Complex64> {
        let mut ev = linalg::eigenvalues(&self.a_cl);
        linalg::sort_canonical(&mut ev);
        ev
    }

    /// `Σ_j w_j e^{(t - s_j - D)A} B u(s_j)` over the given nodes.
    fn kernel_sum<'a>(&self, t: f64, nodes: impl Iterator<Item = (f64, f64, &'a CVec)>) -> CVec {
        let mut acc = CVec::zeros(self.n0);
        for (s, w, u) in nodes {
            let bu = &self.b * u;
            let tau = t - s - self.delay;
            for i in 0..self.n0 {
                acc[i] += (self.a[(i, i)] * tau).exp() * bu[i] * w;
            }
        }
        acc
    }
}

/// `Z(t) = Y + ∫_{t-D}^t e^{(t-s-D)A} B u(s) ds`, trapezoid on the buffer grid.
pub fn artstein_state(design: &PredictorDesign, y: &CVec, history: &DelayBuffer, t: f64) -> Result<CVec> {
    if y.len() != design.n0() {
        return Err(Error::InvalidArgument(format!("Y must have {} entries", design.n0())));
    }
    let nodes = history.quadrature(t - design.delay(), t)?;
    Ok(y + design.kernel_sum(t, nodes.iter().map(|(s, w, u)| (*s, *w, u))))
}

/// `u = φ K Z`.
pub fn control_input(design: &PredictorDesign, phi: f64, z: &CVec) -> CVec {
    design.gain() * z * c(phi)
}

/// Trapezoid node of the Artstein integral ending at a grid time.
struct KernelNode {
    /// Grid index of the sample at or just before the node.
    k: usize,
    /// Position between samples `k` and `k + 1`.
    frac: f64,
    w: f64,
    /// `(t - s) / dt` for nodes on the grid.
    lag: Option<usize>,
    /// `t - s - D`, used off the grid.
    tau: f64,
}

fn kernel_nodes(t: f64, j: usize, delay: f64, dt: f64) -> Vec<KernelNode> {
    trapezoid_nodes(t - delay, t, dt)
        .into_iter()
        .map(|(s, w)| {
            let x = s / dt;
            let nearest = x.round();
            if (x - nearest).abs() < 1e-9 {
                let k = nearest as usize;
                KernelNode { k, frac: 0.0, w, lag: Some(j - k), tau: t - s - delay }
            } else {
                KernelNode { k: x.floor() as usize, frac: x - x.floor(), w, lag: None, tau: t - s - delay }
            }
        })
        .collect()
}

/// Solves `v = φ K Y + T_D v` on the grid `t_j = j dt` by Picard iteration,
/// where `(T_D f)(t) = φ(t) K ∫_{max(t-D,0)}^t e^{(t-s-D)A} B f(s) ds`.
///
/// The equation is causal, so it is solved over consecutive windows of
/// length `D`, each by Picard iteration with the earlier windows frozen. A
/// window is done when its sup-norm increment falls below `tol`; the cap
/// `max_iter` applies per window.
pub fn invert_artstein<F>(
    design: &PredictorDesign,
    y_path: &[CVec],
    dt: f64,
    phi: F,
    tol: f64,
    exec: Exec,
) -> Result<Vec<CVec>>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    invert_artstein_capped(design, y_path, dt, phi, tol, PICARD_MAX_ITER, exec)
}

pub fn invert_artstein_capped<F>(
    design: &PredictorDesign,
    y_path: &[CVec],
    dt: f64,
    phi: F,
    tol: f64,
    max_iter: usize,
    exec: Exec,
) -> Result<Vec<CVec>>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive (got {tol})")));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("grid step must be positive (got {dt})")));
    }
    if y_path.iter().any(|y| y.len() != design.n0()) {
        return Err(Error::InvalidArgument(format!("Y samples must have {} entries", design.n0())));
    }
    let n = y_path.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let n0 = design.n0();
    let delay = design.delay();
    let lambdas: Vec<Complex64> = (0..n0).map(|i| design.a()[(i, i)]).collect();
    let max_lag = (delay / dt).ceil() as usize + 1;
    let lag_table: Vec<Vec<Complex64>> = (0..=max_lag)
        .map(|l| lambdas.iter().map(|lam| (lam * (l as f64 * dt - delay)).exp()).collect())
        .collect();
    let weights: Vec<f64> = (0..n).map(|j| phi(j as f64 * dt)).collect();
    let nodes: Vec<Vec<KernelNode>> = exec.map_range(n, |j| kernel_nodes(j as f64 * dt, j, delay, dt));
    let forced: Vec<CVec> = (0..n).map(|j| control_input(design, weights[j], &y_path[j])).collect();
    let mut v = forced.clone();
    let mut bv: Vec<CVec> = v.iter().map(|x| design.b() * x).collect();
    let block = ((delay / dt).round() as usize).max(1);
    let mut lo = 0;
    while lo < n {
        let hi = (lo + block).min(n);
        let mut increment = f64::INFINITY;
        for _ in 0..max_iter {
            let next: Vec<CVec> = exec.map_range(hi - lo, |r| {
                let j = lo + r;
                if weights[j] == 0.0 {
                    return forced[j].clone();
                }
                let mut acc = CVec::zeros(n0);
                for node in &nodes[j] {
                    for i in 0..n0 {
                        let value = if node.frac == 0.0 {
                            bv[node.k][i]
                        } else {
                            bv[node.k][i] * (1.0 - node.frac) + bv[node.k + 1][i] * node.frac
                        };
                        let kernel = match node.lag {
                            Some(l) => lag_table[l][i],
                            None => (lambdas[i] * node.tau).exp(),
                        };
                        acc[i] += kernel * value * node.w;
                    }
                }
                &forced[j] + control_input(design, weights[j], &acc)
            });
            increment = next
                .iter()
                .zip(&v[lo..hi])
                .map(|(a, b)| linalg::max_abs(&(a - b)))
                .fold(0.0, f64::max);
            for (r, x) in next.into_iter().enumerate() {
                bv[lo + r] = design.b() * &x;
                v[lo + r] = x;
            }
            if increment < tol {
                break;
            }
        }
        if !(increment < tol) {
            return Err(Error::ConvergenceFailure { iterations: max_iter, increment });
        }
        lo = hi;
    }
    Ok(v)
}

/// Default Picard tolerance `1e-10 (1 + ‖φ K Y‖_∞)`.
pub fn default_picard_tol<F: Fn(f64) -> f64>(design: &PredictorDesign, y_path: &[CVec], dt: f64, phi: F) -> f64 {
    let sup = y_path
        .iter()
        .enumerate()
        .map(|(j, y)| linalg::max_abs(&control_input(design, phi(j as f64 * dt), y)))
        .fold(0.0, f64::max);
    1e-10 * (1.0 + sup)
}

/// Real 2x2 input matrix as complex, for small tests and toy plants.
pub fn real_input(rows: usize, cols: usize, data: &[f64]) -> CMat {
    linalg::real_matrix(&DMatrix::from_row_slice(rows, cols, data))
}
