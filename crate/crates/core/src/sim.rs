//! Modal simulation of the delayed closed loop, optionally interconnected
//! with a scalar ODE.
//!
//! The state is the first `N_modes` coefficients `c_n = <X, ψ_n>` and the
//! ODE state `x`:
//!
//! ```text
//! ċ_n = λ_n c_n + Σ_k b_{n,k} u_k(t - D) + <f2(x, X, v), ψ_n>
//! ẋ   = f1(x, X, v)
//! ```
//!
//! integrated by classical RK4 on a fixed grid. The control `u(t) = φ(t) K Z(t)`
//! is stored in a [`DelayBuffer`] and read back with linear interpolation.

use num_complex::Complex64;

use crate::buffer::{trapezoid_nodes, DelayBuffer};
use crate::certificates::{evaluate_v, CertificateBundle, CouplingConstants};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::format;
use crate::linalg::{c, CMat, CVec};
use crate::predictor::{artstein_state, PredictorDesign};
use crate::spectral::{project_profile, simpson, SpectralSystem, DEFAULT_QUADRATURE_INTERVALS, REAL_EXPORT_TOL};

/// Simpson intervals for the Gram matrix of the θ profiles.
const GRAM_INTERVALS: usize = 1 << 16;

/// Scalar parameters of the two coupling maps
/// `f1(x, X, v) = -a1 x + (b1/L)<η1, X> + c1 v` and
/// `f2(x, X, v) = a2 x θ1 + b2 arctan((d2/L)<η2, X>) θ2 + c2 v θ3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
    pub d2: f64,
}

impl CouplingParams {
    /// Same ODE, with `f2 ≡ 0`.
    pub fn decoupled(self) -> Self {
        Self { a2: 0.0, b2: 0.0, c2: 0.0, ..self }
    }

    pub fn constants(&self, length: f64) -> Result<CouplingConstants> {
        CouplingConstants::scalar_loop(self.a1, self.b1, self.c1, self.a2, self.b2, self.c2, self.d2, length)
    }

    /// `2|b1 a2|/a1 + |b2 d2|`, which equals `L (D1 C̃1 + D2)`.
    pub fn threshold_sum(&self) -> f64 {
        2.0 * (self.b1 * self.a2).abs() / self.a1 + (self.b2 * self.d2).abs()
    }
}

/// A profile `ξ ↦ value` on `(0, L)`.
pub type Profile<'a> = &'a (dyn Fn(f64) -> f64 + Sync + Send);

/// Coupling parameters together with the profiles `η1, η2, θ1, θ2, θ3`
/// projected onto the modal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingFields {
    pub params: CouplingParams,
    length: f64,
    eta1: CVec,
    eta2: CVec,
    theta: [CVec; 3],
    theta_gram: [[f64; 3]; 3],
    profile_norms: [f64; 5],
}

impl CouplingFields {
    /// Projects the profiles `[η1, η2, θ1, θ2, θ3]` onto `n_modes` modes.
    pub fn from_profiles(
        sys: &SpectralSystem,
        params: CouplingParams,
        n_modes: usize,
        profiles: [Profile<'_>; 5],
        exec: Exec,
    ) -> Result<Self> {
        if !(params.a1 > 0.0) {
            return Err(Error::InvalidParameter(format!("a1 must be positive (got {})", params.a1)));
        }
        let length = sys
            .basis()
            .ok_or_else(|| Error::InvalidArgument("coupling fields need a spatial basis".into()))?
            .length();
        let coeffs: Vec<CVec> = profiles
            .iter()
            .map(|f| project_profile(sys, f, n_modes, DEFAULT_QUADRATURE_INTERVALS, exec))
            .collect::<Result<_>>()?;
        let mut gram = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let (fi, fj) = (profiles[2 + i], profiles[2 + j]);
                let g = simpson(|xi| fi(xi) * fj(xi), 0.0, length, GRAM_INTERVALS)?;
                gram[i][j] = g;
                gram[j][i] = g;
            }
        }
        let mut profile_norms = [0.0; 5];
        for (k, f) in profiles.iter().enumerate() {
            profile_norms[k] = simpson(|xi| f(xi) * f(xi), 0.0, length, GRAM_INTERVALS)?.sqrt();
        }
        let mut it = coeffs.into_iter();
        let eta1 = it.next().unwrap();
        let eta2 = it.next().unwrap();
        let theta = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
        Ok(Self { params, length, eta1, eta2, theta, theta_gram: gram, profile_norms })
    }

    /// Fields with all profiles zero and `ẋ = -x`, for plants without a
    /// spatial basis or runs without an interconnection.
    pub fn inactive(n_modes: usize, length: f64) -> Self {
        let zero = CVec::zeros(n_modes);
        Self {
            params: CouplingParams { a1: 1.0, b1: 0.0, c1: 0.0, a2: 0.0, b2: 0.0, c2: 0.0, d2: 0.0 },
            length,
            eta1: zero.clone(),
            eta2: zero.clone(),
            theta: [zero.clone(), zero.clone(), zero],
            theta_gram: [[0.0; 3]; 3],
            profile_norms: [0.0; 5],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.eta1.len()
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    /// `‖η1‖, ‖η2‖, ‖θ1‖, ‖θ2‖, ‖θ3‖` by quadrature.
    pub fn profile_norms(&self) -> [f64; 5] {
        self.profile_norms
    }
    pub fn eta1(&self) -> &CVec {
        &self.eta1
    }
    pub fn eta2(&self) -> &CVec {
        &self.eta2
    }
    pub fn theta(&self, i: usize) -> &CVec {
        &self.theta[i]
    }

    /// Same profiles with other scalar parameters.
    pub fn with_params(&self, params: CouplingParams) -> Self {
        Self { params, ..self.clone() }
    }
}

fn inner(profile: &CVec, x: &[Complex64]) -> f64 {
    profile.iter().zip(x).map(|(p, c)| (p.conj() * c).re).sum()
}

pub fn coupling_f1(fields: &CouplingFields, x: f64, x_coeffs: &[Complex64], v: f64) -> f64 {
    let p = &fields.params;
    -p.a1 * x + p.b1 / fields.length * inner(&fields.eta1, x_coeffs) + p.c1 * v
}

fn f2_weights(fields: &CouplingFields, x: f64, x_coeffs: &[Complex64], v: f64) -> [f64; 3] {
    let p = &fields.params;
    let s = p.d2 / fields.length * inner(&fields.eta2, x_coeffs);
    [p.a2 * x, p.b2 * s.atan(), p.c2 * v]
}

/// Modal coefficients `d_n = <f2(x, X, v), ψ_n>`.
pub fn coupling_f2(fields: &CouplingFields, x: f64, x_coeffs: &[Complex64], v: f64) -> CVec {
    let w = f2_weights(fields, x, x_coeffs, v);
    &fields.theta[0] * c(w[0]) + &fields.theta[1] * c(w[1]) + &fields.theta[2] * c(w[2])
}

/// `‖f2(x, X, v)‖_H` from the Gram matrix of the θ profiles (not truncated).
pub fn disturbance_norm(fields: &CouplingFields, x: f64, x_coeffs: &[Complex64], v: f64) -> f64 {
    let w = f2_weights(fields, x, x_coeffs, v);
    let g = &fields.theta_gram;
    let q: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| w[i] * g[i][j] * w[j]).sum();
    q.max(0.0).sqrt()
}

/// External input `v(t)` of the ODE and of `f2`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Disturbance {
    #[default]
    None,
    /// `v(t) = sin(2t) sin(5t)`.
    CaseStudy,
    /// Samples at `k * dt`, linearly interpolated and held after the last one.
    Samples { dt: f64, values: Vec<f64> },
}

impl Disturbance {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Disturbance::None => 0.0,
            Disturbance::CaseStudy => (2.0 * t).sin() * (5.0 * t).sin(),
            Disturbance::Samples { dt, values } => {
                if values.is_empty() || t <= 0.0 {
                    return values.first().copied().unwrap_or(0.0);
                }
                let s = t / dt;
                let i = s.floor() as usize;
                if i + 1 >= values.len() {
                    return *values.last().unwrap();
                }
                let frac = s - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub n_modes: usize,
    pub record_stride: usize,
    pub disturbance: Disturbance,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 10.0, n_modes: 10, record_stride: 1, disturbance: Disturbance::None }
    }
}

impl SimConfig {
    pub fn validate(&self, sys: &SpectralSystem, design: &PredictorDesign) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive (got {})", self.dt)));
        }
        if !(self.dt < design.delay()) {
            return Err(Error::InvalidParameter(format!(
                "dt = {} must be smaller than the delay D = {}",
                self.dt,
                design.delay()
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("T_end must be nonnegative (got {})", self.t_end)));
        }
        if self.n_modes < design.n0() || self.n_modes > sys.n_max() {
            return Err(Error::InvalidParameter(format!(
                "N_modes = {} must lie in {}..={}",
                self.n_modes,
                design.n0(),
                sys.n_max()
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        if self.t_end <= 0.0 {
            0
        } else {
            (self.t_end / self.dt - 1e-9).ceil() as usize
        }
    }
}

/// One recorded time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub coeffs: Vec<Complex64>,
    pub norm_x: f64,
    pub u: CVec,
    pub norm_d: f64,
    /// Lyapunov functional, NaN when no certificate was supplied.
    pub v: f64,
    pub z: CVec,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// First sample at or after `t`.
    pub fn at_or_after(&self, t: f64) -> Option<&Sample> {
        self.samples.iter().find(|s| s.t >= t - 1e-9)
    }

    pub fn max_norm_d(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_d).fold(0.0, f64::max)
    }

    pub fn max_control_norm(&self) -> f64 {
        self.samples.iter().map(|s| s.u.norm()).fold(0.0, f64::max)
    }

    /// CSV with header `t,x,normX,V,u1..um,normd,c1..cN`. An empty trajectory
    /// gives the header for `m` inputs and `n_modes` modes.
    pub fn to_csv(&self, m: usize, n_modes: usize) -> Result<String> {
        let mut out = String::from("t,x,normX,V");
        for i in 1..=m {
            out.push_str(&format!(",u{i}"));
        }
        out.push_str(",normd");
        for n in 1..=n_modes {
            out.push_str(&format!(",c{n}"));
        }
        out.push('\n');
        let g = |v: f64| format::sig(v, 12);
        for s in &self.samples {
            let reals = s.u.iter().chain(s.coeffs.iter());
            if let Some(z) = reals.clone().find(|z| z.im.abs() > REAL_EXPORT_TOL * z.norm().max(1.0)) {
                return Err(Error::InvalidArgument(format!("complex value {z} at t = {} cannot be exported", s.t)));
            }
            let mut row = vec![g(s.t), g(s.x), g(s.norm_x), g(s.v)];
            row.extend(s.u.iter().map(|z| g(z.re)));
            row.push(g(s.norm_d));
            row.extend(s.coeffs.iter().map(|z| g(z.re)));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Live state of one run.
struct Runner<'a> {
    config: &'a SimConfig,
    sys: SpectralSystem,
    design: &'a PredictorDesign,
    bundle: Option<&'a CertificateBundle>,
    fields: &'a CouplingFields,
    u_hist: DelayBuffer,
    z_hist: DelayBuffer,
    e_b: CMat,
}

impl Runner<'_> {
    fn rhs(&self, t: f64, coeffs: &CVec, x: f64) -> Result<(CVec, f64)> {
        let u_d = self.u_hist.at(t - self.design.delay())?;
        let v = self.config.disturbance.value(t);
        let d = coupling_f2(self.fields, x, coeffs.as_slice(), v);
        let bu = self.sys.input_coeffs() * &u_d;
        let dc = CVec::from_fn(coeffs.len(), |n, _| self.sys.eigenvalues()[n] * coeffs[n] + bu[n] + d[n]);
        let dx = coupling_f1(self.fields, x, coeffs.as_slice(), v);
        Ok((dc, dx))
    }

    /// Appends `u(t)` and `Z(t)`. The trapezoid weight `w` of the node at `t`
    /// makes `u = φ K Z` implicit in `u(t)`:
    /// `(I - φ w K e^{-DA} B) u = φ K Z_known`.
    fn close_loop(&mut self, t: f64, coeffs: &CVec) -> Result<(CVec, CVec)> {
        let design = self.design;
        let n0 = design.n0();
        let m = design.input_dim();
        self.u_hist.push(CVec::zeros(m))?;
        let y = coeffs.rows(0, n0).into_owned();
        let z_known = artstein_state(design, &y, &self.u_hist, t)?;
        let w_end = trapezoid_nodes(t - design.delay(), t, self.config.dt)
            .last()
            .map(|n| n.1)
            .unwrap_or(0.0);
        let phi = design.transition().phi(t);
        let rhs = design.gain() * &z_known * c(phi);
        let u = if phi == 0.0 {
            CVec::zeros(m)
        } else {
            let lhs = CMat::identity(m, m) - design.gain() * &self.e_b * c(phi * w_end);
            lhs.lu()
                .solve(&rhs)
                .ok_or_else(|| Error::SynthesisFailure("implicit control update is singular".into()))?
        };
        self.u_hist.set_latest(u.clone())?;
        let z = z_known + &self.e_b * &u * c(w_end);
        self.z_hist.push(z.clone())?;
        Ok((u, z))
    }

    fn record(&self, t: f64, x: f64, coeffs: &CVec, u: &CVec, z: &CVec) -> Result<Sample> {
        let v_t = self.config.disturbance.value(t);
        let u_d = self.u_hist.at(t - self.design.delay())?;
        let v = match self.bundle {
            Some(b) => evaluate_v(&self.sys, self.design, b, t, &self.z_hist, coeffs.as_slice(), &u_d)?,
            None => f64::NAN,
        };
        Ok(Sample {
            t,
            x,
            coeffs: coeffs.as_slice().to_vec(),
            norm_x: state_norm(&self.sys, coeffs, &u_d),
            u: u.clone(),
            norm_d: disturbance_norm(self.fields, x, coeffs.as_slice(), v_t),
            v,
            z: z.clone(),
        })
    }
}

/// `‖X‖_H` of the state whose first `N` coefficients are `coeffs` and whose
/// remaining coefficients follow the boundary lifting, `<X, ψ_n> = <B u_D, ψ_n>`
/// for `n > N`:
/// `‖X‖² = Σ_{n≤N} |c_n|² + ‖B u_D‖² - Σ_{n≤N} |<B u_D, ψ_n>|²` (orthonormal basis).
pub fn state_norm(sys: &SpectralSystem, coeffs: &CVec, u_d: &CVec) -> f64 {
    let n = coeffs.len();
    let lift = sys.lifting_coeffs().rows(0, n) * u_d;
    let full = (u_d.adjoint() * sys.lifting_gram() * u_d)[(0, 0)].re;
    let tail = (full - lift.norm_squared()).max(0.0);
    (coeffs.norm_squared() + tail).sqrt()
}

/// One classical RK4 step of `(ċ, ẋ) = rhs(t, c, x)`.
pub fn rk4_step<F>(rhs: F, t: f64, coeffs: &CVec, x: f64, dt: f64) -> Result<(CVec, f64)>
where
    F: Fn(f64, &CVec, f64) -> Result<(CVec, f64)>,
{
    let half = c(0.5 * dt);
    let (k1c, k1x) = rhs(t, coeffs, x)?;
    let (k2c, k2x) = rhs(t + 0.5 * dt, &(coeffs + &k1c * half), x + 0.5 * dt * k1x)?;
    let (k3c, k3x) = rhs(t + 0.5 * dt, &(coeffs + &k2c * half), x + 0.5 * dt * k2x)?;
    let (k4c, k4x) = rhs(t + dt, &(coeffs + &k3c * c(dt)), x + dt * k3x)?;
    let next = coeffs + (k1c + k2c * c(2.0) + k3c * c(2.0) + k4c) * c(dt / 6.0);
    Ok((next, x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)))
}

/// Runs the closed loop from `(x0, X0)` up to `config.t_end`.
///
/// `‖X‖_H` is reported by [`state_norm`]. `V` is recorded when `bundle` is
/// given.
pub fn simulate(
    config: &SimConfig,
    sys: &SpectralSystem,
    design: &PredictorDesign,
    bundle: Option<&CertificateBundle>,
    fields: &CouplingFields,
    x0: f64,
    x0_coeffs: &CVec,
) -> Result<Trajectory> {
    config.validate(sys, design)?;
    let n = config.n_modes;
    if x0_coeffs.len() != n || fields.n_modes() < n {
        return Err(Error::InvalidArgument(format!(
            "initial data and coupling profiles must cover {n} modes"
        )));
    }
    if config.t_end == 0.0 {
        return Ok(Trajectory::default());
    }
    let fields_n;
    let fields = if fields.n_modes() == n {
        fields
    } else {
        fields_n = CouplingFields {
            eta1: fields.eta1.rows(0, n).into_owned(),
            eta2: fields.eta2.rows(0, n).into_owned(),
            theta: [0, 1, 2].map(|i| fields.theta[i].rows(0, n).into_owned()),
            ..fields.clone()
        };
        &fields_n
    };
    let delay = design.delay();
    let mut runner = Runner {
        config,
        sys: sys.with_modes(n)?,
        design,
        bundle,
        fields,
        u_hist: DelayBuffer::new(config.dt, delay, design.input_dim())?,
        z_hist: DelayBuffer::new(config.dt, delay, design.n0())?,
        e_b: design.exp_da() * design.b(),
    };

    let dt = config.dt;
    let steps = config.steps();
    let mut coeffs = x0_coeffs.clone();
    let mut x = x0;
    let mut samples = Vec::with_capacity(steps / config.record_stride + 1);

    let (u, z) = runner.close_loop(0.0, &coeffs)?;
    samples.push(runner.record(0.0, x, &coeffs, &u, &z)?);
    for k in 0..steps {
        let t = k as f64 * dt;
        (coeffs, x) = rk4_step(|t, c, x| runner.rhs(t, c, x), t, &coeffs, x, dt)?;

        let t_next = (k + 1) as f64 * dt;
        if !x.is_finite() || coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::SimulationDiverged { t: t_next });
        }
        let (u, z) = runner.close_loop(t_next, &coeffs)?;
        if (k + 1) % config.record_stride == 0 || k + 1 == steps {
            samples.push(runner.record(t_next, x, &coeffs, &u, &z)?);
        }
    }
    Ok(Trajectory { samples })
}

/// Independent inputs of one run, for [`simulate_batch`].
#[derive(Debug, Clone)]
pub struct Scenario<'a> {
    pub config: SimConfig,
    pub sys: &'a SpectralSystem,
    pub design: &'a PredictorDesign,
    pub bundle: Option<&'a CertificateBundle>,
    pub fields: &'a CouplingFields,
    pub x0: f64,
    pub x0_coeffs: CVec,
}

/// Runs independent scenarios, in parallel under [`Exec::Parallel`].
pub fn simulate_batch(scenarios: &[Scenario<'_>], exec: Exec) -> Vec<Result<Trajectory>> {
    exec.map_slice(scenarios, |s| {
        simulate(&s.config, s.sys, s.design, s.bundle, s.fields, s.x0, &s.x0_coeffs)
    })
}

/// Least-squares fit `y ≈ A e^{-rate t}` through `(t, ln y)`. Nonpositive
/// values are skipped. Returns `(rate, A)`; growth gives a negative rate.
pub fn fit_exponential(ts: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(ys)
        .filter(|(_, y)| **y > 0.0 && y.is_finite())
        .map(|(t, y)| (*t, y.ln()))
        .collect();
    const NEEDED: usize = 10;
    if pts.len() < NEEDED {
        return Err(Error::InsufficientData { found: pts.len(), needed: NEEDED });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData { found: 1, needed: NEEDED });
    }
    let slope = sxy / sxx;
    Ok((-slope, (my - slope * mt).exp()))
}

/// Exponential fit of `‖X(t)‖_H` on `[t_start, T_end]`.
pub fn decay_fit(traj: &Trajectory, t_start: f64) -> Result<(f64, f64)> {
    let (ts, ys): (Vec<f64>, Vec<f64>) = traj
        .samples
        .iter()
        .filter(|s| s.t >= t_start - 1e-9)
        .map(|s| (s.t, s.norm_x))
        .unzip();
    fit_exponential(&ts, &ys)
}

/// Outcome of [`iss_envelope_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCheck {
    pub passed: bool,
    /// Largest `V(t) / bound(t)` over the checked samples.
    pub worst_ratio: f64,
    pub checked: usize,
}

/// Slack allowed on envelope checks for truncation and integration error.
pub const ENVELOPE_SLACK: f64 = 1.05;

/// Checks `V(t) ≤ e^{-2κ0(t - D - t0)} V(D + t0) + (C6 / 2κ0) d_sup²` for all
/// recorded `t ≥ D + t0`, with [`ENVELOPE_SLACK`].
pub fn iss_envelope_check(
    traj: &Trajectory,
    bundle: &CertificateBundle,
    design: &PredictorDesign,
    d_sup: f64,
) -> EnvelopeCheck {
    let t_on = design.delay() + design.transition().t0();
    let Some(start) = traj.at_or_after(t_on) else {
        return EnvelopeCheck { passed: true, worst_ratio: 0.0, checked: 0 };
    };
    let (t_ref, v_ref) = (start.t, start.v);
    let floor = bundle.c6 / (2.0 * bundle.kappa0) * d_sup * d_sup;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut passed = true;
    for s in traj.samples.iter().filter(|s| s.t >= t_ref) {
        let bound = (-2.0 * bundle.kappa0 * (s.t - t_ref)).exp() * v_ref + floor;
        let ratio = if bound > 0.0 {
            s.v / bound
        } else if s.v > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(ratio);
        passed &= s.v <= ENVELOPE_SLACK * bound;
        checked += 1;
    }
    EnvelopeCheck { passed, worst_ratio: worst, checked }
}

/// `η1 = η2 = θ2 = √(6ξ(L - ξ))/L^{3/2}`, `θ1 = √(2ξ)/L`, `θ3 = √(2(L - ξ))/L`.
pub fn unit_profiles(length: f64) -> [Box<dyn Fn(f64) -> f64 + Sync + Send>; 5] {
    let l = length;
    let bump = move |xi: f64| (6.0 * xi * (l - xi)).max(0.0).sqrt() / l.powf(1.5);
    [
        Box::new(bump),
        Box::new(bump),
        Box::new(move |xi: f64| (2.0 * xi).max(0.0).sqrt() / l),
        Box::new(bump),
        Box::new(move |xi: f64| (2.0 * (l - xi)).max(0.0).sqrt() / l),
    ]
}

/// Cubic `X0(ξ) = -5 ξ (L/2 - ξ)(L - ξ)`.
pub fn cubic_initial_profile(length: f64) -> impl Fn(f64) -> f64 + Sync + Send {
    move |xi| -5.0 * xi * (length / 2.0 - xi) * (length - xi)
}
