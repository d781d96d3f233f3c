use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use num_complex::Complex64;

use sdc_core::certificates::{
    compute_constants, optimize_parameters, small_gain_margin, CertificateBundle, SearchConfig,
};
use sdc_core::format::sig;
use sdc_core::linalg::{self, CMat, CVec};
use sdc_core::predictor::{spectrum_distance, PlacementStrategy, PredictorDesign};
use sdc_core::sim::{
    cubic_initial_profile, decay_fit, iss_envelope_check, simulate as run_simulation, unit_profiles,
    CouplingFields, Disturbance, SimConfig, Trajectory,
};
use sdc_core::spectral::{
    build_heat_system, check_kalman, check_truncation, project_profile, LiftingData, SpectralSystem,
    TruncationSpec, DEFAULT_QUADRATURE_INTERVALS,
};
use sdc_core::{Error, Exec};

use crate::config::{ConfigError, ControlSpec, DisturbanceKind, InitialState, PlantSpec, RunConfig};

/// A failed command: process exit code plus the message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::new(1, format!("config error: {e}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::AssumptionViolated(_) => 2,
            Error::SynthesisFailure(_) | Error::ConvergenceFailure { .. } => 3,
            Error::InvalidCertificateParameters(_) | Error::InfeasibleCertificate(_) => 4,
            Error::SimulationDiverged { .. } => 5,
            _ => 1,
        };
        Self::new(code, e.to_string())
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

#[derive(Debug, Clone, Copy, Default)]
pub struct SimFlags {
    pub no_disturbance: bool,
    pub open_loop: bool,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Outcome<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Failure::new(1, format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::new(1, format!("cannot write {}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn num(x: f64) -> String {
    sig(x, 12)
}

fn complex(z: Complex64) -> String {
    if z.im.abs() <= 1e-12 * z.norm().max(1.0) {
        num(z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", num(z.re), num(-z.im))
    } else {
        format!("{}+{}i", num(z.re), num(z.im))
    }
}

fn complex_list(zs: &[Complex64]) -> String {
    zs.iter().map(|z| complex(*z)).collect::<Vec<_>>().join(", ")
}

fn matrix_rows(out: &mut String, name: &str, m: &CMat) {
    for i in 0..m.nrows() {
        let row: Vec<Complex64> = m.row(i).iter().copied().collect();
        let _ = writeln!(out, "{name}_row{} = {}", i + 1, complex_list(&row));
    }
}

/// The `[control]` section, with one pole per retained mode.
fn control(cfg: &RunConfig) -> Outcome<&ControlSpec> {
    let ctl = cfg.control.as_ref().ok_or_else(|| ConfigError("missing section [control]".into()))?;
    if ctl.poles.len() != cfg.n0 {
        let msg = format!("[control] poles: expected N0 = {} poles, got {}", cfg.n0, ctl.poles.len());
        return Err(ConfigError(msg).into());
    }
    Ok(ctl)
}

pub fn build_system(cfg: &RunConfig) -> Outcome<SpectralSystem> {
    match &cfg.plant {
        PlantSpec::Heat { a, c, length, n_max } => Ok(build_heat_system(*a, *c, *length, *n_max)?),
        PlantSpec::Diagonal { eigenvalues, inputs, b } => {
            let n = eigenvalues.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| eigenvalues[j].re.total_cmp(&eigenvalues[i].re));
            let lambdas = order.iter().map(|&i| eigenvalues[i]).collect();
            let b = CMat::from_fn(n, *inputs, |r, k| b[order[r] * inputs + k]);
            let lifting = LiftingData {
                coeffs: CMat::zeros(n, *inputs),
                norms: vec![0.0; *inputs],
                generator_norms: vec![0.0; *inputs],
                gram: CMat::zeros(*inputs, *inputs),
            };
            Ok(SpectralSystem::new(lambdas, b, lifting, 1.0, 1.0, 1.0, None)?)
        }
    }
}

/// Checks the truncation and controllability assumptions.
pub fn validate(cfg: &RunConfig) -> Outcome<(SpectralSystem, String)> {
    let sys = build_system(cfg)?;
    let mut out = String::new();
    let _ = writeln!(out, "eigenvalues = {}", complex_list(sys.eigenvalues()));
    let _ = writeln!(out, "N0 = {}", cfg.n0);
    let spec = match check_truncation(&sys, cfg.n0) {
        Ok(spec) => spec,
        Err(e) => {
            print!("{out}");
            return Err(e.into());
        }
    };
    let kalman = check_kalman(&sys, cfg.n0);
    let _ = writeln!(out, "alpha = {}", num(spec.alpha));
    let _ = writeln!(out, "kalman = {kalman}");
    if !kalman {
        print!("{out}");
        return Err(Failure::new(2, "assumption violated: truncated pair (A, B) fails the Kalman rank condition"));
    }
    Ok((sys, out))
}

/// Places the closed-loop spectrum; a non-Hurwitz target still yields a report.
pub fn design(cfg: &RunConfig) -> Outcome<(SpectralSystem, PredictorDesign, String)> {
    let sys = build_system(cfg)?;
    let TruncationSpec { alpha, .. } = check_truncation(&sys, cfg.n0)?;
    let ctl = control(cfg)?;
    let design = PredictorDesign::place(&sys, cfg.n0, ctl.delay, ctl.t0, &ctl.poles, PlacementStrategy::Auto)?;
    let spectrum = design.closed_loop_spectrum();

    let mut out = String::new();
    let _ = writeln!(out, "N0 = {}", cfg.n0);
    let _ = writeln!(out, "alpha = {}", num(alpha));
    let _ = writeln!(out, "D = {}", num(ctl.delay));
    let _ = writeln!(out, "t0 = {}", num(ctl.t0));
    let _ = writeln!(out, "poles = {}", complex_list(&ctl.poles));
    let _ = writeln!(out, "spectrum = {}", complex_list(&spectrum));
    let _ = writeln!(out, "spectrum_error = {}", num(spectrum_distance(&spectrum, &ctl.poles)));
    let _ = writeln!(out, "hurwitz = {}", design.is_hurwitz());
    matrix_rows(&mut out, "K", design.gain());
    matrix_rows(&mut out, "A_cl", design.a_cl());
    if let Some(lyap) = design.lyapunov() {
        matrix_rows(&mut out, "P", &lyap.p);
        let _ = writeln!(out, "lambda_min_P = {}", num(lyap.lam_min));
        let _ = writeln!(out, "lambda_max_P = {}", num(lyap.lam_max));
        let _ = writeln!(out, "lyapunov_residual = {}", num(lyap.residual));
    }
    Ok((sys, design, out))
}

/// Certificate bundle from the overrides, or from the optimizer.
fn bundle_for(cfg: &RunConfig, sys: &SpectralSystem, design: &PredictorDesign) -> Result<CertificateBundle, Error> {
    match cfg.certificate {
        Some([beta, gamma1, gamma2]) => {
            debug!("using certificate overrides beta = {beta}, gamma1 = {gamma1}, gamma2 = {gamma2}");
            compute_constants(sys, design, beta, gamma1, gamma2)
        }
        None => {
            debug!("optimizing certificate parameters");
            optimize_parameters(sys, design, &SearchConfig::default())
        }
    }
}

fn margin_for(cfg: &RunConfig, sys: &SpectralSystem, bundle: &CertificateBundle) -> Outcome<Option<f64>> {
    match &cfg.coupling {
        Some(c) => Ok(Some(small_gain_margin(bundle, &c.params.constants(sys.domain_length())?))),
        None => Ok(None),
    }
}

pub struct Certified {
    pub margin: Option<f64>,
    pub report: String,
}

pub fn certify(cfg: &RunConfig) -> Outcome<Certified> {
    let (sys, design, _) = design(cfg)?;
    if !design.is_hurwitz() {
        return Err(Failure::new(3, "synthesis failure: closed loop is not Hurwitz"));
    }
    let bundle = bundle_for(cfg, &sys, &design)?;
    let margin = margin_for(cfg, &sys, &bundle)?;
    let report = bundle.report(margin);
    Ok(Certified { margin, report })
}

pub struct SimOutput {
    pub csv: String,
    pub summary: String,
}

fn initial_coeffs(cfg: &RunConfig, sys: &SpectralSystem, n_modes: usize) -> Outcome<CVec> {
    Ok(match &cfg.simulation.initial {
        InitialState::Zero => CVec::zeros(n_modes),
        InitialState::Coeffs(v) => linalg::real_vector(v),
        InitialState::Cubic => project_profile(
            sys,
            cubic_initial_profile(sys.domain_length()),
            n_modes,
            DEFAULT_QUADRATURE_INTERVALS,
            Exec::Parallel,
        )?,
    })
}

fn coupling_fields(cfg: &RunConfig, sys: &SpectralSystem, n_modes: usize) -> Outcome<CouplingFields> {
    match &cfg.coupling {
        Some(c) if sys.basis().is_some() => {
            let p = unit_profiles(sys.domain_length());
            Ok(CouplingFields::from_profiles(
                sys,
                c.params,
                n_modes,
                [&*p[0], &*p[1], &*p[2], &*p[3], &*p[4]],
                Exec::Parallel,
            )?)
        }
        _ => Ok(CouplingFields::inactive(n_modes, sys.domain_length())),
    }
}

/// Runs the closed loop (or the open loop with `K = 0`) and summarizes it.
pub fn simulate(cfg: &RunConfig, flags: SimFlags) -> Outcome<SimOutput> {
    let (sys, design, bundle) = if flags.open_loop {
        let sys = build_system(cfg)?;
        check_truncation(&sys, cfg.n0)?;
        let ctl = control(cfg)?;
        let gain = CMat::zeros(sys.input_dim(), cfg.n0);
        let design = PredictorDesign::with_gain(&sys, cfg.n0, ctl.delay, ctl.t0, gain)?;
        (sys, design, None)
    } else {
        let (sys, design, _) = design(cfg)?;
        if !design.is_hurwitz() {
            return Err(Failure::new(3, "synthesis failure: closed loop is not Hurwitz"));
        }
        let bundle = match bundle_for(cfg, &sys, &design) {
            Ok(b) => Some(b),
            Err(e) => {
                warn!("no certificate, V and the ISS check are skipped: {e}");
                None
            }
        };
        (sys, design, bundle)
    };

    let sim = &cfg.simulation;
    let disturbance = match cfg.coupling.as_ref().map(|c| c.disturbance) {
        Some(DisturbanceKind::CaseStudy) if !flags.no_disturbance => Disturbance::CaseStudy,
        _ => Disturbance::None,
    };
    let config = SimConfig {
        dt: sim.dt,
        t_end: sim.t_end,
        n_modes: sim.n_modes,
        record_stride: sim.record_stride,
        disturbance,
    };
    let fields = coupling_fields(cfg, &sys, sim.n_modes)?;
    let x0 = cfg.coupling.as_ref().map_or(0.0, |c| c.x0);
    let x0_coeffs = initial_coeffs(cfg, &sys, sim.n_modes)?;
    info!("simulating {} steps of dt = {}", config.steps(), config.dt);
    let traj = run_simulation(&config, &sys, &design, bundle.as_ref(), &fields, x0, &x0_coeffs)?;
    let csv = traj.to_csv(sys.input_dim(), sim.n_modes)?;
    let summary = summarize(&traj, &design, bundle.as_ref(), flags, sim.t_end);
    Ok(SimOutput { csv, summary })
}

fn summarize(
    traj: &Trajectory,
    design: &PredictorDesign,
    bundle: Option<&CertificateBundle>,
    flags: SimFlags,
    t_end: f64,
) -> String {
    let t_on = design.delay() + design.transition().t0();
    let fit_start = if flags.open_loop { 0.5 * t_end } else { t_on };
    let (rate, amplitude) = decay_fit(traj, fit_start).unwrap_or((f64::NAN, f64::NAN));
    let last = traj.samples.last();
    let max_norm_x = traj.samples.iter().map(|s| s.norm_x).fold(0.0, f64::max);

    let mut out = String::new();
    let _ = writeln!(out, "mode = {}", if flags.open_loop { "open-loop" } else { "closed-loop" });
    let _ = writeln!(out, "samples = {}", traj.len());
    let _ = writeln!(out, "fit_start = {}", num(fit_start));
    let _ = writeln!(out, "decay_rate = {}", num(rate));
    let _ = writeln!(out, "decay_amplitude = {}", num(amplitude));
    let _ = writeln!(out, "max_normX = {}", num(max_norm_x));
    let _ = writeln!(out, "final_normX = {}", num(last.map_or(f64::NAN, |s| s.norm_x)));
    let _ = writeln!(out, "final_x = {}", num(last.map_or(f64::NAN, |s| s.x)));
    let _ = writeln!(out, "max_control_norm = {}", num(traj.max_control_norm()));
    let _ = writeln!(out, "max_normd = {}", num(traj.max_norm_d()));
    match bundle {
        Some(b) => {
            let check = iss_envelope_check(traj, b, design, traj.max_norm_d());
            let _ = writeln!(out, "kappa0 = {}", num(b.kappa0));
            let _ = writeln!(out, "iss_check = {}", if check.passed { "pass" } else { "fail" });
            let _ = writeln!(out, "iss_worst_ratio = {}", num(check.worst_ratio));
            let _ = writeln!(out, "iss_checked = {}", check.checked);
        }
        None => {
            let _ = writeln!(out, "iss_check = unavailable");
        }
    }
    out
}

pub fn cmd_validate(cfg: &RunConfig, out_dir: &Path) -> Outcome {
    let (_, report) = validate(cfg)?;
    print!("{report}");
    write_file(out_dir, "validate.txt", &report)?;
    Ok(())
}

pub fn cmd_design(cfg: &RunConfig, out_dir: &Path) -> Outcome {
    let (_, design, report) = design(cfg)?;
    print!("{report}");
    write_file(out_dir, "design.txt", &report)?;
    if !design.is_hurwitz() {
        return Err(Failure::new(3, "synthesis failure: closed loop is not Hurwitz"));
    }
    Ok(())
}

pub fn cmd_certify(cfg: &RunConfig, out_dir: &Path) -> Outcome {
    let cert = certify(cfg)?;
    print!("{}", cert.report);
    write_file(out_dir, "certificate.txt", &cert.report)?;
    match cert.margin {
        Some(m) if m < 0.0 => {
            eprintln!("warning: small-gain margin {} is negative, the interconnection is not certified", num(m));
            Err(Failure::new(4, "small-gain condition fails for the configured couplings"))
        }
        _ => Ok(()),
    }
}

pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path, flags: SimFlags) -> Outcome {
    let result = simulate(cfg, flags)?;
    write_file(out_dir, &cfg.simulation.output, &result.csv)?;
    write_file(out_dir, "summary.txt", &result.summary)?;
    print!("{}", result.summary);
    Ok(())
}

/// validate → design → certify → simulate, each writing its artifact.
pub fn cmd_case_study(cfg: &RunConfig, out_dir: &Path, flags: SimFlags) -> Outcome {
    cmd_validate(cfg, out_dir)?;
    if !flags.open_loop {
        cmd_design(cfg, out_dir)?;
        cmd_certify(cfg, out_dir)?;
    }
    cmd_simulate(cfg, out_dir, flags)
}
