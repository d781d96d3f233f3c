//! Run configuration: `[section]` headers with `key = value` lines.
//!
//! ```text
//! [plant]          kind = heat (a, c, L, N_max) | diagonal (eigenvalues, inputs, b)
//! [truncation]     N0
//! [control]        D, t0, poles
//! [certificate]    optimize, beta, gamma1, gamma2
//! [coupling]       a1, b1, c1, a2, b2, c2, d2, x0, disturbance
//! [simulation]     dt, T_end, N_modes, record_stride, initial, initial_coeffs, output
//! ```
//!
//! Every value is checked at load time and errors name the offending field.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use ini::{Ini, Properties};
use num_complex::Complex64;

use sdc_core::case_study::CaseStudy;
use sdc_core::sim::CouplingParams;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq)]
pub enum PlantSpec {
    Heat { a: f64, c: f64, length: f64, n_max: usize },
    /// Diagonal generator with an `N_max x m` input matrix given row by row.
    Diagonal { eigenvalues: Vec<Complex64>, inputs: usize, b: Vec<Complex64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSpec {
    pub delay: f64,
    pub t0: f64,
    pub poles: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturbanceKind {
    None,
    CaseStudy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    pub params: CouplingParams,
    pub x0: f64,
    pub disturbance: DisturbanceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Cubic,
    Zero,
    Coeffs(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub dt: f64,
    pub t_end: f64,
    pub n_modes: usize,
    pub record_stride: usize,
    pub initial: InitialState,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub plant: PlantSpec,
    pub n0: usize,
    pub control: Option<ControlSpec>,
    /// `(β, γ1, γ2)` when the optimizer is switched off.
    pub certificate: Option<[f64; 3]>,
    pub coupling: Option<CouplingSpec>,
    pub simulation: SimulationSpec,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("plant", &["kind", "a", "c", "L", "N_max", "eigenvalues", "inputs", "b"]),
    ("truncation", &["N0"]),
    ("control", &["D", "t0", "poles"]),
    ("certificate", &["optimize", "beta", "gamma1", "gamma2"]),
    ("coupling", &["a1", "b1", "c1", "a2", "b2", "c2", "d2", "x0", "disturbance"]),
    ("simulation", &["dt", "T_end", "N_modes", "record_stride", "initial", "initial_coeffs", "output"]),
];

struct Section<'a> {
    name: &'static str,
    props: Option<&'a Properties>,
}

impl Section<'_> {
    fn fail<T>(&self, key: &str, msg: impl fmt::Display) -> Result<T> {
        Err(ConfigError(format!("[{}] {key}: {msg}", self.name)))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.props.and_then(|p| p.get(key)).map(str::trim)
    }

    fn require(&self, key: &str) -> Result<&str> {
        match self.raw(key) {
            Some(v) => Ok(v),
            None => Err(ConfigError(format!("[{}] missing key `{key}`", self.name))),
        }
    }

    fn parse_f64(&self, key: &str, text: &str) -> Result<f64> {
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => self.fail(key, format!("expected a finite number, got `{text}`")),
        }
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.parse_f64(key, self.require(key)?)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.raw(key).map_or(Ok(default), |t| self.parse_f64(key, t))
    }

    fn positive(&self, key: &str, value: f64) -> Result<f64> {
        if value > 0.0 {
            Ok(value)
        } else {
            self.fail(key, format!("must be positive (got {value})"))
        }
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let text = self.require(key)?;
        text.parse().or_else(|_| self.fail(key, format!("expected a nonnegative integer, got `{text}`")))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        if self.raw(key).is_some() {
            self.usize(key)
        } else {
            Ok(default)
        }
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        split_list(self.require(key)?).map(|t| self.parse_f64(key, t)).collect()
    }

    fn complex_list(&self, key: &str) -> Result<Vec<Complex64>> {
        split_list(self.require(key)?)
            .map(|t| parse_complex(t).ok_or_else(|| ConfigError(format!("[{}] {key}: cannot parse `{t}`", self.name))))
            .collect()
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(t) => self.fail(key, format!("expected `true` or `false`, got `{t}`")),
        }
    }
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses `-3`, `2.5e-1`, `-1+2i`, `0.5-1.5i` or `3i`.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().ok().filter(|v| v.is_finite()).map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (body[..k].parse::<f64>().ok()?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => t.parse::<f64>().ok()?,
    };
    (re.is_finite() && im.is_finite()).then(|| Complex64::new(re, im))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError(format!("malformed config: {e}")))?;
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(ConfigError(format!("key `{key}` appears before any section")));
                }
                continue;
            };
            let Some((_, allowed)) = SECTIONS.iter().find(|(s, _)| *s == name) else {
                return Err(ConfigError(format!("unknown section [{name}]")));
            };
            let allowed: HashSet<&str> = allowed.iter().copied().collect();
            if let Some((key, _)) = props.iter().find(|(k, _)| !allowed.contains(k)) {
                return Err(ConfigError(format!("[{name}] unknown key `{key}`")));
            }
        }
        let section = |name: &'static str| Section { name, props: ini.section(Some(name)) };

        let plant = parse_plant(&section("plant"))?;
        let n_max = match &plant {
            PlantSpec::Heat { n_max, .. } => *n_max,
            PlantSpec::Diagonal { eigenvalues, .. } => eigenvalues.len(),
        };
        let n0 = section("truncation").usize("N0")?;

        let ctl = section("control");
        let control = if ctl.props.is_some() {
            let delay = ctl.positive("D", ctl.f64("D")?)?;
            let t0 = ctl.positive("t0", ctl.f64("t0")?)?;
            let poles = ctl.complex_list("poles")?;
            Some(ControlSpec { delay, t0, poles })
        } else {
            None
        };

        let cert = section("certificate");
        let certificate = if cert.bool_or("optimize", true)? {
            None
        } else {
            let beta = cert.f64("beta")?;
            if !(beta > 0.0 && beta < 1.0) {
                return cert.fail("beta", format!("must lie in (0, 1) (got {beta})"));
            }
            Some([beta, cert.positive("gamma1", cert.f64("gamma1")?)?, cert.positive("gamma2", cert.f64("gamma2")?)?])
        };

        let cpl = section("coupling");
        let coupling = if cpl.props.is_some() {
            if !matches!(plant, PlantSpec::Heat { .. }) {
                return Err(ConfigError("[coupling] requires a plant with kind = heat".into()));
            }
            let params = CouplingParams {
                a1: cpl.positive("a1", cpl.f64("a1")?)?,
                b1: cpl.f64("b1")?,
                c1: cpl.f64("c1")?,
                a2: cpl.f64("a2")?,
                b2: cpl.f64("b2")?,
                c2: cpl.f64("c2")?,
                d2: cpl.f64("d2")?,
            };
            let disturbance = match cpl.raw("disturbance").unwrap_or("none") {
                "none" => DisturbanceKind::None,
                "case-study" => DisturbanceKind::CaseStudy,
                other => return cpl.fail("disturbance", format!("expected `none` or `case-study`, got `{other}`")),
            };
            Some(CouplingSpec { params, x0: cpl.f64_or("x0", 0.0)?, disturbance })
        } else {
            None
        };

        let sim = section("simulation");
        let dt = sim.positive("dt", sim.f64_or("dt", 1e-3)?)?;
        if let Some(ctl) = &control {
            if dt >= ctl.delay {
                return sim.fail("dt", format!("must be smaller than the delay D = {} (got {dt})", ctl.delay));
            }
        }
        let t_end = sim.f64_or("T_end", 10.0)?;
        if t_end < 0.0 {
            return sim.fail("T_end", format!("must be nonnegative (got {t_end})"));
        }
        let n_modes = sim.usize_or("N_modes", n_max.min(10))?;
        if n_modes < n0.max(1) || n_modes > n_max {
            return sim.fail("N_modes", format!("must lie in {}..={n_max} (got {n_modes})", n0.max(1)));
        }
        let record_stride = sim.usize_or("record_stride", 1)?;
        if record_stride == 0 {
            return sim.fail("record_stride", "must be at least 1");
        }
        let initial = if sim.raw("initial_coeffs").is_some() {
            let coeffs = sim.f64_list("initial_coeffs")?;
            if coeffs.len() != n_modes {
                return sim.fail("initial_coeffs", format!("expected N_modes = {n_modes} values, got {}", coeffs.len()));
            }
            InitialState::Coeffs(coeffs)
        } else {
            match sim.raw("initial").unwrap_or(match plant {
                PlantSpec::Heat { .. } => "cubic",
                PlantSpec::Diagonal { .. } => "zero",
            }) {
                "cubic" if matches!(plant, PlantSpec::Heat { .. }) => InitialState::Cubic,
                "cubic" => return sim.fail("initial", "the cubic profile needs a plant with kind = heat"),
                "zero" => InitialState::Zero,
                other => return sim.fail("initial", format!("expected `cubic` or `zero`, got `{other}`")),
            }
        };
        let output = sim.raw("output").unwrap_or("trajectory.csv").to_string();
        if output.is_empty() {
            return sim.fail("output", "must not be empty");
        }

        Ok(Self {
            plant,
            n0,
            control,
            certificate,
            coupling,
            simulation: SimulationSpec { dt, t_end, n_modes, record_stride, initial, output },
        })
    }

    /// The built-in reaction-diffusion/ODE case study.
    pub fn case_study() -> Self {
        let cs = CaseStudy::default();
        Self {
            plant: PlantSpec::Heat { a: cs.a, c: cs.c, length: cs.length, n_max: cs.n_max },
            n0: cs.n0,
            control: Some(ControlSpec { delay: cs.delay, t0: cs.t0, poles: cs.poles.clone() }),
            certificate: None,
            coupling: Some(CouplingSpec { params: cs.coupling, x0: cs.x0, disturbance: DisturbanceKind::CaseStudy }),
            simulation: SimulationSpec {
                dt: 1e-3,
                t_end: 10.0,
                n_modes: 10,
                record_stride: 1,
                initial: InitialState::Cubic,
                output: "trajectory.csv".into(),
            },
        }
    }
}

fn parse_plant(sec: &Section<'_>) -> Result<PlantSpec> {
    match sec.raw("kind").unwrap_or("heat") {
        "heat" => {
            let a = sec.positive("a", sec.f64("a")?)?;
            let c = sec.f64("c")?;
            let length = sec.positive("L", sec.f64("L")?)?;
            let n_max = sec.usize("N_max")?;
            if n_max == 0 {
                return sec.fail("N_max", "must be at least 1");
            }
            Ok(PlantSpec::Heat { a, c, length, n_max })
        }
        "diagonal" => {
            let eigenvalues = sec.complex_list("eigenvalues")?;
            if eigenvalues.is_empty() {
                return sec.fail("eigenvalues", "needs at least one value");
            }
            let inputs = sec.usize("inputs")?;
            if inputs == 0 {
                return sec.fail("inputs", "must be at least 1");
            }
            let b = sec.complex_list("b")?;
            if b.len() != eigenvalues.len() * inputs {
                return sec.fail(
                    "b",
                    format!("expected {} x {inputs} = {} entries, got {}", eigenvalues.len(), eigenvalues.len() * inputs, b.len()),
                );
            }
            Ok(PlantSpec::Diagonal { eigenvalues, inputs, b })
        }
        other => sec.fail("kind", format!("expected `heat` or `diagonal`, got `{other}`")),
    }
}
