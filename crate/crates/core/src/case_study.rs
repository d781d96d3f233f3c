//! Reaction-diffusion plant on `(0, 2π)` coupled with a scalar ODE, with
//! all numerical data fixed.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::Result;
use crate::exec::Exec;
use crate::linalg::{c, CMat, CVec};
use crate::predictor::{PlacementStrategy, PredictorDesign};
use crate::sim::{cubic_initial_profile, unit_profiles, CouplingFields, CouplingParams, Disturbance, SimConfig};
use crate::spectral::{build_heat_system, project_profile, SpectralSystem, DEFAULT_QUADRATURE_INTERVALS};

/// Reference certificate parameters `(β, γ1, γ2)` for this plant.
pub const REFERENCE_PARAMETERS: [f64; 3] = [0.4131, 106.3290, 337.1938];
/// Reference small-gain constant, obtained with a gain other than ours.
pub const REFERENCE_SMALL_GAIN: f64 = 8.6260;

#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudy {
    pub a: f64,
    pub c: f64,
    pub length: f64,
    pub n_max: usize,
    pub n0: usize,
    pub delay: f64,
    pub t0: f64,
    pub poles: Vec<Complex64>,
    pub coupling: CouplingParams,
    pub x0: f64,
}

impl Default for CaseStudy {
    fn default() -> Self {
        Self {
            a: 5.0,
            c: 2.5,
            length: 2.0 * PI,
            n_max: 10,
            n0: 2,
            delay: 0.1,
            t0: 0.2,
            poles: vec![c(-3.0), c(-3.0)],
            coupling: CouplingParams { a1: 1.5, b1: 0.5, c1: 0.2, a2: 0.7, b2: 0.55, c2: 10.0, d2: 0.45 },
            x0: -2.0,
        }
    }
}

impl CaseStudy {
    pub fn system(&self) -> Result<SpectralSystem> {
        build_heat_system(self.a, self.c, self.length, self.n_max)
    }

    pub fn design(&self, sys: &SpectralSystem) -> Result<PredictorDesign> {
        PredictorDesign::synthesize(sys, self.n0, self.delay, self.t0, &self.poles, PlacementStrategy::Auto)
    }

    /// Same plant and delay with `K = 0`.
    pub fn open_loop_design(&self, sys: &SpectralSystem) -> Result<PredictorDesign> {
        PredictorDesign::with_gain(sys, self.n0, self.delay, self.t0, CMat::zeros(sys.input_dim(), self.n0))
    }

    pub fn fields(&self, sys: &SpectralSystem, n_modes: usize, exec: Exec) -> Result<CouplingFields> {
        let p = unit_profiles(self.length);
        CouplingFields::from_profiles(sys, self.coupling, n_modes, [&*p[0], &*p[1], &*p[2], &*p[3], &*p[4]], exec)
    }

    /// Modal coefficients of `X0(ξ) = -5 ξ (L/2 - ξ)(L - ξ)`.
    pub fn initial_coeffs(&self, sys: &SpectralSystem, n_modes: usize, exec: Exec) -> Result<CVec> {
        project_profile(sys, cubic_initial_profile(self.length), n_modes, DEFAULT_QUADRATURE_INTERVALS, exec)
    }

    pub fn sim_config(&self, with_disturbance: bool) -> SimConfig {
        SimConfig {
            disturbance: if with_disturbance { Disturbance::CaseStudy } else { Disturbance::None },
            ..SimConfig::default()
        }
    }
}
