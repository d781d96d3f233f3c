//! Design, certification and simulation of delay-compensated boundary
//! feedback for diagonal (Riesz-spectral) infinite-dimensional systems.
//!
//! The pipeline is: build a modal plant ([`spectral`]), synthesize an
//! Artstein-predictor feedback for its unstable modes ([`predictor`]),
//! compute explicit Lyapunov and ISS constants and a small-gain margin for a
//! PDE-ODE interconnection ([`certificates`]), and check the closed loop by
//! modal simulation ([`sim`]).

pub mod buffer;
pub mod case_study;
pub mod certificates;
pub mod error;
pub mod exec;
pub mod format;
pub mod linalg;
pub mod optimize;
pub mod predictor;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Exec;
