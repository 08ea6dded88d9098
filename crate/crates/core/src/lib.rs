//! Damped quantum harmonic oscillator in a thermal bath.
//!
//! The model is a Lindblad master equation for a harmonic oscillator with
//! friction `lambda`, an asymmetry `mu` between position and momentum
//! damping, and diffusion coefficients fixed by the bath temperature. For
//! Gaussian initial states the dynamics closes on five moments, which is what
//! [`gaussian`] integrates. [`density`] rebuilds the coordinate-space density
//! matrix from those moments, [`decoherence`] derives decoherence measures and
//! time scales, and [`fock`] integrates the full master equation in a
//! truncated number basis as an independent check.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`.

// negated comparisons are how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decoherence;
pub mod density;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod model;
pub mod quadrature;
mod scalar;
pub mod verify;

pub use error::{Constraint, Error, Result};
pub use num_complex::Complex;
pub use scalar::Real;

pub use decoherence::{
    decoherence_rate, decoherence_time, delta_qd, delta_qd_asymptotic, relaxation_time,
    thermal_fluctuation_time, timescale_report, TimeScale,
};
pub use density::{pde_residual, rho_element, MixedDiffusionScaling};
pub use gaussian::{evolve, evolve_at, initial_state, sigma_analytic, StepControl};
pub use model::{gibbs_coefficients, Constants, Temperature};

pub type Params = model::OscillatorParams<f64>;
pub type Coefficients = model::DiffusionCoefficients<f64>;
pub type Spec = gaussian::InitialStateSpec<f64>;
pub type State = gaussian::GaussianState<f64>;
pub type Trajectory = gaussian::Trajectory<f64>;
pub type Report = decoherence::DecoherenceReport<f64>;
pub type Density = fock::DensityOperator<f64>;
pub type OracleRun = fock::OracleRun<f64>;
