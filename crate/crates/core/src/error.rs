use std::fmt;

use thiserror::Error;

/// Named validity constraints. The string form is stable and is what callers
/// see in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// `D_pp D_qq - D_pq^2 >= lambda^2 hbar^2 / 4`, with `D_pp, D_qq > 0`.
    Fundamental,
    LambdaGtMu,
    OmegaGtMu,
    MassPositive,
    OmegaPositive,
    FrictionNonNegative,
    TemperatureNonNegative,
    CothEpsilonAtLeastOne,
    HbarPositive,
    BoltzmannPositive,
    SqueezingPositive,
    CorrelationBounded,
    Finite,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::Fundamental => "fundamental_constraint",
            Constraint::LambdaGtMu => "lambda_gt_mu",
            Constraint::OmegaGtMu => "omega_gt_mu",
            Constraint::MassPositive => "mass_positive",
            Constraint::OmegaPositive => "omega_positive",
            Constraint::FrictionNonNegative => "lambda_nonnegative",
            Constraint::TemperatureNonNegative => "temperature_nonnegative",
            Constraint::CothEpsilonAtLeastOne => "coth_epsilon_ge_one",
            Constraint::HbarPositive => "hbar_positive",
            Constraint::BoltzmannPositive => "boltzmann_positive",
            Constraint::SqueezingPositive => "delta_positive",
            Constraint::CorrelationBounded => "abs_r_lt_one",
            Constraint::Finite => "finite_values",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("constraint violated: {0}")]
    Constraint(Constraint),

    #[error("step size underflow at t = {t}: step {step} below minimum {min_step}")]
    StepUnderflow { t: f64, step: f64, min_step: f64 },

    #[error("time {t} outside the usable range [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("invalid sample times: {0}")]
    InvalidSampling(&'static str),

    #[error("basis dimension {n} too small (need at least {min})")]
    Dimension { n: usize, min: usize },

    #[error(
        "truncation leakage {leakage:.3e} exceeds budget {budget:.3e} at N = {n}; try N = {suggested_n}"
    )]
    LeakageExceeded {
        n: usize,
        leakage: f64,
        budget: f64,
        suggested_n: usize,
    },

    #[error("trace drift {drift:.3e} at t = {t} exceeds 1e-8; integration unstable")]
    TraceDrift { t: f64, drift: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn constraint(&self) -> Option<Constraint> {
        match self {
            Error::Constraint(c) => Some(*c),
            _ => None,
        }
    }
}

impl From<Constraint> for Error {
    fn from(c: Constraint) -> Self {
        Error::Constraint(c)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
