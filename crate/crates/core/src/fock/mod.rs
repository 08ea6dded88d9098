//! Truncated number-basis integration of the full master equation, used as an
//! independent check on the moment dynamics.

mod eigen;
mod integrate;
mod operators;
mod state;

pub use eigen::hermitian_eigenvalues;
pub use integrate::{
    default_oracle_step, integrate, integrate_converged, liouvillian_rhs, run_from_spec,
    ConvergedRun, Convergence, OracleOptions, OracleRun, OracleSample, DEFAULT_LEAKAGE_BUDGET,
    ORACLE_CSV_HEADER, TRACE_TOLERANCE,
};
pub use operators::{build_operators, FockOperators, Tridiagonal, MIN_DIMENSION};
pub use state::{correlated_coherent_density, gibbs_density, DensityOperator};
