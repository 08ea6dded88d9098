//! Cross-checks of the moment dynamics: against the number-basis oracle, and
//! through the residual of the coordinate-space master equation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::density::{pde_residual, MixedDiffusionScaling};
use crate::error::Result;
use crate::fock::{integrate_converged, run_from_spec, Convergence, OracleOptions, OracleRun};
use crate::gaussian::{
    evolve_at, initial_state, uniform_times, InitialStateSpec, StepControl, Trajectory,
};
use crate::model::{Constants, DiffusionCoefficients, OscillatorParams};
use crate::scalar::Real;

pub const DEFAULT_MOMENT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_RESIDUAL_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions<T> {
    pub t_final: T,
    pub samples: usize,
    /// Fixed oracle dimension; `None` starts at `convergence.start_dim` and doubles.
    pub oracle_dim: Option<usize>,
    pub convergence: Convergence,
    pub oracle: OracleOptions<T>,
    pub moment_tolerance: f64,
    pub residual_points: usize,
    pub residual_tolerance: f64,
    /// Time resolution of the trajectory used for residual time derivatives.
    pub residual_dt: T,
    pub seed: u64,
}

impl<T: Real> Default for VerifyOptions<T> {
    fn default() -> Self {
        Self {
            t_final: T::lit(10.0),
            samples: 200,
            oracle_dim: None,
            convergence: Convergence::default(),
            oracle: OracleOptions::default(),
            moment_tolerance: DEFAULT_MOMENT_TOLERANCE,
            residual_points: 100,
            residual_tolerance: DEFAULT_RESIDUAL_TOLERANCE,
            residual_dt: T::lit(1e-3),
            seed: 7,
        }
    }
}

/// Largest absolute difference per moment over all samples.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MomentDiscrepancy {
    pub q: f64,
    pub p: f64,
    pub qq: f64,
    pub pp: f64,
    pub pq: f64,
}

impl MomentDiscrepancy {
    pub fn max(&self) -> f64 {
        [self.q, self.p, self.qq, self.pp, self.pq]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn moment_discrepancy<T: Real>(a: &Trajectory<T>, b: &Trajectory<T>) -> MomentDiscrepancy {
    let d = |x: T, y: T| (x - y).abs().to_f64_lossy();
    a.iter()
        .zip(b.iter())
        .fold(MomentDiscrepancy::default(), |acc, (x, y)| {
            MomentDiscrepancy {
                q: acc.q.max(d(x.q, y.q)),
                p: acc.p.max(d(x.p, y.p)),
                qq: acc.qq.max(d(x.qq, y.qq)),
                pp: acc.pp.max(d(x.pp, y.pp)),
                pq: acc.pq.max(d(x.pq, y.pq)),
            }
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStats {
    pub points: usize,
    pub max: f64,
    pub mean: f64,
}

/// Normalized residuals at `points` seeded random space-time points, each
/// within three position widths of the centroid.
pub fn residual_stats<T: Real>(
    trajectory: &Trajectory<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    scaling: MixedDiffusionScaling,
    points: usize,
    seed: u64,
) -> Result<ResidualStats> {
    let samples = trajectory.samples();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut max, mut sum) = (0.0f64, 0.0f64);
    for _ in 0..points {
        // interior sample, so the central difference has both neighbours
        let k = rng.random_range(1..samples.len() - 1);
        let s = &samples[k];
        let width = s.qq.sqrt();
        let q = s.q + width * T::lit(rng.random_range(-3.0..3.0));
        let qp = s.q + width * T::lit(rng.random_range(-3.0..3.0));
        let r = pde_residual(trajectory, params, coeffs, q, qp, s.time, scaling)?
            .normalized()
            .to_f64_lossy();
        max = max.max(r);
        sum += r;
    }
    Ok(ResidualStats {
        points,
        max,
        mean: if points > 0 { sum / points as f64 } else { 0.0 },
    })
}

/// Which form of the mixed-diffusion term in the coordinate equation is
/// consistent with the moment dynamics, probed where the two differ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingExperiment {
    pub hbar: f64,
    pub d_pq: f64,
    pub times_hbar: ResidualStats,
    pub over_hbar: ResidualStats,
    /// Variants whose residual stays below tolerance.
    pub vanishing: Vec<MixedDiffusionScaling>,
    /// `false` when `D_pq` must vanish for these parameters, making the forms identical.
    pub distinguishable: bool,
}

/// Run the mixed-diffusion experiment on `params` rescaled to `hbar = 2`.
/// `D_pp` and `D_qq` scale linearly with `hbar`; `D_pq` is set to half its
/// admissible maximum.
pub fn mixed_diffusion_experiment<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    options: &VerifyOptions<T>,
) -> Result<ScalingExperiment> {
    let two = T::lit(2.0);
    let probe = params.with_constants(Constants::new(two, params.constants().boltzmann)?)?;
    let h = probe.hbar();
    let ratio = h / params.hbar();
    let (d_pp, d_qq) = (coeffs.d_pp * ratio, coeffs.d_qq * ratio);
    let slack = d_pp * d_qq - probe.lambda() * probe.lambda() * h * h / T::lit(4.0);
    let d_pq = T::lit(0.5) * slack.max(T::zero()).sqrt();
    let coeffs = DiffusionCoefficients::new(d_pp, d_qq, d_pq);
    let trajectory = residual_trajectory(spec, &probe, &coeffs, options)?;
    let run = |scaling| {
        residual_stats(
            &trajectory,
            &probe,
            &coeffs,
            scaling,
            options.residual_points,
            options.seed,
        )
    };
    let times_hbar = run(MixedDiffusionScaling::TimesHbar)?;
    let over_hbar = run(MixedDiffusionScaling::OverHbar)?;
    let mut vanishing = Vec::new();
    if times_hbar.max < options.residual_tolerance {
        vanishing.push(MixedDiffusionScaling::TimesHbar);
    }
    if over_hbar.max < options.residual_tolerance {
        vanishing.push(MixedDiffusionScaling::OverHbar);
    }
    Ok(ScalingExperiment {
        hbar: h.to_f64_lossy(),
        d_pq: d_pq.to_f64_lossy(),
        times_hbar,
        over_hbar,
        vanishing,
        distinguishable: d_pq > T::zero(),
    })
}

fn residual_trajectory<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    options: &VerifyOptions<T>,
) -> Result<Trajectory<T>> {
    let intervals = (options.t_final / options.residual_dt)
        .ceil()
        .to_usize()
        .unwrap_or(2)
        .max(2);
    let times = uniform_times(T::zero(), options.t_final, intervals);
    let control = StepControl::default().with_step(options.residual_dt);
    evolve_at(
        &initial_state(spec, params)?,
        params,
        coeffs,
        &times,
        &control,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub dim: usize,
    pub step: f64,
    pub max_leakage: f64,
    pub leakage_budget: f64,
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: Option<f64>,
    /// `(dim, largest moment change against the previous dimension)`
    pub dimension_history: Vec<(usize, Option<f64>)>,
    pub dimension_converged: Option<bool>,
}

impl OracleSummary {
    fn from_run<T: Real>(run: &OracleRun<T>) -> Self {
        Self {
            dim: run.dim,
            step: run.step.to_f64_lossy(),
            max_leakage: run.max_leakage.to_f64_lossy(),
            leakage_budget: run.leakage_budget.to_f64_lossy(),
            max_trace_drift: run.max_trace_drift().to_f64_lossy(),
            max_hermiticity_error: run
                .samples
                .iter()
                .map(|s| s.hermiticity_error.to_f64_lossy())
                .fold(0.0, f64::max),
            min_eigenvalue: run.min_eigenvalue().map(|v| v.to_f64_lossy()),
            dimension_history: vec![(run.dim, None)],
            dimension_converged: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub oracle: OracleSummary,
    pub discrepancy: MomentDiscrepancy,
    pub max_discrepancy: f64,
    pub moment_tolerance: f64,
    pub moments_pass: bool,
    /// Residual of the coordinate equation for the configured parameters.
    pub residual: ResidualStats,
    pub residual_tolerance: f64,
    pub residual_pass: bool,
    pub mixed_diffusion: ScalingExperiment,
    pub pass: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report holds only numbers, strings and booleans")
    }
}

pub struct Verification<T> {
    pub report: VerifyReport,
    pub gaussian: Trajectory<T>,
    pub oracle: OracleRun<T>,
}

/// Integrate the moment equations and the number-basis oracle on identical
/// inputs and compare them. Fails with a leakage error if the oracle basis is
/// too small.
pub fn verify<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    options: &VerifyOptions<T>,
) -> Result<Verification<T>> {
    let times = uniform_times(T::zero(), options.t_final, options.samples);
    let gaussian = evolve_at(
        &initial_state(spec, params)?,
        params,
        coeffs,
        &times,
        &StepControl::default(),
    )?;

    let (oracle, summary) = match options.oracle_dim {
        Some(dim) => {
            let run = run_from_spec(spec, params, coeffs, dim, &times, &options.oracle)?;
            let summary = OracleSummary::from_run(&run);
            (run, summary)
        }
        None => {
            let conv = integrate_converged(
                spec,
                params,
                coeffs,
                &times,
                &options.oracle,
                &options.convergence,
            )?;
            let mut summary = OracleSummary::from_run(&conv.run);
            summary.dimension_history = conv.history.clone();
            summary.dimension_converged = Some(conv.dimension_converged);
            (conv.run, summary)
        }
    };
    oracle.require_converged()?;

    let discrepancy = moment_discrepancy(&gaussian, &oracle.trajectory()?);
    let max_discrepancy = discrepancy.max();
    let moments_pass = max_discrepancy < options.moment_tolerance;

    let residual_traj = residual_trajectory(spec, params, coeffs, options)?;
    let residual = residual_stats(
        &residual_traj,
        params,
        coeffs,
        MixedDiffusionScaling::OverHbar,
        options.residual_points,
        options.seed,
    )?;
    let residual_pass = residual.max < options.residual_tolerance;
    let mixed_diffusion = mixed_diffusion_experiment(spec, params, coeffs, options)?;

    Ok(Verification {
        report: VerifyReport {
            oracle: summary,
            discrepancy,
            max_discrepancy,
            moment_tolerance: options.moment_tolerance,
            moments_pass,
            residual,
            residual_tolerance: options.residual_tolerance,
            residual_pass,
            mixed_diffusion,
            pass: moments_pass && residual_pass,
        },
        gaussian,
        oracle,
    })
}
