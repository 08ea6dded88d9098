use std::io::{self, Write};

use num_complex::Complex;
use serde::Serialize;

use super::operators::{build_operators, FockOperators};
use super::state::{correlated_coherent_density, DensityOperator};
use crate::error::{Error, Result};
use crate::gaussian::{write_csv_row, GaussianState, InitialStateSpec, Trajectory};
use crate::model::{DiffusionCoefficients, OscillatorParams};
use crate::scalar::Real;

pub const DEFAULT_LEAKAGE_BUDGET: f64 = 1e-8;
pub const TRACE_TOLERANCE: f64 = 1e-8;

pub const ORACLE_CSV_HEADER: &str = "t,sigma_q,sigma_p,sigma_qq,sigma_pp,sigma_pq,sigma,leakage";

/// Scratch buffers for one right-hand-side evaluation.
struct Workspace<T> {
    a: Vec<Complex<T>>,
    b: Vec<Complex<T>>,
    c: Vec<Complex<T>>,
    d: Vec<Complex<T>>,
    x: Vec<Complex<T>>,
    y: Vec<Complex<T>>,
}

impl<T: Real> Workspace<T> {
    fn new(n: usize) -> Self {
        let z = vec![Complex::new(T::zero(), T::zero()); n * n];
        Self {
            a: z.clone(),
            b: z.clone(),
            c: z.clone(),
            d: z.clone(),
            x: z.clone(),
            y: z,
        }
    }
}

fn rhs_into<T: Real>(
    ops: &FockOperators<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    rho: &[Complex<T>],
    out: &mut [Complex<T>],
    ws: &mut Workspace<T>,
) {
    let n = ops.dim();
    let h = ops.hbar;
    let h2 = h * h;
    let two = T::lit(2.0);
    let (lam, mu) = (params.lambda(), params.mu());

    ops.q_band.left_mul(rho, &mut ws.a);
    ops.q_band.right_mul(rho, &mut ws.b);
    ops.p_band.left_mul(rho, &mut ws.c);
    ops.p_band.right_mul(rho, &mut ws.d);

    // Everything except the Hamiltonian part is [q, X] + [p, Y] with
    //   X = -(i/2h)(lam+mu){rho,p} - (Dpp [q,rho] - Dpq [p,rho])/h^2
    //   Y = +(i/2h)(lam-mu){rho,q} - (Dqq [p,rho] - Dpq [q,rho])/h^2
    let fx = Complex::new(T::zero(), -(lam + mu) / (two * h));
    let fy = Complex::new(T::zero(), (lam - mu) / (two * h));
    let (dpp, dqq, dpq) = (coeffs.d_pp / h2, coeffs.d_qq / h2, coeffs.d_pq / h2);
    for k in 0..n * n {
        let qr = ws.a[k] - ws.b[k];
        let pr = ws.c[k] - ws.d[k];
        let anti_p = ws.c[k] + ws.d[k];
        let anti_q = ws.a[k] + ws.b[k];
        ws.x[k] = fx * anti_p - (qr * dpp - pr * dpq);
        ws.y[k] = fy * anti_q - (pr * dqq - qr * dpq);
    }

    ops.q_band.left_mul(&ws.x, &mut ws.a);
    ops.q_band.right_mul(&ws.x, &mut ws.b);
    ops.p_band.left_mul(&ws.y, &mut ws.c);
    ops.p_band.right_mul(&ws.y, &mut ws.d);

    let minus_i_over_h = Complex::new(T::zero(), -h.recip());
    let e = ops.energies();
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            let free = minus_i_over_h * rho[k] * (e[i] - e[j]);
            out[k] = free + (ws.a[k] - ws.b[k]) + (ws.c[k] - ws.d[k]);
        }
    }
}

/// `d rho / dt` evaluated in the truncated number basis.
pub fn liouvillian_rhs<T: Real>(
    rho: &DensityOperator<T>,
    ops: &FockOperators<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
) -> DensityOperator<T> {
    let n = ops.dim();
    let mut ws = Workspace::new(n);
    let src = rho.matrix.as_standard_layout();
    let mut out = vec![Complex::new(T::zero(), T::zero()); n * n];
    rhs_into(
        ops,
        params,
        coeffs,
        src.as_slice().unwrap_or(&[]),
        &mut out,
        &mut ws,
    );
    DensityOperator::new(ndarray::Array2::from_shape_vec((n, n), out).expect("square buffer"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions<T> {
    /// Fixed RK4 step; `None` means `0.001 min(1/omega, 1/lambda)`.
    pub step: Option<T>,
    pub leakage_budget: T,
    pub trace_tolerance: T,
    /// Compute the smallest eigenvalue at every sample.
    pub track_positivity: bool,
}

impl<T: Real> Default for OracleOptions<T> {
    fn default() -> Self {
        Self {
            step: None,
            leakage_budget: T::lit(DEFAULT_LEAKAGE_BUDGET),
            trace_tolerance: T::lit(TRACE_TOLERANCE),
            track_positivity: true,
        }
    }
}

pub fn default_oracle_step<T: Real>(params: &OscillatorParams<T>) -> T {
    let inv_w = params.omega().recip();
    let step = if params.lambda() > T::zero() {
        inv_w.min(params.lambda().recip())
    } else {
        inv_w
    };
    T::lit(1e-3) * step
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSample<T> {
    pub moments: GaussianState<T>,
    pub leakage: T,
    pub trace: T,
    pub purity: T,
    pub hermiticity_error: T,
    pub energy: T,
    pub min_eigenvalue: Option<T>,
}

#[derive(Debug, Clone)]
pub struct OracleRun<T> {
    pub dim: usize,
    pub step: T,
    pub samples: Vec<OracleSample<T>>,
    pub max_leakage: T,
    pub leakage_budget: T,
    /// Leakage stayed within budget at every sample.
    pub converged: bool,
    pub final_density: DensityOperator<T>,
}

impl<T: Real> OracleRun<T> {
    pub fn require_converged(&self) -> Result<&Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::LeakageExceeded {
                n: self.dim,
                leakage: self.max_leakage.to_f64_lossy(),
                budget: self.leakage_budget.to_f64_lossy(),
                suggested_n: 2 * self.dim,
            })
        }
    }

    pub fn trajectory(&self) -> Result<Trajectory<T>> {
        Trajectory::from_samples(self.samples.iter().map(|s| s.moments).collect())
    }

    /// Largest violation of `Tr(rho) = 1` over the samples.
    pub fn max_trace_drift(&self) -> T {
        self.samples
            .iter()
            .map(|s| (s.trace - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    pub fn min_eigenvalue(&self) -> Option<T> {
        self.samples
            .iter()
            .filter_map(|s| s.min_eigenvalue)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: T| a.min(v))))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{ORACLE_CSV_HEADER}")?;
        for s in &self.samples {
            let m = &s.moments;
            write_csv_row(
                &mut out,
                &[
                    m.time,
                    m.q,
                    m.p,
                    m.qq,
                    m.pp,
                    m.pq,
                    m.uncertainty(),
                    s.leakage,
                ],
            )?;
        }
        Ok(())
    }
}

fn observe<T: Real>(
    rho: &DensityOperator<T>,
    ops: &FockOperators<T>,
    t: T,
    positivity: bool,
) -> OracleSample<T> {
    OracleSample {
        moments: rho.moments(ops, t),
        leakage: rho.leakage(),
        trace: rho.trace().re,
        purity: rho.purity(),
        hermiticity_error: rho.hermiticity_error(),
        energy: rho.expectation(&ops.h0).re,
        min_eigenvalue: positivity.then(|| rho.min_eigenvalue()),
    }
}

/// Integrate `rho0` from `t = times[0]` with fixed-step RK4, shortening steps
/// so that every sample time is hit exactly.
pub fn integrate<T: Real>(
    rho0: &DensityOperator<T>,
    ops: &FockOperators<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    times: &[T],
    options: &OracleOptions<T>,
) -> Result<OracleRun<T>> {
    let n = ops.dim();
    if rho0.dim() != n {
        return Err(Error::Dimension {
            n: rho0.dim(),
            min: n,
        });
    }
    if times.is_empty() {
        return Err(Error::InvalidSampling("no sample times"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidSampling(
            "sample times must be strictly increasing",
        ));
    }
    let base = options.step.unwrap_or_else(|| default_oracle_step(params));
    if !(base > T::zero()) || !base.is_finite() {
        return Err(Error::InvalidSampling("step must be positive"));
    }

    let len = n * n;
    let zero = Complex::new(T::zero(), T::zero());
    let mut rho: Vec<Complex<T>> = rho0.matrix.as_standard_layout().iter().copied().collect();
    let mut ws = Workspace::new(n);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![zero; len],
        vec![zero; len],
        vec![zero; len],
        vec![zero; len],
        vec![zero; len],
    );

    let mut samples = Vec::with_capacity(times.len());
    let mut t = times[0];
    let mut current = DensityOperator::new(rho0.matrix.clone());
    let six = T::lit(6.0);
    let two = T::lit(2.0);
    for &target in times {
        let span = target - t;
        if span > T::zero() {
            let steps_f = (span / base).ceil().max(T::one());
            let steps = steps_f.to_usize().unwrap_or(usize::MAX);
            let h = span / steps_f;
            let half = h / two;
            for _ in 0..steps {
                rhs_into(ops, params, coeffs, &rho, &mut k1, &mut ws);
                for k in 0..len {
                    tmp[k] = rho[k] + k1[k] * half;
                }
                rhs_into(ops, params, coeffs, &tmp, &mut k2, &mut ws);
                for k in 0..len {
                    tmp[k] = rho[k] + k2[k] * half;
                }
                rhs_into(ops, params, coeffs, &tmp, &mut k3, &mut ws);
                for k in 0..len {
                    tmp[k] = rho[k] + k3[k] * h;
                }
                rhs_into(ops, params, coeffs, &tmp, &mut k4, &mut ws);
                for k in 0..len {
                    rho[k] = rho[k] + (k1[k] + (k2[k] + k3[k]) * two + k4[k]) * (h / six);
                }
            }
            t = target;
            current = DensityOperator::new(
                ndarray::Array2::from_shape_vec((n, n), rho.clone()).expect("square buffer"),
            );
        }
        let sample = observe(&current, ops, target, options.track_positivity);
        if !sample.trace.is_finite() {
            return Err(Error::NonFinite("density matrix integration"));
        }
        let drift = (sample.trace - T::one()).abs();
        if drift > options.trace_tolerance {
            return Err(Error::TraceDrift {
                t: target.to_f64_lossy(),
                drift: drift.to_f64_lossy(),
            });
        }
        samples.push(sample);
    }

    let max_leakage = samples.iter().map(|s| s.leakage).fold(T::zero(), T::max);
    Ok(OracleRun {
        dim: n,
        step: base,
        samples,
        max_leakage,
        leakage_budget: options.leakage_budget,
        converged: max_leakage <= options.leakage_budget,
        final_density: current,
    })
}

/// Oracle run from a correlated coherent initial state.
pub fn run_from_spec<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    dim: usize,
    times: &[T],
    options: &OracleOptions<T>,
) -> Result<OracleRun<T>> {
    let ops = build_operators(params, dim)?;
    let rho0 = correlated_coherent_density(spec, params, &ops, options.leakage_budget)?;
    integrate(&rho0, &ops, params, coeffs, times, options)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub start_dim: usize,
    pub max_dim: usize,
    /// Largest moment change between successive dimensions that counts as converged.
    pub tolerance: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            start_dim: 60,
            max_dim: 240,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergedRun<T> {
    pub run: OracleRun<T>,
    /// `(dim, largest moment change against the previous dimension)`
    pub history: Vec<(usize, Option<f64>)>,
    pub dimension_converged: bool,
}

fn max_moment_change<T: Real>(a: &OracleRun<T>, b: &OracleRun<T>) -> f64 {
    a.samples
        .iter()
        .zip(&b.samples)
        .flat_map(|(x, y)| {
            let (x, y) = (x.moments, y.moments);
            [x.q - y.q, x.p - y.p, x.qq - y.qq, x.pp - y.pp, x.pq - y.pq]
        })
        .map(|d| d.abs().to_f64_lossy())
        .fold(0.0, f64::max)
}

/// Repeat the oracle run with doubled dimension until successive runs agree
/// to `convergence.tolerance` in every moment, or `max_dim` is reached.
pub fn integrate_converged<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    times: &[T],
    options: &OracleOptions<T>,
    convergence: &Convergence,
) -> Result<ConvergedRun<T>> {
    let mut dim = convergence.start_dim;
    let mut prev = run_from_spec(spec, params, coeffs, dim, times, options)?;
    let mut history = vec![(dim, None)];
    loop {
        let next_dim = (dim * 2).min(convergence.max_dim);
        if next_dim <= dim {
            return Ok(ConvergedRun {
                run: prev,
                history,
                dimension_converged: false,
            });
        }
        let next = run_from_spec(spec, params, coeffs, next_dim, times, options)?;
        let change = max_moment_change(&prev, &next);
        history.push((next_dim, Some(change)));
        dim = next_dim;
        prev = next;
        if change < convergence.tolerance {
            return Ok(ConvergedRun {
                run: prev,
                history,
                dimension_converged: true,
            });
        }
    }
}
