//! Gaussian moment dynamics.
//!
//! For a Hamiltonian quadratic in `q, p` and a bath linear in `q, p`, Gaussian
//! states stay Gaussian and the five moments below are the whole state. Their
//! equations of motion follow from `d<A>/dt = Tr(A drho/dt)`:
//!
//! ```text
//! d<q>/dt   = <p>/m - (lambda - mu) <q>
//! d<p>/dt   = -m w^2 <q> - (lambda + mu) <p>
//! d s_qq/dt = 2 s_pq/m - 2 (lambda - mu) s_qq + 2 D_qq
//! d s_pp/dt = -2 m w^2 s_pq - 2 (lambda + mu) s_pp + 2 D_pp
//! d s_pq/dt = s_pp/m - m w^2 s_qq - 2 lambda s_pq + 2 D_pq
//! ```

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Constraint, Error, Result};
use crate::model::{DiffusionCoefficients, OscillatorParams};
use crate::scalar::Real;

/// Squeezing, correlation and centroid of a correlated coherent state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialStateSpec<T> {
    /// Squeezing parameter `delta > 0`; 1 for a Glauber coherent state.
    pub delta: T,
    /// Position-momentum correlation coefficient, `|r| < 1`.
    pub r: T,
    pub q0: T,
    pub p0: T,
}

impl<T: Real> InitialStateSpec<T> {
    pub fn new(delta: T, r: T, q0: T, p0: T) -> Result<Self> {
        let spec = Self { delta, r, q0, p0 };
        spec.validate()?;
        Ok(spec)
    }

    /// Glauber coherent state centred at `(q0, p0)`.
    pub fn coherent(q0: T, p0: T) -> Self {
        Self {
            delta: T::one(),
            r: T::zero(),
            q0,
            p0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.q0.is_finite() && self.p0.is_finite()) {
            return Err(Constraint::Finite.into());
        }
        if self.delta <= T::zero() {
            return Err(Constraint::SqueezingPositive.into());
        }
        if self.r.is_nan() || self.r.abs() >= T::one() {
            return Err(Constraint::CorrelationBounded.into());
        }
        Ok(())
    }

    /// `1 - r^2`
    pub(crate) fn one_minus_r2(&self) -> T {
        T::one() - self.r * self.r
    }
}

/// First and second moments at time `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianState<T> {
    pub time: T,
    /// `<q>`
    pub q: T,
    /// `<p>`
    pub p: T,
    /// Position variance.
    pub qq: T,
    /// Momentum variance.
    pub pp: T,
    /// Symmetrized covariance `<(qp + pq)/2> - <q><p>`.
    pub pq: T,
}

impl<T: Real> GaussianState<T> {
    /// Generalized uncertainty function `s_qq s_pp - s_pq^2`.
    pub fn uncertainty(&self) -> T {
        self.qq * self.pp - self.pq * self.pq
    }

    pub(crate) fn to_array(self) -> [T; 5] {
        [self.q, self.p, self.qq, self.pp, self.pq]
    }

    pub(crate) fn from_array(time: T, y: [T; 5]) -> Self {
        Self {
            time,
            q: y[0],
            p: y[1],
            qq: y[2],
            pp: y[3],
            pq: y[4],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite()) && self.time.is_finite()
    }
}

/// Minimum-uncertainty correlated coherent state at `t = 0`.
pub fn initial_state<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
) -> Result<GaussianState<T>> {
    spec.validate()?;
    let h = params.hbar();
    let mw = params.mass() * params.omega();
    let two = T::lit(2.0);
    let s = spec.one_minus_r2();
    Ok(GaussianState {
        time: T::zero(),
        q: spec.q0,
        p: spec.p0,
        qq: h * spec.delta / (two * mw),
        pp: h * mw / (two * spec.delta * s),
        pq: h * spec.r / (two * s.sqrt()),
    })
}

/// Time derivatives of the five moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRates<T> {
    pub q: T,
    pub p: T,
    pub qq: T,
    pub pp: T,
    pub pq: T,
}

pub fn moment_derivatives<T: Real>(
    state: &GaussianState<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
) -> MomentRates<T> {
    let d = drift(params, coeffs, state.to_array());
    MomentRates {
        q: d[0],
        p: d[1],
        qq: d[2],
        pp: d[3],
        pq: d[4],
    }
}

fn drift<T: Real>(
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    y: [T; 5],
) -> [T; 5] {
    let m = params.mass();
    let mw2 = m * params.omega() * params.omega();
    let (lambda, mu) = (params.lambda(), params.mu());
    let two = T::lit(2.0);
    let [q, p, qq, pp, pq] = y;
    [
        p / m - (lambda - mu) * q,
        -mw2 * q - (lambda + mu) * p,
        two * pq / m - two * (lambda - mu) * qq + two * coeffs.d_qq,
        -two * mw2 * pq - two * (lambda + mu) * pp + two * coeffs.d_pp,
        pp / m - mw2 * qq - two * lambda * pq + two * coeffs.d_pq,
    ]
}

fn rk4_step<T: Real>(
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    y: [T; 5],
    h: T,
) -> [T; 5] {
    let half = T::lit(0.5);
    let axpy =
        |a: &[T; 5], k: &[T; 5], s: T| -> [T; 5] { std::array::from_fn(|i| a[i] + s * k[i]) };
    let k1 = drift(params, coeffs, y);
    let k2 = drift(params, coeffs, axpy(&y, &k1, half * h));
    let k3 = drift(params, coeffs, axpy(&y, &k2, half * h));
    let k4 = drift(params, coeffs, axpy(&y, &k3, h));
    let sixth = h / T::lit(6.0);
    std::array::from_fn(|i| y[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]))
}

/// Integration step and output sampling for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl<T> {
    /// Requested RK4 step; `None` selects `min(0.01/lambda, 0.01/omega)`.
    pub step: Option<T>,
    /// When set, every step is checked against two half-steps and halved
    /// until the difference is below this value.
    pub tolerance: Option<T>,
    /// Smallest step the halving loop may reach before giving up.
    pub min_step: T,
    /// Number of uniform output intervals for [`evolve`].
    pub samples: usize,
}

impl<T: Real> Default for StepControl<T> {
    fn default() -> Self {
        Self {
            step: None,
            tolerance: None,
            min_step: T::lit(1e-12),
            samples: 200,
        }
    }
}

impl<T: Real> StepControl<T> {
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_step(mut self, step: T) -> Self {
        self.step = Some(step);
        self
    }

    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = Some(tolerance);
        self
    }

    /// The step actually requested for `params`.
    pub fn base_step(&self, params: &OscillatorParams<T>) -> T {
        self.step.unwrap_or_else(|| default_step(params))
    }
}

pub fn default_step<T: Real>(params: &OscillatorParams<T>) -> T {
    let c = T::lit(0.01);
    let by_omega = c / params.omega();
    if params.lambda() > T::zero() {
        by_omega.min(c / params.lambda())
    } else {
        by_omega
    }
}

/// Time-ordered samples of a Gaussian evolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<T> {
    samples: Vec<GaussianState<T>>,
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,sigma_q,sigma_p,sigma_qq,sigma_pp,sigma_pq,sigma";

impl<T: Real> Trajectory<T> {
    /// Build from samples with strictly increasing times.
    pub fn from_samples(samples: Vec<GaussianState<T>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSampling("empty trajectory"));
        }
        if samples.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::InvalidSampling("times must be strictly increasing"));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[GaussianState<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> &GaussianState<T> {
        &self.samples[0]
    }

    pub fn last(&self) -> &GaussianState<T> {
        &self.samples[self.samples.len() - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = &GaussianState<T>> {
        self.samples.iter()
    }

    /// Index of the sample closest to `t`.
    pub fn nearest_index(&self, t: T) -> usize {
        let idx = self.samples.partition_point(|s| s.time < t);
        if idx == 0 {
            0
        } else if idx == self.samples.len() {
            idx - 1
        } else if (self.samples[idx].time - t) < (t - self.samples[idx - 1].time) {
            idx
        } else {
            idx - 1
        }
    }

    /// Apply `f` to every sample, keeping the time stamps.
    pub fn map_states(&self, mut f: impl FnMut(GaussianState<T>) -> GaussianState<T>) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| {
                    let mut out = f(*s);
                    out.time = s.time;
                    out
                })
                .collect(),
        }
    }

    /// CSV with [`TRAJECTORY_CSV_HEADER`], 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
        for s in &self.samples {
            write_csv_row(
                &mut out,
                &[s.time, s.q, s.p, s.qq, s.pp, s.pq, s.uncertainty()],
            )?;
        }
        Ok(())
    }
}

pub(crate) fn format_value<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

pub(crate) fn write_csv_row<T: Real, W: Write>(out: &mut W, values: &[T]) -> io::Result<()> {
    let row: Vec<String> = values.iter().map(|v| format_value(*v)).collect();
    writeln!(out, "{}", row.join(","))
}

/// Evolve `state` to `t_final`, sampling `control.samples` uniform intervals.
pub fn evolve<T: Real>(
    state: &GaussianState<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    t_final: T,
    control: &StepControl<T>,
) -> Result<Trajectory<T>> {
    if !(t_final >= state.time) || !t_final.is_finite() {
        return Err(Error::TimeOutOfRange {
            t: t_final.to_f64_lossy(),
            start: state.time.to_f64_lossy(),
            end: f64::INFINITY,
        });
    }
    let times = uniform_times(state.time, t_final, control.samples);
    evolve_at(state, params, coeffs, &times, control)
}

/// `intervals + 1` evenly spaced times from `t0` to `t1`, endpoints exact.
pub fn uniform_times<T: Real>(t0: T, t1: T, intervals: usize) -> Vec<T> {
    if t1 == t0 || intervals == 0 {
        return vec![t0];
    }
    let n = T::from_usize_lossy(intervals);
    (0..=intervals)
        .map(|k| {
            if k == intervals {
                t1
            } else {
                t0 + (t1 - t0) * T::from_usize_lossy(k) / n
            }
        })
        .collect()
}

/// Evolve `state` and record it at each of `times` (strictly increasing,
/// starting at or after `state.time`). Steps are shortened so every sample
/// time is hit exactly; no interpolation is involved.
pub fn evolve_at<T: Real>(
    state: &GaussianState<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    times: &[T],
    control: &StepControl<T>,
) -> Result<Trajectory<T>> {
    if times.is_empty() {
        return Err(Error::InvalidSampling("no sample times"));
    }
    if times[0] < state.time {
        return Err(Error::TimeOutOfRange {
            t: times[0].to_f64_lossy(),
            start: state.time.to_f64_lossy(),
            end: f64::INFINITY,
        });
    }
    let base = control.base_step(params);
    if !(base > T::zero()) {
        return Err(Error::InvalidSampling("step must be positive"));
    }
    let mut y = state.to_array();
    let mut t = state.time;
    let mut h = base;
    let mut samples = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        if span > T::zero() {
            match control.tolerance {
                None => {
                    let n = (span / base).ceil().max(T::one());
                    let steps = n.to_usize().unwrap_or(usize::MAX);
                    let hh = span / n;
                    for _ in 0..steps {
                        y = rk4_step(params, coeffs, y, hh);
                    }
                }
                Some(tol) => {
                    y = advance_with_halving(
                        params,
                        coeffs,
                        y,
                        t,
                        target,
                        &mut h,
                        tol,
                        control.min_step,
                    )?;
                }
            }
        }
        t = target;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("moment integration"));
        }
        samples.push(GaussianState::from_array(t, y));
    }
    Trajectory::from_samples(samples)
}

#[allow(clippy::too_many_arguments)]
fn advance_with_halving<T: Real>(
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    mut y: [T; 5],
    mut t: T,
    target: T,
    h: &mut T,
    tol: T,
    min_step: T,
) -> Result<[T; 5]> {
    let half = T::lit(0.5);
    while t < target {
        let step = (*h).min(target - t);
        let full = rk4_step(params, coeffs, y, step);
        let mid = rk4_step(params, coeffs, y, step * half);
        let two_half = rk4_step(params, coeffs, mid, step * half);
        let err = full
            .iter()
            .zip(&two_half)
            .map(|(a, b)| (*a - *b).abs() / T::one().max(b.abs()))
            .fold(T::zero(), T::max);
        if err <= tol {
            y = two_half;
            t = if step == target - t { target } else { t + step };
        } else {
            *h = step * half;
            if *h < min_step {
                return Err(Error::StepUnderflow {
                    t: t.to_f64_lossy(),
                    step: h.to_f64_lossy(),
                    min_step: min_step.to_f64_lossy(),
                });
            }
        }
    }
    Ok(y)
}

/// Closed-form generalized uncertainty function for a correlated coherent
/// initial state in a Gibbs bath.
pub fn sigma_analytic<T: Real>(
    t: T,
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
) -> Result<T> {
    spec.validate()?;
    params.validate_gibbs()?;
    let omega = params.omega();
    let mu = params.mu();
    let big_omega2 = omega * omega - mu * mu;
    if !(big_omega2 > T::zero()) {
        return Err(Constraint::OmegaGtMu.into());
    }
    let big_omega = big_omega2.sqrt();
    let lambda = params.lambda();
    let c = params.coth_epsilon();
    let h = params.hbar();
    let (one, two, four) = (T::one(), T::lit(2.0), T::lit(4.0));

    let s = spec.one_minus_r2();
    let inv = one / (spec.delta * s);
    let plus = spec.delta + inv;
    let minus = spec.delta - inv;

    // 1 - cos(2 Omega t) = 2 sin^2(Omega t)
    let sin_wt = (big_omega * t).sin();
    let one_minus_cos = two * sin_wt * sin_wt;
    let sin_2wt = (two * big_omega * t).sin();
    // omega^2 - mu^2 cos(2 Omega t) = Omega^2 + mu^2 (1 - cos(2 Omega t))
    let oscillating = (big_omega2 + mu * mu * one_minus_cos) / big_omega2;

    let e4 = (-four * lambda * t).exp();
    let e2 = (-two * lambda * t).exp();
    let bracket = (plus - two * c) * oscillating
        + minus * mu * sin_2wt / big_omega
        + two * spec.r * mu * omega * one_minus_cos / (big_omega2 * s.sqrt());

    Ok(h * h / four * (e4 * (one - plus * c + c * c) + e2 * c * bracket + c * c))
}

/// Linearized uncertainty function for `lambda t << 1`.
pub fn sigma_short_time<T: Real>(
    t: T,
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
) -> T {
    let h = params.hbar();
    h * h / T::lit(4.0) * (T::one() + T::lit(2.0) * sigma_slope_bracket(spec, params) * t)
}

/// `lambda (delta + 1/(delta (1-r^2))) coth eps + mu (delta - 1/(delta (1-r^2))) coth eps - 2 lambda`
pub(crate) fn sigma_slope_bracket<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
) -> T {
    let c = params.coth_epsilon();
    let inv = T::one() / (spec.delta * spec.one_minus_r2());
    params.lambda() * (spec.delta + inv) * c + params.mu() * (spec.delta - inv) * c
        - T::lit(2.0) * params.lambda()
}
