//! Degree of decoherence and the associated time scales.

use std::io::{self, Write};

use serde::{Serialize, Serializer};

use crate::error::Result;
use crate::gaussian::{write_csv_row, GaussianState, InitialStateSpec, Trajectory};
use crate::model::OscillatorParams;
use crate::scalar::Real;

/// `tau` above which the high-temperature forms are considered applicable.
pub const HIGH_TEMPERATURE_THRESHOLD: f64 = 5.0;

/// `t_deco / t_rel` at or above which decoherence is reported as being of the
/// order of relaxation.
pub const ORDER_OF_RELAXATION_RATIO: f64 = 0.1;

/// A time scale that may be absent (no exponential decay).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeScale<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> TimeScale<T> {
    /// `1/(2 rate)` when the rate is positive.
    fn from_rate(rate: T) -> Self {
        if rate > T::zero() && rate.is_finite() {
            TimeScale::Finite(T::one() / (T::lit(2.0) * rate))
        } else {
            TimeScale::Infinite
        }
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            TimeScale::Finite(v) => Some(v),
            TimeScale::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, TimeScale::Infinite)
    }

    /// `self / other`; `None` when both are infinite.
    pub fn ratio(&self, other: &Self) -> Option<Self> {
        match (*self, *other) {
            (TimeScale::Finite(a), TimeScale::Finite(b)) => Some(TimeScale::Finite(a / b)),
            (TimeScale::Finite(_), TimeScale::Infinite) => Some(TimeScale::Finite(T::zero())),
            (TimeScale::Infinite, TimeScale::Finite(_)) => Some(TimeScale::Infinite),
            (TimeScale::Infinite, TimeScale::Infinite) => None,
        }
    }
}

impl<T: Real> Serialize for TimeScale<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TimeScale::Finite(v) => s.serialize_f64(v.to_f64_lossy()),
            TimeScale::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// `hbar / (2 sqrt(sigma))`: 1 for a pure state, tending to 0 as the
/// off-diagonal elements are suppressed.
pub fn delta_qd<T: Real>(state: &GaussianState<T>, hbar: T) -> T {
    hbar / (T::lit(2.0) * state.uncertainty().sqrt())
}

/// `tanh(hbar omega / 2 k T)`.
pub fn delta_qd_asymptotic<T: Real>(params: &OscillatorParams<T>) -> T {
    params.tanh_epsilon()
}

/// High-temperature form `hbar omega / 2 k T = 1/tau`.
pub fn delta_qd_asymptotic_high_t<T: Real>(params: &OscillatorParams<T>) -> T {
    T::one() / params.tau()
}

fn r_ratio<T: Real>(spec: &InitialStateSpec<T>) -> T {
    spec.r * spec.r / (spec.delta * spec.one_minus_r2())
}

/// Rate `B` in `gamma(t) ~ gamma(0) (1 + 2 B t)`.
pub fn decoherence_rate<T: Real>(spec: &InitialStateSpec<T>, params: &OscillatorParams<T>) -> T {
    let c = params.coth_epsilon();
    let rr = r_ratio(spec);
    let (lambda, mu) = (params.lambda(), params.mu());
    lambda * (spec.delta + rr) * c + mu * (spec.delta - rr) * c
        - lambda
        - mu
        - params.omega() * spec.r / (spec.delta * spec.one_minus_r2().sqrt())
}

/// Linearized off-diagonal coefficient `gamma(t)` for short times.
///
/// The prefactor is `+m omega / (4 hbar delta)`, the value `gamma(0)` takes
/// for every correlated coherent state.
pub fn gamma_short_time<T: Real>(
    t: T,
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
) -> T {
    let g0 = params.mass() * params.omega() / (T::lit(4.0) * params.hbar() * spec.delta);
    g0 * (T::one() + T::lit(2.0) * decoherence_rate(spec, params) * t)
}

pub fn decoherence_time<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
) -> Result<TimeScale<T>> {
    spec.validate()?;
    params.validate_gibbs()?;
    Ok(TimeScale::from_rate(decoherence_rate(spec, params)))
}

/// Uncorrelated (`r = 0`) reduction; `None` when `r != 0`.
pub fn decoherence_time_r0<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
) -> Option<TimeScale<T>> {
    (spec.r == T::zero()).then(|| {
        let rate =
            (params.lambda() + params.mu()) * (spec.delta * params.coth_epsilon() - T::one());
        TimeScale::from_rate(rate)
    })
}

/// `T = 0`, `mu = 0`, `r = 0` reduction `1/(2 lambda (delta - 1))`.
pub fn decoherence_time_zero_temperature<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
) -> Option<TimeScale<T>> {
    (params.is_zero_temperature() && params.mu() == T::zero() && spec.r == T::zero())
        .then(|| TimeScale::from_rate(params.lambda() * (spec.delta - T::one())))
}

/// High-temperature form with `coth eps -> tau`, dropping the
/// temperature-independent terms.
pub fn decoherence_time_high_temperature<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
) -> TimeScale<T> {
    let rr = r_ratio(spec);
    let rate =
        (params.lambda() * (spec.delta + rr) + params.mu() * (spec.delta - rr)) * params.tau();
    TimeScale::from_rate(rate)
}

/// `hbar omega / (4 (lambda + mu) delta k T)`; valid for `r = 0`.
pub fn decoherence_time_high_temperature_r0<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
) -> TimeScale<T> {
    let k = params.constants().boltzmann;
    let denom =
        T::lit(4.0) * (params.lambda() + params.mu()) * spec.delta * k * params.temperature();
    if denom > T::zero() {
        TimeScale::Finite(params.hbar() * params.omega() / denom)
    } else {
        TimeScale::Infinite
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluctuationTime<T: Real> {
    pub t_d: TimeScale<T>,
    /// `tau` exceeded [`HIGH_TEMPERATURE_THRESHOLD`]; otherwise the value is
    /// outside the regime the formula was derived for.
    pub high_temperature: bool,
}

/// Time after which thermal fluctuations in `sigma(t)` match the quantum ones
/// (high-temperature form).
pub fn thermal_fluctuation_time<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
) -> FluctuationTime<T> {
    let inv = T::one() / (spec.delta * spec.one_minus_r2());
    let rate =
        params.tau() * (params.lambda() * (spec.delta + inv) + params.mu() * (spec.delta - inv));
    FluctuationTime {
        t_d: TimeScale::from_rate(rate),
        high_temperature: params.tau() > T::lit(HIGH_TEMPERATURE_THRESHOLD),
    }
}

/// `t_rel = 1/lambda`.
pub fn relaxation_time<T: Real>(params: &OscillatorParams<T>) -> TimeScale<T> {
    if params.lambda() > T::zero() {
        TimeScale::Finite(T::one() / params.lambda())
    } else {
        TimeScale::Infinite
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeRatios<T: Real> {
    pub t_deco_over_t_rel: Option<TimeScale<T>>,
    pub t_deco_over_t_d: Option<TimeScale<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeFlags {
    pub tau: f64,
    pub high_temperature: bool,
    pub zero_temperature: bool,
    pub r_zero: bool,
    pub mu_zero: bool,
    pub decoherence_occurs: bool,
    pub t_deco_order_of_t_rel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoherenceReport<T: Real> {
    #[serde(serialize_with = "as_f64")]
    pub delta_qd_infinity: T,
    pub t_deco: TimeScale<T>,
    pub t_deco_r0: Option<TimeScale<T>>,
    #[serde(rename = "t_deco_T0")]
    pub t_deco_t0: Option<TimeScale<T>>,
    #[serde(rename = "t_deco_highT")]
    pub t_deco_high_t: TimeScale<T>,
    pub t_d: TimeScale<T>,
    pub t_rel: TimeScale<T>,
    pub ratios: TimeRatios<T>,
    pub regime_flags: RegimeFlags,
    #[serde(skip)]
    pub delta_qd_samples: Vec<(T, T)>,
}

fn as_f64<T: Real, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(v.to_f64_lossy())
}

impl<T: Real> DecoherenceReport<T> {
    pub fn with_samples(mut self, trajectory: &Trajectory<T>, hbar: T) -> Self {
        self.delta_qd_samples = delta_qd_series(trajectory, hbar);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report holds only numbers, strings and booleans")
    }
}

pub fn timescale_report<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
) -> Result<DecoherenceReport<T>> {
    let t_deco = decoherence_time(spec, params)?;
    let fluct = thermal_fluctuation_time(spec, params);
    let t_rel = relaxation_time(params);
    let t_deco_high_t = if spec.r == T::zero() {
        decoherence_time_high_temperature_r0(spec, params)
    } else {
        decoherence_time_high_temperature(spec, params)
    };
    let over_rel = t_deco.ratio(&t_rel);
    let order_of_rel = match over_rel {
        Some(TimeScale::Finite(x)) => x >= T::lit(ORDER_OF_RELAXATION_RATIO),
        Some(TimeScale::Infinite) | None => true,
    };
    Ok(DecoherenceReport {
        delta_qd_infinity: delta_qd_asymptotic(params),
        t_deco,
        t_deco_r0: decoherence_time_r0(spec, params),
        t_deco_t0: decoherence_time_zero_temperature(spec, params),
        t_deco_high_t,
        t_d: fluct.t_d,
        t_rel,
        ratios: TimeRatios {
            t_deco_over_t_rel: over_rel,
            t_deco_over_t_d: t_deco.ratio(&fluct.t_d),
        },
        regime_flags: RegimeFlags {
            tau: params.tau().to_f64_lossy(),
            high_temperature: fluct.high_temperature,
            zero_temperature: params.is_zero_temperature(),
            r_zero: spec.r == T::zero(),
            mu_zero: params.mu() == T::zero(),
            decoherence_occurs: !t_deco.is_infinite(),
            t_deco_order_of_t_rel: order_of_rel,
        },
        delta_qd_samples: Vec::new(),
    })
}

pub fn delta_qd_series<T: Real>(trajectory: &Trajectory<T>, hbar: T) -> Vec<(T, T)> {
    trajectory
        .iter()
        .map(|s| (s.time, delta_qd(s, hbar)))
        .collect()
}

pub const DELTA_QD_CSV_HEADER: &str = "t,delta_qd";

pub fn write_delta_qd_csv<T: Real, W: Write>(series: &[(T, T)], mut out: W) -> io::Result<()> {
    writeln!(out, "{DELTA_QD_CSV_HEADER}")?;
    for &(t, d) in series {
        write_csv_row(&mut out, &[t, d])?;
    }
    Ok(())
}
