//! Coordinate representation of the Gaussian density matrix.
//!
//! With `S = (q + q')/2` and `D = q - q'` the matrix element is
//!
//! ```text
//! rho(S, D) = sqrt(alpha/pi) exp[-alpha (S - <q>)^2 - gamma D^2
//!                                + i beta (S - <q>) D + i <p> D / hbar]
//! alpha = 1/(2 s_qq),  gamma = sigma/(2 hbar^2 s_qq),  beta = s_pq/(hbar s_qq)
//! ```
//!
//! The real part of the exponent is even in `D` and the imaginary part odd,
//! so swapping `q` and `q'` conjugates the value bit-for-bit.

use std::io::{self, Write};

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{write_csv_row, GaussianState, Trajectory};
use crate::model::{DiffusionCoefficients, OscillatorParams};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrixPoint<T> {
    pub q: T,
    pub q_prime: T,
    pub value: Complex<T>,
}

/// Coefficients of the quadratic form in `(S, D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaDeltaCoefficients<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

impl<T: Real> SigmaDeltaCoefficients<T> {
    /// `(1/2) sqrt(alpha/gamma)`
    pub fn delta_qd(&self) -> T {
        T::lit(0.5) * (self.alpha / self.gamma).sqrt()
    }
}

pub fn coefficients<T: Real>(state: &GaussianState<T>, hbar: T) -> SigmaDeltaCoefficients<T> {
    let two = T::lit(2.0);
    SigmaDeltaCoefficients {
        alpha: T::one() / (two * state.qq),
        gamma: state.uncertainty() / (two * hbar * hbar * state.qq),
        beta: state.pq / (hbar * state.qq),
    }
}

fn normalization<T: Real>(state: &GaussianState<T>) -> T {
    (T::one() / (T::lit(2.0) * T::PI() * state.qq)).sqrt()
}

fn from_exponent<T: Real>(norm: T, re: T, im: T) -> Complex<T> {
    let mag = norm * re.exp();
    Complex::new(mag * im.cos(), mag * im.sin())
}

/// `<q|rho|q'>` for the Gaussian state.
pub fn rho_element<T: Real>(state: &GaussianState<T>, hbar: T, q: T, q_prime: T) -> Complex<T> {
    let two = T::lit(2.0);
    let centre = (q + q_prime) / two - state.q;
    let diff = q - q_prime;
    let re = -centre * centre / (two * state.qq)
        - state.uncertainty() / (two * hbar * hbar * state.qq) * diff * diff;
    let im = diff * (state.pq / (hbar * state.qq) * centre + state.p / hbar);
    from_exponent(normalization(state), re, im)
}

/// The same element addressed by `S = (q+q')/2` and `D = q - q'`.
pub fn rho_sigma_delta<T: Real>(
    state: &GaussianState<T>,
    hbar: T,
    sigma: T,
    delta: T,
) -> Complex<T> {
    let SigmaDeltaCoefficients { alpha, beta, gamma } = coefficients(state, hbar);
    let centre = sigma - state.q;
    let re = -alpha * centre * centre - gamma * delta * delta;
    let im = delta * (beta * centre + state.p / hbar);
    from_exponent(alpha.sqrt() / T::PI().sqrt(), re, im)
}

/// Long-time thermal density matrix; real and symmetric.
pub fn steady_state_element<T: Real>(params: &OscillatorParams<T>, q: T, q_prime: T) -> Result<T> {
    params.validate_gibbs()?;
    let c = params.coth_epsilon();
    let h = params.hbar();
    let mw = params.mass() * params.omega();
    let s = q + q_prime;
    let d = q - q_prime;
    let norm = (mw / (T::PI() * h * c)).sqrt();
    Ok(norm * (-(mw / (T::lit(4.0) * h)) * (s * s / c + d * d * c)).exp())
}

/// How the mixed-diffusion term of the coordinate-space equation is scaled.
///
/// The two forms differ by a factor `hbar^2`; they coincide when `hbar = 1`
/// or `D_pq = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedDiffusionScaling {
    /// `-2 i D_pq hbar (q - q') (d_q + d_q') rho`
    TimesHbar,
    /// `-2 i (D_pq / hbar) (q - q') (d_q + d_q') rho`
    OverHbar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualPoint<T> {
    /// Sample time the residual was evaluated at.
    pub time: T,
    pub q: T,
    pub q_prime: T,
    /// `d rho/dt - rhs`.
    pub residual: Complex<T>,
    /// Largest magnitude among `d rho/dt` and the individual right-hand-side
    /// terms.
    pub scale: T,
}

impl<T: Real> ResidualPoint<T> {
    pub fn normalized(&self) -> T {
        if self.scale > T::zero() {
            self.residual.norm() / self.scale
        } else {
            self.residual.norm()
        }
    }
}

/// Individual right-hand-side terms of the coordinate-space master equation
/// evaluated on the Gaussian at `state`, in order: kinetic, potential,
/// `(lambda+mu)` friction, `(lambda-mu)` friction, `D_pp`, `D_qq`, `D_pq`.
pub fn coordinate_rhs_terms<T: Real>(
    state: &GaussianState<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    q: T,
    q_prime: T,
    scaling: MixedDiffusionScaling,
) -> [Complex<T>; 7] {
    let h = params.hbar();
    let m = params.mass();
    let w = params.omega();
    let (lambda, mu) = (params.lambda(), params.mu());
    let two = T::lit(2.0);
    let i = Complex::<T>::i();
    let re = |x: T| Complex::new(x, T::zero());

    let SigmaDeltaCoefficients { alpha, beta, gamma } = coefficients(state, h);
    let sigma = (q + q_prime) / two;
    let delta = q - q_prime;
    let centre = sigma - state.q;

    // derivatives of the exponent in (S, D)
    let e_s = Complex::new(-two * alpha * centre, beta * delta);
    let e_d = Complex::new(-two * gamma * delta, beta * centre + state.p / h);
    let e_ss = re(-two * alpha);
    let e_sd = Complex::new(T::zero(), beta);

    let rho = rho_element(state, h, q, q_prime);
    let mixed = match scaling {
        MixedDiffusionScaling::TimesHbar => coeffs.d_pq * h,
        MixedDiffusionScaling::OverHbar => coeffs.d_pq / h,
    };

    [
        // (i hbar / 2m)(d_q^2 - d_q'^2) = (i hbar / 2m) 2 d_S d_D
        i * re(h / (two * m)) * (e_sd + e_s * e_d) * re(two) * rho,
        // -(i m w^2 / 2 hbar)(q^2 - q'^2)
        -i * re(m * w * w / (two * h) * two * sigma * delta) * rho,
        // -(1/2)(lambda+mu)(q-q')(d_q - d_q') = -(lambda+mu) D d_D
        -re((lambda + mu) * delta) * e_d * rho,
        // (1/2)(lambda-mu)[(q+q')(d_q + d_q') + 2] = (lambda-mu)[S d_S + 1]
        re(lambda - mu) * (re(sigma) * e_s + re(T::one())) * rho,
        re(-coeffs.d_pp / (h * h) * delta * delta) * rho,
        re(coeffs.d_qq) * (e_ss + e_s * e_s) * rho,
        -i * re(two * mixed * delta) * e_s * rho,
    ]
}

/// Residual of the coordinate-space master equation on the Gaussian solution
/// stored in `trajectory`.
///
/// `t` is snapped to the nearest trajectory sample, which must have a
/// neighbour on each side; the time derivative is the three-point central
/// difference across those neighbours, spatial derivatives are analytic.
pub fn pde_residual<T: Real>(
    trajectory: &Trajectory<T>,
    params: &OscillatorParams<T>,
    coeffs: &DiffusionCoefficients<T>,
    q: T,
    q_prime: T,
    t: T,
    scaling: MixedDiffusionScaling,
) -> Result<ResidualPoint<T>> {
    let samples = trajectory.samples();
    let k = trajectory.nearest_index(t);
    if samples.len() < 3 || k == 0 || k + 1 >= samples.len() {
        return Err(Error::TimeOutOfRange {
            t: t.to_f64_lossy(),
            start: samples.get(1).map_or(f64::NAN, |s| s.time.to_f64_lossy()),
            end: samples
                .len()
                .checked_sub(2)
                .map_or(f64::NAN, |i| samples[i].time.to_f64_lossy()),
        });
    }
    let h = params.hbar();
    let (prev, here, next) = (&samples[k - 1], &samples[k], &samples[k + 1]);
    let h1 = here.time - prev.time;
    let h2 = next.time - here.time;
    let rho = |s: &GaussianState<T>| rho_element(s, h, q, q_prime);
    let w_prev = -h2 / (h1 * (h1 + h2));
    let w_here = (h2 - h1) / (h1 * h2);
    let w_next = h1 / (h2 * (h1 + h2));
    let drho_dt = rho(prev) * w_prev + rho(here) * w_here + rho(next) * w_next;

    let terms = coordinate_rhs_terms(here, params, coeffs, q, q_prime, scaling);
    let rhs = terms
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
    let scale = terms.iter().map(|z| z.norm()).fold(drho_dt.norm(), T::max);
    Ok(ResidualPoint {
        time: here.time,
        q,
        q_prime,
        residual: drho_dt - rhs,
        scale,
    })
}

/// Uniform square grid for matrix-element dumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub min: T,
    pub max: T,
    pub points: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn coordinates(&self) -> Vec<T> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.min],
            n => {
                let step = (self.max - self.min) / T::from_usize_lossy(n - 1);
                (0..n)
                    .map(|i| {
                        if i == n - 1 {
                            self.max
                        } else {
                            self.min + step * T::from_usize_lossy(i)
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn sample(&self, mut f: impl FnMut(T, T) -> Complex<T>) -> Vec<DensityMatrixPoint<T>> {
        let xs = self.coordinates();
        let mut out = Vec::with_capacity(xs.len() * xs.len());
        for &q in &xs {
            for &q_prime in &xs {
                out.push(DensityMatrixPoint {
                    q,
                    q_prime,
                    value: f(q, q_prime),
                });
            }
        }
        out
    }
}

pub const GRID_CSV_HEADER: &str = "q,qprime,re,im,abs";

pub fn write_grid_csv<T: Real, W: Write>(
    points: &[DensityMatrixPoint<T>],
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "{GRID_CSV_HEADER}")?;
    for p in points {
        write_csv_row(
            &mut out,
            &[p.q, p.q_prime, p.value.re, p.value.im, p.value.norm()],
        )?;
    }
    Ok(())
}
