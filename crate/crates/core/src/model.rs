//! Physical parameters of the damped oscillator, the Gibbs-bath diffusion
//! coefficients and their validity constraints.
//!
//! All values are immutable once constructed. Construction validates the
//! structural invariants (`m > 0`, `omega > |mu|`, ...); the stronger Gibbs
//! conditions are checked by [`gibbs_coefficients`] and friends, because a
//! closed or hand-built bath is still a legitimate model.

use serde::Serialize;

use crate::error::{Constraint, Result};
use crate::gaussian::GaussianState;
use crate::scalar::{acoth, coth, ge_rel, Real};

/// Action and energy/temperature scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants<T> {
    pub hbar: T,
    pub boltzmann: T,
}

impl<T: Real> Default for Constants<T> {
    fn default() -> Self {
        Self {
            hbar: T::one(),
            boltzmann: T::one(),
        }
    }
}

impl<T: Real> Constants<T> {
    pub fn new(hbar: T, boltzmann: T) -> Result<Self> {
        if !(hbar.is_finite() && hbar > T::zero()) {
            return Err(Constraint::HbarPositive.into());
        }
        if !(boltzmann.is_finite() && boltzmann > T::zero()) {
            return Err(Constraint::BoltzmannPositive.into());
        }
        Ok(Self { hbar, boltzmann })
    }
}

/// How the bath temperature is specified. Either form is stored canonically
/// as an absolute temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature<T> {
    Absolute(T),
    /// `coth(hbar omega / 2 k T)`; the value 1 means `T = 0`.
    CothEpsilon(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillatorParams<T> {
    mass: T,
    omega: T,
    lambda: T,
    mu: T,
    temperature: T,
    #[serde(rename = "coth_epsilon")]
    coth: T,
    constants: Constants<T>,
}

impl<T: Real> OscillatorParams<T> {
    pub fn new(
        mass: T,
        omega: T,
        lambda: T,
        mu: T,
        temperature: Temperature<T>,
        constants: Constants<T>,
    ) -> Result<Self> {
        let constants = Constants::new(constants.hbar, constants.boltzmann)?;
        if !mass.is_finite() || !omega.is_finite() || !lambda.is_finite() || !mu.is_finite() {
            return Err(Constraint::Finite.into());
        }
        if mass <= T::zero() {
            return Err(Constraint::MassPositive.into());
        }
        if omega <= T::zero() {
            return Err(Constraint::OmegaPositive.into());
        }
        if lambda < T::zero() {
            return Err(Constraint::FrictionNonNegative.into());
        }
        if omega <= mu.abs() {
            return Err(Constraint::OmegaGtMu.into());
        }
        let two = T::lit(2.0);
        let (temperature, coth_eps) = match temperature {
            Temperature::Absolute(t) => {
                if t.is_nan() || t < T::zero() || t.is_infinite() {
                    return Err(Constraint::TemperatureNonNegative.into());
                }
                let c = if t == T::zero() {
                    T::one()
                } else {
                    coth(constants.hbar * omega / (two * constants.boltzmann * t))
                };
                (t, c)
            }
            Temperature::CothEpsilon(c) => {
                if c.is_nan() || c < T::one() || c.is_infinite() {
                    return Err(Constraint::CothEpsilonAtLeastOne.into());
                }
                let t = if c == T::one() {
                    T::zero()
                } else {
                    constants.hbar * omega / (two * constants.boltzmann * acoth(c))
                };
                (t, c)
            }
        };
        Ok(Self {
            mass,
            omega,
            lambda,
            mu,
            temperature,
            coth: coth_eps,
            constants,
        })
    }

    /// Natural units (`hbar = k = 1`) with the temperature given as `coth eps`.
    pub fn natural(mass: T, omega: T, lambda: T, mu: T, coth_epsilon: T) -> Result<Self> {
        Self::new(
            mass,
            omega,
            lambda,
            mu,
            Temperature::CothEpsilon(coth_epsilon),
            Constants::default(),
        )
    }

    pub fn mass(&self) -> T {
        self.mass
    }
    pub fn omega(&self) -> T {
        self.omega
    }
    pub fn lambda(&self) -> T {
        self.lambda
    }
    pub fn mu(&self) -> T {
        self.mu
    }
    pub fn temperature(&self) -> T {
        self.temperature
    }
    pub fn constants(&self) -> Constants<T> {
        self.constants
    }
    pub fn hbar(&self) -> T {
        self.constants.hbar
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.temperature == T::zero()
    }

    /// `eps = hbar omega / 2 k T`; `+inf` at `T = 0`.
    pub fn epsilon(&self) -> T {
        if self.is_zero_temperature() {
            T::infinity()
        } else {
            self.constants.hbar * self.omega
                / (T::lit(2.0) * self.constants.boltzmann * self.temperature)
        }
    }

    /// `coth eps`, exactly 1 at `T = 0` and exactly the given value when
    /// constructed from it.
    pub fn coth_epsilon(&self) -> T {
        self.coth
    }

    /// `tanh eps`, exactly 1 at `T = 0`.
    pub fn tanh_epsilon(&self) -> T {
        self.coth.recip()
    }

    /// `tau = 2 k T / hbar omega`, the high-temperature expansion parameter.
    pub fn tau(&self) -> T {
        T::lit(2.0) * self.constants.boltzmann * self.temperature
            / (self.constants.hbar * self.omega)
    }

    /// `Omega = sqrt(omega^2 - mu^2)`.
    pub fn big_omega(&self) -> T {
        (self.omega * self.omega - self.mu * self.mu).sqrt()
    }

    fn with_damping(&self, lambda: T, mu: T) -> Result<Self> {
        let mut p = Self::new(
            self.mass,
            self.omega,
            lambda,
            mu,
            Temperature::Absolute(self.temperature),
            self.constants,
        )?;
        p.coth = self.coth;
        Ok(p)
    }

    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        self.with_damping(lambda, self.mu)
    }

    pub fn with_mu(&self, mu: T) -> Result<Self> {
        self.with_damping(self.lambda, mu)
    }

    pub fn with_temperature(&self, temperature: Temperature<T>) -> Result<Self> {
        Self::new(
            self.mass,
            self.omega,
            self.lambda,
            self.mu,
            temperature,
            self.constants,
        )
    }

    /// Same physical model expressed with different fundamental constants;
    /// the temperature is carried over through `coth eps`.
    pub fn with_constants(&self, constants: Constants<T>) -> Result<Self> {
        Self::new(
            self.mass,
            self.omega,
            self.lambda,
            self.mu,
            Temperature::CothEpsilon(self.coth_epsilon()),
            constants,
        )
    }

    /// The conditions a Gibbs bath places on the parameters: `lambda > |mu|`
    /// and `(lambda^2 - mu^2) coth^2 eps >= lambda^2`.
    pub fn validate_gibbs(&self) -> Result<()> {
        if self.lambda <= self.mu.abs() {
            return Err(Constraint::LambdaGtMu.into());
        }
        if !gibbs_inequality(self) {
            return Err(Constraint::Fundamental.into());
        }
        Ok(())
    }
}

fn gibbs_inequality<T: Real>(params: &OscillatorParams<T>) -> bool {
    let c = params.coth_epsilon();
    let (l, m) = (params.lambda, params.mu);
    ge_rel((l * l - m * m) * c * c, l * l)
}

/// Diffusion rates in momentum, coordinate and the mixed channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionCoefficients<T> {
    pub d_pp: T,
    pub d_qq: T,
    pub d_pq: T,
}

impl<T: Real> DiffusionCoefficients<T> {
    /// Direct construction, unchecked. Use [`Self::check`] against a parameter
    /// set before trusting the result as a Lindblad generator.
    pub fn new(d_pp: T, d_qq: T, d_pq: T) -> Self {
        Self { d_pp, d_qq, d_pq }
    }

    /// No bath: only meaningful together with `lambda = mu = 0`.
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.d_pp == T::zero() && self.d_qq == T::zero() && self.d_pq == T::zero()
    }

    /// `D_pp D_qq - D_pq^2`.
    pub fn determinant(&self) -> T {
        self.d_pp * self.d_qq - self.d_pq * self.d_pq
    }

    pub fn satisfies_fundamental(&self, params: &OscillatorParams<T>) -> bool {
        let h = params.hbar();
        let bound = params.lambda * params.lambda * h * h / T::lit(4.0);
        self.d_pp > T::zero() && self.d_qq > T::zero() && ge_rel(self.determinant(), bound)
    }

    pub fn check(&self, params: &OscillatorParams<T>) -> Result<()> {
        if self.satisfies_fundamental(params) {
            Ok(())
        } else {
            Err(Constraint::Fundamental.into())
        }
    }
}

/// Whether the Gibbs-bath coefficients are admissible for `params`.
pub fn check_gibbs_constraint<T: Real>(params: &OscillatorParams<T>) -> bool {
    params.validate_gibbs().is_ok()
}

/// Diffusion coefficients whose asymptotic state is the Gibbs state of `H0`.
pub fn gibbs_coefficients<T: Real>(
    params: &OscillatorParams<T>,
) -> Result<DiffusionCoefficients<T>> {
    params.validate_gibbs()?;
    let c = params.coth_epsilon();
    let h = params.hbar();
    let half = T::lit(0.5);
    let mw = params.mass * params.omega;
    let coeffs = DiffusionCoefficients {
        d_pp: (params.lambda + params.mu) * half * h * mw * c,
        d_qq: (params.lambda - params.mu) * half * h / mw * c,
        d_pq: T::zero(),
    };
    coeffs.check(params)?;
    Ok(coeffs)
}

/// Long-time covariance under the Gibbs bath; centroid at the origin.
pub fn asymptotic_covariance<T: Real>(params: &OscillatorParams<T>) -> Result<GaussianState<T>> {
    params.validate_gibbs()?;
    let c = params.coth_epsilon();
    let h = params.hbar();
    let mw = params.mass * params.omega;
    let half = T::lit(0.5);
    Ok(GaussianState {
        time: T::infinity(),
        q: T::zero(),
        p: T::zero(),
        qq: h / mw * half * c,
        pp: h * mw * half * c,
        pq: T::zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(lambda: f64, mu: f64, c: f64) -> OscillatorParams<f64> {
        OscillatorParams::natural(1.0, 1.0, lambda, mu, c).unwrap()
    }

    #[test]
    fn gibbs_coefficients_hand_values() {
        let d = gibbs_coefficients(&p(0.2, 0.1, 2.0)).unwrap();
        assert_relative_eq!(d.d_pp, 0.3, max_relative = 1e-12);
        assert_relative_eq!(d.d_qq, 0.1, max_relative = 1e-12);
        assert_eq!(d.d_pq, 0.0);
    }

    #[test]
    fn zero_temperature_ratio() {
        let cold = |mu: f64| {
            OscillatorParams::new(
                2.0,
                1.5,
                0.3,
                mu,
                Temperature::Absolute(0.0),
                Constants::default(),
            )
            .unwrap()
        };
        let params = cold(0.0);
        assert_eq!(params.coth_epsilon(), 1.0);
        assert_eq!(params.tanh_epsilon(), 1.0);
        let d = gibbs_coefficients(&params).unwrap();
        let mw = 2.0 * 1.5;
        assert_relative_eq!(d.d_pp / d.d_qq, mw * mw, max_relative = 1e-14);
        assert_eq!(d.d_pq, 0.0);
        // with coth = 1 any mu != 0 leaves (lambda^2 - mu^2) < lambda^2
        let err = gibbs_coefficients(&cold(0.1)).unwrap_err();
        assert_eq!(err.constraint(), Some(Constraint::Fundamental));
    }

    #[test]
    fn near_boundary_violates_fundamental() {
        let params = p(0.2, 0.199, 1.0000001);
        let err = gibbs_coefficients(&params).unwrap_err();
        assert_eq!(err.constraint(), Some(Constraint::Fundamental));
        assert_eq!(
            err.to_string(),
            "constraint violated: fundamental_constraint"
        );
    }

    #[test]
    fn gibbs_predicate_examples() {
        assert!(check_gibbs_constraint(&p(0.2, 0.1, 2.0)));
        assert!(!check_gibbs_constraint(&p(0.2, 0.19, 1.0)));
        for lambda in [0.01, 0.3, 2.0] {
            for c in [1.0, 1.5, 40.0] {
                assert!(check_gibbs_constraint(&p(lambda, 0.0, c)));
            }
        }
    }

    #[test]
    fn lambda_equal_mu_rejected() {
        let err = gibbs_coefficients(&p(0.2, 0.2, 3.0)).unwrap_err();
        assert_eq!(err.constraint(), Some(Constraint::LambdaGtMu));
        // mu < -lambda would make D_pp negative
        let err = gibbs_coefficients(&p(0.2, -0.3, 3.0)).unwrap_err();
        assert_eq!(err.constraint(), Some(Constraint::LambdaGtMu));
    }

    #[test]
    fn omega_must_exceed_mu() {
        let err = OscillatorParams::natural(1.0, 0.5, 1.0, 0.6, 2.0).unwrap_err();
        assert_eq!(err.constraint(), Some(Constraint::OmegaGtMu));
        assert_eq!(Constraint::OmegaGtMu.name(), "omega_gt_mu");
    }

    #[test]
    fn structural_errors() {
        let c = Constants::default();
        let t = Temperature::Absolute(1.0);
        let cases = [
            (
                OscillatorParams::new(0.0, 1.0, 0.1, 0.0, t, c),
                Constraint::MassPositive,
            ),
            (
                OscillatorParams::new(1.0, -1.0, 0.1, 0.0, t, c),
                Constraint::OmegaPositive,
            ),
            (
                OscillatorParams::new(1.0, 1.0, -0.1, 0.0, t, c),
                Constraint::FrictionNonNegative,
            ),
            (
                OscillatorParams::new(1.0, 1.0, 0.1, 0.0, Temperature::Absolute(-1.0), c),
                Constraint::TemperatureNonNegative,
            ),
            (
                OscillatorParams::new(1.0, 1.0, 0.1, 0.0, Temperature::CothEpsilon(0.5), c),
                Constraint::CothEpsilonAtLeastOne,
            ),
            (
                OscillatorParams::new(
                    1.0,
                    1.0,
                    0.1,
                    0.0,
                    t,
                    Constants {
                        hbar: 0.0,
                        boltzmann: 1.0,
                    },
                ),
                Constraint::HbarPositive,
            ),
        ];
        for (res, want) in cases {
            assert_eq!(res.unwrap_err().constraint(), Some(want));
        }
    }

    #[test]
    fn coth_roundtrip_and_tau() {
        let params = p(0.2, 0.1, 2.0);
        assert_relative_eq!(params.coth_epsilon(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(params.tanh_epsilon(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(params.tau(), 1.0 / params.epsilon(), max_relative = 1e-14);
        let si = params
            .with_constants(Constants::new(1.054e-34, 1.380649e-23).unwrap())
            .unwrap();
        assert_relative_eq!(si.coth_epsilon(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn asymptotic_covariance_hand_values() {
        let s = asymptotic_covariance(&p(0.2, 0.1, 2.0)).unwrap();
        assert_relative_eq!(s.qq, 1.0, max_relative = 1e-14);
        assert_relative_eq!(s.pp, 1.0, max_relative = 1e-14);
        assert_eq!((s.pq, s.q, s.p), (0.0, 0.0, 0.0));

        let zero_t = p(0.2, 0.0, 1.0);
        let s = asymptotic_covariance(&zero_t).unwrap();
        assert_eq!(s.uncertainty(), 0.25);
    }

    #[test]
    fn single_precision_builds() {
        let params = OscillatorParams::<f32>::natural(1.0, 1.0, 0.2, 0.1, 2.0).unwrap();
        let d = gibbs_coefficients(&params).unwrap();
        assert!((d.d_pp - 0.3).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn gibbs_coefficients_satisfy_fundamental(
            lambda in 0.01f64..2.0,
            mu_frac in -0.99f64..0.99,
            c in 1.0f64..20.0,
            mass in 0.1f64..10.0,
            omega_extra in 0.01f64..5.0,
            hbar in 0.1f64..3.0,
        ) {
            let mu = mu_frac * lambda;
            let omega = mu.abs() + omega_extra;
            let params = OscillatorParams::new(
                mass, omega, lambda, mu,
                Temperature::CothEpsilon(c),
                Constants::new(hbar, 1.0).unwrap(),
            ).unwrap();
            if check_gibbs_constraint(&params) {
                let d = gibbs_coefficients(&params).unwrap();
                let bound = lambda * lambda * hbar * hbar / 4.0;
                prop_assert!(d.determinant() >= bound * (1.0 - 1e-12));
                prop_assert!(d.d_pp > 0.0 && d.d_qq > 0.0);
            } else {
                prop_assert!(gibbs_coefficients(&params).is_err());
            }
        }

        #[test]
        fn coth_monotone_and_asymptotic_floor(t1 in 0.0f64..50.0, dt in 1e-3f64..50.0) {
            let mk = |t: f64| OscillatorParams::new(
                1.0, 1.0, 0.5, 0.0, Temperature::Absolute(t), Constants::default()
            ).unwrap();
            let (a, b) = (mk(t1), mk(t1 + dt));
            prop_assert!(b.coth_epsilon() >= a.coth_epsilon());
            prop_assert!(a.coth_epsilon() >= 1.0);
            let s = asymptotic_covariance(&a).unwrap();
            prop_assert!(s.uncertainty() >= 0.25);
            // sigma_qq(inf) 2 m omega / hbar = coth eps
            prop_assert!((s.qq * 2.0 - a.coth_epsilon()).abs() <= 1e-14 * a.coth_epsilon());
        }
    }
}
