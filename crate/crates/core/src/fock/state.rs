use ndarray::Array2;
use num_complex::Complex;

use super::eigen::hermitian_eigenvalues;
use super::operators::FockOperators;
use crate::error::{Error, Result};
use crate::gaussian::{initial_state, GaussianState, InitialStateSpec};
use crate::model::OscillatorParams;
use crate::scalar::Real;

/// Number-basis density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<T> {
    pub matrix: Array2<Complex<T>>,
}

impl<T: Real> DensityOperator<T> {
    pub fn new(matrix: Array2<Complex<T>>) -> Self {
        Self { matrix }
    }

    /// `|k><k|`
    pub fn number_state(dim: usize, k: usize) -> Self {
        let mut m = Array2::from_elem((dim, dim), Complex::new(T::zero(), T::zero()));
        m[[k, k]] = Complex::new(T::one(), T::zero());
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex<T> {
        self.matrix
            .diag()
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |a, &b| a + b)
    }

    /// `max |rho_ij - conj(rho_ji)|`
    pub fn hermiticity_error(&self) -> T {
        let n = self.dim();
        let mut worst = T::zero();
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// `Tr(rho A)`
    pub fn expectation(&self, op: &Array2<Complex<T>>) -> Complex<T> {
        let n = self.dim();
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            for j in 0..n {
                acc = acc + self.matrix[[i, j]] * op[[j, i]];
            }
        }
        acc
    }

    /// `Tr(rho^2)`
    pub fn purity(&self) -> T {
        // Tr(rho^2) = sum_ij rho_ij rho_ji = sum_ij |rho_ij|^2 for Hermitian rho
        self.matrix.iter().fold(T::zero(), |a, z| a + z.norm_sqr())
    }

    pub fn populations(&self) -> Vec<T> {
        self.matrix.diag().iter().map(|z| z.re).collect()
    }

    /// Population of the two highest retained levels.
    pub fn leakage(&self) -> T {
        let n = self.dim();
        self.matrix[[n - 1, n - 1]].re.abs() + self.matrix[[n - 2, n - 2]].re.abs()
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues().first().copied().unwrap_or_else(T::zero)
    }

    /// First and second moments, with `time` attached.
    pub fn moments(&self, ops: &FockOperators<T>, time: T) -> GaussianState<T> {
        let q = self.expectation(&ops.q).re;
        let p = self.expectation(&ops.p).re;
        GaussianState {
            time,
            q,
            p,
            qq: self.expectation(&ops.q2).re - q * q,
            pp: self.expectation(&ops.p2).re - p * p,
            pq: self.expectation(&ops.qp_sym).re - q * p,
        }
    }
}

/// Thermal state of the free oscillator at the bath temperature, normalized
/// within the truncated basis.
pub fn gibbs_density<T: Real>(params: &OscillatorParams<T>, dim: usize) -> DensityOperator<T> {
    let c = params.coth_epsilon();
    // exp(-2 eps) = (c - 1)/(c + 1)
    let x = (c - T::one()) / (c + T::one());
    let mut weights = Vec::with_capacity(dim);
    let mut w = T::one();
    for _ in 0..dim {
        weights.push(w);
        w = w * x;
    }
    let norm = weights.iter().fold(T::zero(), |a, &b| a + b);
    let mut m = Array2::from_elem((dim, dim), Complex::new(T::zero(), T::zero()));
    for (k, w) in weights.into_iter().enumerate() {
        m[[k, k]] = Complex::new(w / norm, T::zero());
    }
    DensityOperator { matrix: m }
}

/// Number-basis wavefunctions `psi_0 .. psi_{dim-1}` at position `q`.
fn hermite_functions<T: Real>(ops: &FockOperators<T>, q: T, out: &mut [T]) {
    let xi = q * (ops.mass * ops.omega / ops.hbar).sqrt();
    let norm = (ops.mass * ops.omega / (T::PI() * ops.hbar)).sqrt().sqrt();
    let two = T::lit(2.0);
    out[0] = norm * (-xi * xi / two).exp();
    if out.len() > 1 {
        out[1] = two.sqrt() * xi * out[0];
    }
    for n in 1..out.len() - 1 {
        let nf = T::from_usize_lossy(n);
        let np1 = nf + T::one();
        out[n + 1] = (two / np1).sqrt() * xi * out[n] - (nf / np1).sqrt() * out[n - 1];
    }
}

/// Pure correlated coherent state projected onto the truncated basis.
///
/// Leakage is the larger of the norm lost to truncation and the population
/// of the two highest levels; it must not exceed `leakage_budget`.
pub fn correlated_coherent_density<T: Real>(
    spec: &InitialStateSpec<T>,
    params: &OscillatorParams<T>,
    ops: &FockOperators<T>,
    leakage_budget: T,
) -> Result<DensityOperator<T>> {
    let moments = initial_state(spec, params)?;
    let n = ops.dim();
    let h = ops.hbar;
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let width = moments.qq.sqrt();
    let alpha = spec.r / spec.one_minus_r2().sqrt();

    let half_range = T::lit(14.0) * width;
    let k_max = (spec.p0.abs()
        + T::lit(14.0) * moments.pp.sqrt()
        + (T::from_usize_lossy(2 * n + 1) * h * ops.mass * ops.omega).sqrt())
        / h;
    let dq = (T::one() / (four * k_max)).min(half_range / T::lit(200.0));
    let points = (two * half_range / dq)
        .ceil()
        .to_usize()
        .unwrap_or(0)
        .max(2);
    let dq = two * half_range / T::from_usize_lossy(points);

    let amp = (two * T::PI() * moments.qq).sqrt().sqrt().recip();
    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); n];
    let mut psi = vec![T::zero(); n];
    for k in 0..=points {
        let q = spec.q0 - half_range + dq * T::from_usize_lossy(k);
        let x = q - spec.q0;
        let g = amp * (-x * x / (four * moments.qq)).exp();
        let phase = alpha * x * x / (four * moments.qq) + spec.p0 * q / h;
        let wave = Complex::new(g * phase.cos(), g * phase.sin());
        let w = if k == 0 || k == points { dq / two } else { dq };
        hermite_functions(ops, q, &mut psi);
        for (c, &f) in coeffs.iter_mut().zip(&psi) {
            *c = *c + wave * (f * w);
        }
    }

    let captured = coeffs.iter().fold(T::zero(), |a, c| a + c.norm_sqr());
    let deficit = (T::one() - captured).max(T::zero());
    let top = coeffs[n - 1].norm_sqr() + coeffs[n - 2].norm_sqr();
    let leakage = deficit.max(top);
    if !(leakage <= leakage_budget) {
        return Err(Error::LeakageExceeded {
            n,
            leakage: leakage.to_f64_lossy(),
            budget: leakage_budget.to_f64_lossy(),
            suggested_n: 2 * n,
        });
    }
    let scale = captured.sqrt().recip();
    let c: Vec<Complex<T>> = coeffs.iter().map(|z| z * scale).collect();
    let matrix = Array2::from_shape_fn((n, n), |(i, j)| c[i] * c[j].conj());
    Ok(DensityOperator { matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::operators::build_operators;

    fn params() -> OscillatorParams<f64> {
        OscillatorParams::<f64>::natural(1.0, 1.0, 0.2, 0.1, 2.0).unwrap()
    }

    #[test]
    fn ground_state_from_unit_squeezing() {
        let p = params();
        let ops = build_operators(&p, 20).unwrap();
        let spec = InitialStateSpec::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let rho = correlated_coherent_density(&spec, &p, &ops, 1e-8).unwrap();
        let ground = DensityOperator::number_state(20, 0);
        for (a, b) in rho.matrix.iter().zip(ground.matrix.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn squeezed_correlated_moments() {
        let p = OscillatorParams::<f64>::natural(1.0, 1.0, 0.2, 0.1, 2.0).unwrap();
        let ops = build_operators(&p, 80).unwrap();
        let spec = InitialStateSpec::new(2.0, 0.5, 0.0, 0.0).unwrap();
        let rho = correlated_coherent_density(&spec, &p, &ops, 1e-8).unwrap();
        let m = rho.moments(&ops, 0.0);
        let want = initial_state(&spec, &p).unwrap();
        assert!((m.qq - want.qq).abs() < 1e-8, "{} {}", m.qq, want.qq);
        assert!((m.pp - want.pp).abs() < 1e-8, "{} {}", m.pp, want.pp);
        assert!((m.pq - want.pq).abs() < 1e-8, "{} {}", m.pq, want.pq);
        assert!((rho.purity() - 1.0).abs() < 1e-10);
        assert!(rho.hermiticity_error() < 1e-14);
    }

    #[test]
    fn displaced_state_moments_with_units() {
        let p = OscillatorParams::<f64>::natural(2.0, 0.5, 0.2, 0.1, 2.0)
            .unwrap()
            .with_constants(crate::model::Constants::new(0.7, 1.0).unwrap())
            .unwrap();
        let ops = build_operators(&p, 60).unwrap();
        let spec = InitialStateSpec::new(1.5, -0.3, 1.0, -0.5).unwrap();
        let rho = correlated_coherent_density(&spec, &p, &ops, 1e-8).unwrap();
        let m = rho.moments(&ops, 0.0);
        let want = initial_state(&spec, &p).unwrap();
        for (a, b) in [
            (m.q, want.q),
            (m.p, want.p),
            (m.qq, want.qq),
            (m.pp, want.pp),
            (m.pq, want.pq),
        ] {
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn too_small_basis_leaks() {
        let p = params();
        let ops = build_operators(&p, 6).unwrap();
        let spec = InitialStateSpec::new(2.0, 0.5, 1.0, 0.0).unwrap();
        let err = correlated_coherent_density(&spec, &p, &ops, 1e-8).unwrap_err();
        assert!(matches!(
            err,
            Error::LeakageExceeded {
                n: 6,
                suggested_n: 12,
                ..
            }
        ));
    }

    #[test]
    fn gibbs_purity_and_moments() {
        let p = params();
        let ops = build_operators(&p, 60).unwrap();
        let rho = gibbs_density(&p, 60);
        assert!((rho.purity() - 0.5).abs() < 1e-12);
        let m = rho.moments(&ops, 0.0);
        assert!((m.qq - 1.0).abs() < 1e-10 && (m.pp - 1.0).abs() < 1e-10 && m.pq.abs() < 1e-14);
        assert!(rho.min_eigenvalue() > 0.0);
    }

    #[test]
    fn ground_state_energy() {
        let p = params();
        let ops = build_operators(&p, 10).unwrap();
        let rho = DensityOperator::<f64>::number_state(10, 0);
        assert!((rho.expectation(&ops.h0).re - 0.5).abs() < 1e-15);
    }
}
