use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::OscillatorParams;
use crate::scalar::Real;

pub const MIN_DIMENSION: usize = 4;

/// Tridiagonal operator stored by bands: `lower[i] = A[i+1][i]`,
/// `upper[i] = A[i][i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T> {
    pub lower: Vec<Complex<T>>,
    pub diag: Vec<Complex<T>>,
    pub upper: Vec<Complex<T>>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> Array2<Complex<T>> {
        let n = self.dim();
        let mut m = Array2::from_elem((n, n), Complex::new(T::zero(), T::zero()));
        for i in 0..n {
            m[[i, i]] = self.diag[i];
            if i + 1 < n {
                m[[i, i + 1]] = self.upper[i];
                m[[i + 1, i]] = self.lower[i];
            }
        }
        m
    }

    /// `out = self * x` for row-major `n x n` buffers.
    pub(crate) fn left_mul(&self, x: &[Complex<T>], out: &mut [Complex<T>]) {
        let n = self.dim();
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            let d = self.diag[i];
            let xi = &x[i * n..(i + 1) * n];
            for (o, v) in row.iter_mut().zip(xi) {
                *o = d * v;
            }
            if i + 1 < n {
                let u = self.upper[i];
                for (o, v) in row.iter_mut().zip(&x[(i + 1) * n..(i + 2) * n]) {
                    *o = *o + u * v;
                }
            }
            if i > 0 {
                let l = self.lower[i - 1];
                for (o, v) in row.iter_mut().zip(&x[(i - 1) * n..i * n]) {
                    *o = *o + l * v;
                }
            }
        }
    }

    /// `out = x * self` for row-major `n x n` buffers.
    pub(crate) fn right_mul(&self, x: &[Complex<T>], out: &mut [Complex<T>]) {
        let n = self.dim();
        for i in 0..n {
            let xr = &x[i * n..(i + 1) * n];
            let row = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                let mut acc = xr[j] * self.diag[j];
                if j > 0 {
                    acc = acc + xr[j - 1] * self.upper[j - 1];
                }
                if j + 1 < n {
                    acc = acc + xr[j + 1] * self.lower[j];
                }
                row[j] = acc;
            }
        }
    }
}

/// Truncated number-basis representation of the oscillator observables.
#[derive(Debug, Clone)]
pub struct FockOperators<T> {
    dim: usize,
    pub(crate) mass: T,
    pub(crate) omega: T,
    pub(crate) hbar: T,
    /// `sqrt(hbar / 2 m omega)`
    pub scale_q: T,
    /// `sqrt(hbar m omega / 2)`
    pub scale_p: T,
    pub q: Array2<Complex<T>>,
    pub p: Array2<Complex<T>>,
    /// `hbar omega (n + 1/2)` on the diagonal.
    pub h0: Array2<Complex<T>>,
    /// `H0 + (mu/2)(qp + pq)`
    pub h: Array2<Complex<T>>,
    pub q2: Array2<Complex<T>>,
    pub p2: Array2<Complex<T>>,
    /// `(qp + pq)/2`
    pub qp_sym: Array2<Complex<T>>,
    pub(crate) q_band: Tridiagonal<T>,
    pub(crate) p_band: Tridiagonal<T>,
    pub(crate) energies: Vec<T>,
}

impl<T: Real> FockOperators<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }
}

fn dense_mul<T: Real>(a: &Array2<Complex<T>>, b: &Array2<Complex<T>>) -> Array2<Complex<T>> {
    let n = a.nrows();
    let zero = Complex::new(T::zero(), T::zero());
    Array2::from_shape_fn((n, n), |(i, j)| {
        (0..n).fold(zero, |acc, k| acc + a[[i, k]] * b[[k, j]])
    })
}

pub fn build_operators<T: Real>(
    params: &OscillatorParams<T>,
    n: usize,
) -> Result<FockOperators<T>> {
    if n < MIN_DIMENSION {
        return Err(Error::Dimension {
            n,
            min: MIN_DIMENSION,
        });
    }
    let h = params.hbar();
    let m = params.mass();
    let w = params.omega();
    let two = T::lit(2.0);
    let scale_q = (h / (two * m * w)).sqrt();
    let scale_p = (h * m * w / two).sqrt();
    let zero = Complex::new(T::zero(), T::zero());

    let ladder: Vec<T> = (1..n).map(|k| T::from_usize_lossy(k).sqrt()).collect();
    let q_band = Tridiagonal {
        lower: ladder
            .iter()
            .map(|&s| Complex::new(scale_q * s, T::zero()))
            .collect(),
        diag: vec![zero; n],
        upper: ladder
            .iter()
            .map(|&s| Complex::new(scale_q * s, T::zero()))
            .collect(),
    };
    // p = i sqrt(hbar m w / 2) (a^dag - a)
    let p_band = Tridiagonal {
        lower: ladder
            .iter()
            .map(|&s| Complex::new(T::zero(), scale_p * s))
            .collect(),
        diag: vec![zero; n],
        upper: ladder
            .iter()
            .map(|&s| Complex::new(T::zero(), -scale_p * s))
            .collect(),
    };
    let energies: Vec<T> = (0..n)
        .map(|k| h * w * (T::from_usize_lossy(k) + T::lit(0.5)))
        .collect();

    let q = q_band.to_dense();
    let p = p_band.to_dense();
    let mut h0 = Array2::from_elem((n, n), zero);
    for (k, &e) in energies.iter().enumerate() {
        h0[[k, k]] = Complex::new(e, T::zero());
    }
    let qp = dense_mul(&q, &p);
    let pq = dense_mul(&p, &q);
    let half = Complex::new(T::lit(0.5), T::zero());
    let qp_sym = (&qp + &pq).mapv(|z| z * half);
    let mu = Complex::new(params.mu(), T::zero());
    let hamiltonian = &h0 + &qp_sym.mapv(|z| z * mu);

    Ok(FockOperators {
        dim: n,
        mass: m,
        omega: w,
        hbar: h,
        scale_q,
        scale_p,
        q2: dense_mul(&q, &q),
        p2: dense_mul(&p, &p),
        q,
        p,
        h0,
        h: hamiltonian,
        qp_sym,
        q_band,
        p_band,
        energies,
    })
}
