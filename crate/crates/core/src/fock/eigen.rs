use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex;

use crate::scalar::Real;

/// Eigenvalues of a Hermitian matrix, ascending. Only the Hermitian part of
/// the input is used; the solve runs in double precision.
pub fn hermitian_eigenvalues<T: Real>(m: &Array2<Complex<T>>) -> Vec<T> {
    let n = m.nrows();
    let to64 = |z: Complex<T>| Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy());
    let dense = DMatrix::from_fn(n, n, |i, j| {
        (to64(m[[i, j]]) + to64(m[[j, i]]).conj()) * 0.5
    });
    let mut ev: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.into_iter().map(T::lit).collect()
}
