//! Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: usize = 50;

/// Returns `(kronrod, |kronrod - gauss|)` on `[a, b]`.
fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = (b - a) * T::lit(0.5);
    let centre = (a + b) * T::lit(0.5);
    let fc = f(centre);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for (j, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * T::lit(x);
        let sum = f(centre - dx) + f(centre + dx);
        kronrod = kronrod + sum * T::lit(w);
        if j % 2 == 1 {
            gauss = gauss + sum * T::lit(WG[j / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrate `f` over `[a, b]` to an absolute error target `tol`.
///
/// Bisection stops at a fixed depth; the returned estimate is then the best
/// available rather than guaranteed to meet `tol`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T) -> T {
    let (whole, err) = gk15(&mut f, a, b);
    refine(&mut f, a, b, whole, err, tol, 0)
}

fn refine<T: Real, F: FnMut(T) -> T>(
    f: &mut F,
    a: T,
    b: T,
    whole: T,
    err: T,
    tol: T,
    depth: usize,
) -> T {
    if err <= tol || depth >= MAX_DEPTH {
        return whole;
    }
    let mid = (a + b) * T::lit(0.5);
    let (left, el) = gk15(f, a, mid);
    let (right, er) = gk15(f, mid, b);
    let sub_tol = tol * T::lit(0.5);
    refine(f, a, mid, left, el, sub_tol, depth + 1)
        + refine(f, mid, b, right, er, sub_tol, depth + 1)
}

/// Iterated integral over the rectangle `[ax, bx] x [ay, by]`.
pub fn integrate_2d<T: Real, F: FnMut(T, T) -> T>(
    mut f: F,
    (ax, bx): (T, T),
    (ay, by): (T, T),
    tol: T,
) -> T {
    let inner_tol = tol / ((bx - ax).abs().max(T::one()) * T::lit(4.0));
    integrate(|x| integrate(|y| f(x, y), ay, by, inner_tol), ax, bx, tol)
}
