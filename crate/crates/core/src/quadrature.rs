//! One-dimensional quadrature helpers and deterministic reductions.

use rayon::prelude::*;

use crate::error::Result;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫_0^a sin^m(t) dt`, by the usual reduction formula.
pub fn sin_power_integral(m: usize, a: f64) -> f64 {
    match m {
        0 => a,
        1 => 1.0 - a.cos(),
        _ => {
            let mf = m as f64;
            -a.sin().powi(m as i32 - 1) * a.cos() / mf
                + (mf - 1.0) / mf * sin_power_integral(m - 2, a)
        }
    }
}

/// Sum of `f(i)` for `i in 0..count`, evaluated in parallel but reduced in index order,
/// so the result does not depend on the thread count.
pub fn ordered_parallel_sum<F>(count: usize, f: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    let parts: Vec<Result<f64>> = (0..count).into_par_iter().map(f).collect();
    let mut total = 0.0;
    for part in parts {
        total += part?;
    }
    Ok(total)
}

/// Maximum of `f(i)` over `0..count`; NaN-free inputs assumed, +∞ propagates.
pub fn ordered_parallel_max<F>(count: usize, f: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    let parts: Vec<Result<f64>> = (0..count).into_par_iter().map(f).collect();
    let mut best = f64::NEG_INFINITY;
    for part in parts {
        best = best.max(part?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn simpson_polynomial_and_root() {
        let v = adaptive_simpson(&|x: f64| x * x, 0.0, 1.0, 1e-14);
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
        let v = adaptive_simpson(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn sin_powers_match_simpson() {
        for m in 0..6 {
            for &a in &[0.1, 1.0, PI] {
                let exact = sin_power_integral(m, a);
                let num = adaptive_simpson(&|t: f64| t.sin().powi(m as i32), 0.0, a, 1e-13);
                assert!((exact - num).abs() < 1e-10, "m={m} a={a}");
            }
        }
    }

    #[test]
    fn ordered_sum_is_bit_stable() {
        let f = |i: usize| Ok(1.0 / (1.0 + i as f64));
        let a = ordered_parallel_sum(10_000, f).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| ordered_parallel_sum(10_000, f)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
