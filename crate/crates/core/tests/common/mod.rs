//! Shared test oracles, independent of the library's evaluation paths.

#![allow(dead_code)]

use hopcap::hopfield::{PatternSet, SpinState};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / SQRT_2PI
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive<F: Fn(f64) -> f64 + Copy>(
    f: F,
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
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        return left + right + err / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Gaussian upper tail by adaptive Simpson quadrature on [x, x+40] plus an
/// asymptotic remainder; shares no code with the production evaluator.
/// The tolerance scale comes from a 64-panel composite pre-pass (a 3-point
/// estimate misses the density peak entirely for x << 0).
pub fn gauss_tail_quad(x: f64, rel_tol: f64) -> f64 {
    let b = x + 40.0;
    let f = std_normal_pdf;
    let mut rough = 0.0;
    let h = (b - x) / 64.0;
    for i in 0..64 {
        let a0 = x + h * i as f64;
        rough += simpson(f(a0), f(a0 + 0.5 * h), f(a0 + h), h);
    }
    let tol = rel_tol * rough.abs().max(f64::MIN_POSITIVE);
    let mut integral = 0.0;
    for i in 0..64 {
        let a0 = x + h * i as f64;
        let (fa, fm, fb) = (f(a0), f(a0 + 0.5 * h), f(a0 + h));
        let whole = simpson(fa, fm, fb, h);
        integral += adaptive(f, a0, a0 + h, fa, fm, fb, whole, tol / 64.0, 30);
    }
    // analytic remainder of the outer tail: phi(b)(1/b - 1/b^3 + 3/b^5)
    let remainder = std_normal_pdf(b) * (1.0 / b - 1.0 / b.powi(3) + 3.0 / b.powi(5));
    integral + remainder
}

/// O(N^2 P) double-loop field numerators (exact integers).
pub fn brute_field_numerators(ps: &PatternSet, s: &SpinState) -> Vec<i64> {
    (0..ps.n)
        .map(|k| {
            let mut acc = 0i64;
            for i in 0..ps.n {
                if i == k {
                    continue;
                }
                let mut coupling = 0i64;
                for mu in 0..ps.p {
                    coupling += ps.entry(mu, k) * ps.entry(mu, i);
                }
                acc += coupling * s.spin(i);
            }
            s.spin(k) * acc
        })
        .collect()
}

/// O(N^2 P) double-loop energy numerator 2 N E (exact integer).
pub fn brute_energy_x2n(ps: &PatternSet, s: &SpinState) -> i64 {
    let mut acc = 0i64;
    for j in 0..ps.n {
        for k in 0..ps.n {
            if j == k {
                continue;
            }
            let mut c = 0i64;
            for mu in 0..ps.p {
                c += ps.entry(mu, j) * ps.entry(mu, k);
            }
            acc += c * s.spin(j) * s.spin(k);
        }
    }
    -acc
}

/// Exact pairwise coupling numerator `N J~_kj sigma_k sigma_j`.
pub fn pair_coupling(ps: &PatternSet, s: &SpinState, k: usize, j: usize) -> i64 {
    let mut w = 0i64;
    for mu in 0..ps.p {
        w += ps.entry(mu, k) * ps.entry(mu, j);
    }
    w * s.spin(k) * s.spin(j)
}
