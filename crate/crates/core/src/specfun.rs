//! Gaussian tail numerics.
//!
//! `H(x) = P[N(0,1) > x]` is the upper tail of the standard normal,
//! `A(x) = -(log H)'(x) = phi(x)/H(x)` the associated hazard (Mills-ratio
//! reciprocal). Everything downstream composes `log H` and `A`, so both are
//! evaluated in log space and stay finite for arguments up to |x| ~ 1e4:
//!
//! * |x| <= 8: `H` through a Cody-style rational erfc, `log H` through
//!   `ln` on the positive side and `log1p` of the reflected tail on the
//!   negative side;
//! * x > 8: scaled-tail representation `log H = -x^2/2 - log sqrt(2 pi)
//!   - log T(x)` with `T` the Laplace continued fraction for `1/R(x)`
//!   (also directly `A(x) = T(x)`, which avoids the 0/0 of the raw ratio
//!   past x ~ 37);
//! * x < -8: `log1p` of the reflected tail; when that tail underflows the
//!   result is clamped to the smallest subnormal so strict negativity and
//!   monotonicity survive.
//!
//! All functions are pure and reentrant; no caching.

use crate::{Error, Result};

pub(crate) const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Smallest positive f64 (subnormal); used to keep clamped underflows
/// strictly signed.
const TINIEST: f64 = f64::from_bits(1);

/// Switch points and the test-only quadrature tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPolicy {
    /// Above this argument `log H` uses the scaled-tail expansion.
    pub asym_switch_pos: f64,
    /// Below this argument the reflected-tail (`1 - H`) handling activates.
    pub asym_switch_neg: f64,
    /// Relative tolerance of the quadrature oracle used only in tests.
    pub quad_tol: f64,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        EvalPolicy {
            asym_switch_pos: 8.0,
            asym_switch_neg: -8.0,
            quad_tol: 1e-12,
        }
    }
}

impl EvalPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.asym_switch_pos > 0.0) {
            return Err(Error::Domain("asym_switch_pos must be > 0".into()));
        }
        if !(self.asym_switch_neg < 0.0) {
            return Err(Error::Domain("asym_switch_neg must be < 0".into()));
        }
        Ok(())
    }
}

const SWITCH_POS: f64 = 8.0;
const SWITCH_NEG: f64 = -8.0;

// Cody's rational approximations for erf/erfc (W. J. Cody, Math. Comp. 1969).
const CODY_A: [f64; 5] = [
    3.161_123_743_870_565_6,
    113.864_154_151_050_16,
    377.485_237_685_302,
    3_209.377_589_138_469_4,
    0.185_777_706_184_603_15,
];
const CODY_B: [f64; 4] = [
    23.601_290_952_344_12,
    244.024_637_934_444_17,
    1_282.616_526_077_372_3,
    2_844.236_833_439_170_6,
];
const CODY_C: [f64; 9] = [
    0.564_188_496_988_670_1,
    8.883_149_794_388_376,
    66.119_190_637_141_63,
    298.635_138_197_400_1,
    881.952_221_241_769,
    1_712.047_612_634_070_6,
    2_051.078_377_826_071_5,
    1_230.339_354_797_997_2,
    2.153_115_354_744_038_4e-8,
];
const CODY_D: [f64; 8] = [
    15.744_926_110_709_835,
    117.693_950_891_312_5,
    537.181_101_862_009_9,
    1_621.389_574_566_690_2,
    3_290.799_235_733_459_7,
    4_362.619_090_143_247,
    3_439.367_674_143_721_6,
    1_230.339_354_803_749_4,
];
const CODY_P: [f64; 6] = [
    0.305_326_634_961_232_36,
    0.360_344_899_949_804_45,
    0.125_781_726_111_229_26,
    0.016_083_785_148_742_275,
    6.587_491_615_298_378e-4,
    0.016_315_387_137_302_097,
];
const CODY_Q: [f64; 5] = [
    2.568_520_192_289_822_4,
    1.872_952_849_923_460_4,
    0.527_905_102_951_428_4,
    0.060_518_341_312_441_32,
    0.002_335_204_976_268_691_8,
];
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Horner evaluation with a supplied leading coefficient.
#[inline]
fn horner(lead: f64, rest: &[f64], x: f64) -> f64 {
    rest.iter().fold(lead, |acc, &c| acc * x + c)
}

/// erfc(z) for z >= 0 by Cody's rational approximations.
fn erfc_pos(z: f64) -> f64 {
    if z <= 0.46875 {
        let sq = z * z;
        let num = horner(CODY_A[4], &CODY_A[..4], sq) * z;
        let den = horner(1.0, &CODY_B, sq);
        1.0 - num / den
    } else if z <= 4.0 {
        let num = horner(CODY_C[8], &CODY_C[..8], z);
        let den = horner(1.0, &CODY_D, z);
        exp_neg_sq(z) * num / den
    } else {
        let sq = 1.0 / (z * z);
        let num = horner(CODY_P[5], &CODY_P[..5], sq);
        let den = horner(1.0, &CODY_Q, sq);
        let r = sq * num / den;
        exp_neg_sq(z) / z * (FRAC_1_SQRT_PI - r)
    }
}

/// exp(-z^2) split so the rounding of z^2 does not cost a full ulp of z.
#[inline]
fn exp_neg_sq(z: f64) -> f64 {
    let zt = (z * 16.0).floor() / 16.0;
    (-zt * zt).exp() * (-(z - zt) * (z + zt)).exp()
}

/// Laplace continued fraction `x + k0/(x + (k0+1)/(x + ...))`.
///
/// `cf_tail(x, 1) = A(x)` and `cf_tail(x, 2) = 1/(A(x) - x)` for x >= 8.
/// The depth shrinks with x; 40 levels at x = 8 leave a truncation error
/// below 1e-32 relative and larger arguments converge much faster.
fn cf_tail(x: f64, k0: u32) -> f64 {
    let levels = (320.0 / x).clamp(10.0, 40.0) as u32;
    let mut d = x;
    let mut k = k0 + levels;
    while k >= k0 {
        d = x + f64::from(k) / d;
        k -= 1;
    }
    d
}

fn require_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("non-finite argument {x}")))
    }
}

/// Gaussian upper-tail probability `H(x)`.
///
/// Monotone non-increasing; `H(x) + H(-x) = 1` to within 1e-14. Values that
/// underflow f64 (x > ~38.6) clamp to the smallest subnormal to stay in (0,1).
pub fn gauss_tail(x: f64) -> Result<f64> {
    require_finite(x)?;
    if x > SWITCH_POS {
        let v = log_tail_large(x).exp();
        Ok(if v == 0.0 { TINIEST } else { v })
    } else if x < SWITCH_NEG {
        Ok(1.0 - log_tail_large(-x).exp())
    } else {
        Ok(0.5 * erfc_pos_or_reflect(x * FRAC_1_SQRT_2))
    }
}

#[inline]
fn erfc_pos_or_reflect(z: f64) -> f64 {
    if z >= 0.0 {
        erfc_pos(z)
    } else {
        2.0 - erfc_pos(-z)
    }
}

/// log H(x) for x > SWITCH_POS via the scaled-tail representation.
#[inline]
fn log_tail_large(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI - cf_tail(x, 1).ln()
}

/// `log H(x)`, stable for |x| up to 1e4.
///
/// Relative error <= 1e-12 for |x| <= 8; for x > 8 the scaled-tail branch is
/// exact to f64 rounding of `-x^2/2`. For x below the negative switch the
/// value is `log1p` of the reflected tail, clamped to the smallest negative
/// subnormal once that tail underflows (keeps the result strictly < 0).
pub fn log_gauss_tail(x: f64) -> Result<f64> {
    require_finite(x)?;
    if x > SWITCH_POS {
        Ok(log_tail_large(x))
    } else if x < SWITCH_NEG {
        let tail = log_tail_large(-x).exp();
        let v = (-tail).ln_1p();
        Ok(if v == 0.0 { -TINIEST } else { v })
    } else if x <= -0.5 {
        // ln H = log1p(-H(-x)); direct ln would lose digits against H ~ 1.
        let tail = 0.5 * erfc_pos(-x * FRAC_1_SQRT_2);
        Ok((-tail).ln_1p())
    } else {
        Ok((0.5 * erfc_pos_or_reflect(x * FRAC_1_SQRT_2)).ln())
    }
}

/// Hazard function `A(x) = phi(x)/H(x)`, computed through `log_gauss_tail`
/// (never the raw ratio, which is 0/0 past x ~ 37).
///
/// Strictly positive, `A(x) > x` everywhere, `A(x)/x -> 1` as x -> +inf.
pub fn mills_a(x: f64) -> Result<f64> {
    require_finite(x)?;
    if x > SWITCH_POS {
        // A = 1/R directly from the continued fraction: no cancellation.
        return Ok(cf_tail(x, 1));
    }
    let v = (-0.5 * x * x - LN_SQRT_2PI - log_gauss_tail(x)?).exp();
    Ok(if v == 0.0 { TINIEST } else { v })
}

/// `A'(x) = A(x) (A(x) - x)`, strictly inside (0,1).
pub fn mills_a_prime(x: f64) -> Result<f64> {
    require_finite(x)?;
    if x > SWITCH_POS {
        // A - x = 1/cf_tail(x, 2) exactly, avoiding the x ~ A cancellation.
        return Ok(cf_tail(x, 1) / cf_tail(x, 2));
    }
    let a = mills_a(x)?;
    Ok(a * (a - x))
}

/// `sup_{x>0} x A(-x)`, located by a 1e-4 grid scan plus golden-section
/// refinement. The value is 0.29452821901... at x = 0.839923...; in
/// particular it is below 0.3.
pub fn sup_x_a_neg() -> Result<f64> {
    let g = |x: f64| -> Result<f64> { Ok(x * mills_a(-x)?) };
    // x A(-x) -> 0 at 0+ and decays like x^2 phi(x) past the peak; [0,3]
    // brackets the maximum comfortably.
    let mut best_x = 0.0;
    let mut best = 0.0;
    let mut i = 0u32;
    while f64::from(i) * 1e-4 <= 3.0 {
        let x = f64::from(i) * 1e-4;
        let v = g(x)?;
        if v > best {
            best = v;
            best_x = x;
        }
        i += 1;
    }
    let (mut lo, mut hi) = (best_x - 1e-4, best_x + 1e-4);
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (g(c)?, g(d)?);
    for _ in 0..80 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = g(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = g(d)?;
        }
    }
    let x = 0.5 * (lo + hi);
    let v = g(x)?;
    if !(0.2..0.4).contains(&v) {
        return Err(Error::NonConvergence(format!(
            "sup x A(-x) refinement landed at {v}"
        )));
    }
    Ok(v.max(best))
}
