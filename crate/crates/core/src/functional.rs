//! The variational rate functionals.
//!
//! `f0` is the base functional
//! `F0(U,V) = d log H(a1/U - V) + (1-d) log H(a2/U - V) - UV + V^2/2 + a log U`
//! with shifted thresholds `a1 = alpha + 1 - 2 delta + q`,
//! `a2 = alpha - 1 + 2 delta + q'`. `f0_d` applies the curvature correction:
//! where `D(U,V) < 0` the two log-H terms are rescaled by `1/(1-2D)` and the
//! quadratic part is kept. `f1_d` is the generalization that drops an
//! excluded prefix fraction `delta1` from the flipped block. All composition
//! happens in log space; nothing here exponentiates a log H term.

use crate::specfun::{log_gauss_tail, mills_a};
use crate::{Error, Result};

/// Which piece of the piecewise functional applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plain,
    Modified,
}

/// A functional evaluation together with its correction term and branch.
///
/// `branch == Modified` iff `d_value < 0`; the boundary `D = 0` is assigned
/// to `Plain` (both branches coincide there).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalValue {
    pub value: f64,
    pub d_value: f64,
    pub branch: Branch,
}

/// Parameter record `(alpha, delta, q, q', delta1)`.
///
/// `delta1` is the excluded prefix fraction of the generalized family; it is
/// zero for the base family. The mathematical domain accepts any weight
/// `delta` in [0,1] (degenerate weights are useful limits); the barrier
/// certification path constructs records with `delta < 1/2` and `q' = -q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub delta: f64,
    pub q: f64,
    pub q_prime: f64,
    pub delta1: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, delta: f64, q: f64, q_prime: f64) -> Result<Self> {
        Self::with_delta1(alpha, delta, q, q_prime, 0.0)
    }

    pub fn with_delta1(alpha: f64, delta: f64, q: f64, q_prime: f64, delta1: f64) -> Result<Self> {
        for (name, v) in [
            ("alpha", alpha),
            ("delta", delta),
            ("q", q),
            ("q_prime", q_prime),
            ("delta1", delta1),
        ] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite, got {v}")));
            }
        }
        if alpha < 0.0 {
            return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Domain(format!("delta must lie in [0,1], got {delta}")));
        }
        if delta1 < 0.0 || delta1 > delta {
            return Err(Error::Domain(format!(
                "delta1 must lie in [0, delta], got {delta1}"
            )));
        }
        Ok(ModelParams {
            alpha,
            delta,
            q,
            q_prime,
            delta1,
        })
    }

    /// The barrier-certification path: `q' = -q` and a physical flip
    /// fraction `delta < 1/2`.
    pub fn barrier(alpha: f64, delta: f64, q: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&delta) {
            return Err(Error::Domain(format!(
                "flip fraction must lie in [0, 1/2), got {delta}"
            )));
        }
        Self::new(alpha, delta, q, -q)
    }

    /// Opt-in check of the certification-region threshold bands
    /// `1 < a1 < 1.25`, `-1.1 < a2 < -0.85`. Not asserted implicitly:
    /// the functionals are also used far outside this region.
    pub fn assert_certification_bands(&self) -> Result<()> {
        let (a1, a2) = a_star(self);
        if !(1.0 < a1 && a1 < 1.25) {
            return Err(Error::Domain(format!("a1 = {a1} outside (1, 1.25)")));
        }
        if !(-1.1 < a2 && a2 < -0.85) {
            return Err(Error::Domain(format!("a2 = {a2} outside (-1.1, -0.85)")));
        }
        Ok(())
    }
}

/// Shifted thresholds `(a1, a2)`.
#[inline]
pub fn a_star(params: &ModelParams) -> (f64, f64) {
    (
        params.alpha + 1.0 - 2.0 * params.delta + params.q,
        params.alpha - 1.0 + 2.0 * params.delta + params.q_prime,
    )
}

#[inline]
fn check_u(u: f64) -> Result<()> {
    if u.is_finite() && u > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("U must be positive and finite, got {u}")))
    }
}

/// The two log-H terms with weights `(w1, w2)`, plus the quadratic part.
#[inline]
fn log_h_part(u: f64, v: f64, a1: f64, a2: f64, w1: f64, w2: f64) -> Result<f64> {
    let mut s = 0.0;
    if w1 != 0.0 {
        s += w1 * log_gauss_tail(a1 / u - v)?;
    }
    if w2 != 0.0 {
        s += w2 * log_gauss_tail(a2 / u - v)?;
    }
    Ok(s)
}

#[inline]
fn quad_part(u: f64, v: f64, alpha: f64) -> f64 {
    -u * v + 0.5 * v * v + if alpha != 0.0 { alpha * u.ln() } else { 0.0 }
}

/// Base functional `F0(U, V)`.
pub fn f0(u: f64, v: f64, params: &ModelParams) -> Result<f64> {
    check_u(u)?;
    let (a1, a2) = a_star(params);
    Ok(log_h_part(u, v, a1, a2, params.delta, 1.0 - params.delta)? + quad_part(u, v, params.alpha))
}

/// Curvature term `D(U,V) = 1/2 - d A1 - (1-d) A2 - d(1-d)(A1-A2)^2 / 2`
/// with `A_i = A(a_i/U - V)/U`.
pub fn big_d(u: f64, v: f64, params: &ModelParams) -> Result<f64> {
    check_u(u)?;
    let (a1, a2) = a_star(params);
    let a1v = mills_a(a1 / u - v)? / u;
    let a2v = mills_a(a2 / u - v)? / u;
    let d = params.delta;
    Ok(0.5 - d * a1v - (1.0 - d) * a2v - 0.5 * d * (1.0 - d) * (a1v - a2v) * (a1v - a2v))
}

/// Piecewise functional `F0^D`: the Plain branch is `f0`; where `D < 0` the
/// log-H block is rescaled by `1/(1-2D)` and the quadratic part is kept.
pub fn f0_d(u: f64, v: f64, params: &ModelParams) -> Result<FunctionalValue> {
    check_u(u)?;
    let d_value = big_d(u, v, params)?;
    let (a1, a2) = a_star(params);
    let lh = log_h_part(u, v, a1, a2, params.delta, 1.0 - params.delta)?;
    let quad = quad_part(u, v, params.alpha);
    if d_value >= 0.0 {
        Ok(FunctionalValue {
            value: lh + quad,
            d_value,
            branch: Branch::Plain,
        })
    } else {
        let denom = 1.0 - 2.0 * d_value;
        if denom == 0.0 {
            // unreachable for D < 0; kept as a guard
            return Err(Error::Degenerate("1 - 2D vanished on modified branch".into()));
        }
        Ok(FunctionalValue {
            value: lh / denom + quad,
            d_value,
            branch: Branch::Modified,
        })
    }
}

/// Correction term of the generalized family,
/// `D1 = (1-d1)^{-1} [1/2 - (d-d1) A1 - (1-d) A2 - (d-d1)(1-d)(A1-A2)^2/2]`.
pub fn big_d1(u: f64, v: f64, params: &ModelParams) -> Result<f64> {
    check_u(u)?;
    let (a1, a2) = a_star(params);
    let a1v = mills_a(a1 / u - v)? / u;
    let a2v = mills_a(a2 / u - v)? / u;
    let (d, d1) = (params.delta, params.delta1);
    let w1 = d - d1;
    let w2 = 1.0 - d;
    let inner = 0.5 - w1 * a1v - w2 * a2v - 0.5 * w1 * w2 * (a1v - a2v) * (a1v - a2v);
    Ok(inner / (1.0 - d1))
}

/// Generalized piecewise functional `F1^D` with prefix fraction `delta1`
/// excluded from the flipped block; reduces to `f0_d` at `delta1 = 0`.
pub fn f1_d(u: f64, v: f64, params: &ModelParams) -> Result<FunctionalValue> {
    check_u(u)?;
    if params.delta1 > params.delta {
        return Err(Error::Domain(format!(
            "delta1 = {} exceeds delta = {}",
            params.delta1, params.delta
        )));
    }
    let d_value = big_d1(u, v, params)?;
    let (a1, a2) = a_star(params);
    let lh = log_h_part(u, v, a1, a2, params.delta - params.delta1, 1.0 - params.delta)?;
    let quad = quad_part(u, v, params.alpha);
    if d_value >= 0.0 {
        Ok(FunctionalValue {
            value: lh + quad,
            d_value,
            branch: Branch::Plain,
        })
    } else {
        Ok(FunctionalValue {
            value: lh / (1.0 - 2.0 * d_value) + quad,
            d_value,
            branch: Branch::Modified,
        })
    }
}

/// Binary entropy in nats, `C*(d) = -d log d - (1-d) log(1-d)`, with
/// `C*(0) = 0` by continuity.
pub fn c_star(delta: f64) -> Result<f64> {
    if !delta.is_finite() || !(0.0..1.0).contains(&delta) {
        return Err(Error::Domain(format!("delta must lie in [0,1), got {delta}")));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    Ok(-delta * delta.ln() - (1.0 - delta) * (-delta).ln_1p())
}
