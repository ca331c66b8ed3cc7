//! Scalar abstraction shared by plain `f64` evaluation and the reverse-mode
//! tape, plus the numerically stable special functions the geometry needs.
//!
//! Every geometric formula in this crate is written once, generically over
//! [`Real`], so the value path and the differentiated path cannot drift apart.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Tolerance for manifold membership: |<z,z>_L + 1| must stay below this.
pub const TOL_MANIFOLD: f64 = 1e-9;

/// Switchover radius below which sinh(r)/r and friends use their series.
pub const EPS_R: f64 = 1e-6;

/// Guard for sqrt(alpha^2 - 1) in the inverse exponential map and the
/// arccosh derivative.
pub const EPS_ALPHA: f64 = 1e-12;

/// A real scalar supporting the operation set of the tape: arithmetic with
/// itself and with `f64` constants, and the transcendental functions used by
/// the exponential map, parallel transport, and the Gaussian log-density.
///
/// Branching (series switchovers, hinge subgradients) is done on the primal
/// [`value`](Real::value); both implementations agree on it by construction.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn tanh(self) -> Self;
    /// arccosh with the argument clamped to `1 + EPS_ALPHA` from below, so
    /// the value is defined and the derivative `1/sqrt(x^2-1)` stays finite
    /// for inputs that have drifted slightly under 1.
    fn acosh_clamped(self) -> Self;
    fn powi(self, n: i32) -> Self;
    /// `max(self, c)` with subgradient 0 at the kink and on the flat side.
    fn max_const(self, c: f64) -> Self;
}

/// Stable arccosh: `ln(x + sqrt((x-1)(x+1)))` avoids the cancellation of
/// `x^2 - 1` near `x = 1`.
pub fn acosh_stable(x: f64) -> f64 {
    debug_assert!(x >= 1.0);
    let t = ((x - 1.0) * (x + 1.0)).sqrt();
    (x + t).ln_1p_shifted()
}

trait Ln1pShifted {
    fn ln_1p_shifted(self) -> f64;
}

impl Ln1pShifted for f64 {
    #[inline]
    fn ln_1p_shifted(self) -> f64 {
        // self = x + t >= 1; ln via ln_1p keeps precision when x + t ~ 1.
        (self - 1.0).ln_1p()
    }
}

impl Real for f64 {
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> f64 {
        f64::ln(self)
    }
    #[inline]
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    #[inline]
    fn sinh(self) -> f64 {
        f64::sinh(self)
    }
    #[inline]
    fn cosh(self) -> f64 {
        f64::cosh(self)
    }
    #[inline]
    fn tanh(self) -> f64 {
        f64::tanh(self)
    }
    #[inline]
    fn acosh_clamped(self) -> f64 {
        acosh_stable(self.max(1.0 + EPS_ALPHA))
    }
    #[inline]
    fn powi(self, n: i32) -> f64 {
        f64::powi(self, n)
    }
    #[inline]
    fn max_const(self, c: f64) -> f64 {
        f64::max(self, c)
    }
}

/// sinh(r)/r, smooth through r = 0 via its series.
pub fn sinhc<T: Real>(r: T) -> T {
    if r.value() < EPS_R {
        let s = r * r;
        s * s * (1.0 / 120.0) + s * (1.0 / 6.0) + 1.0
    } else {
        r.sinh() / r
    }
}

/// `(cosh r, sinh(r)/r)` computed from `s = r^2`.
///
/// Working in `s` keeps both factors smooth (even differentiable) at the
/// origin, where `r = sqrt(s)` itself has an infinite derivative.
pub fn cosh_sinhc_from_sq<T: Real>(s: T) -> (T, T) {
    if s.value() < EPS_R * EPS_R {
        let cosh = s * s * (1.0 / 24.0) + s * 0.5 + 1.0;
        let sinhc = s * s * (1.0 / 120.0) + s * (1.0 / 6.0) + 1.0;
        (cosh, sinhc)
    } else {
        let r = s.sqrt();
        (r.cosh(), r.sinh() / r)
    }
}

/// log(sinh(r)/r) for r >= 0, with a series branch near 0 and an
/// overflow-free form for large r.
pub fn log_sinhc<T: Real>(r: T) -> T {
    let rv = r.value();
    if rv < EPS_R {
        let s = r * r;
        s * (1.0 / 6.0) - s * s * (1.0 / 180.0)
    } else if rv > 350.0 {
        // sinh r = e^r (1 - e^{-2r})/2; the correction is below f64 epsilon.
        r - r.ln() - std::f64::consts::LN_2
    } else {
        (r.sinh() / r).ln()
    }
}

/// log(sinh(r)/r) computed from `s = r^2`, smooth (and differentiable)
/// through s = 0 where `r = sqrt(s)` itself is not.
pub fn log_sinhc_from_sq<T: Real>(s: T) -> T {
    if s.value() < EPS_R * EPS_R {
        s * (1.0 / 6.0) - s * s * (1.0 / 180.0)
    } else {
        log_sinhc(s.sqrt())
    }
}

/// log(1 + e^x), stable on both tails.
pub fn softplus<T: Real>(x: T) -> T {
    // max(x,0) + ln(1 + e^{-|x|}); |x| = 2*max(x,0) - x.
    let m = x.max_const(0.0);
    let abs = m * 2.0 - x;
    m + ((-abs).exp() + 1.0).ln()
}

/// Derivative helper d/dr log(sinh r / r) = coth r - 1/r, series-guarded.
/// Used by tests against the tape gradient of [`log_sinhc`].
pub fn log_sinhc_deriv(r: f64) -> f64 {
    if r < EPS_R {
        r / 3.0 - r.powi(3) / 45.0
    } else {
        1.0 / r.tanh() - 1.0 / r
    }
}
