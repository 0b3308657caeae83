//! Log-domain carriers for radii and magnitudes, and the per-factor kernel
//! `log|1 + z/t|` evaluated without ever forming `r` or `t` directly.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural logarithm of a radius `r > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogRadius(f64);

impl LogRadius {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidInput(format!("log radius must be finite, got {value}")))
        }
    }

    /// Panics on non-finite input. Meant for literals and already-validated values.
    pub fn of(value: f64) -> Self {
        Self::new(value).expect("finite log radius")
    }

    pub fn from_radius(r: f64) -> Result<Self> {
        if r > 0.0 && r.is_finite() {
            Ok(Self(r.ln()))
        } else {
            Err(Error::InvalidInput(format!("radius must be positive and finite, got {r}")))
        }
    }

    pub fn from_log10(value: f64) -> Result<Self> {
        Self::new(value * std::f64::consts::LN_10)
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `r` itself; overflows to infinity above `e^709`.
    pub fn radius(self) -> f64 {
        self.0.exp()
    }
}

impl fmt::Display for LogRadius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Natural logarithm of a nonnegative magnitude. `NegInfinity` encodes an
/// exact zero of the function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LogValue {
    Finite(f64),
    NegInfinity,
}

impl LogValue {
    pub fn from_f64(v: f64) -> Self {
        if v == f64::NEG_INFINITY {
            LogValue::NegInfinity
        } else {
            LogValue::Finite(v)
        }
    }

    /// The value as an `f64`, with `NegInfinity` mapped to `f64::NEG_INFINITY`.
    #[inline]
    pub fn as_f64(self) -> f64 {
        match self {
            LogValue::Finite(v) => v,
            LogValue::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            LogValue::Finite(v) => Some(v),
            LogValue::NegInfinity => None,
        }
    }

    pub fn is_neg_infinity(self) -> bool {
        matches!(self, LogValue::NegInfinity)
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogValue::Finite(v) => write!(f, "{v}"),
            LogValue::NegInfinity => f.write_str("-inf"),
        }
    }
}

/// Angle-dependent constants of the factor kernel, computed once per evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Angle {
    pub cos: f64,
    /// `cos^2(theta/2) = (1 + cos theta)/2`, taken from `theta/2` directly so
    /// it stays accurate near `theta = pi`.
    pub half_cos_sq: f64,
    pub is_pi: bool,
}

impl Angle {
    pub fn new(theta: f64) -> Self {
        let is_pi = theta == std::f64::consts::PI;
        let half = (0.5 * theta).cos();
        Angle {
            cos: theta.cos(),
            half_cos_sq: if is_pi { 0.0 } else { half * half },
            is_pi,
        }
    }
}

/// `log|1 + x e^{i theta}|` with `x = e^d`, i.e. `d = log r - log t`.
///
/// Uses `|1 + x e^{i theta}|^2 = (1 - x)^2 + 4x cos^2(theta/2)` so no
/// cancellation occurs near `theta = pi, x = 1`. At `theta = pi` exactly
/// returns `log|1 - x|` (which is `-inf` only when `d == 0`).
#[inline]
pub(crate) fn log_abs_factor(d: f64, angle: &Angle) -> f64 {
    if angle.is_pi {
        return log_abs_one_minus_exp(d);
    }
    if d < -1.0 {
        let x = d.exp();
        0.5 * (x * (2.0 * angle.cos + x)).ln_1p()
    } else if d <= 1.0 {
        let x = d.exp();
        let em = d.exp_m1();
        0.5 * (em * em + 4.0 * x * angle.half_cos_sq).ln()
    } else if d <= 40.0 {
        let y = (-d).exp();
        let em = (-d).exp_m1();
        d + 0.5 * (em * em + 4.0 * y * angle.half_cos_sq).ln()
    } else {
        let y = (-d).exp();
        d + 0.5 * (y * (2.0 * angle.cos + y)).ln_1p()
    }
}

/// `log|1 - e^d|`.
#[inline]
pub(crate) fn log_abs_one_minus_exp(d: f64) -> f64 {
    if d < -std::f64::consts::LN_2 {
        (-d.exp()).ln_1p()
    } else if d < 0.0 {
        (-d.exp_m1()).ln()
    } else if d > 0.0 {
        d + (-(-d).exp_m1()).ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `log(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
