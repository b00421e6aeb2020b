use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use super::depth::Depth;
use crate::error::{invalid, Error, Result};

/// Slowly varying tail `L(x) = 1 / P(sigma > x)`.
///
/// Every family is floored at one below `x0 = e` and continuous from the
/// right everywhere; `ExpSqrtLog` jumps from 1 to `e` at `x0`, so its trap
/// law carries an atom of mass `1 - 1/e` at `sigma = e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailFunction {
    /// `L(x) = ln x`.
    Log,
    /// `L(x) = (ln x)^beta`.
    LogPower(f64),
    /// `L(x) = exp(sqrt(ln x))`.
    ExpSqrtLog,
}

impl TailFunction {
    pub fn log_power(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid(format!("LogPower exponent must be positive, got {beta}")));
        }
        Ok(TailFunction::LogPower(beta))
    }

    /// Below this point `L` is identically one.
    pub fn x0(&self) -> f64 {
        E
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            TailFunction::LogPower(b) => Some(*b),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TailFunction::Log => "log",
            TailFunction::LogPower(_) => "log-power",
            TailFunction::ExpSqrtLog => "exp-sqrt-log",
        }
    }

    /// `L` as a function of `ln x`, valid for arbitrarily large `x`.
    #[inline]
    pub fn eval_ln(&self, ln_x: f64) -> f64 {
        if ln_x < 1.0 {
            return 1.0;
        }
        let v = match *self {
            TailFunction::Log => ln_x,
            TailFunction::LogPower(beta) => ln_x.powf(beta),
            TailFunction::ExpSqrtLog => ln_x.sqrt().exp(),
        };
        v.max(1.0)
    }

    /// `L(x)` for `x >= 0`, without input validation.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.x0() {
            return 1.0;
        }
        self.eval_ln(x.ln())
    }

    pub fn try_eval(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(invalid(format!("tail argument must be non-negative, got {x}")));
        }
        Ok(self.eval(x))
    }

    /// Left limit `L(x-)`.
    pub fn eval_left(&self, x: f64) -> f64 {
        if x <= self.x0() {
            1.0
        } else {
            self.eval(x)
        }
    }

    pub fn eval_depth(&self, d: Depth) -> f64 {
        if d.is_zero() {
            1.0
        } else {
            self.eval_ln(d.ln())
        }
    }

    /// Log of the generalised inverse `inf{x >= 0 : L(x) >= y}` for `y > 1`.
    pub fn ln_inverse(&self, y: f64) -> f64 {
        debug_assert!(y > 1.0);
        match *self {
            TailFunction::Log => y.max(1.0),
            TailFunction::LogPower(beta) => y.powf(1.0 / beta).max(1.0),
            TailFunction::ExpSqrtLog => {
                if y <= E {
                    1.0
                } else {
                    let l = y.ln();
                    l * l
                }
            }
        }
    }

    /// Exact inverse-CDF draw: `sigma = inf{x >= 0 : L(x) >= 1/u}`.
    pub fn sample(&self, u: f64) -> Result<Depth> {
        if !(u > 0.0 && u < 1.0) {
            return Err(invalid(format!("uniform variate must lie in (0, 1), got {u}")));
        }
        Ok(self.sample_unchecked(u))
    }

    #[inline]
    pub(crate) fn sample_unchecked(&self, u: f64) -> Depth {
        Depth::from_ln(self.ln_inverse(1.0 / u))
    }

    /// `L(exp(ln_m + delta)) - L(exp(ln_m))` without cancellation, for
    /// `delta >= 0` possibly far below the spacing of `ln_m`.
    pub fn increment_ln(&self, ln_m: f64, delta: f64) -> f64 {
        if delta <= 0.0 {
            return 0.0;
        }
        if ln_m < 1.0 {
            return self.eval_ln(ln_m + delta) - self.eval_ln(ln_m);
        }
        match *self {
            TailFunction::Log => delta,
            TailFunction::LogPower(beta) => ln_m.powf(beta) * (beta * (delta / ln_m).ln_1p()).exp_m1(),
            TailFunction::ExpSqrtLog => {
                let root = ln_m.sqrt();
                let d_root = delta / ((ln_m + delta).sqrt() + root);
                root.exp() * d_root.exp_m1()
            }
        }
    }

    /// Tail probability `P(sigma > x) = 1 / L(x)`.
    pub fn survival(&self, x: f64) -> f64 {
        1.0 / self.eval(x)
    }

    /// CDF `1 - 1/L(x)` and its left limit, for goodness-of-fit tests.
    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - 1.0 / self.eval(x)
    }

    pub fn cdf_left(&self, x: f64) -> f64 {
        1.0 - 1.0 / self.eval_left(x)
    }
}

impl fmt::Display for TailFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailFunction::LogPower(b) => write!(f, "log-power({b})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for TailFunction {
    type Err = Error;

    /// Accepts `log`, `exp-sqrt-log`, `log-power(<beta>)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "log" => Ok(TailFunction::Log),
            "exp-sqrt-log" | "expsqrtlog" => Ok(TailFunction::ExpSqrtLog),
            _ => {
                let inner = s
                    .strip_prefix("log-power(")
                    .or_else(|| s.strip_prefix("logpower("))
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| invalid(format!("unknown tail family '{s}'")))?;
                let beta: f64 =
                    inner.trim().parse().map_err(|_| invalid(format!("bad exponent '{inner}'")))?;
                TailFunction::log_power(beta)
            }
        }
    }
}

/// Smallest `s >= 0` with `s L(s) >= t`, plus the bisection bracket that
/// certifies minimality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub value: f64,
    /// `lo * L(lo) < t`.
    pub lo: f64,
    /// `hi * L(hi) >= t`; equals `value`.
    pub hi: f64,
}

pub const LEVEL_RTOL: f64 = 1e-12;

impl TailFunction {
    pub fn level(&self, t: f64) -> Result<Level> {
        if !(t.is_finite() && t > 0.0) {
            return Err(invalid(format!("time must be positive and finite, got {t}")));
        }
        if t <= self.x0() {
            // L = 1 on [0, x0) forces the level to t itself.
            let lo = t * (1.0 - LEVEL_RTOL / 2.0);
            return Ok(Level { value: t, lo, hi: t });
        }
        let mut lo = if t > 1.0 { 1.0 } else { 0.0 };
        let mut hi = t;
        while hi - lo > LEVEL_RTOL * hi {
            let mid = 0.5 * (lo + hi);
            if mid * self.eval(mid) >= t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Level { value: hi, lo, hi })
    }
}
