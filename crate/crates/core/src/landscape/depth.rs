use std::cmp::Ordering;

use crate::stats::CompensatedSum;

/// Above this size sums switch from compensated linear to log space.
pub const LINEAR_LIMIT: f64 = 1e300;

/// A non-negative trap depth stored as a `(value, ln value)` pair.
///
/// `value` is `+inf` once the depth leaves the `f64` range; `ln` stays
/// finite, and every comparison falls back to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Depth {
    value: f64,
    ln: f64,
}

impl Depth {
    pub const ZERO: Depth = Depth { value: 0.0, ln: f64::NEG_INFINITY };

    pub fn from_ln(ln: f64) -> Self {
        Depth { value: ln.exp(), ln }
    }

    pub fn from_value(value: f64) -> Self {
        debug_assert!(value >= 0.0);
        Depth { value, ln: value.ln() }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    pub fn ln(&self) -> f64 {
        self.ln
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    /// Orders the depth against a finite real threshold.
    #[inline]
    pub fn cmp_real(&self, x: f64) -> Ordering {
        if self.value.is_finite() {
            self.value.total_cmp(&x)
        } else {
            Ordering::Greater
        }
    }

    #[inline]
    pub fn exceeds(&self, x: f64) -> bool {
        self.cmp_real(x) == Ordering::Greater
    }

    #[inline]
    pub fn below(&self, x: f64) -> bool {
        self.cmp_real(x) == Ordering::Less
    }
}

impl PartialOrd for Depth {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.value.is_finite() && other.value.is_finite() {
            self.value.partial_cmp(&other.value)
        } else {
            self.ln.partial_cmp(&other.ln)
        }
    }
}

/// Sum of depths: sorted compensated summation while every term is below
/// [`LINEAR_LIMIT`], log-sum-exp otherwise.
pub fn sum_depths(terms: &[Depth]) -> Depth {
    let mut ts: Vec<Depth> = terms.iter().copied().filter(|d| !d.is_zero()).collect();
    if ts.is_empty() {
        return Depth::ZERO;
    }
    ts.sort_by(|a, b| a.ln.total_cmp(&b.ln));
    let max = ts[ts.len() - 1];
    if max.value <= LINEAR_LIMIT {
        let s: CompensatedSum = ts.iter().map(|d| d.value).collect();
        return Depth::from_value(s.value());
    }
    let s: CompensatedSum = ts.iter().map(|d| (d.ln - max.ln).exp()).collect();
    Depth::from_ln(max.ln + s.value().ln())
}

/// `ln((a - b) / b)` for `a >= b > 0` given as the log-space sum
/// difference; used for sum-versus-max excess. Returns `-inf` when `a == b`.
pub fn ln_relative_excess(rest: Depth, max: Depth) -> f64 {
    if rest.is_zero() {
        f64::NEG_INFINITY
    } else {
        rest.ln - max.ln
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_survives_overflow() {
        let huge = Depth::from_ln(1e6);
        assert!(huge.value().is_infinite());
        assert!(huge.exceeds(1e308));
        assert!(huge > Depth::from_ln(1e5));
        assert!(Depth::from_value(3.0).below(3.5));
    }

    #[test]
    fn sums_linear_and_log() {
        let s = sum_depths(&[Depth::from_value(1.0), Depth::from_value(2.0), Depth::ZERO]);
        assert_eq!(s.value(), 3.0);
        let s = sum_depths(&[Depth::from_ln(1000.0), Depth::from_ln(1000.0)]);
        assert!((s.ln() - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let s = sum_depths(&[Depth::from_ln(1e4), Depth::from_value(5.0)]);
        assert_eq!(s.ln(), 1e4);
        assert_eq!(sum_depths(&[]), Depth::ZERO);
    }
}
