//! Extremal and sum processes of i.i.d. slowly varying sequences.
//!
//! Sequences are generated from counter-based keys `(seed, trial, index)`,
//! so a panel can be extended past its horizon without changing its
//! prefix.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::landscape::{scaling_function, sum_depths, Depth, Scaling, TailFunction};
use crate::rng::{key, open01, Domain};
use crate::stats::{self, ChiSquareResult, CompensatedSum};

/// Running sum of depths that moves to log space on overflow.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningSum {
    linear: CompensatedSum,
    ln: Option<f64>,
}

impl RunningSum {
    pub fn add(&mut self, d: Depth) {
        if d.is_zero() {
            return;
        }
        match self.ln {
            None if d.value() <= crate::landscape::LINEAR_LIMIT
                && self.linear.value() <= crate::landscape::LINEAR_LIMIT =>
            {
                self.linear.add(d.value())
            }
            None => {
                let cur = self.linear.value();
                self.ln = Some(log_add(if cur > 0.0 { cur.ln() } else { f64::NEG_INFINITY }, d.ln()));
            }
            Some(l) => self.ln = Some(log_add(l, d.ln())),
        }
    }

    pub fn value(&self) -> Depth {
        match self.ln {
            Some(l) => Depth::from_ln(l),
            None if self.linear.value() > 0.0 => Depth::from_value(self.linear.value()),
            None => Depth::ZERO,
        }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `Y_i` for `i >= 1` of panel `trial` under `seed`.
#[inline]
pub fn panel_element(tail: TailFunction, seed: u64, trial: u64, i: u64) -> Depth {
    tail.sample_unchecked(open01(key(&[seed, Domain::Panel as u64, trial, i])))
}

/// A sampled sequence `Y_1..Y_n` with its running maxima and sums.
#[derive(Debug, Clone)]
pub struct SequencePanel {
    pub tail: TailFunction,
    pub ys: Vec<Depth>,
    /// `maxima[k-1] = M_k`.
    pub maxima: Vec<Depth>,
    /// `sums[k-1] = S_k`.
    pub sums: Vec<Depth>,
    /// `rests[k-1] = S_k - M_k`, tracked separately so the excess of the
    /// sum over the maximum never cancels.
    pub rests: Vec<Depth>,
}

impl SequencePanel {
    pub fn from_depths(tail: TailFunction, ys: Vec<Depth>) -> Self {
        let mut maxima = Vec::with_capacity(ys.len());
        let mut sums = Vec::with_capacity(ys.len());
        let mut rests = Vec::with_capacity(ys.len());
        let mut sum = RunningSum::default();
        let mut rest = RunningSum::default();
        let mut max = Depth::ZERO;
        for &y in &ys {
            sum.add(y);
            if y > max {
                rest.add(max);
                max = y;
            } else {
                rest.add(y);
            }
            maxima.push(max);
            sums.push(sum.value());
            rests.push(rest.value());
        }
        SequencePanel { tail, ys, maxima, sums, rests }
    }

    pub fn generate(tail: TailFunction, n: usize, seed: u64, trial: u64) -> Self {
        let ys = (1..=n as u64).map(|i| panel_element(tail, seed, trial, i)).collect();
        Self::from_depths(tail, ys)
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// `ln(S_k / M_k - 1)`; `-inf` when `S_k = M_k`.
    pub fn ln_excess(&self, k: usize) -> f64 {
        let rest = self.rests[k - 1];
        if rest.is_zero() {
            f64::NEG_INFINITY
        } else {
            rest.ln() - self.maxima[k - 1].ln()
        }
    }

    /// `S_k / M_k`.
    pub fn sum_max_ratio(&self, k: usize) -> f64 {
        self.ln_excess(k).exp().ln_1p().exp()
    }

    /// `(L(S_k) - L(M_k)) / scale`, evaluated without cancellation.
    pub fn tail_gap(&self, k: usize, scale: f64) -> f64 {
        let delta = self.ln_excess(k).exp().ln_1p();
        self.tail.increment_ln(self.maxima[k - 1].ln(), delta) / scale
    }
}

/// `sup` over `grid` (points in `[delta, T]`) of `(L(S_{n u}) - L(M_{n u})) / n`.
pub fn sum_max_gap(panel: &SequencePanel, n: usize, grid: &[f64]) -> Result<f64> {
    if n < 1 {
        return Err(invalid("n must be positive"));
    }
    let mut sup = 0.0f64;
    for &u in grid {
        if !(u > 0.0) {
            return Err(invalid(format!("grid point must be positive, got {u}")));
        }
        let k = (n as f64 * u).floor() as usize;
        if k > panel.len() {
            return Err(invalid(format!("grid point {u} beyond panel length")));
        }
        if k >= 1 {
            sup = sup.max(panel.tail_gap(k, n as f64));
        }
    }
    Ok(sup)
}

/// Gap statistic over `trials` independent panels of length `floor(n T)`.
pub fn sum_max_gap_trials(tail: TailFunction, n: usize, horizon: f64, grid: &[f64], trials: u64, seed: u64) -> Result<Vec<f64>> {
    if n < 100 || horizon < 1.0 {
        return Err(invalid("need n >= 100 and T >= 1"));
    }
    let len = (n as f64 * horizon).floor() as usize;
    (0..trials)
        .into_par_iter()
        .map(|trial| sum_max_gap(&SequencePanel::generate(tail, len, seed, trial), n, grid))
        .collect()
}

/// `S_n / M_n` and `ln(S_n/M_n - 1)` for each of `trials` panels.
pub fn sum_max_ratios(tail: TailFunction, n: usize, trials: u64, seed: u64) -> Vec<(f64, f64)> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let p = SequencePanel::generate(tail, n, seed, trial);
            (p.sum_max_ratio(n), p.ln_excess(n))
        })
        .collect()
}

/// First exceedence of level `l` in one panel, with the surrounding sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Exceedence {
    /// Index `n_l` of the first element above `l` (1-based).
    pub index: u64,
    /// `s_l`: sum of the elements before the exceedence.
    pub before: Depth,
    /// `Y_{n_l}`.
    pub value: Depth,
    /// `sbar`: sum over `1 <= |i - n_l| < radius`, `i >= 1`.
    pub around: Depth,
    /// Times the horizon cap had to be doubled.
    pub cap_doublings: u32,
}

/// Scans panel `trial` for the first element above `level` and sums the
/// `radius` neighbourhood around it.
pub fn first_exceedence(
    tail: TailFunction,
    level: f64,
    radius: f64,
    seed: u64,
    trial: u64,
    cap: u64,
) -> Exceedence {
    let k = crate::landscape::strict_radius(radius) as u64;
    let mut cap = cap.max(1);
    let mut doublings = 0;
    let mut before = RunningSum::default();
    let mut i = 1u64;
    let (index, value) = loop {
        if i > cap {
            cap *= 2;
            doublings += 1;
        }
        let y = panel_element(tail, seed, trial, i);
        if y.exceeds(level) {
            break (i, y);
        }
        before.add(y);
        i += 1;
    };
    while index + k > cap {
        cap *= 2;
        doublings += 1;
    }
    let lo = index.saturating_sub(k).max(1);
    let around: Vec<Depth> = (lo..=index + k)
        .filter(|&j| j != index)
        .map(|j| panel_element(tail, seed, trial, j))
        .collect();
    Exceedence { index, before: before.value(), value, around: sum_depths(&around), cap_doublings: doublings }
}

#[derive(Debug, Clone)]
pub struct FirstExceedenceLaw {
    pub level: f64,
    pub scale: f64,
    pub indices: Vec<u64>,
    /// `n_l / L(l)`.
    pub scaled: Vec<f64>,
    pub ks_exponential: f64,
    /// Exact distance between the geometric law of `n_l / L(l)` and Exp(1).
    pub ks_geometric_bound: f64,
    pub chi_square_geometric: ChiSquareResult,
    pub mean: f64,
    pub mean_se: f64,
}

pub fn first_exceedence_law(tail: TailFunction, level: f64, trials: u64, seed: u64) -> Result<FirstExceedenceLaw> {
    let scale = tail.eval(level);
    if !(1.0 / scale < 0.1) {
        return Err(invalid(format!("level too low: L(l) = {scale} must exceed 10")));
    }
    if trials < 1000 {
        return Err(invalid("need at least 1000 trials"));
    }
    let indices: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|trial| first_exceedence(tail, level, 0.0, seed, trial, 1 << 20).index)
        .collect();
    let scaled: Vec<f64> = indices.iter().map(|&k| k as f64 / scale).collect();
    let ks_exponential = stats::ks_continuous(&scaled, |x| if x <= 0.0 { 0.0 } else { 1.0 - (-x).exp() });
    let p = 1.0 / scale;
    let (mean, mean_se) = stats::mean_and_se(&scaled);
    Ok(FirstExceedenceLaw {
        level,
        scale,
        ks_geometric_bound: stats::geometric_vs_exponential_ks(p, scale),
        chi_square_geometric: stats::chi_square_geometric(&indices, p),
        indices,
        scaled,
        ks_exponential,
        mean,
        mean_se,
    })
}

/// Empirical frequencies of the landscape bounds at level `ell_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedenceFrequencies {
    pub t: f64,
    pub scaling: Scaling,
    pub trials: u64,
    /// `s < t / (2 r h^2)`.
    pub sum_half: u64,
    /// `s < t / (r h^2)`.
    pub sum_full: u64,
    /// `Y > t h^2 / r`.
    pub exceed: u64,
    /// `sbar < ell / h^3`.
    pub around: u64,
    /// `s < Y`.
    pub sum_below_value: u64,
    pub cap_doublings: u64,
    /// Per-trial records in trial order.
    pub rows: Vec<Exceedence>,
}

impl ExceedenceFrequencies {
    pub fn freq(&self, count: u64) -> f64 {
        count as f64 / self.trials as f64
    }
}

pub fn exceedence_bounds(tail: TailFunction, t: f64, trials: u64, seed: u64, cap: u64) -> Result<ExceedenceFrequencies> {
    let scaling = scaling_function(tail, t)?;
    let (ell, r, h) = (scaling.level, scaling.r, scaling.h);
    let radius = r / h;
    let rows: Vec<Exceedence> = (0..trials)
        .into_par_iter()
        .map(|trial| first_exceedence(tail, ell, radius, seed, trial, cap))
        .collect();
    let count = |f: &dyn Fn(&Exceedence) -> bool| rows.iter().filter(|e| f(e)).count() as u64;
    Ok(ExceedenceFrequencies {
        t,
        scaling,
        trials,
        sum_half: count(&|e| e.before.below(t / (2.0 * r * h * h))),
        sum_full: count(&|e| e.before.below(t / (r * h * h))),
        exceed: count(&|e| e.value.exceeds(t * h * h / r)),
        around: count(&|e| e.around.below(ell / (h * h * h))),
        sum_below_value: count(&|e| e.before < e.value),
        cap_doublings: rows.iter().map(|e| e.cap_doublings as u64).sum(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticPoint {
    pub t: f64,
    pub ell: f64,
    pub r: f64,
    /// `ell_t r_t / t`.
    pub ratio: f64,
    /// `ell L(ell-) <= t <= ell L(ell)` on the solver bracket.
    pub sandwich: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCheck {
    pub points: Vec<AsymptoticPoint>,
    pub converged: bool,
}

/// Ratios `ell_t r_t / t` along an increasing grid spanning four decades.
pub fn ell_asymptotic_check(tail: TailFunction, t_grid: &[f64], eps: f64) -> Result<AsymptoticCheck> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("time grid must be strictly increasing"));
    }
    if t_grid[t_grid.len() - 1] / t_grid[0] < 1e4 {
        return Err(invalid("time grid must span at least four decades"));
    }
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let lv = tail.level(t)?;
        let ell = lv.value;
        let r = tail.eval(ell);
        let slack = 1e-11 * t;
        // The exact level lies in (lo, hi]; check the sandwich on the bracket.
        let sandwich = lv.lo * tail.eval_left(lv.lo) <= t + slack && t <= lv.hi * tail.eval(lv.hi) + slack;
        points.push(AsymptoticPoint { t, ell, r, ratio: ell * r / t, sandwich });
    }
    let converged = (points[points.len() - 1].ratio - 1.0).abs() <= eps;
    Ok(AsymptoticCheck { points, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_invariants() {
        for fam in [TailFunction::Log, TailFunction::ExpSqrtLog] {
            let p = SequencePanel::generate(fam, 2000, 3, 0);
            for k in 1..p.len() {
                assert!(p.maxima[k] >= p.maxima[k - 1]);
                assert!(p.sums[k] > p.sums[k - 1] || !p.sums[k].is_finite() || p.ys[k].ln() < p.sums[k].ln() - 36.0);
                assert!(p.maxima[k] <= p.sums[k]);
            }
            assert!(p.sum_max_ratio(2000) >= 1.0);
        }
    }

    #[test]
    fn running_sum_matches_batch_sum() {
        let ys: Vec<Depth> = (1..500).map(|i| panel_element(TailFunction::Log, 1, 0, i)).collect();
        let mut r = RunningSum::default();
        ys.iter().for_each(|&y| r.add(y));
        let batch = sum_depths(&ys);
        assert!((r.value().ln() - batch.ln()).abs() < 1e-12 * batch.ln().abs());
    }

    #[test]
    fn gap_is_nonnegative_and_closed_form_on_constructed_panel() {
        let n = 1000;
        let mut ys = vec![Depth::from_value(std::f64::consts::E); n - 1];
        let huge = Depth::from_ln(500.0);
        ys.push(huge);
        let p = SequencePanel::from_depths(TailFunction::Log, ys);
        let gap = sum_max_gap(&p, n, &[1.0]).unwrap();
        // (ln(n - 1 + H) - ln H) / n with H = e^500, e per unit term.
        let closed = ((n - 1) as f64 * std::f64::consts::E / huge.value()).ln_1p() / n as f64;
        assert!((gap - closed).abs() <= 1e-12 * closed);
        assert!(gap > 0.0 && gap < 1e-200);
        // Before the huge element the gap is L(S) - L(M) = ln(k) for k equal terms.
        let early = sum_max_gap(&p, n, &[0.5]).unwrap();
        assert!((early - (500f64).ln() / n as f64).abs() < 1e-12);
    }

    #[test]
    fn exceedence_definition_holds() {
        let tail = TailFunction::Log;
        let level = 1e6;
        for trial in 0..50 {
            let e = first_exceedence(tail, level, 4.5, 11, trial, 8);
            assert!(e.value.exceeds(level));
            let prior: Vec<Depth> = (1..e.index).map(|i| panel_element(tail, 11, trial, i)).collect();
            assert!(prior.iter().all(|y| !y.exceeds(level)));
            assert_eq!(e.before, sum_depths(&prior));
            let around: Vec<Depth> = (e.index.saturating_sub(4).max(1)..=e.index + 4)
                .filter(|&j| j != e.index)
                .map(|j| panel_element(tail, 11, trial, j))
                .collect();
            assert_eq!(e.around, sum_depths(&around));
        }
    }

    #[test]
    fn first_exceedence_rejects_low_levels() {
        assert!(first_exceedence_law(TailFunction::Log, 100.0, 1000, 0).is_err());
        assert!(first_exceedence_law(TailFunction::Log, 1e20, 10, 0).is_err());
    }

    #[test]
    fn asymptotic_ratio() {
        let grid: Vec<f64> = (4..=12).map(|k| 10f64.powi(k)).collect();
        let c = ell_asymptotic_check(TailFunction::Log, &grid, 0.05).unwrap();
        assert!(c.converged);
        for p in &c.points {
            assert!(p.sandwich);
            assert!((p.ratio - 1.0).abs() < 1e-9);
        }
        let c = ell_asymptotic_check(TailFunction::ExpSqrtLog, &[3.0, 5.0, 1e2, 1e5], 1e-9).unwrap();
        assert!(c.points.iter().all(|p| p.sandwich), "{:?}", c.points);
        // On the atom of ExpSqrtLog the level is pinned at e.
        assert!((c.points[1].ratio - std::f64::consts::E.powi(2) / 5.0).abs() < 1e-9);
        assert!(ell_asymptotic_check(TailFunction::Log, &[1.0, 10.0], 0.1).is_err());
    }
}
