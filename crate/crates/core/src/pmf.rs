//! Transient law of the trap model on a finite window by uniformization.
//!
//! The chain on a window `[lo, lo + n)` jumps `z -> z +/- 1` at rate
//! `1/(2 sigma_z)`. With `Absorbing` boundary, mass leaving the window is
//! collected as escaped mass, which bounds the error against the chain on
//! the whole line. With `Periodic` boundary, the two end points are
//! neighbours.

use std::fmt::Write as _;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::landscape::Landscape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundary {
    Absorbing,
    Periodic,
}

/// Trap depths on a contiguous window.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub lo: i64,
    pub sigma: Vec<f64>,
}

impl Window {
    pub fn new(lo: i64, sigma: Vec<f64>) -> Result<Self> {
        if sigma.is_empty() {
            return Err(invalid("window must contain at least one site"));
        }
        if sigma.iter().any(|&s| !(s > 0.0)) {
            return Err(invalid("trap depths must be strictly positive"));
        }
        Ok(Window { lo, sigma })
    }

    /// Window `[lo, hi]` of a landscape; depths beyond `f64` range are kept
    /// as `+inf` (zero exit rate).
    pub fn from_landscape(landscape: &Landscape, lo: i64, hi: i64) -> Self {
        let sigma = landscape.realize(lo, hi).iter().map(|d| d.value()).collect();
        Window { lo, sigma }
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.sigma.len() as i64 - 1
    }

    pub fn contains(&self, z: i64) -> bool {
        z >= self.lo && z <= self.hi()
    }

    pub fn index(&self, z: i64) -> Option<usize> {
        self.contains(z).then(|| (z - self.lo) as usize)
    }
}

/// Nearest-neighbour jump rates on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRates {
    pub boundary: Boundary,
    /// `right[i]` is the rate from site `i` to `i + 1` (wrapping if periodic).
    pub right: Vec<f64>,
    /// `left[i]` is the rate from site `i` to `i - 1` (wrapping if periodic).
    pub left: Vec<f64>,
}

impl ChainRates {
    pub fn trap_model(sigma: &[f64], boundary: Boundary) -> Self {
        let rates: Vec<f64> = sigma.iter().map(|s| 0.5 / s).collect();
        ChainRates { boundary, right: rates.clone(), left: rates }
    }

    pub fn len(&self) -> usize {
        self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.right.is_empty()
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.right.iter().zip(&self.left).map(|(a, b)| a + b).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmfOptions {
    /// Bound on the discarded Poisson tail.
    pub tol: f64,
    /// Start site (absolute coordinate).
    pub start: i64,
    pub step_budget: u64,
}

impl Default for PmfOptions {
    fn default() -> Self {
        PmfOptions { tol: 1e-10, start: 0, step_budget: 200_000_000 }
    }
}

/// Probability mass function of `X_t` on a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfVector {
    pub lo: i64,
    pub boundary: Boundary,
    pub t: f64,
    pub mass: Vec<f64>,
    /// Mass that left the window (plus flushed underflow); zero if periodic.
    pub escaped_mass_bound: f64,
    /// Poisson mass beyond the truncation point.
    pub poisson_truncation_error: f64,
    pub lambda: f64,
    pub k_truncation: u64,
    pub tol: f64,
}

#[derive(Serialize)]
struct PmfMeta<'a> {
    window: [i64; 2],
    boundary: &'a Boundary,
    t: f64,
    #[serde(rename = "Lambda")]
    lambda: f64,
    k_truncation: u64,
    tol: f64,
    escaped_mass_bound: f64,
    poisson_truncation_error: f64,
}

impl PmfVector {
    pub fn hi(&self) -> i64 {
        self.lo + self.mass.len() as i64 - 1
    }

    pub fn p(&self, z: i64) -> f64 {
        if z < self.lo || z > self.hi() {
            0.0
        } else {
            self.mass[(z - self.lo) as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,p\n");
        for (i, p) in self.mass.iter().enumerate() {
            let _ = writeln!(out, "{},{:e}", self.lo + i as i64, p);
        }
        out
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&PmfMeta {
            window: [self.lo, self.hi()],
            boundary: &self.boundary,
            t: self.t,
            lambda: self.lambda,
            k_truncation: self.k_truncation,
            tol: self.tol,
            escaped_mass_bound: self.escaped_mass_bound,
            poisson_truncation_error: self.poisson_truncation_error,
        })
        .expect("serializable")
    }
}

/// Normalised Poisson(`mean`) weights on `[first, first + w.len())`,
/// covering all but a negligible (< 1e-30 relative) part of the mass.
pub(crate) struct PoissonWeights {
    pub first: u64,
    pub w: Vec<f64>,
}

impl PoissonWeights {
    pub fn new(mean: f64) -> Self {
        assert!(mean > 0.0 && mean.is_finite());
        let mode = mean.floor();
        let cutoff = 1e-32;
        let mut left = vec![1.0f64];
        let mut k = mode;
        while k > 0.0 {
            let next = left[left.len() - 1] * k / mean;
            if next < cutoff {
                break;
            }
            left.push(next);
            k -= 1.0;
        }
        let first = k as u64;
        let mut right = Vec::new();
        let mut cur = 1.0f64;
        let mut k = mode;
        loop {
            cur *= mean / (k + 1.0);
            if cur < cutoff {
                break;
            }
            right.push(cur);
            k += 1.0;
        }
        left.reverse();
        left.extend(right);
        // Normalising removes the error of evaluating the mode weight.
        let total: f64 = {
            let mut v = left.clone();
            v.sort_by(|a, b| a.total_cmp(b));
            v.iter().sum()
        };
        for x in left.iter_mut() {
            *x /= total;
        }
        PoissonWeights { first, w: left }
    }

    /// Smallest `K` with `P(N > K) < tol`, and that tail mass.
    pub fn truncation(&self, tol: f64) -> (u64, f64) {
        let mut tail = 0.0;
        for (i, &w) in self.w.iter().enumerate().rev() {
            if tail + w >= tol {
                return (self.first + i as u64, tail);
            }
            tail += w;
        }
        (self.first, tail)
    }
}

/// Unnormalised log Poisson pmf, for independent checks.
pub fn ln_poisson(mean: f64, k: u64) -> f64 {
    -mean + k as f64 * mean.ln() - ln_gamma(k as f64 + 1.0)
}

const FLUSH: f64 = 1e-290;

struct Kernel {
    stay: Vec<f64>,
    to_right: Vec<f64>,
    to_left: Vec<f64>,
    periodic: bool,
}

impl Kernel {
    fn new(rates: &ChainRates, lambda: f64) -> Self {
        let n = rates.len();
        let mut stay = vec![0.0; n];
        let mut to_right = vec![0.0; n];
        let mut to_left = vec![0.0; n];
        for i in 0..n {
            to_right[i] = rates.right[i] / lambda;
            to_left[i] = rates.left[i] / lambda;
            stay[i] = 1.0 - to_right[i] - to_left[i];
        }
        Kernel { stay, to_right, to_left, periodic: rates.boundary == Boundary::Periodic }
    }

    /// One step `next = p P`; returns mass that left the window plus
    /// flushed underflow.
    fn step(&self, p: &[f64], next: &mut [f64]) -> f64 {
        let n = p.len();
        if n == 1 {
            next[0] = self.stay[0] * p[0];
            return if self.periodic { 0.0 } else { p[0] * (self.to_left[0] + self.to_right[0]) };
        }
        for i in 1..n - 1 {
            next[i] = self.stay[i] * p[i] + self.to_right[i - 1] * p[i - 1] + self.to_left[i + 1] * p[i + 1];
        }
        let mut lost = 0.0;
        if self.periodic {
            next[0] = self.stay[0] * p[0] + self.to_right[n - 1] * p[n - 1] + self.to_left[1] * p[1];
            next[n - 1] = self.stay[n - 1] * p[n - 1] + self.to_right[n - 2] * p[n - 2] + self.to_left[0] * p[0];
        } else {
            next[0] = self.stay[0] * p[0] + self.to_left[1] * p[1];
            next[n - 1] = self.stay[n - 1] * p[n - 1] + self.to_right[n - 2] * p[n - 2];
            lost = self.to_left[0] * p[0] + self.to_right[n - 1] * p[n - 1];
        }
        for x in next.iter_mut() {
            if *x < FLUSH && *x != 0.0 {
                lost += *x;
                *x = 0.0;
            }
        }
        lost
    }
}

/// Transient law at time `t` for general nearest-neighbour rates.
pub fn transient_law(rates: &ChainRates, lo: i64, t: f64, opts: PmfOptions) -> Result<PmfVector> {
    let n = rates.len();
    if n == 0 {
        return Err(invalid("window must contain at least one site"));
    }
    if rates.boundary == Boundary::Periodic && n < 2 {
        return Err(invalid("periodic window needs at least two sites"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(invalid(format!("time must be finite and non-negative, got {t}")));
    }
    if !(opts.tol > 0.0 && opts.tol <= 1e-2) {
        return Err(invalid(format!("tolerance must lie in (0, 1e-2], got {}", opts.tol)));
    }
    let start = usize::try_from(opts.start - lo)
        .ok()
        .filter(|&i| i < n)
        .ok_or_else(|| invalid(format!("start site {} outside window", opts.start)))?;

    let mut p = vec![0.0; n];
    p[start] = 1.0;
    let lambda = rates.max_exit_rate();
    let mean = lambda * t;
    let mut out = PmfVector {
        lo,
        boundary: rates.boundary,
        t,
        mass: p.clone(),
        escaped_mass_bound: 0.0,
        poisson_truncation_error: 0.0,
        lambda,
        k_truncation: 0,
        tol: opts.tol,
    };
    if mean == 0.0 {
        return Ok(out);
    }

    let weights = PoissonWeights::new(mean);
    let (k_max, tail) = weights.truncation(opts.tol);
    if k_max > opts.step_budget {
        return Err(Error::StepBudgetExceeded { tol: opts.tol, required: k_max, budget: opts.step_budget });
    }
    let kernel = Kernel::new(rates, lambda);
    let mut acc = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut escaped = 0.0f64;
    let mut escaped_weighted = 0.0f64;
    for k in 0..=k_max {
        if k >= weights.first {
            let w = weights.w[(k - weights.first) as usize];
            for (a, x) in acc.iter_mut().zip(&p) {
                *a += w * x;
            }
            escaped_weighted += w * escaped;
        }
        if k < k_max {
            escaped += kernel.step(&p, &mut next);
            std::mem::swap(&mut p, &mut next);
        }
    }
    out.mass = acc;
    out.escaped_mass_bound = escaped_weighted;
    out.poisson_truncation_error = tail;
    out.k_truncation = k_max;
    Ok(out)
}

/// Transient law of the trap model on a window, started at `opts.start`.
pub fn pmf_at_time(window: &Window, t: f64, boundary: Boundary, opts: PmfOptions) -> Result<PmfVector> {
    let rates = ChainRates::trap_model(&window.sigma, boundary);
    transient_law(&rates, window.lo, t, opts)
}

/// Equilibrium of the periodic trap model: proportional to the depths.
pub fn equilibrium_periodic(sigma: &[f64]) -> Result<Vec<f64>> {
    if sigma.len() < 2 {
        return Err(invalid("periodic window needs at least two sites"));
    }
    if sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(invalid("depths must be positive and finite"));
    }
    let total: f64 = crate::stats::CompensatedSum::from_iter(sigma.iter().copied()).value();
    Ok(sigma.iter().map(|s| s / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetailedBalance {
    pub holds: bool,
    pub max_violation: f64,
}

/// Checks `sigma_x w(x -> y) = sigma_y w(y -> x)` over all neighbour pairs
/// (including the wrap-around pair when periodic).
pub fn detailed_balance_check(sigma: &[f64], rates: &ChainRates) -> DetailedBalance {
    let n = sigma.len();
    assert_eq!(n, rates.len());
    let mut worst = 0.0f64;
    let pairs = match rates.boundary {
        Boundary::Periodic if n > 2 => n,
        Boundary::Periodic if n == 2 => 1,
        _ => n.saturating_sub(1),
    };
    for i in 0..pairs {
        let j = (i + 1) % n;
        let forward = sigma[i] * rates.right[i];
        let backward = sigma[j] * rates.left[j];
        worst = worst.max((forward - backward).abs());
        if n == 2 && rates.boundary == Boundary::Periodic {
            // Both edges of the 2-cycle join the same pair of sites.
            worst = worst.max((sigma[i] * rates.left[i] - sigma[j] * rates.right[j]).abs());
        }
    }
    DetailedBalance { holds: worst <= 1e-15 * 8.0, max_violation: worst }
}

/// Return probability to `start` on a periodic window along an increasing
/// time grid. Fails if it increases by more than `tol` between grid points
/// or ends more than `tol` below the equilibrium weight of `start`.
pub fn monotone_return_probability(window: &Window, start: i64, t_grid: &[f64], tol: f64) -> Result<Vec<f64>> {
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("time grid must be strictly increasing"));
    }
    let idx = window.index(start).ok_or_else(|| invalid("start outside window"))?;
    let pi = equilibrium_periodic(&window.sigma)?;
    let opts = PmfOptions { tol: 1e-14_f64.max(tol * 1e-3).min(1e-2), start, ..Default::default() };
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        values.push(pmf_at_time(window, t, Boundary::Periodic, opts)?.p(start));
    }
    for (i, w) in values.windows(2).enumerate() {
        if w[1] > w[0] + tol {
            return Err(Error::MonotonicityViolation { i, j: i + 1, a: w[0], b: w[1] });
        }
    }
    if let Some(&last) = values.last() {
        if last < pi[idx] - tol {
            return Err(Error::MonotonicityViolation { i: values.len() - 1, j: values.len() - 1, a: last, b: pi[idx] });
        }
    }
    Ok(values)
}

/// Outcome of checking that a window is wide enough at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowCheck {
    pub pmf: PmfVector,
    /// Max change on the inner half after doubling, when that test ran.
    pub doubling_change: Option<f64>,
}

/// Computes the absorbing-window law on `[-half, half]` and certifies it:
/// either the escaped-mass bound is below `tol`, or doubling the window
/// moves no inner-half entry by `tol` or more.
pub fn validated_pmf(landscape: &Landscape, half: i64, t: f64, tol: f64, opts: PmfOptions) -> Result<WindowCheck> {
    let window = Window::from_landscape(landscape, -half, half);
    let pmf = pmf_at_time(&window, t, Boundary::Absorbing, opts)?;
    if pmf.escaped_mass_bound < tol {
        return Ok(WindowCheck { pmf, doubling_change: None });
    }
    let wide = Window::from_landscape(landscape, -2 * half, 2 * half);
    let wide_pmf = pmf_at_time(&wide, t, Boundary::Absorbing, opts)?;
    let inner = half / 2;
    let change = (-inner..=inner).map(|z| (pmf.p(z) - wide_pmf.p(z)).abs()).fold(0.0, f64::max);
    if change < tol {
        Ok(WindowCheck { pmf, doubling_change: Some(change) })
    } else {
        Err(Error::WindowValidation { change, tol })
    }
}

/// Independent reference: classical fourth-order Runge-Kutta on the dense
/// forward equation `p' = p Q`.
pub mod reference {
    use super::Boundary;

    /// Dense generator built directly from the depths.
    pub fn generator(sigma: &[f64], boundary: Boundary) -> Vec<Vec<f64>> {
        let n = sigma.len();
        let mut q = vec![vec![0.0; n]; n];
        for z in 0..n {
            let rate = 1.0 / (2.0 * sigma[z]);
            for nb in [z as i64 - 1, z as i64 + 1] {
                let target = match boundary {
                    Boundary::Periodic => Some(nb.rem_euclid(n as i64) as usize),
                    Boundary::Absorbing => (nb >= 0 && nb < n as i64).then_some(nb as usize),
                };
                if let Some(y) = target {
                    q[z][y] += rate;
                }
                q[z][z] -= rate;
            }
        }
        q
    }

    fn deriv(q: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
        let n = p.len();
        let mut d = vec![0.0; n];
        for z in 0..n {
            if p[z] == 0.0 {
                continue;
            }
            for y in 0..n {
                d[y] += p[z] * q[z][y];
            }
        }
        d
    }

    /// Law at time `t` from start index `start` with `steps` RK4 steps.
    pub fn rk4_transient(sigma: &[f64], boundary: Boundary, start: usize, t: f64, steps: usize) -> Vec<f64> {
        let q = generator(sigma, boundary);
        let n = sigma.len();
        let mut p = vec![0.0; n];
        p[start] = 1.0;
        if t == 0.0 {
            return p;
        }
        let dt = t / steps as f64;
        let axpy = |p: &[f64], k: &[f64], c: f64| -> Vec<f64> { p.iter().zip(k).map(|(a, b)| a + c * b).collect() };
        for _ in 0..steps {
            let k1 = deriv(&q, &p);
            let k2 = deriv(&q, &axpy(&p, &k1, dt / 2.0));
            let k3 = deriv(&q, &axpy(&p, &k2, dt / 2.0));
            let k4 = deriv(&q, &axpy(&p, &k3, dt));
            for i in 0..n {
                p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        p
    }
}
