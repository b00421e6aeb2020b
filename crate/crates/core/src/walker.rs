//! Exact simulation of the trap-model path and of the embedded simple
//! random walk.
//!
//! The walk holds at `z` for an exponential time with mean `sigma_z`, then
//! steps to `z - 1` or `z + 1` with probability one half each. Paths are
//! right-continuous: a jump landing exactly at `t` counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, RngCore};
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::landscape::{Landscape, LocalisationFrame};
use crate::stats::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub jump_budget: u64,
    /// Keep the full jump chain and holding times.
    pub record_path: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { jump_budget: 1_000_000_000, record_path: false }
    }
}

/// One trajectory up to time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub t: f64,
    /// Visited sites, starting with the origin (only with `record_path`).
    pub jump_sites: Vec<i64>,
    /// Completed holding times, one per jump (only with `record_path`).
    pub hold_times: Vec<f64>,
    pub n_jumps: u64,
    /// Time of the last jump at or before `t`.
    pub total_time: f64,
    /// Visit counts per site before the localisation set is hit
    /// (up to `t` when it is never hit).
    pub local_times: BTreeMap<i64, u64>,
    pub tau1: Option<f64>,
    pub first_gamma_site: Option<i64>,
    pub tau2: Option<f64>,
    pub position_at_t: i64,
}

#[derive(Debug, Serialize)]
struct PathSummary {
    tau1: Option<f64>,
    tau2: Option<f64>,
    ybar: Option<i64>,
    x_t: i64,
}

impl PathRecord {
    /// CSV dump `step,site,hold_time`; the last site's hold is censored
    /// at `t` and left empty.
    pub fn path_csv(&self) -> String {
        let mut out = String::from("step,site,hold_time\n");
        for (i, site) in self.jump_sites.iter().enumerate() {
            match self.hold_times.get(i) {
                Some(h) => writeln!(out, "{i},{site},{h}"),
                None => writeln!(out, "{i},{site},"),
            }
            .expect("write to string");
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string(&PathSummary {
            tau1: self.tau1,
            tau2: self.tau2,
            ybar: self.first_gamma_site,
            x_t: self.position_at_t,
        })
        .expect("serializable")
    }
}

/// Holding means on a growing window around the origin.
struct SiteBuffer<'a> {
    landscape: &'a Landscape,
    lo: i64,
    means: Vec<f64>,
    visits: Vec<u64>,
}

impl<'a> SiteBuffer<'a> {
    fn new(landscape: &'a Landscape) -> Self {
        let mut b = SiteBuffer { landscape, lo: 0, means: Vec::new(), visits: Vec::new() };
        b.fill(-64, 64);
        b
    }

    fn fill(&mut self, lo: i64, hi: i64) {
        let depths = self.landscape.realize(lo, hi);
        let mut visits = vec![0u64; depths.len()];
        if !self.means.is_empty() {
            let off = (self.lo - lo) as usize;
            visits[off..off + self.visits.len()].copy_from_slice(&self.visits);
        }
        self.means = depths.iter().map(|d| d.value()).collect();
        self.visits = visits;
        self.lo = lo;
    }

    #[inline]
    fn index(&mut self, z: i64) -> usize {
        let hi = self.lo + self.means.len() as i64 - 1;
        if z < self.lo || z > hi {
            let width = self.means.len() as i64;
            self.fill(self.lo.min(z) - width, hi.max(z) + width);
        }
        (z - self.lo) as usize
    }

    fn local_times(&self) -> BTreeMap<i64, u64> {
        self.visits
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(i, &v)| (self.lo + i as i64, v))
            .collect()
    }
}

/// Fair direction bits, 64 per draw.
struct CoinBits {
    bits: u64,
    left: u32,
}

impl CoinBits {
    fn new() -> Self {
        CoinBits { bits: 0, left: 0 }
    }

    #[inline]
    fn step<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> i64 {
        if self.left == 0 {
            self.bits = rng.next_u64();
            self.left = 64;
        }
        let b = self.bits & 1;
        self.bits >>= 1;
        self.left -= 1;
        if b == 1 {
            1
        } else {
            -1
        }
    }
}

/// Simulates the trap-model path from the origin up to time `t`. With a
/// frame, also records the hitting time of the localisation set, the site
/// hit first, and the exit time from its `r/h` neighbourhood.
pub fn simulate_to_time<R: Rng + ?Sized>(
    landscape: &Landscape,
    t: f64,
    frame: Option<&LocalisationFrame>,
    rng: &mut R,
    opts: SimOptions,
) -> Result<PathRecord> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(invalid(format!("time must be finite and non-negative, got {t}")));
    }
    let mut sites = SiteBuffer::new(landscape);
    let mut coins = CoinBits::new();
    let mut clock = CompensatedSum::new();
    let mut pos = 0i64;
    let mut n_jumps = 0u64;
    let mut jump_sites = Vec::new();
    let mut hold_times = Vec::new();
    if opts.record_path {
        jump_sites.push(pos);
    }

    let mut tau1 = None;
    let mut ybar = None;
    let mut tau2 = None;
    let radius = frame.map(|f| f.radius()).unwrap_or(f64::INFINITY);
    if let Some(f) = frame {
        if f.in_gamma(pos) {
            tau1 = Some(0.0);
            ybar = Some(pos);
        }
    }

    if t > 0.0 {
        loop {
            let i = sites.index(pos);
            let e: f64 = rng.sample(Exp1);
            let hold = sites.means[i] * e;
            let now = clock.value();
            if now + hold > t {
                break;
            }
            if n_jumps >= opts.jump_budget {
                return Err(Error::JumpBudgetExceeded { budget: opts.jump_budget, reached: now, target: t });
            }
            if tau1.is_none() {
                sites.visits[i] += 1;
            }
            clock.add(hold);
            n_jumps += 1;
            pos += coins.step(rng);
            if opts.record_path {
                hold_times.push(hold);
                jump_sites.push(pos);
            }
            if let Some(f) = frame {
                let now = clock.value();
                match (tau1, ybar) {
                    (None, _) if f.in_gamma(pos) => {
                        tau1 = Some(now);
                        ybar = Some(pos);
                    }
                    (Some(_), Some(y)) if tau2.is_none() && ((pos - y).abs() as f64) >= radius => {
                        tau2 = Some(now);
                    }
                    _ => {}
                }
            }
        }
    }
    // Visits to a site with tau1 unset but no completed hold do not count.
    Ok(PathRecord {
        t,
        jump_sites,
        hold_times,
        n_jumps,
        total_time: clock.value(),
        local_times: sites.local_times(),
        tau1,
        first_gamma_site: ybar,
        tau2,
        position_at_t: pos,
    })
}

/// `P(SRW from 0 hits x before y) = |y| / (x + |y|)` for `x >= 1`, `y <= -1`.
pub fn srw_hitting_probability(x: i64, y: i64) -> Result<f64> {
    if x < 1 || y > -1 {
        return Err(invalid(format!("need x >= 1 and y <= -1, got ({x}, {y})")));
    }
    let (x, y) = (x as f64, y.unsigned_abs() as f64);
    Ok(y / (x + y))
}

/// Runs one simple random walk from 0 until it hits `x` or `y`; true if `x`
/// came first.
pub fn srw_hits_first<R: RngCore + ?Sized>(x: i64, y: i64, rng: &mut R) -> bool {
    debug_assert!(x >= 1 && y <= -1);
    let mut coins = CoinBits::new();
    let mut pos = 0i64;
    loop {
        pos += coins.step(rng);
        if pos == x {
            return true;
        }
        if pos == y {
            return false;
        }
    }
}

/// Simple random walk run until `|D_n| >= level`, with its local times.
#[derive(Debug, Clone, PartialEq)]
pub struct SrwExcursion {
    pub level: u64,
    /// `local_times[z + level - 1]` counts visits to `z` for `|z| < level`.
    pub local_times: Vec<u64>,
    /// Exit step `a_l`.
    pub exit_step: u64,
    pub exit_site: i64,
}

impl SrwExcursion {
    pub fn local_time(&self, z: i64) -> u64 {
        let l = self.level as i64;
        if z.abs() >= l {
            0
        } else {
            self.local_times[(z + l - 1) as usize]
        }
    }

    pub fn max_local_time(&self) -> u64 {
        self.local_times.iter().copied().max().unwrap_or(0)
    }

    pub fn local_time_map(&self) -> BTreeMap<i64, u64> {
        let l = self.level as i64;
        self.local_times
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(i, &v)| (i as i64 - l + 1, v))
            .collect()
    }
}

pub fn srw_excursion<R: RngCore + ?Sized>(level: u64, rng: &mut R) -> Result<SrwExcursion> {
    if level == 0 {
        return Err(invalid("excursion level must be at least 1"));
    }
    let l = level as i64;
    let mut local_times = vec![0u64; (2 * l - 1) as usize];
    let mut coins = CoinBits::new();
    let mut pos = 0i64;
    let mut steps = 0u64;
    while pos.abs() < l {
        local_times[(pos + l - 1) as usize] += 1;
        pos += coins.step(rng);
        steps += 1;
    }
    Ok(SrwExcursion { level, local_times, exit_step: steps, exit_site: pos })
}

/// Probability that the walk reaches `Z^(1)` before `Z^(2)`.
pub fn first_gamma_site_distribution(frame: &LocalisationFrame) -> f64 {
    let a = frame.z1.unsigned_abs() as f64;
    let b = frame.z2.unsigned_abs() as f64;
    b / (a + b)
}
