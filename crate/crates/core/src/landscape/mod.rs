//! Trap landscapes: slowly varying tail families, exact depth sampling and
//! the time-dependent localisation quantities derived from a landscape.

mod depth;
mod frame;
mod scaling;
mod tail;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::RwLock;

pub use depth::{ln_relative_excess, sum_depths, Depth, LINEAR_LIMIT};
pub use frame::{localisation_frame, nearest_deep_sites, strict_radius, EventFlags, FrameOptions, LocalisationFrame};
pub use scaling::{scaling_function, Scaling, SCALING_FLOOR};
pub use tail::{Level, TailFunction, LEVEL_RTOL};

use crate::error::{invalid, Error, Result};
use crate::rng::{key, open01, Domain};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Base {
    Seeded,
    Constant(Depth),
}

#[derive(Debug, Default)]
struct Realized {
    lo: i64,
    depths: Vec<Depth>,
}

/// A two-sided i.i.d. trap landscape `z -> sigma_z` on the integers.
///
/// Depths are a pure function of `(tail, seed, z)`; the realization cache
/// only records which window has been looked at. Constructed landscapes
/// (fixtures) replace the random base by explicit sites.
#[derive(Debug)]
pub struct Landscape {
    tail: TailFunction,
    seed: u64,
    base: Base,
    overrides: BTreeMap<i64, Depth>,
    realized: RwLock<Realized>,
}

impl Clone for Landscape {
    fn clone(&self) -> Self {
        let r = self.realized.read().expect("realization cache poisoned");
        Landscape {
            tail: self.tail,
            seed: self.seed,
            base: self.base,
            overrides: self.overrides.clone(),
            realized: RwLock::new(Realized { lo: r.lo, depths: r.depths.clone() }),
        }
    }
}

impl Landscape {
    pub fn seeded(tail: TailFunction, seed: u64) -> Self {
        Landscape {
            tail,
            seed,
            base: Base::Seeded,
            overrides: BTreeMap::new(),
            realized: RwLock::new(Realized::default()),
        }
    }

    /// Explicit depths on `[lo, lo + depths.len())`, constant `outside`.
    pub fn from_window(tail: TailFunction, lo: i64, depths: &[f64], outside: f64) -> Result<Self> {
        if depths.iter().chain(std::iter::once(&outside)).any(|&d| !(d > 0.0)) {
            return Err(invalid("trap depths must be strictly positive"));
        }
        let mut l = Landscape::seeded(tail, 0);
        l.base = Base::Constant(Depth::from_value(outside));
        for (i, &d) in depths.iter().enumerate() {
            l.overrides.insert(lo + i as i64, Depth::from_value(d));
        }
        Ok(l)
    }

    /// Replaces single sites; returns the modified landscape.
    pub fn with_override(mut self, z: i64, depth: Depth) -> Self {
        assert!(depth.value() > 0.0, "trap depths must be strictly positive");
        self.overrides.insert(z, depth);
        *self.realized.get_mut().expect("realization cache poisoned") = Realized::default();
        self
    }

    pub fn tail(&self) -> TailFunction {
        self.tail
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Depth at `z`, computed without touching the cache.
    #[inline]
    pub fn depth(&self, z: i64) -> Depth {
        if let Some(d) = self.overrides.get(&z) {
            return *d;
        }
        match self.base {
            Base::Constant(d) => d,
            Base::Seeded => {
                let u = open01(key(&[self.seed, Domain::Landscape as u64, z as u64]));
                self.tail.sample_unchecked(u)
            }
        }
    }

    /// Depths on `[lo, hi]`, extending the realized window as needed.
    pub fn realize(&self, lo: i64, hi: i64) -> Vec<Depth> {
        assert!(lo <= hi);
        {
            let r = self.realized.read().expect("realization cache poisoned");
            let r_hi = r.lo + r.depths.len() as i64 - 1;
            if !r.depths.is_empty() && r.lo <= lo && hi <= r_hi {
                let a = (lo - r.lo) as usize;
                return r.depths[a..=a + (hi - lo) as usize].to_vec();
            }
        }
        let mut r = self.realized.write().expect("realization cache poisoned");
        let (new_lo, new_hi) = if r.depths.is_empty() {
            (lo.min(0), hi.max(0))
        } else {
            (lo.min(r.lo), hi.max(r.lo + r.depths.len() as i64 - 1))
        };
        if r.depths.is_empty() || new_lo < r.lo || new_hi >= r.lo + r.depths.len() as i64 {
            let fresh: Vec<Depth> = (new_lo..=new_hi).map(|z| self.depth(z)).collect();
            r.lo = new_lo;
            r.depths = fresh;
        }
        let a = (lo - r.lo) as usize;
        r.depths[a..=a + (hi - lo) as usize].to_vec()
    }

    pub fn realized_range(&self) -> Option<(i64, i64)> {
        let r = self.realized.read().expect("realization cache poisoned");
        if r.depths.is_empty() {
            None
        } else {
            Some((r.lo, r.lo + r.depths.len() as i64 - 1))
        }
    }

    pub fn descriptor(&self) -> LandscapeDescriptor {
        LandscapeDescriptor { tail: self.tail, seed: self.seed }
    }

    /// CSV export of the window `[lo, hi]`: `z,sigma,log_sigma`.
    pub fn window_csv(&self, lo: i64, hi: i64) -> String {
        let mut out = String::from("z,sigma,log_sigma\n");
        for (i, d) in self.realize(lo, hi).iter().enumerate() {
            let _ = writeln!(out, "{},{:e},{}", lo + i as i64, d.value(), d.ln());
        }
        out
    }
}

/// Serializable identity of a seeded landscape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeDescriptor {
    pub tail: TailFunction,
    pub seed: u64,
}

impl LandscapeDescriptor {
    /// Key-value text record, one `key = value` per line.
    pub fn to_record(&self) -> String {
        let mut s = format!("family = {}\n", self.tail.name());
        if let Some(b) = self.tail.beta() {
            let _ = writeln!(s, "beta = {b}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "x0 = {}", self.tail.x0());
        s
    }

    pub fn parse_record(text: &str) -> Result<Self> {
        let mut family = None;
        let mut beta = None;
        let mut seed = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            let v = v.trim();
            let bad = |what: &str| Error::Config { line: i + 1, msg: format!("bad {what} '{v}'") };
            match k.trim() {
                "family" => family = Some(v.to_string()),
                "beta" => beta = Some(v.parse::<f64>().map_err(|_| bad("beta"))?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| bad("seed"))?),
                "x0" => {
                    let x0: f64 = v.parse().map_err(|_| bad("x0"))?;
                    if (x0 - std::f64::consts::E).abs() > 1e-12 {
                        return Err(bad("x0 (only e is supported)"));
                    }
                }
                other => {
                    return Err(Error::Config { line: i + 1, msg: format!("unknown key '{other}'") })
                }
            }
        }
        let family = family.ok_or_else(|| invalid("descriptor missing 'family'"))?;
        let tail = match (family.as_str(), beta) {
            ("log-power", Some(b)) => TailFunction::log_power(b)?,
            ("log-power", None) => return Err(invalid("log-power needs 'beta'")),
            (f, _) => f.parse()?,
        };
        let seed = seed.ok_or_else(|| invalid("descriptor missing 'seed'"))?;
        Ok(LandscapeDescriptor { tail, seed })
    }

    pub fn build(&self) -> Landscape {
        Landscape::seeded(self.tail, self.seed)
    }
}
