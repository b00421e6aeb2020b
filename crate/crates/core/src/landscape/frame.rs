use super::depth::{sum_depths, Depth};
use super::Landscape;
use crate::error::{invalid, Error, Result};

/// Flags for the three inhomogeneity events at `(t, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventFlags {
    /// `S_t * d_t < t / h`.
    pub a: bool,
    /// `m_t > t h^2 / r_t`.
    pub b: bool,
    /// `Sbar_t < ell_t / h`.
    pub c: bool,
}

impl EventFlags {
    pub fn all(&self) -> bool {
        self.a && self.b && self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOptions {
    pub scan_budget: u64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions { scan_budget: 1_000_000_000 }
    }
}

/// Everything about a landscape that depends on the time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalisationFrame {
    pub t: f64,
    pub ell: f64,
    pub r: f64,
    /// Nearest site `>= 1` deeper than the level.
    pub z1: i64,
    /// Nearest site `<= 0` deeper than the level.
    pub z2: i64,
    pub s_t: Depth,
    pub d_t: u64,
    pub m_t: Depth,
    pub sbar: Depth,
    pub h: f64,
    pub events: EventFlags,
    /// Neither `r/h` neighbourhood of the two sites contains the origin.
    pub origin_excluded: bool,
    pub sigma_z1: Depth,
    pub sigma_z2: Depth,
}

impl LocalisationFrame {
    pub fn gamma(&self) -> [i64; 2] {
        [self.z1, self.z2]
    }

    pub fn in_gamma(&self, z: i64) -> bool {
        z == self.z1 || z == self.z2
    }

    /// Radius `r_t / h_t` of the confinement interval.
    pub fn radius(&self) -> f64 {
        self.r / self.h
    }

    /// Largest offset `k` with `k < r/h`.
    pub fn radius_sites(&self) -> i64 {
        strict_radius(self.radius())
    }
}

/// Largest integer `k` with `k < radius` (zero when `radius <= 1`).
pub fn strict_radius(radius: f64) -> i64 {
    if radius <= 1.0 {
        0
    } else {
        radius.ceil() as i64 - 1
    }
}

/// Nearest sites `>= 1` and `<= 0` strictly deeper than `ell`.
pub fn nearest_deep_sites(landscape: &Landscape, ell: f64, opts: FrameOptions) -> Result<(i64, i64)> {
    let mut scanned = 0u64;
    let mut scan = |start: i64, step: i64| -> Result<i64> {
        let mut z = start;
        loop {
            if scanned >= opts.scan_budget {
                return Err(Error::ScanBudgetExceeded { budget: opts.scan_budget });
            }
            scanned += 1;
            if landscape.depth(z).exceeds(ell) {
                return Ok(z);
            }
            z += step;
        }
    };
    let z1 = scan(1, 1)?;
    let z2 = scan(0, -1)?;
    Ok((z1, z2))
}

pub fn localisation_frame(
    landscape: &Landscape,
    t: f64,
    h: f64,
    opts: FrameOptions,
) -> Result<LocalisationFrame> {
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid(format!("scaling value must be positive, got {h}")));
    }
    let tail = landscape.tail();
    let ell = tail.level(t)?.value;
    let r = tail.eval(ell);

    let (z1, z2) = nearest_deep_sites(landscape, ell, opts)?;

    let k = strict_radius(r / h);
    let window = landscape.realize(z2 - k, z1 + k);
    let at = |z: i64| window[(z - (z2 - k)) as usize];

    let between: Vec<Depth> = ((z2 + 1)..z1).map(at).collect();
    let s_t = sum_depths(&between);
    let sigma_z1 = at(z1);
    let sigma_z2 = at(z2);
    let m_t = if sigma_z1 < sigma_z2 { sigma_z1 } else { sigma_z2 };
    let d_t = z1.unsigned_abs().max(z2.unsigned_abs());

    let mut neighbourhood = Vec::with_capacity(4 * k as usize);
    for centre in [z1, z2] {
        for off in 1..=k {
            neighbourhood.push(at(centre - off));
            neighbourhood.push(at(centre + off));
        }
    }
    let sbar = sum_depths(&neighbourhood);

    let events = EventFlags {
        a: s_t.below(t / h / d_t as f64),
        b: m_t.exceeds(t * h * h / r),
        c: sbar.below(ell / h),
    };
    let radius = r / h;
    let origin_excluded = (z1 as f64) >= radius && (z2.unsigned_abs() as f64) >= radius;

    Ok(LocalisationFrame {
        t,
        ell,
        r,
        z1,
        z2,
        s_t,
        d_t,
        m_t,
        sbar,
        h,
        events,
        origin_excluded,
        sigma_z1,
        sigma_z2,
    })
}

#[cfg(test)]
mod tests {
    use super::super::TailFunction;
    use super::*;

    #[test]
    fn constructed_first_exceedence() {
        let t = 1e4;
        let ell = TailFunction::Log.level(t).unwrap().value;
        let l = Landscape::from_window(
            TailFunction::Log,
            -1,
            &[ell + 2.0, 5.0, ell + 1.0],
            3.0,
        )
        .unwrap();
        let f = localisation_frame(&l, t, 2.0, FrameOptions::default()).unwrap();
        assert_eq!((f.z1, f.z2), (1, -1));
        assert_eq!(f.s_t.value(), 5.0);
        assert_eq!(f.d_t, 1);
        assert_eq!(f.m_t.value(), ell + 1.0);
    }

    #[test]
    fn origin_can_be_deep() {
        let t = 1e4;
        let l = Landscape::from_window(TailFunction::Log, 0, &[1e9], 3.0)
            .unwrap()
            .with_override(4, Depth::from_value(1e9));
        let f = localisation_frame(&l, t, 2.0, FrameOptions::default()).unwrap();
        assert_eq!((f.z1, f.z2), (4, 0));
        assert_eq!(f.s_t.value(), 9.0);
    }

    #[test]
    fn scan_budget_is_enforced() {
        let l = Landscape::from_window(TailFunction::Log, 0, &[3.0], 3.0).unwrap();
        let err = localisation_frame(&l, 1e4, 2.0, FrameOptions { scan_budget: 1000 }).unwrap_err();
        assert_eq!(err, Error::ScanBudgetExceeded { budget: 1000 });
    }

    #[test]
    fn invariants_on_seeded_landscapes() {
        for seed in 0..200 {
            let l = Landscape::seeded(TailFunction::Log, seed);
            let f = localisation_frame(&l, 1e4, 2.0, FrameOptions::default()).unwrap();
            assert!(f.z1 >= 1 && f.z2 <= 0);
            assert!(l.depth(f.z1).exceeds(f.ell) && l.depth(f.z2).exceeds(f.ell));
            for z in (f.z2 + 1)..f.z1 {
                assert!(!l.depth(z).exceeds(f.ell));
            }
            assert_eq!(f.events.a, f.s_t.value() * (f.d_t as f64) < f.t / f.h);
            assert_eq!(f.events.c, f.sbar.below(f.ell / f.h));
        }
    }

    #[test]
    fn seeded_regression_fixture() {
        let l = Landscape::seeded(TailFunction::Log, 42);
        let f = localisation_frame(&l, 1e4, 2.0, FrameOptions::default()).unwrap();
        let again = localisation_frame(&l, 1e4, 2.0, FrameOptions::default()).unwrap();
        assert_eq!(f, again);
        assert!((f.ell - 1382.8).abs() < 0.1);
        assert!((f.r - f.ell.ln()).abs() < 1e-12);
        assert_eq!((f.z1, f.z2, f.d_t), (15, -12, 15));
        assert!((f.s_t.value() - 2722.1027947472558).abs() < 1e-9);
        assert_eq!(f.events, EventFlags { a: false, b: false, c: true });
    }
}
