use slowtrap::landscape::{
    localisation_frame, scaling_function, Depth, FrameOptions, Landscape, LandscapeDescriptor, TailFunction,
};

const FAMILIES: [TailFunction; 3] = [TailFunction::Log, TailFunction::LogPower(2.0), TailFunction::ExpSqrtLog];

/// Plain bisection on `x L(x) >= t` in log space, written independently of
/// the library solver.
fn level_oracle(tail: TailFunction, t: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, t.ln().max(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.exp() * tail.eval(mid.exp()) >= t {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.exp()
}

#[test]
fn level_matches_independent_bisection() {
    for tail in FAMILIES {
        for k in 1..=30 {
            let t = 10f64.powf(0.5 * k as f64);
            let lv = tail.level(t).unwrap();
            let oracle = level_oracle(tail, t);
            assert!((lv.value - oracle).abs() <= 1e-10 * oracle, "{tail} t={t}: {} vs {oracle}", lv.value);
        }
    }
}

#[test]
fn frame_quantities_match_direct_sums() {
    let tail = TailFunction::ExpSqrtLog;
    let t = 1e6;
    let h = scaling_function(tail, t).unwrap().h;
    for seed in 0..40 {
        let l = Landscape::seeded(tail, seed);
        let f = localisation_frame(&l, t, h, FrameOptions::default()).unwrap();
        assert!(f.z1 >= 1 && f.z2 <= 0);
        assert!(l.depth(f.z1).exceeds(f.ell) && l.depth(f.z2).exceeds(f.ell));
        let between: Vec<f64> = ((f.z2 + 1)..f.z1).map(|z| l.depth(z).value()).collect();
        assert!(between.iter().all(|&s| s <= f.ell));
        let s: f64 = between.iter().sum();
        assert!((f.s_t.value() - s).abs() <= 1e-12 * s.max(1.0));
        let m = l.depth(f.z1).value().min(l.depth(f.z2).value());
        assert_eq!(f.m_t.value(), m);
        let k = f.radius_sites();
        assert!((k as f64) < f.radius() && (k + 1) as f64 >= f.radius());
        let mut sbar = 0.0;
        for c in [f.z1, f.z2] {
            for off in 1..=k {
                sbar += l.depth(c - off).value() + l.depth(c + off).value();
            }
        }
        assert!((f.sbar.value() - sbar).abs() <= 1e-12 * sbar);
        assert_eq!(f.events.a, s < t / h / f.d_t as f64);
        assert_eq!(f.events.c, sbar < f.ell / h);
    }
}

#[test]
fn landscapes_are_reproducible_from_descriptor() {
    let l = Landscape::seeded(TailFunction::LogPower(1.5), 77);
    let rec = l.descriptor().to_record();
    let back = LandscapeDescriptor::parse_record(&rec).unwrap().build();
    for z in -500..500 {
        assert_eq!(l.depth(z), back.depth(z));
    }
    let window = back.realize(-20, 20);
    assert_eq!(window[20], l.depth(0));
}

#[test]
fn depth_comparisons_survive_overflow() {
    // Log depths overflow f64 once 1/u exceeds about 709.
    let huge = Depth::from_ln(1e6);
    assert!(huge.exceeds(f64::MAX));
    assert!(!huge.below(1e300));
    let small = Depth::from_value(3.0);
    assert!(small < huge);
}

#[test]
fn scaling_is_pre_asymptotic_only_at_small_t() {
    let tail = TailFunction::ExpSqrtLog;
    assert!(scaling_function(tail, 1e4).is_err());
    for t in [1e5, 1e6, 1e8, 1e12] {
        let s = scaling_function(tail, t).unwrap();
        assert!(s.h >= 2.0 && s.h * s.h < s.r / 4.0);
    }
}
