//! Frozen small landscapes used by the oracle cross-checks.

use crate::pmf::Window;

/// 21 sites on `[-10, 10]`, deep traps at both edges.
pub const WINDOW_21: [f64; 21] = [
    4.0e3, 3.1, 7.5, 2.9, 12.0, 4.4, 3.3, 25.0, 5.2, 2.8, 6.0, 3.7, 9.1, 2.75, 4.9, 18.0, 3.0, 5.5, 8.2, 3.4, 6.0e3,
];

/// 11-site periodic ring on `[-5, 5]`.
pub const RING_11: [f64; 11] = [3.0, 5.0, 2.8, 8.0, 4.0, 12.0, 3.5, 6.0, 2.9, 10.0, 7.0];

/// Depth used outside the 21-site window when simulating paths on the line.
pub const OUTSIDE_21: f64 = std::f64::consts::E;

pub fn window_21() -> Window {
    Window::new(-10, WINDOW_21.to_vec()).expect("valid fixture")
}

pub fn ring_11() -> Window {
    Window::new(-5, RING_11.to_vec()).expect("valid fixture")
}

/// Fifty increasing times from 0.05 up to a horizon long enough for the
/// ring to equilibrate to within 1e-9.
pub fn ring_time_grid() -> Vec<f64> {
    let (a, b): (f64, f64) = (0.05, 1.0e4);
    (0..50).map(|i| a * (b / a).powf(i as f64 / 49.0)).collect()
}
