//! Statistical helpers shared by the experiments: confidence intervals,
//! goodness-of-fit statistics and order statistics.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// 97.5% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Wilson score interval at 95% for `successes` out of `n`.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Median of an already sorted slice.
pub fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    assert!(n > 0, "median of empty sample");
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn median(values: &[f64]) -> f64 {
    median_sorted(&sorted(values))
}

/// Linear-interpolation quantile (type 7) of a sorted slice.
pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let n = v.len();
    assert!(n > 0);
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Distribution-free interval for the `q` quantile: the Wilson interval for
/// a proportion `q`, mapped onto order statistics.
pub fn quantile_interval_sorted(v: &[f64], q: f64) -> (f64, f64) {
    let n = v.len();
    assert!(n > 0);
    let k = ((q * n as f64).floor() as u64).min(n as u64);
    let (lo, hi) = wilson_interval(k, n as u64);
    let i_lo = ((lo * n as f64).floor() as usize).min(n - 1);
    let i_hi = ((hi * n as f64).ceil() as usize).saturating_sub(1).min(n - 1);
    (v[i_lo], v[i_hi.max(i_lo)])
}

pub fn median_interval_sorted(v: &[f64]) -> (f64, f64) {
    quantile_interval_sorted(v, 0.5)
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// One-sample Kolmogorov-Smirnov statistic against a distribution given by
/// its CDF `cdf` and left limit `cdf_left`. Atoms in the reference
/// distribution and ties in the sample are handled exactly.
pub fn ks_statistic<F, G>(sample: &[f64], cdf: F, cdf_left: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let v = sorted(sample);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let mut j = i;
        while j < v.len() && v[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let at = j as f64 / n;
        d = d.max((at - cdf(x)).abs()).max((below - cdf_left(x)).abs());
        i = j;
    }
    d
}

/// KS statistic against a continuous CDF.
pub fn ks_continuous<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    ks_statistic(sample, &cdf, &cdf)
}

/// Asymptotic Kolmogorov survival function P(K > lambda).
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// p-value of a one-sample KS statistic `d` with `n` observations
/// (Stephens' small-sample correction).
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

/// Critical value of the one-sample KS statistic at level `alpha`
/// (0.01 or 0.05), asymptotic constants with Stephens' correction.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    let c = if alpha <= 0.01 {
        1.627_6
    } else if alpha <= 0.05 {
        1.358_1
    } else {
        1.223_8
    };
    let sn = (n as f64).sqrt();
    c / (sn + 0.12 + 0.11 / sn)
}

/// Exact sup-distance between the law of `N / scale`, `N ~ Geometric(p)` on
/// {1, 2, ...}, and the unit exponential distribution.
pub fn geometric_vs_exponential_ks(p: f64, scale: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0 && scale > 0.0);
    let q = 1.0 - p;
    let mut d = 0.0f64;
    let mut k = 0u64;
    loop {
        // On [k/scale, (k+1)/scale) the geometric CDF is 1 - q^k.
        let surv_geo = q.powi(k as i32);
        let left = (-(k as f64) / scale).exp();
        let right = (-((k + 1) as f64) / scale).exp();
        d = d.max((surv_geo - left).abs()).max((surv_geo - right).abs());
        if surv_geo < 1e-14 && left < 1e-14 {
            break;
        }
        k += 1;
    }
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn chi2_survival(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    dist.sf(stat)
}

/// Pearson chi-square goodness of fit. `probs` must sum to one (the last
/// bin is normally an open tail); bins are pooled left to right until each
/// expected count reaches `min_expected`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> ChiSquareResult {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let n_f = n as f64;
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o as f64;
        e_acc += p * n_f;
        if e_acc >= min_expected {
            pooled.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => pooled.push((o_acc, e_acc)),
        }
    }
    let statistic: f64 = pooled.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = pooled.len().saturating_sub(1);
    ChiSquareResult { statistic, dof, p_value: chi2_survival(statistic, dof) }
}

/// Chi-square goodness of fit of positive integer samples to
/// Geometric(p) on {1, 2, ...}.
pub fn chi_square_geometric(samples: &[u64], p: f64) -> ChiSquareResult {
    let q = 1.0 - p;
    let n = samples.len() as f64;
    // Enough explicit bins to push the open tail below 5 expected counts.
    let mut k_max = 1u64;
    while n * q.powi(k_max as i32) > 5.0 {
        k_max += 1;
    }
    let mut observed = vec![0u64; k_max as usize + 1];
    for &s in samples {
        let idx = if s > k_max { k_max as usize } else { s as usize - 1 };
        observed[idx] += 1;
    }
    let mut probs: Vec<f64> = (1..=k_max).map(|k| q.powi(k as i32 - 1) * p).collect();
    probs.push(q.powi(k_max as i32));
    chi_square_gof(&observed, &probs, 5.0)
}

/// Chi-square test of independence on an r x c contingency table.
pub fn chi_square_independence(table: &[Vec<u64>]) -> ChiSquareResult {
    let rows = table.len();
    let cols = table[0].len();
    let n: f64 = table.iter().flatten().map(|&x| x as f64).sum();
    let row_tot: Vec<f64> = table.iter().map(|r| r.iter().map(|&x| x as f64).sum()).collect();
    let col_tot: Vec<f64> =
        (0..cols).map(|j| table.iter().map(|r| r[j] as f64).sum()).collect();
    let mut stat = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let e = row_tot[i] * col_tot[j] / n;
            if e > 0.0 {
                stat += (table[i][j] as f64 - e).powi(2) / e;
            }
        }
    }
    let dof = (rows - 1) * (cols - 1);
    ChiSquareResult { statistic: stat, dof, p_value: chi2_survival(stat, dof) }
}

/// Total-variation distance between two mass vectors on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        for &(s, n) in &[(0u64, 10u64), (5, 10), (10, 10), (37, 1000), (999, 1000)] {
            let (lo, hi) = wilson_interval(s, n);
            let p = s as f64 / n as f64;
            assert!(lo <= p && p <= hi, "{s}/{n}: [{lo}, {hi}]");
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
        // Reference value: 50/100 -> [0.4038, 0.5962].
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.403_831).abs() < 1e-5 && (hi - 0.596_169).abs() < 1e-5);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }

    #[test]
    fn ks_exact_on_uniform_grid() {
        // Midpoints of n cells: D = 1/(2n).
        let n = 50;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_continuous(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_with_atom_is_zero_for_matching_discrete_sample() {
        // Bernoulli(1/2) on {0, 1}, sample with exact frequencies.
        let xs = [0.0, 0.0, 1.0, 1.0];
        let cdf = |x: f64| if x < 0.0 { 0.0 } else if x < 1.0 { 0.5 } else { 1.0 };
        let left = |x: f64| if x <= 0.0 { 0.0 } else if x <= 1.0 { 0.5 } else { 1.0 };
        assert!(ks_statistic(&xs, cdf, left) < 1e-15);
    }

    #[test]
    fn kolmogorov_survival_reference_points() {
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn geometric_exponential_distance_shrinks() {
        let d50 = geometric_vs_exponential_ks(1.0 / 50.0, 50.0);
        let d500 = geometric_vs_exponential_ks(1.0 / 500.0, 500.0);
        assert!(d50 > d500);
        // Brute force on a fine grid.
        let p: f64 = 0.02;
        let mut brute = 0.0f64;
        for i in 1..200_000 {
            let x = i as f64 * 1e-4;
            let k = (x * 50.0).floor();
            let f_geo = 1.0 - (1.0 - p).powf(k);
            brute = brute.max((f_geo - (1.0 - (-x).exp())).abs());
        }
        assert!((brute - d50).abs() < 1e-4, "{brute} vs {d50}");
    }

    #[test]
    fn chi_square_perfect_fit() {
        let r = chi_square_gof(&[25, 25, 25, 25], &[0.25; 4], 5.0);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 3);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn median_interval_brackets_median() {
        let v: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let m = median_sorted(&v);
        let (lo, hi) = median_interval_sorted(&v);
        assert!(lo <= m && m <= hi);
        assert!(hi - lo > 5.0 && hi - lo < 40.0);
    }
}
