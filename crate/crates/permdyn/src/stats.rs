//! Small statistics helpers: Kolmogorov–Smirnov distances against a CDF and
//! between two empirical samples.

use crate::error::{Error, Result};

/// One-sample Kolmogorov–Smirnov distance of `samples` against the CDF `f`,
/// evaluated as sup over sorted samples x_i of
/// max(|i/R - F(x_i)|, |(i-1)/R - F(x_i)|).
///
/// `denominator` is the number of trials the empirical CDF is normalized by;
/// it may exceed `samples.len()` when some trials produced no sample (those
/// are treated as mass at +infinity).
pub fn ks_distance<F: Fn(f64) -> f64>(
    samples: &[f64],
    denominator: usize,
    f: F,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples for KS distance".into()));
    }
    if denominator < samples.len() {
        return Err(Error::Domain(format!(
            "denominator {denominator} smaller than sample count {}",
            samples.len()
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let r = denominator as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let fx = f(x);
        let hi = ((i + 1) as f64 / r - fx).abs();
        let lo = (i as f64 / r - fx).abs();
        sup = sup.max(hi).max(lo);
    }
    // Mass withheld at +infinity contributes at the top as well.
    if denominator > sorted.len() {
        sup = sup.max(1.0 - sorted.len() as f64 / r);
    }
    Ok(sup)
}

/// Two-sample Kolmogorov–Smirnov distance between empirical samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("empty sample in two-sample KS".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    sb.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < sa.len() && j < sb.len() {
        let (x, y) = (sa[i], sb[j]);
        if x <= y {
            i += 1;
        }
        if y <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

/// Empirical quantile by the nearest-rank rule on a copy of the data.
pub fn quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples for quantile".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile level {q} outside [0, 1]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Ok(sorted[rank - 1])
}

/// Median via `quantile(.., 0.5)`.
pub fn median(samples: &[f64]) -> Result<f64> {
    quantile(samples, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_at_median() {
        // One sample at the median of U[0,1]: empirical CDF jumps 0 -> 1 at
        // 0.5 where F = 0.5, so the distance is 0.5.
        let d = ks_distance(&[0.5], 1, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn point_mass_at_zero_vs_uniform() {
        let d = ks_distance(&[0.0, 0.0], 2, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn censored_samples_count_against_the_fit() {
        // 1 observed sample out of 4 trials against U[0,1]: at least 3/4 of
        // the empirical mass is missing below any x <= 1.
        let d = ks_distance(&[0.5], 4, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d >= 0.75 - 1e-12, "d {d}");
        assert!(ks_distance(&[0.1, 0.2], 1, |x| x).is_err());
        assert!(ks_distance(&[], 5, |x| x).is_err());
    }

    #[test]
    fn ks_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let f = |x: f64| x.clamp(0.0, 1.0);
        for _ in 0..50 {
            let n = rng.random_range(1..40);
            let samples: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let d = ks_distance(&samples, n, f).unwrap();
            // Brute force on a fine grid plus the sample points.
            let mut sorted = samples.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut brute = 0.0f64;
            let mut grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
            grid.extend(sorted.iter().copied());
            for x in grid {
                let ecdf = sorted.iter().filter(|&&s| s <= x).count() as f64 / n as f64;
                let ecdf_left =
                    sorted.iter().filter(|&&s| s < x).count() as f64 / n as f64;
                brute = brute.max((ecdf - f(x)).abs()).max((ecdf_left - f(x)).abs());
            }
            assert!((d - brute).abs() < 1e-9, "d {d} brute {brute}");
        }
    }

    #[test]
    fn two_sample_cases() {
        let d = ks_two_sample(&[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(d, 0.0);
        let d = ks_two_sample(&[0.0, 0.1], &[0.9, 1.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        assert!(ks_two_sample(&[], &[0.5]).is_err());
        // Shifted uniforms: D should be near the shift.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let a: Vec<f64> = (0..5000).map(|_| rng.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.random_range(0.25..1.25)).collect();
        let d = ks_two_sample(&a, &b).unwrap();
        assert!((d - 0.25).abs() < 0.03, "d {d}");
    }

    #[test]
    fn quantile_and_median() {
        let v = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(median(&v).unwrap(), 3.0);
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 5.0);
        assert_eq!(quantile(&v, 0.9).unwrap(), 5.0);
        assert!(quantile(&v, 1.5).is_err());
        assert!(median(&[]).is_err());
    }
}
