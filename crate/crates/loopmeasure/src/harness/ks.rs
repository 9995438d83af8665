//! Kolmogorov-Smirnov and Kuiper goodness-of-fit tests.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::C64;

/// Smallest sample accepted by the tests.
pub const MIN_SAMPLES: usize = 100;

/// Distance and asymptotic p-value of a goodness-of-fit test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub distance: f64,
    pub p_value: f64,
}

/// Radial KS plus angular Kuiper test of a complex sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexKsResult {
    pub radial: KsResult,
    pub angle: KsResult,
    /// Bonferroni combination `min(1, 2 min(p_radial, p_angle))`.
    pub p_value: f64,
}

fn require(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_SAMPLES, got: n });
    }
    Ok(())
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("NaN in sample".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 lambda^2}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// `Q_Kuiper(lambda) = 2 sum_{k>=1} (4 k^2 lambda^2 - 1) e^{-2 k^2 lambda^2}`.
pub fn kuiper_q(lambda: f64) -> f64 {
    if lambda < 0.4 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k2l2 = (k * k) as f64 * lambda * lambda;
        let term = (4.0 * k2l2 - 1.0) * (-2.0 * k2l2).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// `(D+, D-)` of a sorted sample against `cdf`.
fn one_sided(sorted: &[f64], cdf: &impl Fn(f64) -> f64) -> (f64, f64) {
    let n = sorted.len() as f64;
    let (mut plus, mut minus) = (0.0f64, 0.0f64);
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        plus = plus.max((i + 1) as f64 / n - f);
        minus = minus.max(f - i as f64 / n);
    }
    (plus, minus)
}

/// One-sample KS test with Stephens' small-sample correction.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    require(samples.len())?;
    let v = sorted(samples)?;
    let (plus, minus) = one_sided(&v, &cdf);
    let distance = plus.max(minus);
    let sn = (v.len() as f64).sqrt();
    Ok(KsResult { distance, p_value: kolmogorov_q((sn + 0.12 + 0.11 / sn) * distance) })
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    require(a.len().min(b.len()))?;
    let (x, y) = (sorted(a)?, sorted(b)?);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut distance) = (0, 0, 0.0f64);
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        distance = distance.max((i as f64 / n - j as f64 / m).abs());
    }
    let se = (n * m / (n + m)).sqrt();
    Ok(KsResult { distance, p_value: kolmogorov_q((se + 0.12 + 0.11 / se) * distance) })
}

/// Kuiper test of uniformity for angles (any real values, taken mod `2 pi`).
pub fn kuiper_uniform(angles: &[f64]) -> Result<KsResult> {
    require(angles.len())?;
    let u: Vec<f64> = angles.iter().map(|a| a.rem_euclid(TAU) / TAU).collect();
    let v = sorted(&u)?;
    let (plus, minus) = one_sided(&v, &|x: f64| x);
    let distance = plus + minus;
    let sn = (v.len() as f64).sqrt();
    Ok(KsResult { distance, p_value: kuiper_q((sn + 0.155 + 0.24 / sn) * distance) })
}

/// Rotation-invariant complex law: KS on `|z|` against `radial_cdf` and Kuiper on `arg z`.
pub fn ks_complex(samples: &[C64], radial_cdf: impl Fn(f64) -> f64) -> Result<ComplexKsResult> {
    let radii: Vec<f64> = samples.iter().map(|z| z.norm()).collect();
    let angles: Vec<f64> = samples.iter().map(|z| z.arg()).collect();
    let radial = ks_one_sample(&radii, radial_cdf)?;
    let angle = kuiper_uniform(&angles)?;
    Ok(ComplexKsResult { radial, angle, p_value: (2.0 * radial.p_value.min(angle.p_value)).min(1.0) })
}

/// Two-sample version of [`ks_complex`]: KS on the moduli and on the angles.
pub fn ks_complex_two_sample(a: &[C64], b: &[C64]) -> Result<ComplexKsResult> {
    let ra: Vec<f64> = a.iter().map(|z| z.norm()).collect();
    let rb: Vec<f64> = b.iter().map(|z| z.norm()).collect();
    let aa: Vec<f64> = a.iter().map(|z| z.arg()).collect();
    let ab: Vec<f64> = b.iter().map(|z| z.arg()).collect();
    let radial = ks_two_sample(&ra, &rb)?;
    let angle = ks_two_sample(&aa, &ab)?;
    Ok(ComplexKsResult { radial, angle, p_value: (2.0 * radial.p_value.min(angle.p_value)).min(1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng_from_seed;
    use rand::Rng;

    #[test]
    fn kolmogorov_tail_matches_tabulated_quantiles() {
        // Classical asymptotic critical values: P(sqrt(n) D > 1.358) = 0.05, > 1.628 = 0.01.
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn kuiper_tail_matches_tabulated_quantile() {
        // P(sqrt(n) V > 1.747) = 0.05.
        assert!((kuiper_q(1.747) - 0.05).abs() < 2e-3);
    }

    #[test]
    fn identical_samples_have_zero_distance() {
        let mut rng = rng_from_seed(1);
        let a: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn uniform_sample_passes_and_shifted_fails() {
        let mut rng = rng_from_seed(2);
        let a: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let cdf = |x: f64| x.clamp(0.0, 1.0);
        assert!(ks_one_sample(&a, cdf).unwrap().p_value > 0.01);
        let shifted: Vec<f64> = a.iter().map(|x| x * x).collect();
        assert!(ks_one_sample(&shifted, cdf).unwrap().p_value < 1e-6);
        let angles: Vec<f64> = a.iter().map(|x| TAU * x).collect();
        assert!(kuiper_uniform(&angles).unwrap().p_value > 0.01);
    }

    #[test]
    fn small_samples_are_rejected() {
        assert!(matches!(ks_one_sample(&[0.5; 10], |x| x), Err(Error::InsufficientSamples { needed: 100, got: 10 })));
    }
}
