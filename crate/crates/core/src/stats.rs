//! Small statistical utilities: Pearson correlation, Gaussian CDF, and a
//! one-sample Kolmogorov–Smirnov test used to validate the sampler.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Pearson correlation coefficient of two equal-length samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidConfig(
            "pearson correlation needs at least 2 points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidConfig(
            "pearson correlation undefined for constant input".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// CDF of N(mean, sd^2).
pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd)
        .expect("sd must be positive and finite")
        .cdf(x)
}

/// One-sample KS statistic `D = sup_x |F_n(x) - F(x)|` against an arbitrary
/// continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Asymptotic p-value of the one-sample KS statistic (Kolmogorov
/// distribution with the Stephens small-sample correction).
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut p = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * p).clamp(0.0, 1.0)
}

/// Convenience: KS test of `samples` against N(0, sd^2); returns (D, p).
pub fn ks_test_normal(samples: &[f64], sd: f64) -> (f64, f64) {
    let d = ks_statistic(samples, |x| normal_cdf(x, 0.0, sd));
    (d, ks_pvalue(d, samples.len()))
}
