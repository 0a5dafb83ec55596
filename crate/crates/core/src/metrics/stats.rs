//! Monte Carlo summaries and distributional tests.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean and its standard error (unbiased variance / n).
pub fn mean_se(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let m = mean(xs);
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Estimate { value: m, se: (var / n).sqrt() }
}

/// Unbiased sample variance with the moment-based standard error
/// sqrt((m4 − s⁴(n−3)/(n−1)) / n).
pub fn sample_variance(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let m = mean(xs);
    let s2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let v = (m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n;
    Estimate { value: s2, se: v.max(0.0).sqrt() }
}

/// Asymptotic Kolmogorov tail P(K > λ).
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test against N(mean, sd²): (statistic, asymptotic p-value).
pub fn ks_normal_test(samples: &[f64], mean: f64, sd: f64) -> Result<(f64, f64)> {
    if !(sd > 0.0) {
        return Err(Error::InvalidArgument(format!("sd must be positive, got {sd}")));
    }
    if samples.len() < 50 {
        return Err(Error::InvalidArgument(format!("need at least 50 samples, got {}", samples.len())));
    }
    let dist = Normal::new(mean, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    Ok((d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)))
}

fn kurt_from_sums(n: f64, s1: f64, s2: f64, s3: f64, s4: f64) -> f64 {
    let m = s1 / n;
    let m2 = s2 / n - m * m;
    let m4 = (s4 - 4.0 * m * s3 + 6.0 * m * m * s2 - 3.0 * m.powi(3) * s1) / n;
    m4 / (m2 * m2) - 3.0
}

/// Sample excess kurtosis m4/m2² − 3 with a jackknife standard error.
pub fn excess_kurtosis(samples: &[f64]) -> Result<Estimate> {
    if samples.len() < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 samples, got {}", samples.len())));
    }
    // center first for numerical stability of the power sums
    let c = mean(samples);
    let xs: Vec<f64> = samples.iter().map(|x| x - c).collect();
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    for &x in &xs {
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
    }
    let n = xs.len() as f64;
    let full = kurt_from_sums(n, s1, s2, s3, s4);
    let loo: Vec<f64> = xs
        .iter()
        .map(|&x| kurt_from_sums(n - 1.0, s1 - x, s2 - x * x, s3 - x * x * x, s4 - x * x * x * x))
        .collect();
    let lm = mean(&loo);
    let se = ((n - 1.0) / n * loo.iter().map(|v| (v - lm).powi(2)).sum::<f64>()).sqrt();
    Ok(Estimate { value: full, se })
}
