//! Log-log least squares for convergence rates.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub xs: Vec<f64>,
    pub errors: Vec<f64>,
    /// Standard errors of `errors`, when known; not used by the fit.
    pub ses: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl RateFit {
    pub fn with_ses(mut self, ses: Vec<f64>) -> Self {
        self.ses = ses;
        self
    }

    pub fn slope_within(&self, lo: f64, hi: f64) -> bool {
        (lo..=hi).contains(&self.slope)
    }
}

/// OLS of log(error) on log(x) with a t-based 95% slope interval.
pub fn fit_rate(xs: &[f64], errors: &[f64]) -> Result<RateFit> {
    let k = xs.len();
    if k != errors.len() {
        return Err(Error::InvalidArgument("xs and errors differ in length".into()));
    }
    if k < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 points, got {k}")));
    }
    if xs.iter().chain(errors).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("xs and errors must be positive".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k as f64;
    let my = ly.iter().sum::<f64>() / k as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-12 * k as f64 {
        return Err(Error::InvalidArgument("degenerate xs".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let df = (k - 2) as f64;
    let se = (ssr / df / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, df).expect("df > 0").inverse_cdf(0.975);
    Ok(RateFit {
        xs: xs.to_vec(),
        errors: errors.to_vec(),
        ses: Vec::new(),
        slope,
        intercept,
        ci_low: slope - t * se,
        ci_high: slope + t * se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs = [50.0, 100.0, 200.0, 400.0, 800.0];
        let errs: Vec<f64> = xs.iter().map(|x: &f64| 3.0 / x.sqrt()).collect();
        let f = fit_rate(&xs, &errs).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        let flat = fit_rate(&xs, &[0.2; 5]).unwrap();
        assert!(flat.slope.abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        assert!(fit_rate(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(fit_rate(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(fit_rate(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 3.0, 4.0]).is_err());
    }
}
