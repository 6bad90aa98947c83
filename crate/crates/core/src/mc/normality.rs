//! One-sample Kolmogorov-Smirnov test against the standard normal.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Minimum sample size accepted by [`clt_check`].
pub const MIN_KS_SAMPLES: usize = 200;

/// Critical-value coefficient for `alpha = 0.01`: threshold `1.63 / sqrt(n)`.
pub const KS_ALPHA_01: f64 = 1.63;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub n: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Standardize by the sample mean and SD; a zero SD maps everything to zero.
pub fn standardize(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return vec![0.0; xs.len()];
    }
    let m = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd > 0.0 {
        xs.iter().map(|x| (x - m) / sd).collect()
    } else {
        vec![0.0; xs.len()]
    }
}

/// Kolmogorov-Smirnov distance of `samples` to `Phi`.
pub fn ks_statistic(samples: &[f64]) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let phi = Normal::standard();
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = phi.cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

/// KS test of already standardized samples; `threshold` defaults to `1.63 / sqrt(n)`.
pub fn clt_check(samples: &[f64], threshold: Option<f64>) -> Result<KsResult> {
    let n = samples.len();
    if n < MIN_KS_SAMPLES {
        return Err(Error::InsufficientSamples { need: MIN_KS_SAMPLES, got: n });
    }
    let threshold = threshold.unwrap_or(KS_ALPHA_01 / (n as f64).sqrt());
    let statistic = ks_statistic(samples);
    Ok(KsResult { n, statistic, threshold, pass: statistic < threshold })
}
