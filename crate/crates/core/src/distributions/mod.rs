//! Reference distributions and random streams.

mod cvm;
mod rng;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub use cvm::{cvm_asymptotic_cdf, cvm_asymptotic_sf, cvm_statistic, cvm_test, CvmResult, P_VALUE_FLOOR};
pub use rng::{mix_stream_id, RngStream};

/// Upper tail `P(χ²_df > x)`.
pub fn chi2_sf(x: f64, df: usize) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("chi-square argument {x} must be nonnegative")));
    }
    if df == 0 {
        return Err(Error::Domain("chi-square needs positive degrees of freedom".into()));
    }
    if df == 2 {
        return Ok((-0.5 * x).exp());
    }
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(dist.sf(x))
}

/// `P(F(2,2) <= x) = x / (1 + x)`.
pub fn f22_cdf(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("F(2,2) argument {x} must be nonnegative")));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(x / (1.0 + x))
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// One-sample Kolmogorov–Smirnov test of `sample` against U(0, 1), returning
/// `(D, p)` with the asymptotic Kolmogorov distribution and Stephens'
/// small-sample correction.
pub fn ks_uniform_test(sample: &[f64]) -> Result<(f64, f64)> {
    if sample.is_empty() {
        return Err(Error::Domain("Kolmogorov–Smirnov test needs a nonempty sample".into()));
    }
    let mut u = sample.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i as f64 + 1.0) / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    Ok((d, kolmogorov_sf(lambda)))
}

/// `P(K > λ) = 2 Σ_{k>=1} (-1)^{k-1} exp(-2 k² λ²)`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
