//! Point estimates at a lag set: classical semivariogram on a grid and
//! kernel semivariogram / covariogram on scattered points.
//!
//! cargo run --example estimators

use isotropy::estimators::{
    classical_semivariogram, empirical_bandwidth, estimate_g, kernel_covariogram, Bandwidth, EstimatorConfig,
    KernelSpec,
};
use isotropy::grf::{simulate_grf, uniform_locations, EffectiveRange, ExponentialCovariance};
use isotropy::{default_lag_set, GridSpec, Lag, RngStream, SpatialDataset};

fn main() -> isotropy::Result<()> {
    // bottom row 1, 2; top row 3, 5
    let tiny = SpatialDataset::on_grid(GridSpec::new(2, 2, 1.0)?, vec![1.0, 2.0, 3.0, 5.0])?;
    println!("gamma(1,0) = {}", classical_semivariogram(&tiny, Lag::new(1.0, 0.0))?);
    println!("gamma(0,1) = {}", classical_semivariogram(&tiny, Lag::new(0.0, 1.0))?);

    let cov = ExponentialCovariance::from_effective_range(EffectiveRange(6.0), 1.0, 0.0)?;
    let mut rng = RngStream::new(21, 0);
    let locs = uniform_locations(400, 16.0, 10.0, &mut rng);
    let field = simulate_grf(&locs, &cov, None, &mut rng)?;
    let lags = default_lag_set(1.0);
    let config = EstimatorConfig::KernelSemivariogram { kernel: KernelSpec::default(), bandwidth: Bandwidth::new(0.75)? };
    let g = estimate_g(&field, &lags, &config)?;
    for ((lag, v), w) in lags.iter().zip(&g.values).zip(&g.support) {
        let model = cov.semivariogram(lag.norm());
        println!("lag {lag}: kernel estimate {v:.3} (model {model:.3}), kernel weight {w:.1}");
    }
    let bw = empirical_bandwidth(&field, 1.0)?;
    let c0 = kernel_covariogram(&field, Lag::new(1.0, 0.0), KernelSpec::Epanechnikov, bw)?;
    println!("covariogram at (1,0) with bandwidth {:.3}: {c0:.3} (model {:.3})", bw.value(), cov.covariance(1.0));
    Ok(())
}
