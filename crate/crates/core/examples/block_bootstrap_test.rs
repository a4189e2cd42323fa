//! MS test: Epanechnikov kernel covariogram at the empirical bandwidth with
//! the grid-based block bootstrap for its variance.
//!
//! cargo run --example block_bootstrap_test

use isotropy::estimators::empirical_bandwidth;
use isotropy::grf::{simulate_grf, uniform_locations, AnisotropyParams, EffectiveRange, ExponentialCovariance};
use isotropy::resampling::{gbbb_resample, WindowSpec};
use isotropy::spatial_tests::ms_test;
use isotropy::{default_contrast, default_lag_set, Rect, RngStream};

fn main() -> isotropy::Result<()> {
    let cov = ExponentialCovariance::from_effective_range(EffectiveRange(3.0), 1.0, 0.0)?;
    let mut rng = RngStream::new(5, 0);
    let locs = uniform_locations(300, 16.0, 10.0, &mut rng);
    let field = simulate_grf(&locs, &cov, Some(&AnisotropyParams::new(2.0, 0.0)?), &mut rng)?
        .with_domain(Rect::new(0.0, 0.0, 16.0, 10.0)?)?;
    println!("empirical bandwidth: {:.4}", empirical_bandwidth(&field, 1.0)?.value());

    let block = WindowSpec::new(4.0, 2.0)?;
    let one = gbbb_resample(&field, &block, &mut RngStream::new(1, 0))?;
    println!("one resample: {} points from {} regions", one.data.len(), one.n_regions);

    let lags = default_lag_set(1.0);
    let a = default_contrast(&lags)?;
    let r = ms_test(&field, &lags, &a, &block, 100, 1.0, &RngStream::new(99, 0))?;
    println!(
        "MS: T = {:.3}, df = {}, p = {:.4}, failed resamples {}",
        r.statistic,
        r.df,
        r.p_value,
        r.diagnostics.n_failed.unwrap_or(0)
    );
    Ok(())
}
