//! A user-chosen lag set and contrast. Contrasting (1,1) with (-1,1) alone
//! tests one symmetry; appending the extra lag pair adds a third contrast.
//!
//! cargo run --example custom_contrast

use isotropy::grf::{simulate_grf, AnisotropyParams, EffectiveRange, ExponentialCovariance};
use isotropy::methods::{LagConfig, MethodSpec};
use isotropy::resampling::VarianceScaling;
use isotropy::spatial_tests::PValueMode;
use isotropy::{GridSpec, Lag, RngStream};

fn main() -> isotropy::Result<()> {
    let cov = ExponentialCovariance::from_effective_range(EffectiveRange(6.0), 1.0, 0.0)?;
    let aniso = AnisotropyParams::new(2.0, std::f64::consts::FRAC_PI_4)?;
    let field = simulate_grf(&GridSpec::new(20, 20, 1.0)?.locations(), &cov, Some(&aniso), &mut RngStream::new(4, 0))?;

    let diagonal_only = LagConfig {
        lags: Some(vec![Lag::new(1.0, 1.0), Lag::new(-1.0, 1.0)]),
        contrast: Some(vec![vec![1.0, -1.0]]),
        ..Default::default()
    };
    let spec = MethodSpec::GscGridded {
        lags: diagonal_only,
        window: Some([4.0, 4.0]),
        variance_scaling: VarianceScaling::PairCount,
        pvalue_mode: PValueMode::FiniteSample,
    };
    let r = spec.run(&field, 0.05, &RngStream::new(0, 0))?;
    println!("diagonal contrast: T = {:.3}, df = {}, p = {:.4}", r.statistic, r.df, r.p_value);

    // the same specification as JSON, as accepted by `isotropy test --config`
    println!("{}", serde_json::to_string_pretty(&spec).expect("serializable"));
    Ok(())
}
