//! Simulate an anisotropic Gaussian random field on a grid and on scattered
//! locations, then print summary statistics and the first rows as CSV.
//!
//! cargo run --example simulate_field

use std::f64::consts::PI;

use isotropy::grf::{simulate_grf, uniform_locations, AnisotropyParams, EffectiveRange, ExponentialCovariance};
use isotropy::io::write_csv;
use isotropy::{GridSpec, RngStream};

fn main() -> isotropy::Result<()> {
    // effective range 6: correlation drops to 0.05 at distance 6
    let cov = ExponentialCovariance::from_effective_range(EffectiveRange(6.0), 1.0, 0.0)?;
    let aniso = AnisotropyParams::new(2.0, 3.0 * PI / 8.0)?;
    println!("phi = {:.6}, major axis at {:.1} degrees", cov.phi, aniso.major_axis_angle().to_degrees());

    let mut rng = RngStream::new(42, 0);
    let grid = GridSpec::new(18, 12, 1.0)?;
    let field = simulate_grf(&grid.locations(), &cov, Some(&aniso), &mut rng)?;
    let var = field.values().iter().map(|v| (v - field.mean()).powi(2)).sum::<f64>() / field.len() as f64;
    println!("grid field: n = {}, gridded = {}, mean = {:.3}, variance = {:.3}", field.len(), field.is_gridded(), field.mean(), var);

    let locs = uniform_locations(300, 16.0, 10.0, &mut rng);
    let scattered = simulate_grf(&locs, &cov, Some(&aniso), &mut rng)?;
    println!("scattered field: n = {}, gridded = {}", scattered.len(), scattered.is_gridded());

    let mut buf = Vec::new();
    write_csv(&field, &mut buf)?;
    let text = String::from_utf8(buf).expect("csv is utf-8");
    for line in text.lines().take(5) {
        println!("{line}");
    }
    Ok(())
}
