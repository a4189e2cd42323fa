//! Plot-ready tables: a directional semivariogram of a simulated field and
//! equal-correlation contours of the model behind it.
//!
//! cargo run --example diagnostics

use isotropy::diagnostics::{directional_semivariogram, equicorrelation_contours};
use isotropy::grf::{simulate_grf, AnisotropyParams, EffectiveRange, ExponentialCovariance};
use isotropy::{GridSpec, RngStream};

fn main() -> isotropy::Result<()> {
    let cov = ExponentialCovariance::from_effective_range(EffectiveRange(6.0), 1.0, 0.0)?;
    let aniso = AnisotropyParams::new(2.0, 0.0)?;
    let field = simulate_grf(&GridSpec::new(25, 15, 1.0)?.locations(), &cov, Some(&aniso), &mut RngStream::new(8, 0))?;

    let table = directional_semivariogram(&field, 4, 6, 6.0)?;
    println!("direction  distance   gamma  pairs");
    for b in &table {
        println!("{:9.1} {:9.2} {:7.3} {:6}", b.direction_deg, b.distance, b.gamma, b.pairs);
    }

    let contours = equicorrelation_contours(&cov, &aniso, &[0.5, 0.05])?;
    for level in [0.5, 0.05] {
        let pts: Vec<_> = contours.iter().filter(|p| p.level == level).collect();
        let x = pts.iter().map(|p| p.x.abs()).fold(0.0, f64::max);
        let y = pts.iter().map(|p| p.y.abs()).fold(0.0, f64::max);
        println!("correlation {level}: half-extent {x:.2} along x, {y:.2} along y");
    }
    Ok(())
}
