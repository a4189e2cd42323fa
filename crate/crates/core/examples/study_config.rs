//! Build a small study configuration in code, save it as JSON, and run it
//! twice with different thread counts to show the report is identical.
//!
//! cargo run --release --example study_config

use isotropy::methods::MethodSpec;
use isotropy::spatial_tests::TestMethod;
use isotropy::study::{run_power_study, AnisotropyConfig, CovarianceConfig, Design, MethodEntry, StudyConfig};

fn main() -> isotropy::Result<()> {
    let config = StudyConfig {
        name: "demo".into(),
        design: Design::Grid { n_cols: 16, n_rows: 12, spacing: 1.0 },
        covariance: CovarianceConfig { sigma2: 1.0, tau2: 0.0, effective_ranges: vec![3.0, 6.0] },
        anisotropy: vec![
            AnisotropyConfig { ratio: 1.0, theta_over_pi: 0.0 },
            AnisotropyConfig { ratio: 2.0, theta_over_pi: 0.0 },
        ],
        methods: vec![
            MethodEntry { label: "GG".into(), spec: MethodSpec::default_for(TestMethod::GscGridded) },
            MethodEntry { label: "LZ".into(), spec: MethodSpec::default_for(TestMethod::Lz) },
        ],
        replicates: 40,
        alpha: 0.05,
        master_seed: 2024,
        common_random_numbers: true,
        note: None,
    };
    config.validate()?;
    println!("{}", config.to_json());

    let one = run_power_study(&config, Some(1))?;
    let four = run_power_study(&config, Some(4))?;
    print!("{}", one.to_table());
    println!("identical across thread counts: {}", one.to_csv()? == four.to_csv()?);
    Ok(())
}
