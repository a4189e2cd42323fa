//! Run a shipped study configuration at a reduced replicate count.
//!
//! cargo run --release --example power_study -- gvl-a 50

use isotropy::study::{builtin_config, run_power_study, BUILTIN_CONFIGS};

fn main() -> isotropy::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "gvl-a".into());
    let reps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let Some(mut config) = builtin_config(&name) else {
        eprintln!("unknown config {name:?}; choose one of {}", BUILTIN_CONFIGS.join(", "));
        std::process::exit(1);
    };
    config.replicates = reps;
    let report = run_power_study(&config, None)?;
    print!("{}", report.to_table());
    print!("{}", report.timings_table());
    Ok(())
}
