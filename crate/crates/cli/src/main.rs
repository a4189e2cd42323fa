//! `isotropy`: simulate fields, test datasets, run Monte Carlo studies and
//! emit plot-ready diagnostics.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numerical failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isotropy::diagnostics::{
    directional_semivariogram, equicorrelation_contours, write_contours_csv, write_directional_csv,
};
use isotropy::grf::{uniform_locations, AnisotropyParams, EffectiveRange, ExponentialCovariance, GrfSampler};
use isotropy::io::{ingest_csv, write_csv};
use isotropy::methods::MethodSpec;
use isotropy::spatial_tests::{PValueMode, TestMethod};
use isotropy::spectral::DiagonalPairing;
use isotropy::study::{builtin_config, run_power_study, StudyConfig, BUILTIN_CONFIGS};
use isotropy::{Error, GridSpec, Rect, RngStream, SpatialDataset};

#[derive(Parser)]
#[command(name = "isotropy", version, about = "Nonparametric isotropy and symmetry tests for spatial data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a Gaussian random field and write it as x,y,value CSV.
    Simulate(SimulateArgs),
    /// Run one test on an x,y,value CSV file.
    Test(TestArgs),
    /// Run a Monte Carlo size/power study.
    Study(StudyArgs),
    /// Directional semivariogram of a dataset, or model correlation contours.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Lattice size as COLSxROWS, e.g. 18x12.
    #[arg(long, conflicts_with = "uniform")]
    grid: Option<String>,
    /// Number of uniform locations on --width x --height.
    #[arg(long)]
    uniform: Option<usize>,
    #[arg(long, default_value_t = 16.0)]
    width: f64,
    #[arg(long, default_value_t = 10.0)]
    height: f64,
    /// Effective range (distance where correlation falls to 0.05).
    #[arg(long, default_value_t = 6.0)]
    xi: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.0)]
    tau2: f64,
    /// Anisotropy ratio R >= 1.
    #[arg(long, default_value_t = 1.0)]
    ratio: f64,
    /// Anisotropy angle as a multiple of pi.
    #[arg(long, default_value_t = 0.0)]
    theta_over_pi: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    #[value(name = "gsc-g")]
    GscG,
    #[value(name = "gsc-u")]
    GscU,
    Ms,
    Lz,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Finite,
    Asymptotic,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairingArg {
    Square,
    Matched,
    Evaluated,
}

#[derive(Args)]
struct TestArgs {
    /// Input CSV with header x,y,value.
    input: PathBuf,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// JSON method specification; overrides --method and the tuning flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Seed for the bootstrap (ms).
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Window or block size as WIDTHxHEIGHT.
    #[arg(long)]
    window: Option<String>,
    /// Kernel bandwidth (gsc-u).
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, value_enum)]
    pvalue_mode: Option<ModeArg>,
    /// Bootstrap resamples (ms).
    #[arg(long)]
    resamples: Option<usize>,
    /// Diagonal-stage frequency pairing (lz).
    #[arg(long, value_enum)]
    pairing: Option<PairingArg>,
    /// Write the result as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    /// Built-in name (gvl-a, gvl-b, gvm-a, gvm-b, lagset, blocksize, bandwidth) or a JSON file.
    #[arg(long)]
    config: String,
    #[arg(long)]
    threads: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the nominal level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Override the replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    /// Keep only these method labels (comma separated).
    #[arg(long)]
    method: Option<String>,
    /// Directory for report.txt, report.csv and timings.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(subcommand)]
    kind: DiagnoseKind,
}

#[derive(Subcommand)]
enum DiagnoseKind {
    /// Binned semivariogram by direction sector.
    Directional {
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        directions: usize,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long)]
        max_dist: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equal-correlation contours of the exponential model.
    Contours {
        #[arg(long, default_value_t = 6.0)]
        xi: f64,
        #[arg(long, default_value_t = 1.0)]
        ratio: f64,
        #[arg(long, default_value_t = 0.0)]
        theta_over_pi: f64,
        /// Comma-separated correlation levels.
        #[arg(long, default_value = "0.75,0.5,0.25,0.05")]
        levels: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() {
            3
        } else if e.is_data_error() {
            2
        } else {
            1
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure { code: 2, message: format!("{}: {e}", path.display()) }
}

fn parse_pair(text: &str, what: &str) -> Result<(f64, f64), Failure> {
    let parts: Vec<&str> = text.split(['x', 'X']).collect();
    if let [a, b] = parts[..] {
        if let (Ok(a), Ok(b)) = (a.trim().parse(), b.trim().parse()) {
            return Ok((a, b));
        }
    }
    Err(usage(format!("{what} must look like WIDTHxHEIGHT, got {text:?}")))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => Ok(Box::new(fs::File::create(p).map_err(|e| io_failure(p, e))?)),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

/// Model parameters come from flags, so bad values are usage errors.
fn model(
    xi: f64,
    sigma2: f64,
    tau2: f64,
    ratio: f64,
    theta_over_pi: f64,
) -> Result<(ExponentialCovariance, AnisotropyParams), Failure> {
    let cov = ExponentialCovariance::from_effective_range(EffectiveRange(xi), sigma2, tau2)
        .map_err(|e| usage(e.to_string()))?;
    let aniso = AnisotropyParams::new(ratio, theta_over_pi * std::f64::consts::PI).map_err(|e| usage(e.to_string()))?;
    Ok((cov, aniso))
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let (cov, aniso) = model(args.xi, args.sigma2, args.tau2, args.ratio, args.theta_over_pi)?;
    let mut rng = RngStream::new(args.seed, 0);
    let template = match (args.grid.as_deref(), args.uniform) {
        (Some(g), _) => {
            let (c, r) = parse_pair(g, "--grid")?;
            if c.fract() != 0.0 || r.fract() != 0.0 || c < 1.0 || r < 1.0 {
                return Err(usage("--grid needs positive integer dimensions"));
            }
            let spec = GridSpec::new(c as usize, r as usize, 1.0)?;
            SpatialDataset::on_grid(spec, vec![0.0; spec.len()])?
        }
        (None, Some(n)) => {
            let locs = uniform_locations(n, args.width, args.height, &mut rng);
            SpatialDataset::new(locs, vec![0.0; n])?.with_domain(Rect::new(0.0, 0.0, args.width, args.height)?)?
        }
        (None, None) => return Err(usage("simulate needs --grid or --uniform")),
    };
    let sampler = GrfSampler::new(template, &cov, Some(&aniso))?;
    for w in sampler.warnings() {
        eprintln!("warning: {w}");
    }
    let field = sampler.sample(&mut rng.substream(0));
    write_csv(&field, output(args.out.as_deref())?)?;
    Ok(())
}

fn method_spec(args: &TestArgs) -> Result<MethodSpec, Failure> {
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
        let spec: MethodSpec = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        spec.validate()?;
        return Ok(spec);
    }
    let method = match args.method {
        Some(MethodArg::GscG) => TestMethod::GscGridded,
        Some(MethodArg::GscU) => TestMethod::GscScattered,
        Some(MethodArg::Ms) => TestMethod::Ms,
        Some(MethodArg::Lz) => TestMethod::Lz,
        None => return Err(usage("test needs --method or --config")),
    };
    let window = args.window.as_deref().map(|w| parse_pair(w, "--window")).transpose()?.map(|(a, b)| [a, b]);
    let mode = args.pvalue_mode.map(|m| match m {
        ModeArg::Finite => PValueMode::FiniteSample,
        ModeArg::Asymptotic => PValueMode::AsymptoticChi2,
    });
    let mut spec = MethodSpec::default_for(method);
    match &mut spec {
        MethodSpec::GscGridded { window: w, pvalue_mode, .. } => {
            *w = window.or(*w);
            *pvalue_mode = mode.unwrap_or(*pvalue_mode);
        }
        MethodSpec::GscScattered { window: w, bandwidth, pvalue_mode, .. } => {
            *w = window.or(*w);
            *bandwidth = args.bandwidth.unwrap_or(*bandwidth);
            *pvalue_mode = mode.or(*pvalue_mode);
        }
        MethodSpec::Ms { block, resamples, .. } => {
            *block = window.or(*block);
            *resamples = args.resamples.unwrap_or(*resamples);
        }
        MethodSpec::Lz { pairing } => {
            if let Some(p) = args.pairing {
                *pairing = match p {
                    PairingArg::Square => DiagonalPairing::Square,
                    PairingArg::Matched => DiagonalPairing::Matched,
                    PairingArg::Evaluated => DiagonalPairing::Evaluated,
                };
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn test(args: TestArgs) -> Result<(), Failure> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(usage(format!("--alpha must lie in (0, 1), got {}", args.alpha)));
    }
    let spec = method_spec(&args)?;
    let ingested = ingest_csv(&args.input)?;
    for w in &ingested.warnings {
        eprintln!("warning: {w}");
    }
    let result = spec.run(&ingested.dataset, args.alpha, &RngStream::new(args.seed, 0))?;
    for w in &result.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
    println!("method     {}", result.method);
    println!("statistic  {:.6}", result.statistic);
    if result.df > 0 {
        println!("df         {}", result.df);
    }
    println!("p-value    {:.6}", result.p_value);
    println!("decision   {} at alpha = {}", if result.rejects(args.alpha) { "reject" } else { "do not reject" }, args.alpha);
    let d = &result.diagnostics;
    if let (Some(n), Some(u)) = (d.n_windows, d.n_usable) {
        println!("windows    {u} usable of {n}");
    }
    if let Some(b) = d.n_resamples {
        println!("resamples  {b} ({} failed)", d.n_failed.unwrap_or(0));
    }
    if let Some(w) = d.bandwidth {
        println!("bandwidth  {w:.6}");
    }
    if d.ridge_applied {
        println!("note       ridge added to a near-singular contrast variance");
    }
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&result).expect("result serializes");
        fs::write(path, json).map_err(|e| io_failure(path, e))?;
    }
    Ok(())
}

fn load_study(name: &str) -> Result<StudyConfig, Failure> {
    if let Some(c) = builtin_config(name) {
        return Ok(c);
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(usage(format!(
            "{name:?} is neither a file nor a built-in config ({})",
            BUILTIN_CONFIGS.join(", ")
        )));
    }
    Ok(StudyConfig::load(path)?)
}

fn study(args: StudyArgs) -> Result<(), Failure> {
    let mut config = load_study(&args.config)?;
    if let Some(s) = args.seed {
        config.master_seed = s;
    }
    if let Some(a) = args.alpha {
        config.alpha = a;
    }
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    if let Some(list) = &args.method {
        let keep: Vec<&str> = list.split(',').map(str::trim).collect();
        config.methods.retain(|m| keep.contains(&m.label.as_str()));
    }
    config.validate()?;
    if args.print_config {
        println!("{}", config.to_json());
        return Ok(());
    }
    let report = run_power_study(&config, args.threads)?;
    let table = report.to_table();
    print!("{table}");
    eprint!("{}", report.timings_table());
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        let write = |name: &str, text: &str| -> Result<(), Failure> {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| io_failure(&p, e))
        };
        write("report.txt", &table)?;
        write("report.csv", &report.to_csv()?)?;
        let mut timings = String::from("method,tests,mean_seconds\n");
        for t in &report.timings {
            timings.push_str(&format!("{},{},{}\n", t.method, t.tests, t.mean_seconds));
        }
        write("timings.csv", &timings)?;
        write("config.json", &config.to_json())?;
    }
    Ok(())
}

fn diagnose(args: DiagnoseArgs) -> Result<(), Failure> {
    match args.kind {
        DiagnoseKind::Directional { input, directions, bins, max_dist, out } => {
            let d = ingest_csv(&input)?.dataset;
            let max_dist = max_dist.unwrap_or_else(|| {
                let r = d.domain();
                0.5 * r.width.min(r.height)
            });
            let table = directional_semivariogram(&d, directions, bins, max_dist)?;
            write_directional_csv(&table, output(out.as_deref())?)?;
        }
        DiagnoseKind::Contours { xi, ratio, theta_over_pi, levels, out } => {
            let (cov, aniso) = model(xi, 1.0, 0.0, ratio, theta_over_pi)?;
            let levels: Vec<f64> = levels
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| usage(format!("--levels: {e}")))?;
            let pts = equicorrelation_contours(&cov, &aniso, &levels).map_err(|e| usage(e.to_string()))?;
            write_contours_csv(&pts, output(out.as_deref())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Test(a) => test(a),
        Command::Study(a) => study(a),
        Command::Diagnose(a) => diagnose(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
