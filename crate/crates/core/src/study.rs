//! Monte Carlo size and power studies.
//!
//! A study crosses anisotropy settings `(R, θ)` with effective ranges `ξ`.
//! In each cell it simulates `replicates` fields and runs every configured
//! method on the same fields. Replicate `r` draws from a stream keyed only
//! by `(master_seed, r)` (common random numbers across cells) or by
//! `(master_seed, cell, r)`, so results do not depend on scheduling or on the
//! number of threads.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{GridSpec, Rect, SpatialDataset};
use crate::distributions::{mix_stream_id, RngStream};
use crate::error::{Error, Result};
use crate::grf::{uniform_locations, AnisotropyParams, EffectiveRange, ExponentialCovariance, GrfSampler};
use crate::methods::{LagConfig, MethodSpec};
use crate::resampling::VarianceScaling;
use crate::spatial_tests::PValueMode;
use crate::spectral::DiagonalPairing;

/// Largest tolerated fraction of failed replicates per cell and method.
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Design {
    /// Unit-spaced lattice with `n_cols x n_rows` points from the origin.
    Grid {
        n_cols: usize,
        n_rows: usize,
        #[serde(default = "unit")]
        spacing: f64,
    },
    /// `n` uniform points on `[0, width] x [0, height]`, redrawn per replicate.
    Uniform { n: usize, width: f64, height: f64 },
}

fn unit() -> f64 {
    1.0
}

impl Design {
    pub fn label(&self) -> String {
        match self {
            Design::Grid { n_cols, n_rows, .. } => format!("{n_cols}x{n_rows} grid"),
            Design::Uniform { n, width, height } => format!("{n} uniform on {width}x{height}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceConfig {
    #[serde(default = "unit")]
    pub sigma2: f64,
    #[serde(default)]
    pub tau2: f64,
    pub effective_ranges: Vec<f64>,
}

/// Anisotropy setting with `θ` given as a multiple of `π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnisotropyConfig {
    pub ratio: f64,
    pub theta_over_pi: f64,
}

impl AnisotropyConfig {
    pub fn params(&self) -> Result<AnisotropyParams> {
        AnisotropyParams::new(self.ratio, self.theta_over_pi * PI)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub label: String,
    pub spec: MethodSpec,
}

fn default_alpha() -> f64 {
    0.05
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub name: String,
    pub design: Design,
    pub covariance: CovarianceConfig,
    pub anisotropy: Vec<AnisotropyConfig>,
    pub methods: Vec<MethodEntry>,
    pub replicates: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub master_seed: u64,
    /// Share simulated noise (and locations) across cells for replicate `r`.
    #[serde(default = "yes")]
    pub common_random_numbers: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: StudyConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let err = |path: &str, msg: String| Err(Error::Config(format!("{path}: {msg}")));
        if self.replicates == 0 {
            return err("replicates", "must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return err("alpha", format!("must lie in (0, 1), got {}", self.alpha));
        }
        match self.design {
            Design::Grid { n_cols, n_rows, spacing } => {
                if n_cols < 2 || n_rows < 2 || !(spacing > 0.0) {
                    return err("design", "grid needs at least 2x2 points and positive spacing".into());
                }
            }
            Design::Uniform { n, width, height } => {
                if n < 2 || !(width > 0.0 && height > 0.0) {
                    return err("design", "uniform design needs n >= 2 and a positive domain".into());
                }
            }
        }
        if self.covariance.effective_ranges.is_empty() {
            return err("covariance.effective_ranges", "must not be empty".into());
        }
        for (i, &xi) in self.covariance.effective_ranges.iter().enumerate() {
            if let Err(e) = ExponentialCovariance::from_effective_range(
                EffectiveRange(xi),
                self.covariance.sigma2,
                self.covariance.tau2,
            ) {
                return err(&format!("covariance.effective_ranges[{i}]"), e.to_string());
            }
        }
        if self.anisotropy.is_empty() {
            return err("anisotropy", "must not be empty".into());
        }
        for (i, a) in self.anisotropy.iter().enumerate() {
            if let Err(e) = a.params() {
                return err(&format!("anisotropy[{i}]"), e.to_string());
            }
        }
        if self.methods.is_empty() {
            return err("methods", "must not be empty".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if let Err(e) = m.spec.validate() {
                return err(&format!("methods[{i}] ({})", m.label), e.to_string());
            }
            if m.spec.requires_grid() && !matches!(self.design, Design::Grid { .. }) {
                return err(
                    &format!("methods[{i}] ({})", m.label),
                    format!("{} needs a grid design", m.spec.method()),
                );
            }
        }
        Ok(())
    }

    fn n_cells(&self) -> usize {
        self.anisotropy.len() * self.covariance.effective_ranges.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub ratio: f64,
    pub theta_over_pi: f64,
    pub effective_range: f64,
    pub method: String,
    pub replicates: usize,
    pub failures: usize,
    pub rejections: usize,
    pub rate: f64,
    pub mc_se: f64,
    /// Hash of every field this method saw in this cell.
    pub field_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: String,
    pub tests: usize,
    pub mean_seconds: f64,
}

/// Rejection rates per cell. Timings are kept apart from the deterministic
/// part of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub cells: Vec<CellReport>,
    pub timings: Vec<MethodTiming>,
}

impl StudyReport {
    pub fn cell(&self, ratio: f64, theta_over_pi: f64, xi: f64, method: &str) -> Option<&CellReport> {
        self.cells.iter().find(|c| {
            (c.ratio - ratio).abs() < 1e-9
                && (c.theta_over_pi - theta_over_pi).abs() < 1e-9
                && (c.effective_range - xi).abs() < 1e-9
                && c.method == method
        })
    }

    /// Aligned text table: one row per `(R, θ, method)`, one column per `ξ`.
    pub fn to_table(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{}: {}, {} replicates, alpha = {}, seed = {}",
            c.name,
            c.design.label(),
            c.replicates,
            c.alpha,
            c.master_seed
        );
        let width = c.methods.iter().map(|m| m.label.len()).max().unwrap_or(6).max(6);
        let _ = write!(out, "{:>7} {:>9}  {:<width$}", "R", "theta/pi", "method");
        for xi in &c.covariance.effective_ranges {
            let _ = write!(out, " {:>15}", format!("xi={xi}"));
        }
        out.push('\n');
        for a in &c.anisotropy {
            for m in &c.methods {
                let _ = write!(out, "{:>7.4} {:>9.4}  {:<width$}", a.ratio, a.theta_over_pi, m.label);
                for &xi in &c.covariance.effective_ranges {
                    match self.cell(a.ratio, a.theta_over_pi, xi, &m.label) {
                        Some(cell) => {
                            let _ = write!(out, " {:>15}", format!("{:.3} ({:.3})", cell.rate, cell.mc_se));
                        }
                        None => {
                            let _ = write!(out, " {:>15}", "-");
                        }
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.cells {
            w.serialize(c).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn timings_table(&self) -> String {
        let mut out = String::new();
        for t in &self.timings {
            let _ = writeln!(out, "{:<24} {:>8} tests  {:>10.4} s/test", t.method, t.tests, t.mean_seconds);
        }
        out
    }
}

/// Per-replicate outcome of one method.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    reject: Option<bool>,
    field_hash: u64,
    seconds: f64,
}

fn hash_field(d: &SpatialDataset) -> u64 {
    let mut h = DefaultHasher::new();
    for (l, v) in d.locations().iter().zip(d.values()) {
        l.x.to_bits().hash(&mut h);
        l.y.to_bits().hash(&mut h);
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

fn grid_template(n_cols: usize, n_rows: usize, spacing: f64) -> Result<SpatialDataset> {
    let g = GridSpec::new(n_cols, n_rows, spacing)?;
    SpatialDataset::on_grid(g, vec![0.0; g.len()])
}

/// Runs `config` on a pool of `threads` workers (`None`: rayon's default).
pub fn run_power_study(config: &StudyConfig, threads: Option<usize>) -> Result<StudyReport> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(config))
}

struct Cell {
    index: usize,
    aniso: AnisotropyConfig,
    xi: f64,
    cov: ExponentialCovariance,
    sampler: Option<GrfSampler>,
}

fn run_in_pool(config: &StudyConfig) -> Result<StudyReport> {
    let n_xi = config.covariance.effective_ranges.len();
    let mut cells = Vec::with_capacity(config.n_cells());
    for (ai, a) in config.anisotropy.iter().enumerate() {
        for (xi_i, &xi) in config.covariance.effective_ranges.iter().enumerate() {
            let cov = ExponentialCovariance::from_effective_range(
                EffectiveRange(xi),
                config.covariance.sigma2,
                config.covariance.tau2,
            )?;
            cells.push(Cell { index: ai * n_xi + xi_i, aniso: *a, xi, cov, sampler: None });
        }
    }
    // Gridded designs share one factorization per cell.
    if let Design::Grid { n_cols, n_rows, spacing } = config.design {
        let template = grid_template(n_cols, n_rows, spacing)?;
        let samplers: Vec<Result<GrfSampler>> = cells
            .par_iter()
            .map(|c| GrfSampler::new(template.clone(), &c.cov, Some(&c.aniso.params()?)))
            .collect();
        for (c, s) in cells.iter_mut().zip(samplers) {
            c.sampler = Some(s?);
        }
    }

    let reps = config.replicates;
    let n_methods = config.methods.len();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..reps).map(move |r| (c, r))).collect();
    let results: Vec<Result<Vec<Outcome>>> = jobs
        .par_iter()
        .map(|&(ci, r)| run_replicate(config, &cells[ci], r))
        .collect();

    let mut reports = Vec::with_capacity(cells.len() * n_methods);
    let mut time_total = vec![0.0; n_methods];
    let mut time_count = vec![0usize; n_methods];
    for (ci, cell) in cells.iter().enumerate() {
        let mut per_method: Vec<Vec<Outcome>> = vec![Vec::with_capacity(reps); n_methods];
        for r in 0..reps {
            let outcomes = results[ci * reps + r].as_ref().map_err(Clone::clone)?;
            for (m, o) in outcomes.iter().enumerate() {
                per_method[m].push(*o);
            }
        }
        for (m, entry) in config.methods.iter().enumerate() {
            let outs = &per_method[m];
            let failures = outs.iter().filter(|o| o.reject.is_none()).count();
            if failures as f64 > MAX_FAILURE_RATE * reps as f64 {
                return Err(Error::Numerical(format!(
                    "{} failed on {failures} of {reps} replicates at R = {}, theta/pi = {}, xi = {}",
                    entry.label, cell.aniso.ratio, cell.aniso.theta_over_pi, cell.xi
                )));
            }
            let ok = reps - failures;
            let rejections = outs.iter().filter(|o| o.reject == Some(true)).count();
            let rate = if ok > 0 { rejections as f64 / ok as f64 } else { 0.0 };
            let mut h = DefaultHasher::new();
            for o in outs {
                o.field_hash.hash(&mut h);
            }
            for o in outs {
                time_total[m] += o.seconds;
                time_count[m] += 1;
            }
            reports.push(CellReport {
                ratio: cell.aniso.ratio,
                theta_over_pi: cell.aniso.theta_over_pi,
                effective_range: cell.xi,
                method: entry.label.clone(),
                replicates: reps,
                failures,
                rejections,
                rate,
                mc_se: if ok > 0 { (rate * (1.0 - rate) / ok as f64).sqrt() } else { 0.0 },
                field_hash: format!("{:016x}", h.finish()),
            });
        }
    }
    let timings = config
        .methods
        .iter()
        .enumerate()
        .map(|(m, e)| MethodTiming {
            method: e.label.clone(),
            tests: time_count[m],
            mean_seconds: time_total[m] / time_count[m].max(1) as f64,
        })
        .collect();
    Ok(StudyReport { config: config.clone(), cells: reports, timings })
}

/// Stream for replicate `r` of a cell.
pub fn replicate_stream(config: &StudyConfig, cell_index: usize, r: usize) -> RngStream {
    let id = if config.common_random_numbers {
        mix_stream_id(&[r as u64])
    } else {
        mix_stream_id(&[cell_index as u64, r as u64])
    };
    RngStream::new(config.master_seed, id)
}

/// The field simulated for replicate `r` of a cell.
fn simulate_replicate(config: &StudyConfig, cell: &Cell, r: usize) -> Result<SpatialDataset> {
    let mut rng = replicate_stream(config, cell.index, r);
    match (&config.design, &cell.sampler) {
        (Design::Grid { .. }, Some(s)) => Ok(s.sample(&mut rng)),
        (Design::Uniform { n, width, height }, _) => {
            let locs = uniform_locations(*n, *width, *height, &mut rng);
            let domain = Rect::new(0.0, 0.0, *width, *height)?;
            let template = SpatialDataset::new(locs, vec![0.0; *n])?.with_domain(domain)?;
            let sampler = GrfSampler::new(template, &cell.cov, Some(&cell.aniso.params()?))?;
            Ok(sampler.sample(&mut rng.substream(0)))
        }
        (Design::Grid { .. }, None) => unreachable!("grid samplers are built before replicates run"),
    }
}

fn run_replicate(config: &StudyConfig, cell: &Cell, r: usize) -> Result<Vec<Outcome>> {
    let field = simulate_replicate(config, cell, r)?;
    let hash = hash_field(&field);
    let base = replicate_stream(config, cell.index, r);
    Ok(config
        .methods
        .iter()
        .enumerate()
        .map(|(m, entry)| {
            let rng = base.substream(1 + m as u64);
            let start = Instant::now();
            let reject = entry.spec.run(&field, config.alpha, &rng).ok().map(|t| t.rejects(config.alpha));
            Outcome { reject, field_hash: hash, seconds: start.elapsed().as_secs_f64() }
        })
        .collect())
}

/// Simulated field for replicate `r` of the cell `(anisotropy[a], ξ[x])`,
/// identical to what the study's methods see.
pub fn study_field(config: &StudyConfig, a: usize, x: usize, r: usize) -> Result<SpatialDataset> {
    config.validate()?;
    let aniso = *config
        .anisotropy
        .get(a)
        .ok_or_else(|| Error::Config(format!("no anisotropy setting {a}")))?;
    let xi = *config
        .covariance
        .effective_ranges
        .get(x)
        .ok_or_else(|| Error::Config(format!("no effective range {x}")))?;
    let cov = ExponentialCovariance::from_effective_range(EffectiveRange(xi), config.covariance.sigma2, config.covariance.tau2)?;
    let sampler = match config.design {
        Design::Grid { n_cols, n_rows, spacing } => {
            Some(GrfSampler::new(grid_template(n_cols, n_rows, spacing)?, &cov, Some(&aniso.params()?))?)
        }
        Design::Uniform { .. } => None,
    };
    let cell = Cell { index: a * config.covariance.effective_ranges.len() + x, aniso, xi, cov, sampler };
    simulate_replicate(config, &cell, r)
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// The five anisotropy settings of the main tables.
pub fn table_anisotropy() -> Vec<AnisotropyConfig> {
    vec![
        AnisotropyConfig { ratio: 1.0, theta_over_pi: 0.0 },
        AnisotropyConfig { ratio: SQRT_2, theta_over_pi: 0.0 },
        AnisotropyConfig { ratio: 2.0, theta_over_pi: 0.0 },
        AnisotropyConfig { ratio: SQRT_2, theta_over_pi: 0.375 },
        AnisotropyConfig { ratio: 2.0, theta_over_pi: 0.375 },
    ]
}

fn gsc_g(window: [f64; 2]) -> MethodSpec {
    MethodSpec::GscGridded {
        lags: LagConfig::default(),
        window: Some(window),
        variance_scaling: VarianceScaling::PairCount,
        pvalue_mode: PValueMode::FiniteSample,
    }
}

fn gsc_u(lags: LagConfig, bandwidth: f64, window: [f64; 2], step: f64, mode: PValueMode) -> MethodSpec {
    MethodSpec::GscScattered {
        lags,
        kernel: crate::estimators::KernelSpec::default(),
        bandwidth,
        window: Some(window),
        window_step: Some(step),
        variance_scaling: VarianceScaling::Area,
        pvalue_mode: Some(mode),
    }
}

fn ms(lags: LagConfig, block: [f64; 2], resamples: usize) -> MethodSpec {
    MethodSpec::Ms { lags, block: Some(block), resamples, tuning: 1.0 }
}

fn entry(label: &str, spec: MethodSpec) -> MethodEntry {
    MethodEntry { label: label.into(), spec }
}

/// Names accepted by [`builtin_config`].
pub const BUILTIN_CONFIGS: [&str; 7] = ["gvl-a", "gvl-b", "gvm-a", "gvm-b", "lagset", "blocksize", "bandwidth"];

/// Shipped configurations for the standard simulation designs.
pub fn builtin_config(name: &str) -> Option<StudyConfig> {
    let xis = vec![3.0, 6.0, 12.0];
    let cov = |effective_ranges: Vec<f64>| CovarianceConfig { sigma2: 1.0, tau2: 0.0, effective_ranges };
    let lz = MethodSpec::Lz { pairing: DiagonalPairing::default() };
    let asy = PValueMode::AsymptoticChi2;
    let base = |name: &str, design: Design, anisotropy, effective_ranges, methods, replicates| StudyConfig {
        name: name.into(),
        design,
        covariance: cov(effective_ranges),
        anisotropy,
        methods,
        replicates,
        alpha: 0.05,
        master_seed: 20_260_101,
        common_random_numbers: true,
        note: None,
    };
    let short_rows = vec![
        AnisotropyConfig { ratio: 1.0, theta_over_pi: 0.0 },
        AnisotropyConfig { ratio: SQRT_2, theta_over_pi: 0.375 },
        AnisotropyConfig { ratio: 2.0, theta_over_pi: 0.375 },
    ];
    let config = match name {
        "gvl-a" => base(
            name,
            Design::Grid { n_cols: 18, n_rows: 12, spacing: 1.0 },
            table_anisotropy(),
            xis,
            vec![entry("GG", gsc_g([3.0, 2.0])), entry("LZ", lz)],
            500,
        ),
        "gvl-b" => base(
            name,
            Design::Grid { n_cols: 25, n_rows: 15, spacing: 1.0 },
            table_anisotropy(),
            xis,
            vec![entry("GG", gsc_g([5.0, 3.0])), entry("LZ", lz)],
            500,
        ),
        "gvm-a" | "gvm-b" => {
            let (n, width) = if name == "gvm-a" { (300, 16.0) } else { (450, 20.0) };
            let mut c = base(
                name,
                Design::Uniform { n, width, height: 10.0 },
                table_anisotropy(),
                xis,
                vec![
                    entry("GU", gsc_u(LagConfig::default(), 0.75, [4.0, 2.0], 1.0, asy)),
                    entry("MS", ms(LagConfig::default(), [4.0, 2.0], 100)),
                ],
                200,
            );
            c.note = Some(
                "MS dominates the runtime through B = 100 bootstrap resamples per test; \
                 for a quicker run set replicates to 100 and widen tolerances to 4 standard errors"
                    .into(),
            );
            c
        }
        "lagset" => {
            let long = LagConfig { scale: 2.5, ..Default::default() };
            let more = LagConfig { extra_pair: true, ..Default::default() };
            base(
                name,
                Design::Uniform { n: 400, width: 16.0, height: 10.0 },
                short_rows,
                vec![6.0],
                vec![
                    entry("GU normal", gsc_u(LagConfig::default(), 0.75, [4.0, 2.0], 1.0, asy)),
                    entry("GU long", gsc_u(long.clone(), 0.75, [4.0, 2.0], 1.0, asy)),
                    entry("GU more", gsc_u(more.clone(), 0.75, [4.0, 2.0], 1.0, asy)),
                    entry("MS normal", ms(LagConfig::default(), [4.0, 2.0], 75)),
                    entry("MS long", ms(long, [4.0, 2.0], 75)),
                    entry("MS more", ms(more, [4.0, 2.0], 75)),
                ],
                100,
            )
        }
        "blocksize" => {
            let sizes = [("small", [3.0, 2.0]), ("normal", [4.0, 2.0]), ("large", [5.0, 3.0])];
            let mut methods = Vec::new();
            for (label, s) in sizes {
                methods.push(entry(&format!("GU {label}"), gsc_u(LagConfig::default(), 0.75, s, 0.5, asy)));
            }
            for (label, s) in sizes {
                methods.push(entry(&format!("MS {label}"), ms(LagConfig::default(), s, 100)));
            }
            base(
                name,
                Design::Uniform { n: 300, width: 16.0, height: 10.0 },
                table_anisotropy()[..3].to_vec(),
                vec![6.0],
                methods,
                200,
            )
        }
        "bandwidth" => {
            let mut methods = Vec::new();
            for (mode, tag) in [(asy, "asymptotic"), (PValueMode::FiniteSample, "finite")] {
                for w in [0.65, 0.75, 0.85] {
                    methods.push(entry(
                        &format!("GU w={w} {tag}"),
                        gsc_u(LagConfig::default(), w, [4.0, 2.0], 1.0, mode),
                    ));
                }
            }
            base(name, Design::Uniform { n: 400, width: 16.0, height: 10.0 }, short_rows, xis, methods, 100)
        }
        _ => return None,
    };
    Some(config)
}
