//! Variance of the lag estimates by moving-window subsampling and by the
//! grid-based block bootstrap (GBBB).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{detect_grid, Location, Rect, SpatialDataset};
use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::estimators::{estimate_g, EstimatorConfig, GHat};
use crate::lags::LagSet;

/// Window (subsampling) or block (bootstrap) shape in domain units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub width: f64,
    pub height: f64,
    /// Offset between neighbouring window positions. `None` means the grid
    /// spacing for gridded data and 0.5 otherwise.
    #[serde(default)]
    pub offset_step: Option<f64>,
}

/// Default window offset for scattered data.
pub const DEFAULT_SCATTERED_STEP: f64 = 0.5;

impl WindowSpec {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::Domain(format!("window size must be positive, got {width} x {height}")));
        }
        Ok(Self { width, height, offset_step: None })
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Domain(format!("window step must be positive, got {step}")));
        }
        self.offset_step = Some(step);
        Ok(self)
    }

    pub fn step_for(&self, dataset: &SpatialDataset) -> f64 {
        self.offset_step.unwrap_or_else(|| {
            dataset.grid().map_or(DEFAULT_SCATTERED_STEP, |g| g.spacing)
        })
    }

    /// Size heuristic relative to `√n`: gridded GSC windows hold fewer than
    /// `√n` points, GSC-u windows about `√n` or fewer, MS blocks about `√n`
    /// or more. Windows follow the aspect ratio of the domain and are
    /// multiples of the grid spacing (1 for scattered data).
    pub fn recommended(dataset: &SpatialDataset, purpose: WindowPurpose) -> Result<Self> {
        let domain = dataset.domain();
        let n = dataset.len() as f64;
        let target = n.sqrt();
        let aspect = domain.width / domain.height;
        let unit = dataset.grid().map_or(1.0, |g| g.spacing);
        let density = n / domain.area();
        let (w, h) = match purpose {
            WindowPurpose::GriddedSubsampling => {
                let mut best = (1.0, 1.0);
                let mut b = 1.0;
                loop {
                    let a = (aspect * b).round().max(1.0);
                    if a * b >= target {
                        break;
                    }
                    best = (a, b);
                    b += 1.0;
                }
                best
            }
            WindowPurpose::ScatteredSubsampling => {
                let cells = target / (density * unit * unit);
                let b = (cells / aspect).sqrt().floor().max(1.0);
                let a = (cells / b).floor().max(1.0);
                (a, b)
            }
            WindowPurpose::BlockBootstrap => {
                let cells = target / (density * unit * unit);
                let b = (cells / aspect).sqrt().round().max(1.0);
                let a = (cells / b).ceil().max(1.0);
                (a, b)
            }
        };
        let spec = Self::new(
            (w * unit).min(domain.width),
            (h * unit).min(domain.height),
        )?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowPurpose {
    GriddedSubsampling,
    ScatteredSubsampling,
    BlockBootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResamplingMethod {
    MovingWindow,
    Gbbb,
}

/// Estimated variance-covariance of `Ĝ` at full-sample scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaHat {
    pub matrix: DMatrix<f64>,
    /// Usable windows (moving window) or successful resamples (GBBB).
    pub count: usize,
    pub method: ResamplingMethod,
    /// `n̄_b / n` for moving windows; 1 for the bootstrap.
    pub block_scale: f64,
    /// Variance of a single subblock estimate (moving window), or `matrix`
    /// itself for the bootstrap. Subblock test statistics are measured in
    /// this metric.
    pub subblock_matrix: DMatrix<f64>,
}

impl SigmaHat {
    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct Subblock {
    pub rect: Rect,
    pub data: SpatialDataset,
}

fn positions(extent: f64, size: f64, step: f64) -> usize {
    ((extent - size) / step + 1e-9).floor() as usize + 1
}

/// One subblock per window position on the `offset_step` lattice with the
/// window inside `domain`. Windows are half-open `[x, x+w) x [y, y+h)`.
pub fn moving_windows(domain: &Rect, dataset: &SpatialDataset, window: &WindowSpec) -> Result<Vec<Subblock>> {
    let tol = 1e-9 * domain.width.max(domain.height);
    if window.width > domain.width + tol || window.height > domain.height + tol {
        return Err(Error::Domain(format!(
            "window {} x {} exceeds domain {} x {}",
            window.width, window.height, domain.width, domain.height
        )));
    }
    let step = window.step_for(dataset);
    let nx = positions(domain.width, window.width, step);
    let ny = positions(domain.height, window.height, step);
    let locs = dataset.locations();
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let rect = Rect {
                x0: domain.x0 + ix as f64 * step,
                y0: domain.y0 + iy as f64 * step,
                width: window.width,
                height: window.height,
            };
            let idx: Vec<usize> = (0..locs.len()).filter(|&i| rect.contains_half_open(&locs[i])).collect();
            out.push(Subblock { rect, data: dataset.subset(&idx) });
        }
    }
    Ok(out)
}

/// How subblock variability is carried to full-sample scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceScaling {
    /// Multiply by `n̄_b / n`, the ratio of mean window size to sample size.
    #[default]
    Area,
    /// Scale entry `(i, j)` by `sqrt(s̄_i s̄_j / (S_i S_j))`, where `s̄` is the
    /// mean per-window pair count (or kernel weight) at a lag and `S` the
    /// full-sample one. Corrects for small windows losing a larger share of
    /// their pairs at the edges.
    PairCount,
}

/// Result of moving-window subsampling.
#[derive(Debug, Clone)]
pub struct SubsampleVariance {
    pub sigma: SigmaHat,
    /// Estimates on the usable windows.
    pub block_ghats: Vec<GHat>,
    pub n_windows: usize,
    pub n_discarded: usize,
    pub mean_block_size: f64,
}

/// `Var̂(Ĝ) = (n̄_b/n) (1/K) Σ_k (Ĝ_k - Ḡ)(Ĝ_k - Ḡ)ᵀ` over the `K` usable
/// windows. A window is unusable when an estimate fails or (classical
/// estimator) a lag has fewer than `min_pairs` pairs.
pub fn subsample_variance(
    dataset: &SpatialDataset,
    lag_set: &LagSet,
    config: &EstimatorConfig,
    window: &WindowSpec,
    min_pairs: usize,
) -> Result<SubsampleVariance> {
    subsample_variance_scaled(dataset, lag_set, config, window, min_pairs, VarianceScaling::Area)
}

/// [`subsample_variance`] with a choice of [`VarianceScaling`].
pub fn subsample_variance_scaled(
    dataset: &SpatialDataset,
    lag_set: &LagSet,
    config: &EstimatorConfig,
    window: &WindowSpec,
    min_pairs: usize,
    scaling: VarianceScaling,
) -> Result<SubsampleVariance> {
    let domain = dataset.domain();
    let blocks = moving_windows(&domain, dataset, window)?;
    let n_windows = blocks.len();
    let mut ghats = Vec::with_capacity(n_windows);
    let mut sizes = Vec::with_capacity(n_windows);
    for b in &blocks {
        if b.data.len() < 2 {
            continue;
        }
        let Ok(g) = estimate_g(&b.data, lag_set, config) else {
            continue;
        };
        if matches!(config, EstimatorConfig::Classical)
            && g.support.iter().any(|&c| c < min_pairs as f64)
        {
            continue;
        }
        sizes.push(b.data.len() as f64);
        ghats.push(g);
    }
    let k = ghats.len();
    if k < 2 {
        return Err(Error::Resampling(format!(
            "only {k} of {n_windows} windows are usable; need at least 2"
        )));
    }
    let mean_block_size = sizes.iter().sum::<f64>() / k as f64;
    let block_scale = mean_block_size / dataset.len() as f64;
    let cov = covariance_of(&ghats, false);
    let matrix = match scaling {
        VarianceScaling::Area => &cov * block_scale,
        VarianceScaling::PairCount => {
            let full = estimate_g(dataset, lag_set, config)?;
            let d: Vec<f64> = (0..lag_set.len())
                .map(|j| {
                    let mean = ghats.iter().map(|g| g.support[j]).sum::<f64>() / k as f64;
                    (mean / full.support[j]).sqrt()
                })
                .collect();
            DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| cov[(i, j)] * d[i] * d[j])
        }
    };
    Ok(SubsampleVariance {
        sigma: SigmaHat {
            matrix,
            count: k,
            method: ResamplingMethod::MovingWindow,
            block_scale,
            subblock_matrix: cov,
        },
        block_ghats: ghats,
        n_windows,
        n_discarded: n_windows - k,
        mean_block_size,
    })
}

/// Sample covariance of the estimate vectors, dividing by `K` or `K - 1`.
fn covariance_of(ghats: &[GHat], unbiased: bool) -> DMatrix<f64> {
    let k = ghats[0].len();
    let m = ghats.len() as f64;
    let mut mean = DVector::zeros(k);
    for g in ghats {
        mean += DVector::from_column_slice(&g.values);
    }
    mean /= m;
    let mut cov = DMatrix::zeros(k, k);
    for g in ghats {
        let d = DVector::from_column_slice(&g.values) - &mean;
        cov += &d * d.transpose();
    }
    cov / if unbiased { m - 1.0 } else { m }
}

/// A GBBB resample and how the domain was partitioned.
#[derive(Debug, Clone)]
pub struct BootstrapResample {
    pub data: SpatialDataset,
    pub n_regions: usize,
    /// Area dropped because the domain is not a whole number of blocks.
    pub trimmed_area: f64,
}

/// Replaces each block-shaped region of the (trimmed) domain by a block
/// placed uniformly at random in the domain, translating its observations
/// into the region. Block positions are continuous for scattered data and
/// on the lattice for gridded data.
pub fn gbbb_resample(dataset: &SpatialDataset, block: &WindowSpec, rng: &mut RngStream) -> Result<BootstrapResample> {
    let domain = dataset.domain();
    let tol = 1e-9 * domain.width.max(domain.height);
    if block.width > domain.width + tol || block.height > domain.height + tol {
        return Err(Error::Domain(format!(
            "block {} x {} exceeds domain {} x {}",
            block.width, block.height, domain.width, domain.height
        )));
    }
    let nx = (domain.width / block.width + 1e-9).floor() as usize;
    let ny = (domain.height / block.height + 1e-9).floor() as usize;
    let trimmed = Rect {
        x0: domain.x0,
        y0: domain.y0,
        width: nx as f64 * block.width,
        height: ny as f64 * block.height,
    };
    let slack_x = (domain.width - block.width).max(0.0);
    let slack_y = (domain.height - block.height).max(0.0);
    let lattice = dataset.grid().map(|g| g.spacing);
    let mut draw = |slack: f64| -> f64 {
        match lattice {
            Some(s) => {
                let count = (slack / s + 1e-9).floor() as u64 + 1;
                rng.random_range(0..count) as f64 * s
            }
            None if slack > 0.0 => rng.random::<f64>() * slack,
            None => 0.0,
        }
    };
    let locs = dataset.locations();
    let vals = dataset.values();
    let mut new_locs = Vec::with_capacity(dataset.len());
    let mut new_vals = Vec::with_capacity(dataset.len());
    for iy in 0..ny {
        for ix in 0..nx {
            let region_x = domain.x0 + ix as f64 * block.width;
            let region_y = domain.y0 + iy as f64 * block.height;
            let src = Rect {
                x0: domain.x0 + draw(slack_x),
                y0: domain.y0 + draw(slack_y),
                width: block.width,
                height: block.height,
            };
            let (sx, sy) = (region_x - src.x0, region_y - src.y0);
            for (l, &v) in locs.iter().zip(vals) {
                if src.contains_half_open(l) {
                    new_locs.push(Location::new(l.x + sx, l.y + sy));
                    new_vals.push(v);
                }
            }
        }
    }
    let grid = lattice.and_then(|_| detect_grid(&new_locs, 1e-6));
    Ok(BootstrapResample {
        data: SpatialDataset::from_parts_unchecked(new_locs, new_vals, grid, Some(trimmed)),
        n_regions: nx * ny,
        trimmed_area: domain.area() - trimmed.area(),
    })
}

/// Result of the block bootstrap.
#[derive(Debug, Clone)]
pub struct BootstrapVariance {
    pub sigma: SigmaHat,
    pub n_resamples: usize,
    pub n_failed: usize,
    pub n_regions: usize,
    pub trimmed_area: f64,
}

/// Maximum fraction of bootstrap resamples allowed to fail estimation.
pub const MAX_BOOTSTRAP_FAILURE_RATE: f64 = 0.2;

/// `Var̂(Ĝ) = 1/(B-1) Σ_b (Ĝ*_b - mean)(Ĝ*_b - mean)ᵀ` over full-domain
/// resamples. Resample `b` draws from `rng.substream(b)`.
pub fn gbbb_variance(
    dataset: &SpatialDataset,
    lag_set: &LagSet,
    config: &EstimatorConfig,
    block: &WindowSpec,
    n_resamples: usize,
    rng: &RngStream,
) -> Result<BootstrapVariance> {
    if n_resamples < 2 {
        return Err(Error::Config(format!("need at least 2 bootstrap resamples, got {n_resamples}")));
    }
    let mut ghats = Vec::with_capacity(n_resamples);
    let mut n_regions = 0;
    let mut trimmed_area = 0.0;
    for b in 0..n_resamples {
        let mut sub = rng.substream(b as u64);
        let res = gbbb_resample(dataset, block, &mut sub)?;
        n_regions = res.n_regions;
        trimmed_area = res.trimmed_area;
        if res.data.len() < 2 {
            continue;
        }
        if let Ok(g) = estimate_g(&res.data, lag_set, config) {
            ghats.push(g);
        }
    }
    let n_failed = n_resamples - ghats.len();
    if n_failed as f64 > MAX_BOOTSTRAP_FAILURE_RATE * n_resamples as f64 || ghats.len() < 2 {
        return Err(Error::Resampling(format!(
            "estimation failed on {n_failed} of {n_resamples} bootstrap resamples"
        )));
    }
    let matrix = covariance_of(&ghats, true);
    Ok(BootstrapVariance {
        sigma: SigmaHat {
            subblock_matrix: matrix.clone(),
            matrix,
            count: ghats.len(),
            method: ResamplingMethod::Gbbb,
            block_scale: 1.0,
        },
        n_resamples,
        n_failed,
        n_regions,
        trimmed_area,
    })
}
