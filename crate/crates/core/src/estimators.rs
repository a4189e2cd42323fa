//! Semivariogram and covariogram point estimates at a lag set.
//!
//! Gridded data use the classical moment estimator over exactly matching
//! pairs. Scattered data use Nadaraya–Watson estimators with a product
//! kernel: each ordered pair `(i, j)` is weighted by
//! `K((Δx - h₁)/w) K((Δy - h₂)/w)` where `Δ = s_j - s_i`.

use serde::{Deserialize, Serialize};

use crate::dataset::{enumerate_lag_pairs, PairIndex, SpatialDataset, LOCATION_TOLERANCE};
use crate::error::{Error, Result};
use crate::lags::{Lag, LagSet};

/// Default truncation of the Gaussian kernel, in bandwidth units.
pub const DEFAULT_TRUNCATION: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `0.75 (1 - u²)` on `|u| <= 1`.
    Epanechnikov,
    /// `exp(-u²/2)` on `|u| <= truncation`, unnormalized.
    TruncatedGaussian { truncation: f64 },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::TruncatedGaussian { truncation: DEFAULT_TRUNCATION }
    }
}

impl KernelSpec {
    pub fn truncated_gaussian(truncation: f64) -> Result<Self> {
        if !(truncation > 0.0 && truncation.is_finite()) {
            return Err(Error::Domain(format!("kernel truncation must be positive, got {truncation}")));
        }
        Ok(KernelSpec::TruncatedGaussian { truncation })
    }

    /// Half-width of the support in bandwidth units.
    pub fn support(&self) -> f64 {
        match self {
            KernelSpec::Epanechnikov => 1.0,
            KernelSpec::TruncatedGaussian { truncation } => *truncation,
        }
    }

    pub fn weight(&self, u: f64) -> f64 {
        match self {
            KernelSpec::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            KernelSpec::TruncatedGaussian { truncation } => {
                if u.abs() <= *truncation {
                    (-0.5 * u * u).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Epanechnikov => "epanechnikov",
            KernelSpec::TruncatedGaussian { .. } => "truncated_gaussian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(w: f64) -> Result<Self> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Domain(format!("bandwidth must be positive, got {w}")));
        }
        Ok(Self(w))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    ClassicalSemivariogram,
    KernelSemivariogram,
    KernelCovariogram,
}

/// Which estimator to apply, with its smoothing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorConfig {
    Classical,
    KernelSemivariogram { kernel: KernelSpec, bandwidth: Bandwidth },
    KernelCovariogram { kernel: KernelSpec, bandwidth: Bandwidth },
}

impl EstimatorConfig {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            EstimatorConfig::Classical => EstimatorKind::ClassicalSemivariogram,
            EstimatorConfig::KernelSemivariogram { .. } => EstimatorKind::KernelSemivariogram,
            EstimatorConfig::KernelCovariogram { .. } => EstimatorKind::KernelCovariogram,
        }
    }

    pub fn bandwidth(&self) -> Option<Bandwidth> {
        match self {
            EstimatorConfig::Classical => None,
            EstimatorConfig::KernelSemivariogram { bandwidth, .. }
            | EstimatorConfig::KernelCovariogram { bandwidth, .. } => Some(*bandwidth),
        }
    }
}

/// Point estimates at each lag of `lag_set`, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct GHat {
    pub values: Vec<f64>,
    pub lag_set: LagSet,
    pub kind: EstimatorKind,
    /// Pair count (classical) or total kernel weight (kernel) per lag.
    pub support: Vec<f64>,
}

impl GHat {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `γ̂(h) = Σ_{D(h)} [Y(s) - Y(s+h)]² / (2|D(h)|)` and `|D(h)|`.
pub fn classical_semivariogram_with_count(dataset: &SpatialDataset, lag: Lag) -> Result<(f64, usize)> {
    let tol = LOCATION_TOLERANCE * dataset.match_scale();
    let pairs = enumerate_lag_pairs(dataset, lag, tol);
    if pairs.is_empty() {
        return Err(Error::NoPairs(lag));
    }
    let y = dataset.values();
    let sum: f64 = pairs.iter().map(|&(i, j)| (y[i] - y[j]).powi(2)).sum();
    Ok((sum / (2.0 * pairs.len() as f64), pairs.len()))
}

pub fn classical_semivariogram(dataset: &SpatialDataset, lag: Lag) -> Result<f64> {
    classical_semivariogram_with_count(dataset, lag).map(|(g, _)| g)
}

/// Visits every ordered pair with positive product-kernel weight.
fn for_each_weighted_pair<F: FnMut(usize, usize, f64)>(
    dataset: &SpatialDataset,
    lag: Lag,
    kernel: KernelSpec,
    bw: Bandwidth,
    include_self: bool,
    mut f: F,
) {
    let w = bw.value();
    let locs = dataset.locations();
    PairIndex::new(locs).for_each_in_box(lag, kernel.support() * w, |i, j| {
        if i == j && !include_self {
            return;
        }
        let ux = (locs[j].x - locs[i].x - lag.dx) / w;
        let uy = (locs[j].y - locs[i].y - lag.dy) / w;
        let weight = kernel.weight(ux) * kernel.weight(uy);
        if weight > 0.0 {
            f(i, j, weight);
        }
    });
}

/// Kernel semivariogram and its total weight. Only distinct pairs enter.
pub fn kernel_semivariogram_with_weight(
    dataset: &SpatialDataset,
    lag: Lag,
    kernel: KernelSpec,
    bw: Bandwidth,
) -> Result<(f64, f64)> {
    let y = dataset.values();
    let (mut num, mut den) = (0.0, 0.0);
    for_each_weighted_pair(dataset, lag, kernel, bw, false, |i, j, wt| {
        num += wt * 0.5 * (y[i] - y[j]).powi(2);
        den += wt;
    });
    if den <= 0.0 {
        return Err(Error::EmptyNeighborhood(lag));
    }
    Ok((num / den, den))
}

pub fn kernel_semivariogram(
    dataset: &SpatialDataset,
    lag: Lag,
    kernel: KernelSpec,
    bw: Bandwidth,
) -> Result<f64> {
    kernel_semivariogram_with_weight(dataset, lag, kernel, bw).map(|(g, _)| g)
}

/// Kernel covariogram of the mean-centred data and its total weight.
/// Distinct pairs enter at every lag; self pairs enter only at lag `(0, 0)`.
pub fn kernel_covariogram_with_weight(
    dataset: &SpatialDataset,
    lag: Lag,
    kernel: KernelSpec,
    bw: Bandwidth,
) -> Result<(f64, f64)> {
    let mean = dataset.mean();
    let y = dataset.values();
    let (mut num, mut den) = (0.0, 0.0);
    for_each_weighted_pair(dataset, lag, kernel, bw, lag.is_zero(), |i, j, wt| {
        num += wt * (y[i] - mean) * (y[j] - mean);
        den += wt;
    });
    if den <= 0.0 {
        return Err(Error::EmptyNeighborhood(lag));
    }
    Ok((num / den, den))
}

pub fn kernel_covariogram(
    dataset: &SpatialDataset,
    lag: Lag,
    kernel: KernelSpec,
    bw: Bandwidth,
) -> Result<f64> {
    kernel_covariogram_with_weight(dataset, lag, kernel, bw).map(|(g, _)| g)
}

/// Median nearest-neighbour distance between sampling locations.
pub fn median_nearest_neighbor_distance(dataset: &SpatialDataset) -> Result<f64> {
    let locs = dataset.locations();
    if locs.len() < 2 {
        return Err(Error::Domain("nearest-neighbour distance needs at least 2 locations".into()));
    }
    let mut order: Vec<usize> = (0..locs.len()).collect();
    order.sort_by(|&a, &b| locs[a].x.total_cmp(&locs[b].x));
    let mut nn = vec![f64::INFINITY; locs.len()];
    for (pos, &i) in order.iter().enumerate() {
        let mut best = f64::INFINITY;
        for &j in &order[pos + 1..] {
            if locs[j].x - locs[i].x > best {
                break;
            }
            best = best.min(locs[i].distance(&locs[j]));
        }
        for &j in order[..pos].iter().rev() {
            if locs[i].x - locs[j].x > best {
                break;
            }
            best = best.min(locs[i].distance(&locs[j]));
        }
        nn[i] = best;
    }
    nn.sort_by(f64::total_cmp);
    let n = nn.len();
    Ok(if n % 2 == 1 {
        nn[n / 2]
    } else {
        0.5 * (nn[n / 2 - 1] + nn[n / 2])
    })
}

/// `tuning x` median nearest-neighbour distance.
pub fn empirical_bandwidth(dataset: &SpatialDataset, tuning: f64) -> Result<Bandwidth> {
    if !(tuning > 0.0 && tuning.is_finite()) {
        return Err(Error::Domain(format!("bandwidth tuning must be positive, got {tuning}")));
    }
    Bandwidth::new(tuning * median_nearest_neighbor_distance(dataset)?)
}

/// Estimates at every lag of `lag_set`; errors name the failing lag.
pub fn estimate_g(dataset: &SpatialDataset, lag_set: &LagSet, config: &EstimatorConfig) -> Result<GHat> {
    let mut values = Vec::with_capacity(lag_set.len());
    let mut support = Vec::with_capacity(lag_set.len());
    for &lag in lag_set.iter() {
        let (v, s) = match *config {
            EstimatorConfig::Classical => {
                let (g, c) = classical_semivariogram_with_count(dataset, lag)?;
                (g, c as f64)
            }
            EstimatorConfig::KernelSemivariogram { kernel, bandwidth } => {
                kernel_semivariogram_with_weight(dataset, lag, kernel, bandwidth)?
            }
            EstimatorConfig::KernelCovariogram { kernel, bandwidth } => {
                kernel_covariogram_with_weight(dataset, lag, kernel, bandwidth)?
            }
        };
        values.push(v);
        support.push(s);
    }
    Ok(GHat { values, lag_set: lag_set.clone(), kind: config.kind(), support })
}
