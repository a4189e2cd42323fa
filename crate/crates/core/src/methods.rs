//! Serializable method specifications and a single dispatch point, shared by
//! the study harness and the command line.

use serde::{Deserialize, Serialize};

use crate::dataset::SpatialDataset;
use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::estimators::{Bandwidth, KernelSpec};
use crate::lags::{default_contrast, default_lag_set, ContrastMatrix, Lag, LagSet};
use crate::resampling::{VarianceScaling, WindowPurpose, WindowSpec};
use crate::spatial_tests::{
    gsc_gridded_test, gsc_nongridded_test, ms_test, Diagnostics, PValueMode, TestMethod, TestResult,
};
use crate::spectral::{lz_complete_test, periodogram, DiagonalPairing};

fn one() -> f64 {
    1.0
}

/// Lag set and contrast. By default the four axis/diagonal lags scaled by
/// `scale`, optionally with the extra pair, contrasted in orthogonal pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagConfig {
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub extra_pair: bool,
    /// Explicit lags, overriding `scale` and `extra_pair`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lags: Option<Vec<Lag>>,
    /// Explicit contrast rows; default pairs consecutive lags.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast: Option<Vec<Vec<f64>>>,
}

impl Default for LagConfig {
    fn default() -> Self {
        Self { scale: 1.0, extra_pair: false, lags: None, contrast: None }
    }
}

impl LagConfig {
    pub fn build(&self) -> Result<(LagSet, ContrastMatrix)> {
        let set = match &self.lags {
            Some(l) => LagSet::new(l.clone())?,
            None => {
                if !(self.scale > 0.0 && self.scale.is_finite()) {
                    return Err(Error::Config(format!("lag scale must be positive, got {}", self.scale)));
                }
                let base = default_lag_set(self.scale);
                if self.extra_pair {
                    base.with_extra_pair(1.0)?
                } else {
                    base
                }
            }
        };
        let a = match &self.contrast {
            Some(rows) => ContrastMatrix::from_rows(rows)?,
            None => default_contrast(&set)?,
        };
        if a.n_lags() != set.len() {
            return Err(Error::Config(format!(
                "contrast has {} columns for {} lags",
                a.n_lags(),
                set.len()
            )));
        }
        Ok((set, a))
    }
}

/// `[width, height]`, or `None` for the size heuristic.
pub type WindowSize = Option<[f64; 2]>;

fn window_spec(
    size: WindowSize,
    step: Option<f64>,
    dataset: &SpatialDataset,
    purpose: WindowPurpose,
) -> Result<WindowSpec> {
    let spec = match size {
        Some([w, h]) => WindowSpec::new(w, h)?,
        None => WindowSpec::recommended(dataset, purpose)?,
    };
    match step {
        Some(s) => spec.with_step(s),
        None => Ok(spec),
    }
}

fn default_bandwidth() -> f64 {
    0.75
}

fn default_resamples() -> usize {
    100
}

fn default_gridded_mode() -> PValueMode {
    PValueMode::FiniteSample
}

fn pair_count() -> VarianceScaling {
    VarianceScaling::PairCount
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", deny_unknown_fields)]
pub enum MethodSpec {
    #[serde(rename = "gsc-g")]
    GscGridded {
        #[serde(default)]
        lags: LagConfig,
        #[serde(default)]
        window: WindowSize,
        #[serde(default = "pair_count")]
        variance_scaling: VarianceScaling,
        #[serde(default = "default_gridded_mode")]
        pvalue_mode: PValueMode,
    },
    #[serde(rename = "gsc-u")]
    GscScattered {
        #[serde(default)]
        lags: LagConfig,
        #[serde(default)]
        kernel: KernelSpec,
        #[serde(default = "default_bandwidth")]
        bandwidth: f64,
        #[serde(default)]
        window: WindowSize,
        #[serde(default)]
        window_step: Option<f64>,
        #[serde(default)]
        variance_scaling: VarianceScaling,
        /// `None` picks finite-sample below 500 observations.
        #[serde(default)]
        pvalue_mode: Option<PValueMode>,
    },
    #[serde(rename = "ms")]
    Ms {
        #[serde(default)]
        lags: LagConfig,
        #[serde(default)]
        block: WindowSize,
        #[serde(default = "default_resamples")]
        resamples: usize,
        #[serde(default = "one")]
        tuning: f64,
    },
    #[serde(rename = "lz")]
    Lz {
        #[serde(default)]
        pairing: DiagonalPairing,
    },
}

impl MethodSpec {
    pub fn default_for(method: TestMethod) -> Self {
        match method {
            TestMethod::GscGridded => MethodSpec::GscGridded {
                lags: LagConfig::default(),
                window: None,
                variance_scaling: pair_count(),
                pvalue_mode: default_gridded_mode(),
            },
            TestMethod::GscScattered => MethodSpec::GscScattered {
                lags: LagConfig::default(),
                kernel: KernelSpec::default(),
                bandwidth: default_bandwidth(),
                window: None,
                window_step: None,
                variance_scaling: VarianceScaling::default(),
                pvalue_mode: None,
            },
            TestMethod::Ms => MethodSpec::Ms {
                lags: LagConfig::default(),
                block: None,
                resamples: default_resamples(),
                tuning: 1.0,
            },
            TestMethod::Lz => MethodSpec::Lz { pairing: DiagonalPairing::default() },
        }
    }

    pub fn method(&self) -> TestMethod {
        match self {
            MethodSpec::GscGridded { .. } => TestMethod::GscGridded,
            MethodSpec::GscScattered { .. } => TestMethod::GscScattered,
            MethodSpec::Ms { .. } => TestMethod::Ms,
            MethodSpec::Lz { .. } => TestMethod::Lz,
        }
    }

    pub fn requires_grid(&self) -> bool {
        matches!(self, MethodSpec::GscGridded { .. } | MethodSpec::Lz { .. })
    }

    /// Static checks that do not need data.
    pub fn validate(&self) -> Result<()> {
        match self {
            MethodSpec::GscGridded { lags, window, .. } => {
                lags.build()?;
                check_size(window)
            }
            MethodSpec::GscScattered { lags, bandwidth, window, window_step, .. } => {
                lags.build()?;
                Bandwidth::new(*bandwidth)?;
                if let Some(s) = window_step {
                    if !(*s > 0.0) {
                        return Err(Error::Config(format!("window step must be positive, got {s}")));
                    }
                }
                check_size(window)
            }
            MethodSpec::Ms { lags, block, resamples, tuning } => {
                lags.build()?;
                if *resamples < 2 {
                    return Err(Error::Config(format!("need at least 2 resamples, got {resamples}")));
                }
                if !(*tuning > 0.0) {
                    return Err(Error::Config(format!("bandwidth tuning must be positive, got {tuning}")));
                }
                check_size(block)
            }
            MethodSpec::Lz { .. } => Ok(()),
        }
    }

    /// Runs the method on `dataset`. `rng` feeds the bootstrap (MS only).
    /// For LZ the p-value is `min(1, 2 min(p₁, p₂))`, which rejects at `alpha`
    /// exactly when the two-stage procedure does.
    pub fn run(&self, dataset: &SpatialDataset, alpha: f64, rng: &RngStream) -> Result<TestResult> {
        if self.requires_grid() && !dataset.is_gridded() {
            return Err(Error::Incompatible {
                method: self.method().id().into(),
                reason: "it needs gridded sampling locations, and how the locations are laid out \
                         matters most when choosing a test; use gsc-u or ms for scattered data"
                    .into(),
            });
        }
        match self {
            MethodSpec::GscGridded { lags, window, variance_scaling, pvalue_mode } => {
                let (set, a) = lags.build()?;
                let w = window_spec(*window, None, dataset, WindowPurpose::GriddedSubsampling)?;
                gsc_gridded_test(dataset, &set, &a, &w, *variance_scaling, *pvalue_mode)
            }
            MethodSpec::GscScattered {
                lags,
                kernel,
                bandwidth,
                window,
                window_step,
                variance_scaling,
                pvalue_mode,
            } => {
                let (set, a) = lags.build()?;
                let w = window_spec(*window, *window_step, dataset, WindowPurpose::ScatteredSubsampling)?;
                let bw = Bandwidth::new(*bandwidth)?;
                gsc_nongridded_test(dataset, &set, &a, *kernel, bw, &w, *variance_scaling, *pvalue_mode)
            }
            MethodSpec::Ms { lags, block, resamples, tuning } => {
                let (set, a) = lags.build()?;
                let b = window_spec(*block, None, dataset, WindowPurpose::BlockBootstrap)?;
                ms_test(dataset, &set, &a, &b, *resamples, *tuning, rng)
            }
            MethodSpec::Lz { pairing } => {
                let p = periodogram(dataset)?;
                let r = lz_complete_test(&p, alpha, *pairing)?;
                let mut warnings = r.notes.clone();
                if r.stage1.clamped || r.stage2_unconditional.as_ref().is_some_and(|s| s.clamped) {
                    warnings.push("a stage p-value was clamped at the series floor".into());
                }
                Ok(TestResult {
                    method: TestMethod::Lz,
                    statistic: r.stage1.statistic,
                    df: 0,
                    p_value: r.combined_p_value(),
                    pvalue_mode: PValueMode::AsymptoticChi2,
                    g_hat: Vec::new(),
                    diagnostics: Diagnostics { warnings, ..Default::default() },
                })
            }
        }
    }
}

fn check_size(size: &WindowSize) -> Result<()> {
    if let Some([w, h]) = size {
        if !(*w > 0.0 && *h > 0.0) {
            return Err(Error::Config(format!("window size must be positive, got {w} x {h}")));
        }
    }
    Ok(())
}
