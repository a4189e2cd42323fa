//! Periodogram on a complete rectangular grid and the two-stage
//! periodogram-ratio test of reflection and complete symmetry (LZ).
//!
//! Under symmetry of the spectral density, the ratio of periodogram values
//! at two mirrored frequencies is asymptotically F(2, 2). Stage 1 compares
//! `I(ω₁, ω₂)` with `I(-ω₁, ω₂)`; stage 2 compares `I(ω₁, ω₂)` with
//! `I(ω₂, ω₁)`. Each stage is a Cramér–von Mises fit of the ratios to F(2, 2)
//! at level `α/2`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dataset::{GridSpec, SpatialDataset};
use crate::distributions::{cvm_test, f22_cdf};
use crate::error::{Error, Result};

/// Minimum number of ratios for the reflection stage.
pub const MIN_REFLECTION_RATIOS: usize = 5;

/// A Fourier frequency `ω_j = 2π k_j / n_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierFrequency {
    pub k1: i64,
    pub k2: i64,
    pub omega1: f64,
    pub omega2: f64,
}

/// Largest retained index: `(n-1)/2` for odd `n`, `n/2 - 1` for even `n`.
pub fn max_index(n: usize) -> usize {
    if n % 2 == 1 {
        (n - 1) / 2
    } else {
        (n / 2).saturating_sub(1)
    }
}

fn signed_range(m: i64) -> impl Iterator<Item = i64> + Clone {
    (-m..=m).filter(|&k| k != 0)
}

/// Every `(k₁, k₂)` with `k_j ∈ {-n_j*, …, -1, 1, …, n_j*}`.
pub fn fourier_frequencies(n1: usize, n2: usize) -> Result<Vec<FourierFrequency>> {
    let (m1, m2) = (max_index(n1), max_index(n2));
    if m1 < 1 || m2 < 1 {
        return Err(Error::Domain(format!("grid {n1} x {n2} has no usable Fourier frequencies")));
    }
    let mut out = Vec::with_capacity(4 * m1 * m2);
    for k2 in signed_range(m2 as i64) {
        for k1 in signed_range(m1 as i64) {
            out.push(FourierFrequency {
                k1,
                k2,
                omega1: 2.0 * PI * k1 as f64 / n1 as f64,
                omega2: 2.0 * PI * k2 as f64 / n2 as f64,
            });
        }
    }
    Ok(out)
}

/// `|DFT(Y - Ȳ)|² / ((2π)² n₁ n₂)` on a grid with `n₁` columns (x) and
/// `n₂` rows (y).
#[derive(Debug, Clone)]
pub struct Periodogram {
    n1: usize,
    n2: usize,
    /// Demeaned field in row-major order, x fastest.
    field: Vec<f64>,
    /// Power at every DFT bin, indexed `[k2 * n1 + k1]` with `k_j` mod `n_j`.
    bins: Vec<f64>,
}

fn grid_values(dataset: &SpatialDataset) -> Result<(GridSpec, Vec<f64>)> {
    let grid = *dataset.grid().ok_or_else(|| Error::Incompatible {
        method: "lz".into(),
        reason: "the periodogram needs a complete rectangular grid".into(),
    })?;
    if grid.len() != dataset.len() {
        return Err(Error::IncompleteGrid(format!(
            "{} observations on a {} x {} grid",
            dataset.len(),
            grid.n_cols,
            grid.n_rows
        )));
    }
    let mut field = vec![f64::NAN; grid.len()];
    for (loc, &v) in dataset.locations().iter().zip(dataset.values()) {
        let (c, r) = grid
            .cell_of(loc, 1e-6)
            .ok_or_else(|| Error::IncompleteGrid(format!("location ({}, {}) is off the grid", loc.x, loc.y)))?;
        field[r * grid.n_cols + c] = v;
    }
    if field.iter().any(|v| v.is_nan()) {
        return Err(Error::IncompleteGrid("some grid cells have no observation".into()));
    }
    Ok((grid, field))
}

impl Periodogram {
    pub fn new(dataset: &SpatialDataset) -> Result<Self> {
        let (grid, field) = grid_values(dataset)?;
        Ok(Self::from_field(grid.n_cols, grid.n_rows, field))
    }

    fn from_field(n1: usize, n2: usize, mut field: Vec<f64>) -> Self {
        let mean = field.iter().sum::<f64>() / field.len() as f64;
        field.iter_mut().for_each(|v| *v -= mean);

        let mut planner = FftPlanner::<f64>::new();
        let mut data: Vec<Complex<f64>> = field.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let fft_rows = planner.plan_fft_forward(n1);
        for row in data.chunks_exact_mut(n1) {
            fft_rows.process(row);
        }
        let fft_cols = planner.plan_fft_forward(n2);
        let mut col = vec![Complex::new(0.0, 0.0); n2];
        for c in 0..n1 {
            for r in 0..n2 {
                col[r] = data[r * n1 + c];
            }
            fft_cols.process(&mut col);
            for r in 0..n2 {
                data[r * n1 + c] = col[r];
            }
        }
        let norm = (2.0 * PI).powi(2) * (n1 * n2) as f64;
        let bins = data.iter().map(|z| z.norm_sqr() / norm).collect();
        Self { n1, n2, field, bins }
    }

    /// Periodogram of the largest centred square sub-grid.
    pub fn square_crop(&self) -> Periodogram {
        let s = self.n1.min(self.n2);
        if s == self.n1 && s == self.n2 {
            return self.clone();
        }
        let (c0, r0) = ((self.n1 - s) / 2, (self.n2 - s) / 2);
        let mut field = Vec::with_capacity(s * s);
        for r in r0..r0 + s {
            field.extend_from_slice(&self.field[r * self.n1 + c0..r * self.n1 + c0 + s]);
        }
        Self::from_field(s, s, field)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// Value at integer indices, reduced mod `n_j`.
    pub fn at(&self, k1: i64, k2: i64) -> f64 {
        let i = k1.rem_euclid(self.n1 as i64) as usize;
        let j = k2.rem_euclid(self.n2 as i64) as usize;
        self.bins[j * self.n1 + i]
    }

    /// Every DFT bin, including zero and Nyquist frequencies.
    pub fn all_bins(&self) -> &[f64] {
        &self.bins
    }

    /// Retained frequencies and their values.
    pub fn values(&self) -> Result<Vec<(FourierFrequency, f64)>> {
        Ok(fourier_frequencies(self.n1, self.n2)?
            .into_iter()
            .map(|f| (f, self.at(f.k1, f.k2)))
            .collect())
    }

    /// Periodogram at an arbitrary frequency by direct summation over the
    /// field.
    pub fn evaluate(&self, omega1: f64, omega2: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for r in 0..self.n2 {
            for c in 0..self.n1 {
                let v = self.field[r * self.n1 + c];
                let phase = omega1 * c as f64 + omega2 * r as f64;
                re += v * phase.cos();
                im -= v * phase.sin();
            }
        }
        (re * re + im * im) / ((2.0 * PI).powi(2) * (self.n1 * self.n2) as f64)
    }
}

pub fn periodogram(dataset: &SpatialDataset) -> Result<Periodogram> {
    Periodogram::new(dataset)
}

/// Periodogram as the cosine transform of the biased sample
/// autocovariance, `(2π)⁻² Σ_h Ĉ(h) cos(ω·h)`. Quadratic cost; used to
/// cross-check the FFT path on small grids.
pub fn periodogram_direct(dataset: &SpatialDataset, omega1: f64, omega2: f64) -> Result<f64> {
    let (grid, mut field) = grid_values(dataset)?;
    let (n1, n2) = (grid.n_cols as i64, grid.n_rows as i64);
    let mean = field.iter().sum::<f64>() / field.len() as f64;
    field.iter_mut().for_each(|v| *v -= mean);
    let at = |c: i64, r: i64| field[(r * n1 + c) as usize];
    let mut total = 0.0;
    for h2 in -(n2 - 1)..n2 {
        for h1 in -(n1 - 1)..n1 {
            let mut c_hat = 0.0;
            for r in 0.max(-h2)..n2.min(n2 - h2) {
                for c in 0.max(-h1)..n1.min(n1 - h1) {
                    c_hat += at(c, r) * at(c + h1, r + h2);
                }
            }
            c_hat /= (n1 * n2) as f64;
            total += c_hat * (omega1 * h1 as f64 + omega2 * h2 as f64).cos();
        }
    }
    Ok(total / (2.0 * PI).powi(2))
}

/// How stage 2 finds `I(ω₂, ω₁)` for a grid frequency `(ω₁, ω₂)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalPairing {
    /// Use only pairs where the swapped frequency is itself a Fourier
    /// frequency (`k₁ n₂ = k₂' n₁`). On non-square grids very few remain.
    Matched,
    /// Evaluate the periodogram at the swapped frequency directly, keeping
    /// every off-diagonal quarter-plane frequency. Both orientations enter,
    /// which dilutes a one-sided asymmetry.
    Evaluated,
    /// Matched pairs on the periodogram of the largest centred square
    /// sub-grid, where every swapped frequency exists and the spectral
    /// window is the same in both directions. Ratios are oriented with
    /// `ω₁ < ω₂` in the numerator.
    #[default]
    Square,
}

/// CvM fit of one stage's ratios to F(2, 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_ratios: usize,
    pub clamped: bool,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryTestResult {
    pub alpha: f64,
    pub stage1: StageResult,
    /// `None` when stage 1 already rejected.
    pub stage2: Option<StageResult>,
    /// Stage-2 result computed regardless of stage 1; gives the combined
    /// p-value `min(1, 2 min(p₁, p₂))`, which rejects exactly when the
    /// two-stage procedure does.
    pub stage2_unconditional: Option<StageResult>,
    pub reject: bool,
    pub notes: Vec<String>,
}

impl SymmetryTestResult {
    pub fn combined_p_value(&self) -> f64 {
        let p2 = self.stage2_unconditional.as_ref().map_or(1.0, |s| s.p_value);
        (2.0 * self.stage1.p_value.min(p2)).min(1.0)
    }
}

fn ratio(num: f64, den: f64, what: &str) -> Result<f64> {
    if !(den > 0.0) {
        return Err(Error::DegeneratePeriodogram(format!("zero periodogram value at {what}")));
    }
    Ok(num / den)
}

/// Ratios `I(ω₁, ω₂) / I(-ω₁, ω₂)` over `k₁, k₂ >= 1`.
pub fn reflection_ratios(pgram: &Periodogram) -> Result<Vec<f64>> {
    let (m1, m2) = (max_index(pgram.n1) as i64, max_index(pgram.n2) as i64);
    let mut out = Vec::with_capacity((m1 * m2).max(0) as usize);
    for k2 in 1..=m2 {
        for k1 in 1..=m1 {
            out.push(ratio(pgram.at(k1, k2), pgram.at(-k1, k2), &format!("k = ({}, {k2})", -k1))?);
        }
    }
    Ok(out)
}

/// Ratios `I(ω₁, ω₂) / I(ω₂, ω₁)` over quarter-plane frequencies off the
/// diagonal, each unordered pair once.
pub fn diagonal_ratios(pgram: &Periodogram, pairing: DiagonalPairing) -> Result<Vec<f64>> {
    if pairing == DiagonalPairing::Square {
        return diagonal_ratios(&pgram.square_crop(), DiagonalPairing::Matched);
    }
    let (n1, n2) = (pgram.n1 as i64, pgram.n2 as i64);
    let (m1, m2) = (max_index(pgram.n1) as i64, max_index(pgram.n2) as i64);
    let mut out = Vec::new();
    for k2 in 1..=m2 {
        for k1 in 1..=m1 {
            // ω₁ vs ω₂ compared exactly through k₁ n₂ vs k₂ n₁
            let (a, b) = (k1 * n2, k2 * n1);
            if a == b {
                continue;
            }
            match pairing {
                DiagonalPairing::Matched | DiagonalPairing::Square => {
                    // swapped indices: k₁' = k₂ n₁ / n₂, k₂' = k₁ n₂ / n₁
                    if b % n2 != 0 || a % n1 != 0 {
                        continue;
                    }
                    let (s1, s2) = (b / n2, a / n1);
                    if s1 > m1 || s2 > m2 {
                        continue;
                    }
                    // keep each unordered pair once: the member with ω₁ < ω₂
                    if a > b {
                        continue;
                    }
                    out.push(ratio(pgram.at(k1, k2), pgram.at(s1, s2), &format!("k = ({s1}, {s2})"))?);
                }
                DiagonalPairing::Evaluated => {
                    let w1 = 2.0 * PI * k1 as f64 / n1 as f64;
                    let w2 = 2.0 * PI * k2 as f64 / n2 as f64;
                    let swapped = pgram.evaluate(w2, w1);
                    out.push(ratio(pgram.at(k1, k2), swapped, &format!("ω = ({w2:.4}, {w1:.4})"))?);
                }
            }
        }
    }
    Ok(out)
}

fn stage(ratios: &[f64], level: f64) -> Result<StageResult> {
    let cvm = cvm_test(ratios, |x| f22_cdf(x).unwrap_or(0.0))?;
    Ok(StageResult {
        statistic: cvm.statistic,
        p_value: cvm.p_value,
        n_ratios: ratios.len(),
        clamped: cvm.clamped,
        rejected: cvm.p_value < level,
    })
}

/// Reflection-symmetry stage on its own, returning `(W, p)`.
pub fn lz_reflection_test(pgram: &Periodogram) -> Result<(f64, f64)> {
    let ratios = reflection_ratios(pgram)?;
    if ratios.len() < MIN_REFLECTION_RATIOS {
        return Err(Error::Domain(format!(
            "only {} reflection ratios; need at least {MIN_REFLECTION_RATIOS}",
            ratios.len()
        )));
    }
    let s = stage(&ratios, 0.0)?;
    Ok((s.statistic, s.p_value))
}

/// Two-stage complete-symmetry test at overall level `alpha`.
pub fn lz_complete_test(pgram: &Periodogram, alpha: f64, pairing: DiagonalPairing) -> Result<SymmetryTestResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let level = alpha / 2.0;
    let ratios = reflection_ratios(pgram)?;
    if ratios.len() < MIN_REFLECTION_RATIOS {
        return Err(Error::Domain(format!(
            "only {} reflection ratios; need at least {MIN_REFLECTION_RATIOS}",
            ratios.len()
        )));
    }
    let stage1 = stage(&ratios, level)?;
    let mut notes = Vec::new();
    let diag = diagonal_ratios(pgram, pairing)?;
    let stage2_unconditional = if diag.is_empty() {
        notes.push("no frequency pairs available for the diagonal stage".into());
        None
    } else {
        if diag.len() < MIN_REFLECTION_RATIOS {
            notes.push(format!("diagonal stage uses only {} ratio(s)", diag.len()));
        }
        Some(stage(&diag, level)?)
    };
    let stage2 = if stage1.rejected { None } else { stage2_unconditional.clone() };
    let reject = stage1.rejected || stage2.as_ref().is_some_and(|s| s.rejected);
    Ok(SymmetryTestResult { alpha, stage1, stage2, stage2_unconditional, reject, notes })
}
