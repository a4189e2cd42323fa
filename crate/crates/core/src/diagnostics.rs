//! Plot-ready tables: directional semivariograms and equal-correlation
//! contours of the simulation model.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::dataset::SpatialDataset;
use crate::error::{Error, Result};
use crate::grf::{AnisotropyParams, ExponentialCovariance};

/// Number of points on each contour polyline.
pub const CONTOUR_POINTS: usize = 360;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionalBin {
    /// Sector centre in degrees, in `[0, 180)`.
    pub direction_deg: f64,
    /// Distance-bin centre.
    pub distance: f64,
    /// Classical estimate; 0 for an empty bin.
    pub gamma: f64,
    pub pairs: usize,
}

/// Classical semivariogram binned by direction sector and distance.
///
/// Sector `k` is centred at `k·180/n_directions` degrees with half-width
/// `90/n_directions`; pair directions are taken modulo 180°. Distance bins
/// split `(0, max_dist]` evenly.
pub fn directional_semivariogram(
    dataset: &SpatialDataset,
    n_directions: usize,
    n_bins: usize,
    max_dist: f64,
) -> Result<Vec<DirectionalBin>> {
    if dataset.len() < 2 {
        return Err(Error::Domain("directional semivariogram needs at least 2 observations".into()));
    }
    if n_directions == 0 || n_bins == 0 || !(max_dist > 0.0 && max_dist.is_finite()) {
        return Err(Error::Config(format!(
            "need positive directions, bins and max distance; got {n_directions}, {n_bins}, {max_dist}"
        )));
    }
    let sector = PI / n_directions as f64;
    let width = max_dist / n_bins as f64;
    let mut sums = vec![0.0; n_directions * n_bins];
    let mut counts = vec![0usize; n_directions * n_bins];
    let locs = dataset.locations();
    let vals = dataset.values();
    for i in 0..locs.len() {
        for j in i + 1..locs.len() {
            let (dx, dy) = (locs[j].x - locs[i].x, locs[j].y - locs[i].y);
            let d = dx.hypot(dy);
            if d > max_dist || d == 0.0 {
                continue;
            }
            let angle = dy.atan2(dx).rem_euclid(PI);
            let k = ((angle / sector).round() as usize) % n_directions;
            let b = ((d / width).ceil() as usize).clamp(1, n_bins) - 1;
            sums[k * n_bins + b] += (vals[i] - vals[j]).powi(2);
            counts[k * n_bins + b] += 1;
        }
    }
    let mut out = Vec::with_capacity(n_directions * n_bins);
    for k in 0..n_directions {
        for b in 0..n_bins {
            let idx = k * n_bins + b;
            let pairs = counts[idx];
            out.push(DirectionalBin {
                direction_deg: k as f64 * 180.0 / n_directions as f64,
                distance: (b as f64 + 0.5) * width,
                gamma: if pairs > 0 { sums[idx] / (2.0 * pairs as f64) } else { 0.0 },
                pairs,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourPoint {
    pub level: f64,
    pub index: usize,
    pub x: f64,
    pub y: f64,
}

/// Lags at which the model correlation equals each level, as closed
/// polylines of [`CONTOUR_POINTS`] points. Levels must lie in
/// `(0, σ²/(τ²+σ²))`.
pub fn equicorrelation_contours(
    cov: &ExponentialCovariance,
    aniso: &AnisotropyParams,
    levels: &[f64],
) -> Result<Vec<ContourPoint>> {
    let max_level = cov.sigma2 / cov.sill();
    let mut out = Vec::with_capacity(levels.len() * CONTOUR_POINTS);
    let (s, c) = aniso.angle.sin_cos();
    for &level in levels {
        if !(level > 0.0 && level < max_level) {
            return Err(Error::Domain(format!("correlation level {level} must lie in (0, {max_level})")));
        }
        // distance in transformed coordinates where the correlation hits `level`
        let r = -(level / max_level).ln() / cov.phi;
        for i in 0..CONTOUR_POINTS {
            let t = 2.0 * PI * i as f64 / CONTOUR_POINTS as f64;
            // invert h_a = h Rot(θ) diag(1, 1/R)
            let (u, v) = (r * t.cos(), aniso.ratio * r * t.sin());
            out.push(ContourPoint { level, index: i, x: u * c + v * s, y: -u * s + v * c });
        }
    }
    Ok(out)
}

fn write_rows<W: Write, T: Serialize>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_directional_csv<W: Write>(rows: &[DirectionalBin], writer: W) -> Result<()> {
    write_rows(rows, writer)
}

pub fn write_contours_csv<W: Write>(rows: &[ContourPoint], writer: W) -> Result<()> {
    write_rows(rows, writer)
}
