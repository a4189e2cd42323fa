//! Sampling locations, observed values and the optional grid structure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lags::Lag;

/// Locations closer than this are treated as identical.
pub const LOCATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Location) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned rectangle `[x0, x0 + width] x [y0, y0 + height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && x0.is_finite() && y0.is_finite()) {
            return Err(Error::Domain(format!(
                "rectangle needs finite origin and positive size, got {width} x {height}"
            )));
        }
        Ok(Self { x0, y0, width, height })
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.width
    }

    pub fn y1(&self) -> f64 {
        self.y0 + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Half-open membership `[x0, x1) x [y0, y1)`, padded by a relative epsilon
    /// so that grid points on the lower edge are always inside.
    pub fn contains_half_open(&self, loc: &Location) -> bool {
        let eps = 1e-9 * self.width.max(self.height);
        loc.x >= self.x0 - eps
            && loc.x < self.x1() - eps
            && loc.y >= self.y0 - eps
            && loc.y < self.y1() - eps
    }

    pub fn contains_closed(&self, loc: &Location) -> bool {
        let eps = 1e-9 * self.width.max(self.height);
        loc.x >= self.x0 - eps
            && loc.x <= self.x1() + eps
            && loc.y >= self.y0 - eps
            && loc.y <= self.y1() + eps
    }
}

/// Rectangular lattice: `n_cols x n_rows` points with common `spacing`
/// starting at `(origin_x, origin_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_cols: usize,
    pub n_rows: usize,
    pub spacing: f64,
    pub origin_x: f64,
    pub origin_y: f64,
}

impl GridSpec {
    pub fn new(n_cols: usize, n_rows: usize, spacing: f64) -> Result<Self> {
        Self::with_origin(n_cols, n_rows, spacing, 0.0, 0.0)
    }

    pub fn with_origin(
        n_cols: usize,
        n_rows: usize,
        spacing: f64,
        origin_x: f64,
        origin_y: f64,
    ) -> Result<Self> {
        if n_cols == 0 || n_rows == 0 || !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Domain(format!(
                "grid needs positive dimensions and spacing, got {n_cols} x {n_rows} at {spacing}"
            )));
        }
        Ok(Self { n_cols, n_rows, spacing, origin_x, origin_y })
    }

    pub fn len(&self) -> usize {
        self.n_cols * self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Locations in row-major order (x varies fastest).
    pub fn locations(&self) -> Vec<Location> {
        let mut out = Vec::with_capacity(self.len());
        for row in 0..self.n_rows {
            for col in 0..self.n_cols {
                out.push(self.location(col, row));
            }
        }
        out
    }

    pub fn location(&self, col: usize, row: usize) -> Location {
        Location::new(
            self.origin_x + col as f64 * self.spacing,
            self.origin_y + row as f64 * self.spacing,
        )
    }

    /// `(col, row)` of a location on the lattice, if it lies on it.
    pub fn cell_of(&self, loc: &Location, tol: f64) -> Option<(usize, usize)> {
        let fc = (loc.x - self.origin_x) / self.spacing;
        let fr = (loc.y - self.origin_y) / self.spacing;
        let (c, r) = (fc.round(), fr.round());
        if (fc - c).abs() > tol || (fr - r).abs() > tol || c < 0.0 || r < 0.0 {
            return None;
        }
        let (c, r) = (c as usize, r as usize);
        (c < self.n_cols && r < self.n_rows).then_some((c, r))
    }

    /// The sampling domain treating each lattice point as the centre of a
    /// `spacing x spacing` cell.
    pub fn cell_domain(&self) -> Rect {
        Rect {
            x0: self.origin_x - 0.5 * self.spacing,
            y0: self.origin_y - 0.5 * self.spacing,
            width: self.n_cols as f64 * self.spacing,
            height: self.n_rows as f64 * self.spacing,
        }
    }
}

/// Observations `Y(s_1), ..., Y(s_n)` at distinct locations.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialDataset {
    locations: Vec<Location>,
    values: Vec<f64>,
    grid: Option<GridSpec>,
    domain: Option<Rect>,
}

impl SpatialDataset {
    pub fn new(locations: Vec<Location>, values: Vec<f64>) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::Domain("dataset is empty".into()));
        }
        if locations.len() != values.len() {
            return Err(Error::Domain(format!(
                "{} locations but {} values",
                locations.len(),
                values.len()
            )));
        }
        if let Some(loc) = locations.iter().find(|l| !l.is_finite()) {
            return Err(Error::Domain(format!("non-finite location ({}, {})", loc.x, loc.y)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite observation value".into()));
        }
        if let Some((i, _)) = find_duplicate(&locations, LOCATION_TOLERANCE) {
            let loc = locations[i];
            return Err(Error::DuplicateLocation { x: loc.x, y: loc.y, line: None });
        }
        Ok(Self { locations, values, grid: None, domain: None })
    }

    /// A dataset whose values are laid out on `grid` in row-major order.
    pub fn on_grid(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::new(grid.locations(), values)?.with_grid(grid)
    }

    pub(crate) fn from_parts_unchecked(
        locations: Vec<Location>,
        values: Vec<f64>,
        grid: Option<GridSpec>,
        domain: Option<Rect>,
    ) -> Self {
        debug_assert_eq!(locations.len(), values.len());
        Self { locations, values, grid, domain }
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Result<Self> {
        if grid.len() != self.len() {
            return Err(Error::IncompleteGrid(format!(
                "{} x {} grid declared for {} observations",
                grid.n_cols,
                grid.n_rows,
                self.len()
            )));
        }
        let tol = 1e-6;
        if let Some(loc) = self.locations.iter().find(|l| grid.cell_of(l, tol).is_none()) {
            return Err(Error::Domain(format!(
                "location ({}, {}) is not on the declared grid",
                loc.x, loc.y
            )));
        }
        self.grid = Some(grid);
        Ok(self)
    }

    /// Declares the sampling domain; every location must lie inside it.
    pub fn with_domain(mut self, domain: Rect) -> Result<Self> {
        if let Some(loc) = self.locations.iter().find(|l| !domain.contains_closed(l)) {
            return Err(Error::Domain(format!(
                "location ({}, {}) lies outside the declared domain",
                loc.x, loc.y
            )));
        }
        self.domain = Some(domain);
        Ok(self)
    }

    /// Same locations, grid and domain with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::Domain(format!(
                "{} values for {} locations",
                values.len(),
                self.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite observation value".into()));
        }
        Ok(Self { values, ..self.clone() })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.grid.as_ref()
    }

    pub fn is_gridded(&self) -> bool {
        self.grid.is_some()
    }

    /// Declared domain, else the grid's cell domain, else the bounding box.
    pub fn domain(&self) -> Rect {
        if let Some(d) = self.domain {
            return d;
        }
        if let Some(g) = &self.grid {
            return g.cell_domain();
        }
        let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
        let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for l in &self.locations {
            x0 = x0.min(l.x);
            y0 = y0.min(l.y);
            x1 = x1.max(l.x);
            y1 = y1.max(l.y);
        }
        // A degenerate extent still yields a usable rectangle.
        Rect {
            x0,
            y0,
            width: (x1 - x0).max(f64::MIN_POSITIVE),
            height: (y1 - y0).max(f64::MIN_POSITIVE),
        }
    }

    pub fn declared_domain(&self) -> Option<Rect> {
        self.domain
    }

    /// Spacing used for exact lag matching: the grid spacing, else 1.
    pub fn match_scale(&self) -> f64 {
        self.grid.map_or(1.0, |g| g.spacing)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Observations at `indices`. A subset of a gridded dataset keeps a grid
    /// when it forms a complete sub-rectangle.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let locations: Vec<Location> = indices.iter().map(|&i| self.locations[i]).collect();
        let values: Vec<f64> = indices.iter().map(|&i| self.values[i]).collect();
        let grid = self.grid.and_then(|g| {
            let cells: Vec<(usize, usize)> = locations
                .iter()
                .filter_map(|l| g.cell_of(l, 1e-6))
                .collect();
            let c0 = cells.iter().map(|c| c.0).min()?;
            let c1 = cells.iter().map(|c| c.0).max()?;
            let r0 = cells.iter().map(|c| c.1).min()?;
            let r1 = cells.iter().map(|c| c.1).max()?;
            let sub = GridSpec {
                n_cols: c1 - c0 + 1,
                n_rows: r1 - r0 + 1,
                spacing: g.spacing,
                origin_x: g.origin_x + c0 as f64 * g.spacing,
                origin_y: g.origin_y + r0 as f64 * g.spacing,
            };
            (sub.len() == locations.len()).then_some(sub)
        });
        Self { locations, values, grid, domain: None }
    }
}

/// First pair of locations within `tol` of each other, if any.
pub(crate) fn find_duplicate(locations: &[Location], tol: f64) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..locations.len()).collect();
    order.sort_by(|&a, &b| locations[a].x.total_cmp(&locations[b].x));
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if locations[j].x - locations[i].x > tol {
                break;
            }
            if locations[i].distance(&locations[j]) <= tol {
                return Some((i.min(j), i.max(j)));
            }
        }
    }
    None
}

/// Finds a complete lattice carrying all `locations`, within `tol` relative
/// to the spacing.
pub fn detect_grid(locations: &[Location], tol: f64) -> Option<GridSpec> {
    if locations.len() < 2 {
        return None;
    }
    let x0 = locations.iter().map(|l| l.x).fold(f64::INFINITY, f64::min);
    let y0 = locations.iter().map(|l| l.y).fold(f64::INFINITY, f64::min);
    let min_gap = |mut v: Vec<f64>| -> Option<f64> {
        v.sort_by(f64::total_cmp);
        v.windows(2)
            .map(|w| w[1] - w[0])
            .filter(|d| *d > tol)
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))))
    };
    let gx = min_gap(locations.iter().map(|l| l.x).collect());
    let gy = min_gap(locations.iter().map(|l| l.y).collect());
    let spacing = match (gx, gy) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => return None,
    };
    let mut n_cols = 0;
    let mut n_rows = 0;
    for l in locations {
        let fc = (l.x - x0) / spacing;
        let fr = (l.y - y0) / spacing;
        if (fc - fc.round()).abs() > tol || (fr - fr.round()).abs() > tol {
            return None;
        }
        n_cols = n_cols.max(fc.round() as usize + 1);
        n_rows = n_rows.max(fr.round() as usize + 1);
    }
    if n_cols * n_rows != locations.len() || find_duplicate(locations, tol * spacing).is_some() {
        return None;
    }
    Some(GridSpec { n_cols, n_rows, spacing, origin_x: x0, origin_y: y0 })
}

/// Locations sorted by x for range queries over displacement boxes.
pub(crate) struct PairIndex<'a> {
    locations: &'a [Location],
    order: Vec<usize>,
    sorted_x: Vec<f64>,
}

impl<'a> PairIndex<'a> {
    pub fn new(locations: &'a [Location]) -> Self {
        let mut order: Vec<usize> = (0..locations.len()).collect();
        order.sort_by(|&a, &b| locations[a].x.total_cmp(&locations[b].x));
        let sorted_x = order.iter().map(|&i| locations[i].x).collect();
        Self { locations, order, sorted_x }
    }

    /// Calls `f(i, j)` for every ordered pair whose displacement
    /// `s_j - s_i` lies within `[lag - half_width, lag + half_width]` on each
    /// axis (inclusive). Self pairs are included when the box covers zero.
    pub fn for_each_in_box<F: FnMut(usize, usize)>(&self, lag: Lag, half_width: f64, mut f: F) {
        for (i, li) in self.locations.iter().enumerate() {
            let lo = li.x + lag.dx - half_width;
            let hi = li.x + lag.dx + half_width;
            let start = self.sorted_x.partition_point(|&x| x < lo);
            for pos in start..self.sorted_x.len() {
                if self.sorted_x[pos] > hi {
                    break;
                }
                let j = self.order[pos];
                let dy = self.locations[j].y - li.y - lag.dy;
                if dy.abs() <= half_width {
                    f(i, j);
                }
            }
        }
    }
}

/// Ordered pairs `(i, j)` with `s_j - s_i` within Euclidean distance `tol` of
/// `lag`. The length of the result is `|D(h)|`.
pub fn enumerate_lag_pairs(dataset: &SpatialDataset, lag: Lag, tol: f64) -> Vec<(usize, usize)> {
    let locs = dataset.locations();
    let mut pairs = Vec::new();
    PairIndex::new(locs).for_each_in_box(lag, tol, |i, j| {
        let dx = locs[j].x - locs[i].x - lag.dx;
        let dy = locs[j].y - locs[i].y - lag.dy;
        if dx.hypot(dy) <= tol {
            pairs.push((i, j));
        }
    });
    pairs.sort_unstable();
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n_cols: usize, n_rows: usize) -> SpatialDataset {
        let g = GridSpec::new(n_cols, n_rows, 1.0).unwrap();
        SpatialDataset::on_grid(g, vec![0.0; g.len()]).unwrap()
    }

    fn brute_force_pairs(d: &SpatialDataset, lag: Lag, tol: f64) -> Vec<(usize, usize)> {
        let l = d.locations();
        let mut out = Vec::new();
        for i in 0..l.len() {
            for j in 0..l.len() {
                let dx = l[j].x - l[i].x - lag.dx;
                let dy = l[j].y - l[i].y - lag.dy;
                if dx.hypot(dy) <= tol {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn pairs_on_two_by_two_grid() {
        let d = unit_grid(2, 2);
        assert_eq!(enumerate_lag_pairs(&d, Lag::new(1.0, 0.0), 1e-9).len(), 2);
        assert_eq!(enumerate_lag_pairs(&d, Lag::new(1.0, 1.0), 1e-9).len(), 1);
        assert!(enumerate_lag_pairs(&d, Lag::new(100.0, 100.0), 1e-9).is_empty());
        for lag in [Lag::new(1.0, 0.0), Lag::new(1.0, 1.0), Lag::new(-1.0, 1.0)] {
            assert_eq!(enumerate_lag_pairs(&d, lag, 1e-9), brute_force_pairs(&d, lag, 1e-9));
        }
    }

    #[test]
    fn pair_counts_match_closed_form_and_brute_force() {
        for n1 in 1..=6 {
            for n2 in 1..=6 {
                let d = unit_grid(n1, n2);
                for a in 0..=3usize {
                    for b in 0..=3usize {
                        if a == 0 && b == 0 {
                            continue;
                        }
                        let lag = Lag::new(a as f64, b as f64);
                        let pairs = enumerate_lag_pairs(&d, lag, 1e-9);
                        let expected = n1.saturating_sub(a) * n2.saturating_sub(b);
                        assert_eq!(pairs.len(), expected, "{n1}x{n2} lag {lag}");
                        assert_eq!(pairs, brute_force_pairs(&d, lag, 1e-9));
                        assert_eq!(
                            enumerate_lag_pairs(&d, lag.reversed(), 1e-9).len(),
                            pairs.len()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dataset_validation() {
        let l = vec![Location::new(0.0, 0.0), Location::new(0.0, 0.0)];
        assert!(matches!(
            SpatialDataset::new(l, vec![1.0, 2.0]),
            Err(Error::DuplicateLocation { .. })
        ));
        assert!(SpatialDataset::new(vec![Location::new(0.0, 0.0)], vec![]).is_err());
        assert!(SpatialDataset::new(vec![], vec![]).is_err());
        let near = vec![Location::new(0.0, 0.0), Location::new(0.0, 1e-10)];
        assert!(SpatialDataset::new(near, vec![1.0, 2.0]).is_err());
        let off = SpatialDataset::new(vec![Location::new(0.5, 0.0)], vec![1.0]).unwrap();
        assert!(off.with_grid(GridSpec::new(1, 1, 1.0).unwrap()).is_err());
    }

    #[test]
    fn grid_detection() {
        let g = GridSpec::with_origin(5, 3, 0.5, 10.0, -2.0).unwrap();
        let det = detect_grid(&g.locations(), 1e-6).unwrap();
        assert_eq!((det.n_cols, det.n_rows), (5, 3));
        assert!((det.spacing - 0.5).abs() < 1e-12);
        let mut holes = g.locations();
        holes.pop();
        assert!(detect_grid(&holes, 1e-6).is_none());
        let scattered = vec![Location::new(0.1, 0.0), Location::new(0.7, 0.3), Location::new(1.0, 1.1)];
        assert!(detect_grid(&scattered, 1e-6).is_none());
    }

    #[test]
    fn subset_of_grid_keeps_grid_when_complete() {
        let d = unit_grid(4, 3);
        let sub = d.subset(&[1, 2, 5, 6]);
        let g = sub.grid().unwrap();
        assert_eq!((g.n_cols, g.n_rows), (2, 2));
        assert_eq!((g.origin_x, g.origin_y), (1.0, 0.0));
        assert!(d.subset(&[0, 5]).grid().is_none());
    }

    #[test]
    fn domain_of_grid_is_cell_box() {
        let d = unit_grid(18, 12);
        let dom = d.domain();
        assert_eq!((dom.x0, dom.y0, dom.width, dom.height), (-0.5, -0.5, 18.0, 12.0));
    }
}
