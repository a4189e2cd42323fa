//! Spatial lags, lag sets and the contrast matrix defining `H0: A γ(Λ) = 0`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A spatial separation vector `(dx, dy)` in domain units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lag {
    pub dx: f64,
    pub dy: f64,
}

impl Lag {
    pub const fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn norm(&self) -> f64 {
        self.dx.hypot(self.dy)
    }

    pub fn is_zero(&self) -> bool {
        self.dx == 0.0 && self.dy == 0.0
    }

    pub fn reversed(&self) -> Self {
        Self::new(-self.dx, -self.dy)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.dx * s, self.dy * s)
    }
}

impl fmt::Display for Lag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.dx, self.dy)
    }
}

/// The second orthogonal pair used by the "more lags" configuration, roughly
/// at 22.5 and 112.5 degrees with length about 1.22.
pub const EXTRA_PAIR: [Lag; 2] = [Lag::new(1.132, 0.469), Lag::new(-0.469, 1.132)];

/// Ordered set of distinct, nonzero lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Lag>", into = "Vec<Lag>")]
pub struct LagSet {
    lags: Vec<Lag>,
}

impl LagSet {
    pub fn new(lags: Vec<Lag>) -> Result<Self> {
        if lags.len() < 2 {
            return Err(Error::Domain(format!(
                "a lag set needs at least 2 lags, got {}",
                lags.len()
            )));
        }
        for (i, lag) in lags.iter().enumerate() {
            if !(lag.dx.is_finite() && lag.dy.is_finite()) || lag.is_zero() {
                return Err(Error::Domain(format!("lag {lag} must be finite and nonzero")));
            }
            if lags[..i].contains(lag) {
                return Err(Error::Domain(format!("lag {lag} appears twice")));
            }
        }
        Ok(Self { lags })
    }

    pub fn lags(&self) -> &[Lag] {
        &self.lags
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Lag> {
        self.lags.iter()
    }

    /// Appends [`EXTRA_PAIR`], scaled by `scale`.
    pub fn with_extra_pair(&self, scale: f64) -> Result<Self> {
        let mut lags = self.lags.clone();
        lags.extend(EXTRA_PAIR.iter().map(|l| l.scaled(scale)));
        Self::new(lags)
    }

    /// Rotates every lag by 90 degrees counter-clockwise.
    pub fn rotated_quarter_turn(&self) -> Self {
        Self {
            lags: self.lags.iter().map(|l| Lag::new(-l.dy, l.dx)).collect(),
        }
    }
}

impl TryFrom<Vec<Lag>> for LagSet {
    type Error = Error;

    fn try_from(lags: Vec<Lag>) -> Result<Self> {
        Self::new(lags)
    }
}

impl From<LagSet> for Vec<Lag> {
    fn from(set: LagSet) -> Self {
        set.lags
    }
}

/// `{(1,0), (0,1), (1,1), (-1,1)}` multiplied by `scale`.
pub fn default_lag_set(scale: f64) -> LagSet {
    let base = [
        Lag::new(1.0, 0.0),
        Lag::new(0.0, 1.0),
        Lag::new(1.0, 1.0),
        Lag::new(-1.0, 1.0),
    ];
    LagSet {
        lags: base.iter().map(|l| l.scaled(scale)).collect(),
    }
}

/// Full-row-rank `r x k` contrast matrix whose rows each sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMatrix {
    rows: DMatrix<f64>,
}

impl ContrastMatrix {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        let (r, k) = rows.shape();
        if r == 0 || k < 2 {
            return Err(Error::Domain(format!("contrast matrix shape {r}x{k} is empty")));
        }
        if r > k - 1 {
            return Err(Error::Domain(format!(
                "contrast matrix has {r} rows but at most {} are possible for {k} lags",
                k - 1
            )));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("contrast matrix has non-finite entries".into()));
        }
        for (i, row) in rows.row_iter().enumerate() {
            let scale = row.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if row.sum().abs() > 1e-12 * scale.max(1.0) {
                return Err(Error::Domain(format!("contrast row {} does not sum to zero", i + 1)));
            }
        }
        if rows.rank(1e-10 * rows.amax().max(1.0)) != r {
            return Err(Error::Domain("contrast matrix is not of full row rank".into()));
        }
        Ok(Self { rows })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != k) {
            return Err(Error::Domain("contrast rows have unequal lengths".into()));
        }
        Self::new(DMatrix::from_fn(r, k, |i, j| rows[i][j]))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// Row rank, which is also the chi-square degrees of freedom.
    pub fn n_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_lags(&self) -> usize {
        self.rows.ncols()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .row_iter()
            .map(|row| row.iter().copied().collect())
            .collect()
    }
}

/// Contrasts consecutive orthogonal pairs: row `i` is `+1` at lag `2i`, `-1`
/// at lag `2i + 1`.
pub fn default_contrast(lag_set: &LagSet) -> Result<ContrastMatrix> {
    let k = lag_set.len();
    if k % 2 != 0 {
        return Err(Error::Pairing(format!("odd lag count {k}")));
    }
    for pair in lag_set.lags().chunks(2) {
        let dot = pair[0].dx * pair[1].dx + pair[0].dy * pair[1].dy;
        if dot.abs() > 1e-3 * pair[0].norm() * pair[1].norm() {
            return Err(Error::Pairing(format!(
                "lags {} and {} are not orthogonal",
                pair[0], pair[1]
            )));
        }
    }
    let r = k / 2;
    let mut rows = DMatrix::zeros(r, k);
    for i in 0..r {
        rows[(i, 2 * i)] = 1.0;
        rows[(i, 2 * i + 1)] = -1.0;
    }
    ContrastMatrix::new(rows)
}
