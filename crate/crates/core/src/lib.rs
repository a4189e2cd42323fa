//! Nonparametric tests of isotropy and symmetry for spatial random fields.
//!
//! The crate covers the full workflow:
//!
//! - [`dataset`] and [`lags`]: observations, grids, lag sets and contrasts
//! - [`estimators`]: classical and kernel semivariogram / covariogram estimates
//! - [`resampling`]: moving-window subsampling and the grid-based block
//!   bootstrap for the variance of those estimates
//! - [`spatial_tests`]: quadratic-form tests (GSC-g, GSC-u, MS)
//! - [`spectral`]: periodogram and the two-stage LZ symmetry test
//! - [`grf`]: Gaussian random field simulation with geometric anisotropy
//! - [`methods`]: serializable method settings and one dispatch point
//! - [`study`]: Monte Carlo size/power studies
//! - [`diagnostics`] and [`io`]: plot-ready tables and CSV input/output
//!
//! Runnable walkthroughs live in the `examples/` directory of this crate.

pub mod dataset;
pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod grf;
pub mod io;
pub mod lags;
pub mod methods;
pub mod resampling;
pub mod spectral;
pub mod study;

pub use dataset::{GridSpec, Location, Rect, SpatialDataset};
pub use distributions::RngStream;
pub use error::{Error, Result};
pub use lags::{default_contrast, default_lag_set, ContrastMatrix, Lag, LagSet};
