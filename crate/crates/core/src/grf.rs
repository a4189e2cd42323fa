//! Gaussian random fields with exponential covariance and geometric
//! anisotropy, simulated by dense Cholesky factorization.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{detect_grid, find_duplicate, Location, Rect, SpatialDataset};
use crate::distributions::RngStream;
use crate::error::{Error, Result};

/// Correlation level defining the effective range.
pub const EFFECTIVE_RANGE_CORRELATION: f64 = 0.05;

/// `C(h) = σ² exp(-φh)` for `h > 0` and `C(0) = τ² + σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialCovariance {
    pub sigma2: f64,
    pub tau2: f64,
    pub phi: f64,
}

impl ExponentialCovariance {
    pub fn new(sigma2: f64, tau2: f64, phi: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Domain(format!("partial sill must be positive, got {sigma2}")));
        }
        if !(tau2 >= 0.0 && tau2.is_finite()) {
            return Err(Error::Domain(format!("nugget must be nonnegative, got {tau2}")));
        }
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(Error::Domain(format!("decay rate must be positive, got {phi}")));
        }
        Ok(Self { sigma2, tau2, phi })
    }

    pub fn from_effective_range(xi: EffectiveRange, sigma2: f64, tau2: f64) -> Result<Self> {
        Self::new(sigma2, tau2, phi_from_effective_range(xi, sigma2, tau2)?)
    }

    pub fn sill(&self) -> f64 {
        self.tau2 + self.sigma2
    }

    pub fn covariance(&self, h: f64) -> f64 {
        if h > 0.0 {
            self.sigma2 * (-self.phi * h).exp()
        } else {
            self.sill()
        }
    }

    pub fn correlation(&self, h: f64) -> f64 {
        self.covariance(h) / self.sill()
    }

    pub fn semivariogram(&self, h: f64) -> f64 {
        self.sill() - self.covariance(h)
    }

    /// Distance at which the correlation equals 0.05.
    pub fn effective_range(&self) -> EffectiveRange {
        EffectiveRange(-(EFFECTIVE_RANGE_CORRELATION * self.sill() / self.sigma2).ln() / self.phi)
    }
}

/// Geometric anisotropy: axis ratio `R >= 1` and rotation angle `θ` (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyParams {
    pub ratio: f64,
    pub angle: f64,
}

impl AnisotropyParams {
    pub fn new(ratio: f64, angle: f64) -> Result<Self> {
        if !(ratio >= 1.0 && ratio.is_finite()) {
            return Err(Error::Domain(format!("anisotropy ratio must be >= 1, got {ratio}")));
        }
        if !angle.is_finite() {
            return Err(Error::Domain("anisotropy angle must be finite".into()));
        }
        Ok(Self { ratio, angle })
    }

    pub fn isotropic() -> Self {
        Self { ratio: 1.0, angle: 0.0 }
    }

    pub fn is_isotropic(&self) -> bool {
        self.ratio == 1.0
    }

    /// `(x, y) [[cos θ, sin θ], [-sin θ, cos θ]] diag(1, 1/R)`.
    pub fn transform(&self, loc: &Location) -> Location {
        let (s, c) = self.angle.sin_cos();
        let xr = loc.x * c - loc.y * s;
        let yr = loc.x * s + loc.y * c;
        Location::new(xr, yr / self.ratio)
    }

    /// Direction (radians from the x-axis, in `[0, π)`) of strongest
    /// correlation, i.e. the major axis of the equicorrelation ellipses.
    ///
    /// The transform shrinks the second rotated coordinate, so the major axis
    /// is the preimage of the y-axis: `π/2 - θ`.
    pub fn major_axis_angle(&self) -> f64 {
        (std::f64::consts::FRAC_PI_2 - self.angle).rem_euclid(std::f64::consts::PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EffectiveRange(pub f64);

pub fn phi_from_effective_range(xi: EffectiveRange, sigma2: f64, tau2: f64) -> Result<f64> {
    if !(xi.0 > 0.0 && xi.0.is_finite()) {
        return Err(Error::Domain(format!("effective range must be positive, got {}", xi.0)));
    }
    if !(sigma2 > 0.0) || !(tau2 >= 0.0) {
        return Err(Error::Domain("need sigma2 > 0 and tau2 >= 0".into()));
    }
    let ratio = EFFECTIVE_RANGE_CORRELATION * (tau2 + sigma2) / sigma2;
    if ratio >= 1.0 {
        return Err(Error::Domain(format!(
            "nugget {tau2} is too large: correlation never reaches {EFFECTIVE_RANGE_CORRELATION}"
        )));
    }
    Ok(-ratio.ln() / xi.0)
}

pub fn anisotropic_transform(
    locations: &[Location],
    aniso: &AnisotropyParams,
) -> Result<Vec<Location>> {
    if !(aniso.ratio >= 1.0) {
        return Err(Error::Domain(format!(
            "anisotropy ratio must be >= 1, got {}",
            aniso.ratio
        )));
    }
    Ok(locations.iter().map(|l| aniso.transform(l)).collect())
}

/// Entry `(i, j)` is `C(||s_i - s_j||)`.
pub fn covariance_matrix(locations: &[Location], cov: &ExponentialCovariance) -> DMatrix<f64> {
    let n = locations.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = cov.sill();
        for j in 0..i {
            let c = cov.covariance(locations[i].distance(&locations[j]));
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    m
}

/// `n` independent uniform points on `[0, width] x [0, height]`.
pub fn uniform_locations(n: usize, width: f64, height: f64, rng: &mut RngStream) -> Vec<Location> {
    (0..n)
        .map(|_| {
            let x: f64 = rng.random::<f64>() * width;
            let y: f64 = rng.random::<f64>() * height;
            Location::new(x, y)
        })
        .collect()
}

/// A factored covariance over a fixed set of locations; draws fields
/// repeatedly without refactoring.
#[derive(Debug, Clone)]
pub struct GrfSampler {
    template: SpatialDataset,
    factor: DMatrix<f64>,
    jitter: f64,
    warnings: Vec<String>,
}

impl GrfSampler {
    /// Factors `Σ = covariance_matrix(transform(locations))`. Values are
    /// attached to the original locations of `template`.
    pub fn new(
        template: SpatialDataset,
        cov: &ExponentialCovariance,
        aniso: Option<&AnisotropyParams>,
    ) -> Result<Self> {
        let mut warnings = Vec::new();
        let coords = match aniso {
            Some(a) => anisotropic_transform(template.locations(), a)?,
            None => template.locations().to_vec(),
        };
        if find_duplicate(&coords, 1e-9).is_some() {
            warnings.push("duplicate transformed locations: covariance matrix is degenerate".into());
        }
        let sigma = covariance_matrix(&coords, cov);
        let base = 1e-10 * cov.sill();
        let mut jitter = base;
        for _ in 0..4 {
            let mut m = sigma.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += jitter;
            }
            if let Some(chol) = m.cholesky() {
                if jitter > base {
                    warnings.push(format!("factorization needed diagonal jitter {jitter:e}"));
                }
                return Ok(Self { template, factor: chol.unpack(), jitter, warnings });
            }
            jitter *= 10.0;
        }
        Err(Error::Numerical(format!(
            "covariance matrix of {} locations is not positive definite after jitter {:e}",
            template.len(),
            jitter / 10.0
        )))
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Lower-triangular `L` with `L Lᵀ = Σ + jitter I`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn sample_values(&self, rng: &mut RngStream) -> Vec<f64> {
        let n = self.factor.nrows();
        let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        (&self.factor * z).iter().copied().collect()
    }

    pub fn sample(&self, rng: &mut RngStream) -> SpatialDataset {
        let values = self.sample_values(rng);
        self.template
            .with_values(values)
            .expect("factor dimension matches template")
    }
}

/// One draw from `MVN(0, Σ)` at `locations`, with `Σ` built from the
/// anisotropic coordinates and values placed at the original locations. A
/// lattice is attached when the locations form one.
pub fn simulate_grf(
    locations: &[Location],
    cov: &ExponentialCovariance,
    aniso: Option<&AnisotropyParams>,
    rng: &mut RngStream,
) -> Result<SpatialDataset> {
    let template = template_dataset(locations.to_vec(), None)?;
    Ok(GrfSampler::new(template, cov, aniso)?.sample(rng))
}

/// Zero-valued dataset at `locations`, with grid detection and an optional
/// declared domain.
pub fn template_dataset(locations: Vec<Location>, domain: Option<Rect>) -> Result<SpatialDataset> {
    let n = locations.len();
    let grid = detect_grid(&locations, 1e-9);
    let mut d = SpatialDataset::new(locations, vec![0.0; n])?;
    if let Some(g) = grid {
        d = d.with_grid(g)?;
    }
    if let Some(r) = domain {
        d = d.with_domain(r)?;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::dataset::GridSpec;

    #[test]
    fn phi_examples() {
        let phi6 = phi_from_effective_range(EffectiveRange(6.0), 1.0, 0.0).unwrap();
        assert!((phi6 - 20f64.ln() / 6.0).abs() < 1e-15);
        assert!((phi6 - 0.499289).abs() < 1e-6);
        let phi3 = phi_from_effective_range(EffectiveRange(3.0), 1.0, 0.0).unwrap();
        assert!((phi3 - 0.998577).abs() < 1e-6);
        for (xi, s2, t2) in [(6.0, 1.0, 0.0), (3.0, 2.0, 0.5), (12.0, 1.0, 3.0)] {
            let c = ExponentialCovariance::from_effective_range(EffectiveRange(xi), s2, t2).unwrap();
            assert!((c.effective_range().0 - xi).abs() < 1e-10);
            assert!((c.correlation(xi) - 0.05).abs() < 1e-12);
        }
        assert!(phi_from_effective_range(EffectiveRange(6.0), 1.0, 19.0).is_err());
        assert!(phi_from_effective_range(EffectiveRange(0.0), 1.0, 0.0).is_err());
    }

    #[test]
    fn transform_examples() {
        let a = AnisotropyParams::new(2.0, 0.0).unwrap();
        let t = a.transform(&Location::new(2.0, 2.0));
        assert_eq!((t.x, t.y), (2.0, 1.0));
        let b = AnisotropyParams::new(2.0, PI / 2.0).unwrap();
        let t = b.transform(&Location::new(1.0, 0.0));
        assert!(t.x.abs() < 1e-15 && (t.y - 0.5).abs() < 1e-15);
        assert!(anisotropic_transform(&[Location::new(0.0, 0.0)], &AnisotropyParams { ratio: 0.5, angle: 0.0 }).is_err());
        assert!(AnisotropyParams::new(0.9, 0.0).is_err());
    }

    #[test]
    fn unit_ratio_preserves_distances_and_theta_plus_pi_is_equivalent() {
        let pts: Vec<Location> = (0..12)
            .map(|i| Location::new((i as f64 * 1.7).sin() * 5.0, (i as f64 * 0.9).cos() * 3.0))
            .collect();
        let iso = anisotropic_transform(&pts, &AnisotropyParams::new(1.0, 1.234).unwrap()).unwrap();
        let a = anisotropic_transform(&pts, &AnisotropyParams::new(2.0, 0.7).unwrap()).unwrap();
        let b = anisotropic_transform(&pts, &AnisotropyParams::new(2.0, 0.7 + PI).unwrap()).unwrap();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                assert!((pts[i].distance(&pts[j]) - iso[i].distance(&iso[j])).abs() < 1e-12);
                assert!((a[i].distance(&a[j]) - b[i].distance(&b[j])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn covariance_matrix_examples() {
        let cov = ExponentialCovariance::new(1.0, 0.0, 1.0).unwrap();
        let m = covariance_matrix(&[Location::new(0.0, 0.0), Location::new(1.0, 0.0)], &cov);
        assert!((m[(0, 1)] - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
        let nug = ExponentialCovariance::new(1.0, 0.5, 1.0).unwrap();
        let m = covariance_matrix(&GridSpec::new(3, 3, 1.0).unwrap().locations(), &nug);
        assert!((0..9).all(|i| m[(i, i)] == 1.5));
        let one = covariance_matrix(&[Location::new(3.0, 4.0)], &nug);
        assert_eq!(one.shape(), (1, 1));
        assert_eq!(one[(0, 0)], 1.5);
    }

    #[test]
    fn factor_residual_is_small() {
        let cov = ExponentialCovariance::from_effective_range(EffectiveRange(12.0), 1.0, 0.0).unwrap();
        let g = GridSpec::new(18, 12, 1.0).unwrap();
        let template = SpatialDataset::on_grid(g, vec![0.0; g.len()]).unwrap();
        let s = GrfSampler::new(template, &cov, None).unwrap();
        let sigma = covariance_matrix(&g.locations(), &cov);
        let l = s.factor();
        let resid = (l * l.transpose() - sigma).amax();
        assert!(resid <= 1e-8, "residual {resid}");
    }

    #[test]
    fn simulation_is_deterministic() {
        let cov = ExponentialCovariance::from_effective_range(EffectiveRange(6.0), 1.0, 0.0).unwrap();
        let locs = GridSpec::new(6, 5, 1.0).unwrap().locations();
        let a = simulate_grf(&locs, &cov, None, &mut RngStream::new(9, 1)).unwrap();
        let b = simulate_grf(&locs, &cov, None, &mut RngStream::new(9, 1)).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.is_gridded());
        let iso = AnisotropyParams::new(1.0, 0.8).unwrap();
        let c = simulate_grf(&locs, &cov, Some(&iso), &mut RngStream::new(9, 1)).unwrap();
        // Rotation changes distances only at rounding level.
        for (x, y) in a.values().iter().zip(c.values()) {
            assert!((x - y).abs() < 1e-9);
        }
        let d = simulate_grf(&locs, &cov, None, &mut RngStream::new(9, 2)).unwrap();
        assert_ne!(a.values(), d.values());
    }

    #[test]
    fn identity_transform_gives_bit_identical_fields() {
        let cov = ExponentialCovariance::from_effective_range(EffectiveRange(6.0), 1.0, 0.0).unwrap();
        let locs = GridSpec::new(5, 4, 1.0).unwrap().locations();
        let a = simulate_grf(&locs, &cov, None, &mut RngStream::new(1, 1)).unwrap();
        let b = simulate_grf(&locs, &cov, Some(&AnisotropyParams::isotropic()), &mut RngStream::new(1, 1))
            .unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn pair_correlation_matches_model() {
        let cov = ExponentialCovariance::from_effective_range(EffectiveRange(6.0), 1.0, 0.0).unwrap();
        let template = template_dataset(vec![Location::new(0.0, 0.0), Location::new(1.0, 0.0)], None).unwrap();
        let s = GrfSampler::new(template, &cov, None).unwrap();
        let mut rng = RngStream::new(2024, 0);
        let draws: Vec<Vec<f64>> = (0..2000).map(|_| s.sample_values(&mut rng)).collect();
        let n = draws.len() as f64;
        let (ma, mb) = (
            draws.iter().map(|d| d[0]).sum::<f64>() / n,
            draws.iter().map(|d| d[1]).sum::<f64>() / n,
        );
        let sab: f64 = draws.iter().map(|d| (d[0] - ma) * (d[1] - mb)).sum();
        let saa: f64 = draws.iter().map(|d| (d[0] - ma).powi(2)).sum();
        let sbb: f64 = draws.iter().map(|d| (d[1] - mb).powi(2)).sum();
        let r = sab / (saa * sbb).sqrt();
        assert!((r - (-cov.phi).exp()).abs() < 0.05, "r = {r}");
    }

    #[test]
    fn large_field_variance_matches_sill() {
        let cov = ExponentialCovariance::from_effective_range(EffectiveRange(1.0), 1.0, 0.0).unwrap();
        let mut rng = RngStream::new(77, 0);
        let locs = uniform_locations(2000, 100.0, 100.0, &mut rng);
        let template = template_dataset(locs, None).unwrap();
        let s = GrfSampler::new(template, &cov, None).unwrap();
        let reps = 10;
        let mut total = 0.0;
        for _ in 0..reps {
            let v = s.sample_values(&mut rng);
            let m = v.iter().sum::<f64>() / v.len() as f64;
            total += v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        }
        let var = total / reps as f64;
        assert!((var - cov.sill()).abs() < 0.05 * cov.sill(), "variance {var}");
    }

    #[test]
    fn uniform_locations_in_rectangle() {
        let mut rng = RngStream::new(5, 5);
        let pts = uniform_locations(300, 16.0, 10.0, &mut rng);
        assert_eq!(pts.len(), 300);
        assert!(pts.iter().all(|p| (0.0..=16.0).contains(&p.x) && (0.0..=10.0).contains(&p.y)));
        let again = uniform_locations(300, 16.0, 10.0, &mut RngStream::new(5, 5));
        assert_eq!(pts, again);
        // 1.875 points per unit area on average: count in the left half
        let left = pts.iter().filter(|p| p.x < 8.0).count() as f64;
        assert!((left - 150.0).abs() < 3.0 * (300.0f64 * 0.25).sqrt());
    }
}
