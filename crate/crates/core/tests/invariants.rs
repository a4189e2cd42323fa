//! Property tests: oracles computed independently of the library code, and
//! invariances every test statistic must respect.

use std::f64::consts::PI;

use isotropy::estimators::{
    estimate_g, kernel_covariogram, kernel_semivariogram, Bandwidth, EstimatorConfig, KernelSpec,
};
use isotropy::grf::{simulate_grf, uniform_locations, AnisotropyParams, EffectiveRange, ExponentialCovariance};
use isotropy::io::{read_csv, write_csv};
use isotropy::resampling::{VarianceScaling, WindowSpec};
use isotropy::spatial_tests::{gsc_gridded_test, gsc_nongridded_test, ms_test, quadratic_form, PValueMode};
use isotropy::spectral::{periodogram, periodogram_direct};
use isotropy::{default_contrast, default_lag_set, ContrastMatrix, GridSpec, Lag, LagSet, Location, Rect, RngStream, SpatialDataset};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn model(xi: f64) -> ExponentialCovariance {
    ExponentialCovariance::from_effective_range(EffectiveRange(xi), 1.0, 0.0).unwrap()
}

fn scattered(n: usize, width: f64, height: f64, seed: u64) -> SpatialDataset {
    let mut rng = RngStream::new(seed, 0);
    let locs = uniform_locations(n, width, height, &mut rng);
    simulate_grf(&locs, &model(4.0), Some(&AnisotropyParams::new(1.5, 0.3).unwrap()), &mut rng)
        .unwrap()
        .with_domain(Rect::new(0.0, 0.0, width, height).unwrap())
        .unwrap()
}

fn gridded(n_cols: usize, n_rows: usize, seed: u64) -> SpatialDataset {
    let g = GridSpec::new(n_cols, n_rows, 1.0).unwrap();
    simulate_grf(&g.locations(), &model(5.0), Some(&AnisotropyParams::new(2.0, 0.7).unwrap()), &mut RngStream::new(seed, 0))
        .unwrap()
}

/// Nadaraya–Watson over every ordered pair, written out longhand.
fn brute_kernel(d: &SpatialDataset, lag: Lag, kernel: KernelSpec, w: f64, covariogram: bool) -> f64 {
    let l = d.locations();
    let y = d.values();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..l.len() {
        for j in 0..l.len() {
            if i == j && !(covariogram && lag.is_zero()) {
                continue;
            }
            let kx = kernel.weight((l[j].x - l[i].x - lag.dx) / w);
            let ky = kernel.weight((l[j].y - l[i].y - lag.dy) / w);
            let term = if covariogram { (y[i] - mean) * (y[j] - mean) } else { 0.5 * (y[i] - y[j]).powi(2) };
            num += kx * ky * term;
            den += kx * ky;
        }
    }
    num / den
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn kernel_estimators_match_brute_force(
        seed in 0u64..1000,
        n in 10usize..50,
        dx in -1.5f64..1.5,
        dy in 0.0f64..1.5,
        w in 0.3f64..1.2,
        epanechnikov in any::<bool>(),
    ) {
        let mut rng = RngStream::new(seed, 1);
        let locs = uniform_locations(n, 5.0, 4.0, &mut rng);
        let vals: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
        let d = SpatialDataset::new(locs, vals).unwrap();
        let kernel = if epanechnikov { KernelSpec::Epanechnikov } else { KernelSpec::default() };
        let lag = Lag::new(dx, dy);
        let bw = Bandwidth::new(w).unwrap();
        let oracle = brute_kernel(&d, lag, kernel, w, false);
        match kernel_semivariogram(&d, lag, kernel, bw) {
            Ok(v) => prop_assert!(close(v, oracle, 1e-10), "{v} vs {oracle}"),
            Err(_) => prop_assert!(oracle.is_nan()),
        }
        let oracle = brute_kernel(&d, lag, kernel, w, true);
        match kernel_covariogram(&d, lag, kernel, bw) {
            Ok(v) => prop_assert!(close(v, oracle, 1e-10), "{v} vs {oracle}"),
            Err(_) => prop_assert!(oracle.is_nan()),
        }
        let zero = brute_kernel(&d, Lag::new(0.0, 0.0), kernel, w, true);
        prop_assert!(close(kernel_covariogram(&d, Lag::new(0.0, 0.0), kernel, bw).unwrap(), zero, 1e-10));
    }

    #[test]
    fn periodogram_fft_matches_direct_sum(seed in 0u64..1000, n1 in 2usize..13, n2 in 2usize..13) {
        let mut rng = RngStream::new(seed, 2);
        let g = GridSpec::new(n1, n2, 1.0).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|_| rng.random::<f64>() - 0.5).collect();
        let d = SpatialDataset::on_grid(g, vals.clone()).unwrap();
        let p = periodogram(&d).unwrap();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let ss: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum();
        let mut total = 0.0;
        for k2 in 0..n2 as i64 {
            for k1 in 0..n1 as i64 {
                let w1 = 2.0 * PI * k1 as f64 / n1 as f64;
                let w2 = 2.0 * PI * k2 as f64 / n2 as f64;
                let direct = periodogram_direct(&d, w1, w2).unwrap();
                prop_assert!((p.at(k1, k2) - direct).abs() < 1e-8);
                prop_assert!((p.at(k1, k2) - p.at(-k1, -k2)).abs() < 1e-10);
                total += p.at(k1, k2);
            }
        }
        prop_assert!((total * (2.0 * PI).powi(2) - ss).abs() < 1e-8);
    }

    #[test]
    fn quadratic_form_ignores_contrast_basis_and_scale(
        seed in 0u64..1000,
        c in prop_oneof![1e-3f64..1e-1, 1e1f64..1e3],
        m11 in 0.5f64..2.0, m12 in -1.0f64..1.0, m21 in -1.0f64..1.0,
    ) {
        let mut rng = RngStream::new(seed, 3);
        let g: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let b = DMatrix::from_fn(4, 4, |_, _| rng.random::<f64>() - 0.5);
        let sigma = &b * b.transpose() + DMatrix::identity(4, 4) * 0.1;
        let a = default_contrast(&default_lag_set(1.0)).unwrap();
        let t = quadratic_form(&g, &a, &sigma).unwrap().value;
        // values scaled by c: estimates by c², variance by c⁴
        let gs: Vec<f64> = g.iter().map(|v| v * c * c).collect();
        let ts = quadratic_form(&gs, &a, &(&sigma * c.powi(4))).unwrap().value;
        prop_assert!(close(t, ts, 1e-8));
        // any invertible recombination of the contrast rows tests the same hypothesis
        let m = DMatrix::from_row_slice(2, 2, &[m11, m12, m21, 1.5]);
        prop_assume!(m.determinant().abs() > 0.1);
        let am = ContrastMatrix::new(&m * a.matrix()).unwrap();
        prop_assert!(close(t, quadratic_form(&g, &am, &sigma).unwrap().value, 1e-8));
    }

    #[test]
    fn csv_round_trip(seed in 0u64..1000, n in 2usize..40) {
        let mut rng = RngStream::new(seed, 4);
        let locs: Vec<Location> = (0..n).map(|_| Location::new(rng.random::<f64>() * 1e3 - 500.0, rng.random::<f64>() * 1e-2)).collect();
        let vals: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() - 0.5) * 1e6).collect();
        let d = SpatialDataset::new(locs, vals).unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap().dataset;
        prop_assert_eq!(back.locations(), d.locations());
        prop_assert_eq!(back.values(), d.values());
    }
}

fn rescaled(d: &SpatialDataset, c: f64, shift: f64) -> SpatialDataset {
    d.with_values(d.values().iter().map(|v| c * v + shift).collect()).unwrap()
}

#[test]
fn every_test_is_scale_invariant() {
    let lags = default_lag_set(1.0);
    let a = default_contrast(&lags).unwrap();
    let grid = gridded(14, 10, 1);
    let w = WindowSpec::new(3.0, 2.0).unwrap();
    let s = scattered(250, 14.0, 10.0, 2);
    let win = WindowSpec::new(4.0, 2.0).unwrap().with_step(1.0).unwrap();
    let block = WindowSpec::new(4.0, 2.0).unwrap();
    for c in [1e-3, 0.37, 25.0, 1e4] {
        for mode in [PValueMode::FiniteSample, PValueMode::AsymptoticChi2] {
            for scaling in [VarianceScaling::Area, VarianceScaling::PairCount] {
                let base = gsc_gridded_test(&grid, &lags, &a, &w, scaling, mode).unwrap();
                let r = gsc_gridded_test(&rescaled(&grid, c, 0.0), &lags, &a, &w, scaling, mode).unwrap();
                assert!(close(base.statistic, r.statistic, 1e-8));
                assert!((base.p_value - r.p_value).abs() < 1e-8);

                let bw = Bandwidth::new(0.75).unwrap();
                let k = KernelSpec::default();
                let base = gsc_nongridded_test(&s, &lags, &a, k, bw, &win, scaling, Some(mode)).unwrap();
                let r = gsc_nongridded_test(&rescaled(&s, c, 0.0), &lags, &a, k, bw, &win, scaling, Some(mode)).unwrap();
                assert!(close(base.statistic, r.statistic, 1e-8));
                assert!((base.p_value - r.p_value).abs() < 1e-8);
            }
        }
        let rng = RngStream::new(9, 0);
        let base = ms_test(&s, &lags, &a, &block, 30, 1.0, &rng).unwrap();
        let r = ms_test(&rescaled(&s, c, 0.0), &lags, &a, &block, 30, 1.0, &rng).unwrap();
        assert!(close(base.statistic, r.statistic, 1e-8));
        assert!((base.p_value - r.p_value).abs() < 1e-8);
    }
}

#[test]
fn semivariogram_tests_ignore_shifts() {
    let lags = default_lag_set(1.0);
    let a = default_contrast(&lags).unwrap();
    let grid = gridded(12, 12, 3);
    let w = WindowSpec::new(2.0, 2.0).unwrap();
    // shifts by powers of two keep the pairwise differences bit-identical
    // for values of moderate size
    for shift in [-4.0, 8.0, 0.5] {
        let base = gsc_gridded_test(&grid, &lags, &a, &w, VarianceScaling::PairCount, PValueMode::FiniteSample).unwrap();
        let r = gsc_gridded_test(&rescaled(&grid, 1.0, shift), &lags, &a, &w, VarianceScaling::PairCount, PValueMode::FiniteSample)
            .unwrap();
        assert!(close(base.statistic, r.statistic, 1e-12), "{} vs {}", base.statistic, r.statistic);
        assert_eq!(base.p_value, r.p_value);
    }
    // the MS covariogram centres the data, so shifts drop out there too
    let s = scattered(200, 12.0, 8.0, 4);
    let block = WindowSpec::new(4.0, 2.0).unwrap();
    let rng = RngStream::new(1, 0);
    let base = ms_test(&s, &lags, &a, &block, 30, 1.0, &rng).unwrap();
    let r = ms_test(&rescaled(&s, 1.0, 3.0), &lags, &a, &block, 30, 1.0, &rng).unwrap();
    assert!(close(base.statistic, r.statistic, 1e-8));
}

#[test]
fn gridded_test_is_equivariant_under_quarter_turns() {
    let (n_cols, n_rows) = (15, 11);
    let d = gridded(n_cols, n_rows, 5);
    // (x, y) -> (n_rows - 1 - y, x): a quarter turn mapped back onto the positive quadrant
    let rot_grid = GridSpec::new(n_rows, n_cols, 1.0).unwrap();
    let mut rot_vals = vec![0.0; d.len()];
    for (loc, &v) in d.locations().iter().zip(d.values()) {
        let (c, r) = ((n_rows - 1) as f64 - loc.y, loc.x);
        rot_vals[r as usize * n_rows + c as usize] = v;
    }
    let rotated = SpatialDataset::on_grid(rot_grid, rot_vals).unwrap();

    let lags = default_lag_set(1.0);
    let a = default_contrast(&lags).unwrap();
    // images of (1,0), (0,1), (1,1), (-1,1) under the turn, up to sign
    let turned = LagSet::new(vec![Lag::new(0.0, 1.0), Lag::new(1.0, 0.0), Lag::new(-1.0, 1.0), Lag::new(1.0, 1.0)]).unwrap();
    for mode in [PValueMode::FiniteSample, PValueMode::AsymptoticChi2] {
        let base = gsc_gridded_test(&d, &lags, &a, &WindowSpec::new(3.0, 2.0).unwrap(), VarianceScaling::PairCount, mode).unwrap();
        let r = gsc_gridded_test(&rotated, &turned, &a, &WindowSpec::new(2.0, 3.0).unwrap(), VarianceScaling::PairCount, mode)
            .unwrap();
        assert!(close(base.statistic, r.statistic, 1e-8), "{} vs {}", base.statistic, r.statistic);
        assert!((base.p_value - r.p_value).abs() < 1e-12);
        assert_eq!(base.diagnostics.n_usable, r.diagnostics.n_usable);
    }
    let e1 = estimate_g(&d, &lags, &EstimatorConfig::Classical).unwrap();
    let e2 = estimate_g(&rotated, &turned, &EstimatorConfig::Classical).unwrap();
    for (x, y) in e1.values.iter().zip(&e2.values) {
        assert!(close(*x, *y, 1e-12));
    }
}

#[test]
fn permuting_rows_changes_nothing() {
    let s = scattered(220, 12.0, 8.0, 6);
    let n = s.len();
    let order: Vec<usize> = (0..n).map(|i| (i * 97 + 13) % n).collect();
    let p = s.subset(&order).with_domain(s.domain()).unwrap();
    let lags = default_lag_set(1.0);
    let a = default_contrast(&lags).unwrap();
    let win = WindowSpec::new(4.0, 2.0).unwrap().with_step(1.0).unwrap();
    let bw = Bandwidth::new(0.75).unwrap();
    let k = KernelSpec::default();
    let r1 = gsc_nongridded_test(&s, &lags, &a, k, bw, &win, VarianceScaling::Area, None).unwrap();
    let r2 = gsc_nongridded_test(&p, &lags, &a, k, bw, &win, VarianceScaling::Area, None).unwrap();
    assert!(close(r1.statistic, r2.statistic, 1e-10), "{} vs {}", r1.statistic, r2.statistic);
    assert!((r1.p_value - r2.p_value).abs() < 1e-10);
}
