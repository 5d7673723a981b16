//! Transfer-function spectra against values frozen from an independent
//! (numpy/scipy) summation and eigendecomposition of the same plans.

use num_complex::Complex64;
use tomo_core::*;

fn scan_plan() -> Vec<Setting> {
    let gre = [-0.2, -0.1, 0.0, 0.1, 0.2];
    let gim = [0.1, -0.5, 0.0, 0.5, 0.1];
    let mut settings = Vec::new();
    for (re, im) in gre.iter().zip(&gim) {
        for i in 0..20 {
            let nu = 0.1 + 0.8 * i as f64 / 19.0;
            settings.push(Setting::new(nu, Complex64::new(*re, *im), 100_000).unwrap());
        }
    }
    settings
}

fn gamma_line(lo: f64, hi: f64, points: usize, effs: usize) -> Vec<Setting> {
    let mut settings = Vec::new();
    for p in 0..points {
        let g = lo + (hi - lo) * p as f64 / (points - 1) as f64;
        for i in 0..effs {
            let nu = 0.1 + 0.8 * i as f64 / (effs - 1) as f64;
            settings.push(Setting::new(nu, Complex64::new(g, 0.0), 0).unwrap());
        }
    }
    settings
}

#[test]
fn scan_plan_padded_spectrum_matches_golden() {
    let golden = [
        9.434320549027e+01,
        5.105145267680e+01,
        3.198864690712e+01,
        2.206628592893e+01,
        1.619023077873e+01,
    ];
    let policy = DimensionPolicy::padded(5, 0.51).unwrap();
    let tf = build_transfer_function(&scan_plan(), &policy, 1e-6).unwrap();
    for (ev, g) in tf.eigenvalues().iter().zip(&golden) {
        assert!((ev - g).abs() <= 1e-9 * g, "{ev} vs {g}");
    }
    assert_eq!(tf.kept_count(), 5);
}

#[test]
fn scan_plan_truncated_spectrum_matches_golden() {
    let golden = [
        9.434294771406e+01,
        5.104291469134e+01,
        3.187091017383e+01,
        2.118089303641e+01,
        1.292306743195e+01,
    ];
    let policy = DimensionPolicy::truncated(5).unwrap();
    let tf = build_transfer_function(&scan_plan(), &policy, 1e-6).unwrap();
    for (ev, g) in tf.eigenvalues().iter().zip(&golden) {
        assert!((ev - g).abs() <= 1e-9 * g, "{ev} vs {g}");
    }
}

#[test]
fn scan_plan_spectrum_is_well_spread() {
    // All five eigenvalues within three orders of magnitude of the largest.
    let policy = DimensionPolicy::padded(5, 0.51).unwrap();
    let tf = build_transfer_function(&scan_plan(), &policy, 1e-6).unwrap();
    let ratios = tf.eigenvalue_ratios();
    assert!(ratios.iter().all(|r| *r >= 1e-3), "{ratios:?}");
}

#[test]
fn narrow_gamma_cluster_collapses_spectrum() {
    let policy = DimensionPolicy::truncated(15).unwrap();
    let tf = build_transfer_function(&gamma_line(1.0, 1.01, 10, 10), &policy, 1e-12).unwrap();
    let ratio = tf.eigenvalues().last().unwrap() / tf.eigenvalues()[0];
    let golden = 1.293234275e-6;
    assert!((ratio - golden).abs() <= 1e-6 * golden, "{ratio:.6e} vs {golden:.6e}");
}

#[test]
fn wide_gamma_line_keeps_spectrum_flat() {
    let policy = DimensionPolicy::truncated(15).unwrap();
    let tf = build_transfer_function(&gamma_line(-1.0, 1.0, 10, 10), &policy, 1e-12).unwrap();
    let ratio = tf.eigenvalues().last().unwrap() / tf.eigenvalues()[0];
    let golden = 2.749176188e-2;
    assert!((ratio - golden).abs() <= 1e-6 * golden, "{ratio:.6e} vs {golden:.6e}");
}
