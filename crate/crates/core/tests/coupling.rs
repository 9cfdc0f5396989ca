mod common;

use std::f64::consts::PI;

use common::c;
use lrsphp::coupling::*;
use num_complex::Complex64;

/// Closed-form two-mode propagator for a uniform grating.
fn closed_form(g: f64, delta: f64, length: f64) -> (Complex64, Complex64) {
    let omega = (g * g + delta * delta / 4.0).sqrt();
    let (s, co) = (omega * length).sin_cos();
    let sinc_l = if omega == 0.0 { length } else { s / omega };
    (c(co, delta / 2.0 * sinc_l), c(g * sinc_l, 0.0))
}

#[test]
fn integrator_matches_closed_form_lattice() {
    let length = 100.0;
    let mut worst: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for i in 0..10 {
        let gl = 0.1 + 0.35 * i as f64;
        for j in 0..10 {
            let dl = -20.0 + 40.0 * j as f64 / 9.0;
            let spec = CouplerSpec::new(10.0, 1, length, 0.3, gl / length).unwrap();
            let dbeta = dl / length + grating_vector(&spec);
            let r = propagate_coupled_modes(&spec, dbeta).unwrap();
            let (t, k) = closed_form(gl / length, r.detuning, length);
            worst = worst.max((r.t - t).norm()).max((r.kappa - k).norm());
            worst_norm = worst_norm.max((r.t.norm_sqr() + r.kappa.norm_sqr() - 1.0).abs());
        }
    }
    assert!(worst < 1e-8, "{worst}");
    assert!(worst_norm < 1e-10, "{worst_norm}");
}

#[test]
fn quarter_and_half_wave_couplers() {
    for (gl, eff) in [(PI / 2.0, 1.0), (PI / 4.0, 0.5)] {
        let spec = CouplerSpec::phase_matched(0.1, 1, 100.0, 0.3, gl).unwrap();
        let r = propagate_coupled_modes(&spec, 2.0 * PI * 0.1).unwrap();
        assert!((r.efficiency() - eff).abs() < 1e-10);
    }
}

#[test]
fn overlap_window_zeros_and_symmetry() {
    let z = 100.0;
    let axis: Vec<f64> = (-30..=30).map(|n| n as f64 * 2.0 * PI / z / 10.0).collect();
    let surface = overlap_surface(&axis, &axis, z, z);
    let n = axis.len();
    let centre = surface[(n / 2) * n + n / 2];
    assert_eq!((centre.0, centre.1), (0.0, 0.0));
    assert!((centre.2 - 1.0).abs() < 1e-12);
    for i in 0..n {
        for j in 0..n {
            assert!((surface[i * n + j].2 - surface[j * n + i].2).abs() < 1e-12);
        }
    }
    for k in 1..=3 {
        let zero = 2.0 * PI * k as f64 / z;
        for other in [0.0, 0.01, -0.03] {
            assert!(overlap_c(c(1.0, 0.0), zero, other, z, z).norm() / (z * z) < 1e-12);
            assert!(overlap_c(c(1.0, 0.0), other, -zero, z, z).norm() / (z * z) < 1e-12);
        }
    }
}

#[test]
fn zero_grating_strength_is_dark() {
    let model = |_: f64| Ok(c(1.2, 0.001));
    let spec = CouplerSpec::new(10.0, 1, 100.0, 0.3, 0.0).unwrap();
    let grid = wavelength_grid(10.0, 11.0, 21);
    let s = efficiency_spectrum(&model, &spec, &grid).unwrap();
    assert!(s.iter().all(|p| p.efficiency == Some(0.0)));
    assert!(dominant_peaks(&s, 0.5).is_empty());
}

#[test]
fn level_crossings_bracket_independent_b() {
    // linear index model: B is monotone and the crossing is known exactly
    let model = |omega: f64| Ok(c(1.3 + 1e-3 * (omega - 900.0), 0.0));
    let theta = PI / 9.0;
    let grid = wavelength_grid(10.0, 12.0, 401);
    let roots = level_crossings(&model, theta, 0.1, &grid);
    assert_eq!(roots.len(), 1);
    let lam = roots[0];
    let n = 1.3 + 1e-3 * (1e4 / lam - 900.0);
    assert!(((n - theta.sin()) / lam - 0.1).abs() < 1e-10);
}

#[test]
fn invalid_specs_rejected() {
    assert!(CouplerSpec::new(0.0, 1, 100.0, 0.3, 0.01).is_err());
    assert!(CouplerSpec::new(10.0, 1, -1.0, 0.3, 0.01).is_err());
    assert!(CouplerSpec::new(10.0, 1, 100.0, 2.0, 0.01).is_err());
    assert!(CouplerSpec::new(10.0, 1, 100.0, 0.3, -0.01).is_err());
    assert!(CouplerSpec::phase_matched(0.0, 1, 100.0, 0.3, 1.0).is_err());
}
