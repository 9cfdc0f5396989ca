mod common;

use common::{c, composite, composite_points};
use lrsphp::dispersion::{long_range_beta, slab_beta, Branch, GuidedMode};
use lrsphp::modes::*;
use lrsphp::units::{free_space_k, UM};
use lrsphp::MaterialParams;
use num_complex::Complex64;

fn sic() -> MaterialParams {
    MaterialParams::silicon_carbide()
}

/// ∫ |Ψ|²/ε dx over the whole line, tails cut at 60 decay lengths.
fn brute_flux(p: &ModeProfile) -> Complex64 {
    let m = &p.mode;
    let h = m.thickness;
    let tail = 60.0 / m.alpha_d.re;
    let g = p.geometry();
    let f = |x: f64| {
        let (fx, fz) = p.field(x);
        (fx.norm_sqr() + fz.norm_sqr()) / g.eps_at(x)
    };
    composite(f, -h - tail, -h, 200, 20) + composite(f, -h, 0.0, 200, 20) + composite(f, 0.0, tail, 200, 20)
}

fn lattice() -> Vec<GuidedMode> {
    let mut out = Vec::new();
    for omega in [820.0, 870.0, 900.0, 925.0, 940.0] {
        for h in [0.5, 1.0, 2.0, 5.0] {
            out.push(long_range_beta(&sic(), c(1.0, 0.0), h * UM, omega).unwrap());
        }
    }
    out
}

#[test]
fn flux_normalization_agrees_with_independent_quadrature() {
    for m in lattice() {
        let p = normalize_flux(&build_profile(&m)).unwrap();
        let j = brute_flux(&p);
        let power = m.beta / (2.0 * m.k0() * p.gamma_k * p.gamma_k) * j;
        assert!(
            (power - 1.0).norm() < 1e-9,
            "omega {} h {}: P = {power}",
            m.omega,
            m.thickness
        );
    }
}

#[test]
fn boundary_residuals_vanish_on_lattice() {
    for m in lattice() {
        let r = build_profile(&m).boundary_residual();
        assert!(r < 1e-9, "omega {} h {}: {r}", m.omega, m.thickness);
    }
}

#[test]
fn antisymmetric_profile_is_continuous() {
    let m = slab_beta(&sic(), c(1.0, 0.0), 1.0 * UM, 900.0, Branch::SlabAntisymmetric).unwrap();
    let p = build_profile(&m);
    assert!(p.boundary_residual() < 1e-9);
    let h = m.thickness;
    let eps = 1e-9 * UM;
    let (_, inside) = p.field(-h + eps);
    let (_, outside) = p.field(-h - eps);
    assert!((inside - outside).norm() < 1e-6 * inside.norm());
}

#[test]
fn analytic_tail_matches_brute_force() {
    let m = slab_beta(&sic(), c(1.0, 0.0), 1.0 * UM, 900.0, Branch::SlabSymmetric).unwrap();
    let p = build_profile(&m);
    let closed = ((m.beta / m.alpha_d).norm_sqr() + 1.0) / (2.0 * m.alpha_d.re) / m.eps_d;
    let tail = 60.0 / m.alpha_d.re;
    let brute = composite(
        |x| {
            let (fx, fz) = p.field(x);
            (fx.norm_sqr() + fz.norm_sqr()) / m.eps_d
        },
        0.0,
        tail,
        400,
        20,
    );
    assert!((brute - closed).norm() < 1e-8 * closed.norm());
}

#[test]
fn single_interface_flux_matches_brute_force() {
    let m = lrsphp::dispersion::single_interface_beta(&sic(), c(1.0, 0.0), 900.0).unwrap();
    let p = build_profile(&m);
    let g = p.geometry();
    let f = |x: f64| {
        let (fx, fz) = p.field(x);
        (fx.norm_sqr() + fz.norm_sqr()) / g.eps_at(x)
    };
    let brute = composite(f, -60.0 / m.alpha_c.re, 0.0, 400, 20) + composite(f, 0.0, 60.0 / m.alpha_d.re, 400, 20);
    let j = p.flux_integral(&Default::default()).unwrap();
    assert!((brute - j).norm() < 1e-8 * j.norm());
}

fn photon(mode: &GuidedMode, theta: f64, extra: f64) -> PhotonProfile {
    let k0 = mode.k0();
    let bc = PhotonBoundary {
        omega: mode.omega,
        theta,
        grating_vector: mode.beta.re - k0 * theta.sin() + extra,
        amplitude: c(1.0, 0.0),
        transmission: c(0.8, 0.1),
        geometry: SlabGeometry::of_mode(mode),
    };
    build_photon_profile(&bc).unwrap()
}

#[test]
fn overlap_double_integral_factorizes() {
    let m1 = slab_beta(&sic(), c(1.0, 0.0), 2.0 * UM, 900.0, Branch::SlabSymmetric).unwrap();
    let m2 = slab_beta(&sic(), c(1.0, 0.0), 2.0 * UM, 930.0, Branch::SlabSymmetric).unwrap();
    let p1 = normalize_flux(&build_profile(&m1)).unwrap();
    let p2 = normalize_flux(&build_profile(&m2)).unwrap();
    let g1 = normalize_photon_flux(&photon(&m1, 0.35, 300.0)).unwrap();
    let g2 = normalize_photon_flux(&photon(&m2, 0.35, -200.0)).unwrap();
    let fast = overlap_integral(&p1, &p2, &g1, &g2).unwrap();

    let h = m1.thickness;
    let points = |m: &GuidedMode, g: &PhotonProfile| {
        let tail = 60.0 / m.alpha_d.re.min(g.alpha_d.re);
        let mut pts = composite_points(-h - tail, -h, 60, 16);
        pts.extend(composite_points(-h, 0.0, 60, 16));
        pts
    };
    let pts1 = points(&m1, &g1);
    let pts2 = points(&m2, &g2);
    let (geo1, geo2) = (p1.geometry(), p2.geometry());
    let mut brute = c(0.0, 0.0);
    for &(x1, w1) in &pts1 {
        let a = geo1.eps_at(x1) * p1.normalized_field(x1).1.conj() * g1.normalized_field(x1);
        for &(x2, w2) in &pts2 {
            let b = geo2.eps_at(x2) * p2.normalized_field(x2).1.conj() * g2.normalized_field(x2);
            brute += w1 * w2 * a * b;
        }
    }
    assert!((brute - fast).norm() < 1e-9 * fast.norm(), "{brute} vs {fast}");
}

#[test]
fn photon_profile_satisfies_boundary_conditions() {
    for h in [0.5, 2.0, 10.0] {
        let m = slab_beta(&sic(), c(1.0, 0.0), h * UM, 910.0, Branch::SlabSymmetric).unwrap();
        let g = photon(&m, 0.2, 150.0);
        assert!(g.boundary_residual() < 1e-12, "h {h}: {}", g.boundary_residual());
        let bc = g.boundary();
        assert!((g.field(-1e-12 * UM) - bc.transmission * bc.amplitude).norm() < 1e-9);
    }
}

#[test]
fn thick_film_kills_growing_photon_term() {
    let mut last = f64::INFINITY;
    for h in [1.0, 5.0, 20.0, 100.0] {
        let m = slab_beta(&sic(), c(1.0, 0.0), h * UM, 910.0, Branch::SlabSymmetric).unwrap();
        let g = photon(&m, 0.2, 150.0);
        let ratio = g.lambdas[0].norm() / g.lambdas[1].norm();
        assert!(ratio < last);
        last = ratio;
    }
    assert!(last < 1e-12);
}

#[test]
fn hamiltonian_coefficients_ignore_profile_scale() {
    let m1 = slab_beta(&sic(), c(1.0, 0.0), 2.0 * UM, 900.0, Branch::SlabSymmetric).unwrap();
    let m2 = slab_beta(&sic(), c(1.0, 0.0), 2.0 * UM, 930.0, Branch::SlabSymmetric).unwrap();
    let (p1, p2) = (build_profile(&m1), build_profile(&m2));
    let (g1, g2) = (photon(&m1, 0.3, 100.0), photon(&m2, 0.3, 100.0));
    let a = hamiltonian_coefficients(&p1, &p2, &g1, &g2, DEFAULT_SCALE).unwrap();
    let b = hamiltonian_coefficients(&p1.scaled(c(3.0, -2.0)), &p2, &g1, &g2, DEFAULT_SCALE).unwrap();
    assert!((a.i_polariton - b.i_polariton).norm() < 1e-9 * a.i_polariton.norm());
    let s = DEFAULT_SCALE / 4.0 * (m1.k0() * m2.k0()).sqrt() * (free_space_k(900.0) * free_space_k(930.0)).sqrt();
    assert!((a.s.re - s).abs() < 1e-12 * s);
}

