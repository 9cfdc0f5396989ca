//! Surface and thin-film phonon-polariton dispersion.
//!
//! Geometry: the polar film occupies −h ≤ x ≤ 0 with the same cladding ε_d
//! on both sides; a single interface is the h → ∞ limit. Propagation is along
//! z with constant β (rad/cm), and α_q = √(β² − k₀²ε_q) is the transverse
//! decay constant in region q, taken on the branch with Re α_q > 0.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::material::{permittivity, MaterialError, MaterialParams};
use crate::roots::{newton, NewtonOptions};
use crate::units::free_space_k;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error(transparent)]
    Material(#[from] MaterialError),

    #[error("surface-resonance pole at omega = {omega_cm1} cm^-1 (eps_c + eps_d = 0)")]
    Pole { omega_cm1: f64 },

    #[error("no bound mode at omega = {omega_cm1} cm^-1: {reason}")]
    NoMode { omega_cm1: f64, reason: String },

    #[error("dispersion solve did not converge at omega = {omega_cm1} cm^-1 after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        omega_cm1: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("film thickness must be positive and finite, got {0} cm")]
    InvalidThickness(f64),

    #[error("branch {0:?} is not a slab branch")]
    NotASlabBranch(Branch),

    #[error("frequency grid must be strictly increasing")]
    UnorderedGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    SingleInterface,
    /// H_y even about the film midplane: tanh(α_c h/2) = −ε_c α_d / (ε_d α_c).
    SlabSymmetric,
    /// H_y odd about the film midplane: coth(α_c h/2) = −ε_c α_d / (ε_d α_c).
    SlabAntisymmetric,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::SingleInterface => "single",
            Branch::SlabSymmetric => "symmetric",
            Branch::SlabAntisymmetric => "antisymmetric",
        }
    }
}

/// A solved guided mode at one wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidedMode {
    /// cm⁻¹
    pub omega: f64,
    /// rad/cm
    pub beta: Complex64,
    pub alpha_d: Complex64,
    pub alpha_c: Complex64,
    pub eps_d: Complex64,
    pub eps_c: Complex64,
    /// cm; `f64::INFINITY` for a single interface.
    pub thickness: f64,
    pub branch: Branch,
    pub n_eff: Complex64,
}

impl GuidedMode {
    pub fn k0(&self) -> f64 {
        free_space_k(self.omega)
    }

    /// max over both regions of |α_q² − (β² − k₀²ε_q)| / |β²|.
    pub fn decay_relation_residual(&self) -> f64 {
        let k0 = self.k0();
        let b2 = self.beta * self.beta;
        let rd = self.alpha_d * self.alpha_d - (b2 - k0 * k0 * self.eps_d);
        let rc = self.alpha_c * self.alpha_c - (b2 - k0 * k0 * self.eps_c);
        rd.norm().max(rc.norm()) / b2.norm()
    }

    /// Relative residual of this mode's characteristic equation.
    pub fn characteristic_residual(&self) -> f64 {
        match self.branch {
            Branch::SingleInterface => {
                let a = self.alpha_d * self.eps_c;
                let b = self.alpha_c * self.eps_d;
                (a + b).norm() / (a.norm() + b.norm())
            }
            Branch::SlabSymmetric | Branch::SlabAntisymmetric => slab_characteristic(
                self.branch,
                self.eps_c,
                self.eps_d,
                self.alpha_c,
                self.alpha_d,
                self.thickness,
            )
            .norm(),
        }
    }
}

/// Principal square root, sign-corrected to Re ≥ 0.
pub fn decay_constant(beta: Complex64, k0: f64, eps: Complex64) -> Complex64 {
    let a = (beta * beta - k0 * k0 * eps).sqrt();
    if a.re < 0.0 {
        -a
    } else {
        a
    }
}

/// tanh that stays finite for large |Re z|.
pub fn stable_tanh(z: Complex64) -> Complex64 {
    if z.re >= 0.0 {
        let e = (-2.0 * z).exp();
        (1.0 - e) / (1.0 + e)
    } else {
        -stable_tanh(-z)
    }
}

fn slab_characteristic(
    branch: Branch,
    eps_c: Complex64,
    eps_d: Complex64,
    alpha_c: Complex64,
    alpha_d: Complex64,
    thickness: f64,
) -> Complex64 {
    let t = stable_tanh(alpha_c * thickness / 2.0);
    let dc = eps_d * alpha_c;
    let cd = eps_c * alpha_d;
    let scale = dc.norm() + cd.norm();
    match branch {
        Branch::SlabSymmetric => (dc * t + cd) / scale,
        _ => (cd * t + dc) / scale,
    }
}

/// The lossy closed-form single-interface propagation constant, unvalidated.
fn interface_closed_form(k0: f64, eps_c: Complex64, eps_d: Complex64) -> Option<Complex64> {
    let sum = eps_c + eps_d;
    if sum.norm() <= 1e-14 * (eps_c.norm() + eps_d.norm()) {
        return None;
    }
    let beta = k0 * (eps_d * eps_c / sum).sqrt();
    Some(if beta.re < 0.0 { -beta } else { beta })
}

fn assemble(
    omega: f64,
    beta: Complex64,
    eps_c: Complex64,
    eps_d: Complex64,
    thickness: f64,
    branch: Branch,
) -> Result<GuidedMode, DispersionError> {
    let k0 = free_space_k(omega);
    let alpha_d = decay_constant(beta, k0, eps_d);
    let alpha_c = decay_constant(beta, k0, eps_c);
    let no_mode = |reason: &str| DispersionError::NoMode {
        omega_cm1: omega,
        reason: reason.to_string(),
    };
    if !(beta.re > 0.0) {
        return Err(no_mode("Re(beta) <= 0"));
    }
    if !(alpha_d.re > 0.0 && alpha_c.re > 0.0) {
        return Err(no_mode("field does not decay away from the guide (Re alpha <= 0)"));
    }
    Ok(GuidedMode {
        omega,
        beta,
        alpha_d,
        alpha_c,
        eps_d,
        eps_c,
        thickness,
        branch,
        n_eff: beta / k0,
    })
}

/// β = k₀ √(ε_d ε_c / (ε_d + ε_c)) for one polar/dielectric interface.
pub fn single_interface_beta(
    mat: &MaterialParams,
    eps_d: Complex64,
    omega: f64,
) -> Result<GuidedMode, DispersionError> {
    let eps_c = permittivity(mat, omega)?.value;
    single_interface_with_eps(eps_c, eps_d, omega)
}

/// Same as [`single_interface_beta`] with ε_c given directly.
pub fn single_interface_with_eps(
    eps_c: Complex64,
    eps_d: Complex64,
    omega: f64,
) -> Result<GuidedMode, DispersionError> {
    let k0 = free_space_k(omega);
    let beta =
        interface_closed_form(k0, eps_c, eps_d).ok_or(DispersionError::Pole { omega_cm1: omega })?;
    if !(eps_c.re < -eps_d.re) {
        return Err(DispersionError::NoMode {
            omega_cm1: omega,
            reason: "surface wave needs Re eps_c < -Re eps_d".into(),
        });
    }
    let mode = assemble(omega, beta, eps_c, eps_d, f64::INFINITY, Branch::SingleInterface)?;
    // the squared relation also admits the radiative (Brewster) root
    if mode.characteristic_residual() > 1e-8 {
        return Err(DispersionError::NoMode {
            omega_cm1: omega,
            reason: "only the radiative (Brewster) solution exists".into(),
        });
    }
    Ok(mode)
}

fn check_slab(thickness: f64, branch: Branch) -> Result<(), DispersionError> {
    if !(thickness > 0.0 && thickness.is_finite()) {
        return Err(DispersionError::InvalidThickness(thickness));
    }
    if branch == Branch::SingleInterface {
        return Err(DispersionError::NotASlabBranch(branch));
    }
    Ok(())
}

fn solve_slab_from(
    eps_c: Complex64,
    eps_d: Complex64,
    thickness: f64,
    omega: f64,
    branch: Branch,
    seed: Complex64,
) -> Result<Complex64, DispersionError> {
    let k0 = free_space_k(omega);
    let f = |beta: Complex64| {
        let ad = decay_constant(beta, k0, eps_d);
        let ac = decay_constant(beta, k0, eps_c);
        if ad.re <= 0.0 || ac.re <= 0.0 {
            return None;
        }
        Some(slab_characteristic(branch, eps_c, eps_d, ac, ad, thickness))
    };
    // near the light line α_d is a small difference, so polish to roundoff
    let opts = NewtonOptions {
        residual_tol: 1e-15,
        ..NewtonOptions::default()
    };
    newton(f, seed, &opts)
        .map(|r| r.z)
        .map_err(|e| DispersionError::NoConvergence {
            omega_cm1: omega,
            residual: e.residual,
            iterations: e.iterations,
        })
}

/// Solve the symmetric three-layer TM equation for the requested branch.
/// See [`SlabSolver`] for how the branch is tracked.
pub fn slab_beta(
    mat: &MaterialParams,
    eps_d: Complex64,
    thickness: f64,
    omega: f64,
    branch: Branch,
) -> Result<GuidedMode, DispersionError> {
    check_slab(thickness, branch)?;
    let eps_c = permittivity(mat, omega)?.value;
    if !(eps_c.re < 0.0) {
        return Err(DispersionError::NoMode {
            omega_cm1: omega,
            reason: "outside the reststrahlen band (Re eps_c >= 0)".into(),
        });
    }
    SlabSolver::new(mat, eps_d, thickness, branch)?.solve(omega)
}

/// Lossless-oscillator frequency where ε_c = −3 Re ε_d: well inside the
/// bound-surface-wave region, used as the anchor for branch tracking.
pub fn reference_omega(mat: &MaterialParams, eps_d: Complex64) -> f64 {
    let target = -3.0 * eps_d.re.max(1e-3);
    let strength = mat.omega_lo().powi(2) - mat.omega_to().powi(2);
    (mat.omega_to().powi(2) + strength * mat.eps_inf() / (mat.eps_inf() - target)).sqrt()
}

/// Tracks one slab branch for a fixed film.
///
/// The branch is identified at the reference frequency by following the
/// single-interface root from decoupled surfaces (α_c h/2 ≈ 20) down to the
/// film thickness. Other frequencies are reached by continuation in ω from
/// that anchor, so the same physical branch is returned across the band.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabSolver {
    material: MaterialParams,
    eps_d: Complex64,
    thickness: f64,
    branch: Branch,
    anchor: GuidedMode,
}

const MAX_RELATIVE_JUMP: f64 = 0.05;

impl SlabSolver {
    pub fn new(
        mat: &MaterialParams,
        eps_d: Complex64,
        thickness: f64,
        branch: Branch,
    ) -> Result<Self, DispersionError> {
        check_slab(thickness, branch)?;
        let omega = reference_omega(mat, eps_d);
        let eps_c = permittivity(mat, omega)?.value;
        let k0 = free_space_k(omega);
        let mut beta = interface_closed_form(k0, eps_c, eps_d)
            .ok_or(DispersionError::Pole { omega_cm1: omega })?;
        let alpha_c = decay_constant(beta, k0, eps_c);
        let decoupled = 40.0 / alpha_c.re;

        let mut h = decoupled.max(thickness);
        beta = solve_slab_from(eps_c, eps_d, h, omega, branch, beta)?;
        let mut ratio: f64 = 0.9;
        while h > thickness {
            let next = (h * ratio).max(thickness);
            match solve_slab_from(eps_c, eps_d, next, omega, branch, beta) {
                Ok(b) if (b - beta).norm() <= MAX_RELATIVE_JUMP * beta.norm() => {
                    beta = b;
                    h = next;
                    ratio = (ratio * ratio).max(0.9);
                }
                Ok(_) | Err(_) => {
                    ratio = ratio.sqrt();
                    if ratio > 0.99999 {
                        return Err(DispersionError::NoConvergence {
                            omega_cm1: omega,
                            residual: f64::NAN,
                            iterations: 0,
                        });
                    }
                }
            }
        }
        let anchor = assemble(omega, beta, eps_c, eps_d, thickness, branch)?;
        Ok(Self {
            material: mat.clone(),
            eps_d,
            thickness,
            branch,
            anchor,
        })
    }

    pub fn anchor(&self) -> &GuidedMode {
        &self.anchor
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// One continuation step from a known root; rejects roots that jump.
    pub fn step_from(&self, from: &GuidedMode, omega: f64) -> Result<GuidedMode, DispersionError> {
        let eps_c = permittivity(&self.material, omega)?.value;
        if !(eps_c.re < 0.0) {
            return Err(DispersionError::NoMode {
                omega_cm1: omega,
                reason: "outside the reststrahlen band (Re eps_c >= 0)".into(),
            });
        }
        let seed = from.beta * (omega / from.omega);
        let beta = solve_slab_from(eps_c, self.eps_d, self.thickness, omega, self.branch, seed)?;
        if (beta - seed).norm() > MAX_RELATIVE_JUMP * seed.norm() {
            return Err(DispersionError::NoConvergence {
                omega_cm1: omega,
                residual: f64::NAN,
                iterations: 0,
            });
        }
        assemble(omega, beta, eps_c, self.eps_d, self.thickness, self.branch)
    }

    pub fn solve(&self, omega: f64) -> Result<GuidedMode, DispersionError> {
        let eps_c = permittivity(&self.material, omega)?.value;
        if !(eps_c.re < 0.0) {
            return Err(DispersionError::NoMode {
                omega_cm1: omega,
                reason: "outside the reststrahlen band (Re eps_c >= 0)".into(),
            });
        }
        let max_step = (self.material.omega_lo() - self.material.omega_to()) / 200.0;
        let mut current = self.anchor;
        let mut step = max_step;
        while current.omega != omega {
            let remaining = omega - current.omega;
            let next = if remaining.abs() <= step {
                omega
            } else {
                current.omega + step * remaining.signum()
            };
            match self.step_from(&current, next) {
                Ok(m) => {
                    current = m;
                    step = (step * 2.0).min(max_step);
                }
                Err(e) => {
                    step *= 0.5;
                    if step < 1e-6 * max_step {
                        return Err(e);
                    }
                }
            }
        }
        Ok(current)
    }
}

/// Re-solve a slab branch at `omega` seeded from a nearby root.
pub fn slab_beta_seeded(
    mat: &MaterialParams,
    eps_d: Complex64,
    thickness: f64,
    omega: f64,
    branch: Branch,
    seed: Complex64,
) -> Result<GuidedMode, DispersionError> {
    check_slab(thickness, branch)?;
    let eps_c = permittivity(mat, omega)?.value;
    if !(eps_c.re < 0.0) {
        return Err(DispersionError::NoMode {
            omega_cm1: omega,
            reason: "outside the reststrahlen band (Re eps_c >= 0)".into(),
        });
    }
    let beta = solve_slab_from(eps_c, eps_d, thickness, omega, branch, seed)?;
    assemble(omega, beta, eps_c, eps_d, thickness, branch)
}

/// Both slab branches, sorted by attenuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabPair {
    pub long_range: GuidedMode,
    pub short_range: GuidedMode,
}

/// The long-range mode is whichever branch has the smaller Im β (ties, as in
/// the lossless limit, go to the smaller Re β).
pub fn slab_pair(
    mat: &MaterialParams,
    eps_d: Complex64,
    thickness: f64,
    omega: f64,
) -> Result<SlabPair, DispersionError> {
    let sym = slab_beta(mat, eps_d, thickness, omega, Branch::SlabSymmetric)?;
    let anti = slab_beta(mat, eps_d, thickness, omega, Branch::SlabAntisymmetric)?;
    let key = |m: &GuidedMode| (m.beta.im, m.beta.re);
    let (long_range, short_range) = if key(&sym) <= key(&anti) {
        (sym, anti)
    } else {
        (anti, sym)
    };
    Ok(SlabPair {
        long_range,
        short_range,
    })
}

pub fn long_range_beta(
    mat: &MaterialParams,
    eps_d: Complex64,
    thickness: f64,
    omega: f64,
) -> Result<GuidedMode, DispersionError> {
    slab_pair(mat, eps_d, thickness, omega).map(|p| p.long_range)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    SingleInterface,
    Slab { thickness: f64, branch: Branch },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionPoint {
    pub omega: f64,
    /// Light line k = ω/c expressed as a wavenumber: equal to `omega`.
    pub light_line: f64,
    pub mode: Result<GuidedMode, DispersionError>,
}

/// Solve along a strictly increasing grid. Failed points become gaps.
pub fn dispersion_curve(
    mat: &MaterialParams,
    eps_d: Complex64,
    geometry: Geometry,
    omega_grid: &[f64],
) -> Result<Vec<DispersionPoint>, DispersionError> {
    if omega_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(DispersionError::UnorderedGrid);
    }
    Ok(sweep(mat, eps_d, geometry, omega_grid.iter().copied()))
}

/// Continuation sweep in whatever order the grid is given.
pub fn sweep(
    mat: &MaterialParams,
    eps_d: Complex64,
    geometry: Geometry,
    omegas: impl IntoIterator<Item = f64>,
) -> Vec<DispersionPoint> {
    let solver = match geometry {
        Geometry::Slab { thickness, branch } => Some(SlabSolver::new(mat, eps_d, thickness, branch)),
        Geometry::SingleInterface => None,
    };
    let mut previous: Option<GuidedMode> = None;
    omegas
        .into_iter()
        .map(|omega| {
            let mode = match &solver {
                None => single_interface_beta(mat, eps_d, omega),
                Some(Err(e)) => Err(e.clone()),
                Some(Ok(solver)) => previous
                    .and_then(|prev| solver.step_from(&prev, omega).ok())
                    .map(Ok)
                    .unwrap_or_else(|| solver.solve(omega)),
            };
            previous = mode.as_ref().ok().copied();
            DispersionPoint {
                omega,
                light_line: omega,
                mode,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::UM;

    fn vac() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn sic() -> MaterialParams {
        MaterialParams::silicon_carbide()
    }

    #[test]
    fn lossless_interface_at_900() {
        // scalar evaluation: eps_c = 6.7 (1 + 310112 / (628849 - 810000))
        let eps_c: f64 = 6.7 * (1.0 + 310_112.0 / (628_849.0 - 810_000.0));
        let n_expected = (eps_c / (eps_c + 1.0)).sqrt();
        let m = single_interface_beta(&sic().lossless(), vac(), 900.0).unwrap();
        assert!((m.eps_c.re - eps_c).abs() < 1e-12);
        assert!((eps_c + 4.77).abs() < 0.01);
        assert!((m.n_eff.re - n_expected).abs() < 1e-12);
        assert!((m.n_eff.re - 1.125).abs() < 1e-3);
        assert!(m.decay_relation_residual() < 1e-10);
    }

    #[test]
    fn lossy_interface_attenuates() {
        let m = single_interface_beta(&sic(), vac(), 900.0).unwrap();
        assert!(m.beta.im > 0.0 && m.beta.re > 0.0);
        assert!(m.alpha_c.re > 0.0 && m.alpha_d.re > 0.0);
    }

    #[test]
    fn no_contrast_has_no_mode() {
        let err = single_interface_with_eps(vac(), vac(), 900.0).unwrap_err();
        assert!(matches!(err, DispersionError::NoMode { .. }));
    }

    #[test]
    fn below_band_has_no_mode() {
        let err = single_interface_beta(&sic().lossless(), vac(), 700.0).unwrap_err();
        assert!(matches!(err, DispersionError::NoMode { .. }));
    }

    #[test]
    fn exact_surface_pole() {
        let err = single_interface_with_eps(Complex64::new(-1.0, 0.0), vac(), 900.0).unwrap_err();
        assert!(matches!(err, DispersionError::Pole { .. }));
    }

    #[test]
    fn thick_slab_matches_interface() {
        for branch in [Branch::SlabSymmetric, Branch::SlabAntisymmetric] {
            let s = slab_beta(&sic(), vac(), 1.0, 900.0, branch).unwrap();
            let i = single_interface_beta(&sic(), vac(), 900.0).unwrap();
            assert!((s.beta - i.beta).norm() / i.beta.norm() < 1e-6);
        }
    }

    #[test]
    fn slab_roots_satisfy_their_equation() {
        for branch in [Branch::SlabSymmetric, Branch::SlabAntisymmetric] {
            for h in [0.3, 1.0, 3.0] {
                let m = slab_beta(&sic(), vac(), h * UM, 900.0, branch).unwrap();
                assert!(m.characteristic_residual() < 1e-10, "{branch:?} {h}");
                assert!(m.decay_relation_residual() < 1e-10);
                assert!(m.beta.im > 0.0);
            }
        }
    }

    #[test]
    fn long_range_branch_is_less_lossy() {
        let pair = slab_pair(&sic(), vac(), 1.0 * UM, 900.0).unwrap();
        assert!(pair.long_range.beta.im < pair.short_range.beta.im);
        assert_eq!(pair.long_range.branch, Branch::SlabSymmetric);
    }

    #[test]
    fn slab_argument_checks() {
        assert!(matches!(
            slab_beta(&sic(), vac(), 0.0, 900.0, Branch::SlabSymmetric),
            Err(DispersionError::InvalidThickness(_))
        ));
        assert!(matches!(
            slab_beta(&sic(), vac(), 1e-4, 900.0, Branch::SingleInterface),
            Err(DispersionError::NotASlabBranch(_))
        ));
    }

    #[test]
    fn empty_grid_is_empty() {
        let c = dispersion_curve(&sic(), vac(), Geometry::SingleInterface, &[]).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn unordered_grid_rejected() {
        let r = dispersion_curve(&sic(), vac(), Geometry::SingleInterface, &[900.0, 800.0]);
        assert_eq!(r.unwrap_err(), DispersionError::UnorderedGrid);
    }

    #[test]
    fn sweep_marks_gaps() {
        let grid = [700.0, 850.0, 900.0, 1000.0];
        let c = dispersion_curve(&sic(), vac(), Geometry::SingleInterface, &grid).unwrap();
        assert!(c[0].mode.is_err());
        assert!(c[1].mode.is_ok() && c[2].mode.is_ok());
        assert!(c[3].mode.is_err());
        assert!(c.iter().all(|p| p.light_line == p.omega));
    }

    #[test]
    fn continuation_is_direction_independent() {
        let geometry = Geometry::Slab {
            thickness: 1.0 * UM,
            branch: Branch::SlabSymmetric,
        };
        let grid: Vec<f64> = (0..40).map(|i| 820.0 + 3.0 * i as f64).collect();
        let fwd = sweep(&sic(), vac(), geometry, grid.iter().copied());
        let bwd = sweep(&sic(), vac(), geometry, grid.iter().rev().copied());
        for (i, p) in fwd.iter().enumerate().skip(1).take(grid.len() - 2) {
            let q = &bwd[grid.len() - 1 - i];
            let (a, b) = (p.mode.as_ref().unwrap().beta, q.mode.as_ref().unwrap().beta);
            assert!((a - b).norm() / a.norm() < 1e-8, "omega {}", p.omega);
        }
    }
}
