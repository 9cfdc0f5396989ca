//! Transverse mode profiles and the integrals built on them.
//!
//! The polariton profile is the vector field (F_x, F_z) of a TM slab mode with
//! the film on −h ≤ x ≤ 0:
//!
//! * x > 0: (iβ/α_d, 1) e^{−α_d x}
//! * −h < x < 0: F_x = (iβ/α_c)(r cosh α_c x − sinh α_c x),
//!   F_z = cosh α_c x − r sinh α_c x, with r = ε_d α_c / (ε_c α_d)
//! * x < −h: s (iβ/α_d, −1) e^{α_d (x+h)}, s = +1 for the symmetric branch
//!   and −1 for the antisymmetric one.
//!
//! At an interface the sampler returns the mean of the two one-sided values
//! (Heaviside step with θ(0) = 1/2).
//!
//! Normalization follows the longitudinal power flux
//! P = β/(2k₀Γ²) ∫ |Ψ|²/ε(x) dx. The flux integral of a lossy film with
//! Re ε < 0 is complex and can be negative, so Γ is the complex square root
//! rather than a modulus. The normalized field is Ψ/Γ. All coefficient
//! integrals are taken over normalized fields, which makes them independent
//! of the raw amplitude.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{decay_constant, Branch, GuidedMode};
use crate::quadrature::{integrate, QuadratureError, Tolerance};
use crate::units::free_space_k;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),

    #[error("flux integral vanishes; the mode cannot be normalized")]
    ZeroFlux,

    #[error("degenerate boundary system for the photon profile (|det| = {det:e})")]
    DegenerateGeometry { det: f64 },

    #[error("photon in-plane wavevector {in_plane_k} rad/cm is not evanescent in the cladding")]
    NotEvanescent { in_plane_k: f64 },

    #[error("profiles do not share a geometry")]
    GeometryMismatch,
}

/// Piecewise permittivity ε(x) of the symmetric three-layer stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabGeometry {
    pub eps_c: Complex64,
    pub eps_d: Complex64,
    /// cm; infinite for a single interface
    pub thickness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    LowerCladding,
    Film,
    UpperCladding,
    Interface,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::LowerCladding => "lower",
            Region::Film => "film",
            Region::UpperCladding => "upper",
            Region::Interface => "interface",
        }
    }
}

impl SlabGeometry {
    pub fn of_mode(mode: &GuidedMode) -> Self {
        Self {
            eps_c: mode.eps_c,
            eps_d: mode.eps_d,
            thickness: mode.thickness,
        }
    }

    pub fn region(&self, x: f64) -> Region {
        let h = self.thickness;
        if x > 0.0 {
            Region::UpperCladding
        } else if x == 0.0 || x == -h {
            Region::Interface
        } else if x > -h {
            Region::Film
        } else {
            Region::LowerCladding
        }
    }

    pub fn eps_at(&self, x: f64) -> Complex64 {
        match self.region(x) {
            Region::Film => self.eps_c,
            Region::Interface => 0.5 * (self.eps_c + self.eps_d),
            _ => self.eps_d,
        }
    }

    fn same_as(&self, other: &Self) -> bool {
        let close = |a: Complex64, b: Complex64| (a - b).norm() <= 1e-12 * a.norm().max(1.0);
        close(self.eps_c, other.eps_c)
            && close(self.eps_d, other.eps_d)
            && (self.thickness == other.thickness
                || (self.thickness - other.thickness).abs() <= 1e-12 * self.thickness)
    }
}

/// Evaluated field sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: f64,
    pub fx: Complex64,
    pub fz: Complex64,
    pub region: Region,
}

/// Vector eigenfunction of a guided polariton mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeProfile {
    pub mode: GuidedMode,
    /// Overall multiplier on the raw profile.
    pub amplitude: Complex64,
    /// Γ_k; 1 until [`normalize_flux`] is applied.
    pub gamma_k: Complex64,
    /// Film F_z = P e^{α_c x} + Q e^{−α_c (x+h)}, each term anchored at its interface.
    film_coeffs: (Complex64, Complex64),
    lower_sign: f64,
}

/// The film field is cosh(α_c x) − r sinh(α_c x) with r = ε_d α_c/(ε_c α_d).
/// It is evaluated as two exponentials with r taken from the branch relation
/// (r = −coth(α_c h/2) or −tanh(α_c h/2)), which stays accurate when α_c h is
/// large.
pub fn build_profile(mode: &GuidedMode) -> ModeProfile {
    let one = Complex64::new(1.0, 0.0);
    let e = if mode.thickness.is_finite() {
        (-mode.alpha_c * mode.thickness).exp()
    } else {
        Complex64::new(0.0, 0.0)
    };
    let (film_coeffs, lower_sign) = match mode.branch {
        Branch::SingleInterface => ((one, Complex64::new(0.0, 0.0)), 1.0),
        Branch::SlabSymmetric => ((one / (1.0 - e), -one / (1.0 - e)), 1.0),
        Branch::SlabAntisymmetric => ((one / (1.0 + e), one / (1.0 + e)), -1.0),
    };
    ModeProfile {
        mode: *mode,
        amplitude: Complex64::new(1.0, 0.0),
        gamma_k: Complex64::new(1.0, 0.0),
        film_coeffs,
        lower_sign,
    }
}

impl ModeProfile {
    pub fn geometry(&self) -> SlabGeometry {
        SlabGeometry::of_mode(&self.mode)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            amplitude: self.amplitude * factor,
            gamma_k: Complex64::new(1.0, 0.0),
            ..*self
        }
    }

    fn upper(&self, x: f64) -> (Complex64, Complex64) {
        let m = &self.mode;
        let e = (-m.alpha_d * x).exp();
        (I * m.beta / m.alpha_d * e, e)
    }

    fn lower(&self, x: f64) -> (Complex64, Complex64) {
        let m = &self.mode;
        let e = (m.alpha_d * (x + m.thickness)).exp() * self.lower_sign;
        (I * m.beta / m.alpha_d * e, -e)
    }

    fn film(&self, x: f64) -> (Complex64, Complex64) {
        let m = &self.mode;
        let pre = I * m.beta / m.alpha_c;
        let (p, q) = self.film_coeffs;
        let grow = p * (m.alpha_c * x).exp();
        let decay = if q == Complex64::new(0.0, 0.0) {
            q
        } else {
            q * (-m.alpha_c * (x + m.thickness)).exp()
        };
        (pre * (decay - grow), grow + decay)
    }

    /// Raw field amplitude times the piecewise profile at x (cm).
    pub fn field(&self, x: f64) -> (Complex64, Complex64) {
        let g = self.geometry();
        let (fx, fz) = match g.region(x) {
            Region::UpperCladding => self.upper(x),
            Region::Film => self.film(x),
            Region::LowerCladding => self.lower(x),
            Region::Interface => {
                let (a, b) = self.film(x);
                let (c, d) = if x == 0.0 { self.upper(x) } else { self.lower(x) };
                (0.5 * (a + c), 0.5 * (b + d))
            }
        };
        (self.amplitude * fx, self.amplitude * fz)
    }

    /// Field divided by Γ_k.
    pub fn normalized_field(&self, x: f64) -> (Complex64, Complex64) {
        let (fx, fz) = self.field(x);
        (fx / self.gamma_k, fz / self.gamma_k)
    }

    pub fn sample(&self, xs: &[f64]) -> Vec<FieldSample> {
        let g = self.geometry();
        xs.iter()
            .map(|&x| {
                let (fx, fz) = self.normalized_field(x);
                FieldSample {
                    x,
                    fx,
                    fz,
                    region: g.region(x),
                }
            })
            .collect()
    }

    /// One-sided limits at the two interfaces, as
    /// `[(film, cladding) at x = 0, (film, cladding) at x = −h]`.
    fn interface_limits(&self) -> [((Complex64, Complex64), (Complex64, Complex64)); 2] {
        let h = self.mode.thickness;
        [(self.film(0.0), self.upper(0.0)), (self.film(-h), self.lower(-h))]
    }

    /// Largest relative mismatch of F_z and of ε F_x across either interface.
    pub fn boundary_residual(&self) -> f64 {
        let m = &self.mode;
        let limits = self.interface_limits();
        let count = if m.branch == Branch::SingleInterface { 1 } else { 2 };
        limits[..count]
            .iter()
            .map(|((fx_in, fz_in), (fx_out, fz_out))| {
                let tangential = (fz_in - fz_out).norm() / fz_out.norm();
                let normal = (m.eps_c * fx_in - m.eps_d * fx_out).norm() / (m.eps_d * fx_out).norm();
                tangential.max(normal)
            })
            .fold(0.0, f64::max)
    }

    /// ∫ w(x) |F(x)|² dx of the raw field, with closed-form cladding tails and
    /// adaptive quadrature over the film. `weight` receives ε(x).
    fn weighted_norm(
        &self,
        weight: impl Fn(Complex64) -> Complex64,
        tol: &Tolerance,
    ) -> Result<Complex64, ModeError> {
        let m = &self.mode;
        let a2 = self.amplitude.norm_sqr();
        let clad_density = (m.beta / m.alpha_d).norm_sqr() + 1.0;
        let tail = clad_density / (2.0 * m.alpha_d.re) * weight(m.eps_d);
        if m.branch == Branch::SingleInterface {
            let film_density = (m.beta / m.alpha_c).norm_sqr() + 1.0;
            let film = film_density / (2.0 * m.alpha_c.re) * weight(m.eps_c);
            return Ok(a2 * (tail + film));
        }
        let wc = weight(m.eps_c);
        let film = integrate(
            |x| {
                let (fx, fz) = self.film(x);
                wc * (fx.norm_sqr() + fz.norm_sqr())
            },
            -m.thickness,
            0.0,
            tol,
        )?;
        Ok(a2 * (film.value + 2.0 * tail))
    }

    /// ∫ |F|²/ε dx for the raw field.
    pub fn flux_integral(&self, tol: &Tolerance) -> Result<Complex64, ModeError> {
        self.weighted_norm(|e| 1.0 / e, tol)
    }

    /// P = β/(2k₀Γ²) ∫|F|²/ε dx.
    pub fn power_flux(&self, tol: &Tolerance) -> Result<Complex64, ModeError> {
        let j = self.flux_integral(tol)?;
        Ok(self.mode.beta / (2.0 * self.mode.k0() * self.gamma_k * self.gamma_k) * j)
    }

    /// ∫ ε |Ψ/Γ|² dx.
    pub fn energy_weight(&self, tol: &Tolerance) -> Result<Complex64, ModeError> {
        Ok(self.weighted_norm(|e| e, tol)? / self.gamma_k.norm_sqr())
    }
}

/// Set Γ_k so the power flux of Ψ/Γ_k equals one.
pub fn normalize_flux(profile: &ModeProfile) -> Result<ModeProfile, ModeError> {
    normalize_flux_with(profile, &Tolerance::default())
}

pub fn normalize_flux_with(profile: &ModeProfile, tol: &Tolerance) -> Result<ModeProfile, ModeError> {
    let j = profile.flux_integral(tol)?;
    let gamma2 = profile.mode.beta / (2.0 * profile.mode.k0()) * j;
    if !(gamma2.norm() > 0.0) || !gamma2.is_finite() {
        return Err(ModeError::ZeroFlux);
    }
    Ok(ModeProfile {
        gamma_k: gamma2.sqrt(),
        ..*profile
    })
}

/// Boundary data for the photonic coupling profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonBoundary {
    /// cm⁻¹
    pub omega: f64,
    /// Incidence angle (rad).
    pub theta: f64,
    /// Grating reciprocal vector 2πm/Λ (rad/cm) added to k₀ sin θ.
    pub grating_vector: f64,
    /// Complex amplitude of the incident wave.
    pub amplitude: Complex64,
    /// Grating transmission into the film at x = 0.
    pub transmission: Complex64,
    pub geometry: SlabGeometry,
}

impl PhotonBoundary {
    /// In-plane wavevector of the diffracted photon, rad/cm.
    pub fn in_plane_k(&self) -> f64 {
        free_space_k(self.omega) * self.theta.sin() + self.grating_vector
    }
}

/// Scalar photon profile inside and below the film.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonProfile {
    /// (λ₁, λ₂, λ₃): film e^{−α_c x}, film e^{α_c x}, lower cladding e^{α_d (x+h)}.
    pub lambdas: [Complex64; 3],
    pub alpha_c: Complex64,
    pub alpha_d: Complex64,
    pub geometry: SlabGeometry,
    pub omega: f64,
    pub in_plane_k: f64,
    /// Ξ; 1 until [`normalize_photon_flux`] is applied.
    pub xi: Complex64,
    boundary: PhotonBoundary,
}

/// Solve the coefficients from G(0⁻) = τA, continuity of G at x = −h and of
/// (1/ε) dG/dx at x = −h.
pub fn build_photon_profile(bc: &PhotonBoundary) -> Result<PhotonProfile, ModeError> {
    let g = bc.geometry;
    let k0 = free_space_k(bc.omega);
    let q_in = Complex64::new(bc.in_plane_k(), 0.0);
    let alpha_c = decay_constant(q_in, k0, g.eps_c);
    let alpha_d = decay_constant(q_in, k0, g.eps_d);
    if !(alpha_d.re > 0.0 && alpha_c.re > 0.0) {
        return Err(ModeError::NotEvanescent {
            in_plane_k: bc.in_plane_k(),
        });
    }
    let p = alpha_c / g.eps_c;
    let q = alpha_d / g.eps_d;
    let e2 = if g.thickness.is_finite() {
        (-2.0 * alpha_c * g.thickness).exp()
    } else {
        Complex64::new(0.0, 0.0)
    };
    let e1 = if g.thickness.is_finite() {
        (-alpha_c * g.thickness).exp()
    } else {
        Complex64::new(0.0, 0.0)
    };
    let det = (p - q) * e2 + (p + q);
    let scale = (p - q).norm() * e2.norm() + (p + q).norm();
    if det.norm() <= 1e-12 * scale {
        return Err(ModeError::DegenerateGeometry { det: det.norm() });
    }
    let drive = bc.transmission * bc.amplitude;
    let lambdas = [
        drive * (p - q) * e2 / det,
        drive * (p + q) / det,
        drive * 2.0 * p * e1 / det,
    ];
    Ok(PhotonProfile {
        lambdas,
        alpha_c,
        alpha_d,
        geometry: g,
        omega: bc.omega,
        in_plane_k: bc.in_plane_k(),
        xi: Complex64::new(1.0, 0.0),
        boundary: *bc,
    })
}

impl PhotonProfile {
    pub fn boundary(&self) -> &PhotonBoundary {
        &self.boundary
    }

    fn film(&self, x: f64) -> Complex64 {
        let [l1, l2, _] = self.lambdas;
        let mut v = Complex64::new(0.0, 0.0);
        if l1 != Complex64::new(0.0, 0.0) {
            v += l1 * (-self.alpha_c * x).exp();
        }
        if l2 != Complex64::new(0.0, 0.0) {
            v += l2 * (self.alpha_c * x).exp();
        }
        v
    }

    fn lower(&self, x: f64) -> Complex64 {
        self.lambdas[2] * (self.alpha_d * (x + self.geometry.thickness)).exp()
    }

    /// 𝒢(x); zero above the film.
    pub fn field(&self, x: f64) -> Complex64 {
        match self.geometry.region(x) {
            Region::UpperCladding => Complex64::new(0.0, 0.0),
            Region::Film => self.film(x),
            Region::LowerCladding => self.lower(x),
            Region::Interface if x == 0.0 => 0.5 * self.film(x),
            Region::Interface => 0.5 * (self.film(x) + self.lower(x)),
        }
    }

    pub fn normalized_field(&self, x: f64) -> Complex64 {
        self.field(x) / self.xi
    }

    /// Residuals of the three boundary equations, relative to the drive.
    pub fn boundary_residual(&self) -> f64 {
        let bc = &self.boundary;
        let drive = (bc.transmission * bc.amplitude).norm();
        let [l1, l2, l3] = self.lambdas;
        let h = self.geometry.thickness;
        let top = (l1 + l2 - bc.transmission * bc.amplitude).norm();
        if !h.is_finite() {
            return top / drive.max(f64::MIN_POSITIVE);
        }
        let ep = (self.alpha_c * h).exp();
        let em = (-self.alpha_c * h).exp();
        let value = (l1 * ep + l2 * em - l3).norm();
        let slope = (self.alpha_c / self.geometry.eps_c * (-l1 * ep + l2 * em)
            - self.alpha_d / self.geometry.eps_d * l3)
            .norm();
        let slope_scale = (self.alpha_d / self.geometry.eps_d).norm();
        let s = drive.max(f64::MIN_POSITIVE);
        (top / s).max(value / s).max(slope / (slope_scale * s))
    }

    fn weighted_norm(
        &self,
        weight: impl Fn(Complex64) -> Complex64,
        tol: &Tolerance,
    ) -> Result<Complex64, ModeError> {
        let g = &self.geometry;
        if !g.thickness.is_finite() {
            // film fills x < 0 with only the decaying exponential
            let v = self.lambdas[1].norm_sqr() / (2.0 * self.alpha_c.re);
            return Ok(v * weight(g.eps_c));
        }
        let wc = weight(g.eps_c);
        let film = integrate(|x| wc * self.film(x).norm_sqr(), -g.thickness, 0.0, tol)?;
        let tail = self.lambdas[2].norm_sqr() / (2.0 * self.alpha_d.re) * weight(g.eps_d);
        Ok(film.value + tail)
    }

    pub fn flux_integral(&self, tol: &Tolerance) -> Result<Complex64, ModeError> {
        self.weighted_norm(|e| 1.0 / e, tol)
    }

    /// ∫ ε |𝒢/Ξ|² dx.
    pub fn energy_weight(&self, tol: &Tolerance) -> Result<Complex64, ModeError> {
        Ok(self.weighted_norm(|e| e, tol)? / self.xi.norm_sqr())
    }
}

/// Ξ from the same flux condition as Γ_k, with the photon's in-plane wavevector.
pub fn normalize_photon_flux(profile: &PhotonProfile) -> Result<PhotonProfile, ModeError> {
    let j = profile.flux_integral(&Tolerance::default())?;
    let xi2 = profile.in_plane_k / (2.0 * free_space_k(profile.omega)) * j;
    if !(xi2.norm() > 0.0) || !xi2.is_finite() {
        return Err(ModeError::ZeroFlux);
    }
    Ok(PhotonProfile {
        xi: xi2.sqrt(),
        ..*profile
    })
}

/// ∫ ε(x) Ψ*_z(x) 𝒢(x) dx over the film and the lower cladding (𝒢 = 0 above).
pub fn arm_overlap(p: &ModeProfile, g: &PhotonProfile, tol: &Tolerance) -> Result<Complex64, ModeError> {
    let geo = p.geometry();
    if !geo.same_as(&g.geometry) {
        return Err(ModeError::GeometryMismatch);
    }
    let norm = p.gamma_k.conj() * g.xi;
    let m = &p.mode;
    if !geo.thickness.is_finite() {
        // Ψ_z = e^{α_c x}, 𝒢 = λ₂ e^{α_c' x} on x < 0
        let v = geo.eps_c * p.amplitude.conj() * g.lambdas[1] / (m.alpha_c.conj() + g.alpha_c);
        return Ok(v / norm);
    }
    let film = integrate(
        |x| geo.eps_c * p.film(x).1.conj() * p.amplitude.conj() * g.film(x),
        -geo.thickness,
        0.0,
        tol,
    )?;
    let tail = geo.eps_d * (-p.lower_sign) * p.amplitude.conj() * g.lambdas[2]
        / (m.alpha_d.conj() + g.alpha_d);
    Ok((film.value + tail) / norm)
}

/// Transverse factor of the spatial overlap:
/// ∫∫ ε(x₁)ε(x₂) Ψ*₁(x₁) Ψ*₂(x₂) Θ*(x₁, x₂) with Θ = 𝒢*₁(x₁)𝒢*₂(x₂).
/// Θ is a product, so the double integral is the product of two arm integrals.
/// The tangential component Ψ_z is the one projected on the photon profile.
pub fn overlap_integral(
    p1: &ModeProfile,
    p2: &ModeProfile,
    g1: &PhotonProfile,
    g2: &PhotonProfile,
) -> Result<Complex64, ModeError> {
    let tol = Tolerance::default();
    Ok(arm_overlap(p1, g1, &tol)? * arm_overlap(p2, g2, &tol)?)
}

/// Interaction-Hamiltonian coefficients in reduced units.
///
/// `scale` stands in for the physical prefactor (ħ, ε₀, χ⁽²⁾ and the
/// quantization area) and defaults to 1. Frequencies enter as k₀ = 2πν̃.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianCoefficients {
    pub i_photon: Complex64,
    pub i_polariton: Complex64,
    pub s: Complex64,
}

impl HamiltonianCoefficients {
    pub fn magnitudes(&self) -> (f64, f64, f64) {
        (self.i_photon.norm(), self.i_polariton.norm(), self.s.norm())
    }
}

pub const DEFAULT_SCALE: f64 = 1.0;

/// Evaluated on flux-normalized profiles; the second polariton weight is
/// integrated over its own coordinate.
pub fn hamiltonian_coefficients(
    p1: &ModeProfile,
    p2: &ModeProfile,
    g1: &PhotonProfile,
    g2: &PhotonProfile,
    scale: f64,
) -> Result<HamiltonianCoefficients, ModeError> {
    let tol = Tolerance::default();
    let p1 = normalize_flux(p1)?;
    let p2 = normalize_flux(p2)?;
    let g1 = normalize_photon_flux(g1)?;
    let g2 = normalize_photon_flux(g2)?;
    let k1 = p1.mode.k0();
    let k2 = p2.mode.k0();
    let kp1 = free_space_k(g1.omega);
    let kp2 = free_space_k(g2.omega);
    let i_polariton = k1 * k2 * p1.energy_weight(&tol)? * p2.energy_weight(&tol)?;
    let i_photon = kp1 * kp2 * g1.energy_weight(&tol)? * g2.energy_weight(&tol)?;
    // normalized profiles carry unit Γ and Ξ
    let s = Complex64::new(scale / 4.0 * (k1 * k2).sqrt() * (kp1 * kp2).sqrt(), 0.0);
    Ok(HamiltonianCoefficients {
        i_photon,
        i_polariton,
        s,
    })
}
