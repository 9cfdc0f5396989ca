//! Unit conventions.
//!
//! Frequencies are wavenumbers ν̃ in cm⁻¹, the free-space wavevector is
//! k₀ = 2πν̃ in rad/cm, and transverse coordinates are in cm. Grating-scale
//! quantities (wavelength, period, coupler length) are in μm.

use std::f64::consts::PI;

/// One micrometre in cm.
pub const UM: f64 = 1e-4;

/// Speed of light in cm/ps, for converting wavenumbers to angular frequency.
pub const C_CM_PER_PS: f64 = 0.029_979_245_8;

/// k₀ = 2πν̃ in rad/cm.
pub fn free_space_k(omega_cm1: f64) -> f64 {
    2.0 * PI * omega_cm1
}

/// λ[μm] = 10⁴ / ν̃[cm⁻¹].
pub fn wavelength_um(omega_cm1: f64) -> f64 {
    1e4 / omega_cm1
}

/// ν̃[cm⁻¹] = 10⁴ / λ[μm].
pub fn wavenumber_cm1(wavelength_um: f64) -> f64 {
    1e4 / wavelength_um
}

/// Angular frequency 2πcν̃ in rad/ps.
pub fn angular_frequency_rad_ps(omega_cm1: f64) -> f64 {
    2.0 * PI * C_CM_PER_PS * omega_cm1
}
