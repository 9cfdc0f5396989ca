//! Entangled long-range surface phonon polaritons in polar-dielectric films.
//!
//! The crate is layered bottom-up:
//!
//! * [`material`]: Lorentz-oscillator permittivity (SiC built in).
//! * [`dispersion`]: single-interface and thin-film mode solving.
//! * [`modes`]: vector mode profiles, flux normalization, overlap integrals.
//! * [`coupling`]: grating phase matching, the finite-length sinc window and
//!   the two-mode coupled-amplitude integrator.
//! * [`quantum`]: biphoton spectra, the two-arm 4×4 transfer matrix, outcome
//!   probabilities and second-order correlation.

pub mod coupling;
pub mod dispersion;
pub mod material;
pub mod modes;
pub mod quadrature;
pub mod quantum;
pub mod roots;
pub mod units;

pub use dispersion::{Branch, GuidedMode};
pub use material::{MaterialParams, Permittivity};
