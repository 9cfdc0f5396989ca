//! Grating phase matching and two-mode coupled-amplitude propagation.
//!
//! Grating-scale quantities use μm: wavelength λ, period Λ, coupler length L,
//! mismatch Δβ and coupling strength g in rad/μm, and B = Δβ/2π in μm⁻¹.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{Branch, DispersionError, GuidedMode, SlabSolver};
use crate::material::MaterialParams;
use crate::units::{free_space_k, wavenumber_cm1};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("invalid coupler: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Dispersion(#[from] DispersionError),

    #[error("coupled-mode integration did not settle: Richardson error {error:e} at {steps} steps")]
    Integrator { error: f64, steps: usize },
}

/// One grating coupler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerSpec {
    /// Λ, μm
    pub period: f64,
    /// Diffraction order m.
    pub order: i32,
    /// Interaction length, μm.
    pub length: f64,
    /// Incidence angle, rad.
    pub theta: f64,
    /// g, rad/μm.
    pub coupling_strength: f64,
}

impl CouplerSpec {
    pub fn new(
        period: f64,
        order: i32,
        length: f64,
        theta: f64,
        coupling_strength: f64,
    ) -> Result<Self, CouplingError> {
        let spec = Self {
            period,
            order,
            length,
            theta,
            coupling_strength,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Coupler whose first-order grating cancels the mismatch at level `b`
    /// (Λ = m/B) with total coupling g·L = `gl`.
    pub fn phase_matched(b_level: f64, order: i32, length: f64, theta: f64, gl: f64) -> Result<Self, CouplingError> {
        if !(b_level > 0.0) || order <= 0 {
            return Err(CouplingError::InvalidSpec(
                "phase matching needs a positive B level and order".into(),
            ));
        }
        Self::new(order as f64 / b_level, order, length, theta, gl / length)
    }

    pub fn validate(&self) -> Result<(), CouplingError> {
        let bad = |m: &str| Err(CouplingError::InvalidSpec(m.into()));
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad("period must be positive");
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad("length must be positive");
        }
        if !(self.theta.abs() < PI / 2.0) {
            return bad("|theta| must be below pi/2");
        }
        if !(self.coupling_strength >= 0.0 && self.coupling_strength.is_finite()) {
            return bad("coupling strength must be non-negative");
        }
        Ok(())
    }

    pub fn gl(&self) -> f64 {
        self.coupling_strength * self.length
    }
}

/// 2πm/Λ in rad/μm.
pub fn grating_vector(spec: &CouplerSpec) -> f64 {
    2.0 * PI * spec.order as f64 / spec.period
}

/// Source of effective indices for the guided mode.
pub trait IndexModel: Sync {
    fn n_eff(&self, omega_cm1: f64) -> Result<Complex64, DispersionError>;

    /// n_eff at many frequencies, in input order.
    fn n_eff_many(&self, omegas: &[f64]) -> Vec<Result<Complex64, DispersionError>> {
        omegas.par_iter().map(|&w| self.n_eff(w)).collect()
    }
}

impl<F> IndexModel for F
where
    F: Fn(f64) -> Result<Complex64, DispersionError> + Sync,
{
    fn n_eff(&self, omega_cm1: f64) -> Result<Complex64, DispersionError> {
        self(omega_cm1)
    }
}

/// Long-range mode of a symmetric film. The long-range branch is picked once,
/// at the solver's reference frequency, as the branch with lower Im β.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRangeFilm {
    pub material: MaterialParams,
    pub eps_d: Complex64,
    /// cm
    pub thickness: f64,
    solver: SlabSolver,
}

impl LongRangeFilm {
    pub fn new(material: MaterialParams, eps_d: Complex64, thickness: f64) -> Result<Self, DispersionError> {
        let sym = SlabSolver::new(&material, eps_d, thickness, Branch::SlabSymmetric)?;
        let anti = SlabSolver::new(&material, eps_d, thickness, Branch::SlabAntisymmetric)?;
        let key = |s: &SlabSolver| (s.anchor().beta.im, s.anchor().beta.re);
        let solver = if key(&sym) <= key(&anti) { sym } else { anti };
        Ok(Self {
            material,
            eps_d,
            thickness,
            solver,
        })
    }

    pub fn branch(&self) -> Branch {
        self.solver.branch()
    }

    pub fn mode(&self, omega_cm1: f64) -> Result<GuidedMode, DispersionError> {
        self.solver.solve(omega_cm1)
    }
}

impl IndexModel for LongRangeFilm {
    fn n_eff(&self, omega_cm1: f64) -> Result<Complex64, DispersionError> {
        self.solver.solve(omega_cm1).map(|m| m.n_eff)
    }

    /// Continuation outward from the anchor in both directions.
    fn n_eff_many(&self, omegas: &[f64]) -> Vec<Result<Complex64, DispersionError>> {
        let mut order: Vec<usize> = (0..omegas.len()).collect();
        order.sort_by(|&a, &b| omegas[a].total_cmp(&omegas[b]));
        let split = order.partition_point(|&i| omegas[i] < self.solver.anchor().omega);
        let mut out = vec![None; omegas.len()];
        let (below, above) = order.split_at(split);
        for side in [below.iter().rev().collect::<Vec<_>>(), above.iter().collect()] {
            let mut previous = *self.solver.anchor();
            for &i in side {
                let mode = self
                    .solver
                    .step_from(&previous, omegas[i])
                    .or_else(|_| self.solver.solve(omegas[i]));
                if let Ok(m) = &mode {
                    previous = *m;
                }
                out[i] = Some(mode.map(|m| m.n_eff));
            }
        }
        out.into_iter().map(|r| r.expect("every index visited")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchPoint {
    /// μm
    pub wavelength: f64,
    pub theta: f64,
    /// μm⁻¹
    pub b_value: f64,
    /// rad/μm
    pub delta_beta: f64,
}

fn mismatch_from_index(n_eff: Complex64, wavelength: f64, theta: f64) -> MismatchPoint {
    let b_value = (n_eff.re - theta.sin()) / wavelength;
    MismatchPoint {
        wavelength,
        theta,
        b_value,
        delta_beta: 2.0 * PI * b_value,
    }
}

/// B(λ, θ) = [Re n_eff(λ) − sin θ]/λ and Δβ = 2πB.
pub fn mismatch_b(model: &dyn IndexModel, wavelength: f64, theta: f64) -> Result<MismatchPoint, CouplingError> {
    let n = model.n_eff(wavenumber_cm1(wavelength))?;
    Ok(mismatch_from_index(n, wavelength, theta))
}

/// B over a (λ, θ) grid, row-major in λ. Points without a bound mode are `None`.
pub fn b_map(model: &dyn IndexModel, wavelengths: &[f64], thetas: &[f64]) -> Vec<Option<MismatchPoint>> {
    let omegas: Vec<f64> = wavelengths.iter().map(|&l| wavenumber_cm1(l)).collect();
    let indices = model.n_eff_many(&omegas);
    wavelengths
        .iter()
        .zip(indices)
        .flat_map(|(&lam, n)| {
            let n = n.ok();
            thetas.iter().map(move |&th| n.map(|n| mismatch_from_index(n, lam, th)))
        })
        .collect()
}

/// Wavelengths on the grid where B(λ, θ) crosses `level`, refined by bisection.
pub fn level_crossings(
    model: &dyn IndexModel,
    theta: f64,
    level: f64,
    wavelengths: &[f64],
) -> Vec<f64> {
    let f = |lam: f64| mismatch_b(model, lam, theta).ok().map(|p| p.b_value - level);
    let values: Vec<Option<f64>> = b_map(model, wavelengths, &[theta])
        .into_iter()
        .map(|p| p.map(|p| p.b_value - level))
        .collect();
    let mut roots = Vec::new();
    for i in 0..wavelengths.len().saturating_sub(1) {
        let (Some(fa), Some(fb)) = (values[i], values[i + 1]) else {
            continue;
        };
        if fa == 0.0 {
            roots.push(wavelengths[i]);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (wavelengths[i], wavelengths[i + 1], fa);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            match f(mid) {
                Some(fm) if fm.signum() == flo.signum() => {
                    lo = mid;
                    flo = fm;
                }
                Some(_) => hi = mid,
                None => break,
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

/// sin(u)/u, with a series below |u| = 1e-4.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

/// C = transverse · sinc(Δβ₁z₁/2) · sinc(Δβ₂z₂/2) · z₁z₂, with z measured
/// from the grating centre.
pub fn overlap_c(transverse: Complex64, dbeta1: f64, dbeta2: f64, z1: f64, z2: f64) -> Complex64 {
    transverse * sinc(dbeta1 * z1 / 2.0) * sinc(dbeta2 * z2 / 2.0) * z1 * z2
}

/// |C| on a (Δβ₁, Δβ₂) grid divided by its phase-matched value |transverse|·z₁z₂.
/// Row-major in Δβ₁.
pub fn overlap_surface(dbeta1: &[f64], dbeta2: &[f64], z1: f64, z2: f64) -> Vec<(f64, f64, f64)> {
    let one = Complex64::new(1.0, 0.0);
    let peak = z1 * z2;
    dbeta1
        .iter()
        .flat_map(|&a| {
            dbeta2
                .iter()
                .map(move |&b| (a, b, overlap_c(one, a, b, z1, z2).norm() / peak))
        })
        .collect()
}

/// Transmission t and conversion κ of one coupler: the first row of the
/// 2×2 propagator [[t, κ], [−κ*, t*]].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerResponse {
    pub t: Complex64,
    pub kappa: Complex64,
    /// Residual detuning Δβ − 2πm/Λ used, rad/μm.
    pub detuning: f64,
}

impl CouplerResponse {
    pub fn efficiency(&self) -> f64 {
        self.kappa.norm_sqr()
    }
}

type Mat2 = [[Complex64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat_add_scaled(a: &Mat2, b: &Mat2, s: f64) -> Mat2 {
    let mut c = *a;
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] += b[i][j] * s;
        }
    }
    c
}

fn mat_pow(a: &Mat2, mut n: usize) -> Mat2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut result: Mat2 = [[one, zero], [zero, one]];
    let mut base = *a;
    while n > 0 {
        if n & 1 == 1 {
            result = mat_mul(&result, &base);
        }
        base = mat_mul(&base, &base);
        n >>= 1;
    }
    result
}

/// Classic RK4 on U' = A U, U(0) = I, with a constant generator.
///
/// For constant A one RK4 step is the fixed matrix
/// P = I + hA + (hA)²/2 + (hA)³/6 + (hA)⁴/24, so `steps` steps are Pⁿ,
/// formed by repeated squaring.
fn rk4_propagator(generator: &Mat2, length: f64, steps: usize) -> Mat2 {
    let h = length / steps as f64;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let identity: Mat2 = [[one, zero], [zero, one]];
    let k1 = mat_mul(generator, &identity);
    let k2 = mat_mul(generator, &mat_add_scaled(&identity, &k1, h / 2.0));
    let k3 = mat_mul(generator, &mat_add_scaled(&identity, &k2, h / 2.0));
    let k4 = mat_mul(generator, &mat_add_scaled(&identity, &k3, h));
    let mut step = identity;
    for i in 0..2 {
        for j in 0..2 {
            step[i][j] += (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]) * (h / 6.0);
        }
    }
    mat_pow(&step, steps)
}

const RICHARDSON_TOL: f64 = 1e-11;

/// Integrate the photon (a) / polariton (b) amplitudes along the grating,
///
///   da/dz =  i(δ/2) a + g b,
///   db/dz = −g a − i(δ/2) b,
///
/// with δ = Δβ − 2πm/Λ. The step starts at L/2000 and is halved until two
/// successive solutions agree.
pub fn propagate_coupled_modes(spec: &CouplerSpec, delta_beta: f64) -> Result<CouplerResponse, CouplingError> {
    spec.validate()?;
    let detuning = delta_beta - grating_vector(spec);
    let g = spec.coupling_strength;
    let half = Complex64::new(0.0, detuning / 2.0);
    let generator: Mat2 = [[half, Complex64::new(g, 0.0)], [Complex64::new(-g, 0.0), -half]];
    let rate = (g * g + detuning * detuning / 4.0).sqrt() * spec.length;
    let mut steps = 2000usize.max((rate * 50.0).ceil() as usize);
    let mut coarse = rk4_propagator(&generator, spec.length, steps);
    loop {
        let fine = rk4_propagator(&generator, spec.length, 2 * steps);
        let diff = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| (fine[i][j] - coarse[i][j]).norm())
            .fold(0.0, f64::max);
        let error = diff / 15.0;
        steps *= 2;
        if error <= RICHARDSON_TOL {
            return Ok(CouplerResponse {
                t: fine[0][0],
                kappa: fine[0][1],
                detuning,
            });
        }
        if steps > 1 << 22 {
            return Err(CouplingError::Integrator { error, steps });
        }
        coarse = fine;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyPoint {
    /// μm
    pub wavelength: f64,
    /// |κ|², `None` where no bound mode exists.
    pub efficiency: Option<f64>,
}

/// |κ(λ)|² across a wavelength grid.
pub fn efficiency_spectrum(
    model: &dyn IndexModel,
    spec: &CouplerSpec,
    wavelengths: &[f64],
) -> Result<Vec<EfficiencyPoint>, CouplingError> {
    spec.validate()?;
    let points = b_map(model, wavelengths, &[spec.theta]);
    wavelengths
        .par_iter()
        .zip(points)
        .map(|(&lam, point)| {
            let efficiency = match point {
                Some(p) => Some(propagate_coupled_modes(spec, p.delta_beta)?.efficiency()),
                None => None,
            };
            Ok(EfficiencyPoint {
                wavelength: lam,
                efficiency,
            })
        })
        .collect()
}

/// Local maxima of the spectrum that reach `fraction` of its global maximum.
pub fn dominant_peaks(spectrum: &[EfficiencyPoint], fraction: f64) -> Vec<EfficiencyPoint> {
    let values: Vec<f64> = spectrum
        .iter()
        .map(|p| p.efficiency.unwrap_or(f64::NEG_INFINITY))
        .collect();
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return Vec::new();
    }
    (0..values.len())
        .filter(|&i| {
            let v = values[i];
            let left = if i > 0 { values[i - 1] } else { f64::NEG_INFINITY };
            let right = values.get(i + 1).copied().unwrap_or(f64::NEG_INFINITY);
            v >= fraction * top && v > left && v >= right
        })
        .map(|i| spectrum[i])
        .collect()
}

/// Evenly spaced wavelengths (μm), inclusive of both ends.
pub fn wavelength_grid(min_um: f64, max_um: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min_um],
        n => (0..n)
            .map(|i| min_um + (max_um - min_um) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Free-space wavevector at wavelength λ (μm), in rad/μm.
pub fn k0_per_um(wavelength: f64) -> f64 {
    free_space_k(wavenumber_cm1(wavelength)) * 1e-4
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(gl: f64) -> CouplerSpec {
        CouplerSpec::new(10.0, 1, 100.0, PI / 9.0, gl / 100.0).unwrap()
    }

    #[test]
    fn grating_vector_values() {
        assert!((grating_vector(&spec(1.0)) - 0.628_318_530_717_958_6).abs() < 1e-15);
        let mut s = spec(1.0);
        s.order = 0;
        assert_eq!(grating_vector(&s), 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(CouplerSpec::new(0.0, 1, 100.0, 0.1, 0.01).is_err());
        assert!(CouplerSpec::new(10.0, 1, -1.0, 0.1, 0.01).is_err());
        assert!(CouplerSpec::new(10.0, 1, 100.0, PI / 2.0, 0.01).is_err());
        assert!(CouplerSpec::new(10.0, 1, 100.0, 0.1, -0.01).is_err());
    }

    #[test]
    fn direct_phase_match_with_stub_index() {
        // synthetic sub-unity index: sin θ = n_eff gives B = 0 without a grating
        let model = |_: f64| Ok(Complex64::new(0.5, 0.0));
        let p = mismatch_b(&model, 10.0, (0.5f64).asin()).unwrap();
        assert!(p.b_value.abs() < 1e-15);
        let mut s = spec(PI / 2.0);
        s.order = 0;
        let r = propagate_coupled_modes(&s, p.delta_beta).unwrap();
        assert!((r.efficiency() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn delta_beta_is_two_pi_b() {
        let model = |_: f64| Ok(Complex64::new(1.7, 0.01));
        let p = mismatch_b(&model, 11.0, 0.3).unwrap();
        assert_eq!(p.delta_beta, 2.0 * PI * p.b_value);
        assert!((p.b_value - (1.7 - 0.3f64.sin()) / 11.0).abs() < 1e-15);
    }

    #[test]
    fn sinc_series_matches() {
        for u in [1e-5, 5e-5, 9.9e-5, 1.01e-4] {
            assert!((sinc(u) - u.sin() / u).abs() < 4e-16);
        }
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn overlap_window_zero() {
        let z = 100.0;
        let c = overlap_c(1.0.into(), 2.0 * PI / z, 0.0, z, z);
        assert!(c.norm() / (z * z) < 1e-15);
    }

    #[test]
    fn no_grating_no_conversion() {
        let r = propagate_coupled_modes(&spec(0.0), 0.7).unwrap();
        assert_eq!(r.kappa.norm(), 0.0);
        assert!((r.t.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_conversion_at_quarter_period() {
        let s = spec(PI / 2.0);
        let r = propagate_coupled_modes(&s, grating_vector(&s)).unwrap();
        assert!((r.efficiency() - 1.0).abs() < 1e-10);
        assert!(r.t.norm() < 1e-8);
    }

    #[test]
    fn peaks_of_a_two_bump_spectrum() {
        let spectrum: Vec<EfficiencyPoint> = (0..100)
            .map(|i| {
                let x = i as f64;
                let v = (-(x - 30.0).powi(2) / 4.0).exp() + 0.9 * (-(x - 70.0).powi(2) / 4.0).exp()
                    + 0.1 * (-(x - 50.0).powi(2)).exp();
                EfficiencyPoint {
                    wavelength: x,
                    efficiency: Some(v),
                }
            })
            .collect();
        let p = dominant_peaks(&spectrum, 0.5);
        assert_eq!(p.iter().map(|p| p.wavelength).collect::<Vec<_>>(), vec![30.0, 70.0]);
    }
}
