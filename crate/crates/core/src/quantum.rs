//! Two-arm biphoton states, the coupler transfer matrix and g2 correlations.
//!
//! Basis order for the four-component states is `(νη, ντ, μη, μτ)`:
//! ν/μ mark a photon/polariton in arm 1 and η/τ a photon/polariton in arm 2.
//! Labels `pp`, `ps`, `sp`, `ss` are used in serialized output.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling::{grating_vector, overlap_c, CouplerSpec, CouplingError, IndexModel};
use crate::modes::ModeError;
use crate::units::{angular_frequency_rad_ps, wavelength_um};

pub const BASIS: [&str; 4] = ["pp", "ps", "sp", "ss"];

/// Tolerance on |t|² + |κ|² accepted by [`transfer_matrix`].
pub const CHANNEL_NORM_TOL: f64 = 1e-9;

/// Tolerance on Σ|ξ|² accepted by [`TwoModeState::new`].
pub const STATE_NORM_TOL: f64 = 1e-10;

pub const DEFAULT_PUMP_BANDWIDTH_CM1: f64 = 1.0;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("arm {arm} coupler is not lossless: |t|^2 + |kappa|^2 = {norm}")]
    InvalidCoupler { arm: u8, norm: f64 },
    #[error("state is not normalized: sum |xi|^2 = {norm}")]
    NotNormalized { norm: f64 },
    #[error("invalid frequency {0} cm^-1")]
    InvalidFrequency(f64),
    #[error("invalid pump bandwidth {0} cm^-1")]
    InvalidBandwidth(f64),
    #[error("no k-pair lies on the energy shell omega_p = {pump_cm1} cm^-1 (bandwidth {bandwidth_cm1})")]
    EmptySpectrum { pump_cm1: f64, bandwidth_cm1: f64 },
    #[error("all biphoton amplitudes vanish")]
    ZeroAmplitude,
    #[error("unknown entanglement scheme `{0}` (expected `energy-time` or `frequency`)")]
    UnknownScheme(String),
    #[error("{scheme} scheme needs {expected} arguments")]
    SchemeMismatch { scheme: Scheme, expected: &'static str },
    #[error("invalid spectral weight table: {0}")]
    InvalidWeight(String),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Modes(#[from] ModeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    EnergyTime,
    Frequency,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::EnergyTime => "energy-time",
            Scheme::Frequency => "frequency",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = QuantumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "energy-time" | "energytime" => Ok(Scheme::EnergyTime),
            "frequency" => Ok(Scheme::Frequency),
            _ => Err(QuantumError::UnknownScheme(s.to_string())),
        }
    }
}

/// Normalized four-amplitude state of one frequency pair.
///
/// `omega_p` is always stored as `omega1 + omega2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateDump", into = "StateDump")]
pub struct TwoModeState {
    xi: [Complex64; 4],
    scheme: Scheme,
    omega1: f64,
    omega2: f64,
    omega_p: f64,
}

fn norm_sqr(xi: &[Complex64; 4]) -> f64 {
    xi.iter().map(|z| z.norm_sqr()).sum()
}

fn check_frequency(omega: f64) -> Result<f64, QuantumError> {
    if omega.is_finite() && omega > 0.0 {
        Ok(omega)
    } else {
        Err(QuantumError::InvalidFrequency(omega))
    }
}

impl TwoModeState {
    pub fn new(xi: [Complex64; 4], scheme: Scheme, omega1: f64, omega2: f64) -> Result<Self, QuantumError> {
        let norm = norm_sqr(&xi);
        if !((norm - 1.0).abs() <= STATE_NORM_TOL) {
            return Err(QuantumError::NotNormalized { norm });
        }
        let omega1 = check_frequency(omega1)?;
        let omega2 = check_frequency(omega2)?;
        Ok(Self {
            xi,
            scheme,
            omega1,
            omega2,
            omega_p: omega1 + omega2,
        })
    }

    /// Rescales `xi` to unit norm first.
    pub fn normalized(xi: [Complex64; 4], scheme: Scheme, omega1: f64, omega2: f64) -> Result<Self, QuantumError> {
        let norm = norm_sqr(&xi).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(QuantumError::NotNormalized { norm: norm * norm });
        }
        Self::new(xi.map(|z| z / norm), scheme, omega1, omega2)
    }

    /// Both photons in the photon channels.
    pub fn photon_pair(scheme: Scheme, omega1: f64, omega2: f64) -> Result<Self, QuantumError> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self::new([one, zero, zero, zero], scheme, omega1, omega2)
    }

    pub fn xi(&self) -> &[Complex64; 4] {
        &self.xi
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    pub fn omega2(&self) -> f64 {
        self.omega2
    }

    pub fn omega_p(&self) -> f64 {
        self.omega_p
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.xi)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state dump is plain data")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

/// Serialized layout of [`TwoModeState`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateDump {
    pub basis: Vec<String>,
    pub xi_re: Vec<f64>,
    pub xi_im: Vec<f64>,
    pub scheme: Scheme,
    pub omega1_cm1: f64,
    pub omega2_cm1: f64,
    pub omega_p_cm1: f64,
}

impl From<TwoModeState> for StateDump {
    fn from(s: TwoModeState) -> Self {
        StateDump {
            basis: BASIS.iter().map(|b| b.to_string()).collect(),
            xi_re: s.xi.iter().map(|z| z.re).collect(),
            xi_im: s.xi.iter().map(|z| z.im).collect(),
            scheme: s.scheme,
            omega1_cm1: s.omega1,
            omega2_cm1: s.omega2,
            omega_p_cm1: s.omega_p,
        }
    }
}

impl TryFrom<StateDump> for TwoModeState {
    type Error = String;

    fn try_from(d: StateDump) -> Result<Self, Self::Error> {
        if d.basis != BASIS {
            return Err(format!("basis must be {BASIS:?}"));
        }
        if d.xi_re.len() != 4 || d.xi_im.len() != 4 {
            return Err("xi_re and xi_im need 4 entries".into());
        }
        let xi = [0, 1, 2, 3].map(|i| Complex64::new(d.xi_re[i], d.xi_im[i]));
        let state = TwoModeState::new(xi, d.scheme, d.omega1_cm1, d.omega2_cm1).map_err(|e| e.to_string())?;
        if state.omega_p != d.omega_p_cm1 {
            return Err(format!(
                "omega_p_cm1 = {} differs from omega1 + omega2 = {}",
                d.omega_p_cm1, state.omega_p
            ));
        }
        Ok(state)
    }
}

/// 2×2 coupler block `[[t, κ], [−κ*, t*]]`.
pub fn coupler_block(t: Complex64, kappa: Complex64) -> [[Complex64; 2]; 2] {
    [[t, kappa], [-kappa.conj(), t.conj()]]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix {
    pub m: [[Complex64; 4]; 4],
    pub t1: Complex64,
    pub kappa1: Complex64,
    pub t2: Complex64,
    pub kappa2: Complex64,
}

pub fn transfer_matrix(
    t1: Complex64,
    kappa1: Complex64,
    t2: Complex64,
    kappa2: Complex64,
) -> Result<TransferMatrix, QuantumError> {
    for (arm, t, k) in [(1u8, t1, kappa1), (2, t2, kappa2)] {
        let norm = t.norm_sqr() + k.norm_sqr();
        if !((norm - 1.0).abs() <= CHANNEL_NORM_TOL) {
            return Err(QuantumError::InvalidCoupler { arm, norm });
        }
    }
    let (t1c, k1c, t2c, k2c) = (t1.conj(), kappa1.conj(), t2.conj(), kappa2.conj());
    let m = [
        [t1 * t2, t1 * kappa2, kappa1 * t2, kappa1 * kappa2],
        [-t1 * k2c, t1 * t2c, -kappa1 * k2c, kappa1 * t2c],
        [-k1c * t2, -k1c * kappa2, t1c * t2, t1c * kappa2],
        [k1c * k2c, -k1c * t2c, -t1c * k2c, t1c * t2c],
    ];
    Ok(TransferMatrix {
        m,
        t1,
        kappa1,
        t2,
        kappa2,
    })
}

impl TransferMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        transfer_matrix(one, zero, one, zero).expect("identity couplers are lossless")
    }

    pub fn apply(&self, xi: &[Complex64; 4]) -> [Complex64; 4] {
        std::array::from_fn(|r| (0..4).map(|c| self.m[r][c] * xi[c]).sum())
    }

    /// Largest entrywise deviation of M†M from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let v: Complex64 = (0..4).map(|k| self.m[k][i].conj() * self.m[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).norm());
            }
        }
        worst
    }
}

pub fn apply_transfer(state: &TwoModeState, tm: &TransferMatrix) -> TwoModeState {
    TwoModeState {
        xi: tm.apply(&state.xi),
        ..state.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcomes {
    pub photon_photon: f64,
    pub photon_polariton: f64,
    pub polariton_polariton: f64,
}

impl Outcomes {
    pub fn total(&self) -> f64 {
        self.photon_photon + self.photon_polariton + self.polariton_polariton
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.photon_photon, self.photon_polariton, self.polariton_polariton]
    }
}

pub fn outcome_probabilities(state: &TwoModeState) -> Outcomes {
    let p = state.xi.map(|z| z.norm_sqr());
    Outcomes {
        photon_photon: p[0],
        photon_polariton: p[1] + p[2],
        polariton_polariton: p[3],
    }
}

/// The two-amplitude structure that g2 interference depends on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PairState {
    /// Amplitudes of the two indistinguishable paths, e.g. (ω₁, ω₂) and (ω₂, ω₁).
    Entangled { a: Complex64, b: Complex64 },
    /// Factorizable input: no interference term.
    Product,
}

impl PairState {
    pub fn maximally_entangled() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        PairState::Entangled { a: h, b: h }
    }

    /// `2|a||b| / (|a|² + |b|²)`, in [0, 1].
    pub fn visibility(&self) -> f64 {
        match *self {
            PairState::Product => 0.0,
            PairState::Entangled { a, b } => {
                let total = a.norm_sqr() + b.norm_sqr();
                if total > 0.0 {
                    (2.0 * a.norm() * b.norm() / total).min(1.0)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Detection coordinate for one arm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Chi {
    /// Interferometer phase in rad.
    Phase(f64),
    /// Frequency in cm⁻¹ and detection time in ps.
    Time { omega_cm1: f64, t_ps: f64 },
}

/// `F · G(χ₁, χ₂)` with `G = (1 + V cos Φ) / 2`.
///
/// Φ is `χ₁ − χ₂` for [`Scheme::EnergyTime`] and `(ω₁ − ω₂)(t₁ − t₂)` for
/// [`Scheme::Frequency`] (ω in rad/ps).
pub fn correlation_g2(
    state: &PairState,
    prefactor: f64,
    scheme: Scheme,
    chi1: Chi,
    chi2: Chi,
) -> Result<f64, QuantumError> {
    let phase = match (scheme, chi1, chi2) {
        (Scheme::EnergyTime, Chi::Phase(p1), Chi::Phase(p2)) => p1 - p2,
        (Scheme::Frequency, Chi::Time { omega_cm1: w1, t_ps: t1 }, Chi::Time { omega_cm1: w2, t_ps: t2 }) => {
            (angular_frequency_rad_ps(w1) - angular_frequency_rad_ps(w2)) * (t1 - t2)
        }
        (Scheme::EnergyTime, ..) => {
            return Err(QuantumError::SchemeMismatch {
                scheme,
                expected: "phase",
            })
        }
        (Scheme::Frequency, ..) => {
            return Err(QuantumError::SchemeMismatch {
                scheme,
                expected: "(frequency, time)",
            })
        }
    };
    Ok(prefactor * 0.5 * (1.0 + state.visibility() * phase.cos()))
}

/// `(χ₁ − χ₂, g2)` samples with χ₂ = 0.
pub fn energy_time_trace(state: &PairState, prefactor: f64, chi_diffs: &[f64]) -> Vec<(f64, f64)> {
    chi_diffs
        .iter()
        .map(|&d| {
            let g = correlation_g2(state, prefactor, Scheme::EnergyTime, Chi::Phase(d), Chi::Phase(0.0))
                .expect("energy-time arguments");
            (d, g)
        })
        .collect()
}

/// `(t₁ − t₂, g2)` samples in ps with t₂ = 0.
pub fn frequency_trace(
    state: &PairState,
    prefactor: f64,
    omega1_cm1: f64,
    omega2_cm1: f64,
    delays_ps: &[f64],
) -> Vec<(f64, f64)> {
    delays_ps
        .iter()
        .map(|&dt| {
            let c1 = Chi::Time {
                omega_cm1: omega1_cm1,
                t_ps: dt,
            };
            let c2 = Chi::Time {
                omega_cm1: omega2_cm1,
                t_ps: 0.0,
            };
            let g = correlation_g2(state, prefactor, Scheme::Frequency, c1, c2).expect("frequency arguments");
            (dt, g)
        })
        .collect()
}

/// Beat period `2π / |ω₁ − ω₂|` in ps.
pub fn beat_period_ps(omega1_cm1: f64, omega2_cm1: f64) -> f64 {
    2.0 * std::f64::consts::PI / (angular_frequency_rad_ps(omega1_cm1) - angular_frequency_rad_ps(omega2_cm1)).abs()
}

/// `(max − min) / (max + min)` of a sampled trace.
pub fn trace_visibility(trace: &[(f64, f64)]) -> f64 {
    let max = trace.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let min = trace.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if max + min > 0.0 {
        (max - min) / (max + min)
    } else {
        0.0
    }
}

/// Interior local maxima, refined by a parabola through the three samples.
pub fn trace_maxima(trace: &[(f64, f64)]) -> Vec<f64> {
    trace
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1)
        .map(|w| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let (x2, y2) = w[2];
            let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
            let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
            let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
            if a < 0.0 {
                -b / (2.0 * a)
            } else {
                x1
            }
        })
        .collect()
}

/// SPDC spectral weight F as a function of ω₁.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum SpectralWeight {
    #[default]
    Flat,
    /// Linear interpolation in ω₁ (cm⁻¹), zero outside the table.
    Tabulated { omega_cm1: Vec<f64>, weight: Vec<f64> },
}

impl SpectralWeight {
    pub fn tabulated(omega_cm1: Vec<f64>, weight: Vec<f64>) -> Result<Self, QuantumError> {
        if omega_cm1.len() != weight.len() || omega_cm1.len() < 2 {
            return Err(QuantumError::InvalidWeight("need at least two (omega, weight) rows".into()));
        }
        if omega_cm1.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(QuantumError::InvalidWeight("omega must be strictly increasing".into()));
        }
        Ok(SpectralWeight::Tabulated { omega_cm1, weight })
    }

    pub fn at(&self, omega1: f64) -> f64 {
        match self {
            SpectralWeight::Flat => 1.0,
            SpectralWeight::Tabulated { omega_cm1, weight } => {
                let i = omega_cm1.partition_point(|&w| w <= omega1);
                if i == 0 || i == omega_cm1.len() && omega1 > omega_cm1[i - 1] {
                    return 0.0;
                }
                if i == omega_cm1.len() {
                    return weight[i - 1];
                }
                let (w0, w1) = (omega_cm1[i - 1], omega_cm1[i]);
                let f = (omega1 - w0) / (w1 - w0);
                weight[i - 1] * (1.0 - f) + weight[i] * f
            }
        }
    }
}

/// 𝔖 and C for one frequency pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairCoupling {
    pub s: Complex64,
    pub c: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiphotonEntry {
    pub omega1: f64,
    pub omega2: f64,
    pub amplitude: Complex64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiphotonSpectrum {
    pub pump_cm1: f64,
    pub bandwidth_cm1: f64,
    pub entries: Vec<BiphotonEntry>,
}

/// Amplitude `F_k · 𝔖 · C` on the energy shell, globally normalized.
///
/// Pairs with `|ω₁ + ω₂ − ω_p| > bandwidth` are dropped before `context`
/// is evaluated.
pub fn build_biphoton_state<F>(
    pump_cm1: f64,
    bandwidth_cm1: f64,
    pairs: &[(f64, f64)],
    weight: &SpectralWeight,
    context: F,
) -> Result<BiphotonSpectrum, QuantumError>
where
    F: Fn(f64, f64) -> Result<PairCoupling, QuantumError> + Sync,
{
    check_frequency(pump_cm1)?;
    if !(bandwidth_cm1.is_finite() && bandwidth_cm1 >= 0.0) {
        return Err(QuantumError::InvalidBandwidth(bandwidth_cm1));
    }
    let on_shell: Vec<(f64, f64)> = pairs
        .iter()
        .copied()
        .filter(|&(w1, w2)| (w1 + w2 - pump_cm1).abs() <= bandwidth_cm1)
        .collect();
    if on_shell.is_empty() {
        return Err(QuantumError::EmptySpectrum {
            pump_cm1,
            bandwidth_cm1,
        });
    }
    let mut entries = on_shell
        .par_iter()
        .map(|&(w1, w2)| {
            let pc = context(w1, w2)?;
            let f = weight.at(w1);
            Ok(BiphotonEntry {
                omega1: w1,
                omega2: w2,
                amplitude: f * pc.s * pc.c,
                weight: f,
            })
        })
        .collect::<Result<Vec<_>, QuantumError>>()?;
    let norm = entries.iter().map(|e| e.amplitude.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(QuantumError::ZeroAmplitude);
    }
    for e in &mut entries {
        e.amplitude /= norm;
    }
    Ok(BiphotonSpectrum {
        pump_cm1,
        bandwidth_cm1,
        entries,
    })
}

/// One spectral entry after the couplers.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferredEntry {
    pub amplitude: Complex64,
    pub state: TwoModeState,
}

impl BiphotonSpectrum {
    pub fn on_shell(&self, omega1: f64, omega2: f64) -> bool {
        (omega1 + omega2 - self.pump_cm1).abs() <= self.bandwidth_cm1
    }

    /// Entries whose pair lies off the energy shell.
    pub fn shell_violations(&self) -> usize {
        self.entries.iter().filter(|e| !self.on_shell(e.omega1, e.omega2)).count()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|e| e.amplitude.norm_sqr()).sum()
    }

    /// Entry with the largest |amplitude|.
    pub fn peak(&self) -> Option<&BiphotonEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.amplitude.norm_sqr().total_cmp(&b.amplitude.norm_sqr()))
    }

    /// Amplitude of the entry nearest to `(omega1, omega2)`.
    pub fn amplitude_near(&self, omega1: f64, omega2: f64) -> Option<Complex64> {
        self.entries
            .iter()
            .min_by(|a, b| {
                let da = (a.omega1 - omega1).hypot(a.omega2 - omega2);
                let db = (b.omega1 - omega1).hypot(b.omega2 - omega2);
                da.total_cmp(&db)
            })
            .map(|e| e.amplitude)
    }

    /// Interfering amplitudes of the `(ω₁, ω₂)` and `(ω₂, ω₁)` orderings.
    pub fn pair_state(&self, omega1: f64, omega2: f64) -> Option<PairState> {
        Some(PairState::Entangled {
            a: self.amplitude_near(omega1, omega2)?,
            b: self.amplitude_near(omega2, omega1)?,
        })
    }

    /// Sends each entry's photon pair through the couplers chosen for its
    /// frequencies. Frequencies are carried over unchanged.
    pub fn transfer<F>(&self, couplers: F) -> Result<Vec<TransferredEntry>, QuantumError>
    where
        F: Fn(f64, f64) -> Result<TransferMatrix, QuantumError> + Sync,
    {
        self.entries
            .par_iter()
            .map(|e| {
                let tm = couplers(e.omega1, e.omega2)?;
                let input = TwoModeState::photon_pair(Scheme::Frequency, e.omega1, e.omega2)?;
                Ok(TransferredEntry {
                    amplitude: e.amplitude,
                    state: apply_transfer(&input, &tm),
                })
            })
            .collect()
    }
}

/// Counts transferred entries that left the energy shell of `spectrum`.
pub fn transferred_shell_violations(spectrum: &BiphotonSpectrum, transferred: &[TransferredEntry]) -> usize {
    transferred
        .iter()
        .filter(|e| !spectrum.on_shell(e.state.omega1(), e.state.omega2()))
        .count()
}

/// Pair coupling from one grating coupler per arm.
///
/// 𝔖 is taken as 1 (reduced units) and C is the sinc product of the residual
/// mismatches `Δβ − 2πm/Λ` over the two coupler lengths.
pub struct GratingContext<'a> {
    model: &'a dyn IndexModel,
    pub arm1: CouplerSpec,
    pub arm2: CouplerSpec,
    /// Sorted (ω, n_eff) pairs solved ahead of time.
    table: Vec<(f64, Complex64)>,
}

impl<'a> GratingContext<'a> {
    pub fn new(model: &'a dyn IndexModel, arm1: CouplerSpec, arm2: CouplerSpec) -> Self {
        Self {
            model,
            arm1,
            arm2,
            table: Vec::new(),
        }
    }

    /// Pre-solve n_eff on `omegas`; later lookups at exactly these values
    /// skip the mode solver.
    pub fn with_grid(mut self, omegas: &[f64]) -> Self {
        let solved = self.model.n_eff_many(omegas);
        self.table = omegas
            .iter()
            .zip(solved)
            .filter_map(|(&w, n)| n.ok().map(|n| (w, n)))
            .collect();
        self.table.sort_by(|a, b| a.0.total_cmp(&b.0));
        self
    }

    fn n_eff(&self, omega_cm1: f64) -> Result<Complex64, QuantumError> {
        match self.table.binary_search_by(|p| p.0.total_cmp(&omega_cm1)) {
            Ok(i) => Ok(self.table[i].1),
            Err(_) => Ok(self.model.n_eff(omega_cm1).map_err(CouplingError::from)?),
        }
    }

    /// Δβ − 2πm/Λ in rad/μm.
    pub fn residual_mismatch(&self, spec: &CouplerSpec, omega_cm1: f64) -> Result<f64, QuantumError> {
        let lam = wavelength_um(omega_cm1);
        let b = (self.n_eff(omega_cm1)?.re - spec.theta.sin()) / lam;
        Ok(2.0 * std::f64::consts::PI * b - grating_vector(spec))
    }

    pub fn coupling(&self, omega1: f64, omega2: f64) -> Result<PairCoupling, QuantumError> {
        let d1 = self.residual_mismatch(&self.arm1, omega1)?;
        let d2 = self.residual_mismatch(&self.arm2, omega2)?;
        Ok(PairCoupling {
            s: Complex64::new(1.0, 0.0),
            c: overlap_c(Complex64::new(1.0, 0.0), d1, d2, self.arm1.length, self.arm2.length),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_couplers_give_identity() {
        let tm = TransferMatrix::identity();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(tm.m[i][j], c(if i == j { 1.0 } else { 0.0 }, 0.0));
            }
        }
    }

    #[test]
    fn balanced_couplers_split_evenly() {
        let h = c(FRAC_1_SQRT_2, 0.0);
        let tm = transfer_matrix(h, h, h, h).unwrap();
        let s = TwoModeState::photon_pair(Scheme::Frequency, 940.0, 949.0).unwrap();
        let out = apply_transfer(&s, &tm);
        let expect = [0.5, -0.5, -0.5, 0.5];
        for (z, e) in out.xi().iter().zip(expect) {
            assert!((z - e).norm() < 1e-15);
        }
        let p = outcome_probabilities(&out);
        assert!((p.photon_photon - 0.25).abs() < 1e-12);
        assert!((p.photon_polariton - 0.5).abs() < 1e-12);
        assert!((p.polariton_polariton - 0.25).abs() < 1e-12);
    }

    #[test]
    fn full_conversion_lands_in_polariton_pair() {
        let k1 = c(0.6, 0.8);
        let k2 = c(0.0, 1.0);
        let tm = transfer_matrix(c(0.0, 0.0), k1, c(0.0, 0.0), k2).unwrap();
        let s = TwoModeState::photon_pair(Scheme::EnergyTime, 940.0, 949.0).unwrap();
        let out = apply_transfer(&s, &tm);
        assert!((out.xi()[3] - k1.conj() * k2.conj()).norm() < 1e-15);
        assert_eq!(outcome_probabilities(&out).polariton_polariton, 1.0);
    }

    #[test]
    fn lossy_coupler_rejected() {
        let err = transfer_matrix(c(0.9, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap_err();
        assert!(matches!(err, QuantumError::InvalidCoupler { arm: 1, .. }));
    }

    #[test]
    fn state_requires_normalization() {
        let z = c(0.0, 0.0);
        assert!(TwoModeState::new([c(0.5, 0.0), z, z, z], Scheme::Frequency, 1.0, 2.0).is_err());
        assert!(TwoModeState::new([c(1.0, 0.0), z, z, z], Scheme::Frequency, -1.0, 2.0).is_err());
        let s = TwoModeState::normalized([c(3.0, 0.0), c(0.0, 4.0), z, z], Scheme::Frequency, 1.0, 2.0).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        assert_eq!(s.omega_p(), 3.0);
    }

    #[test]
    fn json_round_trip() {
        let h = c(FRAC_1_SQRT_2, 0.0);
        let z = c(0.0, 0.0);
        let s = TwoModeState::new([h, z, z, h * c(0.0, 1.0)], Scheme::EnergyTime, 940.5, 949.25).unwrap();
        let text = s.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["basis"], serde_json::json!(["pp", "ps", "sp", "ss"]));
        assert_eq!(v["omega_p_cm1"], serde_json::json!(1889.75));
        assert_eq!(TwoModeState::from_json(&text).unwrap(), s);
        let broken = text.replace("1889.75", "1890.0");
        assert!(TwoModeState::from_json(&broken).is_err());
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("energy-time".parse::<Scheme>().unwrap(), Scheme::EnergyTime);
        assert_eq!("Frequency".parse::<Scheme>().unwrap(), Scheme::Frequency);
        assert!(matches!("polarization".parse::<Scheme>(), Err(QuantumError::UnknownScheme(_))));
    }

    #[test]
    fn energy_time_extremes() {
        let s = PairState::maximally_entangled();
        let g0 = correlation_g2(&s, 1.0, Scheme::EnergyTime, Chi::Phase(0.3), Chi::Phase(0.3)).unwrap();
        let gpi = correlation_g2(&s, 1.0, Scheme::EnergyTime, Chi::Phase(PI), Chi::Phase(0.0)).unwrap();
        assert!((g0 - 1.0).abs() < 1e-15);
        assert!(gpi.abs() < 1e-15);
        let p = correlation_g2(&PairState::Product, 1.0, Scheme::EnergyTime, Chi::Phase(PI), Chi::Phase(0.0)).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn scheme_argument_mismatch() {
        let s = PairState::maximally_entangled();
        let t = Chi::Time {
            omega_cm1: 900.0,
            t_ps: 0.0,
        };
        assert!(correlation_g2(&s, 1.0, Scheme::EnergyTime, t, t).is_err());
        assert!(correlation_g2(&s, 1.0, Scheme::Frequency, Chi::Phase(0.0), t).is_err());
    }

    #[test]
    fn visibility_rule() {
        let v = PairState::Entangled {
            a: c(0.6, 0.0),
            b: c(0.0, 0.8),
        }
        .visibility();
        assert!((v - 0.96).abs() < 1e-15);
        assert_eq!(
            PairState::Entangled {
                a: c(1.0, 0.0),
                b: c(0.0, 0.0)
            }
            .visibility(),
            0.0
        );
    }

    #[test]
    fn parabolic_maxima_are_exact_for_parabolas() {
        let trace: Vec<(f64, f64)> = (0..7).map(|i| i as f64 * 0.5).map(|x| (x, -(x - 1.3) * (x - 1.3))).collect();
        let m = trace_maxima(&trace);
        assert_eq!(m.len(), 1);
        assert!((m[0] - 1.3).abs() < 1e-12);
    }

    #[test]
    fn tabulated_weight_interpolates() {
        let w = SpectralWeight::tabulated(vec![900.0, 950.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(w.at(925.0), 1.5);
        assert_eq!(w.at(950.0), 2.0);
        assert_eq!(w.at(899.0), 0.0);
        assert_eq!(w.at(951.0), 0.0);
        assert!(SpectralWeight::tabulated(vec![950.0, 900.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn empty_shell_is_an_error() {
        let pairs = [(900.0, 900.0), (910.0, 905.0)];
        let err = build_biphoton_state(2000.0, 1.0, &pairs, &SpectralWeight::Flat, |_, _| {
            Ok(PairCoupling {
                s: c(1.0, 0.0),
                c: c(1.0, 0.0),
            })
        })
        .unwrap_err();
        assert!(matches!(err, QuantumError::EmptySpectrum { .. }));
    }

    #[test]
    fn flat_context_gives_flat_amplitudes() {
        let grid: Vec<f64> = (0..41).map(|i| 930.0 + 0.5 * i as f64).collect();
        let pairs: Vec<(f64, f64)> = grid.iter().flat_map(|&a| grid.iter().map(move |&b| (a, b))).collect();
        let sp = build_biphoton_state(1880.0, 0.25, &pairs, &SpectralWeight::Flat, |_, _| {
            Ok(PairCoupling {
                s: c(2.0, 0.0),
                c: c(0.0, 3.0),
            })
        })
        .unwrap();
        let n = sp.entries.len();
        assert!(n > 0);
        for e in &sp.entries {
            assert!((e.amplitude.norm() - 1.0 / (n as f64).sqrt()).abs() < 1e-14);
        }
        assert!((sp.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(sp.shell_violations(), 0);
    }
}
