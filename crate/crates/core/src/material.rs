//! Lorentz-oscillator permittivity of a lossy polar dielectric.
//!
//! All spectral quantities are wavenumbers in cm⁻¹. The single damping
//! constant `gamma_cm1` is the phonon damping rate, quoted in the literature
//! as either γ or Γ.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUILTIN_MATERIALS: &str = include_str!("../data/materials.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("invalid material parameters for {name:?}: {reason}")]
    Invalid { name: String, reason: String },

    #[error("permittivity pole at omega = {omega_cm1} cm^-1 (omega_TO with zero damping)")]
    Pole { omega_cm1: f64 },

    #[error("negative frequency {omega_cm1} cm^-1")]
    NegativeFrequency { omega_cm1: f64 },

    #[error("unknown material {0:?}")]
    NotFound(String),

    #[error("cannot read material file {path}: {reason}")]
    Io { path: String, reason: String },

    #[error("malformed material JSON: {0}")]
    Parse(String),
}

/// On-disk representation, one object per material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialRecord {
    pub name: String,
    pub eps_inf: f64,
    pub omega_lo_cm1: f64,
    pub omega_to_cm1: f64,
    pub gamma_cm1: f64,
}

/// Validated single-oscillator parameters. Construct through [`MaterialParams::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaterialRecord", into = "MaterialRecord")]
pub struct MaterialParams {
    name: String,
    eps_inf: f64,
    omega_lo: f64,
    omega_to: f64,
    gamma: f64,
}

impl MaterialParams {
    pub fn new(
        name: impl Into<String>,
        eps_inf: f64,
        omega_lo: f64,
        omega_to: f64,
        gamma: f64,
    ) -> Result<Self, MaterialError> {
        let name = name.into();
        let invalid = |reason: &str| MaterialError::Invalid {
            name: name.clone(),
            reason: reason.to_string(),
        };
        if ![eps_inf, omega_lo, omega_to, gamma].iter().all(|v| v.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        if eps_inf <= 0.0 {
            return Err(invalid("eps_inf must be positive"));
        }
        if omega_to <= 0.0 {
            return Err(invalid("omega_TO must be positive"));
        }
        if omega_lo <= omega_to {
            return Err(invalid("omega_LO must exceed omega_TO"));
        }
        if gamma < 0.0 {
            return Err(invalid("damping must be non-negative"));
        }
        Ok(Self {
            name,
            eps_inf,
            omega_lo,
            omega_to,
            gamma,
        })
    }

    /// 6H-SiC: ω_LO = 969, ω_TO = 793, γ = 4.76 cm⁻¹, ε_∞ = 6.7.
    pub fn silicon_carbide() -> Self {
        Self::new("SiC", 6.7, 969.0, 793.0, 4.76).expect("built-in SiC parameters are valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eps_inf(&self) -> f64 {
        self.eps_inf
    }

    pub fn omega_lo(&self) -> f64 {
        self.omega_lo
    }

    pub fn omega_to(&self) -> f64 {
        self.omega_to
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Same oscillator with a different damping constant.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self, MaterialError> {
        Self::new(self.name.clone(), self.eps_inf, self.omega_lo, self.omega_to, gamma)
    }

    /// Same oscillator with γ = 0.
    pub fn lossless(&self) -> Self {
        Self {
            gamma: 0.0,
            ..self.clone()
        }
    }

    pub fn from_json_str(json: &str) -> Result<Self, MaterialError> {
        serde_json::from_str(json).map_err(|e| MaterialError::Parse(e.to_string()))
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, MaterialError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| MaterialError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_record(&self) -> MaterialRecord {
        self.clone().into()
    }
}

impl TryFrom<MaterialRecord> for MaterialParams {
    type Error = MaterialError;

    fn try_from(r: MaterialRecord) -> Result<Self, Self::Error> {
        Self::new(r.name, r.eps_inf, r.omega_lo_cm1, r.omega_to_cm1, r.gamma_cm1)
    }
}

impl From<MaterialParams> for MaterialRecord {
    fn from(p: MaterialParams) -> Self {
        Self {
            name: p.name,
            eps_inf: p.eps_inf,
            omega_lo_cm1: p.omega_lo,
            omega_to_cm1: p.omega_to,
            gamma_cm1: p.gamma,
        }
    }
}

/// Complex relative permittivity sampled at one wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Permittivity {
    pub value: Complex64,
    pub at_omega: f64,
}

/// ε(ω) = ε_∞ [1 + (ω_LO² − ω_TO²) / (ω_TO² − ω² − iγω)].
pub fn permittivity(params: &MaterialParams, omega: f64) -> Result<Permittivity, MaterialError> {
    if omega < 0.0 || omega.is_nan() {
        return Err(MaterialError::NegativeFrequency { omega_cm1: omega });
    }
    let denom = Complex64::new(
        params.omega_to * params.omega_to - omega * omega,
        -params.gamma * omega,
    );
    if denom.re == 0.0 && denom.im == 0.0 {
        return Err(MaterialError::Pole { omega_cm1: omega });
    }
    let strength = params.omega_lo * params.omega_lo - params.omega_to * params.omega_to;
    let value = params.eps_inf * (Complex64::new(1.0, 0.0) + strength / denom);
    Ok(Permittivity {
        value,
        at_omega: omega,
    })
}

/// The interval (ω_TO, ω_LO) where Re ε < 0 for weak damping.
pub fn reststrahlen_band(params: &MaterialParams) -> (f64, f64) {
    (params.omega_to, params.omega_lo)
}

/// Named material sets: the compiled-in defaults plus anything loaded from JSON.
#[derive(Debug, Clone, Default)]
pub struct MaterialRegistry {
    entries: BTreeMap<String, MaterialParams>,
}

impl MaterialRegistry {
    pub fn builtin() -> Self {
        let mut reg = Self::default();
        reg.extend_from_json(BUILTIN_MATERIALS)
            .expect("embedded material table is valid");
        reg
    }

    /// Accepts either a single material object or an array of them.
    pub fn extend_from_json(&mut self, json: &str) -> Result<(), MaterialError> {
        let value: serde_json::Value =
            serde_json::from_str(json).map_err(|e| MaterialError::Parse(e.to_string()))?;
        let items = match value {
            serde_json::Value::Array(items) => items,
            other => vec![other],
        };
        for item in items {
            let params: MaterialParams =
                serde_json::from_value(item).map_err(|e| MaterialError::Parse(e.to_string()))?;
            self.insert(params);
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: impl AsRef<Path>) -> Result<(), MaterialError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| MaterialError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        self.extend_from_json(&text)
    }

    pub fn insert(&mut self, params: MaterialParams) {
        self.entries.insert(params.name().to_string(), params);
    }

    pub fn get(&self, name: &str) -> Result<&MaterialParams, MaterialError> {
        self.entries
            .get(name)
            .ok_or_else(|| MaterialError::NotFound(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Resolve `spec` as a registry name first, then as a path to a JSON file.
    pub fn resolve(&self, spec: &str) -> Result<MaterialParams, MaterialError> {
        if let Ok(p) = self.get(spec) {
            return Ok(p.clone());
        }
        let path = Path::new(spec);
        if path.exists() {
            return MaterialParams::from_json_file(path);
        }
        Err(MaterialError::NotFound(spec.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sic() -> MaterialParams {
        MaterialParams::silicon_carbide()
    }

    #[test]
    fn high_frequency_limit_is_eps_inf() {
        let e = permittivity(&sic(), 1e6).unwrap().value;
        assert!((e - Complex64::new(6.7, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn static_limit_is_lyddane_sachs_teller() {
        let e = permittivity(&sic(), 0.0).unwrap().value;
        let expected = 6.7 * 969.0_f64.powi(2) / 793.0_f64.powi(2);
        assert_eq!(e.im, 0.0);
        assert!((e.re - expected).abs() < 1e-12);
        assert!((e.re - 10.004).abs() < 1e-3);
    }

    #[test]
    fn negative_inside_band() {
        for i in 1..200 {
            let w = 793.0 + 176.0 * i as f64 / 200.0;
            assert!(permittivity(&sic(), w).unwrap().value.re < 0.0, "omega {w}");
        }
    }

    #[test]
    fn lossless_zero_crossing_at_lo() {
        let e = permittivity(&sic().lossless(), 969.0).unwrap().value;
        assert!(e.re.abs() < 1e-9);
    }

    #[test]
    fn pole_is_an_error_not_a_panic() {
        let err = permittivity(&sic().lossless(), 793.0).unwrap_err();
        assert_eq!(err, MaterialError::Pole { omega_cm1: 793.0 });
        // with damping the same point is finite
        assert!(permittivity(&sic(), 793.0).unwrap().value.is_finite());
    }

    #[test]
    fn rejects_degenerate_band() {
        assert!(MaterialParams::new("bad", 6.7, 800.0, 800.0, 1.0).is_err());
        assert!(MaterialParams::new("bad", 6.7, 700.0, 800.0, 1.0).is_err());
        assert!(MaterialParams::new("bad", -1.0, 900.0, 800.0, 1.0).is_err());
        assert!(MaterialParams::new("bad", 6.7, 900.0, 800.0, -1.0).is_err());
    }

    #[test]
    fn band_endpoints() {
        assert_eq!(reststrahlen_band(&sic()), (793.0, 969.0));
    }

    #[test]
    fn registry_roundtrip() {
        let reg = MaterialRegistry::builtin();
        assert_eq!(reg.get("SiC").unwrap(), &sic());
        let json = r#"{ "name": "X", "eps_inf": 2.0, "omega_lo_cm1": 500, "omega_to_cm1": 400, "gamma_cm1": 0 }"#;
        let mut reg = reg;
        reg.extend_from_json(json).unwrap();
        assert_eq!(reg.get("X").unwrap().omega_lo(), 500.0);
        assert!(reg.get("Y").is_err());
        let bad = r#"{ "name": "Z", "eps_inf": 2.0, "omega_lo_cm1": 300, "omega_to_cm1": 400, "gamma_cm1": 0 }"#;
        assert!(matches!(reg.extend_from_json(bad), Err(MaterialError::Parse(_))));
    }

    #[test]
    fn record_serializes_with_unit_suffixes() {
        let v = serde_json::to_value(sic()).unwrap();
        assert_eq!(v["omega_lo_cm1"], 969.0);
        assert_eq!(v["gamma_cm1"], 4.76);
    }
}
