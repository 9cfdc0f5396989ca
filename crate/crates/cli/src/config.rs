//! Run configuration: built-in defaults, overridden by a JSON config file,
//! overridden by command-line flags.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lrsphp::material::{MaterialError, MaterialRegistry};
use lrsphp::quantum::{Scheme, DEFAULT_PUMP_BANDWIDTH_CM1};
use lrsphp::MaterialParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::Format;

/// `min:max:count`, inclusive of both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub const fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn validate(&self, what: &str) -> Result<(), CliError> {
        if self.count == 0 {
            return Err(CliError::config(format!("{what} grid is empty")));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(CliError::config(format!(
                "{what} grid needs min < max (got {}:{})",
                self.min, self.max
            )));
        }
        if self.count < 2 {
            return Err(CliError::config(format!("{what} grid needs at least 2 points")));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected min:max:count, got {s:?}"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| format!("{:?}: {e}", parts[2]))?;
        Ok(GridSpec::new(num(parts[0])?, num(parts[1])?, count))
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.count)
    }
}

/// Grids may be given as `"min:max:count"` or `{"min":..,"max":..,"count":..}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum GridInput {
    Text(String),
    Table { min: f64, max: f64, count: usize },
}

fn de_grid<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<GridSpec>, D::Error> {
    match Option::<GridInput>::deserialize(d)? {
        None => Ok(None),
        Some(GridInput::Table { min, max, count }) => Ok(Some(GridSpec::new(min, max, count))),
        Some(GridInput::Text(s)) => s.parse().map(Some).map_err(serde::de::Error::custom),
    }
}

/// Every field optional; used for both the config file and the flag layer.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialConfig {
    pub material: Option<String>,
    pub thickness_um: Option<f64>,
    pub eps_d: Option<f64>,
    pub theta_rad: Option<f64>,
    pub grating_period_um: Option<f64>,
    pub grating_order: Option<i32>,
    pub coupling_gl: Option<f64>,
    pub coupler_length_um: Option<f64>,
    pub b_level: Option<f64>,
    pub pump_cm1: Option<f64>,
    pub pump_bandwidth_cm1: Option<f64>,
    pub omega_cm1: Option<f64>,
    #[serde(deserialize_with = "de_grid")]
    pub grid: Option<GridSpec>,
    #[serde(deserialize_with = "de_grid")]
    pub theta_grid: Option<GridSpec>,
    pub scheme: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        PartialConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: PartialConfig) -> PartialConfig {
        overlay!(
            self,
            top,
            material,
            thickness_um,
            eps_d,
            theta_rad,
            grating_period_um,
            grating_order,
            coupling_gl,
            coupler_length_um,
            b_level,
            pump_cm1,
            pump_bandwidth_cm1,
            omega_cm1,
            grid,
            theta_grid,
            scheme,
            out,
            format
        )
    }
}

/// Fully resolved configuration.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub material_name: String,
    #[serde(skip)]
    pub material: MaterialParams,
    pub thickness_um: f64,
    pub eps_d: f64,
    pub theta_rad: f64,
    pub grating_period_um: f64,
    pub grating_order: i32,
    pub coupling_gl: f64,
    pub coupler_length_um: f64,
    pub b_level: f64,
    pub pump_cm1: Option<f64>,
    pub pump_bandwidth_cm1: f64,
    pub omega_cm1: f64,
    /// Primary sweep axis; each subcommand has its own default.
    pub grid: Option<GridSpec>,
    pub theta_grid: GridSpec,
    pub scheme: Scheme,
    pub out: PathBuf,
    pub format: Format,
}

pub const DEFAULT_MATERIAL: &str = "SiC";
pub const DEFAULT_THICKNESS_UM: f64 = 2.0;
pub const DEFAULT_THETA_RAD: f64 = PI / 9.0;
pub const DEFAULT_B_LEVEL: f64 = 0.1;
pub const DEFAULT_COUPLER_LENGTH_UM: f64 = 100.0;
pub const DEFAULT_GL: f64 = PI / 2.0;
pub const DEFAULT_OMEGA_CM1: f64 = 900.0;
pub const DEFAULT_THETA_GRID: GridSpec = GridSpec::new(0.0, 2.0 * PI / 9.0, 9);

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(format!("{name} must be positive (got {v})")))
    }
}

fn load_material(spec: &str) -> Result<MaterialParams, CliError> {
    MaterialRegistry::builtin().resolve(spec).map_err(|e| match e {
        MaterialError::Io { path, reason } => CliError::Io {
            path: path.into(),
            source: std::io::Error::other(reason),
        },
        other => CliError::config(other.to_string()),
    })
}

impl RunConfig {
    pub fn resolve(p: PartialConfig) -> Result<Self, CliError> {
        let material_name = p.material.unwrap_or_else(|| DEFAULT_MATERIAL.to_string());
        let material = load_material(&material_name)?;
        let grating_order = p.grating_order.unwrap_or(1);
        if grating_order <= 0 {
            return Err(CliError::config("grating order must be positive"));
        }
        let b_level = positive("B level", p.b_level.unwrap_or(DEFAULT_B_LEVEL))?;
        let grating_period_um = positive(
            "grating period",
            p.grating_period_um.unwrap_or(grating_order as f64 / b_level),
        )?;
        let theta_rad = p.theta_rad.unwrap_or(DEFAULT_THETA_RAD);
        if !(theta_rad.abs() < PI / 2.0) {
            return Err(CliError::config("|theta| must be below pi/2"));
        }
        let coupling_gl = p.coupling_gl.unwrap_or(DEFAULT_GL);
        if !(coupling_gl.is_finite() && coupling_gl >= 0.0) {
            return Err(CliError::config("coupling gL must be non-negative"));
        }
        let pump_cm1 = match p.pump_cm1 {
            Some(v) => Some(positive("pump", v)?),
            None => None,
        };
        let pump_bandwidth_cm1 = p.pump_bandwidth_cm1.unwrap_or(DEFAULT_PUMP_BANDWIDTH_CM1);
        if !(pump_bandwidth_cm1.is_finite() && pump_bandwidth_cm1 >= 0.0) {
            return Err(CliError::config("pump bandwidth must be non-negative"));
        }
        if let Some(g) = &p.grid {
            g.validate("sweep")?;
        }
        let theta_grid = p.theta_grid.unwrap_or(DEFAULT_THETA_GRID);
        theta_grid.validate("theta")?;
        if theta_grid.min.abs().max(theta_grid.max.abs()) >= PI / 2.0 {
            return Err(CliError::config("theta grid must stay inside (-pi/2, pi/2)"));
        }
        let scheme = match p.scheme {
            Some(s) => s.parse::<Scheme>().map_err(|e| CliError::config(e.to_string()))?,
            None => Scheme::Frequency,
        };
        Ok(RunConfig {
            material_name,
            material,
            thickness_um: positive("thickness", p.thickness_um.unwrap_or(DEFAULT_THICKNESS_UM))?,
            eps_d: positive("cladding permittivity", p.eps_d.unwrap_or(1.0))?,
            theta_rad,
            grating_period_um,
            grating_order,
            coupling_gl,
            coupler_length_um: positive("coupler length", p.coupler_length_um.unwrap_or(DEFAULT_COUPLER_LENGTH_UM))?,
            b_level,
            pump_cm1,
            pump_bandwidth_cm1,
            omega_cm1: positive("omega", p.omega_cm1.unwrap_or(DEFAULT_OMEGA_CM1))?,
            grid: p.grid,
            theta_grid,
            scheme,
            out: p.out.unwrap_or_else(|| PathBuf::from(".")),
            format: p.format.unwrap_or_default(),
        })
    }

    pub fn grid_or(&self, default: GridSpec) -> GridSpec {
        self.grid.unwrap_or(default)
    }
}
