//! System configuration.
//!
//! Configuration files are TOML. Physical quantities are SI unless the key carries a
//! `_dbm`, `_db` or `_dbm_hz` suffix. Unknown keys are rejected so that a typo never
//! silently falls back to a default.
//!
//! ```toml
//! carrier_freq_hz = 12.7e9
//! subcarrier_spacing_hz = 120e3
//! num_subcarriers = 1024
//! power_budget_dbm = 50.0
//! num_sats = 4
//! num_uts = 16
//! num_rfc = 8
//! panel_dims = [16, 16]
//!
//! [atmosphere]
//! model = "zenith_scaled"
//! zenith_loss_db = 0.5
//!
//! [pdd]
//! rho0 = 1.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atmospheric absorption loss per link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum AtmosphereModel {
    /// The same loss on every link.
    Constant { loss_db: f64 },
    /// `zenith_loss_db / sin(ground elevation)`.
    ZenithScaled { zenith_loss_db: f64 },
}

impl Default for AtmosphereModel {
    fn default() -> Self {
        AtmosphereModel::ZenithScaled { zenith_loss_db: 0.5 }
    }
}

impl AtmosphereModel {
    pub fn loss_db(&self, elevation_rad: f64) -> f64 {
        match *self {
            AtmosphereModel::Constant { loss_db } => loss_db,
            AtmosphereModel::ZenithScaled { zenith_loss_db } => zenith_loss_db / elevation_rad.sin().max(1e-3),
        }
    }
}

/// Tropospheric scintillation loss per link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScintillationModel {
    Constant {
        loss_db: f64,
    },
    /// Zero-mean Gaussian loss in dB (log-normal in linear scale), drawn once per link.
    LogNormal {
        sigma_db: f64,
    },
}

impl Default for ScintillationModel {
    fn default() -> Self {
        ScintillationModel::Constant { loss_db: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relative objective change below which the WMMSE loops stop.
    pub wmmse_tol: f64,
    pub wmmse_max_iters: usize,
    /// Relative power tolerance of the dual bisection.
    pub bisect_tol: f64,
    /// Gauss-Seidel sweeps over satellites per centralized beamformer update.
    pub bcd_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            wmmse_tol: 1e-4,
            wmmse_max_iters: 100,
            bisect_tol: 1e-12,
            bcd_sweeps: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PddConfig {
    pub rho0: f64,
    pub delta: f64,
    pub q: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PddConfig {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            delta: 2.0,
            q: 0.9,
            tol: 1e-6,
            max_iters: 200,
        }
    }
}

fn default_noise_psd() -> f64 {
    -173.855
}
fn default_noise_figure() -> f64 {
    10.0
}
fn default_earth_radius() -> f64 {
    6.4e6
}
fn default_orbit_height() -> f64 {
    5.0e5
}
fn default_area_radius() -> f64 {
    2.0e5
}
fn default_rician_range() -> (f64, f64) {
    (15.0, 20.0)
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub carrier_freq_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub num_subcarriers: usize,
    /// Per-satellite power budget over the whole band.
    pub power_budget_dbm: f64,
    #[serde(default = "default_noise_psd")]
    pub noise_psd_dbm_hz: f64,
    #[serde(default = "default_noise_figure")]
    pub noise_figure_db: f64,
    pub num_sats: usize,
    pub num_uts: usize,
    pub num_rfc: usize,
    /// `(N_h, N_v)` elements of the planar array.
    pub panel_dims: (usize, usize),
    #[serde(default = "default_earth_radius")]
    pub earth_radius_m: f64,
    #[serde(default = "default_orbit_height")]
    pub orbit_height_m: f64,
    #[serde(default = "default_area_radius")]
    pub service_area_radius_m: f64,
    /// Radius of the cap (at orbit height) over which satellites are placed. Zero is allowed.
    #[serde(default = "default_area_radius")]
    pub sat_area_radius_m: f64,
    #[serde(default = "default_rician_range")]
    pub rician_range_db: (f64, f64),
    #[serde(default)]
    pub atmosphere: AtmosphereModel,
    #[serde(default)]
    pub scintillation: ScintillationModel,
    /// Evaluate path loss at the carrier only instead of per subcarrier.
    #[serde(default)]
    pub flat_gamma: bool,
    #[serde(default = "default_seed")]
    pub rng_seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub pdd: PddConfig,
}

impl SystemConfig {
    /// The Ku-band reference system: 4 satellites, 16 UTs, 8 RF chains, 16x16 panels.
    pub fn reference() -> Self {
        Self {
            carrier_freq_hz: 12.7e9,
            subcarrier_spacing_hz: 120e3,
            num_subcarriers: 1024,
            power_budget_dbm: 50.0,
            noise_psd_dbm_hz: default_noise_psd(),
            noise_figure_db: default_noise_figure(),
            num_sats: 4,
            num_uts: 16,
            num_rfc: 8,
            panel_dims: (16, 16),
            earth_radius_m: default_earth_radius(),
            orbit_height_m: default_orbit_height(),
            service_area_radius_m: default_area_radius(),
            sat_area_radius_m: default_area_radius(),
            rician_range_db: default_rician_range(),
            atmosphere: AtmosphereModel::default(),
            scintillation: ScintillationModel::default(),
            flat_gamma: false,
            rng_seed: default_seed(),
            solver: SolverConfig::default(),
            pdd: PddConfig::default(),
        }
    }

    /// Number of UTs served per satellite, `min(U, N_RF)`.
    pub fn served_per_sat(&self) -> usize {
        self.num_uts.min(self.num_rfc)
    }

    pub fn num_antennas(&self) -> usize {
        self.panel_dims.0 * self.panel_dims.1
    }

    pub fn wavelength_m(&self) -> f64 {
        299_792_458.0 / self.carrier_freq_hz
    }

    /// Per-satellite, per-subcarrier power budget in watts.
    pub fn power_per_subcarrier_w(&self) -> f64 {
        10f64.powf(self.power_budget_dbm / 10.0 - 3.0) / self.num_subcarriers as f64
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(key: &str, reason: impl Into<String>) -> Error {
            Error::Validation {
                key: key.to_string(),
                reason: reason.into(),
            }
        }
        fn positive(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(key, format!("must be finite and > 0, got {v}")))
            }
        }
        fn at_least_one(key: &str, v: usize) -> Result<()> {
            if v >= 1 {
                Ok(())
            } else {
                Err(bad(key, "must be >= 1"))
            }
        }

        positive("carrier_freq_hz", self.carrier_freq_hz)?;
        positive("subcarrier_spacing_hz", self.subcarrier_spacing_hz)?;
        at_least_one("num_subcarriers", self.num_subcarriers)?;
        at_least_one("num_sats", self.num_sats)?;
        at_least_one("num_uts", self.num_uts)?;
        at_least_one("num_rfc", self.num_rfc)?;
        at_least_one("panel_dims", self.panel_dims.0)?;
        at_least_one("panel_dims", self.panel_dims.1)?;
        positive("earth_radius_m", self.earth_radius_m)?;
        positive("orbit_height_m", self.orbit_height_m)?;
        positive("service_area_radius_m", self.service_area_radius_m)?;
        if !(self.sat_area_radius_m.is_finite() && self.sat_area_radius_m >= 0.0) {
            return Err(bad("sat_area_radius_m", "must be finite and >= 0"));
        }
        for (key, v) in [
            ("power_budget_dbm", self.power_budget_dbm),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("noise_figure_db", self.noise_figure_db),
        ] {
            if !v.is_finite() {
                return Err(bad(key, "must be finite"));
            }
        }
        let (lo, hi) = self.rician_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(bad("rician_range_db", format!("need lo <= hi, got ({lo}, {hi})")));
        }
        if let ScintillationModel::LogNormal { sigma_db } = self.scintillation {
            if !(sigma_db.is_finite() && sigma_db >= 0.0) {
                return Err(bad("scintillation.sigma_db", "must be >= 0"));
            }
        }
        positive("solver.wmmse_tol", self.solver.wmmse_tol)?;
        positive("solver.bisect_tol", self.solver.bisect_tol)?;
        at_least_one("solver.bcd_sweeps", self.solver.bcd_sweeps)?;
        positive("pdd.rho0", self.pdd.rho0)?;
        if !(self.pdd.delta > 1.0) {
            return Err(bad("pdd.delta", "must be > 1"));
        }
        if !(self.pdd.q > 0.0 && self.pdd.q < 1.0) {
            return Err(bad("pdd.q", "must lie in (0, 1)"));
        }
        positive("pdd.tol", self.pdd.tol)?;
        Ok(())
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SystemConfig::from_toml_str(&text)
}
