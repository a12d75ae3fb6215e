//! Scenario configuration: geometry, powers, path-loss model and seed.
//!
//! All quantities are linear-scale internally (watts, linear gains). The
//! config file additionally accepts `p_max_dbm`, `noise_power_dbm` and
//! `pathloss_ref_db`; those are converted once at load time.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Total number of reflecting elements.
    pub m_total: usize,
    /// Elements at the IRS serving user 1 / user 2 in the distributed deployment.
    pub m_split: [usize; 2],
    /// Maximum transmit power per user, watts.
    pub p_max: [f64; 2],
    /// Receiver noise power, watts.
    pub noise_power: f64,
    pub ap_position: Point3,
    pub user_positions: [Point3; 2],
    pub irs_positions_distributed: [Point3; 2],
    pub irs_position_centralized: Point3,
    /// Path-loss gain at the 1 m reference distance, linear.
    pub pathloss_ref: f64,
    pub pathloss_exponent: f64,
    pub direct_links_enabled: bool,
    /// Derive the centralized channels from the distributed ones.
    pub twin_channels: bool,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m_total: 30,
            m_split: [15, 15],
            p_max: [dbm_to_watts(30.0), dbm_to_watts(30.0)],
            noise_power: dbm_to_watts(-90.0),
            ap_position: [0.0, 0.0, 1.0],
            user_positions: [[500.0, 0.0, 1.0], [-500.0, 0.0, 1.0]],
            irs_positions_distributed: [[500.0, 0.0, 2.0], [-500.0, 0.0, 2.0]],
            irs_position_centralized: [0.0, 0.0, 2.0],
            pathloss_ref: db_to_linear(-30.0),
            pathloss_exponent: 3.0,
            direct_links_enabled: true,
            twin_channels: true,
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// Same scenario with `m` elements, split as evenly as possible (user 1 gets the odd one).
    pub fn with_elements(&self, m: usize) -> Self {
        Self {
            m_total: m,
            m_split: [m.div_ceil(2), m / 2],
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            rng_seed: seed,
            ..self.clone()
        }
    }

    /// Unit-variance links, unit powers and unit noise. Reflected and direct
    /// paths are of comparable strength, which stresses the phase design.
    pub fn normalized(m: usize) -> Self {
        Self {
            p_max: [1.0, 1.0],
            noise_power: 1.0,
            pathloss_ref: 1.0,
            pathloss_exponent: 0.0,
            ..Self::default()
        }
        .with_elements(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.m_split[0] + self.m_split[1] != self.m_total {
            return bad(format!(
                "m_split {:?} does not sum to m_total {}",
                self.m_split, self.m_total
            ));
        }
        if !self.p_max.iter().all(|p| p.is_finite() && *p > 0.0) {
            return bad(format!("p_max must be positive, got {:?}", self.p_max));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return bad(format!("noise_power must be positive, got {}", self.noise_power));
        }
        if !(self.pathloss_ref.is_finite() && self.pathloss_ref > 0.0) {
            return bad(format!("pathloss_ref must be positive, got {}", self.pathloss_ref));
        }
        if !(self.pathloss_exponent.is_finite() && self.pathloss_exponent >= 0.0) {
            return bad(format!(
                "pathloss_exponent must be >= 0, got {}",
                self.pathloss_exponent
            ));
        }
        let points = [
            self.ap_position,
            self.user_positions[0],
            self.user_positions[1],
            self.irs_positions_distributed[0],
            self.irs_positions_distributed[1],
            self.irs_position_centralized,
        ];
        if !points.iter().flatten().all(|c| c.is_finite()) {
            return bad("positions must be finite".into());
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text)?;
        file.resolve()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// On-disk form: every key optional, falling back to the defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    m_total: Option<usize>,
    m_split: Option<[usize; 2]>,
    p_max: Option<[f64; 2]>,
    p_max_dbm: Option<[f64; 2]>,
    noise_power: Option<f64>,
    noise_power_dbm: Option<f64>,
    ap_position: Option<Point3>,
    user_positions: Option<[Point3; 2]>,
    irs_positions_distributed: Option<[Point3; 2]>,
    irs_position_centralized: Option<Point3>,
    pathloss_ref: Option<f64>,
    pathloss_ref_db: Option<f64>,
    pathloss_exponent: Option<f64>,
    direct_links_enabled: Option<bool>,
    twin_channels: Option<bool>,
    rng_seed: Option<u64>,
}

fn exclusive<T>(linear: Option<T>, log: Option<T>, name: &str, conv: impl Fn(T) -> T) -> Result<Option<T>> {
    match (linear, log) {
        (Some(_), Some(_)) => Err(Error::InvalidConfig(format!(
            "both {name} and its dB form are set"
        ))),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(v)) => Ok(Some(conv(v))),
        (None, None) => Ok(None),
    }
}

impl ScenarioFile {
    fn resolve(self) -> Result<ScenarioConfig> {
        let base = ScenarioConfig::default();
        let (m_total, m_split) = match (self.m_total, self.m_split) {
            (Some(m), Some(split)) => (m, split),
            (Some(m), None) => (m, [m.div_ceil(2), m / 2]),
            (None, Some(split)) => (split[0] + split[1], split),
            (None, None) => (base.m_total, base.m_split),
        };
        let p_max = exclusive(self.p_max, self.p_max_dbm, "p_max", |p| {
            [dbm_to_watts(p[0]), dbm_to_watts(p[1])]
        })?;
        let noise_power = exclusive(self.noise_power, self.noise_power_dbm, "noise_power", dbm_to_watts)?;
        let pathloss_ref = exclusive(self.pathloss_ref, self.pathloss_ref_db, "pathloss_ref", db_to_linear)?;
        let cfg = ScenarioConfig {
            m_total,
            m_split,
            p_max: p_max.unwrap_or(base.p_max),
            noise_power: noise_power.unwrap_or(base.noise_power),
            ap_position: self.ap_position.unwrap_or(base.ap_position),
            user_positions: self.user_positions.unwrap_or(base.user_positions),
            irs_positions_distributed: self
                .irs_positions_distributed
                .unwrap_or(base.irs_positions_distributed),
            irs_position_centralized: self
                .irs_position_centralized
                .unwrap_or(base.irs_position_centralized),
            pathloss_ref: pathloss_ref.unwrap_or(base.pathloss_ref),
            pathloss_exponent: self.pathloss_exponent.unwrap_or(base.pathloss_exponent),
            direct_links_enabled: self.direct_links_enabled.unwrap_or(base.direct_links_enabled),
            twin_channels: self.twin_channels.unwrap_or(base.twin_channels),
            rng_seed: self.rng_seed.unwrap_or(base.rng_seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
