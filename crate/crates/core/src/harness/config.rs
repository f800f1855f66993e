//! TOML configuration. Physical quantities are given in the units engineers
//! quote (degrees, dB, dBm, watts) and converted to SI/linear on load. Every
//! key is optional; an empty file yields the reference scenario.
//!
//! ```toml
//! num_sats = 8
//! sat_antennas = 8
//! num_users = 8
//! user_antennas = 2
//! altitude_m = 500e3
//! earth_radius_m = 6371e3
//! theta_s_deg = 5.0
//! theta_u_deg = 1.0
//! rho_w = 50.0
//! noise_dbm = -124.0
//! carrier_hz = 8e9
//! speed_of_light = 3e8
//! sat_gain_dbi = 6.0
//! ue_gain_dbi = 0.0
//! kappa_db = 12.0
//! element_spacing = 0.5
//! seed = 1
//!
//! [solver]
//! epsilon = 1e-4
//! max_iters = 200
//! alpha = 2.0
//! eps_mu = 1e-3
//!
//! [experiment]
//! name = "rate-vs-power"
//! trials = 2000
//! realizations = 10
//! constraint = "per-sat"
//!
//! [experiment.sweep]
//! rho_w = [10.0, 50.0, 100.0]
//! num_sats = [2, 4, 8]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{db_to_linear, dbm_to_watts, Budget, Constraint, Kappa, ScenarioConfig, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ApproxValidity,
    SingularRatio,
    RateVsPower,
    BaselineCompare,
    SingleSolve,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::ApproxValidity,
        ExperimentKind::SingularRatio,
        ExperimentKind::RateVsPower,
        ExperimentKind::BaselineCompare,
        ExperimentKind::SingleSolve,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::ApproxValidity => "approx-validity",
            ExperimentKind::SingularRatio => "singular-ratio",
            ExperimentKind::RateVsPower => "rate-vs-power",
            ExperimentKind::BaselineCompare => "baseline-compare",
            ExperimentKind::SingleSolve => "single-solve",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment '{s}'")))
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameter grid. Unset lists keep the scenario value; the grid is the
/// Cartesian product of the set lists, in the field order below.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_sats: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sat_antennas: Option<Vec<usize>>,
    /// Fixes `L·N`; each point uses `N = total_antennas / L`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_antennas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_users: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub user_antennas: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_w: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_s_deg: Option<Vec<f64>>,
}

impl Sweep {
    /// Grid used when a config names an experiment but gives no sweep.
    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::ApproxValidity => Sweep {
                sat_antennas: Some(vec![4, 8, 16]),
                theta_s_deg: Some(vec![10.0]),
                ..Default::default()
            },
            ExperimentKind::SingularRatio => Sweep {
                num_sats: Some(vec![2, 4, 8]),
                total_antennas: Some(32),
                theta_s_deg: Some(
                    [0.0, 0.1, 0.5]
                        .into_iter()
                        .chain((1..=20).map(f64::from))
                        .collect(),
                ),
                ..Default::default()
            },
            ExperimentKind::RateVsPower => Sweep {
                rho_w: Some(vec![10.0, 50.0, 100.0]),
                num_sats: Some(vec![2, 4, 8]),
                ..Default::default()
            },
            ExperimentKind::BaselineCompare => Sweep {
                rho_w: Some(vec![50.0]),
                ..Default::default()
            },
            ExperimentKind::SingleSolve => Sweep::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(format!("sweep: {m}")));
        let empty = |n: Option<usize>| n == Some(0);
        if empty(self.num_sats.as_ref().map(Vec::len))
            || empty(self.sat_antennas.as_ref().map(Vec::len))
            || empty(self.num_users.as_ref().map(Vec::len))
            || empty(self.user_antennas.as_ref().map(Vec::len))
            || empty(self.rho_w.as_ref().map(Vec::len))
            || empty(self.theta_s_deg.as_ref().map(Vec::len))
        {
            return fail("lists must not be empty");
        }
        if self.total_antennas.is_some() && self.sat_antennas.is_some() {
            return fail("total_antennas and sat_antennas are mutually exclusive");
        }
        if let Some(rho) = &self.rho_w {
            if rho.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return fail("rho_w entries must be > 0");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentKind,
    pub sweep: Sweep,
    /// Monte-Carlo trials per exact-rate evaluation.
    pub trials: usize,
    /// Independent user drops averaged per sweep point.
    pub realizations: usize,
    pub constraint: Constraint,
    pub seed: u64,
    /// Record wall-clock time per row (makes output run-dependent).
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("experiment.trials must be >= 1".into()));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("experiment.realizations must be >= 1".into()));
        }
        self.sweep.validate()
    }
}

/// File schema, in user-facing units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawConfig {
    pub num_sats: usize,
    pub sat_antennas: usize,
    pub num_users: usize,
    pub user_antennas: usize,
    pub altitude_m: f64,
    pub earth_radius_m: f64,
    pub theta_s_deg: f64,
    pub theta_u_deg: f64,
    pub rho_w: f64,
    pub noise_dbm: f64,
    pub carrier_hz: f64,
    pub speed_of_light: f64,
    pub sat_gain_dbi: f64,
    pub ue_gain_dbi: f64,
    pub kappa_db: f64,
    pub element_spacing: f64,
    pub seed: u64,
    pub solver: SolverOptions,
    pub experiment: RawExperiment,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            num_sats: 8,
            sat_antennas: 8,
            num_users: 8,
            user_antennas: 2,
            altitude_m: 500e3,
            earth_radius_m: 6371e3,
            theta_s_deg: 5.0,
            theta_u_deg: 1.0,
            rho_w: 50.0,
            noise_dbm: -124.0,
            carrier_hz: 8e9,
            speed_of_light: 3e8,
            sat_gain_dbi: 6.0,
            ue_gain_dbi: 0.0,
            kappa_db: 12.0,
            element_spacing: 0.5,
            seed: 1,
            solver: SolverOptions::default(),
            experiment: RawExperiment::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawExperiment {
    pub name: ExperimentKind,
    pub trials: usize,
    pub realizations: usize,
    pub constraint: Constraint,
    /// Defaults to the top-level seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub timing: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

impl Default for RawExperiment {
    fn default() -> Self {
        Self {
            name: ExperimentKind::SingleSolve,
            trials: 2000,
            realizations: 10,
            constraint: Constraint::PerSat,
            seed: None,
            timing: false,
            sweep: None,
        }
    }
}

impl RawConfig {
    /// Converts units, builds the budget and validates everything.
    pub fn resolve(&self) -> Result<(ScenarioConfig, ExperimentSpec)> {
        let e = &self.experiment;
        if !(self.rho_w > 0.0 && self.rho_w.is_finite()) {
            return Err(Error::InvalidConfig("rho_w must be > 0".into()));
        }
        if self.kappa_db.is_nan() {
            return Err(Error::InvalidConfig("kappa_db must be a number".into()));
        }
        let cfg = ScenarioConfig {
            num_sats: self.num_sats,
            sat_antennas: self.sat_antennas,
            num_users: self.num_users,
            user_antennas: self.user_antennas,
            altitude: self.altitude_m,
            earth_radius: self.earth_radius_m,
            theta_s: self.theta_s_deg.to_radians(),
            theta_u: self.theta_u_deg.to_radians(),
            budget: Budget::uniform(e.constraint, self.num_sats, self.sat_antennas.max(1), self.rho_w),
            noise_power: dbm_to_watts(self.noise_dbm),
            carrier_freq: self.carrier_hz,
            speed_of_light: self.speed_of_light,
            sat_gain: db_to_linear(self.sat_gain_dbi),
            ue_gain: db_to_linear(self.ue_gain_dbi),
            kappa: Kappa::Uniform(db_to_linear(self.kappa_db)),
            spacing: self.element_spacing,
            seed: self.seed,
            solver: self.solver.clone(),
        };
        cfg.validate()?;
        let spec = ExperimentSpec {
            name: e.name,
            sweep: e.sweep.clone().unwrap_or_else(|| Sweep::default_for(e.name)),
            trials: e.trials,
            realizations: e.realizations,
            constraint: e.constraint,
            seed: e.seed.unwrap_or(self.seed),
            timing: e.timing,
        };
        spec.validate()?;
        Ok((cfg, spec))
    }
}

pub fn parse_config(text: &str, origin: &Path) -> Result<RawConfig> {
    toml::from_str(text).map_err(|e| Error::ConfigParse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_raw_config(path: &Path) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

pub fn load_config(path: &Path) -> Result<(ScenarioConfig, ExperimentSpec)> {
    load_raw_config(path)?.resolve()
}
