//! Scenario and solver parameters in SI units, radians and linear scale.
//! Degree/dB conversions happen at the configuration boundary
//! ([`crate::harness::config`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    PerSat,
    PerAntenna,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Constraint::PerSat => "per-sat",
            Constraint::PerAntenna => "per-antenna",
        })
    }
}

/// Transmit power budgets in watts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Budget {
    /// `ρ_l` for every satellite.
    PerSat(Vec<f64>),
    /// `ρ_{l,n}` for every satellite and antenna port.
    PerAntenna(Vec<Vec<f64>>),
}

impl Budget {
    /// Every satellite gets `rho` watts. In per-antenna mode the satellite
    /// budget is split evenly over its `n` ports.
    pub fn uniform(constraint: Constraint, sats: usize, antennas: usize, rho: f64) -> Self {
        match constraint {
            Constraint::PerSat => Budget::PerSat(vec![rho; sats]),
            Constraint::PerAntenna => {
                Budget::PerAntenna(vec![vec![rho / antennas as f64; antennas]; sats])
            }
        }
    }

    pub fn constraint(&self) -> Constraint {
        match self {
            Budget::PerSat(_) => Constraint::PerSat,
            Budget::PerAntenna(_) => Constraint::PerAntenna,
        }
    }

    pub fn num_sats(&self) -> usize {
        match self {
            Budget::PerSat(r) => r.len(),
            Budget::PerAntenna(r) => r.len(),
        }
    }

    /// Total power available to satellite `l`.
    pub fn sat_total(&self, l: usize) -> f64 {
        match self {
            Budget::PerSat(r) => r[l],
            Budget::PerAntenna(r) => r[l].iter().sum(),
        }
    }

    pub fn validate(&self, sats: usize, antennas: usize) -> Result<()> {
        if self.num_sats() != sats {
            return Err(Error::InvalidConfig(format!(
                "power budget lists {} satellites, scenario has {sats}",
                self.num_sats()
            )));
        }
        let all: Vec<f64> = match self {
            Budget::PerSat(r) => r.clone(),
            Budget::PerAntenna(r) => {
                if let Some(row) = r.iter().find(|row| row.len() != antennas) {
                    return Err(Error::InvalidConfig(format!(
                        "per-antenna budget row has {} entries, satellites have {antennas} antennas",
                        row.len()
                    )));
                }
                r.iter().flatten().copied().collect()
            }
        };
        if all.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidConfig(
                "all power budgets must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Rician factors `κ_{l,k}` (linear).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kappa {
    Uniform(f64),
    PerLink(Vec<Vec<f64>>),
}

impl Kappa {
    pub fn get(&self, l: usize, k: usize) -> f64 {
        match self {
            Kappa::Uniform(v) => *v,
            Kappa::PerLink(m) => m[l][k],
        }
    }

    fn validate(&self, sats: usize, users: usize) -> Result<()> {
        let ok = match self {
            Kappa::Uniform(v) => *v >= 0.0,
            Kappa::PerLink(m) => {
                if m.len() != sats || m.iter().any(|r| r.len() != users) {
                    return Err(Error::InvalidConfig(format!(
                        "kappa matrix must be {sats}x{users}"
                    )));
                }
                m.iter().flatten().all(|v| *v >= 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("kappa must be >= 0".into()))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipsoidOptions {
    /// Stop once the certified dual gap falls below this fraction of the
    /// dual value.
    pub gap_rtol: f64,
    /// Together with `gap_rtol`: stop once the ellipsoid's size (an upper
    /// bound on the multiplier error) is below this value.
    pub mu_atol: f64,
    /// Radius of the warm-start ball around the previous multipliers,
    /// relative to their norm.
    pub warm_rtol: f64,
    /// Stop unconditionally once the ellipsoid's size falls below this
    /// fraction of the initial radius.
    pub radius_rtol: f64,
    /// Iteration cap is `max_iters_per_antenna · N`.
    pub max_iters_per_antenna: usize,
}

impl Default for EllipsoidOptions {
    fn default() -> Self {
        Self {
            gap_rtol: 1e-10,
            mu_atol: 1e-4,
            warm_rtol: 0.1,
            radius_rtol: 1e-8,
            max_iters_per_antenna: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Outer stopping tolerance on the objective decrease.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Geometric expansion factor for the multiplier search.
    pub alpha: f64,
    /// Bracket width at which the multiplier bisection may stop.
    pub eps_mu: f64,
    /// The bisection additionally runs until `μ·(ρ - power) <= slack_rtol·ρ`.
    pub slack_rtol: f64,
    pub max_expansions: usize,
    pub max_bisections: usize,
    /// Relative slack allowed when checking that the objective never rises.
    pub monotone_rtol: f64,
    pub ellipsoid: EllipsoidOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iters: 200,
            alpha: 2.0,
            eps_mu: 1e-3,
            slack_rtol: 1e-12,
            max_expansions: 60,
            max_bisections: 200,
            monotone_rtol: 1e-9,
            ellipsoid: EllipsoidOptions::default(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.epsilon > 0.0) {
            return fail("epsilon must be > 0");
        }
        if self.max_iters == 0 {
            return fail("max_iters must be >= 1");
        }
        if !(self.alpha > 1.0) {
            return fail("alpha must be > 1");
        }
        if !(self.eps_mu > 0.0) {
            return fail("eps_mu must be > 0");
        }
        if !(self.slack_rtol > 0.0) {
            return fail("slack_rtol must be > 0");
        }
        if !(self.ellipsoid.gap_rtol > 0.0) || !(self.ellipsoid.mu_atol > 0.0) || !(self.ellipsoid.warm_rtol > 0.0) {
            return fail("ellipsoid gap_rtol, mu_atol and warm_rtol must be > 0");
        }
        if !(self.ellipsoid.radius_rtol > 0.0 && self.ellipsoid.radius_rtol < 1.0) {
            return fail("ellipsoid radius_rtol must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// L
    pub num_sats: usize,
    /// N
    pub sat_antennas: usize,
    /// K
    pub num_users: usize,
    /// M
    pub user_antennas: usize,
    /// Orbit altitude h [m].
    pub altitude: f64,
    /// R_E [m].
    pub earth_radius: f64,
    /// Satellite angular half-range [rad].
    pub theta_s: f64,
    /// User angular half-range [rad].
    pub theta_u: f64,
    pub budget: Budget,
    /// σ² [W].
    pub noise_power: f64,
    /// f_c [Hz].
    pub carrier_freq: f64,
    /// ν_c [m/s].
    pub speed_of_light: f64,
    /// Satellite antenna gain [linear].
    pub sat_gain: f64,
    /// User antenna gain [linear].
    pub ue_gain: f64,
    pub kappa: Kappa,
    /// ULA element spacing [wavelengths].
    pub spacing: f64,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for ScenarioConfig {
    /// N = 8, K = 8, M = 2, L = 8, ρ = 50 W, σ² = −124 dBm, ϑ_u = 1°, ϑ_s = 5°,
    /// h = 500 km, f_c = 8 GHz, G_s = 6 dBi, G_u = 0 dBi, κ = 12 dB.
    fn default() -> Self {
        Self {
            num_sats: 8,
            sat_antennas: 8,
            num_users: 8,
            user_antennas: 2,
            altitude: 500e3,
            earth_radius: 6371e3,
            theta_s: 5f64.to_radians(),
            theta_u: 1f64.to_radians(),
            budget: Budget::PerSat(vec![50.0; 8]),
            noise_power: dbm_to_watts(-124.0),
            carrier_freq: 8e9,
            speed_of_light: 3e8,
            sat_gain: db_to_linear(6.0),
            ue_gain: db_to_linear(0.0),
            kappa: Kappa::Uniform(db_to_linear(12.0)),
            spacing: 0.5,
            seed: 1,
            solver: SolverOptions::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        for (name, v) in [
            ("num_sats", self.num_sats),
            ("sat_antennas", self.sat_antennas),
            ("num_users", self.num_users),
            ("user_antennas", self.user_antennas),
        ] {
            if v == 0 {
                return fail(format!("{name} must be >= 1"));
            }
        }
        for (name, v) in [
            ("altitude", self.altitude),
            ("earth_radius", self.earth_radius),
            ("noise_power", self.noise_power),
            ("carrier_freq", self.carrier_freq),
            ("speed_of_light", self.speed_of_light),
            ("sat_gain", self.sat_gain),
            ("ue_gain", self.ue_gain),
            ("spacing", self.spacing),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive and finite"));
            }
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        for (name, v) in [("theta_s", self.theta_s), ("theta_u", self.theta_u)] {
            if !(0.0..half_pi).contains(&v) {
                return fail(format!("{name} must lie in [0, 90) degrees"));
            }
        }
        self.budget.validate(self.num_sats, self.sat_antennas)?;
        self.kappa.validate(self.num_sats, self.num_users)?;
        self.solver.validate()
    }

    pub fn constraint(&self) -> Constraint {
        self.budget.constraint()
    }
}
