//! Reference precoders: matched filter (MRT), regularised zero-forcing (RZF),
//! the cooperative MMSE initialiser, and non-cooperative MRT where every
//! satellite serves one user.
//!
//! Cooperative baselines share the `√β` power split of
//! [`crate::solver::scale_to_budget`] and spend the full budget.

use serde::{Deserialize, Serialize};

use crate::channel::EffectiveChannelSet;
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::linalg::{hermitian_part, hstack, identity, solve_hpd, split_columns, CMat, C64};
use crate::rate::PrecoderSet;
use crate::scenario::Budget;
use crate::solver::{init_precoders, scale_to_budget};

/// Serving satellite of every user.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub serving_sat: Vec<usize>,
}

/// `W_{l,k} ∝ H̃_{l,k}ᴴ`.
pub fn mrt_precoding(eff: &EffectiveChannelSet, budget: &Budget) -> Result<PrecoderSet> {
    budget.validate(eff.num_sats(), eff.sat_antennas())?;
    let dirs = eff
        .h
        .iter()
        .map(|row| row.iter().map(|h| h.adjoint()).collect())
        .collect();
    Ok(scale_to_budget(dirs, budget, eff))
}

/// `W_{l,k} ∝ (Σ_i H̃_{l,i}ᴴ H̃_{l,i} + (Kσ²/ρ_l) I)⁻¹ H̃_{l,k}ᴴ`.
pub fn rzf_precoding(eff: &EffectiveChannelSet, budget: &Budget, sigma2: f64) -> Result<PrecoderSet> {
    budget.validate(eff.num_sats(), eff.sat_antennas())?;
    let k = eff.num_users() as f64;
    let loading: Vec<f64> = (0..eff.num_sats())
        .map(|l| k * sigma2 / budget.sat_total(l))
        .collect();
    let dirs = regularized_inverse(eff, &loading)?;
    Ok(scale_to_budget(dirs, budget, eff))
}

/// The solver's MMSE starting point as a stand-alone baseline.
pub fn mmse_precoding(eff: &EffectiveChannelSet, budget: &Budget, sigma2: f64) -> Result<PrecoderSet> {
    init_precoders(eff, budget, sigma2)
}

pub(crate) fn regularized_inverse(eff: &EffectiveChannelSet, loading: &[f64]) -> Result<Vec<Vec<CMat>>> {
    let n = eff.sat_antennas();
    (0..eff.num_sats())
        .map(|l| {
            let mut gram = identity(n).scale(loading[l]);
            for h in &eff.h[l] {
                gram += h.adjoint() * h;
            }
            let rhs = hstack(&eff.h[l].iter().map(|h| h.adjoint()).collect::<Vec<_>>());
            let x = solve_hpd(&hermitian_part(&gram), &rhs, "regularised precoder system")?;
            Ok(split_columns(&x, eff.user_antennas()))
        })
        .collect()
}

/// Greedy assignment: users in index order take the closest satellite still
/// free; ties go to the lower satellite index.
pub fn noncoop_assignment(geom: &Geometry) -> Result<Assignment> {
    assign_closest(&geom.dist)
}

/// [`noncoop_assignment`] on a distance table indexed `[l][k]`.
pub fn assign_closest(dist: &[Vec<f64>]) -> Result<Assignment> {
    let sats = dist.len();
    let users = dist.first().map_or(0, |r| r.len());
    if sats < users {
        return Err(Error::TooFewSatellites { sats, users });
    }
    let mut free = vec![true; sats];
    let mut serving_sat = Vec::with_capacity(users);
    for k in 0..users {
        let mut best: Option<usize> = None;
        for l in (0..sats).filter(|&l| free[l]) {
            if best.is_none_or(|b| dist[l][k] < dist[b][k]) {
                best = Some(l);
            }
        }
        let l = best.expect("a free satellite remains while sats >= users");
        free[l] = false;
        serving_sat.push(l);
    }
    Ok(Assignment { serving_sat })
}

/// Each serving satellite sends MRT toward its user with its whole budget;
/// other precoders are zero.
pub fn noncoop_mrt_precoding(eff: &EffectiveChannelSet, assignment: &Assignment, budget: &Budget) -> Result<PrecoderSet> {
    budget.validate(eff.num_sats(), eff.sat_antennas())?;
    if assignment.serving_sat.len() != eff.num_users() || assignment.serving_sat.iter().any(|&l| l >= eff.num_sats()) {
        return Err(Error::Shape("assignment does not match the channel set".into()));
    }
    let mut pre = PrecoderSet::zeros(eff.num_users(), eff.sat_antennas(), eff.user_antennas(), budget.clone());
    for (k, &l) in assignment.serving_sat.iter().enumerate() {
        let mut w = eff.h[l][k].adjoint();
        match budget {
            Budget::PerSat(rho) => {
                let norm2 = w.norm_squared();
                if norm2 > 0.0 {
                    w *= C64::from((rho[l] / norm2).sqrt());
                }
            }
            Budget::PerAntenna(rho) => {
                for n in 0..w.nrows() {
                    let norm2 = w.row(n).norm_squared();
                    if norm2 > 0.0 {
                        w.row_mut(n).scale_mut((rho[l][n] / norm2).sqrt());
                    }
                }
            }
        }
        pre.w[l][k] = w;
    }
    Ok(pre)
}
