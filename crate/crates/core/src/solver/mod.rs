//! Weighted-MMSE block coordinate descent for the approximate sum rate.
//!
//! Each user sees the signal covariance `Σ_l G_{l,k} G_{l,k}ᴴ` with
//! `G_{l,k} = H̃_{l,k} W_{l,k}`, which is the covariance of a single
//! `M × LM` "virtual" channel-times-precoder `𝒢_k = [G_{1,k} … G_{L,k}]`.
//! The rate `log₂|I + 𝒢_kᴴ R̄_k⁻¹ 𝒢_k|` (with `R̄_k` the interference plus
//! noise) is therefore an ordinary MIMO rate with `LM` streams, and the usual
//! WMMSE reformulation applies with combiners `U_k` of size `M × LM` and
//! weights `C_k` of size `LM × LM`. With a single satellite this is the
//! textbook `M × M` form.
//!
//! The three blocks are
//!
//! ```text
//! U_k = R_k⁻¹ 𝒢_k,   R_k = Σ_i Σ_l H̃_{l,k} W_{l,i} W_{l,i}ᴴ H̃_{l,k}ᴴ + σ² I
//! C_k = E_k⁻¹ / ln 2
//! W_{l,·} = argmin of the per-satellite subproblem under the budget
//! ```
//!
//! and every block update is an exact minimisation, so the objective
//! `Σ_k Tr(C_k E_k) − log₂|C_k|` never increases.

mod bisection;
mod ellipsoid;
mod subproblem;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::EffectiveChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, hstack, identity, inverse_hpd, solve_hpd, split_columns, CMat};
use crate::rate::{wmmse_objective, PrecoderSet};
use crate::scenario::{Budget, SolverOptions};

pub use bisection::{solve_multiplier_per_sat, MultiplierSolution};
pub use ellipsoid::{solve_multipliers_ellipsoid, AntennaMultiplierSolution};
pub use subproblem::{SatSubproblem, SpectralSubproblem};

/// `E_k`, `LM × LM` Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct MseMatrix(pub CMat);

/// Lagrange multipliers of the power constraints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Multipliers {
    PerSat(Vec<f64>),
    PerAntenna(Vec<Vec<f64>>),
}

impl Multipliers {
    fn zeros(budget: &Budget) -> Self {
        match budget {
            Budget::PerSat(r) => Multipliers::PerSat(vec![0.0; r.len()]),
            Budget::PerAntenna(r) => Multipliers::PerAntenna(r.iter().map(|row| vec![0.0; row.len()]).collect()),
        }
    }

    pub fn all_nonnegative(&self) -> bool {
        match self {
            Multipliers::PerSat(m) => m.iter().all(|v| *v >= 0.0),
            Multipliers::PerAntenna(m) => m.iter().flatten().all(|v| *v >= 0.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverState {
    /// `U_k`, `M × LM`.
    pub u: Vec<CMat>,
    /// `C_k`, `LM × LM`.
    pub c: Vec<CMat>,
    pub precoders: PrecoderSet,
    pub mu: Multipliers,
    /// Objective after each full iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Last objective decrease.
    pub delta: f64,
    /// Per-antenna multiplier searches that stopped at their iteration cap.
    pub ellipsoid_cap_hits: usize,
}

/// `𝒢_k = [H̃_{1,k} W_{1,k} … H̃_{L,k} W_{L,k}]`, `M × LM`.
pub fn virtual_channel(pre: &PrecoderSet, eff: &EffectiveChannelSet, k: usize) -> CMat {
    let blocks: Vec<CMat> = (0..eff.num_sats()).map(|l| &eff.h[l][k] * &pre.w[l][k]).collect();
    hstack(&blocks)
}

/// `R_k = Σ_i Σ_l H̃_{l,k} W_{l,i} W_{l,i}ᴴ H̃_{l,k}ᴴ + σ² I_M`.
pub fn received_covariance(pre: &PrecoderSet, eff: &EffectiveChannelSet, sigma2: f64, k: usize) -> CMat {
    let m = eff.user_antennas();
    let mut r = identity(m).scale(sigma2);
    for l in 0..eff.num_sats() {
        for i in 0..eff.num_users() {
            let g = &eff.h[l][k] * &pre.w[l][i];
            r += &g * g.adjoint();
        }
    }
    hermitian_part(&r)
}

/// `E_k = U_kᴴ R_k U_k − U_kᴴ 𝒢_k − 𝒢_kᴴ U_k + I`.
pub fn mse_matrix(u_k: &CMat, pre: &PrecoderSet, eff: &EffectiveChannelSet, sigma2: f64, k: usize) -> MseMatrix {
    let r = received_covariance(pre, eff, sigma2, k);
    let g = virtual_channel(pre, eff, k);
    let cross = u_k.adjoint() * &g;
    let e = u_k.adjoint() * r * u_k - &cross - cross.adjoint() + identity(u_k.ncols());
    MseMatrix(hermitian_part(&e))
}

/// MMSE combiners `U_k = R_k⁻¹ 𝒢_k`.
pub fn update_combiners(pre: &PrecoderSet, eff: &EffectiveChannelSet, sigma2: f64) -> Result<Vec<CMat>> {
    (0..eff.num_users())
        .map(|k| {
            let r = received_covariance(pre, eff, sigma2, k);
            solve_hpd(&r, &virtual_channel(pre, eff, k), "received covariance")
        })
        .collect()
}

/// `C_k = E_k⁻¹ / ln 2`.
pub fn update_weights(e: &[MseMatrix]) -> Result<Vec<CMat>> {
    e.iter()
        .map(|MseMatrix(ek)| Ok(inverse_hpd(ek, "MSE matrix")?.unscale(std::f64::consts::LN_2)))
        .collect()
}

/// `W_{l,k}(μ) = (A_l + μ I)⁻¹ B_{l,k}`; fails when `μ = 0` and `A_l` is
/// singular.
pub fn update_precoders_per_sat(mu: f64, u: &[CMat], c: &[CMat], eff: &EffectiveChannelSet, l: usize) -> Result<Vec<CMat>> {
    SatSubproblem::new(u, c, eff, l).solve_uniform(mu)
}

/// `W_{l,k}(μ) = (A_l + Σ_n μ_n E_n)⁻¹ B_{l,k}`.
pub fn update_precoders_per_antenna(
    mu: &[f64],
    u: &[CMat],
    c: &[CMat],
    eff: &EffectiveChannelSet,
    l: usize,
) -> Result<Vec<CMat>> {
    if mu.len() != eff.sat_antennas() {
        return Err(Error::Shape(format!("expected {} multipliers, got {}", eff.sat_antennas(), mu.len())));
    }
    let sub = SatSubproblem::new(u, c, eff, l);
    let mut reg = sub.gram.clone();
    for (n, &m) in mu.iter().enumerate() {
        reg[(n, n)] += m;
    }
    let w = solve_hpd(&reg, &sub.rhs, "per-antenna precoder system")?;
    Ok(split_columns(&w, sub.user_antennas))
}

/// Share of satellite `l`'s budget given to user `k`: `√β_{l,k} / Σ_i √β_{l,i}`.
pub fn power_split(eff: &EffectiveChannelSet, l: usize) -> Vec<f64> {
    let roots: Vec<f64> = eff.beta[l].iter().map(|b| b.sqrt()).collect();
    let total: f64 = roots.iter().sum();
    roots.iter().map(|r| r / total).collect()
}

/// Scales precoder directions onto the budget with the `√β` split. Per
/// satellite, `‖W_{l,k}‖_F²` becomes the user's share of `ρ_l`; per antenna,
/// row `n` of `W_{l,k}` gets the user's share of `ρ_{l,n}`. All-zero blocks
/// or rows stay zero.
pub fn scale_to_budget(directions: Vec<Vec<CMat>>, budget: &Budget, eff: &EffectiveChannelSet) -> PrecoderSet {
    let mut w = directions;
    for (l, row) in w.iter_mut().enumerate() {
        let split = power_split(eff, l);
        for (k, wk) in row.iter_mut().enumerate() {
            match budget {
                Budget::PerSat(rho) => {
                    let norm2 = wk.norm_squared();
                    if norm2 > 0.0 {
                        *wk *= crate::C64::from((rho[l] * split[k] / norm2).sqrt());
                    }
                }
                Budget::PerAntenna(rho) => {
                    for n in 0..wk.nrows() {
                        let norm2 = wk.row(n).norm_squared();
                        if norm2 > 0.0 {
                            wk.row_mut(n).scale_mut((rho[l][n] * split[k] / norm2).sqrt());
                        }
                    }
                }
            }
        }
    }
    PrecoderSet {
        w,
        budget: budget.clone(),
    }
}

/// MMSE initial point `(Σ_i H̃_{l,i}ᴴ H̃_{l,i} + σ² I)⁻¹ H̃_{l,k}ᴴ`, power-scaled.
pub fn init_precoders(eff: &EffectiveChannelSet, budget: &Budget, sigma2: f64) -> Result<PrecoderSet> {
    budget.validate(eff.num_sats(), eff.sat_antennas())?;
    let n = eff.sat_antennas();
    let directions = (0..eff.num_sats())
        .map(|l| {
            let mut gram = identity(n).scale(sigma2);
            for h in &eff.h[l] {
                gram += h.adjoint() * h;
            }
            let gram = hermitian_part(&gram);
            let rhs = hstack(&eff.h[l].iter().map(|h| h.adjoint()).collect::<Vec<_>>());
            let x = solve_hpd(&gram, &rhs, "MMSE precoder system")?;
            Ok(split_columns(&x, eff.user_antennas()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scale_to_budget(directions, budget, eff))
}

/// Algorithm 1 from the MMSE initial point.
pub fn wmmse_solve(eff: &EffectiveChannelSet, budget: &Budget, sigma2: f64, opts: &SolverOptions) -> Result<SolverState> {
    let init = init_precoders(eff, budget, sigma2)?;
    wmmse_solve_from(eff, init, sigma2, opts)
}

struct SatUpdate {
    w: Vec<CMat>,
    mu: SatMu,
    cap_hit: bool,
}

enum SatMu {
    Scalar(f64),
    Vector(Vec<f64>),
}

fn check_monotone(iteration: usize, previous: f64, current: f64, rtol: f64) -> Result<()> {
    if current > previous + rtol * previous.abs().max(current.abs()) {
        return Err(Error::NonMonotone {
            iteration,
            previous,
            current,
        });
    }
    Ok(())
}

/// Algorithm 1 from a caller-supplied feasible starting point.
pub fn wmmse_solve_from(eff: &EffectiveChannelSet, init: PrecoderSet, sigma2: f64, opts: &SolverOptions) -> Result<SolverState> {
    opts.validate()?;
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidConfig("noise power must be > 0".into()));
    }
    init.budget.validate(eff.num_sats(), eff.sat_antennas())?;
    let mut pre = init;
    let mut mu = Multipliers::zeros(&pre.budget);
    let mut trace: Vec<f64> = Vec::new();
    let mut u = Vec::new();
    let mut c = Vec::new();
    let mut delta = f64::INFINITY;
    let mut converged = false;
    let mut cap_hits = 0;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        u = update_combiners(&pre, eff, sigma2)?;
        let e: Vec<MseMatrix> = (0..eff.num_users()).map(|k| mse_matrix(&u[k], &pre, eff, sigma2, k)).collect();
        c = update_weights(&e)?;
        let after_uc = wmmse_objective(&u, &c, &pre, eff, sigma2)?;
        if let Some(&prev) = trace.last() {
            check_monotone(iterations, prev, after_uc, opts.monotone_rtol)?;
        }

        let updates = (0..eff.num_sats())
            .into_par_iter()
            .map(|l| precoder_step(&u, &c, eff, &pre, &mu, l, opts))
            .collect::<Result<Vec<SatUpdate>>>()?;
        for (l, upd) in updates.into_iter().enumerate() {
            pre.w[l] = upd.w;
            cap_hits += upd.cap_hit as usize;
            match (&mut mu, upd.mu) {
                (Multipliers::PerSat(m), SatMu::Scalar(v)) => m[l] = v,
                (Multipliers::PerAntenna(m), SatMu::Vector(v)) => m[l] = v,
                _ => unreachable!("multiplier kind follows the budget"),
            }
        }

        let obj = wmmse_objective(&u, &c, &pre, eff, sigma2)?;
        check_monotone(iterations, after_uc, obj, opts.monotone_rtol)?;
        if let Some(&prev) = trace.last() {
            delta = prev - obj;
        }
        trace.push(obj);
        if delta <= opts.epsilon {
            converged = true;
            break;
        }
    }

    Ok(SolverState {
        u,
        c,
        precoders: pre,
        mu,
        objective_trace: trace,
        iterations,
        converged,
        delta,
        ellipsoid_cap_hits: cap_hits,
    })
}

fn precoder_step(
    u: &[CMat],
    c: &[CMat],
    eff: &EffectiveChannelSet,
    pre: &PrecoderSet,
    mu: &Multipliers,
    l: usize,
    opts: &SolverOptions,
) -> Result<SatUpdate> {
    let sub = SatSubproblem::new(u, c, eff, l);
    match (&pre.budget, mu) {
        (Budget::PerSat(rho), _) => {
            let sol = bisection::search(&SpectralSubproblem::new(&sub), rho[l], opts)?;
            Ok(SatUpdate {
                w: sol.w,
                mu: SatMu::Scalar(sol.mu),
                cap_hit: false,
            })
        }
        (Budget::PerAntenna(rho), Multipliers::PerAntenna(prev_mu)) => {
            let (w, m, cap_hit) = match ellipsoid::solve_subproblem(&sub, &rho[l], &opts.ellipsoid, Some(&prev_mu[l])) {
                Ok(sol) => (sol.w, sol.mu, false),
                Err(Error::EllipsoidCap { mu, w, .. }) => (w, mu, true),
                Err(e) => return Err(e),
            };
            // An inexact dual solution can land on a worse primal point than
            // the current (feasible) precoders; keep those in that case.
            let prev = &pre.w[l];
            if sub.objective(&w) > sub.objective(prev) {
                return Ok(SatUpdate {
                    w: prev.clone(),
                    mu: SatMu::Vector(prev_mu[l].clone()),
                    cap_hit,
                });
            }
            Ok(SatUpdate {
                w,
                mu: SatMu::Vector(m),
                cap_hit,
            })
        }
        (Budget::PerAntenna(_), Multipliers::PerSat(_)) => unreachable!("multiplier kind follows the budget"),
    }
}

#[cfg(test)]
mod tests;
