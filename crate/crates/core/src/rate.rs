//! Achievable-rate evaluation.
//!
//! * [`exact_rate_mc`] averages the instantaneous rate over Rician gain draws.
//! * [`approx_rate`] replaces signal and interference-plus-noise covariances by
//!   their expectations. Gains on different satellites are independent with
//!   zero mean, so only same-satellite terms survive and the result depends on
//!   the channels only through the effective matrices `H̃_{l,k}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_gains, EffectiveChannelSet};
use crate::error::{Error, Result};
use crate::linalg::{identity, log2_det_hpd, re_trace, CMat};
use crate::scenario::{Budget, Kappa};
use crate::solver::{mse_matrix, MseMatrix};
use crate::streams::{rng_for, Purpose};

/// Per-satellite precoders `W_{l,k}` (`N × M`, indexed `[l][k]`) and the
/// budget they must respect.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecoderSet {
    pub w: Vec<Vec<CMat>>,
    pub budget: Budget,
}

impl PrecoderSet {
    pub fn zeros(users: usize, sat_antennas: usize, user_antennas: usize, budget: Budget) -> Self {
        let w = vec![vec![CMat::zeros(sat_antennas, user_antennas); users]; budget.num_sats()];
        Self { w, budget }
    }

    pub fn num_sats(&self) -> usize {
        self.w.len()
    }

    pub fn num_users(&self) -> usize {
        self.w.first().map_or(0, |r| r.len())
    }

    /// `Σ_k Tr(W_{l,k}ᴴ W_{l,k})`
    pub fn sat_power(&self, l: usize) -> f64 {
        self.w[l].iter().map(|w| w.norm_squared()).sum()
    }

    /// `Σ_k Tr(W_{l,k}ᴴ E_n W_{l,k})` for every antenna `n`.
    pub fn antenna_powers(&self, l: usize) -> Vec<f64> {
        antenna_powers(&self.w[l])
    }

    /// Largest relative budget excess over all constraints (≤ 0 when
    /// feasible).
    pub fn max_budget_excess(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        match &self.budget {
            Budget::PerSat(rho) => {
                for (l, &r) in rho.iter().enumerate() {
                    worst = worst.max(self.sat_power(l) / r - 1.0);
                }
            }
            Budget::PerAntenna(rho) => {
                for (l, row) in rho.iter().enumerate() {
                    for (p, &r) in self.antenna_powers(l).iter().zip(row) {
                        worst = worst.max(p / r - 1.0);
                    }
                }
            }
        }
        worst
    }

    pub fn satisfies_budget(&self, rtol: f64) -> bool {
        self.max_budget_excess() <= rtol
    }
}

pub(crate) fn antenna_powers(blocks: &[CMat]) -> Vec<f64> {
    let n = blocks.first().map_or(0, |w| w.nrows());
    let mut p = vec![0.0; n];
    for w in blocks {
        for (i, row) in w.row_iter().enumerate() {
            p[i] += row.norm_squared();
        }
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateKind {
    ExactMonteCarlo,
    Approximate,
}

/// Rates in bit/s/Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub per_ue: Vec<f64>,
    pub sum: f64,
    pub kind: RateKind,
    pub trials: Option<usize>,
    /// Standard error of each per-user Monte-Carlo mean.
    pub stderr: Option<Vec<f64>>,
}

impl RateReport {
    /// Standard error of the Monte-Carlo sum-rate estimate.
    pub fn sum_stderr(&self) -> f64 {
        self.stderr.as_ref().map_or(0.0, |s| s.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

/// `log₂|I + S T⁻¹|` computed as `log₂|S + T| − log₂|T|`.
fn log2_rate(signal: &CMat, interference_noise: &CMat) -> Result<f64> {
    let total = signal + interference_noise;
    let r = log2_det_hpd(&total, "signal plus interference")?
        - log2_det_hpd(interference_noise, "interference plus noise")?;
    Ok(r.max(0.0))
}

fn check_shapes(eff: &EffectiveChannelSet, pre: &PrecoderSet) -> Result<()> {
    if eff.num_sats() != pre.num_sats() || eff.num_users() != pre.num_users() {
        return Err(Error::Shape(format!(
            "channels are {}x{}, precoders {}x{}",
            eff.num_sats(),
            eff.num_users(),
            pre.num_sats(),
            pre.num_users()
        )));
    }
    let (m, n) = (eff.user_antennas(), eff.sat_antennas());
    if pre.w.iter().flatten().any(|w| w.nrows() != n || w.ncols() != m) {
        return Err(Error::Shape(format!("every precoder must be {n}x{m}")));
    }
    Ok(())
}

pub fn approx_rate(eff: &EffectiveChannelSet, pre: &PrecoderSet, sigma2: f64) -> Result<RateReport> {
    check_shapes(eff, pre)?;
    let (l_count, k_count, m) = (eff.num_sats(), eff.num_users(), eff.user_antennas());
    let mut per_ue = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let mut signal = CMat::zeros(m, m);
        let mut interference = identity(m).scale(sigma2);
        for l in 0..l_count {
            for i in 0..k_count {
                let hw = &eff.h[l][k] * &pre.w[l][i];
                let cov = &hw * hw.adjoint();
                if i == k {
                    signal += cov;
                } else {
                    interference += cov;
                }
            }
        }
        per_ue.push(log2_rate(&signal, &interference)?);
    }
    let sum = per_ue.iter().sum();
    Ok(RateReport {
        per_ue,
        sum,
        kind: RateKind::Approximate,
        trials: None,
        stderr: None,
    })
}

/// Monte-Carlo estimate of the ergodic rate. Trial `t` draws its gains from
/// stream `t` of `seed`, so the result does not depend on the thread count.
pub fn exact_rate_mc(
    eff: &EffectiveChannelSet,
    kappa: &Kappa,
    pre: &PrecoderSet,
    sigma2: f64,
    trials: usize,
    seed: u64,
) -> Result<RateReport> {
    check_shapes(eff, pre)?;
    if trials == 0 {
        return Err(Error::InvalidConfig("Monte-Carlo trials must be >= 1".into()));
    }
    let (l_count, k_count, m) = (eff.num_sats(), eff.num_users(), eff.user_antennas());

    // b_{l,k} · (a_{l,k}ᵀ W_{l,i}): the channel-independent part of H_{l,k} W_{l,i}.
    let shaped: Vec<Vec<Vec<CMat>>> = (0..l_count)
        .map(|l| {
            (0..k_count)
                .map(|k| {
                    let at = eff.a[l][k].transpose();
                    (0..k_count)
                        .map(|i| &eff.b[l][k] * (&at * &pre.w[l][i]))
                        .collect()
                })
                .collect()
        })
        .collect();

    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, Purpose::Fading, t as u64);
            let gamma = sample_gains(&eff.beta, kappa, &mut rng);
            (0..k_count)
                .map(|k| {
                    let mut signal = CMat::zeros(m, m);
                    let mut interference = identity(m).scale(sigma2);
                    for i in 0..k_count {
                        let mut f = CMat::zeros(m, m);
                        for l in 0..l_count {
                            f += &shaped[l][k][i] * gamma[l][k];
                        }
                        let cov = &f * f.adjoint();
                        if i == k {
                            signal = cov;
                        } else {
                            interference += cov;
                        }
                    }
                    log2_rate(&signal, &interference)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let n = trials as f64;
    let mut per_ue = vec![0.0; k_count];
    for row in &per_trial {
        for (acc, r) in per_ue.iter_mut().zip(row) {
            *acc += r;
        }
    }
    per_ue.iter_mut().for_each(|v| *v /= n);
    let stderr = (0..k_count)
        .map(|k| {
            if trials < 2 {
                return 0.0;
            }
            let var = per_trial.iter().map(|row| (row[k] - per_ue[k]).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        })
        .collect();
    let sum = per_ue.iter().sum();
    Ok(RateReport {
        per_ue,
        sum,
        kind: RateKind::ExactMonteCarlo,
        trials: Some(trials),
        stderr: Some(stderr),
    })
}

/// `Σ_k Tr(C_k E_k) − log₂|C_k|`.
pub fn wmmse_objective(
    u: &[CMat],
    c: &[CMat],
    pre: &PrecoderSet,
    eff: &EffectiveChannelSet,
    sigma2: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..eff.num_users() {
        let MseMatrix(e) = mse_matrix(&u[k], pre, eff, sigma2, k);
        total += re_trace(&(&c[k] * e)) - log2_det_hpd(&c[k], "weight matrix")?;
    }
    Ok(total)
}

/// Value of the objective when `U`, `C` are at their optimum for the given
/// precoders is `objective_offset(K, L·M) − Σ_k R̄_k`, where the offset is
/// `K·(LM/ln2 + LM·log₂ln2)`.
pub fn objective_offset(users: usize, streams: usize) -> f64 {
    let s = streams as f64;
    let ln2 = std::f64::consts::LN_2;
    users as f64 * (s / ln2 + s * ln2.log2())
}
