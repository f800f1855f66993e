//! Sweep execution. Every sweep point averages its metrics over
//! `realizations` user drops; drop `r` always uses the same placement stream,
//! so points differ only in the swept parameters.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{mmse_precoding, mrt_precoding, noncoop_assignment, noncoop_mrt_precoding, rzf_precoding};
use crate::channel::{stacked_singular_ratio, EffectiveChannelSet};
use crate::error::{Error, Result};
use crate::geometry::{build_geometry, Geometry};
use crate::rate::{approx_rate, exact_rate_mc, PrecoderSet};
use crate::scenario::{Budget, ScenarioConfig};
use crate::solver::wmmse_solve;
use crate::streams::{rng_for, Purpose};

use super::config::{ExperimentKind, ExperimentSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Swept parameter values, in column order.
    pub params: Vec<f64>,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    pub iters: usize,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub point: usize,
    pub params: Vec<f64>,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    pub scenario: ScenarioConfig,
    pub param_names: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub failures: Vec<PointFailure>,
}

/// One resolved grid point.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub params: Vec<f64>,
    pub cfg: ScenarioConfig,
}

struct Axis {
    name: &'static str,
    values: Vec<f64>,
}

/// Expands the sweep into concrete scenarios, first axis slowest.
pub fn sweep_points(base: &ScenarioConfig, spec: &ExperimentSpec) -> Result<(Vec<String>, Vec<SweepPoint>)> {
    let s = &spec.sweep;
    let as_f64 = |v: &Vec<usize>| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
    let mut axes = Vec::new();
    if let Some(v) = &s.num_sats {
        axes.push(Axis { name: "num_sats", values: as_f64(v) });
    }
    if let Some(v) = &s.sat_antennas {
        axes.push(Axis { name: "sat_antennas", values: as_f64(v) });
    }
    if let Some(v) = &s.num_users {
        axes.push(Axis { name: "num_users", values: as_f64(v) });
    }
    if let Some(v) = &s.user_antennas {
        axes.push(Axis { name: "user_antennas", values: as_f64(v) });
    }
    if let Some(v) = &s.rho_w {
        axes.push(Axis { name: "rho_w", values: v.clone() });
    }
    if let Some(v) = &s.theta_s_deg {
        axes.push(Axis { name: "theta_s_deg", values: v.clone() });
    }
    let mut names: Vec<String> = axes.iter().map(|a| a.name.to_string()).collect();
    if s.total_antennas.is_some() {
        names.push("sat_antennas".into());
    }

    let base_rho = base.budget.sat_total(0);
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut idx = flat;
        let mut chosen = vec![0.0; axes.len()];
        for (i, axis) in axes.iter().enumerate().rev() {
            chosen[i] = axis.values[idx % axis.values.len()];
            idx /= axis.values.len();
        }
        let mut cfg = base.clone();
        let mut rho = base_rho;
        for (axis, &v) in axes.iter().zip(&chosen) {
            match axis.name {
                "num_sats" => cfg.num_sats = v as usize,
                "sat_antennas" => cfg.sat_antennas = v as usize,
                "num_users" => cfg.num_users = v as usize,
                "user_antennas" => cfg.user_antennas = v as usize,
                "rho_w" => rho = v,
                "theta_s_deg" => cfg.theta_s = v.to_radians(),
                _ => unreachable!("axis names are fixed above"),
            }
        }
        let mut params = chosen;
        if let Some(t) = s.total_antennas {
            if t % cfg.num_sats != 0 {
                return Err(Error::InvalidConfig(format!(
                    "total_antennas {t} is not divisible by num_sats {}",
                    cfg.num_sats
                )));
            }
            cfg.sat_antennas = t / cfg.num_sats;
            params.push(cfg.sat_antennas as f64);
        }
        cfg.budget = Budget::uniform(spec.constraint, cfg.num_sats, cfg.sat_antennas, rho);
        cfg.validate()?;
        points.push(SweepPoint { params, cfg });
    }
    Ok((names, points))
}

/// Seed of the Monte-Carlo fading streams for drop `r`.
fn fading_seed(seed: u64, r: usize) -> u64 {
    seed ^ (r as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn drop_channels(cfg: &ScenarioConfig, seed: u64, r: usize) -> Result<(Geometry, EffectiveChannelSet)> {
    let geom = build_geometry(cfg, &mut rng_for(seed, Purpose::Drop, r as u64))?;
    let eff = EffectiveChannelSet::from_geometry(&geom, cfg.user_antennas, cfg.sat_antennas, cfg.spacing);
    Ok((geom, eff))
}

/// Per-drop samples of one metric.
#[derive(Default)]
struct Samples {
    values: Vec<f64>,
    iters: Vec<usize>,
}

impl Samples {
    fn push(&mut self, v: f64, iters: usize) {
        self.values.push(v);
        self.iters.push(iters);
    }

    /// Mean, standard error of the mean over drops, mean iteration count.
    fn summary(&self) -> (f64, f64, usize) {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let stderr = if self.values.len() < 2 {
            0.0
        } else {
            let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        let iters = (self.iters.iter().sum::<usize>() as f64 / n).round() as usize;
        (mean, stderr, iters)
    }
}

/// Ordered metric accumulator.
#[derive(Default)]
struct Metrics(Vec<(String, Samples)>);

impl Metrics {
    fn push(&mut self, name: &str, v: f64, iters: usize) {
        match self.0.iter_mut().find(|(n, _)| n == name) {
            Some((_, s)) => s.push(v, iters),
            None => {
                let mut s = Samples::default();
                s.push(v, iters);
                self.0.push((name.to_string(), s));
            }
        }
    }
}

fn rates(
    metrics: &mut Metrics,
    label: &str,
    eff: &EffectiveChannelSet,
    cfg: &ScenarioConfig,
    pre: &PrecoderSet,
    trials: usize,
    seed: u64,
    iters: usize,
) -> Result<()> {
    let approx = approx_rate(eff, pre, cfg.noise_power)?;
    let exact = exact_rate_mc(eff, &cfg.kappa, pre, cfg.noise_power, trials, seed)?;
    metrics.push(&format!("{label}approx_sum_rate"), approx.sum, iters);
    metrics.push(&format!("{label}exact_sum_rate"), exact.sum, iters);
    Ok(())
}

/// Evaluates every metric of one sweep point. Returns `(metric, mean,
/// stderr, iters)` in a fixed order.
pub fn evaluate_point(kind: ExperimentKind, cfg: &ScenarioConfig, spec: &ExperimentSpec) -> Result<Vec<(String, f64, f64, usize)>> {
    let mut metrics = Metrics::default();
    for r in 0..spec.realizations {
        let (geom, eff) = drop_channels(cfg, spec.seed, r)?;
        let mc_seed = fading_seed(spec.seed, r);
        match kind {
            ExperimentKind::ApproxValidity => {
                let pre = mmse_precoding(&eff, &cfg.budget, cfg.noise_power)?;
                rates(&mut metrics, "", &eff, cfg, &pre, spec.trials, mc_seed, 0)?;
            }
            ExperimentKind::SingularRatio => {
                if cfg.user_antennas < 2 {
                    return Err(Error::InvalidConfig("singular-ratio needs user_antennas >= 2".into()));
                }
                let users = eff.num_users();
                let mean = (0..users)
                    .map(|k| {
                        let blocks: Vec<_> = (0..eff.num_sats()).map(|l| eff.h[l][k].clone()).collect();
                        stacked_singular_ratio(&blocks)
                    })
                    .sum::<f64>()
                    / users as f64;
                metrics.push("singular_ratio", mean, 0);
            }
            ExperimentKind::RateVsPower | ExperimentKind::SingleSolve => {
                let st = wmmse_solve(&eff, &cfg.budget, cfg.noise_power, &cfg.solver)?;
                rates(&mut metrics, "", &eff, cfg, &st.precoders, spec.trials, mc_seed, st.iterations)?;
                if kind == ExperimentKind::SingleSolve {
                    let obj = st.objective_trace.last().copied().unwrap_or(f64::NAN);
                    metrics.push("objective", obj, st.iterations);
                    metrics.push("converged", f64::from(u8::from(st.converged)), st.iterations);
                }
            }
            ExperimentKind::BaselineCompare => {
                let st = wmmse_solve(&eff, &cfg.budget, cfg.noise_power, &cfg.solver)?;
                rates(&mut metrics, "proposed_", &eff, cfg, &st.precoders, spec.trials, mc_seed, st.iterations)?;
                let mmse = mmse_precoding(&eff, &cfg.budget, cfg.noise_power)?;
                rates(&mut metrics, "mmse_", &eff, cfg, &mmse, spec.trials, mc_seed, 0)?;
                let rzf = rzf_precoding(&eff, &cfg.budget, cfg.noise_power)?;
                rates(&mut metrics, "rzf_", &eff, cfg, &rzf, spec.trials, mc_seed, 0)?;
                let mrt = mrt_precoding(&eff, &cfg.budget)?;
                rates(&mut metrics, "mrt_", &eff, cfg, &mrt, spec.trials, mc_seed, 0)?;
                // The one-to-one assignment needs L >= K; otherwise the
                // non-cooperative benchmark is left out.
                if cfg.num_sats >= cfg.num_users {
                    let assign = noncoop_assignment(&geom)?;
                    let nc = noncoop_mrt_precoding(&eff, &assign, &cfg.budget)?;
                    rates(&mut metrics, "noncoop_mrt_", &eff, cfg, &nc, spec.trials, mc_seed, 0)?;
                }
            }
        }
    }
    Ok(metrics
        .0
        .iter()
        .map(|(name, s)| {
            let (mean, se, iters) = s.summary();
            (name.clone(), mean, se, iters)
        })
        .collect())
}

/// Runs every sweep point (concurrently, on `threads` workers if given) and
/// returns rows in sweep order. A failing point is recorded and skipped.
pub fn run_experiment(base: &ScenarioConfig, spec: &ExperimentSpec, threads: Option<usize>) -> Result<ExperimentOutcome> {
    base.validate()?;
    spec.validate()?;
    let (param_names, points) = sweep_points(base, spec)?;
    let run = || -> Vec<std::result::Result<Vec<ResultRow>, PointFailure>> {
        points
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let t0 = Instant::now();
                let out = evaluate_point(spec.name, &p.cfg, spec).and_then(|metrics| {
                    if let Some((m, ..)) = metrics.iter().find(|(_, v, se, _)| !v.is_finite() || !se.is_finite()) {
                        return Err(Error::Serialize(format!("metric {m} is not finite")));
                    }
                    Ok(metrics)
                });
                let wall_ms = if spec.timing { t0.elapsed().as_millis() as u64 } else { 0 };
                match out {
                    Ok(metrics) => Ok(metrics
                        .into_iter()
                        .map(|(metric, value, stderr, iters)| ResultRow {
                            params: p.params.clone(),
                            metric,
                            value,
                            stderr,
                            iters,
                            wall_ms,
                        })
                        .collect()),
                    Err(e) => Err(PointFailure {
                        point: i,
                        params: p.params.clone(),
                        message: e.to_string(),
                    }),
                }
            })
            .collect()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(mut v) => rows.append(&mut v),
            Err(f) => failures.push(f),
        }
    }
    Ok(ExperimentOutcome {
        spec: spec.clone(),
        scenario: base.clone(),
        param_names,
        rows,
        failures,
    })
}
