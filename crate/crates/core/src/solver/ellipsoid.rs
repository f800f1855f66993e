//! Per-antenna multipliers by the deep-cut ellipsoid method on the dual.
//!
//! For satellite `l` the dual function is
//! `g(μ) = min_W f(W) + Σ_n μ_n (P_n(W) − ρ_n)`, concave in `μ ≥ 0`, with
//! supergradient `P(W(μ)) − ρ`. Since `g(μ) ≤ −Σ_n μ_n ρ_n` (take `W = 0`),
//! any dual point `μ̂` gives `Σ_n μ*_n ρ_n ≤ −g(μ̂)`; the simplex this defines
//! fixes the starting ball.

use nalgebra::{DMatrix, DVector};

use crate::channel::EffectiveChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{split_columns, CMat};
use crate::rate::antenna_powers;
use crate::scenario::{EllipsoidOptions, SolverOptions};

use super::bisection;
use super::subproblem::{SatSubproblem, SpectralSubproblem};

#[derive(Clone, Debug)]
pub struct AntennaMultiplierSolution {
    pub mu: Vec<f64>,
    pub w: Vec<CMat>,
    pub powers: Vec<f64>,
    pub iterations: usize,
}

/// Dual value, antenna powers and stacked precoders at one multiplier.
struct Probe {
    dual: f64,
    powers: Vec<f64>,
    x: CMat,
}

/// At the Lagrangian minimiser `X = (A + diag μ)⁻¹ B` the dual value reduces
/// to `−Re Tr(Bᴴ X) − Σ_n μ_n ρ_n`.
fn probe(sub: &SatSubproblem, mu: &[f64], rho: &[f64]) -> Probe {
    let x = sub.solve_diagonal_stacked(mu);
    let powers: Vec<f64> = x.row_iter().map(|r| r.norm_squared()).collect();
    let lin: f64 = sub.rhs.iter().zip(x.iter()).map(|(b, w)| (b.conj() * w).re).sum();
    let dual = -lin - mu.iter().zip(rho).map(|(m, r)| m * r).sum::<f64>();
    Probe { dual, powers, x }
}

/// Per-antenna multipliers and precoders of satellite `l`.
pub fn solve_multipliers_ellipsoid(
    u: &[CMat],
    c: &[CMat],
    eff: &EffectiveChannelSet,
    rho: &[f64],
    l: usize,
    opts: &EllipsoidOptions,
) -> Result<AntennaMultiplierSolution> {
    let sub = SatSubproblem::new(u, c, eff, l);
    solve_subproblem(&sub, rho, opts, None)
}

/// Final state of one ellipsoid run.
struct Run {
    center: DVector<f64>,
    size: f64,
    converged: bool,
    iterations: usize,
}

/// Deep-cut ellipsoid iterations from the ball `(center, radius)`. Every
/// evaluated centre `x` with cut normal `a = ρ − P(x)` certifies
/// `g* ≤ g(x) + sqrt(aᵀ Q a)` for the current shape `Q`, provided the ball
/// holds `μ*`. The run stops once the best certified gap is below
/// `gap_rtol·|g|` and the ellipsoid is smaller than `mu_atol`, or once it is
/// smaller than `stop_radius`. `best` carries the best dual value seen.
fn iterate(
    sub: &SatSubproblem,
    rho: &[f64],
    opts: &EllipsoidOptions,
    mut center: DVector<f64>,
    radius: f64,
    best: &mut f64,
    stop_radius: f64,
    cap: usize,
) -> Run {
    let n = center.len();
    let dim = n as f64;
    let mut shape = DMatrix::<f64>::identity(n, n) * (radius * radius);
    let mut upper = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cap {
        let size = shape.trace().max(0.0).sqrt();
        if (upper - *best <= opts.gap_rtol * best.abs() && size <= opts.mu_atol) || size <= stop_radius {
            converged = true;
            break;
        }
        iterations += 1;
        let x: Vec<f64> = center.iter().copied().collect();
        // Cut {y : aᵀ(y − x) ≤ −depth} keeps every y with g(y) ≥ g_best.
        let (a, depth) = match x.iter().enumerate().min_by(|p, q| p.1.total_cmp(q.1)) {
            Some((i, &v)) if v < 0.0 => {
                let mut e = DVector::zeros(n);
                e[i] = -1.0;
                (e, -v)
            }
            _ => {
                let pr = probe(sub, &x, rho);
                let a = DVector::from_iterator(n, rho.iter().zip(&pr.powers).map(|(r, p)| r - p));
                let spread = a.dot(&(&shape * &a)).max(0.0).sqrt();
                upper = upper.min(pr.dual + spread);
                let depth = (*best - pr.dual).max(0.0);
                *best = best.max(pr.dual);
                (a, depth)
            }
        };
        let pa = &shape * &a;
        let denom = a.dot(&pa);
        if !(denom > 0.0) {
            converged = true;
            break;
        }
        let root = denom.sqrt();
        let alpha = (depth / root).min(1.0);
        if alpha >= 1.0 - 1e-12 {
            converged = true;
            break;
        }
        let g = pa / root;
        center -= &g * ((1.0 + dim * alpha) / (dim + 1.0));
        if n == 1 {
            // The one-dimensional ellipsoid is an interval.
            shape *= (0.5 * (1.0 - alpha)).powi(2);
        } else {
            let tau = 2.0 * (1.0 + dim * alpha) / ((dim + 1.0) * (1.0 + alpha));
            let shrink = dim * dim * (1.0 - alpha * alpha) / (dim * dim - 1.0);
            shape = (&shape - (&g * g.transpose()) * tau) * shrink;
        }
        shape = (&shape + shape.transpose()) * 0.5;
    }
    Run {
        center,
        size: shape.trace().max(0.0).sqrt(),
        converged,
        iterations,
    }
}

/// Per-antenna multipliers of one satellite; returns the final ellipsoid
/// centre, which lies within `mu_atol` of `μ*` on convergence.
///
/// With a `hint` (typically the previous outer iteration's multipliers) the
/// search first runs in a small ball around it. If the final ellipsoid ends
/// strictly inside that ball, the maximiser over the ball is interior and
/// hence, by concavity, global; otherwise the search restarts from a ball
/// that provably contains `μ*`.
pub(crate) fn solve_subproblem(
    sub: &SatSubproblem,
    rho: &[f64],
    opts: &EllipsoidOptions,
    hint: Option<&[f64]>,
) -> Result<AntennaMultiplierSolution> {
    let n = sub.sat_antennas();
    let zero = vec![0.0; n];
    let first = probe(sub, &zero, rho);
    if first.powers.iter().zip(rho).all(|(p, r)| p <= r) {
        return Ok(AntennaMultiplierSolution {
            mu: zero,
            w: split_columns(&first.x, sub.user_antennas),
            powers: first.powers,
            iterations: 0,
        });
    }

    // A common multiplier meeting the total budget is a cheap, usually good
    // dual point; its value tightens the bound on Σ_n μ*_n ρ_n.
    let total: f64 = rho.iter().sum();
    let uniform = bisection::search(&SpectralSubproblem::new(sub), total, &SolverOptions::default())
        .map_or(0.0, |s| s.mu);
    let mut best = probe(sub, &vec![uniform; n], rho).dual.max(first.dual);
    let bound = -best;
    let cold_center = DVector::from_iterator(n, rho.iter().map(|r| 0.5 * bound / r));
    let cold_radius = cold_center.norm().max(f64::MIN_POSITIVE);
    let stop_radius = opts.radius_rtol * cold_radius;
    let cap = opts.max_iters_per_antenna * n;

    let mut spent = 0;
    let mut run = None;
    if let Some(h) = hint.filter(|h| h.len() == n && h.iter().any(|v| *v > 0.0)) {
        let warm_center = DVector::from_column_slice(h);
        let warm_radius = (opts.warm_rtol * warm_center.norm()).max(opts.mu_atol);
        let r = iterate(sub, rho, opts, warm_center.clone(), warm_radius, &mut best, stop_radius, cap);
        spent = r.iterations;
        if r.converged && (&r.center - &warm_center).norm() + r.size < warm_radius {
            run = Some(r);
        }
    }
    let run = match run {
        Some(r) => r,
        None => {
            let mut r = iterate(sub, rho, opts, cold_center, cold_radius, &mut best, stop_radius, cap - spent.min(cap));
            r.iterations += spent;
            r
        }
    };

    let mu: Vec<f64> = run.center.iter().map(|v| v.max(0.0)).collect();
    let raw = split_columns(&sub.solve_diagonal_stacked(&mu), sub.user_antennas);
    let mut clipped = raw.clone();
    clip_rows_to_budget(&mut clipped, rho);
    // Rows with a positive multiplier belong on their budget; putting them
    // there exactly is an alternative to plain clipping.
    let mut active = raw;
    let p = antenna_powers(&active);
    for (i, (&pi, &ri)) in p.iter().zip(rho).enumerate() {
        if (mu[i] > 0.0 || pi > ri) && pi > 0.0 {
            let s = (ri / pi).sqrt();
            for wk in active.iter_mut() {
                wk.row_mut(i).scale_mut(s);
            }
        }
    }
    let w = if sub.objective(&active) < sub.objective(&clipped) {
        active
    } else {
        clipped
    };
    if !run.converged {
        return Err(Error::EllipsoidCap {
            iterations: run.iterations,
            mu,
            w,
        });
    }
    let powers = antenna_powers(&w);
    Ok(AntennaMultiplierSolution {
        mu,
        w,
        powers,
        iterations: run.iterations,
    })
}

/// Scales any antenna row whose power exceeds its budget by more than a
/// relative 1e-9 back onto the budget.
pub(crate) fn clip_rows_to_budget(w: &mut [CMat], rho: &[f64]) {
    let p = antenna_powers(w);
    for (i, (&pi, &ri)) in p.iter().zip(rho).enumerate() {
        if pi > ri * (1.0 + 1e-9) {
            let s = (ri / pi).sqrt();
            for wk in w.iter_mut() {
                wk.row_mut(i).scale_mut(s);
            }
        }
    }
}
