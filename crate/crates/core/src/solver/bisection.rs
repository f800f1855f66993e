//! Scalar multiplier search for a per-satellite power budget: test `μ = 0`,
//! otherwise expand geometrically until the power fits and bisect the
//! resulting bracket.

use crate::channel::EffectiveChannelSet;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scenario::SolverOptions;

use super::subproblem::{SatSubproblem, SpectralSubproblem};

#[derive(Clone, Debug)]
pub struct MultiplierSolution {
    pub mu: f64,
    /// `W_{l,k}(μ)` for every user.
    pub w: Vec<CMat>,
    pub power: f64,
    pub expansions: usize,
    pub bisections: usize,
}

/// Multiplier and precoders of satellite `l` under total budget `rho`.
///
/// The bracket loop follows the classic rule: a feasible probe becomes the
/// upper end, an infeasible one the lower end once any feasible point is
/// known, and before that the probe is multiplied by `alpha`. It stops when
/// the bracket is narrower than `eps_mu` *and* the complementary-slackness
/// residual `μ·(ρ − power)` at the upper end is below `slack_rtol·ρ`. The upper
/// end is returned, so the result is always feasible.
pub fn solve_multiplier_per_sat(
    u: &[CMat],
    c: &[CMat],
    eff: &EffectiveChannelSet,
    rho: f64,
    l: usize,
    opts: &SolverOptions,
) -> Result<MultiplierSolution> {
    let sub = SatSubproblem::new(u, c, eff, l);
    search(&SpectralSubproblem::new(&sub), rho, opts)
}

pub(crate) fn search(spec: &SpectralSubproblem, rho: f64, opts: &SolverOptions) -> Result<MultiplierSolution> {
    let p0 = spec.power(0.0);
    if p0 <= rho {
        return Ok(MultiplierSolution {
            mu: 0.0,
            w: spec.precoders(0.0),
            power: p0,
            expansions: 0,
            bisections: 0,
        });
    }

    let (mut lower, mut upper) = (0.0_f64, f64::INFINITY);
    let mut upper_power = f64::NAN;
    let mut feasible_found = false;
    let mut mu = 1.0_f64;
    let (mut expansions, mut bisections) = (0usize, 0usize);

    loop {
        if feasible_found {
            let narrow = upper - lower <= opts.eps_mu;
            let slack_ok = upper * (rho - upper_power) <= opts.slack_rtol * rho;
            let exhausted = bisections >= opts.max_bisections
                || upper - lower <= 4.0 * f64::EPSILON * upper;
            if (narrow && slack_ok) || exhausted {
                break;
            }
        }
        let p = spec.power(mu);
        if p <= rho {
            upper = mu;
            upper_power = p;
            mu = 0.5 * (lower + upper);
            feasible_found = true;
            bisections += 1;
        } else if feasible_found {
            lower = mu;
            mu = 0.5 * (lower + upper);
            bisections += 1;
        } else {
            mu *= opts.alpha;
            expansions += 1;
            if expansions > opts.max_expansions {
                return Err(Error::ExpansionLimit(opts.max_expansions));
            }
        }
    }

    Ok(MultiplierSolution {
        mu: upper,
        w: spec.precoders(upper),
        power: upper_power,
        expansions,
        bisections,
    })
}
