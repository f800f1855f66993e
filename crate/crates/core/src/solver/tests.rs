use super::*;
use crate::channel::EffectiveChannelSet;
use crate::geometry::build_geometry;
use crate::linalg::{log2_det_hpd, re_trace, CVec, C64};
use crate::rate::{approx_rate, objective_offset};
use crate::scenario::{Constraint, ScenarioConfig};
use crate::streams::{rng_for, Purpose};

fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

fn scalar_set(beta: f64) -> EffectiveChannelSet {
    let one = CVec::from_element(1, real(1.0));
    EffectiveChannelSet::from_parts(vec![vec![beta]], vec![vec![one.clone()]], vec![vec![one]])
}

fn scalar_pre(w: f64, rho: f64) -> PrecoderSet {
    let mut pre = PrecoderSet::zeros(1, 1, 1, Budget::PerSat(vec![rho]));
    pre.w[0][0][(0, 0)] = real(w);
    pre
}

fn scalar_mat(v: f64) -> CMat {
    CMat::from_element(1, 1, real(v))
}

fn scenario(l: usize, k: usize, n: usize, constraint: Constraint, seed: u64) -> (ScenarioConfig, EffectiveChannelSet) {
    let cfg = ScenarioConfig {
        num_sats: l,
        num_users: k,
        sat_antennas: n,
        budget: Budget::uniform(constraint, l, n, 50.0),
        ..Default::default()
    };
    let g = build_geometry(&cfg, &mut rng_for(seed, Purpose::Drop, 0)).unwrap();
    let eff = EffectiveChannelSet::from_geometry(&g, cfg.user_antennas, n, cfg.spacing);
    (cfg, eff)
}

/// Deterministic pseudo-random complex matrix with entries in the unit square.
fn perturbation(rows: usize, cols: usize, salt: u64) -> CMat {
    use rand::Rng;
    let mut rng = rng_for(salt, Purpose::Aux, 99);
    CMat::from_fn(rows, cols, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

/// `U`, `C` one iteration into the solver, for subproblem tests.
fn combiners_and_weights(cfg: &ScenarioConfig, eff: &EffectiveChannelSet) -> (Vec<CMat>, Vec<CMat>) {
    let pre = init_precoders(eff, &cfg.budget, cfg.noise_power).unwrap();
    let u = update_combiners(&pre, eff, cfg.noise_power).unwrap();
    let e: Vec<MseMatrix> = (0..eff.num_users()).map(|k| mse_matrix(&u[k], &pre, eff, cfg.noise_power, k)).collect();
    let c = update_weights(&e).unwrap();
    (u, c)
}

#[test]
fn mse_with_zero_combiner_is_identity() {
    let (cfg, eff) = scenario(2, 2, 4, Constraint::PerSat, 1);
    let pre = init_precoders(&eff, &cfg.budget, cfg.noise_power).unwrap();
    let MseMatrix(e) = mse_matrix(&CMat::zeros(2, 4), &pre, &eff, cfg.noise_power, 0);
    assert!((e - identity(4)).norm() == 0.0);
}

#[test]
fn mse_with_zero_precoders() {
    let (cfg, eff) = scenario(2, 2, 4, Constraint::PerSat, 2);
    let pre = PrecoderSet::zeros(2, 4, 2, cfg.budget.clone());
    let u = perturbation(2, 4, 3);
    let MseMatrix(e) = mse_matrix(&u, &pre, &eff, 0.3, 1);
    let want = u.adjoint() * &u * real(0.3) + identity(4);
    assert!((e - want).norm() < 1e-14);
}

#[test]
fn scalar_mse_and_combiner_oracle() {
    let (h, w, s2) = (0.8_f64, 1.3_f64, 0.4_f64);
    let eff = scalar_set(h * h);
    let pre = scalar_pre(w, 10.0);
    for uv in [-0.5, 0.0, 0.3, 1.1] {
        let MseMatrix(e) = mse_matrix(&scalar_mat(uv), &pre, &eff, s2, 0);
        let want = uv * uv * (h * h * w * w + s2) - 2.0 * uv * h * w + 1.0;
        assert!((e[(0, 0)].re - want).abs() < 1e-14);
    }
    let u = update_combiners(&pre, &eff, s2).unwrap();
    let want = h * w / (h * h * w * w + s2);
    assert!((u[0][(0, 0)].re - want).abs() < 1e-14);
}

#[test]
fn weights_invert_mse() {
    let c = update_weights(&[MseMatrix(identity(2))]).unwrap();
    assert!((c[0][(0, 0)].re - 1.0 / std::f64::consts::LN_2).abs() < 1e-12);
    let d = CMat::from_diagonal(&CVec::from_vec(vec![real(2.0), real(0.5)]));
    let c = update_weights(&[MseMatrix(d)]).unwrap();
    assert!((c[0][(0, 0)].re - 0.7213475204444817).abs() < 1e-12);
    assert!((c[0][(1, 1)].re - 2.8853900817779268).abs() < 1e-12);
    assert!(matches!(
        update_weights(&[MseMatrix(CMat::zeros(2, 2))]),
        Err(Error::SingularMatrix(_))
    ));
}

#[test]
fn combiner_minimises_mse_trace() {
    let (cfg, eff) = scenario(3, 3, 4, Constraint::PerSat, 4);
    let pre = init_precoders(&eff, &cfg.budget, cfg.noise_power).unwrap();
    let u = update_combiners(&pre, &eff, cfg.noise_power).unwrap();
    for k in 0..3 {
        let base = re_trace(&mse_matrix(&u[k], &pre, &eff, cfg.noise_power, k).0);
        let scale = u[k].norm();
        for salt in 0..5 {
            let d = perturbation(2, 6, 10 * k as u64 + salt) * real(1e-3 * scale);
            let moved = re_trace(&mse_matrix(&(&u[k] + d), &pre, &eff, cfg.noise_power, k).0);
            assert!(moved >= base - 1e-8, "{moved} < {base}");
        }
    }
}

#[test]
fn weights_minimise_weighted_mse() {
    let (cfg, eff) = scenario(2, 2, 4, Constraint::PerSat, 5);
    let pre = init_precoders(&eff, &cfg.budget, cfg.noise_power).unwrap();
    let u = update_combiners(&pre, &eff, cfg.noise_power).unwrap();
    let e = mse_matrix(&u[0], &pre, &eff, cfg.noise_power, 0);
    let c = update_weights(std::slice::from_ref(&e)).unwrap().remove(0);
    let f = |c: &CMat| re_trace(&(c * &e.0)) - log2_det_hpd(c, "c").unwrap();
    let base = f(&c);
    for salt in 0..5 {
        let d = perturbation(4, 4, 50 + salt);
        let d = hermitian_part(&d) * real(1e-3 * c.norm());
        assert!(f(&(&c + d)) >= base - 1e-10);
    }
}

#[test]
fn objective_at_optimal_weights_matches_rate() {
    let (cfg, eff) = scenario(3, 3, 4, Constraint::PerSat, 6);
    let pre = init_precoders(&eff, &cfg.budget, cfg.noise_power).unwrap();
    let (u, c) = combiners_and_weights(&cfg, &eff);
    let obj = crate::rate::wmmse_objective(&u, &c, &pre, &eff, cfg.noise_power).unwrap();
    let rate = approx_rate(&eff, &pre, cfg.noise_power).unwrap().sum;
    assert!((obj - (objective_offset(3, 3 * 2) - rate)).abs() < 1e-9);
}

#[test]
fn scalar_precoder_closed_form() {
    let (h, uv, cv) = (0.7_f64, 1.2_f64, 2.5_f64);
    let eff = scalar_set(h * h);
    for mu in [0.0, 0.5, 3.0] {
        let w = update_precoders_per_sat(mu, &[scalar_mat(uv)], &[scalar_mat(cv)], &eff, 0).unwrap();
        let want = h * uv * cv / (h * h * uv * uv * cv + mu);
        assert!((w[0][(0, 0)].re - want).abs() < 1e-14);
    }
}

#[test]
fn rank_deficient_gram_rejects_zero_multiplier() {
    let (cfg, eff) = scenario(2, 1, 4, Constraint::PerSat, 7);
    let (u, c) = combiners_and_weights(&cfg, &eff);
    assert!(matches!(
        update_precoders_per_sat(0.0, &u, &c, &eff, 0),
        Err(Error::SingularMatrix(_))
    ));
    assert!(update_precoders_per_sat(1.0, &u, &c, &eff, 0).is_ok());
}

#[test]
fn precoder_norm_shrinks_with_multiplier() {
    let (cfg, eff) = scenario(3, 3, 4, Constraint::PerSat, 8);
    let (u, c) = combiners_and_weights(&cfg, &eff);
    let norm = |mu: f64| -> f64 {
        update_precoders_per_sat(mu, &u, &c, &eff, 1)
            .unwrap()
            .iter()
            .map(|w| w.norm_squared())
            .sum()
    };
    for mu in [1e-3, 0.1, 1.0, 10.0] {
        assert!(norm(10.0 * mu) < norm(mu));
    }
}

#[test]
fn precoders_zero_lagrangian_gradient() {
    let (cfg, eff) = scenario(3, 3, 4, Constraint::PerSat, 9);
    let (u, c) = combiners_and_weights(&cfg, &eff);
    let sub = SatSubproblem::new(&u, &c, &eff, 2);
    let mu = 0.37;
    let w = update_precoders_per_sat(mu, &u, &c, &eff, 2).unwrap();
    let lag = |w: &[CMat]| sub.objective(w) + mu * w.iter().map(|x| x.norm_squared()).sum::<f64>();
    let base = lag(&w);
    // Central differences along real and imaginary directions of every entry.
    let scale = w.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let step = 1e-4 * scale;
    let mut worst = 0.0_f64;
    for k in 0..w.len() {
        for idx in 0..w[k].len() {
            for dir in [real(1.0), C64::new(0.0, 1.0)] {
                let mut plus = w.clone();
                let mut minus = w.clone();
                plus[k][idx] += dir * step;
                minus[k][idx] -= dir * step;
                worst = worst.max(((lag(&plus) - lag(&minus)) / (2.0 * step)).abs());
            }
        }
    }
    assert!(worst * scale < 1e-6 * base.abs(), "{worst} {base}");
}

#[test]
fn bisection_scalar_closed_form() {
    // A = 1, B = 1: power(μ) = 1 / (1 + μ)², so ρ = 1/4 gives μ* = 1.
    let eff = scalar_set(1.0);
    let opts = SolverOptions::default();
    let sol = solve_multiplier_per_sat(&[scalar_mat(1.0)], &[scalar_mat(1.0)], &eff, 0.25, 0, &opts).unwrap();
    assert!((sol.mu - 1.0).abs() < 1e-3, "{}", sol.mu);
    assert!(sol.power <= 0.25);
    assert!(sol.mu * (0.25 - sol.power) <= 1e-4 * 0.25);
}

#[test]
fn bisection_inactive_constraint() {
    let eff = scalar_set(1.0);
    let sol =
        solve_multiplier_per_sat(&[scalar_mat(1.0)], &[scalar_mat(1.0)], &eff, 2.0, 0, &SolverOptions::default()).unwrap();
    assert_eq!(sol.mu, 0.0);
    assert!((sol.w[0][(0, 0)].re - 1.0).abs() < 1e-14);
}

#[test]
fn bisection_reports_expansion_limit() {
    let eff = scalar_set(1.0);
    let opts = SolverOptions {
        max_expansions: 3,
        ..Default::default()
    };
    // μ* = 1/√ρ − 1 ≈ 999 needs about ten doublings.
    assert!(matches!(
        solve_multiplier_per_sat(&[scalar_mat(1.0)], &[scalar_mat(1.0)], &eff, 1e-6, 0, &opts),
        Err(Error::ExpansionLimit(3))
    ));
}

#[test]
fn subproblem_power_is_monotone_in_multiplier() {
    let (cfg, eff) = scenario(4, 4, 8, Constraint::PerSat, 10);
    let (u, c) = combiners_and_weights(&cfg, &eff);
    let sub = SatSubproblem::new(&u, &c, &eff, 0);
    let spec = SpectralSubproblem::new(&sub);
    let mu0 = solve_multiplier_per_sat(&u, &c, &eff, 50.0, 0, &cfg.solver).unwrap().mu.max(1e-3);
    let powers: Vec<f64> = [0.0, 0.1, 1.0, 10.0, 100.0].iter().map(|f| spec.power(f * mu0)).collect();
    assert!(powers.windows(2).all(|p| p[1] <= p[0]));
}

#[test]
fn bisection_solution_is_tight_and_matches_direct_solve() {
    let (cfg, eff) = scenario(4, 4, 8, Constraint::PerSat, 11);
    let (u, c) = combiners_and_weights(&cfg, &eff);
    for l in 0..4 {
        let sol = solve_multiplier_per_sat(&u, &c, &eff, 50.0, l, &cfg.solver).unwrap();
        assert!(sol.power <= 50.0);
        assert!(sol.mu * (50.0 - sol.power) <= 1e-4 * 50.0);
        if sol.mu > 0.0 {
            let direct = update_precoders_per_sat(sol.mu, &u, &c, &eff, l).unwrap();
            for (a, b) in direct.iter().zip(&sol.w) {
                assert!((a - b).norm() <= 1e-8 * a.norm());
            }
        }
    }
}

#[test]
fn uniform_antenna_multipliers_equal_satellite_multiplier() {
    let (cfg, eff) = scenario(3, 3, 4, Constraint::PerSat, 12);
    let (u, c) = combiners_and_weights(&cfg, &eff);
    let a = update_precoders_per_sat(0.2, &u, &c, &eff, 1).unwrap();
    let b = update_precoders_per_antenna(&[0.2; 4], &u, &c, &eff, 1).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() <= 1e-12 * x.norm());
    }
}

#[test]
fn per_antenna_precoders_zero_lagrangian_gradient() {
    let (cfg, eff) = scenario(3, 3, 4, Constraint::PerAntenna, 13);
    let (u, c) = combiners_and_weights(&cfg, &eff);
    let sub = SatSubproblem::new(&u, &c, &eff, 0);
    let mu = [0.1, 0.4, 0.02, 0.7];
    let w = update_precoders_per_antenna(&mu, &u, &c, &eff, 0).unwrap();
    let lag = |w: &[CMat]| {
        let p = crate::rate::antenna_powers(w);
        sub.objective(w) + mu.iter().zip(&p).map(|(m, p)| m * p).sum::<f64>()
    };
    let scale = w.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let step = 1e-4 * scale;
    let base = lag(&w);
    for k in 0..w.len() {
        for idx in 0..w[k].len() {
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus[k][idx] += real(step);
            minus[k][idx] -= real(step);
            let g = (lag(&plus) - lag(&minus)) / (2.0 * step);
            assert!(g.abs() * scale < 1e-6 * base.abs());
        }
    }
}

#[test]
fn ellipsoid_single_antenna_matches_bisection() {
    // N = 1 with several users and satellites.
    let (cfg, eff) = scenario(3, 2, 1, Constraint::PerSat, 14);
    let (u, c) = combiners_and_weights(&cfg, &eff);
    for l in 0..3 {
        let rho = 1e-3;
        let b = solve_multiplier_per_sat(&u, &c, &eff, rho, l, &cfg.solver).unwrap();
        let e = solve_multipliers_ellipsoid(&u, &c, &eff, &[rho], l, &cfg.solver.ellipsoid).unwrap();
        assert!((b.mu - e.mu[0]).abs() < 1e-3, "{} {}", b.mu, e.mu[0]);
        assert!((b.power - e.powers[0]).abs() < 1e-6 * rho);
    }
}

#[test]
fn ellipsoid_inactive_constraint_returns_zero() {
    let eff = scalar_set(1.0);
    let sol = solve_multipliers_ellipsoid(&[scalar_mat(1.0)], &[scalar_mat(1.0)], &eff, &[2.0], 0, &Default::default())
        .unwrap();
    assert_eq!(sol.mu, vec![0.0]);
    assert_eq!(sol.iterations, 0);
}

#[test]
fn ellipsoid_symmetric_problem_has_equal_multipliers() {
    // Broadside links: every antenna sees the same channel, so the dual is
    // invariant under antenna permutations.
    let n = 4;
    let one = |len| CVec::from_element(len, real(1.0));
    let eff = EffectiveChannelSet::from_parts(vec![vec![1.0]], vec![vec![one(1)]], vec![vec![one(n)]]);
    let rho = vec![0.01; n];
    let sol = solve_multipliers_ellipsoid(&[scalar_mat(1.0)], &[scalar_mat(1.0)], &eff, &rho, 0, &Default::default())
        .unwrap();
    let (lo, hi) = sol.mu.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &m| (a.min(m), b.max(m)));
    assert!(hi - lo < 1e-4, "{:?}", sol.mu);
    for p in &sol.powers {
        assert!(*p <= 0.01 * (1.0 + 1e-6));
    }
}

#[test]
fn ellipsoid_solution_is_feasible_and_slack() {
    let (cfg, eff) = scenario(4, 4, 8, Constraint::PerAntenna, 15);
    let (u, c) = combiners_and_weights(&cfg, &eff);
    let Budget::PerAntenna(rho) = &cfg.budget else { unreachable!() };
    for l in 0..4 {
        let sol = solve_multipliers_ellipsoid(&u, &c, &eff, &rho[l], l, &cfg.solver.ellipsoid).unwrap();
        for ((m, p), r) in sol.mu.iter().zip(&sol.powers).zip(&rho[l]) {
            assert!(*m >= 0.0);
            assert!(*p <= r * (1.0 + 1e-6));
            assert!((m * (p - r)).abs() <= 1e-4 * r, "mu {m} p {p} r {r}");
        }
    }
}

#[test]
fn ellipsoid_warm_start_agrees_with_cold_start() {
    let (cfg, eff) = scenario(4, 4, 8, Constraint::PerAntenna, 15);
    let (u, c) = combiners_and_weights(&cfg, &eff);
    let Budget::PerAntenna(rho) = &cfg.budget else { unreachable!() };
    let opts = &cfg.solver.ellipsoid;
    let sub = SatSubproblem::new(&u, &c, &eff, 1);
    let cold = ellipsoid::solve_subproblem(&sub, &rho[1], opts, None).unwrap();
    let near: Vec<f64> = cold.mu.iter().map(|m| m * 1.01).collect();
    // A hint whose small ball misses the optimum must fall back.
    let far: Vec<f64> = cold.mu.iter().map(|m| m * 40.0 + 1.0).collect();
    for hint in [near, far] {
        let warm = ellipsoid::solve_subproblem(&sub, &rho[1], opts, Some(&hint)).unwrap();
        for (a, b) in warm.mu.iter().zip(&cold.mu) {
            assert!((a - b).abs() <= 2.0 * opts.mu_atol, "{a} {b}");
        }
        assert!((sub.objective(&warm.w) - sub.objective(&cold.w)).abs() <= 1e-9 * sub.objective(&cold.w).abs());
    }
}

#[test]
fn init_splits_budget_by_root_gain() {
    let (cfg, eff) = scenario(3, 4, 4, Constraint::PerSat, 16);
    let pre = init_precoders(&eff, &cfg.budget, cfg.noise_power).unwrap();
    for l in 0..3 {
        assert!((pre.sat_power(l) - 50.0).abs() < 1e-12 * 50.0);
        let split = power_split(&eff, l);
        for k in 0..4 {
            assert!((pre.w[l][k].norm_squared() - 50.0 * split[k]).abs() < 1e-12 * 50.0);
        }
    }
    let equal = EffectiveChannelSet::from_parts(vec![vec![2e-16; 4]; 3], eff.b.clone(), eff.a.clone());
    let pre = init_precoders(&equal, &cfg.budget, cfg.noise_power).unwrap();
    assert!((pre.w[0][2].norm_squared() - 12.5).abs() < 1e-12 * 12.5);

    let (cfg, eff) = scenario(3, 4, 4, Constraint::PerAntenna, 16);
    let pre = init_precoders(&eff, &cfg.budget, cfg.noise_power).unwrap();
    for l in 0..3 {
        for p in pre.antenna_powers(l) {
            assert!((p - 12.5).abs() < 1e-12 * 12.5);
        }
    }
}

#[test]
fn scalar_solve_matches_grid_search() {
    let beta = 1.418e-16;
    let sigma2 = crate::scenario::dbm_to_watts(-124.0);
    let rho = 50.0;
    let eff = scalar_set(beta);
    let st = wmmse_solve(&eff, &Budget::PerSat(vec![rho]), sigma2, &SolverOptions::default()).unwrap();
    let got = approx_rate(&eff, &st.precoders, sigma2).unwrap().sum;
    let steps = (rho.sqrt() / 1e-4) as usize;
    let best = (0..=steps)
        .map(|i| (i as f64 * 1e-4).min(rho.sqrt()))
        .map(|w| (1.0 + beta * w * w / sigma2).log2())
        .fold(0.0, f64::max);
    assert!((got - best).abs() < 1e-3, "{got} {best}");
}

#[test]
fn solve_improves_on_start_for_single_link() {
    let (cfg, eff) = scenario(1, 1, 8, Constraint::PerSat, 17);
    let init = init_precoders(&eff, &cfg.budget, cfg.noise_power).unwrap();
    let st = wmmse_solve(&eff, &cfg.budget, cfg.noise_power, &cfg.solver).unwrap();
    let a = approx_rate(&eff, &init, cfg.noise_power).unwrap().sum;
    let b = approx_rate(&eff, &st.precoders, cfg.noise_power).unwrap().sum;
    assert!(b >= a - 1e-9);
}

#[test]
fn default_scenario_descends_monotonically() {
    let cfg = ScenarioConfig::default();
    let g = build_geometry(&cfg, &mut rng_for(cfg.seed, Purpose::Drop, 0)).unwrap();
    let eff = EffectiveChannelSet::from_geometry(&g, cfg.user_antennas, cfg.sat_antennas, cfg.spacing);
    let st = wmmse_solve(&eff, &cfg.budget, cfg.noise_power, &cfg.solver).unwrap();
    assert!(st.iterations <= 200 && st.objective_trace.len() == st.iterations);
    for w in st.objective_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-9 * w[0].abs());
    }
    assert!(st.precoders.satisfies_budget(1e-9));
    let init = init_precoders(&eff, &cfg.budget, cfg.noise_power).unwrap();
    let r0 = approx_rate(&eff, &init, cfg.noise_power).unwrap().sum;
    let r1 = approx_rate(&eff, &st.precoders, cfg.noise_power).unwrap().sum;
    assert!(r1 >= r0);
    let last = *st.objective_trace.last().unwrap();
    assert!((last - (objective_offset(8, 16) - r1)).abs() < 1e-6 * last.abs().max(1.0) + 1e-3);
}

#[test]
fn per_antenna_solve_stays_feasible() {
    let (cfg, eff) = scenario(3, 3, 4, Constraint::PerAntenna, 18);
    let st = wmmse_solve(&eff, &cfg.budget, cfg.noise_power, &cfg.solver).unwrap();
    assert!(st.precoders.satisfies_budget(1e-6));
    assert!(st.mu.all_nonnegative());
    for w in st.objective_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-9 * w[0].abs());
    }
}

#[test]
fn single_satellite_streams_reduce_to_square_combiners() {
    let (cfg, eff) = scenario(1, 2, 4, Constraint::PerSat, 19);
    let (u, c) = combiners_and_weights(&cfg, &eff);
    assert_eq!((u[0].nrows(), u[0].ncols()), (2, 2));
    assert_eq!((c[0].nrows(), c[0].ncols()), (2, 2));
}

/// The coherent `M × M` MSE form, where the desired term is
/// `Σ_l H̃_{l,k} W_{l,k}` but the covariance only carries same-satellite
/// terms. Used to show why the stacked-stream form is needed.
fn coherent_mse(u: &CMat, pre: &PrecoderSet, eff: &EffectiveChannelSet, sigma2: f64, k: usize) -> CMat {
    let r = received_covariance(pre, eff, sigma2, k);
    let mut g = CMat::zeros(eff.user_antennas(), eff.user_antennas());
    for l in 0..eff.num_sats() {
        g += &eff.h[l][k] * &pre.w[l][k];
    }
    let cross = u.adjoint() * &g;
    hermitian_part(&(u.adjoint() * r * u - &cross - cross.adjoint() + identity(u.ncols())))
}

#[test]
fn coherent_mse_form_is_not_positive_definite_with_many_satellites() {
    // With coherent signal and incoherent covariance, the minimum MSE can be
    // indefinite, so `C = E⁻¹/ln2` is not a valid weight.
    let (cfg, eff) = scenario(8, 8, 8, Constraint::PerSat, 20);
    let pre = init_precoders(&eff, &cfg.budget, cfg.noise_power).unwrap();
    let mut found = false;
    for k in 0..8 {
        let r = received_covariance(&pre, &eff, cfg.noise_power, k);
        let mut g = CMat::zeros(2, 2);
        for l in 0..8 {
            g += &eff.h[l][k] * &pre.w[l][k];
        }
        let u = solve_hpd(&r, &g, "r").unwrap();
        let e = coherent_mse(&u, &pre, &eff, cfg.noise_power, k);
        let min_eig = e.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &v| a.min(v));
        found |= min_eig < 0.0;
    }
    assert!(found);
    // The stacked-stream MSE at its optimal combiner is always positive definite.
    let u = update_combiners(&pre, &eff, cfg.noise_power).unwrap();
    for k in 0..8 {
        let MseMatrix(e) = mse_matrix(&u[k], &pre, &eff, cfg.noise_power, k);
        assert!(e.symmetric_eigenvalues().iter().all(|&v| v > 0.0));
    }
}

#[test]
fn stacked_precoder_combiner_does_not_minimise_coherent_mse() {
    let (cfg, eff) = scenario(3, 2, 4, Constraint::PerSat, 21);
    let pre = init_precoders(&eff, &cfg.budget, cfg.noise_power).unwrap();
    let k = 0;
    // (Σ_i H̃_k W_i W_iᴴ H̃_kᴴ + σ²I)⁻¹ H̃_k W_k with full stacking includes
    // cross-satellite terms that the covariance omits.
    let hk = eff.stacked_for_user(k);
    let mut full = identity(2).scale(cfg.noise_power);
    let stack_w = |i: usize| {
        let mut s = CMat::zeros(3 * 4, 2);
        for l in 0..3 {
            s.view_mut((l * 4, 0), (4, 2)).copy_from(&pre.w[l][i]);
        }
        s
    };
    for i in 0..2 {
        let hw = &hk * stack_w(i);
        full += &hw * hw.adjoint();
    }
    let u = solve_hpd(&full, &(&hk * stack_w(k)), "full").unwrap();
    let base = re_trace(&coherent_mse(&u, &pre, &eff, cfg.noise_power, k));
    let r = received_covariance(&pre, &eff, cfg.noise_power, k);
    let g = &hk * stack_w(k);
    let u_opt = solve_hpd(&r, &g, "r").unwrap();
    let better = re_trace(&coherent_mse(&u_opt, &pre, &eff, cfg.noise_power, k));
    assert!(better < base - 1e-9 * base.abs());
}

#[test]
fn parallel_and_repeated_solves_are_identical() {
    let (cfg, eff) = scenario(4, 3, 4, Constraint::PerSat, 22);
    let a = wmmse_solve(&eff, &cfg.budget, cfg.noise_power, &cfg.solver).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| wmmse_solve(&eff, &cfg.budget, cfg.noise_power, &cfg.solver).unwrap());
    assert_eq!(a.objective_trace, b.objective_trace);
    assert_eq!(a.precoders, b.precoders);
}

#[test]
fn virtual_channel_concatenates_satellite_blocks() {
    let (cfg, eff) = scenario(3, 2, 4, Constraint::PerSat, 23);
    let pre = init_precoders(&eff, &cfg.budget, cfg.noise_power).unwrap();
    let g = virtual_channel(&pre, &eff, 1);
    assert_eq!((g.nrows(), g.ncols()), (2, 6));
    let block = &eff.h[2][1] * &pre.w[2][1];
    assert!((g.columns(4, 2) - block).norm() == 0.0);
}
