use proptest::prelude::*;

use cfsat::channel::EffectiveChannelSet;
use cfsat::geometry::build_geometry;
use cfsat::rate::approx_rate;
use cfsat::scenario::Constraint;
use cfsat::solver::wmmse_solve;
use cfsat::streams::{rng_for, Purpose};
use cfsat::{Budget, ScenarioConfig};

fn drop(l: usize, k: usize, n: usize, constraint: Constraint, rho: f64, seed: u64) -> (ScenarioConfig, EffectiveChannelSet) {
    let mut cfg = ScenarioConfig {
        num_sats: l,
        num_users: k,
        sat_antennas: n,
        budget: Budget::uniform(constraint, l, n, rho),
        ..Default::default()
    };
    cfg.solver.max_iters = 15;
    let geom = build_geometry(&cfg, &mut rng_for(seed, Purpose::Drop, 0)).unwrap();
    let eff = EffectiveChannelSet::from_geometry(&geom, cfg.user_antennas, cfg.sat_antennas, cfg.spacing);
    (cfg, eff)
}

fn constraint() -> impl Strategy<Value = Constraint> {
    prop_oneof![Just(Constraint::PerSat), Just(Constraint::PerAntenna)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_descends_and_stays_feasible(
        l in 1usize..=3,
        k in 1usize..=3,
        n in prop_oneof![Just(2usize), Just(4)],
        c in constraint(),
        rho in 1.0f64..100.0,
        seed in 0u64..1000,
    ) {
        let (cfg, eff) = drop(l, k, n, c, rho, seed);
        let st = wmmse_solve(&eff, &cfg.budget, cfg.noise_power, &cfg.solver).unwrap();
        for w in st.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs(), "objective rose {} -> {}", w[0], w[1]);
        }
        prop_assert!(st.precoders.satisfies_budget(1e-6));
        prop_assert!(st.mu.all_nonnegative());
        let r = approx_rate(&eff, &st.precoders, cfg.noise_power).unwrap();
        prop_assert!(r.sum.is_finite() && r.per_ue.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn rate_depends_only_on_snr(
        l in 1usize..=3,
        k in 1usize..=3,
        scale in 0.1f64..10.0,
        seed in 0u64..1000,
    ) {
        let (cfg, eff) = drop(l, k, 4, Constraint::PerSat, 20.0, seed);
        let mut st_cfg = cfg.solver.clone();
        st_cfg.max_iters = 2;
        let pre = wmmse_solve(&eff, &cfg.budget, cfg.noise_power, &st_cfg).unwrap().precoders;
        let base = approx_rate(&eff, &pre, cfg.noise_power).unwrap();
        let mut scaled = pre.clone();
        scaled.w.iter_mut().flatten().for_each(|w| *w *= cfsat::C64::new(scale, 0.0));
        let again = approx_rate(&eff, &scaled, cfg.noise_power * scale * scale).unwrap();
        prop_assert!((base.sum - again.sum).abs() <= 1e-9 * base.sum.max(1.0));

        let mut silent = pre;
        silent.w.iter_mut().flatten().for_each(|w| w.fill(cfsat::C64::new(0.0, 0.0)));
        prop_assert_eq!(approx_rate(&eff, &silent, cfg.noise_power).unwrap().sum, 0.0);
    }
}
