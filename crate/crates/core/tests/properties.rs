use mctune::trace::Trace;
use mctune::{
    derive_launch, deterministic_run, enumerate_configs, initial_state, PlatformConfig, Policy,
    ProblemSpec, TuningParams,
};
use proptest::prelude::*;

fn pow2(lo: u32, hi: u32) -> impl Strategy<Value = u32> {
    (lo..=hi).prop_map(|k| 1u32 << k)
}

fn platform() -> impl Strategy<Value = PlatformConfig> {
    (pow2(0, 2), pow2(0, 2), pow2(0, 3), 1u32..6)
        .prop_map(|(nd, nu, np, gmt)| PlatformConfig::new(nd, nu, np, gmt).unwrap())
}

fn size_and_params() -> impl Strategy<Value = (u32, TuningParams)> {
    (2u32..=7).prop_flat_map(|n| {
        let size = 1u32 << n;
        (Just(size), pow2(1, n - 1), pow2(1, n - 1))
            .prop_map(|(size, wg, ts)| (size, TuningParams::new(wg, ts)))
    })
}

proptest! {
    #[test]
    fn launch_plan_fits_the_platform(p in platform(), (size, params) in size_and_params()) {
        let plan = derive_launch(&p, size, params).unwrap();
        prop_assert!(plan.wgs >= 1);
        prop_assert!(plan.nwd >= 1 && plan.nwd <= p.nd);
        prop_assert!(plan.nwu >= 1 && plan.nwu <= p.nu);
        prop_assert!(plan.nwe >= 1 && plan.nwe <= p.np && plan.nwe <= params.wg);
        prop_assert_eq!(plan.all_nwe, plan.nwe * plan.nwu * plan.nwd);
        prop_assert_eq!(plan.rounds(params) * plan.nwe, params.wg);
        prop_assert_eq!(derive_launch(&p, size, params).unwrap(), plan);
    }

    #[test]
    fn enumeration_is_valid_and_complete((size, params) in size_and_params()) {
        let configs = enumerate_configs(size).unwrap();
        let n = size.trailing_zeros() as usize;
        prop_assert_eq!(configs.len(), (n - 1) * (n - 1));
        prop_assert!(configs.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(configs.iter().all(|c| c.validate(size).is_ok()));
        prop_assert!(configs.contains(&params));
    }

    #[test]
    fn bad_params_are_rejected(size in pow2(2, 7), wg in 0u32..200, ts in 0u32..200) {
        let params = TuningParams::new(wg, ts);
        let listed = enumerate_configs(size).unwrap().contains(&params);
        prop_assert_eq!(params.validate(size).is_ok(), listed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn final_time_is_schedule_independent(
        (size, params) in size_and_params().prop_filter("small", |(s, _)| *s <= 32),
        seed in any::<u64>(),
    ) {
        let p = PlatformConfig::new(1, 1, 4, 4).unwrap();
        let problem = ProblemSpec::abstract_kernel(size).unwrap();
        let rr = deterministic_run(&p, &problem, params, Policy::RoundRobin).unwrap();
        let rnd = deterministic_run(&p, &problem, params, Policy::SeededRandom(seed)).unwrap();
        prop_assert_eq!(rr.time, rnd.time);
        let again = deterministic_run(&p, &problem, params, Policy::SeededRandom(seed)).unwrap();
        prop_assert_eq!(rnd.trace, again.trace);
    }

    #[test]
    fn minimum_kernel_finds_the_minimum(
        input in (2u32..=5).prop_flat_map(|n| prop::collection::vec(-10_000i64..10_000, 1usize << n)),
        pick in any::<prop::sample::Index>(),
        seed in any::<u64>(),
    ) {
        let p = PlatformConfig::new(1, 1, 4, 4).unwrap();
        let expected = *input.iter().min().unwrap();
        let problem = ProblemSpec::minimum(input).unwrap();
        let feasible: Vec<_> = enumerate_configs(problem.size)
            .unwrap()
            .into_iter()
            .filter(|c| initial_state(&p, &problem, *c).is_ok())
            .collect();
        prop_assume!(!feasible.is_empty());
        let params = feasible[pick.index(feasible.len())];
        let run = deterministic_run(&p, &problem, params, Policy::SeededRandom(seed)).unwrap();
        prop_assert_eq!(run.result, Some(expected));
    }

    #[test]
    fn trace_text_roundtrips(
        (size, params) in size_and_params().prop_filter("small", |(s, _)| *s <= 16),
        seed in any::<u64>(),
    ) {
        let p = PlatformConfig::new(1, 1, 4, 4).unwrap();
        let problem = ProblemSpec::abstract_kernel(size).unwrap();
        let run = deterministic_run(&p, &problem, params, Policy::SeededRandom(seed)).unwrap();
        let text = run.trace.render(&p, &problem).unwrap();
        let parsed = Trace::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &run.trace);
        prop_assert_eq!(parsed.render(&p, &problem).unwrap(), text);
    }
}
