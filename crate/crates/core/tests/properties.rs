use nasch::engine::{checksum_trajectory, TrajectoryHasher};
use nasch::io::{read_params, write_params};
use nasch::{
    agent_to_grid, grid_to_agent, init_state, make_partition, run, step_grid_serial, step_parallel,
    step_serial, LcgState, OutputMode, SimParams,
};
use num_bigint::BigUint;
use proptest::prelude::*;

fn big_iterate(seed: u64, k: u64) -> u64 {
    let (a, m) = (BigUint::from(48_271u32), BigUint::from(2_147_483_647u32));
    let mut s = BigUint::from(seed) % &m;
    for _ in 0..k {
        s = (&s * &a) % &m;
    }
    u64::try_from(s).unwrap()
}

#[test]
fn ten_thousandth_draw() {
    let oracle = big_iterate(1, 10_000);
    assert_eq!(oracle, 399_268_537);
    let mut rng = LcgState::seeded(1);
    let mut last = 0;
    for _ in 0..10_000 {
        last = rng.next_raw();
    }
    assert_eq!(last, oracle);
    assert_eq!(LcgState::seeded(1).jumped(10_000).state(), oracle);
}

#[test]
fn million_jump_and_mean() {
    // Frozen from an arbitrary-precision sequential run.
    assert_eq!(LcgState::seeded(1).jumped(1_000_000).state(), 1_263_606_197);
    assert_eq!(LcgState::seeded(42).jumped(12_345).state(), 2_090_319_593);

    let mut rng = LcgState::seeded(1);
    let mut sum = 0.0;
    for _ in 0..1_000_000 {
        let u = rng.next_uniform();
        assert!(u > 0.0 && u < 1.0);
        sum += u;
    }
    // Exact mean is 0.49976353...
    let mean = sum / 1e6;
    assert!((0.499..=0.501).contains(&mean), "{mean}");
    assert!((mean - 0.499_763_530_666).abs() < 1e-9);
}

#[test]
fn no_early_period() {
    let mut rng = LcgState::seeded(1);
    for _ in 0..1_000_000 {
        assert_ne!(rng.next_raw(), 1);
    }
}

fn small_params() -> impl Strategy<Value = SimParams> {
    (1usize..120, 0.0f64..=1.0, 1u32..8, 0u64..60, any::<u64>()).prop_flat_map(
        |(l, p, v_max, steps, seed)| {
            (1..=l).prop_map(move |n| SimParams {
                road_length: l,
                car_count: n,
                v_max,
                p,
                steps,
                seed,
                output_mode: OutputMode::None,
                output_stride: 1,
            })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jump_composes(seed in any::<u64>(), j in 0u64..1 << 40, k in 0u64..1 << 40) {
        let s = LcgState::seeded(seed);
        prop_assert_eq!(s.jumped(j).jumped(k), s.jumped(j + k));
    }

    #[test]
    fn jump_matches_iteration(seed in any::<u64>(), k in 0u64..3000) {
        let mut seq = LcgState::seeded(seed);
        for _ in 0..k {
            seq.next_raw();
        }
        prop_assert_eq!(LcgState::seeded(seed).jumped(k), seq);
    }

    #[test]
    fn states_stay_in_range(a in 1u64..2_147_483_647, seed in any::<u64>(), k in any::<u64>()) {
        let s = LcgState::with_multiplier(a, seed).jumped(k);
        prop_assert!(s.state() > 0 && s.state() < 2_147_483_647);
    }

    #[test]
    fn worker_count_invariance(params in small_params(), w1 in 1usize..10, w2 in 1usize..10) {
        let a = run(&params, w1).unwrap();
        let b = run(&params, w2).unwrap();
        prop_assert_eq!(a.checksum, b.checksum);
        prop_assert_eq!(&a.final_state, &b.final_state);
        prop_assert_eq!(a.draws_consumed, params.steps * params.car_count as u64);
        prop_assert!(a.jump_stats.max_span <= params.car_count as u64);
    }

    #[test]
    fn serial_equivalence(params in small_params(), workers in 1usize..6) {
        let seed = LcgState::seeded(params.seed);
        let mut rng = seed;
        let mut serial = init_state(&params).unwrap();
        let mut stepped = serial.clone();
        let mut hasher = TrajectoryHasher::new();
        hasher.write_state(&serial);
        let partition = make_partition(params.car_count, workers);
        for t in 0..params.steps {
            serial = step_serial(&serial, &mut rng, &params);
            stepped = step_parallel(&stepped, &seed, t, &partition, &params);
            prop_assert_eq!(&serial, &stepped);
            hasher.write_state(&serial);
        }
        prop_assert_eq!(run(&params, workers).unwrap().checksum, hasher.finish());
    }

    #[test]
    fn grid_matches_agent(params in small_params()) {
        let mut agent = init_state(&params).unwrap();
        let mut grid = agent_to_grid(&agent);
        let mut ra = LcgState::seeded(params.seed);
        let mut rg = ra;
        for _ in 0..params.steps {
            agent = step_serial(&agent, &mut ra, &params);
            grid = step_grid_serial(&grid, &mut rg, &params);
            prop_assert_eq!(&agent_to_grid(&agent), &grid);
            prop_assert_eq!(grid.car_count(), params.car_count);
        }
        prop_assert_eq!(ra, rg);
    }

    #[test]
    fn zero_p_ignores_seed(mut params in small_params(), other in any::<u64>()) {
        params.p = 0.0;
        let a = run(&params, 1).unwrap();
        params.seed = other;
        let b = run(&params, 3).unwrap();
        prop_assert_eq!(a.checksum, b.checksum);
    }

    #[test]
    fn conversion_round_trip(params in small_params(), steps in 0u64..30) {
        let mut s = init_state(&params).unwrap();
        let mut rng = LcgState::seeded(params.seed);
        for _ in 0..steps {
            s = step_serial(&s, &mut rng, &params);
        }
        prop_assert_eq!(grid_to_agent(&agent_to_grid(&s)), s);
    }

    #[test]
    fn params_file_round_trip(params in small_params(), threads in 1usize..64, stride in 1u64..10, mode in 0..3) {
        let params = SimParams {
            output_stride: stride,
            output_mode: [OutputMode::None, OutputMode::Ascii, OutputMode::Pgm][mode as usize],
            ..params
        };
        let text = write_params(&params, threads);
        let (back, t) = read_params(&text).unwrap();
        prop_assert_eq!(&back, &params);
        prop_assert_eq!(t, threads);
        prop_assert_eq!(write_params(&back, t), text);
    }

    #[test]
    fn checksum_sees_velocity_changes(
        positions in prop::collection::vec(0u64..1000, 1..20),
        seed in any::<u64>(),
        idx in any::<prop::sample::Index>(),
        delta in 1u64..6,
    ) {
        let velocities: Vec<u64> = positions.iter().map(|x| (x ^ seed) % 6).collect();
        let mut changed = velocities.clone();
        let i = idx.index(changed.len());
        changed[i] += delta;
        let a = checksum_trajectory([(&positions[..], &velocities[..])]);
        let b = checksum_trajectory([(&positions[..], &changed[..])]);
        prop_assert_ne!(a, b);
    }
}
