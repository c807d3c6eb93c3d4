use cv2x_core::markov::collision_probability;
use cv2x_core::*;
use proptest::prelude::*;

fn grid() -> impl Iterator<Item = (f64, f64)> {
    (0..10).flat_map(|i| (0..10).map(move |j| (f64::from(i) / 10.0, f64::from(j) / 10.0)))
}

#[test]
fn rows_stochastic_and_distribution_normalized_on_grid() {
    let params = DcfParameters::new(7, 5, 1, 15.0).unwrap();
    for (p_c, p_b) in grid() {
        let t = build_transition_matrix(&params, p_c, p_b).unwrap();
        for r in 0..t.dim() {
            assert!((t.row_sum(r) - 1.0).abs() <= 1e-12);
        }
        let d = stationary_distribution(&params, p_c, p_b).unwrap();
        assert!((d.total() - 1.0).abs() <= 1e-12);
        assert!(d.iter().all(|v| (0.0..=1.0).contains(&v)));
        assert!(d.balance_residual(&t) <= 1e-10);
    }
}

#[test]
fn fixed_point_is_monotone_in_station_count() {
    let mut previous: Option<(u32, FixedPointSolution)> = None;
    for n in [1, 2, 3, 5, 8, 13, 21, 34, 50] {
        let params = DcfParameters::new(7, 5, n, 15.0).unwrap();
        let s = solve_fixed_point(&params, 1e-10, 10_000).unwrap();
        if let Some((m, p)) = &previous {
            assert!(s.tau <= p.tau, "tau rose at n = {n}");
            assert!(s.p_collision >= p.p_collision, "p_c fell at n = {n}");
            let pdr_prev = analytic_pdr(p.tau, *m).unwrap();
            assert!(analytic_pdr(s.tau, n).unwrap() <= pdr_prev + 1e-12);
        }
        previous = Some((n, s));
    }
}

#[test]
fn fixed_point_satisfies_both_equations() {
    for countdown in [Countdown::VirtualSlot, Countdown::FreezeOnBusy] {
        let params = DcfParameters::new(7, 5, 25, 15.0)
            .unwrap()
            .with_countdown(countdown);
        let s = solve_fixed_point(&params, 1e-10, 10_000).unwrap();
        assert_eq!(s.p_collision, collision_probability(s.tau, 25));
        let image = transmission_probability(&s.stationary);
        assert!((image - s.tau).abs() < 1e-8);
        assert!(s.residual <= 1e-10);
    }
}

#[test]
fn coin_flip_oracle_for_channel_probabilities() {
    use rand::{Rng, SeedableRng};
    let trials = 1_000_000u32;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for tau in [0.1, 0.3] {
        for n in [2u32, 10, 50] {
            let (mut busy, mut single) = (0u32, 0u32);
            for _ in 0..trials {
                let k = (0..n).filter(|_| rng.gen::<f64>() < tau).count();
                if k > 0 {
                    busy += 1;
                }
                if k == 1 {
                    single += 1;
                }
            }
            let p_any = prob_any_transmission(tau, n);
            let freq = f64::from(busy) / f64::from(trials);
            let se = (p_any * (1.0 - p_any) / f64::from(trials)).sqrt();
            assert!(
                (freq - p_any).abs() <= 3.0 * se.max(1e-12),
                "any tau={tau} n={n}"
            );

            let p_su = prob_success_given_any(tau, n).unwrap();
            let freq = f64::from(single) / f64::from(busy);
            let se = (p_su * (1.0 - p_su) / f64::from(busy)).sqrt();
            assert!(
                (freq - p_su).abs() <= 3.0 * se.max(1e-12),
                "success tau={tau} n={n}"
            );
        }
    }
}

proptest! {
    #[test]
    fn five_states_partition_unity(tau_tx in 0.0..=1.0f64, tau_nb in 0.0..=1.0f64, n in 1u32..200) {
        let s = state_probabilities(tau_tx, tau_nb, n).unwrap();
        prop_assert_eq!(s.sum(), 1.0);
        for p in [s.p_idle, s.p_success, s.p_busy, s.p_collision, s.p_own_tx] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn throughput_is_a_fraction(tau in 0.0..=1.0f64, n in 1u32..=100, rate in 1.0..54.0f64, payload in 1u32..3000) {
        let timing = TimingProfile { data_rate: rate, payload_bytes: payload, ..TimingProfile::default() };
        let s = normalized_throughput(tau, n, &timing).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn delay_is_additive(tau in 0.0..=1.0f64, n in 0u32..100, cw in 1u32..64) {
        let states = state_probabilities(tau, tau, n.max(1)).unwrap();
        let d = total_delay(&states, n, &TimingProfile::default(), cw).unwrap();
        prop_assert_eq!(d.t_total, d.t_transmission + d.t_collision + d.cw_star + d.t_empirical);
        for v in [d.t_transmission, d.t_collision, d.cw_star, d.t_empirical] {
            prop_assert!(v >= 0.0);
        }
    }

    #[test]
    fn risk_is_anti_monotone_in_distance(d1 in 0.0..2000.0f64, d2 in 0.0..2000.0f64, t in 1.0..1000.0f64) {
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(risk_level(near, t).unwrap() >= risk_level(far, t).unwrap());
    }

    #[test]
    fn risk_grows_with_threshold(d in 0.0..500.0f64, t1 in 1.0..1000.0f64, t2 in 1.0..1000.0f64) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(risk_level(d, lo).unwrap() <= risk_level(d, hi).unwrap());
    }

    #[test]
    fn riskier_vehicles_get_smaller_windows(r1 in 0.0..=1.0f64, r2 in 0.0..=1.0f64, cw in 1u32..64) {
        let (low, high) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(effective_contention_window(high, cw) <= effective_contention_window(low, cw));
        prop_assert!(effective_contention_window(high, cw) >= 1);
    }

    #[test]
    fn authorization_grows_with_threshold(seed in 0u64..1000, t1 in 1.0..1200.0f64, t2 in 1.0..1200.0f64) {
        let s = generate_scenario(seed, 30, 1000.0, 4.0).unwrap();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = authorized_transmitters(&s, lo, 7).unwrap();
        let b = authorized_transmitters(&s, hi, 7).unwrap();
        prop_assert!(a.authorized_ids.is_subset(&b.authorized_ids));
    }

    #[test]
    fn scenario_records_are_lossless(seed in any::<u64>(), n in 2usize..60, sep in 0.0..10.0f64) {
        let s = generate_scenario(seed, n, 1000.0, sep).unwrap();
        let text = s.to_records();
        let back = Scenario::from_records(&text).unwrap();
        prop_assert_eq!(back.to_records(), text);
        prop_assert_eq!(back, s);
    }
}
