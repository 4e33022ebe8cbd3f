use std::collections::BTreeMap;

use proptest::prelude::*;
use streamtune::baseline::{
    expected_improvement, BayesOpt, BoParams, ConcurrencyOptimizer, GaussianProcess, GdParams, GradientDescent,
    NoOptimizer, Observation,
};
use streamtune::bench::jain_index;
use streamtune::env::{apply_action, build_signal, reward, Action, RewardParams, SignalTracker};
use streamtune::link::{Link, LinkScenario, TransferStats};

const MANY: u32 = 10_000;

fn stats(throughput: f64, loss: f64, rtt: f64) -> TransferStats {
    TransferStats { throughput, loss_rate: loss, stream_count: 1, mean_rtt: rtt, retransmissions: 0 }
}

fn action() -> impl Strategy<Value = Action> {
    (0usize..Action::COUNT).prop_map(|i| Action::from_index(i).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(MANY))]

    #[test]
    fn actions_stay_in_bounds(lo in 1u32..100, span in 0u32..100, n in 0u32..300, a in action()) {
        let hi = lo + span;
        let n = n.clamp(lo, hi);
        let next = apply_action(n, a, lo, hi);
        prop_assert!(next >= lo && next <= hi);
        let free = n as i64 + a.delta();
        if free >= lo as i64 && free <= hi as i64 {
            prop_assert_eq!(next as i64, free);
        }
    }

    #[test]
    fn rtt_ratio_at_least_one(rtts in prop::collection::vec(1e-4f64..2.0, 1..40)) {
        let mut t = SignalTracker::new(8, 1.0, 1000.0);
        for rtt in rtts {
            let sv = t.observe(&stats(100.0, 0.001, rtt)).unwrap();
            prop_assert!(sv.rtt_ratio >= 1.0, "ratio {}", sv.rtt_ratio);
        }
    }

    #[test]
    fn rtt_ratio_at_least_one_for_any_minimum(rtt in 1e-4f64..2.0, min in 1e-4f64..2.0) {
        let sv = build_signal(&stats(1.0, 0.0, rtt), None, min, 1.0, 1.0).unwrap();
        prop_assert!(sv.rtt_ratio >= 1.0);
    }

    #[test]
    fn reward_is_three_valued(u in -1e6f64..1e6, prev in -1e6f64..1e6, eps in 0.0f64..1e3) {
        let p = RewardParams { epsilon: eps, ..Default::default() };
        let r = reward(u, prev, &p);
        prop_assert!(r == 1.0 || r == -1.0 || r == 0.0);
        let d = u - prev;
        if d > eps {
            prop_assert_eq!(r, 1.0);
        } else if d < -eps {
            prop_assert_eq!(r, -1.0);
        } else {
            prop_assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn jain_is_scale_invariant(x in prop::collection::vec(0.0f64..1e4, 1..12), c in 1e-3f64..1e3) {
        prop_assume!(x.iter().any(|&v| v > 1e-6));
        let j = jain_index(&x).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let js = jain_index(&scaled).unwrap();
        prop_assert!((j - js).abs() <= 1e-12 * j.max(1.0), "{j} vs {js}");
        prop_assert!(j > 0.0 && j <= 1.0 + 1e-12);
    }

    #[test]
    fn expected_improvement_is_non_negative(m in -1e3f64..1e3, sd in 0.0f64..1e3, best in -1e3f64..1e3) {
        prop_assert!(expected_improvement(m, sd, best) >= 0.0);
    }
}

fn utility_seq() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![-1e9f64..1e9, -10.0f64..10.0, Just(0.0), Just(f64::MAX / 4.0), Just(-f64::MAX / 4.0)],
        10..40,
    )
}

fn observe_all(opt: &mut dyn ConcurrencyOptimizer, us: &[f64], lo: u32, hi: u32) -> Result<(), TestCaseError> {
    let mut d = opt.start();
    prop_assert!(d.next_stream_count >= lo && d.next_stream_count <= hi);
    for &u in us {
        let obs = Observation { streams: d.next_stream_count, stats: stats(u.abs().min(1e4), 0.0, 0.03), utility: u };
        d = opt.observe(&obs).unwrap();
        prop_assert!(d.next_stream_count >= lo && d.next_stream_count <= hi, "{} outside {lo}..={hi}", d.next_stream_count);
    }
    Ok(())
}

proptest! {
    // 1000 sequences of 10 to 40 utilities, so well over 10^4 utilities per optimizer
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gd_decisions_respect_bounds(us in utility_seq(), lo in 1u32..10, span in 0u32..60, step in 1.0f64..16.0) {
        let hi = lo + span;
        let p = GdParams { n_min: lo, n_max: hi, initial_step: step, initial_streams: lo, ..Default::default() };
        observe_all(&mut GradientDescent::new(p), &us, lo, hi)?;
    }

    #[test]
    fn bo_decisions_respect_bounds(us in utility_seq(), lo in 1u32..10, span in 0u32..60, seed in any::<u64>()) {
        let hi = lo + span;
        let p = BoParams { n_min: lo, n_max: hi, seed, ..Default::default() };
        observe_all(&mut BayesOpt::new(p), &us, lo, hi)?;
    }

    #[test]
    fn no_optimizer_holds_one_stream(us in utility_seq()) {
        let mut o = NoOptimizer;
        prop_assert!(!o.start().probe);
        observe_all(&mut o, &us, 1, 1)?;
    }

    #[test]
    fn gp_expected_improvement_is_non_negative(
        pts in prop::collection::btree_map(1u32..=64, -5.0f64..5.0, 1..20),
        ls in 0.5f64..20.0,
    ) {
        let xs: Vec<f64> = pts.keys().map(|&n| n as f64).collect();
        let ys: Vec<f64> = pts.values().copied().collect();
        let gp = GaussianProcess::fit(&xs, &ys, ls, 1.0, 0.01, 0.0).unwrap();
        let best = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for n in 1..=64 {
            let (m, s) = gp.predict(n as f64);
            prop_assert!(s >= 0.0);
            prop_assert!(expected_improvement(m, s, best) >= 0.0);
        }
    }
}

/// Shifted, strictly concave utility with its real-valued peak at `m`.
fn concave(n: u32, m: f64, a: f64, p: f64, c: f64) -> f64 {
    c - a * (n as f64 - m).abs().powf(p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(MANY))]

    #[test]
    fn gd_finds_concave_peak(
        m in 1.0f64..64.0,
        a in 0.01f64..100.0,
        p in 1.2f64..3.0,
        c in -1e4f64..1e4,
        step in 1.0f64..8.0,
        start in 1u32..=64,
    ) {
        let argmax = (1..=64u32).max_by(|&x, &y| concave(x, m, a, p, c).total_cmp(&concave(y, m, a, p, c))).unwrap();
        let params = GdParams { initial_step: step, initial_streams: start, ..Default::default() };
        let mut gd = GradientDescent::new(params);
        let mut d = gd.start();
        // last decision at which the center sat outside the band
        let mut last_out = None;
        for i in 0..400 {
            d = gd.gd_step(concave(d.next_stream_count, m, a, p, c));
            if (gd.center() as i64 - argmax as i64).abs() > params.delta as i64 {
                last_out = Some(i);
            }
        }
        prop_assert!(last_out.is_none_or(|i| i < 300), "still off the peak {argmax} at decision {last_out:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// With an unbounded window and noiseless observations, BO only
    /// returns to an observed point when no candidate has positive EI.
    #[test]
    fn bo_never_revisits_while_improvement_remains(us in prop::collection::vec(-100.0f64..100.0, 64), seed in any::<u64>()) {
        let p = BoParams { window: 10_000, initial_random: 3, noise_var: 0.0, seed, ..Default::default() };
        let mut bo = BayesOpt::new(p);
        let mut d = bo.start();
        let f = |n: u32| us[(n - 1) as usize];
        for _ in 0..30 {
            let n = d.next_stream_count;
            d = bo.bo_step(n, f(n));
            let obs: Vec<(u32, f64)> = bo.observations().copied().collect();
            if obs.len() <= p.initial_random {
                continue;
            }
            let seen: BTreeMap<u32, f64> = obs.iter().copied().collect();
            if seen.len() < obs.len() {
                // a revisit already happened, so the factorization is jittered
                break;
            }
            let ys: Vec<f64> = obs.iter().map(|o| o.1).collect();
            let mean = ys.iter().sum::<f64>() / ys.len() as f64;
            let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64).sqrt();
            let sd = if sd > 1e-12 { sd } else { 1.0 };
            let xs: Vec<f64> = obs.iter().map(|o| o.0 as f64).collect();
            let zs: Vec<f64> = ys.iter().map(|y| (y - mean) / sd).collect();
            let Ok(gp) = GaussianProcess::fit(&xs, &zs, p.length_scale, p.signal_var, 0.0, 0.0) else { break };
            let best = zs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ei = |n: u32| {
                let (m, s) = gp.predict(n as f64);
                expected_improvement(m, s, best)
            };
            let any_positive = (1..=64).any(|n| ei(n) > 0.0);
            if any_positive {
                prop_assert!(ei(d.next_stream_count) > 0.0, "picked {} with zero EI", d.next_stream_count);
            }
        }
    }

    #[test]
    fn link_load_response_is_monotone(
        capacity in 100.0f64..20_000.0,
        cap in prop::option::of(5.0f64..500.0),
        n1 in 1u32..128,
        extra in 0u32..128,
    ) {
        let sc = LinkScenario::new(capacity, cap).with_noise(0.0);
        let n2 = n1 + extra;
        let a = Link::new(sc.clone()).unwrap().step_single(n1);
        let b = Link::new(sc.clone()).unwrap().step_single(n2);
        prop_assert!(b.loss_rate >= a.loss_rate);
        prop_assert!(b.mean_rtt >= a.mean_rtt);
        prop_assert!(a.throughput <= capacity * (1.0 + 1e-12));
        if (n2 as f64) <= sc.saturation_streams() {
            prop_assert!(b.throughput >= a.throughput * (1.0 - 1e-12));
        }
        let mut l = Link::new(sc).unwrap();
        let shared = l.step(&BTreeMap::from([(1, n1), (2, n1)]));
        prop_assert!((shared[&1].throughput - shared[&2].throughput).abs() < 1e-9);
    }
}
