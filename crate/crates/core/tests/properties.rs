//! Property tests for the structural invariants.

use approx::assert_relative_eq;
use harq_csi::order_stats::{maxsum_ccdf, MaxSumLaw};
use harq_csi::protocol::policy::threshold_for;
use harq_csi::protocol::{
    analytic_throughput, decodes, feedback, ptilde_table, scale_factor, ProtocolKind, Slot, ThresholdPlan,
};
use harq_csi::simulator::run_renewal;
use harq_csi::{e1, FadingModel, Rayleigh};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind() -> impl Strategy<Value = ProtocolKind> {
    prop_oneof![Just(ProtocolKind::Alo), Just(ProtocolKind::Rtd), Just(ProtocolKind::Inr)]
}

/// Plans with `M ∈ {1, 2}` and `F ∈ {2, 3}`.
fn plan() -> impl Strategy<Value = ThresholdPlan> {
    (1usize..=2, 2usize..=3).prop_flat_map(|(m, f)| {
        (
            0.05f64..2.5,
            prop::collection::vec(0.05f64..4.0, m),
            prop::collection::vec(prop::collection::vec(0.05f64..1.5, f - 1), m),
        )
            .prop_map(|(rate, tau, gaps)| {
                let interior = gaps
                    .into_iter()
                    .map(|g| {
                        let mut acc = 0.0;
                        g.into_iter()
                            .map(|x| {
                                acc += x;
                                acc
                            })
                            .collect()
                    })
                    .collect();
                ThresholdPlan::new(rate, tau, interior).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn e1_strictly_decreasing(x in 1e-6f64..40.0, dx in 1e-3f64..1.0) {
        prop_assert!(e1(x + dx).unwrap() < e1(x).unwrap());
    }

    #[test]
    fn conditional_mean_is_contained(a in 0.0f64..20.0, w in 1e-6f64..20.0) {
        let b = a + w;
        let c = Rayleigh.conditional_mean(a, b).unwrap();
        prop_assert!(a <= c && c <= b, "{a} {c} {b}");
        let tail = Rayleigh.conditional_mean(a, f64::INFINITY).unwrap();
        prop_assert!(tail >= a);
    }

    #[test]
    fn tail_inverse_mean_decreases(x in 1e-3f64..30.0, dx in 1e-3f64..5.0) {
        let t0 = Rayleigh.tail_inverse_mean(x);
        let t1 = Rayleigh.tail_inverse_mean(x + dx);
        prop_assert!(t1 < t0 && t1 > 0.0);
    }

    #[test]
    fn maxsum_ccdf_monotone_and_bounded(
        a in -0.9f64..2.0,
        means in prop::collection::vec(0.1f64..3.0, 1..=4),
        x in 0.0f64..6.0,
        dx in 1e-3f64..2.0,
    ) {
        let law = MaxSumLaw::new(a, 1.0, means).unwrap();
        let c0 = maxsum_ccdf(&law, x);
        let c1 = maxsum_ccdf(&law, x + dx);
        prop_assert!((0.0..=1.0).contains(&c0));
        prop_assert!(c1 <= c0 + 1e-12);
    }

    #[test]
    fn maxsum_is_permutation_symmetric(
        a in 0.0f64..2.0,
        b in 0.2f64..2.0,
        means in prop::collection::vec(0.1f64..3.0, 2..=4),
        x in 0.1f64..8.0,
    ) {
        let mut rev = means.clone();
        rev.reverse();
        let mut rot = means.clone();
        rot.rotate_left(1);
        let base = maxsum_ccdf(&MaxSumLaw::new(a, b, means).unwrap(), x);
        prop_assert!((maxsum_ccdf(&MaxSumLaw::new(a, b, rev).unwrap(), x) - base).abs() < 1e-10);
        prop_assert!((maxsum_ccdf(&MaxSumLaw::new(a, b, rot).unwrap(), x) - base).abs() < 1e-10);
    }

    #[test]
    fn decoding_events_nest(
        gains in prop::collection::vec(0.0f64..5.0, 1..=5),
        powers in prop::collection::vec(0.0f64..5.0, 5),
        rate in 0.01f64..4.0,
    ) {
        let slots: Vec<(f64, f64)> = gains.iter().zip(&powers).map(|(g, p)| (*g, *p)).collect();
        let alo = decodes(ProtocolKind::Alo, &slots, rate);
        let rtd = decodes(ProtocolKind::Rtd, &slots, rate);
        let inr = decodes(ProtocolKind::Inr, &slots, rate);
        prop_assert!(!alo || rtd);
        prop_assert!(!rtd || inr);
    }

    #[test]
    fn scale_factor_shrinks_with_history(
        k in kind(),
        xs in prop::collection::vec((0.0f64..0.6, 0.3f64..3.0), 0..4),
        rate in 0.05f64..3.0,
    ) {
        let hist: Vec<Slot> = xs.iter().map(|&(g, t)| Slot { gain: g, threshold: t }).collect();
        let mut prev = 1.0;
        for n in 0..=hist.len() {
            let xi = scale_factor(k, &hist[..n], rate);
            prop_assert!(xi <= prev + 1e-12);
            prev = xi;
        }
    }

    #[test]
    fn feedback_is_monotone_in_gain(p in plan(), k in kind(), g in 0.0f64..5.0, dg in 0.0f64..2.0) {
        prop_assert!(feedback(k, &p, 0, g, &[]) <= feedback(k, &p, 0, g + dg, &[]));
    }

    #[test]
    fn ptilde_tables_nest(p in plan(), k in kind()) {
        let t = ptilde_table(&Rayleigh, k, &p).unwrap();
        let (m_max, f_levels) = (p.max_rounds(), p.levels());
        for m in 1..=m_max + 1 {
            prop_assert_eq!(t.get(m, f_levels - 1), t.get(m - 1, 0));
            for f in 0..f_levels {
                prop_assert!((0.0..=1.0).contains(&t.get(m, f)));
                prop_assert!(t.get(m, f) <= t.get(m - 1, f) + 1e-9);
                if f > 0 {
                    prop_assert!(t.get(m, f) + 1e-9 >= t.get(m, f - 1));
                }
            }
        }
    }

    #[test]
    fn power_constraint_is_active(p in plan(), k in kind(), p_avg in 0.01f64..100.0) {
        let r = analytic_throughput(&Rayleigh, k, &p, p_avg).unwrap();
        assert_relative_eq!(r.mean_power, p_avg, max_relative = 1e-6);
        prop_assert_eq!(r.p_out, r.ptilde.get(p.max_rounds() + 1, 0));
        prop_assert!(r.eta >= 0.0 && r.eta <= r.rate);
        prop_assert!(r.mean_renewal >= 1.0 && r.mean_renewal <= p.max_rounds() as f64);
    }

    #[test]
    fn renewals_end_on_nonzero_feedback(p in plan(), k in kind(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let t = run_renewal(&Rayleigh, k, &p, &mut rng);
            let m = p.max_rounds() as u64;
            prop_assert!(t.slots >= 1 && t.slots <= m);
            if t.slots < m {
                prop_assert!(t.success);
                prop_assert!(t.feedback[t.slots as usize - 1] > 0);
                prop_assert!(t.feedback[..t.slots as usize - 1].iter().all(|&b| b == 0));
            }
        }
    }

    #[test]
    fn nonzero_feedback_guarantees_decoding(p in plan(), k in kind(), g1 in 0.0f64..3.0, g2 in 0.0f64..3.0) {
        // Round 1 with zero feedback, then round 2 on whatever it feeds back.
        let b1 = feedback(k, &p, 0, g1, &[]);
        let pw1 = p.theta() / threshold_for(&p, 0, b1);
        if b1 > 0 {
            prop_assert!(decodes(k, &[(g1, pw1)], p.rate));
        } else if p.max_rounds() == 2 {
            let hist = [Slot { gain: g1, threshold: threshold_for(&p, 0, 0) }];
            let b2 = feedback(k, &p, 1, g2, &hist);
            let pw2 = p.theta() / threshold_for(&p, 1, b2);
            if b2 > 0 {
                prop_assert!(decodes(k, &[(g1, pw1), (g2, pw2)], p.rate));
            }
        }
    }
}
