use approx::assert_relative_eq;
use harq_csi::capacity::{
    db_to_linear, ergodic_full_csi, ergodic_no_csi, ergodic_partial_csi, outage_full_csi, outage_no_csi,
    outage_one_bit, outage_partial_csi, outage_partial_csi_intervals, thresholds_from_powers,
};
use harq_csi::{FadingModel, Rayleigh};

const SNRS: [f64; 5] = [-20.0, -10.0, 0.0, 10.0, 20.0];

#[test]
fn ergodic_quantizer_invariants() {
    for db in SNRS {
        let p = db_to_linear(db);
        let (full, _) = ergodic_full_csi(&Rayleigh, p).unwrap();
        let mut prev = ergodic_no_csi(&Rayleigh, p).unwrap();
        for f in [2, 3, 4] {
            let (eta, q) = ergodic_partial_csi(&Rayleigh, p, f).unwrap();
            assert_eq!(q.levels(), f);
            assert_eq!(q.thresholds[0], 0.0);
            assert_eq!(q.thresholds[f], f64::INFINITY);
            assert!(q.powers.windows(2).all(|w| w[0] <= w[1]));
            assert!(q.thresholds.windows(2).all(|w| w[0] <= w[1]));
            assert_relative_eq!(q.average_power(&Rayleigh), p, max_relative = 1e-6);
            assert_relative_eq!(q.throughput(&Rayleigh), eta, max_relative = 1e-12);
            assert!(eta <= full * (1.0 + 1e-9), "{db} dB F={f}: {eta} > {full}");
            assert!(eta >= prev * (1.0 - 1e-7), "{db} dB F={f}: {eta} < {prev}");
            let again = thresholds_from_powers(&q.powers, q.lambda);
            for (a, b) in again.iter().zip(&q.thresholds).skip(1).take(f - 1) {
                assert_relative_eq!(*a, *b, max_relative = 1e-9);
            }
            prev = eta;
        }
    }
}

#[test]
fn ergodic_increases_with_snr() {
    let mut prev = 0.0;
    for db in SNRS {
        let (eta, _) = ergodic_partial_csi(&Rayleigh, db_to_linear(db), 2).unwrap();
        assert!(eta > prev);
        prev = eta;
    }
}

#[test]
fn outage_quantizer_invariants() {
    for db in SNRS {
        let p = db_to_linear(db);
        let (full, _) = outage_full_csi(&Rayleigh, p).unwrap();
        let (none, _) = outage_no_csi(&Rayleigh, p).unwrap();
        let (one, _) = outage_one_bit(&Rayleigh, p).unwrap();
        assert!(none <= one * (1.0 + 1e-9) && one <= full * (1.0 + 1e-9));
        for f in [2, 3, 4] {
            let (eta, q) = outage_partial_csi(&Rayleigh, p, f).unwrap();
            assert_relative_eq!(q.average_power(&Rayleigh), p, max_relative = 1e-6);
            assert_eq!(q.outage_probability(&Rayleigh), Rayleigh.cdf(q.thresholds[0]));
            assert!(eta <= full * (1.0 + 1e-9));
            assert!(eta >= one * (1.0 - 1e-9));
        }
    }
}

#[test]
fn union_of_intervals_beats_intervals() {
    let p = db_to_linear(-10.0);
    let (free, _) = outage_partial_csi(&Rayleigh, p, 3).unwrap();
    let (pinned, _) = outage_partial_csi_intervals(&Rayleigh, p, 3).unwrap();
    assert!(free >= pinned, "{free} < {pinned}");
}

#[test]
fn one_bit_matches_dense_grid() {
    let p = 1.0;
    let (eta, _) = outage_one_bit(&Rayleigh, p).unwrap();
    // η(s) = e^{-s} ln(1 + P̄ s e^{s}/1) on Rayleigh, since Pr[γ ≥ s]/s = e^{-s}/s.
    let grid = (1..=100_000)
        .map(|i| {
            let s = 20.0 * i as f64 / 100_000.0;
            (-s).exp() * (p * s * s.exp()).ln_1p()
        })
        .fold(0.0, f64::max);
    assert!((eta - grid).abs() <= 1e-6, "{eta} vs {grid}");
    assert!(eta >= grid - 1e-12);
}
