//! Ergodic capacity: constant power, F-level quantized power control and
//! water-filling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::check_snr;
use crate::error::{domain, Error, Result};
use crate::fading::FadingModel;
use crate::optimizer::{bisect_log, multistart, scan_then_golden, NelderMeadOptions};

const LAMBDA_LO: f64 = 1e-12;
const LAMBDA_HI: f64 = 1e6;
const RESTARTS: usize = 8;
const SEED: u64 = 0x5eed_e7a0;

/// Power levels, region thresholds and Lagrange multiplier of a quantized
/// power-control policy. Region `f` is `[s_f, s_{f+1})` and uses power `P_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicQuantizer {
    pub powers: Vec<f64>,
    /// `s_0 = 0, …, s_F = +∞` (length `F + 1`).
    pub thresholds: Vec<f64>,
    pub lambda: f64,
}

impl ErgodicQuantizer {
    pub fn levels(&self) -> usize {
        self.powers.len()
    }

    pub fn average_power(&self, model: &dyn FadingModel) -> f64 {
        self.powers.iter().enumerate().map(|(f, p)| p * model.prob(self.thresholds[f], self.thresholds[f + 1])).sum()
    }

    pub fn throughput(&self, model: &dyn FadingModel) -> f64 {
        self.powers
            .iter()
            .enumerate()
            .map(|(f, &p)| model.partial_log_mean(self.thresholds[f], self.thresholds[f + 1], p))
            .sum()
    }
}

/// Constant transmit power: `E[log(1 + γ P̄)]`.
pub fn ergodic_no_csi(model: &dyn FadingModel, p_avg: f64) -> Result<f64> {
    check_snr(p_avg)?;
    Ok(model.partial_log_mean(0.0, f64::INFINITY, p_avg))
}

fn water_filling_power(model: &dyn FadingModel, lambda: f64) -> f64 {
    model.ccdf(lambda) / lambda - model.tail_inverse_mean(lambda)
}

/// Water-filling with perfect CSI. Returns `(η, λ)` where the cutoff `λ`
/// meets the power budget.
pub fn ergodic_full_csi(model: &dyn FadingModel, p_avg: f64) -> Result<(f64, f64)> {
    check_snr(p_avg)?;
    let lambda = bisect_log(|l| water_filling_power(model, l) - p_avg, LAMBDA_LO, LAMBDA_HI, 1e-14)
        .ok_or_else(|| domain(format!("water-filling cutoff for P̄={p_avg} lies outside [{LAMBDA_LO}, {LAMBDA_HI}]")))?;
    Ok((model.tail_log_ratio(lambda), lambda))
}

/// Region thresholds implied by the power levels at multiplier `λ`: the gain at
/// which the Lagrangian of adjacent levels ties.
pub fn thresholds_from_powers(powers: &[f64], lambda: f64) -> Vec<f64> {
    let f_levels = powers.len();
    let mut s = vec![0.0; f_levels + 1];
    s[f_levels] = f64::INFINITY;
    for f in 1..f_levels {
        let gap = powers[f] - powers[f - 1];
        let cand = if gap <= 0.0 {
            s[f - 1]
        } else {
            let inv = gap / (lambda * gap).exp_m1() - powers[f - 1];
            if inv > 0.0 {
                1.0 / inv
            } else {
                f64::INFINITY
            }
        };
        s[f] = cand.max(s[f - 1]);
    }
    s
}

fn average_power_at(model: &dyn FadingModel, powers: &[f64], lambda: f64) -> f64 {
    let s = thresholds_from_powers(powers, lambda);
    powers.iter().enumerate().map(|(f, p)| p * model.prob(s[f], s[f + 1])).sum()
}

/// Multiplier `λ` that makes the induced regions spend exactly `p_avg`.
fn solve_lambda(model: &dyn FadingModel, powers: &[f64], p_avg: f64) -> Option<f64> {
    let top = *powers.last()?;
    if top < p_avg || powers[0] > p_avg {
        return None;
    }
    bisect_log(|l| p_avg - average_power_at(model, powers, l), LAMBDA_LO, LAMBDA_HI, 1e-13)
}

/// Builds the quantizer for the given power levels, or `None` if the levels
/// cannot meet the budget with equality.
pub fn quantizer_for_powers(model: &dyn FadingModel, powers: &[f64], p_avg: f64) -> Option<ErgodicQuantizer> {
    let lambda = solve_lambda(model, powers, p_avg)?;
    Some(ErgodicQuantizer { powers: powers.to_vec(), thresholds: thresholds_from_powers(powers, lambda), lambda })
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `P_0 = P̄·σ(x_0)`, `P_f = P_{f-1} + P̄·e^{x_f}`.
fn decode_powers(x: &[f64], p_avg: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(x.len());
    let mut acc = p_avg * sigmoid(x[0]);
    p.push(acc);
    for &g in &x[1..] {
        acc += p_avg * g.exp();
        p.push(acc);
    }
    p
}

fn encode_powers(powers: &[f64], p_avg: f64) -> Vec<f64> {
    let floor = 1e-12;
    let r = (powers[0] / p_avg).clamp(floor, 1.0 - floor);
    let mut x = vec![(r / (1.0 - r)).ln()];
    for w in powers.windows(2) {
        x.push(((w[1] - w[0]) / p_avg).max(floor).ln());
    }
    x
}

/// Ergodic capacity with `F`-level power control, optimized over the power
/// levels by multi-start simplex search. Thresholds follow from the powers and
/// `λ`, and `λ` is set so the average power equals `p_avg`.
pub fn ergodic_partial_csi(model: &dyn FadingModel, p_avg: f64, f_levels: usize) -> Result<(f64, ErgodicQuantizer)> {
    check_snr(p_avg)?;
    if f_levels < 2 {
        return Err(domain(format!("partial-CSI ergodic capacity needs F ≥ 2, got {f_levels}")));
    }
    let objective = |x: &[f64]| match quantizer_for_powers(model, &decode_powers(x, p_avg), p_avg) {
        Some(q) => q.throughput(model),
        None => f64::NEG_INFINITY,
    };

    let bounds = ergodic_bounds_lloyd(model, p_avg, f_levels)?;
    let mut starts = vec![encode_powers(&bounds.upper_powers, p_avg), encode_powers(&bounds.lower_powers, p_avg)];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ f_levels as u64);
    while starts.len() < RESTARTS {
        let base = starts[starts.len() % 2].clone();
        starts.push(base.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect());
    }
    let opts = NelderMeadOptions { max_evals: 300 * (f_levels + 1), ..NelderMeadOptions::default() };
    let best = multistart(objective, &starts, &opts);
    let q = quantizer_for_powers(model, &decode_powers(&best.x, p_avg), p_avg)
        .ok_or_else(|| Error::NonConvergence("no feasible power vector found".into()))?;
    Ok((q.throughput(model), q))
}

/// Jensen (centroid) upper bound and threshold lower bound on the `F`-level
/// ergodic capacity, each with its optimized thresholds and powers.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydBounds {
    pub lower: f64,
    pub upper: f64,
    /// Interior thresholds `s_1..s_{F-1}` of the lower bound.
    pub lower_thresholds: Vec<f64>,
    /// Interior thresholds `s_1..s_{F-1}` of the upper bound.
    pub upper_thresholds: Vec<f64>,
    pub lower_powers: Vec<f64>,
    pub upper_powers: Vec<f64>,
}

/// Water-filling over discrete gains `g` with probabilities `w`.
/// Returns `(powers, λ)`.
fn discrete_water_filling(gains: &[f64], weights: &[f64], p_avg: f64) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0 && weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let mut level = 0.0;
    let (mut wsum, mut isum) = (0.0, 0.0);
    for &i in &order {
        let w = wsum + weights[i];
        let inv = isum + weights[i] / gains[i];
        let candidate = (p_avg + inv) / w;
        if candidate <= 1.0 / gains[i] {
            break;
        }
        wsum = w;
        isum = inv;
        level = candidate;
    }
    let powers = gains.iter().map(|&g| if g > 0.0 { (level - 1.0 / g).max(0.0) } else { 0.0 }).collect();
    (powers, if level > 0.0 { 1.0 / level } else { f64::INFINITY })
}

#[derive(Clone, Copy, PartialEq)]
enum Bound {
    Lower,
    Upper,
}

fn full_thresholds(interior: &[f64]) -> Vec<f64> {
    let mut s = Vec::with_capacity(interior.len() + 2);
    s.push(0.0);
    s.extend_from_slice(interior);
    s.push(f64::INFINITY);
    s
}

/// Bound value, powers and multiplier for fixed interior thresholds.
fn bound_at(model: &dyn FadingModel, interior: &[f64], p_avg: f64, kind: Bound) -> (f64, Vec<f64>, f64) {
    let s = full_thresholds(interior);
    let n = s.len() - 1;
    let weights: Vec<f64> = (0..n).map(|f| model.prob(s[f], s[f + 1])).collect();
    let gains: Vec<f64> = (0..n)
        .map(|f| match kind {
            Bound::Lower => s[f],
            Bound::Upper => {
                if s[f + 1] > s[f] {
                    model.conditional_mean(s[f], s[f + 1]).unwrap_or(s[f])
                } else {
                    s[f]
                }
            }
        })
        .collect();
    let (powers, lambda) = discrete_water_filling(&gains, &weights, p_avg);
    let value = (0..n).map(|f| weights[f] * (gains[f] * powers[f]).ln_1p()).sum();
    (value, powers, lambda)
}

fn decode_thresholds(y: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    y.iter()
        .map(|v| {
            acc += v.exp();
            acc
        })
        .collect()
}

fn encode_thresholds(s: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    s.iter()
        .map(|&v| {
            let g = (v - prev).max(1e-12);
            prev = v;
            g.ln()
        })
        .collect()
}

fn optimize_bound(model: &dyn FadingModel, p_avg: f64, f_levels: usize, kind: Bound) -> (f64, Vec<f64>, Vec<f64>) {
    let interior = f_levels - 1;
    // Initial thresholds at equal-probability quantiles.
    let mut s: Vec<f64> = (1..f_levels).map(|f| model.quantile(f as f64 / f_levels as f64)).collect();
    for _ in 0..500 {
        let (_, powers, lambda) = bound_at(model, &s, p_avg, kind);
        if !lambda.is_finite() {
            break;
        }
        let next = thresholds_from_powers(&powers, lambda);
        let next: Vec<f64> = next[1..f_levels]
            .iter()
            .zip(&s)
            .map(|(&n, &old)| if n.is_finite() { n } else { old.max(1.0) * 2.0 })
            .collect();
        let moved = next.iter().zip(&s).map(|(a, b)| (a - b).abs() / (1.0 + b.abs())).fold(0.0, f64::max);
        s = next;
        if moved < 1e-8 {
            break;
        }
    }
    let lloyd_value = bound_at(model, &s, p_avg, kind).0;
    let polished = if interior == 1 {
        let (x, v) = scan_then_golden(|t| bound_at(model, &[t], p_avg, kind).0, 1e-6, 60.0, 1024, true);
        (vec![x], v)
    } else {
        let o = crate::optimizer::nelder_mead(
            |y: &[f64]| bound_at(model, &decode_thresholds(y), p_avg, kind).0,
            &encode_thresholds(&s),
            &NelderMeadOptions { max_evals: 400 * f_levels, ..NelderMeadOptions::default() },
        );
        (decode_thresholds(&o.x), o.value)
    };
    let s = if polished.1 > lloyd_value { polished.0 } else { s };
    let (value, powers, _) = bound_at(model, &s, p_avg, kind);
    (value, s, powers)
}

/// Lloyd-style alternating threshold/power optimization of the centroid upper
/// bound and the threshold lower bound, followed by a simplex polish.
pub fn ergodic_bounds_lloyd(model: &dyn FadingModel, p_avg: f64, f_levels: usize) -> Result<LloydBounds> {
    check_snr(p_avg)?;
    if f_levels == 0 {
        return Err(domain("F must be at least 1"));
    }
    if f_levels == 1 {
        return Ok(LloydBounds {
            lower: 0.0,
            upper: p_avg.ln_1p(),
            lower_thresholds: vec![],
            upper_thresholds: vec![],
            lower_powers: vec![0.0],
            upper_powers: vec![p_avg],
        });
    }
    let (lower, lower_thresholds, lower_powers) = optimize_bound(model, p_avg, f_levels, Bound::Lower);
    let (upper, upper_thresholds, upper_powers) = optimize_bound(model, p_avg, f_levels, Bound::Upper);
    Ok(LloydBounds { lower, upper, lower_thresholds, upper_thresholds, lower_powers, upper_powers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::db_to_linear;
    use crate::fading::Rayleigh;
    use crate::quadrature::integrate;

    #[test]
    fn no_csi_matches_quadrature() {
        let oracle = integrate(
            |u| {
                let x = u / (1.0 - u);
                x.ln_1p() * (-x).exp() / ((1.0 - u) * (1.0 - u))
            },
            0.0,
            1.0,
            1e-14,
            1e-14,
        );
        let v = ergodic_no_csi(&Rayleigh, 1.0).unwrap();
        assert!((v - oracle).abs() < 1e-10);
        assert!((v - 0.596_35).abs() < 1e-5);
        let p = db_to_linear(25.0);
        let oracle = integrate(
            |u| {
                let x = u / (1.0 - u);
                (p * x).ln_1p() * (-x).exp() / ((1.0 - u) * (1.0 - u))
            },
            0.0,
            1.0,
            1e-14,
            1e-14,
        );
        assert!((ergodic_no_csi(&Rayleigh, p).unwrap() / oracle - 1.0).abs() < 1e-9);
        assert!((ergodic_no_csi(&Rayleigh, 1e-6).unwrap() / 1e-6 - 1.0).abs() < 1e-3);
        assert!(ergodic_no_csi(&Rayleigh, 0.0).is_err());
    }

    #[test]
    fn full_csi_at_unit_cutoff() {
        let e1_1 = crate::special::e1(1.0).unwrap();
        let p = (-1f64).exp() - e1_1;
        assert!((p - 0.148_50).abs() < 1e-5);
        let (eta, lambda) = ergodic_full_csi(&Rayleigh, p).unwrap();
        assert!((lambda - 1.0).abs() < 1e-9);
        assert!((eta - 0.219_38).abs() < 1e-5);
    }

    #[test]
    fn full_csi_residual_and_dominance() {
        for db in [-25.0, -10.0, 0.0, 10.0, 25.0] {
            let p = db_to_linear(db);
            let (eta, l) = ergodic_full_csi(&Rayleigh, p).unwrap();
            let resid = ((-l).exp() / l - crate::special::e1(l).unwrap() - p).abs();
            assert!(resid <= 1e-9 * p, "db={db} resid={resid}");
            assert!(eta >= ergodic_no_csi(&Rayleigh, p).unwrap());
        }
    }

    #[test]
    fn threshold_rule_is_consistent() {
        let (_, q) = ergodic_partial_csi(&Rayleigh, 1.0, 3).unwrap();
        let again = thresholds_from_powers(&q.powers, q.lambda);
        for (a, b) in again.iter().zip(&q.thresholds) {
            assert!(a == b || (a - b).abs() < 1e-9 * b.abs());
        }
        assert!((q.average_power(&Rayleigh) - 1.0).abs() < 1e-6);
        assert!(q.powers.windows(2).all(|w| w[0] <= w[1]));
        assert!(q.powers[0] >= 0.0 && *q.powers.last().unwrap() <= 1.0 / q.lambda * (1.0 + 1e-9));
        assert_eq!(q.thresholds[0], 0.0);
        assert_eq!(*q.thresholds.last().unwrap(), f64::INFINITY);
    }

    #[test]
    fn one_bit_at_low_snr_is_nearly_water_filling() {
        let p = db_to_linear(-25.0);
        let (eta, _) = ergodic_partial_csi(&Rayleigh, p, 2).unwrap();
        let (full, _) = ergodic_full_csi(&Rayleigh, p).unwrap();
        assert!(eta / full >= 0.97, "ratio {}", eta / full);
        assert!(eta <= full);
    }

    #[test]
    fn lloyd_sandwich_and_single_level() {
        let b = ergodic_bounds_lloyd(&Rayleigh, 1.0, 1).unwrap();
        assert_eq!(b.upper, 2f64.ln());
        assert_eq!(b.lower, 0.0);
        let b = ergodic_bounds_lloyd(&Rayleigh, 1.0, 2).unwrap();
        let (eta, _) = ergodic_partial_csi(&Rayleigh, 1.0, 2).unwrap();
        assert!(b.lower <= eta && eta <= b.upper, "{} {} {}", b.lower, eta, b.upper);
    }

    #[test]
    fn water_filling_discrete_budget() {
        let (p, l) = discrete_water_filling(&[2.0, 0.5, 0.01], &[0.3, 0.5, 0.2], 1.0);
        let spent: f64 = p.iter().zip([0.3, 0.5, 0.2]).map(|(a, w)| a * w).sum();
        assert!((spent - 1.0).abs() < 1e-12);
        assert_eq!(p[2], 0.0);
        assert!((p[0] - (1.0 / l - 0.5)).abs() < 1e-12);
    }
}
