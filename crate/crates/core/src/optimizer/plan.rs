//! Threshold-plan search.
//!
//! Round `m` contributes `F` coordinates `(ln τ_m, ln g_1, …, ln g_{F-1})`
//! with `s_{m,f} = g_1 + … + g_f`, so every point of `R^{MF}` is a valid
//! plan. For each candidate the rate is set by the power identity inside
//! [`analytic_throughput`], leaving a search over the quantizer shape only.

use rayon::prelude::*;

use super::direct::{multistart, Optimum};
use super::scalar::scan_then_golden;
use super::SearchSpec;
use crate::capacity::{db_to_linear, ergodic_full_csi, outage_one_bit};
use crate::error::{domain, Result};
use crate::fading::FadingModel;
use crate::protocol::{analytic_throughput, classical_plan, ProtocolKind, ThresholdPlan, ThroughputReport};

/// Default box in transformed coordinates.
pub const DEFAULT_BOUNDS: (f64, f64) = (-12.0, 12.0);

/// Spec with [`DEFAULT_BOUNDS`] sized for an `M`-round, `F`-level plan.
pub fn plan_search_spec(max_rounds: usize, levels: usize, restarts: usize, seed: u64) -> SearchSpec {
    SearchSpec::uniform(max_rounds * levels, DEFAULT_BOUNDS, restarts.max(1), seed)
}

/// Decodes transformed coordinates into a plan at rate `rate`.
pub fn decode_plan(x: &[f64], max_rounds: usize, levels: usize, rate: f64) -> Result<ThresholdPlan> {
    if x.len() != max_rounds * levels {
        return Err(domain(format!("{} coordinates for M = {max_rounds}, F = {levels}", x.len())));
    }
    let mut tau = Vec::with_capacity(max_rounds);
    let mut interior = Vec::with_capacity(max_rounds);
    for row in x.chunks(levels) {
        tau.push(row[0].exp());
        let mut acc = 0.0;
        interior.push(
            row[1..]
                .iter()
                .map(|g| {
                    acc += g.exp();
                    acc
                })
                .collect(),
        );
    }
    ThresholdPlan::new(rate, tau, interior)
}

/// Inverse of [`decode_plan`] for finite thresholds.
pub fn encode_plan(plan: &ThresholdPlan) -> Vec<f64> {
    let f_levels = plan.levels();
    let mut x = Vec::with_capacity(plan.max_rounds() * f_levels);
    for (m, row) in plan.thresholds.iter().enumerate() {
        x.push(plan.tau[m].ln());
        for f in 1..f_levels {
            x.push((row[f] - row[f - 1]).ln());
        }
    }
    x
}

fn ladder(x: &mut Vec<f64>, ln_tau: f64, s1: f64, levels: usize) {
    x.push(ln_tau);
    let mut prev = 0.0;
    for f in 1..levels {
        let s = s1 * 1.6f64.powi(f as i32 - 1);
        x.push((s - prev).ln());
        prev = s;
    }
}

/// Structured starting points: the one-bit outage quantizer with nearly
/// silent zero-feedback rounds, equal power, and a front-loaded variant.
fn heuristic_starts(model: &dyn FadingModel, max_rounds: usize, levels: usize, p_avg: f64) -> Result<Vec<Vec<f64>>> {
    let (_, s_star) = outage_one_bit(model, p_avg)?;
    let mut starts = Vec::new();
    for (ln_tau, s1) in
        [(10.0, s_star), (s_star.ln(), s_star), ((0.5 * s_star).ln(), s_star), ((0.3 * s_star).ln(), 2.0 * s_star)]
    {
        let mut x = Vec::with_capacity(max_rounds * levels);
        for _ in 0..max_rounds {
            ladder(&mut x, ln_tau, s1, levels);
        }
        starts.push(x);
    }
    Ok(starts)
}

fn objective(
    model: &dyn FadingModel,
    kind: ProtocolKind,
    max_rounds: usize,
    levels: usize,
    p_avg: f64,
    rate_hint: f64,
) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    move |x: &[f64]| {
        decode_plan(x, max_rounds, levels, rate_hint)
            .and_then(|p| analytic_throughput(model, kind, &p, p_avg))
            .map_or(f64::NEG_INFINITY, |r| r.eta)
    }
}

fn optimize_from(
    model: &dyn FadingModel,
    kind: ProtocolKind,
    max_rounds: usize,
    levels: usize,
    p_avg: f64,
    spec: &SearchSpec,
    warm: Option<&[f64]>,
) -> Result<(ThresholdPlan, ThroughputReport)> {
    crate::capacity::check_snr(p_avg)?;
    spec.validate()?;
    if spec.dims != max_rounds * levels {
        return Err(domain(format!("search spec has {} dims, plan needs {}", spec.dims, max_rounds * levels)));
    }
    let mut starts = Vec::new();
    if let Some(w) = warm {
        starts.push(spec.project(w));
    }
    starts.extend(heuristic_starts(model, max_rounds, levels, p_avg)?.iter().map(|x| spec.project(x)));
    starts.extend(spec.random_starts());

    // Surface unsupported combinations before searching, and seed the INR
    // power-identity solver with a sensible rate.
    let probe = decode_plan(&starts[0], max_rounds, levels, 0.0)?;
    let rate_hint = analytic_throughput(model, kind, &probe, p_avg)?.rate;

    let f = objective(model, kind, max_rounds, levels, p_avg, rate_hint);
    let best: Optimum = multistart(|x: &[f64]| f(&spec.project(x)), &starts, &spec.nm_options());
    let plan = decode_plan(&spec.project(&best.x), max_rounds, levels, rate_hint)?;
    let report = analytic_throughput(model, kind, &plan, p_avg)?;
    Ok((plan.with_rate(report.rate), report))
}

/// Maximizes the throughput over `M`-round, `F`-level threshold plans.
pub fn optimize_plan(
    model: &dyn FadingModel,
    kind: ProtocolKind,
    max_rounds: usize,
    levels: usize,
    p_avg: f64,
    spec: &SearchSpec,
) -> Result<(ThresholdPlan, ThroughputReport)> {
    optimize_from(model, kind, max_rounds, levels, p_avg, spec, None)
}

/// Classical ACK/NACK HARQ: optimizes the retransmission thresholds `τ`, either
/// a common `τ` for every round (`equal_power`, line search) or one per round.
pub fn optimize_classical(
    model: &dyn FadingModel,
    kind: ProtocolKind,
    max_rounds: usize,
    p_avg: f64,
    equal_power: bool,
    spec: &SearchSpec,
) -> Result<(ThresholdPlan, ThroughputReport)> {
    crate::capacity::check_snr(p_avg)?;
    spec.validate()?;
    let eval = |taus: Vec<f64>| -> Result<ThroughputReport> {
        let plan = classical_plan(max_rounds, taus, 0.0)?;
        analytic_throughput(model, kind, &plan, p_avg)
    };
    eval(vec![1.0; max_rounds])?;
    let eta_of = |taus: Vec<f64>| eval(taus).map_or(f64::NEG_INFINITY, |r| r.eta);
    let (lo, hi) = spec.bounds.first().copied().unwrap_or(DEFAULT_BOUNDS);
    let (ln_tau, _) = scan_then_golden(|l| eta_of(vec![l.exp(); max_rounds]), lo, hi, 240, false);

    let taus = if equal_power || max_rounds == 1 {
        vec![ln_tau.exp(); max_rounds]
    } else {
        if spec.dims != max_rounds {
            return Err(domain(format!("search spec has {} dims, classical plan needs {max_rounds}", spec.dims)));
        }
        let mut starts = vec![vec![ln_tau; max_rounds]];
        starts.extend(spec.random_starts());
        let best = multistart(
            |x: &[f64]| eta_of(spec.project(x).iter().map(|v| v.exp()).collect()),
            &starts,
            &spec.nm_options(),
        );
        spec.project(&best.x).iter().map(|v| v.exp()).collect()
    };
    let report = eval(taus.clone())?;
    Ok((classical_plan(max_rounds, taus, report.rate)?, report))
}

/// One grid point of [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub plan: ThresholdPlan,
    pub report: ThroughputReport,
    /// Throughput relative to water-filling with full CSI.
    pub ratio_full_csi: f64,
}

/// Optimizes a plan at every SNR of `snr_grid_db` in order, warm-starting each
/// point from the previous optimum.
pub fn sweep(
    model: &dyn FadingModel,
    kind: ProtocolKind,
    max_rounds: usize,
    levels: usize,
    snr_grid_db: &[f64],
    spec: &SearchSpec,
) -> Result<Vec<SweepRow>> {
    if snr_grid_db.is_empty() {
        return Err(domain("SNR grid is empty"));
    }
    let references: Vec<f64> = snr_grid_db
        .par_iter()
        .map(|&db| ergodic_full_csi(model, db_to_linear(db)).map(|r| r.0))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(snr_grid_db.len());
    let mut warm: Option<Vec<f64>> = None;
    for (&snr_db, &reference) in snr_grid_db.iter().zip(&references) {
        let (plan, report) =
            optimize_from(model, kind, max_rounds, levels, db_to_linear(snr_db), spec, warm.as_deref())?;
        warm = Some(encode_plan(&plan));
        rows.push(SweepRow { snr_db, ratio_full_csi: report.eta / reference, plan, report });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::Rayleigh;

    #[test]
    fn encoding_round_trips() {
        let x = vec![0.3, -1.0, 0.2, 1.1, 0.0, -0.4];
        let plan = decode_plan(&x, 2, 3, 0.5).unwrap();
        let y = encode_plan(&plan);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(decode_plan(&x, 3, 3, 0.5).is_err());
    }

    #[test]
    fn single_round_one_bit() {
        let p = db_to_linear(0.0);
        let (eta, _) = outage_one_bit(&Rayleigh, p).unwrap();
        let spec = plan_search_spec(1, 2, 2, 1);
        let (plan, r) = optimize_plan(&Rayleigh, ProtocolKind::Rtd, 1, 2, p, &spec).unwrap();
        assert!(r.eta >= eta * (1.0 - 1e-4), "{} vs {eta}", r.eta);
        assert!((r.mean_power - p).abs() < 1e-6 * p);
        assert_eq!(plan.rate, r.rate);
    }

    #[test]
    fn deterministic() {
        let p = db_to_linear(5.0);
        let spec = plan_search_spec(2, 2, 2, 9);
        let a = optimize_plan(&Rayleigh, ProtocolKind::Rtd, 2, 2, p, &spec).unwrap();
        let b = optimize_plan(&Rayleigh, ProtocolKind::Rtd, 2, 2, p, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn classical_equal_vs_free() {
        let p = db_to_linear(0.0);
        let spec = SearchSpec::uniform(2, DEFAULT_BOUNDS, 2, 5);
        let (_, eq) = optimize_classical(&Rayleigh, ProtocolKind::Alo, 2, p, true, &spec).unwrap();
        let (_, free) = optimize_classical(&Rayleigh, ProtocolKind::Alo, 2, p, false, &spec).unwrap();
        assert!(free.eta >= eq.eta - 1e-12);
        assert!(free.eta <= eq.eta * 1.001);
    }
}
