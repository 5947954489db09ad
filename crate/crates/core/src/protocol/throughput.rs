//! Renewal-reward throughput of a threshold plan.
//!
//! With `p̃` from [`ptilde_table`](super::ptilde_table):
//!
//! * `E[T] = 1 + Σ_{m<M} p̃_{m,0}` and `P_out = p̃_{M+1,0}`;
//! * the energy per renewal is `θ·D` with
//!   `D = Σ_m p̃_{m,0}/τ_m + Σ_{f≥1} (p̃_{m,f} − p̃_{m,f-1})/s_{m,f}`
//!   (classical timing: `D = Σ_m p̃_{m-1,0}/τ_m`);
//! * `η = R(1 − P_out)/E[T]`.
//!
//! [`analytic_throughput`] picks the rate at which the long-run average power
//! `θD/E[T]` equals the budget.

use super::ptilde::{ptilde_table, PtildeTable};
use super::{FeedbackMode, ProtocolKind, ThresholdPlan};
use crate::error::{domain, Error, Result};
use crate::fading::FadingModel;
use crate::optimizer::scalar::illinois;

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    /// Throughput in nats per channel use.
    pub eta: f64,
    pub rate: f64,
    pub p_out: f64,
    pub mean_renewal: f64,
    pub mean_power: f64,
    pub ptilde: PtildeTable,
}

struct Moments {
    mean_renewal: f64,
    p_out: f64,
    /// Energy per renewal divided by `θ`.
    cost: f64,
}

fn over(p: f64, thr: f64) -> f64 {
    if thr == f64::INFINITY || p == 0.0 {
        0.0
    } else {
        p / thr
    }
}

fn moments(plan: &ThresholdPlan, t: &PtildeTable) -> Moments {
    let m_max = plan.max_rounds();
    let f_levels = plan.levels();
    let mean_renewal = 1.0 + (1..m_max).map(|m| t.get(m, 0)).sum::<f64>();
    let cost = (1..=m_max)
        .map(|m| match plan.mode {
            FeedbackMode::AckNack => over(t.get(m - 1, 0), plan.tau[m - 1]),
            FeedbackMode::Quantized => {
                let row = &plan.thresholds[m - 1];
                over(t.get(m, 0), plan.tau[m - 1])
                    + (1..f_levels).map(|f| over(t.get(m, f) - t.get(m, f - 1), row[f])).sum::<f64>()
            }
        })
        .sum();
    Moments { mean_renewal, p_out: t.outage(), cost }
}

fn report(plan: &ThresholdPlan, ptilde: PtildeTable) -> ThroughputReport {
    let mo = moments(plan, &ptilde);
    let theta = plan.theta();
    ThroughputReport {
        eta: plan.rate * (1.0 - mo.p_out) / mo.mean_renewal,
        rate: plan.rate,
        p_out: mo.p_out,
        mean_renewal: mo.mean_renewal,
        mean_power: if theta == 0.0 { 0.0 } else { theta * mo.cost / mo.mean_renewal },
        ptilde,
    }
}

/// Evaluates `plan` at its own rate.
pub fn evaluate_plan(model: &dyn FadingModel, kind: ProtocolKind, plan: &ThresholdPlan) -> Result<ThroughputReport> {
    let table = ptilde_table(model, kind, plan)?;
    Ok(report(plan, table))
}

/// Throughput of `plan` with the rate set so the average power is `p_avg`.
///
/// For ALO and RTD the table does not depend on the rate, so
/// `θ = p_avg·E[T]/D` directly. For INR the table depends on `θ` and the power
/// identity is solved by regula falsi in `ln θ`.
pub fn analytic_throughput(
    model: &dyn FadingModel,
    kind: ProtocolKind,
    plan: &ThresholdPlan,
    p_avg: f64,
) -> Result<ThroughputReport> {
    crate::capacity::check_snr(p_avg)?;
    plan.validate()?;
    let no_power = || domain("plan never transmits with positive power");
    let table = ptilde_table(model, kind, plan)?;
    let mo = moments(plan, &table);
    if !(mo.cost > 0.0) {
        return Err(no_power());
    }
    let guess = p_avg * mo.mean_renewal / mo.cost;
    if kind != ProtocolKind::Inr {
        let fixed = plan.with_rate(guess.ln_1p());
        return Ok(report(&fixed, table));
    }

    let gap = |theta: f64| -> f64 {
        let p = plan.with_rate(theta.ln_1p());
        match ptilde_table(model, kind, &p) {
            Ok(t) => {
                let mo = moments(&p, &t);
                (theta * mo.cost / mo.mean_renewal / p_avg).ln()
            }
            Err(_) => f64::NAN,
        }
    };
    // The guess is usually within a few percent; widen geometrically.
    let start = if plan.rate > 0.0 { plan.theta() } else { guess };
    let center = if (start / guess).ln().abs() < 3.0 { guess } else { start };
    let (mut lo, mut hi) = (center / 1.1, center * 1.1);
    let mut glo = gap(lo);
    let mut ghi = gap(hi);
    for _ in 0..80 {
        if glo < 0.0 && ghi > 0.0 {
            break;
        }
        if !(glo < 0.0) {
            lo /= 4.0;
            glo = gap(lo);
        }
        if !(ghi > 0.0) {
            hi *= 4.0;
            ghi = gap(hi);
        }
    }
    if !(glo < 0.0 && ghi > 0.0) {
        return Err(Error::NonConvergence(format!("could not bracket the INR power identity around θ = {guess:.3e}")));
    }
    let ln_theta = illinois(|l| gap(l.exp()), lo.ln(), glo, hi.ln(), ghi, 1e-13)
        .ok_or_else(|| Error::NonConvergence("INR power identity root search failed".into()))?;
    let theta = ln_theta.exp();
    let solved = plan.with_rate(theta.ln_1p());
    evaluate_plan(model, kind, &solved)
}
