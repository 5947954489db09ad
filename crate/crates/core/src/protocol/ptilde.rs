//! Feedback-history probabilities `p̃_{m,f} = Pr[B_1 = … = B_{m-1} = 0, B_m ≤ f]`.
//!
//! A zero-feedback round `t` with remaining requirement `r_t` requires
//! `γ_t < r_t·min{τ_t, s_{t,1}}` (quantized to zero and not decoded at power
//! `θ/τ_t`), after which the requirement becomes `r_{t+1} = u(r_t, γ_t/τ_t)`
//! with the combining rule of the protocol. The last factor is
//! `Pr[γ_m < r_m s_{m,f+1}]`. Row `M + 1` uses `s_{M+1,f} = +∞` and its first
//! entry is the outage probability.

use super::{FeedbackMode, ProtocolKind, ThresholdPlan};
use crate::error::{unsupported, Result};
use crate::fading::FadingModel;
use crate::order_stats::{
    inr_residual, pm_alo, pm_inr_bounds, pm_inr_quadrature, pm_rtd, MAX_K, MAX_QUADRATURE_ROUNDS,
};
use crate::quadrature::integrate;

const ABS_TOL: f64 = 1e-11;
const REL_TOL: f64 = 1e-10;

/// `p̃` table with rows `m = 1..M+1` (stored 0-based) and columns `f = 0..F-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PtildeTable {
    pub rows: Vec<Vec<f64>>,
    /// For classical INR on Rayleigh fading: polyhedral bounds on the
    /// failure probability after `m = 1..M` rounds.
    pub inr_bounds: Option<Vec<(f64, f64)>>,
}

impl PtildeTable {
    /// `p̃_{m,f}` with 1-based `m` (`m = 0` gives the convention `p̃_{0,·} = 1`).
    pub fn get(&self, m: usize, f: usize) -> f64 {
        if m == 0 {
            1.0
        } else {
            self.rows[m - 1][f]
        }
    }

    pub fn outage(&self) -> f64 {
        self.rows.last().map_or(1.0, |r| r[0])
    }
}

fn residual(kind: ProtocolKind, r: f64, x: f64, theta: f64) -> f64 {
    match kind {
        ProtocolKind::Alo => r,
        ProtocolKind::Rtd => r - x,
        ProtocolKind::Inr => inr_residual(r, x, theta),
    }
}

struct Nested<'a> {
    model: &'a dyn FadingModel,
    kind: ProtocolKind,
    theta: f64,
    /// Per history round: (τ_t, min{τ_t, s_{t,1}}).
    rounds: Vec<(f64, f64)>,
    /// Upper threshold of the final round (`+∞` for none).
    last: f64,
}

impl Nested<'_> {
    fn tail(&self, r: f64) -> f64 {
        if self.last == f64::INFINITY {
            1.0
        } else {
            self.model.cdf(r * self.last)
        }
    }

    fn eval(&self, t: usize, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if t == self.rounds.len() {
            return self.tail(r);
        }
        let (tau, cap) = self.rounds[t];
        let limit = r * cap;
        let top = self.model.cdf(limit);
        if t + 1 == self.rounds.len() && self.last == f64::INFINITY {
            return top;
        }
        if self.kind == ProtocolKind::Alo || tau == f64::INFINITY {
            // Requirement unchanged by this round.
            return top * self.eval(t + 1, r);
        }
        integrate(
            |u| {
                let g = self.model.quantile(u);
                self.eval(t + 1, residual(self.kind, r, g / tau, self.theta))
            },
            0.0,
            top,
            ABS_TOL,
            REL_TOL,
        )
    }
}

/// Probability that the first `hist` rounds all get zero feedback without
/// decoding and the next round's gain is below `r·last`.
fn history_prob(
    model: &dyn FadingModel,
    kind: ProtocolKind,
    plan: &ThresholdPlan,
    hist: usize,
    last: f64,
    use_s: bool,
) -> f64 {
    let rounds = (0..hist)
        .map(|t| {
            let tau = plan.tau[t];
            let cap = if use_s { tau.min(plan.thresholds[t][1]) } else { tau };
            (tau, cap)
        })
        .collect();
    Nested { model, kind, theta: plan.theta(), rounds, last }.eval(0, 1.0)
}

fn check_support(kind: ProtocolKind, plan: &ThresholdPlan, model: &dyn FadingModel) -> Result<()> {
    let m = plan.max_rounds();
    let closed = kind == ProtocolKind::Alo
        || (plan.mode == FeedbackMode::AckNack
            && kind == ProtocolKind::Rtd
            && model.is_unit_exponential()
            && m <= MAX_K);
    if !closed && m > MAX_QUADRATURE_ROUNDS {
        return Err(unsupported(format!(
            "analytic {kind} tables support M ≤ {MAX_QUADRATURE_ROUNDS}, got M = {m}; use Monte Carlo (--mc)"
        )));
    }
    Ok(())
}

/// Failure probability after `m` classical rounds with thresholds `τ_1..τ_m`.
fn classical_failure(model: &dyn FadingModel, kind: ProtocolKind, plan: &ThresholdPlan, m: usize) -> Result<f64> {
    let taus = &plan.tau[..m];
    if model.is_unit_exponential() {
        return match kind {
            ProtocolKind::Alo => pm_alo(taus),
            ProtocolKind::Rtd => pm_rtd(taus),
            ProtocolKind::Inr => pm_inr_quadrature(taus, plan.theta()),
        };
    }
    Ok(history_prob(model, kind, plan, m, f64::INFINITY, false))
}

/// Computes the `p̃` table of `plan` under protocol `kind`.
pub fn ptilde_table(model: &dyn FadingModel, kind: ProtocolKind, plan: &ThresholdPlan) -> Result<PtildeTable> {
    plan.validate()?;
    check_support(kind, plan, model)?;
    let m_max = plan.max_rounds();
    let f_levels = plan.levels();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m_max + 1);
    let mut inr_bounds = None;

    match plan.mode {
        FeedbackMode::Quantized => {
            for m in 1..=m_max + 1 {
                let mut row = vec![0.0; f_levels];
                for (f, cell) in row.iter_mut().enumerate().take(f_levels - 1) {
                    let last = if m <= m_max { plan.thresholds[m - 1][f + 1] } else { f64::INFINITY };
                    *cell = if kind == ProtocolKind::Alo {
                        let hist: f64 = (0..m - 1).map(|t| model.cdf(plan.tau[t].min(plan.thresholds[t][1]))).product();
                        hist * if last == f64::INFINITY { 1.0 } else { model.cdf(last) }
                    } else {
                        history_prob(model, kind, plan, m - 1, last, true)
                    };
                }
                row[f_levels - 1] = if m == 1 { 1.0 } else { rows[m - 2][0] };
                rows.push(row);
            }
        }
        FeedbackMode::AckNack => {
            let mut prev = 1.0;
            for m in 1..=m_max {
                let p = classical_failure(model, kind, plan, m)?;
                let mut row = vec![p; f_levels];
                row[f_levels - 1] = prev;
                rows.push(row);
                prev = p;
            }
            rows.push(vec![prev; f_levels]);
            if kind == ProtocolKind::Inr && model.is_unit_exponential() && plan.theta() > 0.0 {
                let bounds =
                    (1..=m_max).map(|m| pm_inr_bounds(&plan.tau[..m], plan.theta())).collect::<Result<Vec<_>>>()?;
                inr_bounds = Some(bounds);
            }
        }
    }
    Ok(PtildeTable { rows, inr_bounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::Rayleigh;
    use crate::protocol::classical_plan;

    fn plan_2x2(s1: f64, s2: f64) -> ThresholdPlan {
        ThresholdPlan::new(1.0, vec![1.0, 1.0], vec![vec![s1], vec![s2]]).unwrap()
    }

    #[test]
    fn single_round_is_cdf_of_thresholds() {
        let plan = ThresholdPlan::new(0.8, vec![2.0], vec![vec![0.3, 0.9, 1.7]]).unwrap();
        for kind in ProtocolKind::ALL {
            let t = ptilde_table(&Rayleigh, kind, &plan).unwrap();
            for f in 0..3 {
                assert!((t.get(1, f) - Rayleigh.cdf(plan.s(0, f + 1))).abs() < 1e-15);
            }
            assert_eq!(t.get(1, 3), 1.0);
        }
    }

    #[test]
    fn two_round_reference_values() {
        let plan = plan_2x2(1.0, 1.0);
        let alo = ptilde_table(&Rayleigh, ProtocolKind::Alo, &plan).unwrap();
        let q = 1.0 - (-1f64).exp();
        assert!((alo.get(2, 0) - q * q).abs() < 1e-15);
        let rtd = ptilde_table(&Rayleigh, ProtocolKind::Rtd, &plan).unwrap();
        assert!((rtd.get(2, 0) - (1.0 - 2.0 * (-1f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn rtd_quadrature_matches_brute_force() {
        let plan = ThresholdPlan::new(0.5, vec![0.7, 1.4], vec![vec![0.4, 1.1], vec![0.6, 2.0]]).unwrap();
        let t = ptilde_table(&Rayleigh, ProtocolKind::Rtd, &plan).unwrap();
        // Pr[γ1 < 0.4, γ2 < (1 − γ1/0.7)·2.0] by a fine midpoint rule.
        let n = 20_000;
        let h = 0.4 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let g1 = (i as f64 + 0.5) * h;
            acc += (-g1).exp() * Rayleigh.cdf((1.0 - g1 / 0.7) * 2.0) * h;
        }
        assert!((t.get(2, 1) - acc).abs() < 1e-8, "{} vs {acc}", t.get(2, 1));
    }

    #[test]
    fn tables_nest() {
        let plan =
            ThresholdPlan::new(1.2, vec![0.8, 1.5, 1.1], vec![vec![0.3, 1.0], vec![0.5, 0.9], vec![0.2, 2.0]]).unwrap();
        for kind in ProtocolKind::ALL {
            let t = ptilde_table(&Rayleigh, kind, &plan).unwrap();
            for m in 1..=4 {
                for f in 0..3 {
                    assert!((0.0..=1.0).contains(&t.get(m, f)));
                    if f > 0 {
                        assert!(t.get(m, f) >= t.get(m, f - 1) - 1e-12);
                    }
                    assert!(t.get(m, f) <= t.get(m - 1, f) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn classical_rows() {
        let plan = classical_plan(2, vec![1.0, 1.0], 1.0).unwrap();
        let t = ptilde_table(&Rayleigh, ProtocolKind::Alo, &plan).unwrap();
        let q = 1.0 - (-1f64).exp();
        assert!((t.get(2, 0) - q * q).abs() < 1e-15);
        assert_eq!(t.get(2, 1), t.get(1, 0));
        assert_eq!(t.outage(), t.get(2, 0));
        let t = ptilde_table(&Rayleigh, ProtocolKind::Inr, &plan).unwrap();
        let b = t.inr_bounds.as_ref().unwrap();
        assert!(b[1].0 <= t.get(2, 0) && t.get(2, 0) <= b[1].1);
    }

    #[test]
    fn unsupported_depth() {
        let plan = ThresholdPlan::new(1.0, vec![1.0; 4], vec![vec![1.0]; 4]).unwrap();
        assert!(matches!(ptilde_table(&Rayleigh, ProtocolKind::Inr, &plan), Err(crate::Error::Unsupported(_))));
        assert!(ptilde_table(&Rayleigh, ProtocolKind::Alo, &plan).is_ok());
        let classical = classical_plan(5, vec![1.0; 5], 1.0).unwrap();
        assert!(ptilde_table(&Rayleigh, ProtocolKind::Rtd, &classical).is_ok());
    }
}
