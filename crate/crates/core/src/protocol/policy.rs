//! Receiver-side scale factor, feedback rule, power policy and the decoding
//! condition.

use super::{ProtocolKind, ThresholdPlan};

/// One past round: the fading gain and the threshold its power was set from
/// (power `θ/threshold`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub gain: f64,
    pub threshold: f64,
}

impl Slot {
    /// Normalized contribution `x = γ/threshold`.
    pub fn x(&self) -> f64 {
        if self.threshold == f64::INFINITY {
            0.0
        } else {
            self.gain / self.threshold
        }
    }
}

/// Fraction of the decoding requirement still missing after `history`:
/// `1` for a fresh packet, `≤ 0` once decodable.
///
/// ALO keeps `1` until some round alone suffices, RTD subtracts the
/// accumulated normalized SNR, INR divides out the accumulated
/// `Π(1 + θx_t)`: `ξ = ((1+θ)/Π(1 + θx_t) − 1)/θ`.
pub fn scale_factor(kind: ProtocolKind, history: &[Slot], rate: f64) -> f64 {
    let theta = rate.exp_m1();
    match kind {
        ProtocolKind::Alo => {
            if history.iter().any(|s| s.x() >= 1.0) {
                0.0
            } else {
                1.0
            }
        }
        ProtocolKind::Rtd => 1.0 - history.iter().map(Slot::x).sum::<f64>(),
        ProtocolKind::Inr if theta == 0.0 => 1.0 - history.iter().map(Slot::x).sum::<f64>(),
        ProtocolKind::Inr => {
            let acc: f64 = history.iter().map(|s| (theta * s.x()).ln_1p()).sum();
            (rate - acc).exp_m1() / theta
        }
    }
}

/// Feedback index `B_m` for 0-based round `m` with gain `gamma`.
pub fn feedback(kind: ProtocolKind, plan: &ThresholdPlan, m: usize, gamma: f64, history: &[Slot]) -> usize {
    let f_levels = plan.levels();
    let xi = scale_factor(kind, history, plan.rate);
    if xi <= 0.0 {
        return f_levels - 1;
    }
    let scaled = gamma / xi;
    let row = &plan.thresholds[m];
    // Largest f with s_{m,f} ≤ γ/ξ; intervals are half-open [s_f, s_{f+1}).
    (0..f_levels).rev().find(|&f| row[f] <= scaled).unwrap_or(0)
}

/// Transmit power for feedback `b` in 0-based round `m`.
pub fn power_for(plan: &ThresholdPlan, m: usize, b: usize) -> f64 {
    let thr = if b == 0 { plan.tau[m] } else { plan.thresholds[m][b] };
    plan.theta() / thr
}

/// Threshold that sets the power for feedback `b` (recorded in the history).
pub fn threshold_for(plan: &ThresholdPlan, m: usize, b: usize) -> f64 {
    if b == 0 {
        plan.tau[m]
    } else {
        plan.thresholds[m][b]
    }
}

/// Relative slack on the decoding condition, absorbing rounding at the
/// boundary `γ/ξ = s` where success is exact in real arithmetic.
pub const DECODE_SLACK: f64 = 1e-12;

/// Decoding condition on actual `(gain, power)` pairs at rate `R` (nats).
pub fn decodes(kind: ProtocolKind, slots: &[(f64, f64)], rate: f64) -> bool {
    if rate <= 0.0 {
        return true;
    }
    let need = rate * (1.0 - DECODE_SLACK);
    match kind {
        ProtocolKind::Alo => slots.iter().any(|&(g, p)| (g * p).ln_1p() >= need),
        ProtocolKind::Rtd => slots.iter().map(|&(g, p)| g * p).sum::<f64>().ln_1p() >= need,
        ProtocolKind::Inr => slots.iter().map(|&(g, p)| (g * p).ln_1p()).sum::<f64>() >= need,
    }
}
