//! Threshold-based HARQ with quantized CSI feedback.
//!
//! At the start of round `m` the receiver measures `γ_m`, rescales it by the
//! information still missing (`ξ_m`) and feeds back the quantizer index
//! `B_m ∈ {0..F-1}` of `γ_m/ξ_m`. Index `f > 0` selects the power
//! `(e^R − 1)/s_{m,f}`, which guarantees decoding in this round and ends the
//! packet; index `0` selects `(e^R − 1)/τ_m` and the packet continues.
//! Classical ACK/NACK HARQ is the [`FeedbackMode::AckNack`] timing of the
//! same plan.

pub mod dp;
pub mod policy;
pub mod ptilde;
pub mod throughput;

pub use dp::{dp_full_csi_throughput, DpGrid, DpResult, DpStatus};
pub use policy::{decodes, feedback, power_for, scale_factor, Slot};
pub use ptilde::{ptilde_table, PtildeTable};
pub use throughput::{analytic_throughput, evaluate_plan, ThroughputReport};

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};

/// How the receiver combines the rounds of one packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    /// Decode from the latest round only.
    Alo,
    /// Maximal-ratio combining of repeated codewords: SNRs add.
    Rtd,
    /// Incremental redundancy: mutual informations add.
    Inr,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [ProtocolKind::Alo, ProtocolKind::Rtd, ProtocolKind::Inr];
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::Alo => "ALO",
            ProtocolKind::Rtd => "RTD",
            ProtocolKind::Inr => "INR",
        })
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ALO" => Ok(ProtocolKind::Alo),
            "RTD" => Ok(ProtocolKind::Rtd),
            "INR" => Ok(ProtocolKind::Inr),
            other => Err(domain(format!("unknown protocol kind {other:?} (expected ALO, RTD or INR)"))),
        }
    }
}

/// When the feedback of a round is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedbackMode {
    /// Quantized CSI at the start of each round; a decode on a zero-feedback
    /// round is only acknowledged at the start of the next round.
    #[default]
    Quantized,
    /// Classical HARQ: a one-bit ACK/NACK at the end of each round, power
    /// `(e^R − 1)/τ_m` in round `m`.
    AckNack,
}

/// Rate, retransmission powers and per-round quantizer thresholds.
///
/// Rounds are indexed `0..M` in code (round `m + 1` in the usual 1-based
/// notation). Each threshold row holds `s_{m,0} = 0, …, s_{m,F} = +∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPlan {
    pub rate: f64,
    pub tau: Vec<f64>,
    pub thresholds: Vec<Vec<f64>>,
    pub mode: FeedbackMode,
}

impl ThresholdPlan {
    /// Builds and validates a quantized-feedback plan from the interior
    /// thresholds `s_{m,1..F-1}` of every round.
    pub fn new(rate: f64, tau: Vec<f64>, interior: Vec<Vec<f64>>) -> Result<Self> {
        let thresholds = interior
            .into_iter()
            .map(|row| {
                let mut full = Vec::with_capacity(row.len() + 2);
                full.push(0.0);
                full.extend(row);
                full.push(f64::INFINITY);
                full
            })
            .collect();
        let plan = Self { rate, tau, thresholds, mode: FeedbackMode::Quantized };
        plan.validate()?;
        Ok(plan)
    }

    pub fn max_rounds(&self) -> usize {
        self.tau.len()
    }

    pub fn levels(&self) -> usize {
        self.thresholds.first().map_or(0, |r| r.len() - 1)
    }

    /// `θ = e^R − 1`.
    pub fn theta(&self) -> f64 {
        self.rate.exp_m1()
    }

    /// Threshold `s_{m,f}` for 0-based round `m`.
    pub fn s(&self, m: usize, f: usize) -> f64 {
        self.thresholds[m][f]
    }

    /// Same plan at a different rate.
    pub fn with_rate(&self, rate: f64) -> Self {
        Self { rate, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.max_rounds();
        if m == 0 {
            return Err(domain("plan needs at least one round"));
        }
        if self.thresholds.len() != m {
            return Err(domain(format!("{} threshold rows for {m} rounds", self.thresholds.len())));
        }
        let f = self.levels();
        if f == 0 {
            return Err(domain("feedback alphabet needs at least one symbol"));
        }
        if f < 2 {
            // A single symbol cannot tell a decode from a failure.
            return Err(domain("F ≥ 2 is required: at least one bit of feedback is needed for ACK/NACK"));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(domain(format!("rate must be finite and non-negative, got {}", self.rate)));
        }
        if self.tau.iter().any(|t| !(*t > 0.0)) {
            return Err(domain("retransmission thresholds τ must be positive (+∞ allowed)"));
        }
        for (i, row) in self.thresholds.iter().enumerate() {
            if row.len() != f + 1 {
                return Err(domain(format!("round {} has {} thresholds, expected {}", i + 1, row.len(), f + 1)));
            }
            if row[0] != 0.0 || row[f] != f64::INFINITY {
                return Err(domain(format!("round {} must start at 0 and end at +∞", i + 1)));
            }
            if row.windows(2).any(|w| !(w[0] <= w[1])) || row[1..f].iter().any(|s| !(*s > 0.0)) {
                return Err(domain(format!("round {} thresholds must be positive and non-decreasing", i + 1)));
            }
        }
        Ok(())
    }
}

/// Classical HARQ with retransmission thresholds `τ_1..τ_M`: every interior
/// quantizer threshold is `+∞`, so the only information fed back is whether
/// the packet has been decoded.
pub fn classical_plan(max_rounds: usize, taus: Vec<f64>, rate: f64) -> Result<ThresholdPlan> {
    if taus.len() != max_rounds {
        return Err(domain(format!("{} thresholds for M = {max_rounds}", taus.len())));
    }
    let plan = ThresholdPlan {
        rate,
        tau: taus,
        thresholds: vec![vec![0.0, f64::INFINITY, f64::INFINITY]; max_rounds],
        mode: FeedbackMode::AckNack,
    };
    plan.validate()?;
    Ok(plan)
}
