//! Monte-Carlo simulation of threshold HARQ renewals.
//!
//! Renewals are split over at most 64 shards. Shard `i` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so results depend only on
//! the seed and the renewal count, never on the thread count. Fading gains
//! are drawn by inverse-CDF sampling and success is always decided by the
//! decoding condition on the powers actually spent, independently of the
//! feedback rule that chose them. Standard errors come from a delete-one-shard
//! jackknife.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::fading::FadingModel;
use crate::protocol::policy::threshold_for;
use crate::protocol::{decodes, feedback, power_for, FeedbackMode, ProtocolKind, Slot, ThresholdPlan};

/// Upper limit on the number of independent RNG streams.
pub const MAX_SHARDS: usize = 64;

/// Additive renewal statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RenewalStats {
    pub n_renewals: u64,
    pub successes: u64,
    /// Decoded nats: `R` per successful renewal.
    pub total_reward: f64,
    /// Energy spent (power × slots).
    pub total_cost: f64,
    pub total_slots: u64,
}

impl RenewalStats {
    pub fn merge(&self, other: &RenewalStats) -> RenewalStats {
        RenewalStats {
            n_renewals: self.n_renewals + other.n_renewals,
            successes: self.successes + other.successes,
            total_reward: self.total_reward + other.total_reward,
            total_cost: self.total_cost + other.total_cost,
            total_slots: self.total_slots + other.total_slots,
        }
    }

    fn minus(&self, other: &RenewalStats) -> RenewalStats {
        RenewalStats {
            n_renewals: self.n_renewals - other.n_renewals,
            successes: self.successes - other.successes,
            total_reward: self.total_reward - other.total_reward,
            total_cost: self.total_cost - other.total_cost,
            total_slots: self.total_slots - other.total_slots,
        }
    }

    /// `η̂ = total_reward / total_slots`.
    pub fn throughput(&self) -> f64 {
        self.total_reward / self.total_slots as f64
    }

    pub fn outage(&self) -> f64 {
        1.0 - self.successes as f64 / self.n_renewals as f64
    }

    pub fn mean_renewal(&self) -> f64 {
        self.total_slots as f64 / self.n_renewals as f64
    }

    /// `P̂ = total_cost / total_slots`.
    pub fn mean_power(&self) -> f64 {
        self.total_cost / self.total_slots as f64
    }
}

/// Point estimate and jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub eta: Estimate,
    pub p_out: Estimate,
    pub mean_renewal: Estimate,
    pub mean_power: Estimate,
    pub totals: RenewalStats,
    pub shards: Vec<RenewalStats>,
}

/// One renewal: feedback sequence `B_1, …` (with the virtual `B_{M+1}` when
/// all rounds returned zero), outcome, slots and energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub feedback: Vec<usize>,
    pub success: bool,
    pub slots: u64,
    pub energy: f64,
}

fn draw(model: &dyn FadingModel, rng: &mut ChaCha8Rng) -> f64 {
    model.quantile(rng.random::<f64>())
}

/// Runs one renewal of `plan`.
pub fn run_renewal(model: &dyn FadingModel, kind: ProtocolKind, plan: &ThresholdPlan, rng: &mut ChaCha8Rng) -> Trace {
    let m_max = plan.max_rounds();
    let top = plan.levels() - 1;
    let mut history: Vec<Slot> = Vec::with_capacity(m_max);
    let mut spent: Vec<(f64, f64)> = Vec::with_capacity(m_max);
    let mut trace = Trace { feedback: Vec::with_capacity(m_max + 1), success: false, slots: 0, energy: 0.0 };
    for m in 0..m_max {
        let gamma = draw(model, rng);
        trace.slots += 1;
        let b = match plan.mode {
            FeedbackMode::Quantized => feedback(kind, plan, m, gamma, &history),
            FeedbackMode::AckNack => 0,
        };
        let power = power_for(plan, m, b);
        trace.energy += if power.is_finite() { power } else { 0.0 };
        history.push(Slot { gain: gamma, threshold: threshold_for(plan, m, b) });
        spent.push((gamma, power));
        let decoded = decodes(kind, &spent, plan.rate);
        match plan.mode {
            FeedbackMode::Quantized => {
                trace.feedback.push(b);
                if b > 0 || m + 1 == m_max {
                    trace.success = decoded;
                    if b == 0 {
                        trace.feedback.push(if decoded { top } else { 0 });
                    }
                    return trace;
                }
            }
            FeedbackMode::AckNack => {
                trace.feedback.push(if decoded { top } else { 0 });
                if decoded || m + 1 == m_max {
                    trace.success = decoded;
                    if !decoded {
                        trace.feedback.push(0);
                    }
                    return trace;
                }
            }
        }
    }
    trace
}

fn shard_sizes(n: u64) -> Vec<u64> {
    let shards = (MAX_SHARDS as u64).min(n) as usize;
    (0..shards).map(|i| n / shards as u64 + u64::from((i as u64) < n % shards as u64)).collect()
}

fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

fn jackknife(totals: &RenewalStats, shards: &[RenewalStats], stat: impl Fn(&RenewalStats) -> f64) -> Estimate {
    let value = stat(totals);
    let g = shards.len();
    if g < 2 {
        return Estimate { value, se: f64::NAN };
    }
    let loo: Vec<f64> = shards.iter().map(|s| stat(&totals.minus(s))).collect();
    let mean = loo.iter().sum::<f64>() / g as f64;
    let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (g - 1) as f64 / g as f64;
    Estimate { value, se: var.sqrt() }
}

/// Simulates `renewals` independent renewals of `plan`.
pub fn simulate(
    model: &dyn FadingModel,
    kind: ProtocolKind,
    plan: &ThresholdPlan,
    renewals: u64,
    seed: u64,
) -> Result<SimReport> {
    plan.validate()?;
    if renewals == 0 {
        return Err(domain("need at least one renewal"));
    }
    let shards: Vec<RenewalStats> = shard_sizes(renewals)
        .into_par_iter()
        .enumerate()
        .map(|(i, n)| {
            let mut rng = shard_rng(seed, i);
            let mut st = RenewalStats::default();
            for _ in 0..n {
                let t = run_renewal(model, kind, plan, &mut rng);
                st.n_renewals += 1;
                if t.success {
                    st.successes += 1;
                    st.total_reward += plan.rate;
                }
                st.total_slots += t.slots;
                st.total_cost += t.energy;
            }
            st
        })
        .collect();
    let totals = shards.iter().fold(RenewalStats::default(), |a, b| a.merge(b));
    Ok(SimReport {
        eta: jackknife(&totals, &shards, RenewalStats::throughput),
        p_out: jackknife(&totals, &shards, RenewalStats::outage),
        mean_renewal: jackknife(&totals, &shards, RenewalStats::mean_renewal),
        mean_power: jackknife(&totals, &shards, RenewalStats::mean_power),
        totals,
        shards,
    })
}

/// Sets the rate of `plan` so that the simulated average power equals
/// `p_avg`, for plans beyond the reach of the analytic tables.
///
/// ALO and RTD feedback does not depend on the rate, so one pass fixes
/// `θ = p_avg·θ₀/P̂(θ₀)` exactly (up to Monte-Carlo error); INR repeats the
/// update with common random numbers until the rate settles.
pub fn calibrate_rate(
    model: &dyn FadingModel,
    kind: ProtocolKind,
    plan: &ThresholdPlan,
    p_avg: f64,
    renewals: u64,
    seed: u64,
) -> Result<ThresholdPlan> {
    if !(p_avg > 0.0 && p_avg.is_finite()) {
        return Err(domain(format!("average power must be positive and finite, got {p_avg}")));
    }
    let mut theta = if plan.rate > 0.0 { plan.theta() } else { p_avg };
    for _ in 0..30 {
        let trial = plan.with_rate(theta.ln_1p());
        let spent = simulate(model, kind, &trial, renewals, seed)?.totals.mean_power();
        if !(spent > 0.0) {
            return Err(domain("plan never transmits with positive power"));
        }
        let next = theta * p_avg / spent;
        let settled = (next / theta - 1.0).abs() < 1e-9;
        theta = next;
        if settled || kind != ProtocolKind::Inr {
            break;
        }
    }
    Ok(plan.with_rate(theta.ln_1p()))
}

/// Row-major `p̃` estimates and their standard errors.
pub type TableEstimate = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Empirical `p̃_{m,f}` (rows `m = 1..M+1`) with binomial standard errors.
pub fn empirical_ptilde(
    model: &dyn FadingModel,
    kind: ProtocolKind,
    plan: &ThresholdPlan,
    renewals: u64,
    seed: u64,
) -> Result<TableEstimate> {
    plan.validate()?;
    if renewals == 0 {
        return Err(domain("need at least one renewal"));
    }
    let rows = plan.max_rounds() + 1;
    let levels = plan.levels();
    let counts: Vec<Vec<u64>> = shard_sizes(renewals)
        .into_par_iter()
        .enumerate()
        .map(|(i, n)| {
            let mut rng = shard_rng(seed, i);
            let mut c = vec![0u64; rows * levels];
            for _ in 0..n {
                let t = run_renewal(model, kind, plan, &mut rng);
                for (m, &b) in t.feedback.iter().enumerate() {
                    for f in b..levels {
                        c[m * levels + f] += 1;
                    }
                }
            }
            c
        })
        .collect();
    let n = renewals as f64;
    let mut est = vec![vec![0.0; levels]; rows];
    let mut se = vec![vec![0.0; levels]; rows];
    for m in 0..rows {
        for f in 0..levels {
            let k: u64 = counts.iter().map(|c| c[m * levels + f]).sum();
            let p = k as f64 / n;
            est[m][f] = p;
            se[m][f] = (p * (1.0 - p) / n).sqrt();
        }
    }
    Ok((est, se))
}
