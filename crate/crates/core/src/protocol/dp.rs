//! Full-CSI HARQ by dynamic programming.
//!
//! The transmitter sees `γ_m` before round `m` and picks any power. The state
//! is the normalized accumulated information `x ∈ [0, 1)` (decoding at
//! `x ≥ 1`): RTD accumulates `γP/θ`, INR accumulates `ln(1 + γP)/R`, ALO
//! cannot accumulate at all. Fading is discretized into equiprobable bins
//! represented by their lower edge and the state into a uniform grid rounded
//! down, so every policy found is also achievable on the continuous channel
//! and the returned throughput is a lower bound.
//!
//! For a fixed rate the renewal-reward ratio is maximized by Dinkelbach
//! iterations on `E[R·1{decoded}] − ν·E[energy] − κ·E[T]`, with `ν` set by
//! bisection so that the average power meets the budget. The rate is either
//! given or found by a golden-section search over `ln θ`.

use super::ProtocolKind;
use crate::error::{domain, Error, Result};
use crate::fading::FadingModel;
use crate::optimizer::scalar::scan_then_golden;

/// Largest grid size accepted for either axis.
pub const MAX_GRID: usize = 512;
/// Relative change between the grid and its halved version above which the
/// result is flagged as coarse.
pub const REFINEMENT_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DpGrid {
    /// Accumulated-information levels per unit.
    pub state_levels: usize,
    /// Equiprobable fading bins.
    pub fading_levels: usize,
}

impl Default for DpGrid {
    fn default() -> Self {
        Self { state_levels: 256, fading_levels: 256 }
    }
}

impl DpGrid {
    pub fn validate(&self) -> Result<()> {
        let ok = |n: usize| (2..=MAX_GRID).contains(&n);
        if !ok(self.state_levels) || !ok(self.fading_levels) {
            return Err(domain(format!("DP grid sizes must lie in 2..={MAX_GRID}, got {self:?}")));
        }
        Ok(())
    }

    fn halved(&self) -> Option<Self> {
        (self.state_levels >= 4 && self.fading_levels >= 4)
            .then_some(Self { state_levels: self.state_levels / 2, fading_levels: self.fading_levels / 2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DpStatus {
    Converged,
    /// The halved grid differs by more than [`REFINEMENT_TOL`] (relative).
    CoarseGrid {
        delta: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpResult {
    /// Throughput in nats per channel use.
    pub eta: f64,
    pub rate: f64,
    pub p_out: f64,
    pub mean_renewal: f64,
    pub mean_power: f64,
    pub status: DpStatus,
    /// `η(grid) − η(grid/2)`, when the halved grid exists.
    pub refinement_delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    success: f64,
    energy: f64,
    slots: f64,
}

struct Dp<'a> {
    kind: ProtocolKind,
    rounds: usize,
    rate: f64,
    theta: f64,
    n: usize,
    gains: &'a [f64],
}

impl Dp<'_> {
    /// Power that moves the state from level `j` to level `y` (`y = n` decodes).
    fn power(&self, j: usize, y: usize, g: f64) -> f64 {
        if y == j {
            return 0.0;
        }
        if g <= 0.0 {
            return f64::INFINITY;
        }
        let dx = (y - j) as f64 / self.n as f64;
        match self.kind {
            ProtocolKind::Alo => self.theta / g,
            ProtocolKind::Rtd => self.theta * dx / g,
            ProtocolKind::Inr => (self.rate * dx).exp_m1() / g,
        }
    }

    /// Best target for every gain bin from level `j`, given the next-stage
    /// values. The optimal target is non-decreasing in the gain, so the bins
    /// are solved by divide and conquer.
    fn best_targets(&self, j: usize, next: &[f64], nu: f64, last: bool, out: &mut [u32]) {
        let (lo, hi) = (j, self.n);
        let score = |i: usize, y: usize| -> f64 {
            let reward = if y == self.n { self.rate } else { next[y] };
            let p = self.power(j, y, self.gains[i]);
            if p == f64::INFINITY {
                f64::NEG_INFINITY
            } else {
                reward - nu * p
            }
        };
        let restricted = last || self.kind == ProtocolKind::Alo;
        if restricted {
            for (i, o) in out.iter_mut().enumerate() {
                *o = if score(i, hi) > score(i, lo) { hi as u32 } else { lo as u32 };
            }
            return;
        }
        let mut stack = vec![(0usize, self.gains.len(), lo, hi)];
        while let Some((a, b, ylo, yhi)) = stack.pop() {
            if a >= b {
                continue;
            }
            let mid = (a + b) / 2;
            let mut best = ylo;
            let mut best_v = score(mid, ylo);
            for y in ylo + 1..=yhi {
                let v = score(mid, y);
                if v > best_v {
                    best_v = v;
                    best = y;
                }
            }
            out[mid] = best as u32;
            stack.push((a, mid, ylo, best));
            stack.push((mid + 1, b, best, yhi));
        }
    }

    /// Backward induction; returns the policy `[stage][state][bin]`.
    fn solve(&self, nu: f64, kappa: f64) -> Vec<Vec<Vec<u32>>> {
        let bins = self.gains.len();
        let states = if self.kind == ProtocolKind::Alo { 1 } else { self.n };
        let mut next = vec![0.0; states];
        let mut policy = vec![Vec::new(); self.rounds];
        for t in (0..self.rounds).rev() {
            let live = if t == 0 { 1 } else { states };
            let last = t + 1 == self.rounds;
            let mut value = vec![0.0; states];
            let mut stage = vec![vec![0u32; bins]; live];
            for j in 0..live {
                self.best_targets(j, &next, nu, last, &mut stage[j]);
                let mut acc = 0.0;
                for (i, &y) in stage[j].iter().enumerate() {
                    let y = y as usize;
                    let reward = if y == self.n { self.rate } else { next[y] };
                    acc += reward - nu * self.power(j, y, self.gains[i]);
                }
                value[j] = acc / bins as f64 - kappa;
            }
            policy[t] = stage;
            next = value;
        }
        policy
    }

    /// Exact evaluation of `policy` on the discretized channel.
    fn evaluate(&self, policy: &[Vec<Vec<u32>>]) -> Stats {
        let bins = self.gains.len() as f64;
        let states = if self.kind == ProtocolKind::Alo { 1 } else { self.n };
        let mut dist = vec![0.0; states];
        dist[0] = 1.0;
        let mut st = Stats::default();
        for stage in policy {
            let mut nd = vec![0.0; states];
            for (j, row) in stage.iter().enumerate() {
                let d = dist[j];
                if d == 0.0 {
                    continue;
                }
                st.slots += d;
                let w = d / bins;
                for (i, &y) in row.iter().enumerate() {
                    let y = y as usize;
                    st.energy += w * self.power(j, y, self.gains[i]);
                    if y == self.n {
                        st.success += w;
                    } else {
                        nd[y] += w;
                    }
                }
            }
            dist = nd;
        }
        st
    }

    /// Dinkelbach iterations for a fixed multiplier `ν`.
    fn dinkelbach(&self, nu: f64) -> Stats {
        let mut kappa = 0.0;
        let mut st = Stats::default();
        for _ in 0..100 {
            st = self.evaluate(&self.solve(nu, kappa));
            let k = (self.rate * st.success - nu * st.energy) / st.slots;
            let done = (k - kappa).abs() <= 1e-13 * (1.0 + k.abs());
            kappa = k;
            if done {
                break;
            }
        }
        st
    }

    /// Largest-throughput policy whose average power does not exceed `p_avg`.
    fn constrained(&self, p_avg: f64) -> Stats {
        let power = |st: &Stats| st.energy / st.slots;
        let (mut lo, mut hi) = (1e-12f64.ln(), 1e12f64.ln());
        let mut feasible = self.dinkelbach(hi.exp());
        if power(&feasible) > p_avg {
            return Stats { success: 0.0, energy: 0.0, slots: 1.0 };
        }
        for _ in 0..60 {
            if hi - lo < 1e-9 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let st = self.dinkelbach(mid.exp());
            if power(&st) > p_avg {
                lo = mid;
            } else {
                hi = mid;
                feasible = st;
            }
        }
        feasible
    }
}

fn gains(model: &dyn FadingModel, bins: usize) -> Vec<f64> {
    (0..bins).map(|k| if k == 0 { 0.0 } else { model.quantile(k as f64 / bins as f64) }).collect()
}

fn solve_grid(
    model: &dyn FadingModel,
    kind: ProtocolKind,
    rounds: usize,
    p_avg: f64,
    rate: Option<f64>,
    grid: DpGrid,
) -> (f64, Stats) {
    let g = gains(model, grid.fading_levels);
    let run = |rate: f64| {
        let dp = Dp { kind, rounds, rate, theta: rate.exp_m1(), n: grid.state_levels, gains: &g };
        dp.constrained(p_avg)
    };
    let eta = |rate: f64, st: &Stats| rate * st.success / st.slots;
    let rate = rate.unwrap_or_else(|| {
        let (ln_theta, _) = scan_then_golden(
            |lt| {
                let r = lt.exp().ln_1p();
                eta(r, &run(r))
            },
            (p_avg * 1e-3).ln(),
            (p_avg * 1e3 + 10.0).ln(),
            24,
            false,
        );
        ln_theta.exp().ln_1p()
    });
    (rate, run(rate))
}

/// Lower bound on the full-CSI throughput with at most `max_rounds` rounds.
///
/// `rate = None` optimizes the rate. The result carries the difference to the
/// halved grid and is flagged [`DpStatus::CoarseGrid`] when that difference
/// exceeds [`REFINEMENT_TOL`].
pub fn dp_full_csi_throughput(
    model: &dyn FadingModel,
    kind: ProtocolKind,
    max_rounds: usize,
    p_avg: f64,
    rate: Option<f64>,
    grid: DpGrid,
) -> Result<DpResult> {
    crate::capacity::check_snr(p_avg)?;
    grid.validate()?;
    if max_rounds == 0 {
        return Err(domain("DP needs at least one round"));
    }
    if let Some(r) = rate {
        if !(r > 0.0 && r.is_finite()) {
            return Err(domain(format!("rate must be positive and finite, got {r}")));
        }
    }
    let (rate, st) = solve_grid(model, kind, max_rounds, p_avg, rate, grid);
    if !(st.slots > 0.0) {
        return Err(Error::NonConvergence("DP produced an empty renewal".into()));
    }
    let eta = rate * st.success / st.slots;
    let refinement_delta = grid.halved().map(|h| {
        let (r, s) = solve_grid(model, kind, max_rounds, p_avg, Some(rate), h);
        eta - r * s.success / s.slots
    });
    let status = match refinement_delta {
        Some(d) if d.abs() > REFINEMENT_TOL * eta.abs().max(1e-12) => DpStatus::CoarseGrid { delta: d },
        _ => DpStatus::Converged,
    };
    Ok(DpResult {
        eta,
        rate,
        p_out: 1.0 - st.success,
        mean_renewal: st.slots,
        mean_power: st.energy / st.slots,
        status,
        refinement_delta,
    })
}
