//! Outage capacity: one transmission per packet, rate fixed in advance, power
//! chosen from the quantized CSI so that decoding succeeds whenever possible.

use super::check_snr;
use crate::error::{domain, Result};
use crate::fading::FadingModel;
use crate::optimizer::{multistart, scan_then_golden, NelderMeadOptions};

const SCAN_LO: f64 = 1e-6;
const SCAN_HI: f64 = 50.0;
const SCAN_POINTS: usize = 1024;
const RESTARTS: usize = 16;

/// Thresholds and powers of an `F`-level outage quantizer.
///
/// Region `R_f = [s_f, s_{f+1})` for `f = 1..F-1` (with `s_F = s_0`), and the
/// wrapped region `R_0 = {γ < s_1} ∪ {γ ≥ s_0}`. Region `f` uses power
/// `(e^R − 1)/s_f`; outage happens exactly on `{γ < s_1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageQuantizer {
    /// `s_1 ≤ … ≤ s_{F-1}`.
    pub thresholds: Vec<f64>,
    /// Wrap threshold `s_0 = s_F ≥ s_{F-1}`; `+∞` means region 0 is silent.
    pub wrap: f64,
    /// Rate in nats.
    pub rate: f64,
    /// `P_0..P_{F-1}`.
    pub powers: Vec<f64>,
}

impl OutageQuantizer {
    fn new(thresholds: Vec<f64>, wrap: f64, rate: f64) -> Self {
        let theta = rate.exp_m1();
        let mut powers = vec![theta / wrap];
        powers.extend(thresholds.iter().map(|s| theta / s));
        Self { thresholds, wrap, rate, powers }
    }

    pub fn levels(&self) -> usize {
        self.powers.len()
    }

    pub fn outage_probability(&self, model: &dyn FadingModel) -> f64 {
        model.cdf(self.thresholds.first().copied().unwrap_or(self.wrap))
    }

    pub fn average_power(&self, model: &dyn FadingModel) -> f64 {
        let s1 = self.thresholds.first().copied().unwrap_or(self.wrap);
        let mut spent = self.powers[0] * (model.cdf(s1) + model.ccdf(self.wrap));
        for (f, &s) in self.thresholds.iter().enumerate() {
            let next = self.thresholds.get(f + 1).copied().unwrap_or(self.wrap);
            spent += self.powers[f + 1] * model.prob(s, next);
        }
        spent
    }

    pub fn throughput(&self, model: &dyn FadingModel) -> f64 {
        self.rate * (1.0 - self.outage_probability(model))
    }
}

/// `E[s_B⁻¹]` per unit `e^R − 1`, for ordered thresholds `s` whose last entry
/// is the wrap threshold.
fn cost_per_theta(model: &dyn FadingModel, s: &[f64]) -> f64 {
    let n = s.len();
    let wrap = s[n - 1];
    let mut d = if wrap.is_finite() { (model.cdf(s[0]) + model.ccdf(wrap)) / wrap } else { 0.0 };
    for f in 0..n - 1 {
        d += model.prob(s[f], s[f + 1]) / s[f];
    }
    d
}

/// Throughput of the ordered threshold vector `s_1..s_F` (last entry is the
/// wrap threshold, possibly `+∞`) with the rate fixed by the power budget.
fn multilevel_objective(model: &dyn FadingModel, s: &[f64], p_avg: f64) -> f64 {
    let d = cost_per_theta(model, s);
    if !(d > 0.0) {
        return 0.0;
    }
    model.ccdf(s[0]) * (p_avg / d).ln_1p()
}

/// Upper-bound objective with `F` thresholds, free of cost below `s_1`:
/// `ccdf(s_1)·log(1 + P̄/Σ Pr[s_f ≤ γ < s_{f+1}]/s_f)`, `s_{F+1} = +∞`.
fn interval_objective(model: &dyn FadingModel, s: &[f64], p_avg: f64) -> f64 {
    let mut d = 0.0;
    for f in 0..s.len() {
        let next = s.get(f + 1).copied().unwrap_or(f64::INFINITY);
        d += model.prob(s[f], next) / s[f];
    }
    if !(d > 0.0) {
        return 0.0;
    }
    model.ccdf(s[0]) * (p_avg / d).ln_1p()
}

/// Constant power `P̄`: `max_s log(1 + P̄ s)·Pr[γ ≥ s]`. Returns `(η, s*)`.
pub fn outage_no_csi(model: &dyn FadingModel, p_avg: f64) -> Result<(f64, f64)> {
    check_snr(p_avg)?;
    let (s, eta) = scan_then_golden(|s| (p_avg * s).ln_1p() * model.ccdf(s), SCAN_LO, SCAN_HI, SCAN_POINTS, true);
    Ok((eta, s))
}

/// One bit of CSI with the upper region only: transmit at `(e^R − 1)/s_1`
/// when `γ ≥ s_1`, stay silent otherwise. Returns `(η, s_1)`.
pub fn outage_one_bit(model: &dyn FadingModel, p_avg: f64) -> Result<(f64, f64)> {
    check_snr(p_avg)?;
    let (s, eta) = scan_then_golden(|s| interval_objective(model, &[s], p_avg), SCAN_LO, SCAN_HI, SCAN_POINTS, true);
    Ok((eta, s))
}

/// Truncated channel inversion: `max_s log(1 + P̄/E[γ⁻¹; γ ≥ s])·Pr[γ ≥ s]`.
/// Returns `(η, s*)`.
pub fn outage_full_csi(model: &dyn FadingModel, p_avg: f64) -> Result<(f64, f64)> {
    check_snr(p_avg)?;
    let f = |s: f64| {
        let t = model.tail_inverse_mean(s);
        if t.is_finite() && t > 0.0 {
            (p_avg / t).ln_1p() * model.ccdf(s)
        } else {
            0.0
        }
    };
    let (s, eta) = scan_then_golden(f, SCAN_LO, SCAN_HI, SCAN_POINTS, true);
    Ok((eta, s))
}

/// `s_1 = e^{y_1}`, `s_k = s_{k-1} + e^{y_k}`.
fn decode_ladder(y: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    y.iter()
        .map(|v| {
            acc += v.exp();
            acc
        })
        .collect()
}

fn encode_ladder(s: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    s.iter()
        .map(|&v| {
            let g = (v - prev).max(1e-10);
            prev = v;
            g.ln()
        })
        .collect()
}

fn geometric(s1: f64, xi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| s1 * xi.powi(k as i32)).collect()
}

/// Log-spaced ladder starting points: four first thresholds times four ratios.
fn ladder_starts(n: usize, extra: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut starts: Vec<Vec<f64>> = extra.iter().map(|s| encode_ladder(s)).collect();
    for &s1 in &[0.02, 0.1, 0.4, 1.2] {
        for &xi in &[1.1, 1.4, 2.0, 3.0] {
            if starts.len() >= RESTARTS + extra.len() {
                break;
            }
            starts.push(encode_ladder(&geometric(s1, xi, n)));
        }
    }
    starts
}

fn search<F>(objective: F, n: usize, extra: &[Vec<f64>]) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let starts = ladder_starts(n, extra);
    let opts = NelderMeadOptions { step: 0.3, max_evals: 600 * (n + 1), ..NelderMeadOptions::default() };
    let best = multistart(|y: &[f64]| objective(&decode_ladder(y)), &starts, &opts);
    (decode_ladder(&best.x), best.value)
}

/// Best geometric ladder `s_f = s_1 ξ^{f-1}` (`ξ ≥ 1`) for the `n`-threshold
/// interval objective. Returns `(η, s_1, ξ)`.
fn geometric_search(model: &dyn FadingModel, p_avg: f64, n: usize) -> (f64, f64, f64) {
    let decode = |y: &[f64]| (y[0].exp(), 1.0 + y[1].exp());
    let obj = |y: &[f64]| {
        let (s1, xi) = decode(y);
        interval_objective(model, &geometric(s1, xi, n), p_avg)
    };
    let mut starts = Vec::new();
    for &s1 in &[0.02f64, 0.1, 0.4, 1.2] {
        for &xi in &[1.1f64, 1.5, 3.0] {
            starts.push(vec![s1.ln(), (xi - 1.0).ln()]);
        }
    }
    let best = multistart(obj, &starts, &NelderMeadOptions { step: 0.3, ..NelderMeadOptions::default() });
    let (s1, xi) = decode(&best.x);
    (best.value, s1, xi)
}

/// Outage capacity with `F` feedback levels, maximized over ordered thresholds
/// with a free wrap threshold (region 0 may be a union of two intervals). The
/// rate follows from the power budget.
pub fn outage_partial_csi(model: &dyn FadingModel, p_avg: f64, f_levels: usize) -> Result<(f64, OutageQuantizer)> {
    check_snr(p_avg)?;
    if f_levels < 2 {
        return Err(domain(format!("partial-CSI outage capacity needs F ≥ 2, got {f_levels}")));
    }
    let n = f_levels - 1;

    // Wrap threshold at +∞: interval-only regions with F−1 thresholds.
    let (_, g_s1, g_xi) = geometric_search(model, p_avg, n);
    let (_, s_one) = outage_one_bit(model, p_avg)?;
    let mut one_bit_seed = vec![s_one];
    while one_bit_seed.len() < n {
        let last = *one_bit_seed.last().unwrap();
        one_bit_seed.push(last * 1.5);
    }
    let (interval_s, interval_eta) = search(
        |s| multilevel_objective(model, &[s, &[f64::INFINITY]].concat(), p_avg),
        n,
        &[geometric(g_s1, g_xi, n), one_bit_seed],
    );

    // Free wrap threshold: F variables, seeded from the interval optimum.
    let mut seeded = interval_s.clone();
    seeded.push(interval_s[n - 1] * 20.0 + 40.0);
    let (wrap_s, wrap_eta) = search(|s| multilevel_objective(model, s, p_avg), n + 1, &[seeded]);

    let (thresholds, wrap) =
        if wrap_eta > interval_eta { (wrap_s[..n].to_vec(), wrap_s[n]) } else { (interval_s, f64::INFINITY) };
    let mut all = thresholds.clone();
    all.push(wrap);
    let d = cost_per_theta(model, &all);
    let rate = (p_avg / d).ln_1p();
    let q = OutageQuantizer::new(thresholds, wrap, rate);
    Ok((q.throughput(model), q))
}

/// Same search as [`outage_partial_csi`] with the wrap threshold pinned at
/// `+∞`, so every region is a single interval.
pub fn outage_partial_csi_intervals(
    model: &dyn FadingModel,
    p_avg: f64,
    f_levels: usize,
) -> Result<(f64, OutageQuantizer)> {
    check_snr(p_avg)?;
    if f_levels < 2 {
        return Err(domain(format!("partial-CSI outage capacity needs F ≥ 2, got {f_levels}")));
    }
    let n = f_levels - 1;
    let (_, g_s1, g_xi) = geometric_search(model, p_avg, n);
    let (s, _) =
        search(|s| multilevel_objective(model, &[s, &[f64::INFINITY]].concat(), p_avg), n, &[geometric(g_s1, g_xi, n)]);
    let mut all = s.clone();
    all.push(f64::INFINITY);
    let rate = (p_avg / cost_per_theta(model, &all)).ln_1p();
    let q = OutageQuantizer::new(s, f64::INFINITY, rate);
    Ok((q.throughput(model), q))
}

/// Geometric-ladder approximation of the upper-bound objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricLadder {
    pub eta: f64,
    pub s1: f64,
    pub xi: f64,
}

/// Lower and upper bound on the `F`-level outage capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageBounds {
    /// `η̂` with `F − 1` thresholds.
    pub lower: f64,
    /// `η̂` with `F` thresholds.
    pub upper: f64,
    /// Thresholds attaining `upper`.
    pub thresholds: Vec<f64>,
    /// Two-parameter ladder fit of the `F`-threshold objective.
    pub geometric: GeometricLadder,
}

fn eta_hat(model: &dyn FadingModel, p_avg: f64, n: usize) -> (f64, Vec<f64>, GeometricLadder) {
    let (eta, s1, xi) = geometric_search(model, p_avg, n);
    let ladder = GeometricLadder { eta, s1, xi };
    let (s, v) = search(|s| interval_objective(model, s, p_avg), n, &[geometric(s1, xi, n)]);
    (v.max(eta), if v >= eta { s } else { geometric(s1, xi, n) }, ladder)
}

/// Bound pair `η̂(F − 1) ≤ η ≤ η̂(F)`, where `η̂(n)` is the best throughput when
/// `n` thresholds are used and gains below `s_1` cost nothing.
pub fn outage_bound_pair(model: &dyn FadingModel, p_avg: f64, f_levels: usize) -> Result<OutageBounds> {
    check_snr(p_avg)?;
    if f_levels < 2 {
        return Err(domain(format!("outage bound pair needs F ≥ 2, got {f_levels}")));
    }
    let (lower, _, _) = eta_hat(model, p_avg, f_levels - 1);
    let (upper, thresholds, geometric) = eta_hat(model, p_avg, f_levels);
    Ok(OutageBounds { lower, upper: upper.max(lower), thresholds, geometric })
}
