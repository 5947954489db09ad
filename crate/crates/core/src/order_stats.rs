//! Law of `a·max + b·sum` of independent exponentials and the combining-receiver
//! failure probabilities built on it.
//!
//! Conditioning on the order in which the variables are overtaken, the spacings
//! of the order statistics are independent exponentials, so every permutation
//! contributes a weighted sum `Σ v_ℓ Z_ℓ` of unit exponentials. Its tail follows
//! from a partial-fraction expansion of the Laplace transform
//! `Π (1 + v_ℓ s)^{-1}` into gamma laws, grouping coincident coefficients into
//! repeated poles.

use crate::error::{domain, unsupported, Result};
use crate::quadrature::integrate;

/// Largest number of variables handled by permutation enumeration.
pub const MAX_K: usize = 8;
const MERGE_REL: f64 = 1e-7;

/// Which order statistic carries the coefficient `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extreme {
    #[default]
    Max,
    Min,
}

/// `X = a·max_k W_k + b·Σ_k W_k` with `W_k ~ Exp(mean μ_k)` independent
/// (or `a·min_k W_k + …` with [`Extreme::Min`]).
#[derive(Debug, Clone, PartialEq)]
pub struct MaxSumLaw {
    pub a: f64,
    pub b: f64,
    pub means: Vec<f64>,
    pub extreme: Extreme,
}

impl MaxSumLaw {
    pub fn new(a: f64, b: f64, means: Vec<f64>) -> Result<Self> {
        Self::with_extreme(a, b, means, Extreme::Max)
    }

    /// `a·min + b·sum`.
    pub fn min_sum(a: f64, b: f64, means: Vec<f64>) -> Result<Self> {
        Self::with_extreme(a, b, means, Extreme::Min)
    }

    pub fn with_extreme(a: f64, b: f64, means: Vec<f64>, extreme: Extreme) -> Result<Self> {
        if means.is_empty() {
            return Err(domain("max-sum law needs at least one variable"));
        }
        if means.len() > MAX_K {
            return Err(unsupported(format!("max-sum law with K = {} > {MAX_K} variables", means.len())));
        }
        if means.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(domain("max-sum law needs positive finite means"));
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(domain("max-sum coefficients must be finite"));
        }
        Ok(Self { a, b, means, extreme })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    /// Every permutation as `(probability, coefficients v_1..v_K)`.
    pub fn mixture(&self) -> Vec<(f64, Vec<f64>)> {
        let rates: Vec<f64> = self.means.iter().map(|m| 1.0 / m).collect();
        let k = rates.len();
        let all_equal = rates.iter().all(|r| (r / rates[0] - 1.0).abs() < 1e-15);
        let mut out = Vec::new();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut emit = |perm: &[usize]| {
            // perm[ℓ-1] is the variable overtaken when ℓ remain.
            let mut c = 0.0;
            let mut prob = 1.0;
            let mut v = Vec::with_capacity(k);
            for (l, &idx) in perm.iter().enumerate() {
                c += rates[idx];
                prob *= rates[idx] / c;
                // The max spans every spacing; the min is the spacing with all K present.
                let a = match self.extreme {
                    Extreme::Max => self.a,
                    Extreme::Min if l + 1 == k => self.a,
                    Extreme::Min => 0.0,
                };
                v.push((a + self.b * (l + 1) as f64) / c);
            }
            out.push((prob, v));
        };
        if all_equal {
            // One orbit: every ordering has the same coefficients.
            emit(&perm);
            out[0].0 = 1.0;
            return out;
        }
        permutations(&mut perm, 0, &mut emit);
        out
    }

    /// `Pr[X > x]`.
    pub fn ccdf(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self.mixture().iter().map(|(p, v)| p * weighted_exp_ccdf(v, x)).collect();
        pairwise_sum(&terms).clamp(0.0, 1.0)
    }

    /// `Pr[X ≤ x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self.mixture().iter().map(|(p, v)| p * (1.0 - weighted_exp_ccdf(v, x))).collect();
        pairwise_sum(&terms).clamp(0.0, 1.0)
    }
}

fn permutations<F: FnMut(&[usize])>(perm: &mut Vec<usize>, start: usize, emit: &mut F) {
    if start == perm.len() {
        emit(perm);
        return;
    }
    for i in start..perm.len() {
        perm.swap(start, i);
        permutations(perm, start + 1, emit);
        perm.swap(start, i);
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// `Pr[X_{a,b} > x]`.
pub fn maxsum_ccdf(law: &MaxSumLaw, x: f64) -> f64 {
    law.ccdf(x)
}

/// One term `A·Gamma(r, scale u)` of a partial-fraction expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaTerm {
    pub scale: f64,
    pub order: usize,
    pub weight: f64,
}

/// Partial fractions of `Π_ℓ (1 + v_ℓ s)^{-1}`: the law of `Σ v_ℓ Z_ℓ` as a
/// signed mixture of (possibly negated) gamma laws. Coefficients within
/// `1e-7` relative of each other are merged into a repeated pole; zero
/// coefficients are dropped.
pub fn partial_fractions(v: &[f64]) -> Vec<GammaTerm> {
    let scale_ref = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut vals: Vec<f64> = v.iter().copied().filter(|x| x.abs() > 1e-14 * scale_ref.max(1e-300)).collect();
    vals.sort_by(f64::total_cmp);
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for x in vals {
        match groups.last_mut() {
            Some((u, n)) if ((x - *u) / u.abs()).abs() < MERGE_REL => {
                *u = (*u * *n as f64 + x) / (*n + 1) as f64;
                *n += 1;
            }
            _ => groups.push((x, 1)),
        }
    }
    let mut terms = Vec::new();
    for (g, &(ug, ng)) in groups.iter().enumerate() {
        // H_g(w) = Π_{h≠g} ((u_g − u_h + u_h w)/u_g)^{−n_h}, expanded to order n_g − 1.
        let mut log_pref = 0.0;
        let mut sign = 1.0;
        let mut series = vec![0.0; ng];
        series[0] = 1.0;
        for (h, &(uh, nh)) in groups.iter().enumerate() {
            if h == g {
                continue;
            }
            let c = (ug - uh) / ug;
            log_pref -= nh as f64 * c.abs().ln();
            if c < 0.0 && nh % 2 == 1 {
                sign = -sign;
            }
            let rho = uh / (ug - uh);
            // (1 + ρw)^{−n} = Σ_k C(−n, k) ρ^k w^k.
            let mut factor = vec![0.0; ng];
            let mut coef = 1.0;
            for (k, f) in factor.iter_mut().enumerate() {
                *f = coef;
                coef *= -((nh + k) as f64) / (k + 1) as f64 * rho;
            }
            let mut next = vec![0.0; ng];
            for i in 0..ng {
                for j in 0..ng - i {
                    next[i + j] += series[i] * factor[j];
                }
            }
            series = next;
        }
        let pref = sign * log_pref.exp();
        for r in 1..=ng {
            terms.push(GammaTerm { scale: ug, order: r, weight: pref * series[ng - r] });
        }
    }
    terms
}

/// `Pr[G > x]` for `G ~ Gamma(r, scale)` with integer `r`, `x ≥ 0`.
fn gamma_ccdf(order: usize, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let z = x / scale;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..order {
        term *= z / k as f64;
        sum += term;
    }
    (-z).exp() * sum
}

/// `Pr[Σ v_ℓ Z_ℓ > x]` for iid unit exponentials `Z_ℓ`.
pub fn weighted_exp_ccdf(v: &[f64], x: f64) -> f64 {
    let terms = partial_fractions(v);
    if terms.is_empty() {
        return if x < 0.0 { 1.0 } else { 0.0 };
    }
    if x >= 0.0 {
        terms.iter().filter(|t| t.scale > 0.0).map(|t| t.weight * gamma_ccdf(t.order, t.scale, x)).sum()
    } else {
        1.0 - terms.iter().filter(|t| t.scale < 0.0).map(|t| t.weight * gamma_ccdf(t.order, -t.scale, -x)).sum::<f64>()
    }
}

fn check_taus(taus: &[f64]) -> Result<()> {
    if taus.iter().any(|&t| !(t > 0.0)) {
        return Err(domain("thresholds must be positive"));
    }
    Ok(())
}

/// Finite thresholds as exponential means `1/τ`; `τ = +∞` terms vanish.
fn means_of(taus: &[f64]) -> Vec<f64> {
    taus.iter().filter(|t| t.is_finite()).map(|t| 1.0 / t).collect()
}

fn sum_below_one(a: f64, b: f64, taus: &[f64], extreme: Extreme) -> Result<f64> {
    let means = means_of(taus);
    if means.is_empty() {
        return Ok(1.0);
    }
    Ok(MaxSumLaw::with_extreme(a, b, means, extreme)?.cdf(1.0))
}

/// Repetition-combining failure `Pr[Σ_s γ_s/τ_s < 1]` for unit-mean Rayleigh.
pub fn pm_rtd(taus: &[f64]) -> Result<f64> {
    check_taus(taus)?;
    sum_below_one(0.0, 1.0, taus, Extreme::Max)
}

/// Selection failure `Pr[γ_s < τ_s for all s] = Π (1 − e^{−τ_s})`.
pub fn pm_alo(taus: &[f64]) -> Result<f64> {
    check_taus(taus)?;
    Ok(taus.iter().map(|&t| if t.is_finite() { -(-t).exp_m1() } else { 1.0 }).product())
}

/// Inner and outer polyhedral bounds on the incremental-redundancy failure
/// probability `Pr[Σ_s log(1 + θ γ_s/τ_s) < log(1 + θ)]`, with `x_s = γ_s/τ_s`.
///
/// The inner region is the union over `t` of the half-spaces below the
/// tangent planes at the unit axis points: `(1+θ)Σx − θ·max x < 1`. The outer
/// region is the union over `t` of the half-spaces below the planes through
/// the `m − 1` unit axis points other than `t` and the symmetric boundary point
/// `x_s = ((1+θ)^{1/m} − 1)/θ`: `Σx + c·x_t < 1` for some `t`, i.e.
/// `Σx + c·min x < 1` with `c = θ/((1+θ)^{1/m} − 1) − m ≥ 0`.
pub fn pm_inr_bounds(taus: &[f64], theta: f64) -> Result<(f64, f64)> {
    check_taus(taus)?;
    if !(theta > 0.0) {
        return Err(domain("θ must be positive"));
    }
    let m = means_of(taus).len();
    if m == 0 {
        return Ok((1.0, 1.0));
    }
    let lower = sum_below_one(-theta, 1.0 + theta, taus, Extreme::Max)?;
    let root = (theta.ln_1p() / m as f64).exp_m1();
    let c = (theta / root - m as f64).max(0.0);
    let upper = sum_below_one(c, 1.0, taus, Extreme::Min)?;
    Ok((lower, upper))
}

/// Largest number of rounds handled by nested quadrature.
pub const MAX_QUADRATURE_ROUNDS: usize = 3;

/// Residual normalized gain still required after observing `x = γ/τ`, given
/// `r` was required before: `((1 + θr)/(1 + θx) − 1)/θ`.
pub fn inr_residual(r: f64, x: f64, theta: f64) -> f64 {
    (r - x) / (1.0 + theta * x)
}

fn inr_fail(taus: &[f64], r: f64, theta: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let (tau, rest) = (taus[0], &taus[1..]);
    if !tau.is_finite() {
        return if rest.is_empty() { 1.0 } else { inr_fail(rest, r, theta) };
    }
    let upper = -(-tau * r).exp_m1();
    if rest.is_empty() {
        return upper;
    }
    integrate(
        |u| {
            let x = -(-u).ln_1p() / tau;
            inr_fail(rest, inr_residual(r, x, theta), theta)
        },
        0.0,
        upper,
        1e-11,
        1e-10,
    )
}

/// Incremental-redundancy failure probability over `m ≤ 3` rounds by nested
/// adaptive quadrature, for unit-mean Rayleigh.
pub fn pm_inr_quadrature(taus: &[f64], theta: f64) -> Result<f64> {
    check_taus(taus)?;
    if !(theta >= 0.0) {
        return Err(domain("θ must be non-negative"));
    }
    if taus.len() > MAX_QUADRATURE_ROUNDS {
        return Err(unsupported(format!(
            "nested quadrature supports at most {MAX_QUADRATURE_ROUNDS} rounds, got {}; use the bounds or Monte Carlo",
            taus.len()
        )));
    }
    if taus.is_empty() {
        return Ok(1.0);
    }
    Ok(inr_fail(taus, 1.0, theta))
}
