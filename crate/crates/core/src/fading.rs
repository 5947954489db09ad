//! Fading power-gain distributions.
//!
//! Every per-slot gain `γ` has unit mean. Thresholds and interval end points
//! are extended reals: `f64::INFINITY` is a valid upper limit everywhere and
//! `e^{-∞}` is taken as zero.

use crate::error::{domain, Result};
use crate::quadrature::integrate;
use crate::special::{e1, exp_e1};

const QUAD_TOL: f64 = 1e-12;

/// Distribution of the fading power gain.
///
/// Only `cdf`, `pdf` and `quantile` are required. The moment functionals have
/// quadrature defaults (substituting `γ = Q(u)`), which closed-form models
/// override.
pub trait FadingModel: Send + Sync {
    fn cdf(&self, x: f64) -> f64;
    fn pdf(&self, x: f64) -> f64;
    /// Inverse CDF on `[0, 1)`.
    fn quantile(&self, u: f64) -> f64;

    fn ccdf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// True when `γ` is a unit-mean exponential, enabling closed forms for
    /// sums of scaled gains.
    fn is_unit_exponential(&self) -> bool {
        false
    }

    /// `Pr[a ≤ γ < b]`.
    fn prob(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            0.0
        } else {
            (self.ccdf(a) - self.ccdf(b)).max(0.0)
        }
    }

    fn mean(&self) -> f64 {
        integrate(|u| self.quantile(u), 0.0, 1.0, QUAD_TOL, QUAD_TOL)
    }

    /// `E[γ⁻¹ 1{γ ≥ x}]`.
    fn tail_inverse_mean(&self, x: f64) -> f64 {
        integrate(|u| 1.0 / self.quantile(u), self.cdf(x), 1.0, QUAD_TOL, QUAD_TOL)
    }

    /// `E[γ | a ≤ γ < b]`.
    fn conditional_mean(&self, a: f64, b: f64) -> Result<f64> {
        if !(a < b) || a < 0.0 {
            return Err(domain(format!("conditional mean needs 0 ≤ a < b, got [{a}, {b})")));
        }
        let (ua, ub) = (self.cdf(a), self.cdf(b));
        if ub <= ua {
            return Ok(if b.is_finite() { 0.5 * (a + b) } else { a });
        }
        Ok(integrate(|u| self.quantile(u), ua, ub, QUAD_TOL, QUAD_TOL) / (ub - ua))
    }

    /// `E[log(1 + pγ) 1{a ≤ γ < b}]`.
    fn partial_log_mean(&self, a: f64, b: f64, p: f64) -> f64 {
        if !(b > a) || p <= 0.0 {
            return 0.0;
        }
        integrate(|u| (p * self.quantile(u)).ln_1p(), self.cdf(a), self.cdf(b), QUAD_TOL, QUAD_TOL)
    }

    /// `E[log(γ/λ) 1{γ ≥ λ}]`, the water-filling rate at cutoff `λ`.
    fn tail_log_ratio(&self, lambda: f64) -> f64 {
        integrate(|u| (self.quantile(u) / lambda).ln(), self.cdf(lambda), 1.0, QUAD_TOL, QUAD_TOL)
    }
}

/// Unit-mean exponential power gain (Rayleigh amplitude).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Rayleigh;

/// The Rayleigh fading model.
pub fn rayleigh_model() -> Rayleigh {
    Rayleigh
}

fn exp_neg(x: f64) -> f64 {
    if x == f64::INFINITY {
        0.0
    } else {
        (-x).exp()
    }
}

impl Rayleigh {
    /// Antiderivative piece with `∫_a^b log(1+pγ) e^{-γ} dγ = term(b) - term(a)`.
    fn log_term(x: f64, p: f64) -> f64 {
        if x == f64::INFINITY {
            return 0.0;
        }
        let w = exp_neg(x);
        let g = exp_e1(x + 1.0 / p).unwrap_or(0.0);
        -w * (p * x).ln_1p() - w * g
    }
}

impl FadingModel for Rayleigh {
    fn is_unit_exponential(&self) -> bool {
        true
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-x).exp_m1()
        }
    }

    fn ccdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            exp_neg(x)
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            exp_neg(x)
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        -(-u).ln_1p()
    }

    fn mean(&self) -> f64 {
        1.0
    }

    fn tail_inverse_mean(&self, x: f64) -> f64 {
        if x <= 0.0 {
            f64::INFINITY
        } else if x == f64::INFINITY {
            0.0
        } else {
            e1(x).unwrap_or(0.0)
        }
    }

    fn conditional_mean(&self, a: f64, b: f64) -> Result<f64> {
        if !(a < b) || a < 0.0 {
            return Err(domain(format!("conditional mean needs 0 ≤ a < b, got [{a}, {b})")));
        }
        if b == f64::INFINITY {
            return Ok(a + 1.0);
        }
        let d = b - a;
        Ok(a + 1.0 - d / d.exp_m1())
    }

    fn partial_log_mean(&self, a: f64, b: f64, p: f64) -> f64 {
        if !(b > a) || p <= 0.0 {
            return 0.0;
        }
        let a = a.max(0.0);
        (Self::log_term(b, p) - Self::log_term(a, p)).max(0.0)
    }

    fn tail_log_ratio(&self, lambda: f64) -> f64 {
        self.tail_inverse_mean(lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Same distribution without the closed-form overrides.
    struct QuadRayleigh;
    impl FadingModel for QuadRayleigh {
        fn cdf(&self, x: f64) -> f64 {
            Rayleigh.cdf(x)
        }
        fn pdf(&self, x: f64) -> f64 {
            Rayleigh.pdf(x)
        }
        fn quantile(&self, u: f64) -> f64 {
            Rayleigh.quantile(u)
        }
    }

    #[test]
    fn basic_shape() {
        let r = rayleigh_model();
        assert_eq!(r.cdf(0.0), 0.0);
        assert!((r.cdf(50.0) - 1.0).abs() < 1e-15);
        assert_eq!(r.ccdf(f64::INFINITY), 0.0);
        let total = integrate(
            |u| {
                let x = u / (1.0 - u);
                r.pdf(x) / ((1.0 - u) * (1.0 - u))
            },
            0.0,
            1.0,
            1e-14,
            1e-14,
        );
        assert!((total - 1.0).abs() < 1e-9);
        assert!((QuadRayleigh.mean() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn conditional_means() {
        let r = rayleigh_model();
        assert_eq!(r.conditional_mean(0.0, f64::INFINITY).unwrap(), 1.0);
        let oracle =
            integrate(|x| x * (-x).exp(), 0.0, 1.0, 1e-15, 1e-15) / integrate(|x| (-x).exp(), 0.0, 1.0, 1e-15, 1e-15);
        let got = r.conditional_mean(0.0, 1.0).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 0.418_023_293_9).abs() < 1e-9);
        assert!(r.conditional_mean(2.0, 1.0).is_err());
        assert!(r.conditional_mean(1.0, 1.0).is_err());
        let q = QuadRayleigh.conditional_mean(0.3, 2.5).unwrap();
        assert!((q - r.conditional_mean(0.3, 2.5).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn closed_forms_match_quadrature_defaults() {
        let r = rayleigh_model();
        for &(a, b, p) in &[(0.0, f64::INFINITY, 1.0), (0.2, 1.7, 3.0), (1.0, f64::INFINITY, 1e-3), (0.0, 0.5, 300.0)] {
            let c = r.partial_log_mean(a, b, p);
            let q = QuadRayleigh.partial_log_mean(a, b, p);
            assert!((c - q).abs() < 1e-10 * (1.0 + q), "({a},{b},{p}) {c} vs {q}");
        }
        for &x in &[0.01, 0.5, 3.0] {
            let c = r.tail_inverse_mean(x);
            let q = QuadRayleigh.tail_inverse_mean(x);
            assert!((c / q - 1.0).abs() < 1e-9);
            let t = QuadRayleigh.tail_log_ratio(x);
            assert!((r.tail_log_ratio(x) / t - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tail_inverse_mean_decreases_to_zero() {
        let r = rayleigh_model();
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let v = r.tail_inverse_mean(i as f64 * 0.5);
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-20);
        assert_eq!(r.tail_inverse_mean(f64::INFINITY), 0.0);
    }
}
