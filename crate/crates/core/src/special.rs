//! Exponential integral `E1` and its scaled companion `e^x E1(x)`.

use crate::error::{domain, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
const MAX_ITER: usize = 500;

/// `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
pub fn e1(x: f64) -> Result<f64> {
    check(x)?;
    if x < 1.0 {
        Ok(series(x))
    } else {
        Ok(continued_fraction(x) * (-x).exp())
    }
}

/// `e^x E1(x)`, evaluated without forming `e^x` for large arguments.
pub fn exp_e1(x: f64) -> Result<f64> {
    check(x)?;
    if x < 1.0 {
        Ok(x.exp() * series(x))
    } else {
        Ok(continued_fraction(x))
    }
}

fn check(x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("E1 needs x > 0, got {x}")))
    }
}

/// Power series `-γ - ln x - Σ (-x)^k / (k k!)`, used below 1.
fn series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        term *= -x / kf;
        let add = term / kf;
        sum += add;
        if add.abs() < EPS * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Modified Lentz evaluation of the continued fraction for `e^x E1(x)`, `x ≥ 1`.
fn continued_fraction(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn e1_oracle(x: f64) -> f64 {
        // t = x + u/(1-u) maps [0,1) onto [x, ∞).
        integrate(
            |u| {
                if u >= 1.0 {
                    return 0.0;
                }
                let t = x + u / (1.0 - u);
                (-t).exp() / t / ((1.0 - u) * (1.0 - u))
            },
            0.0,
            1.0,
            1e-300,
            1e-13,
        )
    }

    #[test]
    fn reference_values() {
        assert!((e1(1.0).unwrap() - 0.219_383_934_4).abs() < 1e-10);
        assert!((e1(10.0).unwrap() / 4.156_968_929_685e-6 - 1.0).abs() < 1e-9);
        assert!((exp_e1(1.0).unwrap() - 0.596_347_362_3).abs() < 1e-10);
    }

    #[test]
    fn matches_quadrature_on_log_grid() {
        for i in 0..50 {
            let x = 10f64.powf(-6.0 + i as f64 * (50f64.log10() + 6.0) / 49.0);
            let got = e1(x).unwrap();
            let want = e1_oracle(x);
            assert!((got / want - 1.0).abs() < 1e-9, "x={x} got={got} want={want}");
        }
    }

    #[test]
    fn large_argument_asymptotics() {
        let x = 1e4;
        let leading = 1.0 / x * (1.0 - 1.0 / x);
        assert!((exp_e1(x).unwrap() / leading - 1.0).abs() < 1e-6);
        assert!((exp_e1(1e6).unwrap() * 1e6 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(e1(0.0).is_err());
        assert!(exp_e1(-1.0).is_err());
    }

    #[test]
    fn sandwich_and_monotone() {
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let x = i as f64 * 0.1;
            let v = e1(x).unwrap();
            assert!(v < prev);
            let lo = (-x).exp() / (x + 1.0);
            let hi = (-x).exp() / x;
            assert!(lo < v && v < hi, "x={x}");
            prev = v;
        }
    }
}
