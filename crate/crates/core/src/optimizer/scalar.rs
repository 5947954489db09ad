//! One-dimensional searches: bracketing scan, golden section and bisection.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization on `[a, b]`, returning `(x, f(x))`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > xtol * (1.0 + c.abs()) && iter < 400 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Global-ish maximization of `f` over `[lo, hi]`: an `n`-point scan (log
/// spaced when `log_spaced`) brackets the best grid point, then golden section
/// refines inside the neighbouring cells.
pub fn scan_then_golden<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, log_spaced: bool) -> (f64, f64) {
    assert!(n >= 3 && hi > lo);
    let point = |i: usize| {
        let t = i as f64 / (n - 1) as f64;
        if log_spaced {
            (lo.ln() + t * (hi.ln() - lo.ln())).exp()
        } else {
            lo + t * (hi - lo)
        }
    };
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..n {
        let v = f(point(i));
        if v > best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    let a = point(i.saturating_sub(1));
    let b = point((i + 1).min(n - 1));
    let (x, v) = if log_spaced {
        let (y, v) = golden_max(|y| f(y.exp()), a.ln(), b.ln(), 1e-13);
        (y.exp(), v)
    } else {
        golden_max(&f, a, b, 1e-13)
    };
    if v >= best.1 {
        (x, v)
    } else {
        (point(i), best.1)
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`; `f(lo)` and `f(hi)` must
/// have opposite signs. Stops when the bracket is below `xtol` relative width.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Option<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return None;
    }
    let rising = fhi > 0.0;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= xtol * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if (fm > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Bisection in `ln x` over the positive bracket `[lo, hi]`, stopping when the
/// bracket's relative width is below `rel_tol`.
pub fn bisect_log<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Option<f64> {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let fa = f(lo);
    let fb = f(hi);
    if fa == 0.0 {
        return Some(lo);
    }
    if fb == 0.0 {
        return Some(hi);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return None;
    }
    let rising = fb > 0.0;
    for _ in 0..400 {
        if b - a <= rel_tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m.exp());
        if fm == 0.0 {
            return Some(m.exp());
        }
        if (fm > 0.0) == rising {
            b = m;
        } else {
            a = m;
        }
    }
    Some((0.5 * (a + b)).exp())
}

/// Illinois (modified regula falsi) root finding on a bracket `[a, b]` with
/// known values `fa`, `fb` of opposite sign.
pub fn illinois<F: Fn(f64) -> f64>(f: F, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, xtol: f64) -> Option<f64> {
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if !(fa.signum() != fb.signum()) {
        return None;
    }
    let mut side = 0i8;
    let mut prev = f64::NAN;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        if (b - a).abs() <= xtol * (1.0 + c.abs()) || (c - prev).abs() <= xtol * (1.0 + c.abs()) {
            return Some(c);
        }
        prev = c;
        let fc = f(c);
        if fc == 0.0 || fc.is_nan() {
            return (fc == 0.0).then_some(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Some((a * fb - b * fa) / (fb - fa))
}
