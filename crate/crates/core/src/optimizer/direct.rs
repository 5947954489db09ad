//! Nelder–Mead simplex search with deterministic multi-start.
//!
//! Objectives are maximized. Non-finite values (including `-inf` for
//! infeasible points) rank below every finite value, so the simplex simply
//! retreats from them.

use rayon::prelude::*;

/// Stopping rules for a single simplex run.
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex.
    pub step: f64,
    /// Relative spread of objective values at which the simplex stops.
    pub ftol: f64,
    /// Simplex diameter at which the run stops.
    pub xtol: f64,
    pub max_evals: usize,
    /// Number of times the search is re-seeded from its own optimum.
    pub polish_rounds: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { step: 0.5, ftol: 1e-12, xtol: 1e-9, max_evals: 4000, polish_rounds: 2 }
    }
}

/// Result of a search: best point and its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn run_simplex<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &NelderMeadOptions) -> Optimum {
    let n = x0.len();
    if n == 0 {
        return Optimum { x: vec![], value: score(f(&[])), evals: 1 };
    }
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| score(f(p))).collect();
    let mut evals = n + 1;

    while evals < opts.max_evals {
        // Sort descending by value (best first); stable on ties.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let best = vals[0];
        let worst = vals[n];
        let diam = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let flat =
            best.is_finite() && worst.is_finite() && (best - worst).abs() <= opts.ftol * (best.abs() + opts.ftol);
        if diam <= opts.xtol || flat {
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(1.0);
        let fr = score(f(&xr));
        evals += 1;
        if fr > vals[0] {
            let xe = along(2.0);
            let fe = score(f(&xe));
            evals += 1;
            if fe > fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr > vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let outside = fr > vals[n];
        let xc = along(if outside { 0.5 } else { -0.5 });
        let fc = score(f(&xc));
        evals += 1;
        if (outside && fc >= fr) || (!outside && fc > vals[n]) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for i in 1..=n {
            let p: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
            vals[i] = score(f(&p));
            pts[i] = p;
        }
        evals += n;
    }
    let (bi, _) =
        vals.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    Optimum { x: pts[bi].clone(), value: vals[bi], evals }
}

/// Maximizes `f` from `x0`, re-seeding the simplex at the optimum
/// `polish_rounds` times with a shrinking step.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Optimum {
    let mut best = run_simplex(&f, x0, opts);
    let mut step = opts.step;
    for _ in 0..opts.polish_rounds {
        step *= 0.2;
        let o = NelderMeadOptions { step, ..*opts };
        let next = run_simplex(&f, &best.x, &o);
        let evals = best.evals + next.evals;
        if next.value > best.value {
            best = next;
        }
        best.evals = evals;
    }
    best
}

/// Runs [`nelder_mead`] from every start concurrently and returns the best
/// result. Ties go to the lowest start index, so the outcome does not depend
/// on thread scheduling.
pub fn multistart<F>(f: F, starts: &[Vec<f64>], opts: &NelderMeadOptions) -> Optimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(!starts.is_empty(), "multistart needs at least one start");
    let results: Vec<Optimum> = starts.par_iter().map(|s| nelder_mead(&f, s, opts)).collect();
    let evals = results.iter().map(|r| r.evals).sum();
    let mut best = results.into_iter().reduce(|a, b| if b.value > a.value { b } else { a }).expect("non-empty");
    best.evals = evals;
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
    }

    #[test]
    fn solves_rosenbrock() {
        let o = nelder_mead(rosenbrock, &[-1.2, 1.0], &NelderMeadOptions { max_evals: 20000, ..Default::default() });
        assert!((o.x[0] - 1.0).abs() < 1e-4 && (o.x[1] - 1.0).abs() < 1e-4, "{:?}", o);
    }

    #[test]
    fn tolerates_infeasible_region() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NEG_INFINITY } else { -(x[0] - 0.5).powi(2) - x[1].powi(2) };
        let o = nelder_mead(f, &[0.1, 0.3], &NelderMeadOptions::default());
        assert!((o.x[0] - 0.5).abs() < 1e-5);
    }

    #[test]
    fn multistart_picks_global_and_is_deterministic() {
        let f = |x: &[f64]| (-(x[0] - 3.0).powi(2)).exp() * 2.0 + (-(x[0] + 3.0).powi(2)).exp();
        let starts = vec![vec![-3.5], vec![2.0], vec![-2.0]];
        let a = multistart(f, &starts, &NelderMeadOptions::default());
        let b = multistart(f, &starts, &NelderMeadOptions::default());
        assert!((a.x[0] - 3.0).abs() < 1e-5);
        assert_eq!(a, b);
    }
}
