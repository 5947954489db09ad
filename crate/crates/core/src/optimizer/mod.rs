//! Direct-search engine and protocol-plan optimization.

pub mod direct;
pub mod plan;
pub mod scalar;

pub use direct::{multistart, nelder_mead, NelderMeadOptions, Optimum};
pub use plan::{
    decode_plan, encode_plan, optimize_classical, optimize_plan, plan_search_spec, sweep, SweepRow, DEFAULT_BOUNDS,
};
pub use scalar::{bisect, bisect_log, golden_max, illinois, scan_then_golden};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};

/// Search-space description in transformed (log / ordered-gap) coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpec {
    pub dims: usize,
    pub bounds: Vec<(f64, f64)>,
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
}

impl SearchSpec {
    /// Spec with identical `bounds` on every coordinate.
    pub fn uniform(dims: usize, bounds: (f64, f64), restarts: usize, seed: u64) -> Self {
        Self { dims, bounds: vec![bounds; dims], restarts, tol: 1e-10, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.len() != self.dims {
            return Err(domain(format!("{} bounds for {} dims", self.bounds.len(), self.dims)));
        }
        if self.restarts == 0 || !(self.tol > 0.0) {
            return Err(domain("search spec needs restarts ≥ 1 and tol > 0"));
        }
        if self.bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return Err(domain("search bounds must be finite with lo ≤ hi"));
        }
        Ok(())
    }

    /// Clamps a point into the box.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.bounds).map(|(v, &(lo, hi))| v.clamp(lo, hi)).collect()
    }

    /// `restarts` pseudo-random points in the box, reproducible from `seed`.
    pub fn random_starts(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.restarts)
            .map(|_| self.bounds.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo }).collect())
            .collect()
    }

    pub(crate) fn nm_options(&self) -> NelderMeadOptions {
        NelderMeadOptions { ftol: self.tol, ..NelderMeadOptions::default() }
    }
}
