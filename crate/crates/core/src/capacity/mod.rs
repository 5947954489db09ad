//! Capacity limits with partial CSI at the transmitter.
//!
//! The ergodic capacity (infinitely many retransmissions with incremental
//! redundancy) upper-bounds every HARQ scheme; the outage capacity (a single
//! transmission) lower-bounds them.

pub mod ergodic;
pub mod outage;

pub use ergodic::{
    ergodic_bounds_lloyd, ergodic_full_csi, ergodic_no_csi, ergodic_partial_csi, quantizer_for_powers,
    thresholds_from_powers, ErgodicQuantizer, LloydBounds,
};
pub use outage::{
    outage_bound_pair, outage_full_csi, outage_no_csi, outage_one_bit, outage_partial_csi,
    outage_partial_csi_intervals, GeometricLadder, OutageBounds, OutageQuantizer,
};

use crate::error::{domain, Result};

pub(crate) fn check_snr(p_avg: f64) -> Result<()> {
    if p_avg > 0.0 && p_avg.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("average SNR must be positive and finite, got {p_avg}")))
    }
}

/// Converts a dB value to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
