//! Dry-run checks of a configuration against the grid of meaningful cases.
//!
//! Columns are the number of rounds (`M = 1` outage capacity, finite `M ≥ 2`
//! HARQ, `M = inf` ergodic capacity); rows are the feedback resolution
//! (`F = 1` no CSI, finite `F ≥ 2` quantized, `F = inf` full CSI).

use std::fmt;

use harq_csi::order_stats::{MAX_K, MAX_QUADRATURE_ROUNDS};
use harq_csi::protocol::{DpGrid, ProtocolKind};

use crate::config::{Case, Dim, ExperimentConfig};

/// Largest SNR magnitude accepted on the grid, in dB.
pub const MAX_SNR_DB: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    /// Informational; the run proceeds.
    Note,
    /// Valid request outside what the analytic engine evaluates.
    Unsupported,
    /// The configuration is not a meaningful case.
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Note => "note",
            Severity::Unsupported => "unsupported",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Deepest plan the analytic tables evaluate for `kind`.
pub fn analytic_depth(case: Case, kind: ProtocolKind) -> Option<usize> {
    match (case, kind) {
        (_, ProtocolKind::Alo) => None,
        (Case::HarqClassical, ProtocolKind::Rtd) => Some(MAX_K),
        _ => Some(MAX_QUADRATURE_ROUNDS),
    }
}

/// Returns every finding for `cfg`; an empty list means the run is a plain
/// analytic evaluation of a meaningful case.
pub fn validate(cfg: &ExperimentConfig) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut push = |severity, message: String| out.push(Finding { severity, message });
    let case = cfg.case;
    let (m, f) = (cfg.rounds(), cfg.quantizer_levels());

    if cfg.snr_db_grid.is_empty() {
        push(Severity::Error, "snr_grid is empty".into());
    }
    if let Some(v) = cfg.snr_db_grid.iter().find(|v| v.abs() > MAX_SNR_DB) {
        push(Severity::Error, format!("SNR {v} dB lies outside ±{MAX_SNR_DB} dB"));
    }

    // Columns.
    if case.is_ergodic() && m != Dim::Infinite {
        push(Severity::Error, format!("{case} is the M = inf column; got M = {m}"));
    }
    if case.is_outage() && m != Dim::Finite(1) {
        push(Severity::Error, format!("{case} is the M = 1 column; got M = {m} (use harq-new for M ≥ 2)"));
    }
    if case.needs_kind() && m == Dim::Infinite {
        push(Severity::Error, format!("{case} needs a finite M; M = inf is ergodic capacity"));
    }

    // Rows.
    match case {
        Case::ErgodicNoCsi | Case::OutageNoCsi if f != Dim::Finite(1) => {
            push(Severity::Error, format!("{case} is the F = 1 row; got F = {f}"));
        }
        Case::ErgodicPartial | Case::OutagePartial if !matches!(f, Dim::Finite(n) if n >= 2) => {
            push(Severity::Error, format!("{case} needs a finite F ≥ 2; got F = {f}"));
        }
        Case::ErgodicFull | Case::OutageFull | Case::DpFullCsi if f != Dim::Infinite => {
            push(Severity::Error, format!("{case} is the F = inf row; got F = {f}"));
        }
        Case::HarqClassical | Case::HarqNew => match (m, f) {
            (Dim::Finite(m), Dim::Finite(1)) if m >= 2 => {
                push(Severity::Error, format!("M = {m} with F = 1 (impossible, need at least 1-bit for ack/nack)"))
            }
            (Dim::Finite(m), Dim::Infinite) if m >= 2 => push(
                Severity::Error,
                format!("M = {m} with F = inf (not evaluated); use case = dp-full-csi for a full-CSI lower bound"),
            ),
            (Dim::Finite(1), Dim::Finite(1)) => push(
                Severity::Error,
                "M = 1 with F = 1 is outage capacity without CSI; use case = outage-no-csi \
                 (a single feedback symbol cannot acknowledge a decode)"
                    .into(),
            ),
            (Dim::Finite(1), Dim::Infinite) => {
                push(Severity::Error, "M = 1 with F = inf is outage capacity; use case = outage-full".into());
            }
            (_, Dim::Finite(n)) if case == Case::HarqClassical && n != 2 => {
                push(Severity::Error, format!("classical HARQ feeds back a single ACK/NACK bit (F = 2); got F = {n}"))
            }
            _ => {}
        },
        _ => {}
    }

    // Receiver and engine limits.
    match (case.needs_kind(), cfg.kind) {
        (true, None) => push(Severity::Error, format!("{case} needs kind = ALO, RTD or INR")),
        (false, Some(k)) => push(Severity::Note, format!("kind = {k} has no effect on {case}")),
        _ => {}
    }
    if case.needs_kind() && m == Dim::Finite(1) {
        push(Severity::Note, "with M = 1 there is no retransmission: all protocols have the same throughput".into());
    }
    if let (Some(kind), Dim::Finite(rounds)) = (cfg.kind, m) {
        if matches!(case, Case::HarqClassical | Case::HarqNew) {
            if let Some(depth) = analytic_depth(case, kind).filter(|&d| rounds > d) {
                if cfg.mc_renewals == 0 {
                    push(
                        Severity::Unsupported,
                        format!(
                            "analytic {kind} throughput is available for M ≤ {depth}, got M = {rounds}; \
                             rerun with --mc <renewals> for a Monte Carlo evaluation"
                        ),
                    );
                } else {
                    push(
                        Severity::Note,
                        format!(
                            "M = {rounds} exceeds the analytic depth {depth} for {kind}: the plan optimized at \
                             M = {depth} is extended and evaluated by Monte Carlo"
                        ),
                    );
                }
            }
        }
    }
    if case == Case::DpFullCsi {
        let grid = DpGrid { state_levels: cfg.dp_grid, fading_levels: cfg.dp_grid };
        if let Err(e) = grid.validate() {
            push(Severity::Error, e.to_string());
        }
    }
    if cfg.mc_renewals > 0 && !matches!(case, Case::HarqClassical | Case::HarqNew) {
        push(Severity::Note, format!("mc = {} is ignored: Monte Carlo applies to HARQ cases", cfg.mc_renewals));
    }
    if cfg.equal_power && case != Case::HarqClassical {
        push(Severity::Note, "equal_power only applies to harq-classical".into());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!("snr_grid = 0\n{text}")).unwrap()
    }

    fn worst(f: &[Finding]) -> Option<Severity> {
        f.iter().map(|x| x.severity).max()
    }

    #[test]
    fn well_formed_configs_are_clean() {
        for text in [
            "case = ergodic-full",
            "case = ergodic-partial\nF = 4",
            "case = outage-no-csi",
            "case = outage-partial\nF = 2",
            "case = harq-classical\nkind = RTD\nM = 5",
            "case = harq-new\nkind = INR\nM = 2\nF = 2",
            "case = harq-new\nkind = ALO\nM = 6\nF = 3",
            "case = dp-full-csi\nkind = INR\nM = 2",
        ] {
            assert_eq!(validate(&cfg(text)), vec![], "{text}");
        }
    }

    #[test]
    fn ack_nack_needs_a_bit() {
        let f = validate(&cfg("case = harq-new\nkind = INR\nM = 2\nF = 1"));
        assert_eq!(worst(&f), Some(Severity::Error));
        assert!(f[0].message.contains("(impossible, need at least 1-bit for ack/nack)"));
        let f = validate(&cfg("case = harq-new\nkind = INR\nM = 2\nF = inf"));
        assert!(f[0].message.contains("(not evaluated)"));
    }

    #[test]
    fn single_round_note() {
        for k in ["ALO", "RTD", "INR"] {
            let f = validate(&cfg(&format!("case = harq-new\nkind = {k}\nM = 1")));
            assert_eq!(f.len(), 1);
            assert_eq!(f[0].severity, Severity::Note);
            assert!(f[0].message.contains("all protocols have the same throughput"));
        }
    }

    #[test]
    fn deep_plans_need_monte_carlo() {
        let f = validate(&cfg("case = harq-new\nkind = INR\nM = 4"));
        assert_eq!(worst(&f), Some(Severity::Unsupported));
        assert!(f[0].message.contains("--mc"));
        let f = validate(&cfg("case = harq-new\nkind = INR\nM = 4\nmc = 1000"));
        assert_eq!(worst(&f), Some(Severity::Note));
    }

    #[test]
    fn columns_and_rows() {
        assert_eq!(worst(&validate(&cfg("case = outage-full\nM = 2"))), Some(Severity::Error));
        assert_eq!(worst(&validate(&cfg("case = ergodic-no-csi\nF = 2"))), Some(Severity::Error));
        assert_eq!(worst(&validate(&cfg("case = harq-classical\nkind = ALO\nF = 3"))), Some(Severity::Error));
        assert_eq!(worst(&validate(&cfg("case = harq-new\nM = 2"))), Some(Severity::Error));
        assert_eq!(worst(&validate(&cfg("case = dp-full-csi\nkind = RTD\ndp_grid = 4096"))), Some(Severity::Error));
        assert_eq!(worst(&validate(&cfg("case = ergodic-full\nsnr_grid = 500"))), Some(Severity::Error));
    }
}
