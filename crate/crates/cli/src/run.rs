//! Evaluation of a validated configuration and the CSV/sidecar writers.

use std::f64::consts::LN_2;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use harq_csi::capacity::{
    db_to_linear, ergodic_full_csi, ergodic_no_csi, ergodic_partial_csi, outage_full_csi, outage_no_csi,
    outage_partial_csi,
};
use harq_csi::optimizer::{optimize_classical, optimize_plan, plan_search_spec, SearchSpec, DEFAULT_BOUNDS};
use harq_csi::protocol::{dp_full_csi_throughput, DpGrid, DpStatus, ProtocolKind, ThresholdPlan};
use harq_csi::simulator::{calibrate_rate, simulate, Estimate, SimReport};
use harq_csi::{FadingModel, Rayleigh};
use rayon::prelude::*;

use crate::config::{Case, Dim, ExperimentConfig};
use crate::error::CliError;
use crate::validate::analytic_depth;

pub const CSV_HEADER: &str = "snr_db,eta_bits,eta_nats,ratio_full_csi,p_out,mean_renewal,mean_power,mc_eta,mc_se";

/// One grid point. Quantities that do not apply to the case are `None` and
/// become empty CSV fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub snr_db: f64,
    /// Throughput in nats per channel use.
    pub eta: f64,
    pub ratio_full_csi: f64,
    pub p_out: Option<f64>,
    pub mean_renewal: Option<f64>,
    pub mean_power: Option<f64>,
    /// Monte Carlo throughput in nats, with its jackknife standard error.
    pub mc: Option<Estimate>,
    /// The analytic columns are themselves Monte Carlo estimates.
    pub simulated: bool,
    /// DP points whose refinement check failed, with the delta.
    pub coarse_grid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub rows: Vec<Row>,
    pub wall_time_s: f64,
}

impl RunOutcome {
    pub fn coarse_points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().filter_map(|r| r.coarse_grid.map(|d| (r.snr_db, d))).collect()
    }
}

fn finite(d: Dim, what: &str) -> Result<usize, CliError> {
    match d {
        Dim::Finite(n) => Ok(n),
        Dim::Infinite => Err(CliError::Config(format!("{what} must be finite here"))),
    }
}

fn kind_of(cfg: &ExperimentConfig) -> Result<ProtocolKind, CliError> {
    cfg.kind.ok_or_else(|| CliError::Config(format!("{} needs a kind", cfg.case)))
}

/// Appends copies of the last round until the plan has `rounds` rounds.
fn extend(plan: &ThresholdPlan, rounds: usize) -> ThresholdPlan {
    let mut out = plan.clone();
    while out.tau.len() < rounds {
        out.tau.push(*plan.tau.last().expect("plans have a round"));
        out.thresholds.push(plan.thresholds.last().expect("plans have a round").clone());
    }
    out
}

struct Harq {
    plan: ThresholdPlan,
    /// The analytic engine covered the full depth.
    exact: Option<harq_csi::protocol::ThroughputReport>,
}

fn harq_plan(cfg: &ExperimentConfig, kind: ProtocolKind, p: f64, seed: u64) -> Result<Harq, CliError> {
    let rounds = finite(cfg.rounds(), "M")?;
    let depth = analytic_depth(cfg.case, kind).map_or(rounds, |d| d.min(rounds));
    let (plan, report) = if cfg.case == Case::HarqClassical {
        let spec = SearchSpec::uniform(depth, DEFAULT_BOUNDS, cfg.restarts, cfg.seed);
        optimize_classical(&Rayleigh, kind, depth, p, cfg.equal_power, &spec)?
    } else {
        let levels = finite(cfg.quantizer_levels(), "F")?;
        optimize_plan(&Rayleigh, kind, depth, levels, p, &plan_search_spec(depth, levels, cfg.restarts, cfg.seed))?
    };
    if depth == rounds {
        return Ok(Harq { plan, exact: Some(report) });
    }
    if cfg.mc_renewals == 0 {
        return Err(CliError::Unsupported(format!(
            "analytic {kind} throughput is limited to M ≤ {depth}; rerun with --mc <renewals>"
        )));
    }
    let plan = calibrate_rate(&Rayleigh, kind, &extend(&plan, rounds), p, cfg.mc_renewals, seed)?;
    Ok(Harq { plan, exact: None })
}

fn point(cfg: &ExperimentConfig, index: usize, snr_db: f64) -> Result<Row, CliError> {
    let p = db_to_linear(snr_db);
    let (reference, _) = ergodic_full_csi(&Rayleigh, p)?;
    let seed = cfg.seed.wrapping_add(index as u64);
    let mut row = Row {
        snr_db,
        eta: 0.0,
        ratio_full_csi: 0.0,
        p_out: None,
        mean_renewal: None,
        mean_power: Some(p),
        mc: None,
        simulated: false,
        coarse_grid: None,
    };
    match cfg.case {
        Case::ErgodicNoCsi => row.eta = ergodic_no_csi(&Rayleigh, p)?,
        Case::ErgodicPartial => {
            let (eta, q) = ergodic_partial_csi(&Rayleigh, p, finite(cfg.quantizer_levels(), "F")?)?;
            row.eta = eta;
            row.mean_power = Some(q.average_power(&Rayleigh));
        }
        Case::ErgodicFull => row.eta = reference,
        Case::OutageNoCsi | Case::OutageFull => {
            let (eta, s) = if cfg.case == Case::OutageNoCsi {
                outage_no_csi(&Rayleigh, p)?
            } else {
                outage_full_csi(&Rayleigh, p)?
            };
            row.eta = eta;
            row.p_out = Some(Rayleigh.cdf(s));
            row.mean_renewal = Some(1.0);
        }
        Case::OutagePartial => {
            let (eta, q) = outage_partial_csi(&Rayleigh, p, finite(cfg.quantizer_levels(), "F")?)?;
            row.eta = eta;
            row.p_out = Some(q.outage_probability(&Rayleigh));
            row.mean_renewal = Some(1.0);
            row.mean_power = Some(q.average_power(&Rayleigh));
        }
        Case::HarqClassical | Case::HarqNew => {
            let kind = kind_of(cfg)?;
            let harq = harq_plan(cfg, kind, p, seed)?;
            let sim: Option<SimReport> = if cfg.mc_renewals > 0 {
                Some(simulate(&Rayleigh, kind, &harq.plan, cfg.mc_renewals, seed)?)
            } else {
                None
            };
            match (&harq.exact, &sim) {
                (Some(r), _) => {
                    row.eta = r.eta;
                    row.p_out = Some(r.p_out);
                    row.mean_renewal = Some(r.mean_renewal);
                    row.mean_power = Some(r.mean_power);
                }
                (None, Some(s)) => {
                    row.eta = s.eta.value;
                    row.p_out = Some(s.p_out.value);
                    row.mean_renewal = Some(s.mean_renewal.value);
                    row.mean_power = Some(s.mean_power.value);
                    row.simulated = true;
                }
                (None, None) => unreachable!("deep plans are only built with Monte Carlo enabled"),
            }
            row.mc = sim.map(|s| s.eta);
        }
        Case::DpFullCsi => {
            let kind = kind_of(cfg)?;
            let grid = DpGrid { state_levels: cfg.dp_grid, fading_levels: cfg.dp_grid };
            let r = dp_full_csi_throughput(&Rayleigh, kind, finite(cfg.rounds(), "M")?, p, None, grid)?;
            row.eta = r.eta;
            row.p_out = Some(r.p_out);
            row.mean_renewal = Some(r.mean_renewal);
            row.mean_power = Some(r.mean_power);
            if let DpStatus::CoarseGrid { delta } = r.status {
                row.coarse_grid = Some(delta);
            }
        }
    }
    row.ratio_full_csi = row.eta / reference;
    Ok(row)
}

/// Evaluates every grid point in parallel; rows come back in grid order.
pub fn evaluate(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    if cfg.snr_db_grid.is_empty() {
        return Err(CliError::Config("snr_grid is empty".into()));
    }
    let start = Instant::now();
    let rows =
        cfg.snr_db_grid.par_iter().enumerate().map(|(i, &db)| point(cfg, i, db)).collect::<Result<Vec<_>, _>>()?;
    Ok(RunOutcome { rows, wall_time_s: start.elapsed().as_secs_f64() })
}

fn field(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn write_csv(rows: &[Row], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.snr_db,
            r.eta / LN_2,
            r.eta,
            r.ratio_full_csi,
            field(r.p_out),
            field(r.mean_renewal),
            field(r.mean_power),
            field(r.mc.map(|e| e.value)),
            field(r.mc.map(|e| e.se)),
        )?;
    }
    Ok(())
}

/// `<out>.meta`, next to the CSV.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn write_sidecar(
    cfg: &ExperimentConfig,
    source: Option<&Path>,
    outcome: &RunOutcome,
    path: &Path,
) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "tool = harq-csi")?;
    writeln!(w, "version = {}", env!("CARGO_PKG_VERSION"))?;
    if let Some(src) = source {
        writeln!(w, "config_file = {}", src.display())?;
    }
    for (k, v) in cfg.to_pairs() {
        writeln!(w, "{k} = {v}")?;
    }
    writeln!(w, "resolved_M = {}", cfg.rounds())?;
    writeln!(w, "resolved_F = {}", cfg.quantizer_levels())?;
    let simulated = outcome.rows.iter().any(|r| r.simulated);
    writeln!(w, "estimator = {}", if simulated { "monte-carlo" } else { "analytic" })?;
    writeln!(w, "rows = {}", outcome.rows.len())?;
    let coarse = outcome.coarse_points();
    if !coarse.is_empty() {
        let list: Vec<String> = coarse.iter().map(|(db, d)| format!("{db}:{d}")).collect();
        writeln!(w, "coarse_grid = {}", list.join(","))?;
    }
    writeln!(w, "wall_time_s = {:.3}", outcome.wall_time_s)?;
    w.flush()
}

/// Evaluates `cfg` and writes the CSV and its sidecar.
pub fn run(cfg: &ExperimentConfig, source: Option<&Path>) -> Result<RunOutcome, CliError> {
    let outcome = evaluate(cfg)?;
    if let Some(dir) = cfg.output_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut csv = std::io::BufWriter::new(std::fs::File::create(&cfg.output_path)?);
    write_csv(&outcome.rows, &mut csv)?;
    csv.flush()?;
    write_sidecar(cfg, source, &outcome, &sidecar_path(&cfg.output_path))?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_repeats_the_last_round() {
        let plan = ThresholdPlan::new(0.5, vec![0.4, 0.9], vec![vec![0.2], vec![0.3]]).unwrap();
        let ext = extend(&plan, 4);
        assert_eq!(ext.tau, vec![0.4, 0.9, 0.9, 0.9]);
        assert_eq!(ext.thresholds[3], plan.thresholds[1]);
        ext.validate().unwrap();
    }

    #[test]
    fn empty_fields_without_monte_carlo() {
        let row = Row {
            snr_db: -5.0,
            eta: LN_2,
            ratio_full_csi: 0.5,
            p_out: None,
            mean_renewal: None,
            mean_power: Some(1.0),
            mc: None,
            simulated: false,
            coarse_grid: None,
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), format!("-5,1,{LN_2},0.5,,,1,,"));
    }
}
