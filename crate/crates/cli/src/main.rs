use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use harq_csi_cli::{run, validate, CliError, ExperimentConfig, Finding, Severity};

#[derive(Parser)]
#[command(name = "harq-csi", version, about = "Throughput experiments for HARQ with quantized CSI feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every SNR point and write the CSV plus a `.meta` sidecar.
    Run(RunArgs),
    /// Check a configuration without computing anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    kind: Option<String>,
    /// Rounds per packet, or `inf`.
    #[arg(long = "M")]
    rounds: Option<String>,
    /// Feedback levels, or `inf`.
    #[arg(long = "F")]
    levels: Option<String>,
    /// `start:stop:step` or a comma list, in dB.
    #[arg(long = "snr-grid", allow_hyphen_values = true)]
    snr_grid: Option<String>,
    /// Monte Carlo renewals per grid point.
    #[arg(long)]
    mc: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut add = |k, x: Option<String>| {
            if let Some(x) = x {
                v.push((k, x));
            }
        };
        add("case", self.case.clone());
        add("kind", self.kind.clone());
        add("M", self.rounds.clone());
        add("F", self.levels.clone());
        add("snr_grid", self.snr_grid.clone());
        add("mc", self.mc.map(|x| x.to_string()));
        add("seed", self.seed.map(|x| x.to_string()));
        add("out", self.out.as_ref().map(|p| p.display().to_string()));
        v
    }
}

/// Prints the findings and turns the worst one into an error.
fn gate(findings: &[Finding]) -> Result<(), CliError> {
    for f in findings {
        eprintln!("{f}");
    }
    let first = |s: Severity| findings.iter().find(|f| f.severity == s).map(|f| f.message.clone());
    if let Some(m) = first(Severity::Error) {
        return Err(CliError::Config(m));
    }
    if let Some(m) = first(Severity::Unsupported) {
        return Err(CliError::Unsupported(m));
    }
    Ok(())
}

fn load(path: &Path, overrides: &[(&str, String)]) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

/// Runs one command; `out` receives what goes to stdout.
fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { config } => {
            let findings = validate(&ExperimentConfig::load(&config)?);
            if findings.is_empty() {
                writeln!(out, "ok: no findings")?;
                return Ok(());
            }
            for f in &findings {
                writeln!(out, "{f}")?;
            }
            match findings.iter().map(|f| f.severity).max() {
                Some(Severity::Error) => Err(CliError::Config("configuration rejected".into())),
                Some(Severity::Unsupported) => Err(CliError::Unsupported("configuration not evaluable".into())),
                _ => Ok(()),
            }
        }
        Command::Run(args) => {
            let cfg = load(&args.config, &args.overrides())?;
            gate(&validate(&cfg))?;
            let outcome = run(&cfg, Some(&args.config))?;
            eprintln!(
                "wrote {} rows to {} in {:.1} s",
                outcome.rows.len(),
                cfg.output_path.display(),
                outcome.wall_time_s
            );
            let coarse = outcome.coarse_points();
            if let Some((db, delta)) = coarse.first() {
                return Err(CliError::NonConvergence(format!(
                    "DP grid refinement moved the throughput by {delta:e} at {db} dB ({} points affected); \
                     raise dp_grid",
                    coarse.len()
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse(), &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("harq-csi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
