//! Experiment manifests: a flat `key = value` file plus command-line overrides.
//!
//! Blank lines and lines starting with `#` are skipped. Recognized keys:
//!
//! | key | value |
//! |-----|-------|
//! | `case` | one of [`Case`] |
//! | `kind` | `ALO`, `RTD` or `INR` |
//! | `M`, `F` | positive integer or `inf` |
//! | `snr_grid` | `start:stop:step` or a comma list, in dB |
//! | `seed` | `u64` |
//! | `mc` | Monte Carlo renewals per point, `0` for analytic only |
//! | `out` | CSV path |
//! | `restarts` | random optimizer starts per point |
//! | `equal_power` | `true`/`false`, classical HARQ only |
//! | `dp_grid` | state and fading levels of the DP |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use harq_csi::protocol::ProtocolKind;

use crate::error::CliError;

/// Experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    ErgodicNoCsi,
    ErgodicPartial,
    ErgodicFull,
    OutageNoCsi,
    OutagePartial,
    OutageFull,
    HarqClassical,
    HarqNew,
    DpFullCsi,
}

impl Case {
    pub const ALL: [Case; 9] = [
        Case::ErgodicNoCsi,
        Case::ErgodicPartial,
        Case::ErgodicFull,
        Case::OutageNoCsi,
        Case::OutagePartial,
        Case::OutageFull,
        Case::HarqClassical,
        Case::HarqNew,
        Case::DpFullCsi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Case::ErgodicNoCsi => "ergodic-no-csi",
            Case::ErgodicPartial => "ergodic-partial",
            Case::ErgodicFull => "ergodic-full",
            Case::OutageNoCsi => "outage-no-csi",
            Case::OutagePartial => "outage-partial",
            Case::OutageFull => "outage-full",
            Case::HarqClassical => "harq-classical",
            Case::HarqNew => "harq-new",
            Case::DpFullCsi => "dp-full-csi",
        }
    }

    pub fn is_ergodic(self) -> bool {
        matches!(self, Case::ErgodicNoCsi | Case::ErgodicPartial | Case::ErgodicFull)
    }

    pub fn is_outage(self) -> bool {
        matches!(self, Case::OutageNoCsi | Case::OutagePartial | Case::OutageFull)
    }

    /// Cases whose throughput depends on the combining receiver.
    pub fn needs_kind(self) -> bool {
        matches!(self, Case::HarqClassical | Case::HarqNew | Case::DpFullCsi)
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Case {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Case::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<_> = Case::ALL.iter().map(|c| c.name()).collect();
            CliError::Config(format!("unknown case {s:?} (expected one of {})", names.join(", ")))
        })
    }
}

/// Number of rounds or quantizer levels; `inf` stands for the limiting column
/// or row (ergodic capacity, full CSI).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Finite(n) => write!(f, "{n}"),
            Dim::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Dim {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Dim::Infinite);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Dim::Finite(n)),
            _ => Err(CliError::Config(format!("expected a positive integer or inf, got {s:?}"))),
        }
    }
}

/// Everything one run needs. `None` fields take the per-case default.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub case: Case,
    pub kind: Option<ProtocolKind>,
    pub max_rounds: Option<Dim>,
    pub levels: Option<Dim>,
    pub snr_db_grid: Vec<f64>,
    pub seed: u64,
    pub mc_renewals: u64,
    pub output_path: PathBuf,
    pub restarts: usize,
    pub equal_power: bool,
    pub dp_grid: usize,
}

pub const DEFAULT_OUTPUT: &str = "results.csv";
pub const DEFAULT_RESTARTS: usize = 4;
/// The finest grid: coarser ones tend to fail the refinement check at low SNR.
pub const DEFAULT_DP_GRID: usize = harq_csi::protocol::dp::MAX_GRID;

impl ExperimentConfig {
    pub fn new(case: Case) -> Self {
        ExperimentConfig {
            case,
            kind: None,
            max_rounds: None,
            levels: None,
            snr_db_grid: Vec::new(),
            seed: 0,
            mc_renewals: 0,
            output_path: PathBuf::from(DEFAULT_OUTPUT),
            restarts: DEFAULT_RESTARTS,
            equal_power: false,
            dp_grid: DEFAULT_DP_GRID,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got {line:?}", i + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let case = pairs
            .iter()
            .find(|(k, _)| k == "case")
            .ok_or_else(|| CliError::Config("missing required key `case`".into()))?
            .1
            .parse()?;
        let mut cfg = ExperimentConfig::new(case);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Assigns one key; used by both the file parser and the overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |what: &str| CliError::Config(format!("{key}: expected {what}, got {value:?}"));
        match key {
            "case" => self.case = value.parse()?,
            "kind" => self.kind = Some(value.parse().map_err(|e: harq_csi::Error| CliError::Config(e.to_string()))?),
            "M" | "m" => self.max_rounds = Some(value.parse()?),
            "F" | "f" => self.levels = Some(value.parse()?),
            "snr_grid" | "snr_db_grid" => self.snr_db_grid = parse_grid(value)?,
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "mc" | "mc_renewals" => self.mc_renewals = value.parse().map_err(|_| bad("a renewal count"))?,
            "out" | "output_path" => self.output_path = PathBuf::from(value),
            "restarts" => self.restarts = value.parse().map_err(|_| bad("a count"))?,
            "equal_power" => self.equal_power = value.parse().map_err(|_| bad("true or false"))?,
            "dp_grid" => self.dp_grid = value.parse().map_err(|_| bad("a level count"))?,
            other => return Err(CliError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Canonical `key = value` lines, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let opt = |d: Option<Dim>| d.map_or_else(|| "default".to_string(), |d| d.to_string());
        let grid: Vec<String> = self.snr_db_grid.iter().map(|v| v.to_string()).collect();
        vec![
            ("case", self.case.to_string()),
            ("kind", self.kind.map_or_else(|| "none".to_string(), |k| k.to_string())),
            ("M", opt(self.max_rounds)),
            ("F", opt(self.levels)),
            ("snr_grid", grid.join(",")),
            ("seed", self.seed.to_string()),
            ("mc", self.mc_renewals.to_string()),
            ("out", self.output_path.display().to_string()),
            ("restarts", self.restarts.to_string()),
            ("equal_power", self.equal_power.to_string()),
            ("dp_grid", self.dp_grid.to_string()),
        ]
    }

    /// Rounds after defaults: one for outage, two for HARQ, `inf` for ergodic.
    pub fn rounds(&self) -> Dim {
        self.max_rounds.unwrap_or(if self.case.is_ergodic() {
            Dim::Infinite
        } else if self.case.is_outage() {
            Dim::Finite(1)
        } else {
            Dim::Finite(2)
        })
    }

    /// Quantizer levels after defaults.
    pub fn quantizer_levels(&self) -> Dim {
        self.levels.unwrap_or(match self.case {
            Case::ErgodicNoCsi | Case::OutageNoCsi => Dim::Finite(1),
            Case::ErgodicFull | Case::OutageFull | Case::DpFullCsi => Dim::Infinite,
            _ => Dim::Finite(2),
        })
    }
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("snr_grid: expected start:stop:step or a comma list, got {s:?}"));
    let num = |t: &str| t.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let grid = if s.contains(':') {
        let parts: Vec<f64> = s.split(':').map(num).collect::<Option<_>>().ok_or_else(bad)?;
        let [a, b, step] = parts[..] else { return Err(bad()) };
        if step <= 0.0 || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize + 1;
        // Round away the drift of repeated addition so labels stay clean.
        (0..n).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect()
    } else {
        s.split(',').map(num).collect::<Option<Vec<_>>>().ok_or_else(bad)?
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}
