//! Experiment configuration: TOML file, `--set` overrides, resolved defaults.
//!
//! Loading fills every default explicitly, so the serialized
//! [`ExperimentConfig`] doubles as the provenance echo and re-parses to an
//! identical value.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use skewspec_core::bounds::{SigmaOptions, SlackMode};
use skewspec_core::gaps::{DEFAULT_PROFILE_GRID, DEFAULT_T_POINTS};
use skewspec_core::PotentialSpec;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Eig,
    SpectrumScan,
    Sigma,
    GapProfile,
    GapBound,
    CertifyGap,
    Lyap,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Command::Eig => "eig",
            Command::SpectrumScan => "spectrum-scan",
            Command::Sigma => "sigma",
            Command::GapProfile => "gap-profile",
            Command::GapBound => "gap-bound",
            Command::CertifyGap => "certify-gap",
            Command::Lyap => "lyap",
        };
        f.write_str(name)
    }
}

/// Encoding of curve data (eigenvalues, profiles, Lyapunov curves). Bound
/// objects are always JSON.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Phase grid for σ bounds.
    pub nx: usize,
    pub ny: usize,
    pub slack_mode: SlackMode,
    /// Phase grid for distance profiles.
    pub phase_nx: usize,
    pub phase_ny: usize,
    /// Points of the t grid.
    pub nt: usize,
    /// Points of the energy grid.
    pub ne: usize,
    /// Cell grid for gap certificates.
    pub cert_nx: usize,
    pub cert_ny: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrids {
    nx: Option<usize>,
    ny: Option<usize>,
    slack_mode: Option<String>,
    phase_nx: Option<usize>,
    phase_ny: Option<usize>,
    nt: Option<usize>,
    ne: Option<usize>,
    cert_nx: Option<usize>,
    cert_ny: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigSection {
    /// Any of `left`, `center`, `right`.
    pub regions: Vec<String>,
    /// Eigenvectors on each side of the region's anchor index.
    pub neighbors: usize,
}

impl Default for EigSection {
    fn default() -> Self {
        Self {
            regions: vec!["left".into(), "center".into(), "right".into()],
            neighbors: 2,
        }
    }
}

/// Interval to certify: explicit `[lo, hi]`, or `"widest"` for the middle
/// third of the widest gap of the window at the configured phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntervalSpec {
    Explicit([f64; 2]),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapSection {
    pub interval: IntervalSpec,
    /// Spectrum scans list consecutive-eigenvalue gaps wider than this.
    pub scan_threshold: f64,
}

impl Default for GapSection {
    fn default() -> Self {
        Self {
            interval: IntervalSpec::Named("widest".into()),
            scan_threshold: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    pub lo: f64,
    pub hi: f64,
}

impl Default for EnergySection {
    fn default() -> Self {
        Self { lo: -4.0, hi: 4.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapSection {
    pub num_phases: usize,
}

impl Default for LyapSection {
    fn default() -> Self {
        Self { num_phases: 32 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<Command>,
    seed: Option<u64>,
    format: Option<Format>,
    threads: Option<usize>,
    sizes: Option<Vec<usize>>,
    #[serde(default)]
    potential: toml::Table,
    #[serde(default)]
    grids: RawGrids,
    #[serde(default)]
    eig: EigSection,
    #[serde(default)]
    gap: GapSection,
    #[serde(default)]
    energy: EnergySection,
    #[serde(default)]
    lyap: LyapSection,
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub format: Format,
    /// Worker threads (0 = one per core); capped by `SKEWSPEC_THREADS`.
    pub threads: usize,
    pub sizes: Vec<usize>,
    /// Canonical key-value form of the potential.
    pub potential: BTreeMap<String, String>,
    pub grids: Grids,
    pub eig: EigSection,
    pub gap: GapSection,
    pub energy: EnergySection,
    pub lyap: LyapSection,
}

impl ExperimentConfig {
    pub fn potential_spec(&self) -> CliResult<PotentialSpec> {
        PotentialSpec::from_kv(self.potential.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .map_err(|e| CliError::Config(format!("[potential]: {e}")))
    }

    pub fn sigma_options(&self) -> SigmaOptions {
        SigmaOptions {
            grid_nx: self.grids.nx,
            grid_ny: self.grids.ny,
            slack_mode: self.grids.slack_mode,
        }
    }

    /// TOML echo; parses back to `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Reads `path` (if any), applies `key=value` overrides and resolves.
pub fn load(path: Option<&Path>, sets: &[String], command: Command) -> CliResult<ExperimentConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
        None => String::new(),
    };
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    for s in sets {
        apply_override(&mut table, s)?;
    }
    resolve(table, command)
}

/// Parses an already-merged TOML document.
pub fn parse_str(text: &str, command: Command) -> CliResult<ExperimentConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    resolve(table, command)
}

/// `section.key=value`; the value is read as a TOML literal when it parses as
/// one and as a bare string otherwise.
fn apply_override(table: &mut toml::Table, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{assignment}`")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields one item");
    let mut cur = table;
    for k in parents {
        cur = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("--set {path}: `{k}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn resolve(table: toml::Table, command: Command) -> CliResult<ExperimentConfig> {
    let raw: RawConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    if let Some(c) = raw.command {
        if c != command {
            return Err(CliError::Config(format!(
                "config is for command `{c}` but `{command}` was requested"
            )));
        }
    }
    let potential = potential_from_table(&raw.potential)?;
    let spec = PotentialSpec::from_kv(potential.iter().map(|(k, v)| (k.as_str(), v.as_str())))
        .map_err(|e| CliError::Config(format!("[potential]: {e}")))?;
    let potential = spec.to_kv();

    let sizes = raw.sizes.unwrap_or_else(|| vec![200]);
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(CliError::Config(
            "`sizes` must be a nonempty list of positive N".into(),
        ));
    }
    let largest = *sizes.iter().max().expect("nonempty");
    let sigma = SigmaOptions::default_for(&spec.family, largest);
    let two_d = spec.family.phase_dims() == Some(2);
    let g = raw.grids;
    let grids = Grids {
        nx: g.nx.unwrap_or(sigma.grid_nx),
        ny: g.ny.unwrap_or(sigma.grid_ny),
        slack_mode: match g.slack_mode {
            Some(s) => SlackMode::from_str(&s).map_err(|e| CliError::Config(e.to_string()))?,
            None => sigma.slack_mode,
        },
        phase_nx: g.phase_nx.unwrap_or(DEFAULT_PROFILE_GRID),
        phase_ny: g.phase_ny.unwrap_or(DEFAULT_PROFILE_GRID),
        nt: g.nt.unwrap_or(DEFAULT_T_POINTS),
        ne: g.ne.unwrap_or(161),
        cert_nx: g.cert_nx.unwrap_or(if two_d { 128 } else { 4096 }),
        cert_ny: g.cert_ny.unwrap_or(if two_d { 1024 } else { 1 }),
    };
    for (name, v) in [
        ("nx", grids.nx),
        ("ny", grids.ny),
        ("phase_nx", grids.phase_nx),
        ("phase_ny", grids.phase_ny),
        ("cert_nx", grids.cert_nx),
        ("cert_ny", grids.cert_ny),
    ] {
        if v == 0 {
            return Err(CliError::Config(format!("grids.{name} must be positive")));
        }
    }
    if grids.nt < 2 || grids.ne < 2 {
        return Err(CliError::Config(
            "grids.nt and grids.ne must be at least 2".into(),
        ));
    }
    for r in &raw.eig.regions {
        if !["left", "center", "right"].contains(&r.as_str()) {
            return Err(CliError::Config(format!(
                "unknown eig region `{r}` (expected left, center or right)"
            )));
        }
    }
    match &raw.gap.interval {
        IntervalSpec::Named(n) if n != "widest" => {
            return Err(CliError::Config(format!(
                "gap.interval must be [lo, hi] or \"widest\", got `{n}`"
            )))
        }
        IntervalSpec::Explicit([lo, hi]) if hi.partial_cmp(lo) != Some(Ordering::Greater) => {
            return Err(CliError::Config(format!(
                "gap.interval [{lo}, {hi}] is empty"
            )))
        }
        _ => {}
    }
    if raw.energy.hi.partial_cmp(&raw.energy.lo) != Some(Ordering::Greater) {
        return Err(CliError::Config("energy.hi must exceed energy.lo".into()));
    }
    if raw.lyap.num_phases == 0 {
        return Err(CliError::Config("lyap.num_phases must be positive".into()));
    }
    Ok(ExperimentConfig {
        command,
        seed: raw.seed.unwrap_or(0),
        format: raw.format.unwrap_or_default(),
        threads: raw.threads.unwrap_or(0),
        sizes,
        potential,
        grids,
        eig: raw.eig,
        gap: raw.gap,
        energy: raw.energy,
        lyap: raw.lyap,
    })
}

/// Accepts strings, numbers and booleans; everything becomes the string
/// form `PotentialSpec::from_kv` parses.
fn potential_from_table(t: &toml::Table) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    if !t.contains_key("family") {
        out.insert("family".to_string(), "skew-shift".to_string());
    }
    for (k, v) in t {
        let s = match v {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Array(items) => items
                .iter()
                .map(|i| match i {
                    toml::Value::Integer(i) => Ok(i.to_string()),
                    other => Err(CliError::Config(format!(
                        "potential.{k}: unexpected {other}"
                    ))),
                })
                .collect::<CliResult<Vec<_>>>()?
                .join(","),
            other => {
                return Err(CliError::Config(format!(
                    "potential.{k}: unsupported value {other}"
                )))
            }
        };
        out.insert(k.clone(), s);
    }
    Ok(out)
}
