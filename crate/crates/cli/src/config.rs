//! Run configuration: an optional JSON file merged with command-line flags,
//! flags taking precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use moran_core::sim::{SimConfig, DEFAULT_ROUND_CAP};
use moran_core::PayoffMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Inclusive grid `lo, lo + step, ...` up to `hi`, written `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl MuGrid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|k| self.lo + k as f64 * self.step).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            bail!("mu grid step must be > 0, got {}", self.step);
        }
        if !(0.0 <= self.lo && self.lo <= self.hi && self.hi <= 1.0) {
            bail!("mu grid needs 0 <= lo <= hi <= 1, got {}:{}", self.lo, self.hi);
        }
        Ok(())
    }
}

impl FromStr for MuGrid {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(':')
            .map(|t| t.trim().parse::<f64>().with_context(|| format!("mu grid entry {t:?}")))
            .collect::<Result<Vec<_>>>()?;
        let &[lo, hi, step] = parts.as_slice() else {
            bail!("mu grid is lo:hi:step, got {s:?}");
        };
        let g = MuGrid { lo, hi, step };
        g.validate()?;
        Ok(g)
    }
}

impl fmt::Display for MuGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}

/// In a config file the grid may be the string form or an object.
#[derive(Deserialize)]
#[serde(untagged)]
enum GridSpec {
    Text(String),
    Fields(MuGrid),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MethodSpec {
    One(String),
    Many(Vec<String>),
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSim {
    rounds: Option<u64>,
    burn_in: Option<u64>,
    realizations: Option<usize>,
    seed: Option<u64>,
    start: Option<usize>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    payoff: Option<PayoffMatrix>,
    #[serde(rename = "N")]
    n: Option<usize>,
    mu: Option<f64>,
    mu_grid: Option<GridSpec>,
    #[serde(default)]
    sim: FileSim,
    method: Option<MethodSpec>,
    format: Option<Format>,
    out: Option<PathBuf>,
    cap: Option<u64>,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Payoff matrix as `a,b,c,d`.
    #[arg(long, value_name = "A,B,C,D", allow_hyphen_values = true)]
    pub payoff: Option<PayoffMatrix>,
    /// Population size.
    #[arg(long = "N", value_name = "N")]
    pub n: Option<usize>,
    /// Mutation probability.
    #[arg(long, conflicts_with = "mu_grid")]
    pub mu: Option<f64>,
    /// Mutation grid `lo:hi:step`.
    #[arg(long, value_name = "LO:HI:STEP")]
    pub mu_grid: Option<MuGrid>,
    /// Recorded rounds per realization
    #[arg(long)]
    pub rounds: Option<u64>,
    /// Rounds discarded before recording
    #[arg(long)]
    pub burn_in: Option<u64>,
    /// Independent realizations (one RNG stream each)
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Base seed; a default is used and logged when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial state of each simulated realization.
    #[arg(long)]
    pub start: Option<usize>,
    /// Comma-separated method list.
    #[arg(long, value_delimiter = ',')]
    pub method: Option<Vec<String>>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Round cap per first-passage realization.
    #[arg(long)]
    pub cap: Option<u64>,
}

/// Fully resolved settings, echoed into every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub payoff: PayoffMatrix,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_grid: Option<MuGrid>,
    pub sim: SimConfig,
    pub method: Vec<String>,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub cap: u64,
    /// No seed was given; randomized runs log the default they used.
    #[serde(skip)]
    pub seed_defaulted: bool,
}

/// What a subcommand needs on top of the common flags.
pub struct Defaults {
    pub methods: &'static [&'static str],
    pub format: Format,
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs, defaults: &Defaults) -> Result<Self> {
        let file = match &args.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let payoff = args.payoff.or(file.payoff).context("missing --payoff")?;
        let n = args.n.or(file.n);
        if let Some(n) = n.filter(|&n| n < 2) {
            bail!("N must be at least 2, got {n}");
        }

        // a flag for one of mu / mu_grid replaces either one from the file
        let file_grid = match file.mu_grid {
            Some(GridSpec::Text(s)) => Some(s.parse::<MuGrid>()?),
            Some(GridSpec::Fields(g)) => {
                g.validate()?;
                Some(g)
            }
            None => None,
        };
        let (mu, mu_grid) = match (args.mu, args.mu_grid) {
            (Some(mu), _) => (Some(mu), None),
            (None, Some(g)) => (None, Some(g)),
            (None, None) => (file.mu, file_grid),
        };
        if mu.is_some() && mu_grid.is_some() {
            bail!("give exactly one of mu and mu_grid");
        }

        let base = SimConfig::default();
        let given_seed = args.seed.or(file.sim.seed);
        let seed = given_seed.unwrap_or(base.seed);
        let sim = SimConfig {
            rounds: args.rounds.or(file.sim.rounds).unwrap_or(base.rounds),
            burn_in: args.burn_in.or(file.sim.burn_in).unwrap_or(base.burn_in),
            realizations: args.realizations.or(file.sim.realizations).unwrap_or(base.realizations),
            seed,
            start: args.start.or(file.sim.start),
        };
        sim.validate()?;

        let method = match (&args.method, file.method) {
            (Some(m), _) => m.clone(),
            (None, Some(MethodSpec::One(m))) => m.split(',').map(str::to_string).collect(),
            (None, Some(MethodSpec::Many(m))) => m,
            (None, None) => defaults.methods.iter().map(|s| s.to_string()).collect(),
        };
        let method = method.into_iter().map(|m| m.trim().to_ascii_lowercase()).collect();

        Ok(Self {
            payoff,
            n,
            mu,
            mu_grid,
            sim,
            method,
            format: args.format.or(file.format).unwrap_or(defaults.format),
            out: args.out.clone().or(file.out),
            cap: args.cap.or(file.cap).unwrap_or(DEFAULT_ROUND_CAP),
            seed_defaulted: given_seed.is_none(),
        })
    }

    /// Note for randomized runs that fell back to the default seed.
    pub fn seed_note(&self) -> Option<String> {
        self.seed_defaulted.then(|| format!("no --seed given, using {}", self.sim.seed))
    }

    pub fn n(&self) -> Result<usize> {
        self.n.context("missing --N")
    }

    pub fn single_mu(&self) -> Result<f64> {
        self.mu.context("this subcommand needs --mu")
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        Ok(self.mu_grid.context("this subcommand needs --mu-grid")?.points())
    }

    /// The single `mu` as a one-point grid, or the grid itself.
    pub fn mus(&self) -> Result<Vec<f64>> {
        match (self.mu, self.mu_grid) {
            (Some(mu), None) => Ok(vec![mu]),
            (None, Some(g)) => Ok(g.points()),
            _ => bail!("give --mu or --mu-grid"),
        }
    }
}
