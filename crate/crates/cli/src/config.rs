//! Command-line flags, the JSON config file, and their merge. Flags override
//! the file, which overrides the defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use cuspsteklov::assembly::Problem;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "cuspsteklov", version, about = "Steklov and p-Steklov eigenproblems on outward cuspidal domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a mesh and print its quality report.
    Mesh(Flags),
    /// Linear Steklov or Schrödinger–Steklov spectrum.
    Spectrum(Flags),
    /// Principal p-Steklov eigenpair by inverse iteration.
    Principal(Flags),
    /// Eigenvalues on a ladder of uniformly refined meshes.
    Convergence(Flags),
    /// Operator, matrix and min-max property suite.
    Check(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Mesh(_) => "mesh",
            Command::Spectrum(_) => "spectrum",
            Command::Principal(_) => "principal",
            Command::Convergence(_) => "convergence",
            Command::Check(_) => "check",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Mesh(f) | Command::Spectrum(f) | Command::Principal(f) | Command::Convergence(f) | Command::Check(f) => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProblemArg {
    Harmonic,
    Schrodinger,
}

impl From<ProblemArg> for Problem {
    fn from(p: ProblemArg) -> Problem {
        match p {
            ProblemArg::Harmonic => Problem::Harmonic,
            ProblemArg::Schrodinger => Problem::Schrodinger,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file with any of the settings below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cusp exponent α > 1 for γ(t) = t^α.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Tabulated cusp profile: JSON list of [t, γ(t)] knots, or {"samples": [...]}.
    #[arg(long)]
    pub gamma_file: Option<PathBuf>,
    /// Exponent p in [1.1, 6].
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// Number of eigenpairs.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of ladder levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Base mesh size.
    #[arg(long, allow_negative_numbers = true)]
    pub hmax: Option<f64>,
    /// Uniform refinements applied to the base mesh.
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long, value_enum)]
    pub problem: Option<ProblemArg>,
    /// Impose the orthogonality constraint ∫ w·u ds = 0.
    #[arg(long)]
    pub constrained: bool,
    /// Use the weight w = γ(x₂) on the boundary.
    #[arg(long, conflicts_with = "unweighted")]
    pub weighted: bool,
    /// Use the unit weight on the boundary.
    #[arg(long)]
    pub unweighted: bool,
    /// Replace the cuspidal domain by a disk centred at the origin.
    #[arg(long)]
    pub oracle_disk: bool,
    /// Disk radius for --oracle-disk.
    #[arg(long, allow_negative_numbers = true)]
    pub radius: Option<f64>,
    /// Starting function: const, random, or file:PATH (one value per vertex).
    #[arg(long)]
    pub w0: Option<String>,
    /// Outer stopping tolerance on the relative change of μ and of the normalized iterate.
    #[arg(long, allow_negative_numbers = true)]
    pub outer_tol: Option<f64>,
    /// Maximum number of outer inverse-iteration steps.
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// Seed for random start functions and property-suite samples.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (recorded; runs are single-threaded).
    #[arg(long, allow_negative_numbers = true)]
    pub threads: Option<i64>,
    /// Output directory (for `mesh`, a path ending in .txt names the mesh file).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of random function pairs in the property suite.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Fault injection: scale one boundary quadrature weight by 1.1 in B only.
    #[arg(long)]
    pub perturb_weight: bool,
    /// error, warn, info, debug or trace.
    #[arg(long)]
    pub log_level: Option<String>,
}

/// Settings accepted in the config file; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub gamma_file: Option<PathBuf>,
    pub p: Option<f64>,
    pub k: Option<usize>,
    pub levels: Option<usize>,
    pub hmax: Option<f64>,
    pub level: Option<usize>,
    pub problem: Option<ProblemArg>,
    pub constrained: Option<bool>,
    pub weighted: Option<bool>,
    pub oracle_disk: Option<bool>,
    pub radius: Option<f64>,
    pub w0: Option<String>,
    pub outer_tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<i64>,
    pub out: Option<PathBuf>,
    pub pairs: Option<usize>,
    pub perturb_weight: Option<bool>,
    pub log_level: Option<String>,
}

/// Fully resolved settings, recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub alpha: Option<f64>,
    pub gamma_file: Option<PathBuf>,
    pub p: f64,
    pub k: Option<usize>,
    pub levels: usize,
    pub hmax: f64,
    pub level: usize,
    pub problem: Problem,
    pub constrained: bool,
    /// None: command default (both modes for `convergence`, weighted elsewhere).
    pub weighted: Option<bool>,
    pub oracle_disk: bool,
    pub radius: f64,
    pub w0: String,
    pub outer_tol: Option<f64>,
    pub max_outer: usize,
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
    pub pairs: usize,
    pub perturb_weight: bool,
    pub log_level: String,
}

fn read_config(path: &PathBuf) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

impl Settings {
    pub fn resolve(flags: &Flags) -> CliResult<Settings> {
        let file = match &flags.config {
            Some(path) => read_config(path)?,
            None => FileConfig::default(),
        };
        let weighted = if flags.weighted {
            Some(true)
        } else if flags.unweighted {
            Some(false)
        } else {
            file.weighted
        };
        let threads = flags.threads.or(file.threads).unwrap_or(1);
        if threads < 1 {
            return Err(CliError::Usage(format!("--threads must be at least 1, got {threads}")));
        }
        let s = Settings {
            alpha: flags.alpha.or(file.alpha),
            gamma_file: flags.gamma_file.clone().or(file.gamma_file),
            p: flags.p.or(file.p).unwrap_or(2.0),
            k: flags.k.or(file.k),
            levels: flags.levels.or(file.levels).unwrap_or(4),
            hmax: flags.hmax.or(file.hmax).unwrap_or(0.2),
            level: flags.level.or(file.level).unwrap_or(0),
            problem: flags.problem.or(file.problem).unwrap_or(ProblemArg::Harmonic).into(),
            constrained: flags.constrained || file.constrained.unwrap_or(false),
            weighted,
            oracle_disk: flags.oracle_disk || file.oracle_disk.unwrap_or(false),
            radius: flags.radius.or(file.radius).unwrap_or(1.0),
            w0: flags.w0.clone().or(file.w0).unwrap_or_else(|| "const".into()),
            outer_tol: flags.outer_tol.or(file.outer_tol),
            max_outer: flags.max_outer.or(file.max_outer).unwrap_or(500),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            threads: threads as usize,
            out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            pairs: flags.pairs.or(file.pairs).unwrap_or(200),
            perturb_weight: flags.perturb_weight || file.perturb_weight.unwrap_or(false),
            log_level: flags.log_level.clone().or(file.log_level).unwrap_or_else(|| "warn".into()),
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> CliResult<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if let Some(a) = self.alpha {
            if !(a > 1.0 && a.is_finite()) {
                return usage(format!("--alpha must satisfy 1 < alpha < inf, got {a}"));
            }
        }
        let sources = [self.alpha.is_some(), self.gamma_file.is_some(), self.oracle_disk];
        if sources.iter().filter(|&&b| b).count() > 1 {
            return usage("--alpha, --gamma-file and --oracle-disk are mutually exclusive".into());
        }
        if !(1.1..=6.0).contains(&self.p) {
            return usage(format!("--p must lie in [1.1, 6], got {}", self.p));
        }
        if self.k == Some(0) {
            return usage("--k must be at least 1".into());
        }
        if !(self.hmax > 0.0 && self.hmax.is_finite()) {
            return usage(format!("--hmax must be positive, got {}", self.hmax));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return usage(format!("--radius must be positive, got {}", self.radius));
        }
        if self.oracle_disk && self.hmax >= self.radius {
            return usage(format!("--hmax must be below the disk radius {}", self.radius));
        }
        if let Some(t) = self.outer_tol {
            if t.is_nan() || t <= 0.0 {
                return usage(format!("--outer-tol must be positive, got {t}"));
            }
        }
        if self.max_outer == 0 {
            return usage("--max-outer must be at least 1".into());
        }
        if !(self.w0 == "const" || self.w0 == "random" || self.w0.starts_with("file:")) {
            return usage(format!("--w0 must be const, random or file:PATH, got {}", self.w0));
        }
        if self.level > 6 {
            return usage(format!("--level {} is too large (at most 6)", self.level));
        }
        if !["error", "warn", "info", "debug", "trace", "off"].contains(&self.log_level.as_str()) {
            return usage(format!("unknown --log-level {}", self.log_level));
        }
        Ok(())
    }
}
