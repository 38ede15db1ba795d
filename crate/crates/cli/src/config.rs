use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use racah::{CouplingTree, ModeParams};
use thiserror::Error;

/// Default tolerance when neither `--tol` nor the environment sets one.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse '{0}' as a rational (expected p/q or a decimal)")]
    Rational(String),
    #[error("{0}")]
    Invalid(String),
}

/// A rational read exactly from `p/q` or a decimal string and converted to `f64` once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rational(pub Ratio<i64>);

impl Rational {
    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl FromStr for Rational {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || ConfigError::Rational(s.to_string());
        if t.contains('/') {
            return Ratio::<i64>::from_str(t).map(Rational).map_err(|_| err());
        }
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int}{frac}");
        let numer: i64 = digits.parse().map_err(|_| err())?;
        let denom = 10i64.checked_pow(frac.len() as u32).ok_or_else(err)?;
        let r = Ratio::new(numer, denom);
        Ok(Rational(if neg { -r } else { r }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Dot,
}

#[derive(Debug, Parser)]
#[command(name = "racah", version, about = "Oscillator Racah algebra: relation checks, spectra, recoupling coefficients")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Number of modes (defaults to the length of --a).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Fock level L.
    #[arg(long, global = true, default_value_t = 2)]
    pub level: usize,
    /// Comma-separated central charges (p/q or decimal); default: first n odd primes.
    #[arg(long, global = true, value_delimiter = ',')]
    pub a: Option<Vec<Rational>>,
    /// Comma-separated shifts; default all ones.
    #[arg(long, global = true, value_delimiter = ',')]
    pub beta: Option<Vec<Rational>>,
    #[arg(long, global = true)]
    pub tree: Option<String>,
    #[arg(long, global = true)]
    pub tree2: Option<String>,
    /// Sector index, ordered by decreasing Q_[n] eigenvalue.
    #[arg(long, global = true)]
    pub sector: Option<usize>,
    #[arg(long, global = true, env = "RACAH_TOL")]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (standard output if absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every relation and the Serre relations of the chain generators.
    Verify,
    /// List the canonical coupling trees on n leaves.
    Trees,
    /// Export the recoupling graph.
    Graph,
    /// Sector decomposition, and the joint spectrum of a tree's labels.
    Spectrum,
    /// Overlap matrix between the bases of --tree and --tree2.
    Overlap,
    /// Krawtchouk polynomial values, or a table over k and x.
    Krawtchouk {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        x: Option<usize>,
        #[arg(long)]
        p: Rational,
        #[arg(long = "N")]
        big_n: usize,
    },
    /// Rotation matrix between the sl(n-1) copies of --tree and --tree2.
    Rotation,
    /// 9j coefficients for n = 4 and their closed-form composition.
    Ninej,
}

/// Validated common options.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub level: usize,
    pub a: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub tree: Option<String>,
    pub tree2: Option<String>,
    pub sector: Option<usize>,
    pub tol: f64,
    pub format: Format,
}

fn odd_primes(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 3u64;
    while out.len() < n {
        if (3..).step_by(2).take_while(|d| d * d <= c).all(|d| !c.is_multiple_of(d)) {
            out.push(c as f64);
        }
        c += 2;
    }
    out
}

impl RunConfig {
    pub fn from_common(c: &Common) -> Result<Self, ConfigError> {
        let tol = c.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(ConfigError::Invalid(format!("tolerance must be positive, got {tol}")));
        }
        let a = c.a.as_ref().map(|v| v.iter().map(|r| r.to_f64()).collect::<Vec<_>>());
        let beta = c.beta.as_ref().map(|v| v.iter().map(|r| r.to_f64()).collect::<Vec<_>>());
        let n = c.n.or(a.as_ref().map(Vec::len)).or(beta.as_ref().map(Vec::len));
        if let Some(n) = n {
            for (name, v) in [("a", &a), ("beta", &beta)] {
                if let Some(v) = v {
                    if v.len() != n {
                        return Err(ConfigError::Invalid(format!("--{name} has {} entries but n = {n}", v.len())));
                    }
                    if v.iter().any(|x| *x <= 0.0) {
                        return Err(ConfigError::Invalid(format!("--{name} entries must be positive")));
                    }
                }
            }
        }
        Ok(RunConfig {
            n,
            level: c.level,
            a,
            beta,
            tree: c.tree.clone(),
            tree2: c.tree2.clone(),
            sector: c.sector,
            tol,
            format: c.format,
        })
    }

    pub fn require_n(&self) -> Result<usize, ConfigError> {
        self.n.ok_or_else(|| ConfigError::Invalid("--n (or --a) is required".into()))
    }

    pub fn params(&self) -> Result<ModeParams, ConfigError> {
        let n = self.require_n()?;
        let a = self.a.clone().unwrap_or_else(|| odd_primes(n));
        let beta = self.beta.clone().unwrap_or_else(|| vec![1.0; n]);
        ModeParams::new(a, beta, self.level).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn parse_tree(&self, s: Option<&String>, flag: &str) -> Result<CouplingTree, ConfigError> {
        let n = self.require_n()?;
        let s = s.ok_or_else(|| ConfigError::Invalid(format!("--{flag} is required")))?;
        CouplingTree::parse(s, n).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}
