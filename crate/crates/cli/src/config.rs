//! Job configuration: command-line flags over a TOML file over built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use halfsign_core::arith::is_prime_u64;
use halfsign_core::hecke::Embedding;
use serde::Deserialize;

pub const DEFAULT_ELL: u32 = 4;
pub const DEFAULT_PRECISION: usize = 100_001;
pub const DEFAULT_X: [u64; 3] = [1_000, 10_000, 100_000];
pub const DEFAULT_ETA: f64 = 0.85;
pub const DEFAULT_BUNDLE: u32 = 3;
pub const DEFAULT_ALPHA: f64 = 1.0 / 6.0;
pub const DEFAULT_PRIMES: [u64; 3] = [3, 5, 7];
pub const DEFAULT_OUT_DIR: &str = "halfsign-out";
pub const DEFAULT_UKS_BOUND: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingChoice {
    Largest,
    Smallest,
}

impl From<EmbeddingChoice> for Embedding {
    fn from(e: EmbeddingChoice) -> Self {
        match e {
            EmbeddingChoice::Largest => Embedding::Largest,
            EmbeddingChoice::Smallest => Embedding::Smallest,
        }
    }
}

/// Flags shared by every command. Unset flags fall back to the config file, then to the
/// defaults shown here.
#[derive(Args, Clone, Debug, Default)]
pub struct JobFlags {
    /// Weight parameter ℓ of S_{ℓ+1/2}(Γ₀(4)), at least 4 [default: 4]
    #[arg(long)]
    pub ell: Option<u32>,
    /// Number of q-expansion coefficients ĥ(0..N−1) [default: 100001]
    #[arg(long)]
    pub precision: Option<usize>,
    /// Comma-separated thresholds x, scientific notation allowed [default: 1e3,1e4,1e5]
    #[arg(long, value_parser = parse_list)]
    pub x: Option<CountList>,
    /// Short-interval exponent η, h = x^η [default: 0.85]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Bundle size A of the short-interval sums [default: 3]
    #[arg(long = "A", alias = "bundle")]
    pub bundle: Option<u32>,
    /// Exponent α with λ(t) ≪ t^α on squarefree t [default: 1/6]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated Hecke primes p for T_{p²} [default: 3,5,7]
    #[arg(long, value_parser = parse_list)]
    pub primes: Option<CountList>,
    /// Report directory [default: halfsign-out]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Cache directory [default: <out-dir>/cache]
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Real embedding of irrational coefficient fields [default: largest]
    #[arg(long, value_enum)]
    pub embedding: Option<EmbeddingChoice>,
    /// Largest index tn² for the square-multiple check in `verify` [default: 10000]
    #[arg(long)]
    pub uks_bound: Option<u64>,
}

/// Same fields as [`JobFlags`], read from TOML.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub ell: Option<u32>,
    pub precision: Option<usize>,
    pub x: Option<Vec<f64>>,
    pub eta: Option<f64>,
    #[serde(alias = "A")]
    pub bundle: Option<u32>,
    pub alpha: Option<f64>,
    pub primes: Option<Vec<u64>>,
    pub out_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub embedding: Option<EmbeddingChoice>,
    pub uks_bound: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobConfig {
    pub ell: u32,
    pub precision: usize,
    pub x: Vec<u64>,
    pub eta: f64,
    pub bundle: u32,
    pub alpha: f64,
    pub primes: Vec<u64>,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub embedding: EmbeddingChoice,
    pub uks_bound: u64,
}

/// Comma-separated counts; an empty string is the empty list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountList(pub Vec<u64>);

pub fn parse_list(s: &str) -> Result<CountList, String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(parse_count).collect::<Result<_, _>>().map(CountList)
}

/// Parse a non-negative integer, accepting forms such as `1e5`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.trim().parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if f < 0.0 || f.fract() != 0.0 || f > u64::MAX as f64 {
        return Err(format!("not a non-negative integer: {s:?}"));
    }
    Ok(f as u64)
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

impl JobConfig {
    pub fn resolve(flags: &JobFlags, file: &FileConfig) -> Result<Self> {
        let x = match (&flags.x, &file.x) {
            (Some(v), _) => v.0.clone(),
            (None, Some(v)) => v
                .iter()
                .map(|f| parse_count(&f.to_string()).map_err(anyhow::Error::msg))
                .collect::<Result<_>>()?,
            (None, None) => DEFAULT_X.to_vec(),
        };
        let out_dir = flags.out_dir.clone().or(file.out_dir.clone()).unwrap_or_else(|| DEFAULT_OUT_DIR.into());
        let cache_dir = flags.cache_dir.clone().or(file.cache_dir.clone()).unwrap_or_else(|| out_dir.join("cache"));
        let cfg = JobConfig {
            ell: flags.ell.or(file.ell).unwrap_or(DEFAULT_ELL),
            precision: flags.precision.or(file.precision).unwrap_or(DEFAULT_PRECISION),
            x,
            eta: flags.eta.or(file.eta).unwrap_or(DEFAULT_ETA),
            bundle: flags.bundle.or(file.bundle).unwrap_or(DEFAULT_BUNDLE),
            alpha: flags.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA),
            primes: flags.primes.clone().map(|p| p.0).or(file.primes.clone()).unwrap_or_else(|| DEFAULT_PRIMES.to_vec()),
            out_dir,
            cache_dir,
            embedding: flags.embedding.or(file.embedding).unwrap_or(EmbeddingChoice::Largest),
            uks_bound: flags.uks_bound.or(file.uks_bound).unwrap_or(DEFAULT_UKS_BOUND),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell < 4 {
            bail!("ℓ = {} rejected: the construction requires ℓ ≥ 4 (S_{{ℓ+1/2}}(Γ₀(4)) has no cusp forms below)", self.ell);
        }
        let xmax = self.x.iter().copied().max().unwrap_or(0);
        if (self.precision as u64) <= xmax {
            bail!("precision N = {} must exceed max(x) = {xmax}", self.precision);
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            bail!("η = {} must lie in (0, 1)", self.eta);
        }
        if !(self.alpha >= 0.0 && self.alpha < 0.25) {
            bail!("α = {} must lie in [0, 1/4)", self.alpha);
        }
        if self.bundle == 0 {
            bail!("bundle size A must be at least 1");
        }
        if self.primes.is_empty() {
            bail!("empty prime set: at least one Hecke prime is required");
        }
        if let Some(p) = self.primes.iter().find(|&&p| !is_prime_u64(p)) {
            bail!("{p} in the prime set is not prime");
        }
        Ok(())
    }

    pub fn basis_cache(&self) -> PathBuf {
        self.cache_dir.join(format!("basis_l{}.json", self.ell))
    }

    pub fn eigenform_cache(&self) -> PathBuf {
        self.cache_dir.join(format!("eigenforms_l{}.json", self.ell))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let file: FileConfig = toml::from_str("ell = 6\neta = 0.9\nx = [1e3, 2000]\nA = 2\nembedding = \"smallest\"").unwrap();
        let flags = JobFlags { eta: Some(0.7), ..Default::default() };
        let c = JobConfig::resolve(&flags, &file).unwrap();
        assert_eq!(c.ell, 6);
        assert_eq!(c.eta, 0.7);
        assert_eq!(c.x, vec![1000, 2000]);
        assert_eq!(c.bundle, 2);
        assert_eq!(c.embedding, EmbeddingChoice::Smallest);
        assert_eq!(c.precision, DEFAULT_PRECISION);
        assert_eq!(c.cache_dir, PathBuf::from(DEFAULT_OUT_DIR).join("cache"));
    }

    #[test]
    fn invalid_configurations() {
        let file = FileConfig::default();
        let bad = |f: JobFlags| JobConfig::resolve(&f, &file).unwrap_err().to_string();
        assert!(bad(JobFlags { ell: Some(3), ..Default::default() }).contains("ℓ ≥ 4"));
        assert!(bad(JobFlags { primes: Some(CountList(vec![])), ..Default::default() }).contains("empty prime set"));
        assert!(bad(JobFlags { primes: Some(CountList(vec![9])), ..Default::default() }).contains("not prime"));
        assert!(bad(JobFlags { alpha: Some(0.25), ..Default::default() }).contains("α"));
        assert!(bad(JobFlags { precision: Some(100), ..Default::default() }).contains("max(x)"));
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e5"), Ok(100_000));
        assert_eq!(parse_count("2500"), Ok(2500));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert_eq!(parse_list("1e3, 2000,"), Ok(CountList(vec![1000, 2000])));
        assert_eq!(parse_list(""), Ok(CountList(vec![])));
    }
}
