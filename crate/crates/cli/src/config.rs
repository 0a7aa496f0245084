//! The TOML run configuration and its resolution against defaults.
//!
//! Every key is optional. Resolution order is command-line flags, then the
//! file, then the defaults for the chosen environment and variant. The
//! resolved configuration is written back out with every key present, and
//! that canonical form parses to itself.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use isac_core::agent::Variant;
use isac_core::envs::EnvKind;
use isac_core::harness::RunConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "ISAC_LAB_OUT";
pub const DEFAULT_OUT_DIR: &str = "runs";

/// Seeds as either a count (`0..n`) or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Count(u64),
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Count(n) => (0..*n).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }
}

impl FromStr for SeedSpec {
    type Err = String;

    /// `5` means seeds 0..5, `3,8,9` is a list, `2..6` a half-open range.
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = |_| format!("invalid seed specification `{s}`");
        if let Some((a, b)) = s.split_once("..") {
            let (a, b): (u64, u64) = (
                a.trim().parse().map_err(bad)?,
                b.trim().parse().map_err(bad)?,
            );
            if a >= b {
                return Err(format!("empty seed range `{s}`"));
            }
            return Ok(SeedSpec::List((a..b).collect()));
        }
        if s.contains(',') {
            return s
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse().map_err(bad))
                .collect::<Result<Vec<_>, _>>()
                .map(SeedSpec::List);
        }
        s.trim().parse().map(SeedSpec::Count).map_err(bad)
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedSpec::Count(n) => write!(f, "{n}"),
            SeedSpec::List(v) => {
                let parts: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

/// One layer of configuration. Used both for the file and for flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub env: Option<EnvKind>,
    pub variant: Option<Variant>,
    pub label: Option<String>,
    pub seeds: Option<SeedSpec>,
    pub total_steps: Option<u64>,
    pub unit_steps: Option<u64>,
    pub zeta_th: Option<f64>,
    pub xi: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    pub hidden: Option<Vec<usize>>,
    pub gradient_steps: Option<usize>,
    pub capacity: Option<usize>,
    pub warmup: Option<usize>,
    pub beta1: Option<f64>,
    pub beta2_start: Option<f64>,
    pub beta2_end: Option<f64>,
    pub eta0: Option<f64>,
    pub eta1: Option<f64>,
    pub c_min: Option<usize>,
    pub eval_episodes: Option<usize>,
    pub n_f: Option<usize>,
    pub smoothing_window: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.message().trim())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::parse(&text)
            .map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))
    }

    /// `self` with every key that `over` sets replaced.
    pub fn overlay(&self, over: &FileConfig) -> FileConfig {
        macro_rules! pick {
            ($($f:ident),*) => {
                FileConfig { $($f: over.$f.clone().or_else(|| self.$f.clone()),)* }
            };
        }
        pick!(
            env,
            variant,
            label,
            seeds,
            total_steps,
            unit_steps,
            zeta_th,
            xi,
            batch_size,
            lr,
            gamma,
            tau,
            hidden,
            gradient_steps,
            capacity,
            warmup,
            beta1,
            beta2_start,
            beta2_end,
            eta0,
            eta1,
            c_min,
            eval_episodes,
            n_f,
            smoothing_window,
            out_dir
        )
    }

    /// Fills unset keys with defaults and validates the result.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let env = self.env.unwrap_or(EnvKind::Pendulum);
        let variant = self.variant.unwrap_or(Variant::Isac);
        let mut run = RunConfig::new(env, variant);
        run.label = self.label.clone();
        macro_rules! set {
            ($($src:ident => $($dst:ident).+),* $(,)?) => {
                $(if let Some(v) = &self.$src { run.$($dst).+ = v.clone(); })*
            };
        }
        set!(
            total_steps => total_steps,
            unit_steps => unit_steps,
            zeta_th => zeta_th,
            xi => xi,
            batch_size => sac.batch_size,
            lr => sac.lr,
            gamma => sac.gamma,
            tau => sac.soft_update_factor,
            hidden => sac.hidden,
            gradient_steps => sac.gradient_steps,
            capacity => capacity,
            warmup => warmup,
            beta1 => per.beta1,
            beta2_start => per.beta2_start,
            beta2_end => per.beta2_end,
            eta0 => ere.eta0,
            eta1 => ere.eta1,
            c_min => ere.c_min,
            eval_episodes => eval_episodes,
            n_f => n_f,
            smoothing_window => smoothing_window,
        );
        if let Some(s) = &self.seeds {
            run.seeds = s.seeds();
        }
        run.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let out_dir = self
            .out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        Ok(Resolved { run, out_dir })
    }
}

/// A fully specified run plus where its outputs go.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub run: RunConfig,
    pub out_dir: PathBuf,
}

impl Resolved {
    /// Every key, explicitly.
    pub fn canonical(&self) -> FileConfig {
        let r = &self.run;
        FileConfig {
            env: Some(r.env),
            variant: Some(r.variant),
            label: r.label.clone(),
            seeds: Some(SeedSpec::List(r.seeds.clone())),
            total_steps: Some(r.total_steps),
            unit_steps: Some(r.unit_steps),
            zeta_th: Some(r.zeta_th),
            xi: Some(r.xi),
            batch_size: Some(r.sac.batch_size),
            lr: Some(r.sac.lr),
            gamma: Some(r.sac.gamma),
            tau: Some(r.sac.soft_update_factor),
            hidden: Some(r.sac.hidden.clone()),
            gradient_steps: Some(r.sac.gradient_steps),
            capacity: Some(r.capacity),
            warmup: Some(r.warmup),
            beta1: Some(r.per.beta1),
            beta2_start: Some(r.per.beta2_start),
            beta2_end: Some(r.per.beta2_end),
            eta0: Some(r.ere.eta0),
            eta1: Some(r.ere.eta1),
            c_min: Some(r.ere.c_min),
            eval_episodes: Some(r.eval_episodes),
            n_f: Some(r.n_f),
            smoothing_window: Some(r.smoothing_window),
            out_dir: Some(self.out_dir.clone()),
        }
    }

    pub fn canonical_toml(&self) -> String {
        toml::to_string(&self.canonical()).expect("flat config always serializes")
    }
}
