//! Experiment configuration (TOML or JSON, chosen by file extension) and
//! instance generator specs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use omle_core::instances::{
    block_mdp, combinatorial_lock_over, combinatorial_lock_under, lock_family_over, lock_family_under,
    random_multistep_revealing, random_weakly_revealing,
};
use omle_core::pomdp::{EnumerationCap, TabularPomdp};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exit::UsageError;
use crate::CAP_ENV_VAR;

fn default_window() -> usize {
    1
}

fn default_tries() -> usize {
    1000
}

/// How to build an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Undercomplete lock; `good_actions` unset plants a random sequence.
    LockUnder {
        horizon: usize,
        actions: usize,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        good_actions: Option<Vec<usize>>,
    },
    /// Overcomplete lock of depth `m`.
    LockOver {
        m: usize,
        actions: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        good_actions: Option<Vec<usize>>,
    },
    /// Dirichlet model rejection-sampled on its `window`-step margin.
    Random {
        states: usize,
        actions: usize,
        observations: usize,
        horizon: usize,
        #[serde(default)]
        alpha_min: f64,
        #[serde(default = "default_tries")]
        max_tries: usize,
        #[serde(default = "default_window")]
        window: usize,
    },
    BlockMdp {
        states: usize,
        actions: usize,
        observations: usize,
        horizon: usize,
    },
}

impl GeneratorSpec {
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TabularPomdp> {
        Ok(match self {
            GeneratorSpec::LockUnder {
                horizon,
                actions,
                alpha,
                good_actions,
            } => combinatorial_lock_under(*horizon, *actions, *alpha, good_actions.as_deref(), rng)?,
            GeneratorSpec::LockOver { m, actions, good_actions } => {
                combinatorial_lock_over(*m, *actions, good_actions.as_deref(), rng)?
            }
            GeneratorSpec::Random {
                states,
                actions,
                observations,
                horizon,
                alpha_min,
                max_tries,
                window,
            } => {
                if *window == 1 {
                    random_weakly_revealing(*states, *actions, *observations, *horizon, *alpha_min, *max_tries, rng)?.0
                } else {
                    random_multistep_revealing(
                        *states,
                        *actions,
                        *observations,
                        *horizon,
                        *window,
                        *alpha_min,
                        *max_tries,
                        rng,
                    )?
                    .0
                }
            }
            GeneratorSpec::BlockMdp {
                states,
                actions,
                observations,
                horizon,
            } => block_mdp(*states, *actions, *observations, *horizon, rng)?,
        })
    }

    /// Sibling locks for lock generators.
    pub fn family(&self) -> Result<Vec<TabularPomdp>> {
        Ok(match self {
            GeneratorSpec::LockUnder {
                horizon, actions, alpha, ..
            } => lock_family_under(*horizon, *actions, *alpha)?,
            GeneratorSpec::LockOver { m, actions, .. } => lock_family_over(*m, *actions)?,
            _ => bail!(UsageError("the lock-family candidate source needs a lock generator".into())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    Omle,
    MultistepOmle,
}

/// Exactly one of `path` or `generator`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSource {
    pub path: Option<PathBuf>,
    pub generator: Option<GeneratorSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CandidateSource {
    /// All sibling locks of the environment's lock generator.
    LockFamily,
    /// Model files; the environment is appended when `include_env` is set
    /// and no listed model equals it.
    Paths {
        paths: Vec<PathBuf>,
        #[serde(default)]
        include_env: bool,
    },
    /// The environment alone.
    Singleton,
}

/// Either a fixed `value`, or `delta` (and optionally `c`, default 1) for
/// the default formula.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSpec {
    pub value: Option<f64>,
    pub c: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    /// Trajectory/history enumeration cap.
    pub enumeration: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub learner: Learner,
    pub episodes: usize,
    #[serde(default = "default_window")]
    pub window: usize,
    pub seeds: Vec<u64>,
    /// Revealing threshold of the confidence set.
    pub alpha: f64,
    pub env: EnvSource,
    pub candidates: CandidateSource,
    pub beta: BetaSpec,
    #[serde(default)]
    pub caps: Caps,
    /// Relative to the config file.
    pub output_dir: Option<PathBuf>,
    /// Directory relative paths resolve against; set by [`ExperimentConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ExperimentConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            Some("json") => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            _ => bail!(UsageError(format!(
                "config {} must end in .toml or .json",
                path.display()
            ))),
        };
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.env.path, &self.env.generator) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => bail!("config: env needs exactly one of `path` or `generator`"),
        }
        if self.seeds.is_empty() {
            bail!("config: `seeds` must not be empty");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            bail!("config: seed {} is listed twice", w[0]);
        }
        if self.episodes == 0 {
            bail!("config: `episodes` must be at least 1");
        }
        match (self.learner, self.window) {
            (Learner::Omle, 1) => {}
            (Learner::Omle, m) => bail!("config: learner `omle` needs window 1, got {m}"),
            (Learner::MultistepOmle, m) if m < 2 => bail!("config: learner `multistep_omle` needs window >= 2"),
            _ => {}
        }
        match (&self.beta.value, &self.beta.delta) {
            (Some(v), None) if self.beta.c.is_none() => {
                if v.is_nan() || *v < 0.0 {
                    bail!("config: beta.value must be nonnegative");
                }
            }
            (None, Some(_)) => {}
            _ => bail!("config: beta needs either `value` or `delta` (with optional `c`)"),
        }
        if matches!(self.candidates, CandidateSource::LockFamily)
            && !matches!(
                self.env.generator,
                Some(GeneratorSpec::LockUnder { .. } | GeneratorSpec::LockOver { .. })
            )
        {
            bail!("config: candidates.kind = \"lock-family\" needs a lock generator for env");
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn cap(&self) -> Result<EnumerationCap> {
        match self.caps.enumeration {
            Some(c) => Ok(EnumerationCap(c)),
            None => default_cap(),
        }
    }
}

/// Cap from the environment variable, or the library default.
pub fn default_cap() -> Result<EnumerationCap> {
    match std::env::var(CAP_ENV_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(EnumerationCap)
            .map_err(|_| UsageError(format!("{CAP_ENV_VAR}={v:?} is not an integer")).into()),
        Err(_) => Ok(EnumerationCap::default()),
    }
}
