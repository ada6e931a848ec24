use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use omle_core::omle::{beta_default, multistep_omle_run, omle_run, CandidateSet, RegretTrace, RunConfig};
use omle_core::TabularPomdp;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CandidateSource, ExperimentConfig, Learner};

/// Column order of every trace CSV.
pub const TRACE_HEADER: [&str; 7] = [
    "k",
    "candidate",
    "opt_value",
    "true_value",
    "cum_regret",
    "conf_size",
    "contains_truth",
];

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub beta: f64,
    pub final_regret: f64,
    /// Fraction of episodes whose confidence set held the environment.
    pub containment_rate: f64,
    pub always_contained: bool,
    pub truth_index: Option<usize>,
    pub final_candidate: usize,
    /// Whether the last planned policy is optimal for the environment.
    pub final_optimal: bool,
    /// Mean true value of the planned policies.
    pub mixture_value: f64,
    pub v_star: f64,
    pub env_margin: f64,
    /// Trajectories collected.
    pub samples: usize,
    pub conf_size_trace: Vec<usize>,
    pub wall_clock_ms: f64,
    pub trace_file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub final_regret_mean: f64,
    /// Sample standard deviation (0 for a single seed).
    pub final_regret_std: f64,
    /// Fraction of seeds whose confidence sets always held the environment.
    pub containment_frequency: f64,
    pub final_optimal_fraction: f64,
    pub mixture_value_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub learner: Learner,
    pub episodes: usize,
    pub window: usize,
    pub alpha: f64,
    pub seeds: Vec<SeedSummary>,
    pub aggregate: Aggregate,
}

struct Inputs {
    env_file: Option<TabularPomdp>,
    family: Option<Vec<TabularPomdp>>,
    listed: Vec<TabularPomdp>,
}

fn load_inputs(cfg: &ExperimentConfig) -> Result<Inputs> {
    let env_file = match &cfg.env.path {
        Some(p) => {
            let p = cfg.resolve(p);
            Some(TabularPomdp::load(&p).with_context(|| format!("loading env {}", p.display()))?)
        }
        None => None,
    };
    let family = match (&cfg.candidates, &cfg.env.generator) {
        (CandidateSource::LockFamily, Some(g)) => Some(g.family()?),
        _ => None,
    };
    let listed = match &cfg.candidates {
        CandidateSource::Paths { paths, .. } => paths
            .iter()
            .map(|p| {
                let p = cfg.resolve(p);
                TabularPomdp::load(&p).with_context(|| format!("loading candidate {}", p.display()))
            })
            .collect::<Result<Vec<_>>>()?,
        _ => Vec::new(),
    };
    Ok(Inputs {
        env_file,
        family,
        listed,
    })
}

fn run_seed(cfg: &ExperimentConfig, inputs: &Inputs, seed: u64) -> Result<(RegretTrace, f64, f64)> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let env = match (&inputs.env_file, &cfg.env.generator) {
        (Some(m), _) => m.clone(),
        (None, Some(g)) => g.build(&mut rng)?,
        (None, None) => unreachable!("validated"),
    };
    let models = match &cfg.candidates {
        CandidateSource::LockFamily => inputs.family.clone().expect("loaded"),
        CandidateSource::Paths { include_env, .. } => {
            let mut v = inputs.listed.clone();
            if *include_env && !v.contains(&env) {
                v.push(env.clone());
            }
            v
        }
        CandidateSource::Singleton => vec![env.clone()],
    };
    let cands = CandidateSet::new(models, cfg.alpha, cfg.window)?;
    let d = cands.dims();
    let beta = match (cfg.beta.value, cfg.beta.delta) {
        (Some(v), _) => v,
        (None, Some(delta)) => beta_default(
            d.states,
            d.actions,
            d.observations,
            d.horizon,
            cfg.episodes,
            delta,
            cfg.beta.c.unwrap_or(1.0),
            cfg.window,
        )?,
        (None, None) => unreachable!("validated"),
    };
    let run = RunConfig {
        episodes: cfg.episodes,
        beta,
        cap: cfg.cap()?,
    };
    let trace = match cfg.learner {
        Learner::Omle => omle_run(&env, &cands, run, &mut rng)?,
        Learner::MultistepOmle => multistep_omle_run(&env, &cands, run, &mut rng)?,
    };
    Ok((trace, beta, start.elapsed().as_secs_f64() * 1e3))
}

/// Trace as CSV text with [`TRACE_HEADER`].
pub fn trace_csv(trace: &RegretTrace) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.k.to_string(),
            r.candidate.to_string(),
            r.opt_value.to_string(),
            r.true_value.to_string(),
            r.cum_regret.to_string(),
            r.conf_size.to_string(),
            r.contains_truth.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)?)
}

fn seed_summary(seed: u64, trace: &RegretTrace, beta: f64, ms: f64, file: String) -> SeedSummary {
    let last = trace.records.last().expect("episodes >= 1");
    SeedSummary {
        seed,
        beta,
        final_regret: trace.cumulative_regret(),
        containment_rate: trace.containment_rate(),
        always_contained: trace.records.iter().all(|r| r.contains_truth),
        truth_index: trace.truth_index,
        final_candidate: last.candidate,
        final_optimal: last.true_value >= trace.v_star - 1e-12,
        mixture_value: trace.mixture_value(),
        v_star: trace.v_star,
        env_margin: trace.env_margin,
        samples: trace.total_samples(),
        conf_size_trace: trace.records.iter().map(|r| r.conf_size).collect(),
        wall_clock_ms: ms,
        trace_file: file,
    }
}

fn aggregate(seeds: &[SeedSummary]) -> Aggregate {
    let n = seeds.len() as f64;
    let mean = |f: &dyn Fn(&SeedSummary) -> f64| seeds.iter().map(f).sum::<f64>() / n;
    let regret_mean = mean(&|s| s.final_regret);
    let var = if seeds.len() > 1 {
        seeds.iter().map(|s| (s.final_regret - regret_mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Aggregate {
        final_regret_mean: regret_mean,
        final_regret_std: var.sqrt(),
        containment_frequency: mean(&|s| f64::from(u8::from(s.always_contained))),
        final_optimal_fraction: mean(&|s| f64::from(u8::from(s.final_optimal))),
        mixture_value_mean: mean(&|s| s.mixture_value),
    }
}

/// Output directory: the override, else `output_dir` from the config, else
/// `omle-out` next to the config.
pub fn output_dir(cfg: &ExperimentConfig, out_override: Option<&Path>) -> PathBuf {
    match (out_override, &cfg.output_dir) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => cfg.resolve(p),
        (None, None) => cfg.resolve(Path::new("omle-out")),
    }
}

/// Runs every seed (in parallel), writes `trace_seed<seed>.csv` per seed and
/// `summary.json`, and returns the summary.
pub fn cmd_learn(
    config: &Path,
    out_override: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<RunSummary> {
    let cfg = ExperimentConfig::load(config)?;
    let inputs = load_inputs(&cfg)?;
    let dir = output_dir(&cfg, out_override);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let results: Vec<Result<(RegretTrace, f64, f64)>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(&cfg, &inputs, seed).with_context(|| format!("seed {seed}")))
        .collect();
    let mut seeds = Vec::with_capacity(cfg.seeds.len());
    for (&seed, res) in cfg.seeds.iter().zip(results) {
        let (trace, beta, ms) = res?;
        if trace.env_margin < cfg.alpha {
            writeln!(
                err,
                "warning: seed {seed}: environment margin {} is below alpha = {}",
                trace.env_margin, cfg.alpha
            )?;
        }
        let name = format!("trace_seed{seed}.csv");
        let path = dir.join(&name);
        std::fs::write(&path, trace_csv(&trace)?).with_context(|| format!("writing {}", path.display()))?;
        seeds.push(seed_summary(seed, &trace, beta, ms, name));
    }
    let summary = RunSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        learner: cfg.learner,
        episodes: cfg.episodes,
        window: cfg.window,
        alpha: cfg.alpha,
        aggregate: aggregate(&seeds),
        seeds,
    };
    let path = dir.join("summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    let a = &summary.aggregate;
    writeln!(out, "seeds: {}", summary.seeds.len())?;
    writeln!(out, "final regret: mean {} std {}", a.final_regret_mean, a.final_regret_std)?;
    writeln!(out, "containment frequency: {}", a.containment_frequency)?;
    writeln!(out, "final policy optimal: {}", a.final_optimal_fraction)?;
    writeln!(out, "mixture value: {}", a.mixture_value_mean)?;
    writeln!(out, "output: {}", dir.display())?;
    Ok(summary)
}
