use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::candidates::{CandidateSet, LikelihoodLedger, Sample};
use super::confidence::{confidence_set_update, optimistic_plan, PlanCache};
use crate::oom::decode_digits;
use crate::pomdp::{optimal_policy, policy_splice, policy_value, sample_trajectory, EnumerationCap, TabularPomdp};
use crate::{Error, Result};

/// Shared run parameters.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub episodes: usize,
    pub beta: f64,
    pub cap: EnumerationCap,
}

/// One (outer) episode of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRecord {
    /// 1-based.
    pub k: usize,
    pub candidate: usize,
    /// `V^{pi^k}(theta^k)`.
    pub opt_value: f64,
    /// `V^{pi^k}(theta*)`.
    pub true_value: f64,
    pub cum_regret: f64,
    pub conf_size: usize,
    pub contains_truth: bool,
    /// Trajectories collected so far, including this episode.
    pub samples: usize,
    /// Confidence set used to plan this episode.
    #[serde(skip)]
    pub members: Vec<usize>,
}

/// Per-episode trace of a learning run together with its dataset.
#[derive(Debug, Clone)]
pub struct RegretTrace {
    pub records: Vec<EpisodeRecord>,
    pub v_star: f64,
    pub beta: f64,
    pub window: usize,
    /// Index of the candidate identical to the environment, if any.
    pub truth_index: Option<usize>,
    /// Revealing margin of the environment under the run's window.
    pub env_margin: f64,
    /// `dataset[k - 1]` holds the samples collected in episode `k`.
    pub dataset: Vec<Vec<Sample>>,
}

impl RegretTrace {
    pub fn cumulative_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_regret)
    }

    /// Fraction of episodes whose confidence set held the environment.
    pub fn containment_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.contains_truth).count() as f64 / self.records.len() as f64
    }

    /// Value of the uniform mixture over the planned policies.
    pub fn mixture_value(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.true_value).sum::<f64>() / self.records.len() as f64
    }

    pub fn total_samples(&self) -> usize {
        self.records.last().map_or(0, |r| r.samples)
    }
}

fn check_env(env: &TabularPomdp, candidates: &CandidateSet) -> Result<()> {
    if env.dims() != candidates.dims() {
        return Err(Error::DimensionMismatch(format!(
            "environment dims {:?} differ from candidate dims {:?}",
            env.dims(),
            candidates.dims()
        )));
    }
    Ok(())
}

fn env_margin(env: &TabularPomdp, window: usize) -> Result<f64> {
    if window == 1 {
        crate::oom::weakly_revealing_margin(env)
    } else {
        crate::oom::multistep_revealing_margin(env, window)
    }
}

// Shared episode loop; `collect` executes the episode's policies on the
// environment and returns what was logged.
fn run_loop<R: Rng + ?Sized>(
    env: &TabularPomdp,
    candidates: &CandidateSet,
    config: RunConfig,
    rng: &mut R,
    mut collect: impl FnMut(&Arc<crate::pomdp::HistoryPolicy>, &mut R) -> Result<Vec<Sample>>,
) -> Result<RegretTrace> {
    check_env(env, candidates)?;
    let (_, v_star) = optimal_policy(env, config.cap)?;
    let truth_index = candidates.position_of(env);
    let mut ledger = LikelihoodLedger::new(candidates);
    let mut cache = PlanCache::new(candidates, config.cap);
    // the planned policy depends only on the chosen candidate
    let mut true_values: Vec<Option<f64>> = vec![None; candidates.len()];
    let mut records = Vec::with_capacity(config.episodes);
    let mut dataset = Vec::with_capacity(config.episodes);
    let mut cum_regret = 0.0;
    for k in 1..=config.episodes {
        let conf = confidence_set_update(candidates, &ledger, config.beta, k)?;
        let plan = optimistic_plan(candidates, &conf, &mut cache)?;
        let true_value = match true_values[plan.candidate] {
            Some(v) => v,
            None => {
                let v = policy_value(env, &plan.policy)?;
                true_values[plan.candidate] = Some(v);
                v
            }
        };
        let gap = v_star - true_value;
        cum_regret += if gap > -1e-12 { gap.max(0.0) } else { gap };
        let samples = collect(&plan.policy, rng)?;
        for s in &samples {
            ledger.record(candidates, s.clone());
        }
        records.push(EpisodeRecord {
            k,
            candidate: plan.candidate,
            opt_value: plan.value,
            true_value,
            cum_regret,
            conf_size: conf.len(),
            contains_truth: truth_index.is_some_and(|t| conf.contains(t)),
            samples: ledger.data().len(),
            members: conf.members,
        });
        dataset.push(samples);
    }
    Ok(RegretTrace {
        records,
        v_star,
        beta: config.beta,
        window: candidates.window(),
        truth_index,
        env_margin: env_margin(env, candidates.window())?,
        dataset,
    })
}

/// Single-step learner: one trajectory of the optimistic policy per episode.
pub fn omle_run<R: Rng + ?Sized>(
    env: &TabularPomdp,
    candidates: &CandidateSet,
    config: RunConfig,
    rng: &mut R,
) -> Result<RegretTrace> {
    if candidates.window() != 1 {
        return Err(Error::InvalidParameter(format!(
            "single-step learner needs a window-1 candidate set, got m={}",
            candidates.window()
        )));
    }
    run_loop(env, candidates, config, rng, |policy, rng| {
        Ok(vec![Sample {
            policy: policy.clone(),
            trajectory: sample_trajectory(env, policy, rng),
        }])
    })
}

/// Multi-step learner: per outer episode, for every start step
/// `h = 0..=H-m` and every action sequence in `A^{m-1}` (lexicographic),
/// executes the optimistic policy with that sequence spliced in at `h`.
/// The trace scores the unspliced optimistic policy.
pub fn multistep_omle_run<R: Rng + ?Sized>(
    env: &TabularPomdp,
    candidates: &CandidateSet,
    config: RunConfig,
    rng: &mut R,
) -> Result<RegretTrace> {
    let m = candidates.window();
    if m < 2 {
        return Err(Error::InvalidParameter(
            "multi-step learner needs m >= 2; use the single-step learner for m = 1".into(),
        ));
    }
    let d = candidates.dims();
    let probes = d.actions.checked_pow(m as u32 - 1).ok_or_else(|| {
        Error::InvalidParameter(format!("A^(m-1) = {}^{} overflows", d.actions, m - 1))
    })?;
    run_loop(env, candidates, config, rng, |policy, rng| {
        let mut out = Vec::with_capacity((d.horizon - m + 1) * probes);
        for h in 0..=d.horizon - m {
            for idx in 0..probes {
                let seq = decode_digits(idx, d.actions, m - 1);
                let spliced = Arc::new(policy_splice(policy, h, &seq)?);
                let trajectory = sample_trajectory(env, &spliced, rng);
                out.push(Sample {
                    policy: spliced,
                    trajectory,
                });
            }
        }
        Ok(out)
    })
}
