use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::candidates::{log_likelihood, CandidateSet};
use super::run::RegretTrace;
use crate::pomdp::{trajectory_distribution, EnumerationCap, HistoryPolicy, TabularPomdp};
use crate::{Error, Result};

/// `sum_tau |P^pi_a(tau) - P^pi_b(tau)|` (twice the usual total variation).
pub fn tv_distance(
    model_a: &TabularPomdp,
    model_b: &TabularPomdp,
    policy: &HistoryPolicy,
    cap: EnumerationCap,
) -> Result<f64> {
    if model_a.dims() != model_b.dims() {
        return Err(Error::DimensionMismatch("models differ in dimensions".into()));
    }
    let p = trajectory_distribution(model_a, policy, cap)?;
    let q = trajectory_distribution(model_b, policy, cap)?;
    Ok(p.l1_distance(&q))
}

/// One confidence-set member at one episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityRow {
    pub k: usize,
    pub candidate: usize,
    /// `sum over earlier samples of tv_distance(theta, theta*, pi)^2`.
    pub tv_sq_sum: f64,
    /// `sum over earlier samples of ln P_{theta*}(tau) - ln P_theta(tau)`.
    pub ll_deficit: f64,
    /// `ll_deficit + H (S^2 A + S O) ln(T S A O H) + ln(T / delta)`,
    /// `T` the number of earlier samples; 0 when `T = 0`.
    pub rhs: f64,
    /// `tv_sq_sum / rhs`, 0 when both vanish.
    pub ratio: f64,
}

/// Tracks, for every episode and every member of its confidence set, the
/// accumulated squared distance to the environment against the likelihood
/// deficit plus the complexity term (constant 1).
pub fn mle_validity_check(
    trace: &RegretTrace,
    candidates: &CandidateSet,
    env: &TabularPomdp,
    delta: f64,
    cap: EnumerationCap,
) -> Result<Vec<ValidityRow>> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta={delta} must lie in (0, 1]")));
    }
    let d = env.dims();
    let samples: Vec<_> = trace.dataset.iter().flatten().collect();

    // environment distributions, one per distinct policy
    let mut env_dists = HashMap::new();
    for s in &samples {
        let key = Arc::as_ptr(&s.policy) as usize;
        if let std::collections::hash_map::Entry::Vacant(e) = env_dists.entry(key) {
            e.insert(trajectory_distribution(env, &s.policy, cap)?);
        }
    }
    // per[i][t] = (tv^2, ll deficit) of candidate i on sample t
    let per: Vec<Vec<(f64, f64)>> = (0..candidates.len())
        .into_par_iter()
        .map(|i| {
            let model = candidates.get(i);
            let mut tv_cache: HashMap<usize, f64> = HashMap::new();
            samples
                .iter()
                .map(|s| {
                    let key = Arc::as_ptr(&s.policy) as usize;
                    let tv = match tv_cache.get(&key) {
                        Some(&v) => v,
                        None => {
                            let v = trajectory_distribution(model, &s.policy, cap)?.l1_distance(&env_dists[&key]);
                            tv_cache.insert(key, v);
                            v
                        }
                    };
                    let deficit =
                        log_likelihood(env, &s.policy, &s.trajectory) - log_likelihood(model, &s.policy, &s.trajectory);
                    Ok((tv * tv, deficit))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let (s, a, o, h) = (d.states as f64, d.actions as f64, d.observations as f64, d.horizon as f64);
    let complexity = h * (s * s * a + s * o);
    let mut rows = Vec::new();
    let mut before = 0usize;
    for (rec, episode) in trace.records.iter().zip(&trace.dataset) {
        let t = before as f64;
        let constant = if before == 0 {
            0.0
        } else {
            complexity * (t * s * a * o * h).ln() + (t / delta).ln()
        };
        for &i in &rec.members {
            let (tv_sq_sum, ll_deficit) = per[i][..before]
                .iter()
                .fold((0.0, 0.0), |(x, y), (tv, df)| (x + tv, y + df));
            let rhs = ll_deficit + constant;
            let ratio = if tv_sq_sum == 0.0 { 0.0 } else { tv_sq_sum / rhs };
            rows.push(ValidityRow {
                k: rec.k,
                candidate: i,
                tv_sq_sum,
                ll_deficit,
                rhs,
                ratio,
            });
        }
        before += episode.len();
    }
    Ok(rows)
}
