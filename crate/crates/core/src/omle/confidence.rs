use std::sync::Arc;

use rayon::prelude::*;

use super::candidates::{CandidateSet, LikelihoodLedger};
use crate::pomdp::{optimal_policy, EnumerationCap, HistoryPolicy};
use crate::{Error, Result};

const VALUE_TIE_TOL: f64 = 1e-12;

/// Candidates whose log-likelihood is within `beta` of the best revealing
/// candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSet {
    /// 1-based episode the set is used in.
    pub episode: usize,
    /// Ascending candidate indices.
    pub members: Vec<usize>,
    pub beta: f64,
    pub max_log_likelihood: f64,
}

impl ConfidenceSet {
    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `{i revealing : LL_i >= max_{j revealing} LL_j - beta}`. Non-revealing
/// candidates neither join nor set the maximum.
pub fn confidence_set_update(
    candidates: &CandidateSet,
    ledger: &LikelihoodLedger,
    beta: f64,
    episode: usize,
) -> Result<ConfidenceSet> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!("beta={beta} must be nonnegative")));
    }
    let totals = ledger.totals();
    let max = (0..candidates.len())
        .filter(|&i| candidates.is_revealing(i))
        .map(|i| totals[i])
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptyConfidenceSet {
            alpha: candidates.alpha(),
        });
    }
    let threshold = max - beta;
    let members = (0..candidates.len())
        .filter(|&i| candidates.is_revealing(i) && totals[i] >= threshold)
        .collect();
    Ok(ConfidenceSet {
        episode,
        members,
        beta,
        max_log_likelihood: max,
    })
}

/// Optimistic choice for one episode.
#[derive(Debug, Clone)]
pub struct Plan {
    pub candidate: usize,
    pub policy: Arc<HistoryPolicy>,
    /// `max_{theta in B^k, pi} V^pi(theta)`.
    pub value: f64,
}

/// Optimal policies of candidates, computed on first use. Candidates never
/// change during a run, so each is planned at most once.
#[derive(Debug, Clone)]
pub struct PlanCache {
    cap: EnumerationCap,
    entries: Vec<Option<(Arc<HistoryPolicy>, f64)>>,
}

impl PlanCache {
    pub fn new(candidates: &CandidateSet, cap: EnumerationCap) -> Self {
        PlanCache {
            cap,
            entries: vec![None; candidates.len()],
        }
    }

    /// Plans all of `indices` not yet cached, in parallel.
    pub fn fill(&mut self, candidates: &CandidateSet, indices: &[usize]) -> Result<()> {
        let missing: Vec<usize> = indices.iter().copied().filter(|&i| self.entries[i].is_none()).collect();
        let cap = self.cap;
        let planned = missing
            .par_iter()
            .map(|&i| optimal_policy(candidates.get(i), cap).map(|(p, v)| (Arc::new(p), v)))
            .collect::<Result<Vec<_>>>()?;
        for (i, entry) in missing.into_iter().zip(planned) {
            self.entries[i] = Some(entry);
        }
        Ok(())
    }

    pub fn get(&mut self, candidates: &CandidateSet, i: usize) -> Result<(Arc<HistoryPolicy>, f64)> {
        self.fill(candidates, &[i])?;
        Ok(self.entries[i].clone().expect("filled"))
    }
}

/// Member with the highest optimal value; ties within `1e-12` go to the
/// lowest index.
pub fn optimistic_plan(candidates: &CandidateSet, conf: &ConfidenceSet, cache: &mut PlanCache) -> Result<Plan> {
    if conf.is_empty() {
        return Err(Error::EmptyConfidenceSet {
            alpha: candidates.alpha(),
        });
    }
    cache.fill(candidates, &conf.members)?;
    let mut best: Option<Plan> = None;
    for &i in &conf.members {
        let (policy, value) = cache.entries[i].clone().expect("filled");
        if best.as_ref().is_none_or(|b| value > b.value + VALUE_TIE_TOL) {
            best = Some(Plan {
                candidate: i,
                policy,
                value,
            });
        }
    }
    Ok(best.expect("nonempty"))
}
