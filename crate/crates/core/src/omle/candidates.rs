use std::sync::Arc;

use rayon::prelude::*;

use crate::oom::{multistep_revealing_margin, weakly_revealing_margin};
use crate::pomdp::{trajectory_probability_forward, Dims, HistoryPolicy, TabularPomdp, Trajectory};
use crate::{Error, Result};

/// Probabilities below this count as this value inside logarithms.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;

/// Slack when comparing a candidate's margin against the threshold, so that
/// a margin computed as `alpha - 1 ulp` still passes.
pub const MARGIN_TOL: f64 = 1e-12;

/// `ln P^pi_theta(tau)` with probabilities floored at [`LIKELIHOOD_FLOOR`].
pub fn log_likelihood(candidate: &TabularPomdp, policy: &HistoryPolicy, traj: &Trajectory) -> f64 {
    trajectory_probability_forward(candidate, policy, traj)
        .max(LIKELIHOOD_FLOOR)
        .ln()
}

/// Finite model grid with precomputed revealing margins.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    models: Vec<TabularPomdp>,
    margins: Vec<f64>,
    alpha: f64,
    window: usize,
}

impl CandidateSet {
    /// Margins are `min_h sigma_S(O_h)` when `window == 1` and
    /// `min_h sigma_S(M_h)` otherwise.
    pub fn new(models: Vec<TabularPomdp>, alpha: f64, window: usize) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::InvalidParameter("candidate set is empty".into()))?;
        let dims = first.dims();
        if let Some(i) = models.iter().position(|m| m.dims() != dims) {
            return Err(Error::DimensionMismatch(format!(
                "candidate {i} has dims {:?}, candidate 0 has {dims:?}",
                models[i].dims()
            )));
        }
        if window == 0 || window > dims.horizon {
            return Err(Error::InvalidParameter(format!("window m={window} must lie in 1..={}", dims.horizon)));
        }
        let margins = models
            .par_iter()
            .map(|m| {
                if window == 1 {
                    weakly_revealing_margin(m)
                } else {
                    multistep_revealing_margin(m, window)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CandidateSet {
            models,
            margins,
            alpha,
            window,
        })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn dims(&self) -> Dims {
        self.models[0].dims()
    }

    pub fn models(&self) -> &[TabularPomdp] {
        &self.models
    }

    pub fn get(&self, i: usize) -> &TabularPomdp {
        &self.models[i]
    }

    pub fn margins(&self) -> &[f64] {
        &self.margins
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Whether candidate `i` clears the revealing threshold.
    pub fn is_revealing(&self, i: usize) -> bool {
        self.margins[i] >= self.alpha - MARGIN_TOL
    }

    /// Index of the first candidate exactly equal to `model`.
    pub fn position_of(&self, model: &TabularPomdp) -> Option<usize> {
        self.models.iter().position(|m| m == model)
    }
}

/// One logged interaction.
#[derive(Debug, Clone)]
pub struct Sample {
    pub policy: Arc<HistoryPolicy>,
    pub trajectory: Trajectory,
}

/// Append-only dataset with running per-candidate log-likelihood totals.
#[derive(Debug, Clone)]
pub struct LikelihoodLedger {
    totals: Vec<f64>,
    data: Vec<Sample>,
}

impl LikelihoodLedger {
    pub fn new(candidates: &CandidateSet) -> Self {
        LikelihoodLedger {
            totals: vec![0.0; candidates.len()],
            data: Vec::new(),
        }
    }

    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    pub fn data(&self) -> &[Sample] {
        &self.data
    }

    /// Appends a sample and returns each candidate's log-likelihood of it.
    pub fn record(&mut self, candidates: &CandidateSet, sample: Sample) -> Vec<f64> {
        let lls: Vec<f64> = candidates
            .models()
            .par_iter()
            .map(|m| log_likelihood(m, &sample.policy, &sample.trajectory))
            .collect();
        self.totals.iter_mut().zip(&lls).for_each(|(t, l)| *t += l);
        self.data.push(sample);
        lls
    }

    /// Totals recomputed from the dataset, summed in logging order.
    pub fn recompute(&self, candidates: &CandidateSet) -> Vec<f64> {
        candidates
            .models()
            .par_iter()
            .map(|m| {
                self.data
                    .iter()
                    .map(|s| log_likelihood(m, &s.policy, &s.trajectory))
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::lock_family_under;
    use crate::pomdp::sample_trajectory;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn floor_for_impossible_trajectories() {
        let fam = lock_family_under(2, 2, 0.5).unwrap();
        // the last good state under candidate 0 (good action 0) never emits
        // the bad final observation
        let pi = HistoryPolicy::open_loop(fam[0].dims(), &[0, 0]);
        let t = Trajectory::from_pairs(&[(0, 0), (3, 0)]);
        assert!((log_likelihood(&fam[0], &pi, &t) - 1e-300f64.ln()).abs() < 1e-9);
        let sure = Trajectory::from_pairs(&[(0, 0), (2, 0)]);
        let p = trajectory_probability_forward(&fam[0], &pi, &sure);
        assert!((log_likelihood(&fam[0], &pi, &sure) - p.ln()).abs() < 1e-12);
    }

    #[test]
    fn ledger_matches_recompute() {
        let fam = lock_family_under(3, 2, 0.3).unwrap();
        let cs = CandidateSet::new(fam.clone(), 0.3, 1).unwrap();
        let mut ledger = LikelihoodLedger::new(&cs);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let pi = Arc::new(HistoryPolicy::random(fam[1].dims(), &mut rng));
            let trajectory = sample_trajectory(&fam[1], &pi, &mut rng);
            ledger.record(&cs, Sample { policy: pi, trajectory });
        }
        for (a, b) in ledger.totals().iter().zip(ledger.recompute(&cs)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn mismatched_dims_rejected() {
        let mut a = lock_family_under(2, 2, 0.5).unwrap();
        a.extend(lock_family_under(3, 2, 0.5).unwrap());
        assert!(matches!(CandidateSet::new(a, 0.5, 1), Err(Error::DimensionMismatch(_))));
    }
}
