use nalgebra::DVector;
use rand::Rng;

use super::model::{Dims, Kernels, TabularPomdp};
use super::policy::{policy_probability, HistoryPolicy, Step, Trajectory};
use super::EnumerationCap;
use crate::Result;

/// Probabilities below this are never sampled.
const SAMPLING_FLOOR: f64 = 1e-300;

/// `alpha .*= emis(step)[obs, :]`.
pub(crate) fn weight_by_emission<K: Kernels + ?Sized>(
    model: &K,
    step: usize,
    obs: usize,
    alpha: &mut DVector<f64>,
) {
    let row = model.emis(step).row(obs);
    alpha.iter_mut().zip(row.iter()).for_each(|(a, e)| *a *= e);
}

/// Joint weight of the observations in `prefix` given its actions, as the
/// unnormalised state marginal after the last emission: entry `s` is
/// `P(o_1..o_h, s_h = s | a_1..a_{h-1})`.
pub(crate) fn forward_alpha<K: Kernels + ?Sized>(model: &K, prefix: &[Step]) -> DVector<f64> {
    let mut alpha = model.mu1().clone();
    for (h, s) in prefix.iter().enumerate() {
        if h > 0 {
            alpha = model.trans(h - 1, prefix[h - 1].action) * alpha;
        }
        weight_by_emission(model, h, s.obs, &mut alpha);
    }
    alpha
}

/// State-sequence factor of `P(tau)`, excluding policy terms.
pub(crate) fn forward_weight<K: Kernels + ?Sized>(model: &K, steps: &[Step]) -> f64 {
    forward_alpha(model, steps).sum()
}

/// Exact `P^pi_theta(tau)` by the forward recursion over hidden-state
/// marginals; `O(H S^2)`.
pub fn trajectory_probability_forward(model: &TabularPomdp, policy: &HistoryPolicy, traj: &Trajectory) -> f64 {
    let pi = policy_probability(policy, traj.steps());
    if pi == 0.0 {
        return 0.0;
    }
    pi * forward_weight(model, traj.steps())
}

/// Draws one categorical index; entries below the sampling floor are skipped.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: impl IntoIterator<Item = f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.into_iter().enumerate() {
        if p < SAMPLING_FLOOR {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Samples one episode: `s_1 ~ mu1`, then `o_h ~ O_h(.|s_h)`,
/// `a_h ~ pi_h(.|history)`, `s_{h+1} ~ T_{h,a_h}(.|s_h)`.
pub fn sample_trajectory<R: Rng + ?Sized>(model: &TabularPomdp, policy: &HistoryPolicy, rng: &mut R) -> Trajectory {
    let dims = model.dims();
    let mut steps: Vec<Step> = Vec::with_capacity(dims.horizon);
    let mut state = sample_index(model.mu1().iter().copied(), rng);
    for h in 0..dims.horizon {
        let obs = sample_index(model.emis(h).column(state).iter().copied(), rng);
        let action = sample_index(policy.action_probs(&steps, obs).iter().copied(), rng);
        steps.push(Step::new(obs, action));
        if h + 1 < dims.horizon {
            state = sample_index(model.trans(h, action).column(state).iter().copied(), rng);
        }
    }
    Trajectory::new(steps)
}

/// Every length-`H` trajectory with its probability, indexed by
/// [`Trajectory::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDistribution {
    dims: Dims,
    probs: Vec<f64>,
}

impl TrajectoryDistribution {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, traj: &Trajectory) -> f64 {
        self.probs[traj.index(&self.dims)]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Entries with nonzero probability.
    pub fn support(&self) -> impl Iterator<Item = (Trajectory, f64)> + '_ {
        self.iter().filter(|(_, p)| *p != 0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Trajectory, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (Trajectory::from_index(&self.dims, i), p))
    }

    /// `sum_tau |P(tau) - Q(tau)|`.
    pub fn l1_distance(&self, other: &TrajectoryDistribution) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum()
    }
}

/// Exhaustive distribution over all `(OA)^H` trajectories.
pub fn trajectory_distribution(
    model: &TabularPomdp,
    policy: &HistoryPolicy,
    cap: EnumerationCap,
) -> Result<TrajectoryDistribution> {
    distribution_of(model, policy, cap)
}

pub(crate) fn distribution_of<K: Kernels + ?Sized>(
    model: &K,
    policy: &HistoryPolicy,
    cap: EnumerationCap,
) -> Result<TrajectoryDistribution> {
    let dims = model.dims();
    cap.check(&dims)?;
    policy.check_compatible(&dims)?;
    let mut probs = vec![0.0; dims.trajectory_count().expect("checked") as usize];
    let alpha = model.mu1().clone();
    enumerate(model, policy, 0, alpha, 1.0, 0, &mut probs);
    Ok(TrajectoryDistribution { dims, probs })
}

// `alpha` is the state marginal before emitting at `step`; `code` is the
// mixed-radix code of the history so far (without the pending observation).
fn enumerate<K: Kernels + ?Sized>(
    model: &K,
    policy: &HistoryPolicy,
    step: usize,
    alpha: DVector<f64>,
    pi_weight: f64,
    code: usize,
    out: &mut [f64],
) {
    let dims = model.dims();
    for obs in 0..dims.observations {
        let mut alpha_o = alpha.clone();
        weight_by_emission(model, step, obs, &mut alpha_o);
        let hist = code * dims.observations + obs;
        let dist = policy.probs_at(step, hist);
        for (action, &p) in dist.iter().enumerate() {
            let next_code = hist * dims.actions + action;
            let w = pi_weight * p;
            if step + 1 == dims.horizon {
                out[next_code] = alpha_o.sum() * w;
            } else if w != 0.0 {
                let next = model.trans(step, action) * &alpha_o;
                enumerate(model, policy, step + 1, next, w, next_code, out);
            }
        }
    }
}
