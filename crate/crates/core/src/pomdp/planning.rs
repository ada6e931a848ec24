use nalgebra::DVector;

use super::forward::{trajectory_distribution, weight_by_emission};
use super::model::TabularPomdp;
use super::policy::HistoryPolicy;
use super::EnumerationCap;
use crate::Result;

/// Two action values closer than this are treated as tied; the lower
/// action index wins.
const TIE_TOL: f64 = 1e-12;

/// Exact `V^pi` by accumulating `r_h(o_h)` against forward marginals over
/// the history tree. Branches with zero policy weight are pruned.
pub fn policy_value(model: &TabularPomdp, policy: &HistoryPolicy) -> Result<f64> {
    policy.check_compatible(&model.dims())?;
    Ok(accumulate(model, policy, 0, model.mu1().clone(), 1.0, 0))
}

fn accumulate(
    model: &TabularPomdp,
    policy: &HistoryPolicy,
    step: usize,
    alpha: DVector<f64>,
    pi_weight: f64,
    code: usize,
) -> f64 {
    let dims = model.dims();
    let mut value = 0.0;
    for obs in 0..dims.observations {
        let mut alpha_o = alpha.clone();
        weight_by_emission(model, step, obs, &mut alpha_o);
        let mass = alpha_o.sum();
        if mass == 0.0 {
            continue;
        }
        value += model.reward(step, obs) * mass * pi_weight;
        if step + 1 == dims.horizon {
            continue;
        }
        let hist = code * dims.observations + obs;
        for (action, &p) in policy.probs_at(step, hist).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let next = model.trans(step, action) * &alpha_o;
            value += accumulate(model, policy, step + 1, next, pi_weight * p, hist * dims.actions + action);
        }
    }
    value
}

/// `V^pi` as `sum_tau P(tau) sum_h r_h(o_h)` over the enumerated distribution.
pub fn policy_value_enumerated(model: &TabularPomdp, policy: &HistoryPolicy, cap: EnumerationCap) -> Result<f64> {
    let dist = trajectory_distribution(model, policy, cap)?;
    Ok(dist
        .iter()
        .filter(|(_, p)| *p != 0.0)
        .map(|(t, p)| p * t.steps().iter().enumerate().map(|(h, s)| model.reward(h, s.obs)).sum::<f64>())
        .sum())
}

/// Exact optimal deterministic history policy and `V*`, by backward
/// induction over every history with Bayes-updated beliefs. Unreachable
/// histories and the final step default to action 0.
pub fn optimal_policy(model: &TabularPomdp, cap: EnumerationCap) -> Result<(HistoryPolicy, f64)> {
    let dims = model.dims();
    cap.check(&dims)?;
    let mut choice: Vec<Vec<usize>> = (0..dims.horizon).map(|h| vec![0; dims.history_count(h)]).collect();
    let value = plan(model, 0, model.mu1().clone(), 0, &mut choice);
    let policy = HistoryPolicy::deterministic(dims, |h, hist| choice[h][hist]);
    Ok((policy, value))
}

// `belief` is the normalised state distribution before emitting at `step`.
// Returns the expected reward from `step` on.
fn plan(model: &TabularPomdp, step: usize, belief: DVector<f64>, code: usize, choice: &mut [Vec<usize>]) -> f64 {
    let dims = model.dims();
    let mut value = 0.0;
    for obs in 0..dims.observations {
        let mut post = belief.clone();
        weight_by_emission(model, step, obs, &mut post);
        let p_obs = post.sum();
        if p_obs == 0.0 {
            continue;
        }
        post /= p_obs;
        let mut cont = model.reward(step, obs);
        if step + 1 < dims.horizon {
            let hist = code * dims.observations + obs;
            let mut best = f64::NEG_INFINITY;
            let mut best_action = 0;
            for action in 0..dims.actions {
                let next = model.trans(step, action) * &post;
                let v = plan(model, step + 1, next, hist * dims.actions + action, choice);
                if v > best + TIE_TOL {
                    best = v;
                    best_action = action;
                }
            }
            choice[step][hist] = best_action;
            cont += best;
        }
        value += p_obs * cont;
    }
    value
}
