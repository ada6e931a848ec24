use nalgebra::{DMatrix, DVector};

use crate::pomdp::forward::{distribution_of, forward_weight};
use crate::pomdp::{
    policy_probability, Dims, EnumerationCap, HistoryPolicy, Kernels, TabularPomdp, Trajectory,
    TrajectoryDistribution,
};
use crate::{Error, Result};

/// Model parameters rounded up to a grid. Columns may sum past 1, so this is
/// not a POMDP, but the forward expansion still applies to it.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedModel {
    dims: Dims,
    mu1: DVector<f64>,
    trans: Vec<Vec<DMatrix<f64>>>,
    emis: Vec<DMatrix<f64>>,
}

impl Kernels for DiscretizedModel {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn mu1(&self) -> &DVector<f64> {
        &self.mu1
    }

    fn trans(&self, step: usize, action: usize) -> &DMatrix<f64> {
        &self.trans[step][action]
    }

    fn emis(&self, step: usize) -> &DMatrix<f64> {
        &self.emis[step]
    }
}

impl DiscretizedModel {
    /// Forward expansion of `P^pi(tau)` with the rounded parameters.
    pub fn trajectory_weight(&self, policy: &HistoryPolicy, traj: &Trajectory) -> f64 {
        policy_probability(policy, traj.steps()) * forward_weight(self, traj.steps())
    }

    /// Forward expansion over every trajectory.
    pub fn weights(&self, policy: &HistoryPolicy, cap: EnumerationCap) -> Result<TrajectoryDistribution> {
        distribution_of(self, policy, cap)
    }

    /// Flattened parameters, in the order of [`parameter_vector`].
    pub fn parameters(&self) -> Vec<f64> {
        flatten(self)
    }
}

/// `mu1`, then `T[h][a][s_next][s]`, then `O[h][o][s]`.
pub fn parameter_vector(model: &TabularPomdp) -> Vec<f64> {
    flatten(model)
}

fn flatten<K: Kernels>(k: &K) -> Vec<f64> {
    let d = k.dims();
    let mut out: Vec<f64> = k.mu1().iter().copied().collect();
    for h in 0..d.horizon.saturating_sub(1) {
        for a in 0..d.actions {
            let t = k.trans(h, a);
            out.extend(t.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()));
        }
    }
    for h in 0..d.horizon {
        out.extend(k.emis(h).row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()));
    }
    out
}

/// Smallest multiple of `eps` that is `>= x`.
fn ceil_to_grid(x: f64, eps: f64) -> f64 {
    let k = (x / eps).ceil();
    // the division can round either way; step to the exact grid point
    if k > 0.0 && (k - 1.0) * eps >= x {
        (k - 1.0) * eps
    } else if k * eps < x {
        (k + 1.0) * eps
    } else {
        k * eps
    }
}

/// Rounds every parameter up to the `eps` grid. The forward expansion is
/// monotone in the parameters, so the result dominates the model's
/// trajectory probabilities under any policy.
pub fn optimistic_discretize(model: &TabularPomdp, eps: f64) -> Result<DiscretizedModel> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid step eps={eps} must be positive")));
    }
    let d = model.dims();
    let up = |m: &DMatrix<f64>| m.map(|x| ceil_to_grid(x, eps));
    Ok(DiscretizedModel {
        dims: d,
        mu1: model.mu1().map(|x| ceil_to_grid(x, eps)),
        trans: (0..d.horizon.saturating_sub(1))
            .map(|h| (0..d.actions).map(|a| up(model.trans(h, a))).collect())
            .collect(),
        emis: (0..d.horizon).map(|h| up(model.emis(h))).collect(),
    })
}
