//! Exact representation, simulation, evaluation and planning for tabular
//! episodic POMDPs.
//!
//! Kernel orientation is column-per-state throughout: column `s` of
//! `trans(h, a)` is the next-state distribution from state `s`, and column
//! `s` of `emis(h)` is the observation distribution at `s`.
//!
//! Rewards are collected on observing `o_h`; the final action `a_H` earns
//! nothing and causes no transition.

pub(crate) mod forward;
mod io;
mod model;
mod planning;
pub(crate) mod policy;

pub use forward::{
    sample_trajectory, trajectory_distribution, trajectory_probability_forward,
    TrajectoryDistribution,
};
pub use io::ModelFile;
pub use model::{Dims, Kernels, TabularPomdp, STOCHASTIC_TOL};
pub use planning::{optimal_policy, policy_value, policy_value_enumerated};
pub use policy::{policy_probability, policy_splice, HistoryPolicy, Step, Trajectory};

/// Upper bound on how many trajectories (or histories) may be enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationCap(pub u64);

impl Default for EnumerationCap {
    fn default() -> Self {
        EnumerationCap(1_000_000)
    }
}

impl EnumerationCap {
    /// Fails unless `(O*A)^H` fits under the cap.
    pub fn check(self, dims: &Dims) -> crate::Result<()> {
        match dims.trajectory_count() {
            Some(n) if n <= self.0 => Ok(()),
            Some(n) => Err(crate::Error::EnumerationTooLarge {
                size: n.to_string(),
                cap: self.0,
            }),
            None => Err(crate::Error::EnumerationTooLarge {
                size: format!("({}*{})^{}", dims.observations, dims.actions, dims.horizon),
                cap: self.0,
            }),
        }
    }
}
