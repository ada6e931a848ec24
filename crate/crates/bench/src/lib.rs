//! Seeded fixtures shared by the criterion benches.

use omle_core::eluder::FiniteFunctionClass;
use omle_core::instances::{combinatorial_lock_under, lock_family_under, random_weakly_revealing};
use omle_core::omle::CandidateSet;
use omle_core::TabularPomdp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Weakly revealing model with `A = 2` and margin at least 0.05.
pub fn random_model(states: usize, observations: usize, horizon: usize, seed: u64) -> TabularPomdp {
    random_weakly_revealing(states, 2, observations, horizon, 0.05, 1000, &mut rng(seed))
        .expect("fixture generator")
        .0
}

/// Undercomplete lock environment with its full sibling grid.
pub fn lock_grid(horizon: usize, actions: usize, alpha: f64, seed: u64) -> (TabularPomdp, CandidateSet) {
    let env = combinatorial_lock_under(horizon, actions, alpha, None, &mut rng(seed)).expect("lock");
    let family = lock_family_under(horizon, actions, alpha).expect("lock family");
    (env, CandidateSet::new(family, alpha, 1).expect("candidate set"))
}

/// Class with values drawn from {-1, -0.5, 0, 0.5, 1}.
pub fn random_class(points: usize, functions: usize, seed: u64) -> FiniteFunctionClass {
    const VALUES: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut r = rng(seed);
    let rows = (0..functions)
        .map(|_| (0..points).map(|_| VALUES[r.random_range(0..5)]).collect())
        .collect();
    FiniteFunctionClass::new(points, rows).expect("class")
}
