use std::io::Write;
use std::time::Instant;

use anyhow::Result;
use omle_core::eluder::{eluder_dimension, FiniteFunctionClass, DEFAULT_SEARCH_CAP};
use omle_core::instances::{lock_family_under, random_weakly_revealing};
use omle_core::omle::{beta_default, omle_run, CandidateSet, RunConfig};
use omle_core::oom::{single_step_operators, trajectory_probability_oom, DEFAULT_SVD_TOL};
use omle_core::pomdp::{optimal_policy, trajectory_distribution, EnumerationCap, HistoryPolicy, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn time<T>(out: &mut dyn Write, label: &str, reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<()> {
    f()?;
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(f()?);
    }
    let per = start.elapsed().as_secs_f64() / reps as f64;
    writeln!(out, "{label:<40} {:>12.3} us", per * 1e6)?;
    Ok(())
}

/// Mean wall-clock per call of the main kernels on fixed small instances.
pub fn cmd_bench(reps: usize, out: &mut dyn Write) -> Result<()> {
    let reps = reps.max(1);
    let cap = EnumerationCap::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (model, _) = random_weakly_revealing(3, 2, 3, 4, 0.05, 1000, &mut rng)?;
    let pi = HistoryPolicy::random(model.dims(), &mut rng);
    let d = model.dims();
    time(out, "enumerate (S3 A2 O3 H4)", reps, || Ok(trajectory_distribution(&model, &pi, cap)?))?;
    let oom = single_step_operators(&model, DEFAULT_SVD_TOL)?;
    time(out, "build single-step operators", reps, || Ok(single_step_operators(&model, DEFAULT_SVD_TOL)?))?;
    time(out, "oom probability x1000", reps, || {
        let mut acc = 0.0;
        for i in 0..1000 {
            acc += trajectory_probability_oom(&oom, &pi, &Trajectory::from_index(&d, i))?;
        }
        Ok(acc)
    })?;
    time(out, "optimal policy (S3 A2 O3 H4)", reps, || Ok(optimal_policy(&model, cap)?))?;
    let fam = lock_family_under(3, 2, 0.3)?;
    let cands = CandidateSet::new(fam.clone(), 0.3, 1)?;
    let beta = beta_default(6, 2, 7, 3, 200, 0.1, 1.0, 1)?;
    time(out, "omle run (lock H3, K=200)", reps, || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        Ok(omle_run(&fam[3], &cands, RunConfig { episodes: 200, beta, cap }, &mut rng)?)
    })?;
    let rows = (0..8)
        .map(|_| (0..6).map(|_| [-1.0, -0.5, 0.0, 0.5, 1.0][rng.random_range(0..5)]).collect())
        .collect();
    let class = FiniteFunctionClass::new(6, rows)?;
    time(out, "eluder dimension (6 points, 8 fns)", reps, || {
        Ok(eluder_dimension(&class, 0.5, None, DEFAULT_SEARCH_CAP)?)
    })?;
    Ok(())
}
