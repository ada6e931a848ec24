use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use omle_core::instances::{lock_family_under, random_weakly_revealing};
use omle_core::omle::{
    beta_default, confidence_set_update, mle_validity_check, omle_run, optimistic_discretize, optimistic_plan,
    parameter_vector, tv_distance, CandidateSet, LikelihoodLedger, PlanCache, RunConfig, Sample,
};
use omle_core::pomdp::{
    optimal_policy, policy_value, trajectory_distribution, trajectory_probability_forward, Dims, EnumerationCap,
    HistoryPolicy, TabularPomdp, Trajectory,
};
use omle_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_model(seed: u64, d: Dims) -> TabularPomdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_weakly_revealing(d.states, d.actions, d.observations, d.horizon, 0.0, 1, &mut rng)
        .unwrap()
        .0
}

#[test]
fn beta_matches_hand_evaluation() {
    let under = beta_default(2, 2, 3, 4, 100, 0.1, 1.0, 1).unwrap();
    let hand = 4.0 * (4.0 * 2.0 + 2.0 * 3.0) * 4800f64.ln() + 1000f64.ln();
    assert!((under - hand).abs() < 1e-9);
    assert!((under - 481.6).abs() < 0.1);
    let over = beta_default(2, 2, 3, 4, 100, 0.1, 1.0, 2).unwrap();
    let hand = 56.0 * 48f64.ln() + (100.0 * 4.0 * 4.0 / 0.1f64).ln();
    assert!((over - hand).abs() < 1e-9);
    assert!((beta_default(2, 2, 3, 4, 100, 0.1, 2.5, 1).unwrap() - 2.5 * under).abs() < 1e-9);
}

/// One-step, one-state model emitting observation 0 with probability `p`.
fn coin(p: f64) -> TabularPomdp {
    TabularPomdp::new(
        Dims::new(1, 1, 2, 1),
        DVector::from_element(1, 1.0),
        vec![],
        vec![DMatrix::from_column_slice(2, 1, &[p, 1.0 - p])],
        vec![vec![0.0, 1.0]],
    )
    .unwrap()
}

fn coin_ledger(cands: &CandidateSet) -> LikelihoodLedger {
    let mut ledger = LikelihoodLedger::new(cands);
    ledger.record(
        cands,
        Sample {
            policy: Arc::new(HistoryPolicy::uniform(cands.dims())),
            trajectory: Trajectory::from_pairs(&[(0, 0)]),
        },
    );
    ledger
}

#[test]
fn confidence_threshold_arithmetic() {
    let cands = CandidateSet::new(vec![coin(0.9), coin(0.9 * (-5f64).exp())], 0.1, 1).unwrap();
    let ledger = coin_ledger(&cands);
    let gap = ledger.totals()[0] - ledger.totals()[1];
    assert!((gap - 5.0).abs() < 1e-12);
    assert_eq!(confidence_set_update(&cands, &ledger, 4.0, 2).unwrap().members, vec![0]);
    assert_eq!(confidence_set_update(&cands, &ledger, 0.0, 2).unwrap().members, vec![0]);
    assert_eq!(confidence_set_update(&cands, &ledger, 5.5, 2).unwrap().members, vec![0, 1]);
    assert_eq!(confidence_set_update(&cands, &ledger, f64::INFINITY, 2).unwrap().members, vec![0, 1]);
}

#[test]
fn revealing_gate_and_empty_set() {
    // margins are sqrt(p^2 + (1-p)^2): 0.906 for p = 0.9, 0.707 for p = 0.5
    let cands = CandidateSet::new(vec![coin(0.5), coin(0.9)], 0.8, 1).unwrap();
    let ledger = coin_ledger(&cands);
    let conf = confidence_set_update(&cands, &ledger, f64::INFINITY, 2).unwrap();
    assert_eq!(conf.members, vec![1]);
    let strict = CandidateSet::new(vec![coin(0.5), coin(0.9)], 0.95, 1).unwrap();
    assert!(matches!(
        confidence_set_update(&strict, &LikelihoodLedger::new(&strict), 1.0, 1),
        Err(Error::EmptyConfidenceSet { .. })
    ));
}

fn deterministic_policies(d: Dims) -> Vec<HistoryPolicy> {
    let counts: Vec<usize> = (0..d.horizon).map(|h| d.history_count(h)).collect();
    let total: usize = counts.iter().sum();
    (0..d.actions.pow(total as u32))
        .map(|mut code| {
            let mut choices = vec![0; total];
            for c in choices.iter_mut() {
                *c = code % d.actions;
                code /= d.actions;
            }
            HistoryPolicy::deterministic(d, |h, hist| choices[counts[..h].iter().sum::<usize>() + hist])
        })
        .collect()
}

#[test]
fn optimistic_value_is_exhaustive_maximum() {
    let d = Dims::new(2, 2, 2, 2);
    let policies = deterministic_policies(d);
    for trial in 0..3 {
        let models: Vec<_> = (0..3).map(|i| random_model(10 * trial + i, d)).collect();
        let cands = CandidateSet::new(models.clone(), 0.0, 1).unwrap();
        let conf = confidence_set_update(&cands, &LikelihoodLedger::new(&cands), f64::INFINITY, 1).unwrap();
        let mut cache = PlanCache::new(&cands, EnumerationCap::default());
        let plan = optimistic_plan(&cands, &conf, &mut cache).unwrap();
        let oracle = models
            .iter()
            .flat_map(|m| policies.iter().map(move |p| policy_value(m, p).unwrap()))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((plan.value - oracle).abs() <= 1e-10);
    }
}

#[test]
fn run_invariants_on_random_grid() {
    let d = Dims::new(2, 2, 2, 3);
    let models: Vec<_> = (0..4).map(|i| random_model(70 + i, d)).collect();
    let env = models[2].clone();
    let cands = CandidateSet::new(models, 0.0, 1).unwrap();
    let beta = beta_default(2, 2, 2, 3, 40, 0.1, 0.05, 1).unwrap();
    let cap = EnumerationCap::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let trace = omle_run(&env, &cands, RunConfig { episodes: 40, beta, cap }, &mut rng).unwrap();
    let (_, v_star) = optimal_policy(&env, cap).unwrap();
    assert_eq!(trace.v_star, v_star);
    let mut cum = 0.0;
    let mut prev = 0.0;
    for rec in &trace.records {
        let (pi, v_hat) = optimal_policy(cands.get(rec.candidate), cap).unwrap();
        assert_eq!(rec.opt_value, v_hat);
        let v = policy_value(&env, &pi).unwrap();
        assert_eq!(rec.true_value, v);
        let gap = v_star - v;
        assert!((-1e-12..=3.0).contains(&gap));
        cum += gap.max(0.0);
        assert!((rec.cum_regret - cum).abs() <= 1e-12);
        assert!(rec.cum_regret >= prev);
        prev = rec.cum_regret;
        if rec.contains_truth {
            assert!(rec.opt_value >= v_star - 1e-10);
            let tv = tv_distance(cands.get(rec.candidate), &env, &pi, cap).unwrap();
            assert!(rec.opt_value - rec.true_value <= 3.0 * tv + 1e-9);
        }
    }
}

#[test]
fn discretization_dominates_probabilities() {
    let d = Dims::new(2, 2, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..20 {
        let m = random_model(seed + 900, d);
        let bar = optimistic_discretize(&m, 0.05).unwrap();
        for (x, y) in parameter_vector(&m).iter().zip(bar.parameters()) {
            assert!(y >= *x && y - x < 0.05 + 1e-15);
            assert!(((y / 0.05).round() * 0.05 - y).abs() < 1e-12);
        }
        let pi = HistoryPolicy::random(d, &mut rng);
        let weights = bar.weights(&pi, EnumerationCap::default()).unwrap();
        for (t, w) in weights.iter() {
            assert!(w >= trajectory_probability_forward(&m, &pi, &t));
            assert_eq!(w, bar.trajectory_weight(&pi, &t));
        }
    }
}

#[test]
fn discretization_fixed_points_and_coarse_grid() {
    let m = TabularPomdp::new(
        Dims::new(2, 1, 2, 2),
        DVector::from_vec(vec![0.25, 0.75]),
        vec![vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.5, 1.0])]],
        vec![DMatrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.75]); 2],
        vec![vec![0.0, 1.0]; 2],
    )
    .unwrap();
    assert_eq!(optimistic_discretize(&m, 0.25).unwrap().parameters(), parameter_vector(&m));
    let coarse = optimistic_discretize(&m, 2.0).unwrap().parameters();
    for (x, y) in parameter_vector(&m).iter().zip(coarse) {
        assert_eq!(y, if *x == 0.0 { 0.0 } else { 2.0 });
    }
    assert!(optimistic_discretize(&m, 0.0).is_err());
}

#[test]
fn tv_distance_properties() {
    let d = Dims::new(2, 2, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..10 {
        let a = random_model(2 * i, d);
        let b = random_model(2 * i + 1, d);
        let pi = HistoryPolicy::random(d, &mut rng);
        let cap = EnumerationCap::default();
        assert_eq!(tv_distance(&a, &a, &pi, cap).unwrap(), 0.0);
        let ab = tv_distance(&a, &b, &pi, cap).unwrap();
        assert_eq!(ab, tv_distance(&b, &a, &pi, cap).unwrap());
        assert!(ab <= 2.0 + 1e-12);
        let pa = trajectory_distribution(&a, &pi, cap).unwrap();
        let manual: f64 = pa
            .iter()
            .map(|(t, p)| (p - trajectory_probability_forward(&b, &pi, &t)).abs())
            .sum();
        assert!((ab - manual).abs() <= 1e-10);
    }
}

#[test]
fn validity_report_shape() {
    let fam = lock_family_under(2, 2, 0.5).unwrap();
    let cands = CandidateSet::new(fam.clone(), 0.5, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = RunConfig {
        episodes: 20,
        beta: beta_default(4, 2, 5, 2, 20, 0.1, 1.0, 1).unwrap(),
        cap: EnumerationCap::default(),
    };
    let trace = omle_run(&fam[1], &cands, cfg, &mut rng).unwrap();
    let rows = mle_validity_check(&trace, &cands, &fam[1], 0.1, EnumerationCap::default()).unwrap();
    for r in rows.iter().filter(|r| r.k == 1) {
        assert_eq!((r.tv_sq_sum, r.ll_deficit, r.rhs), (0.0, 0.0, 0.0));
    }
    for r in rows.iter().filter(|r| r.candidate == 1) {
        assert_eq!(r.tv_sq_sum, 0.0);
    }
    assert!(rows.iter().all(|r| r.ratio.is_finite()));
}
