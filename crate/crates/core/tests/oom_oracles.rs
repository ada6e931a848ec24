use nalgebra::DMatrix;
use omle_core::instances::{block_mdp, combinatorial_lock_over, random_multistep_revealing, random_weakly_revealing};
use omle_core::linalg::{sigma_k, spectral_norm};
use omle_core::oom::{
    belief_vector, build_m_step_matrix, find_confusable_mixtures, multi_step_operators, multistep_margins,
    multistep_revealing_margin, operator_norm_11, product_error_decomposition, single_step_operators,
    trajectory_probability_oom, weakly_revealing_margin, DEFAULT_SVD_TOL,
};
use omle_core::pomdp::{policy_probability, Dims, EnumerationCap, HistoryPolicy, Step, TabularPomdp, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Joint weight of an observation sequence under the given actions, summed
/// over hidden state paths.
fn path_weight(m: &TabularPomdp, steps: &[Step]) -> f64 {
    let s = m.dims().states;
    let n = s.pow(steps.len() as u32);
    (0..n)
        .map(|mut code| {
            let mut states = Vec::with_capacity(steps.len());
            for _ in 0..steps.len() {
                states.push(code % s);
                code /= s;
            }
            let mut p = m.mu1()[states[0]];
            for (h, st) in steps.iter().enumerate() {
                p *= m.emis(h)[(st.obs, states[h])];
                if h + 1 < steps.len() {
                    p *= m.trans(h, st.action)[(states[h + 1], states[h])];
                }
            }
            p
        })
        .sum()
}

fn all_trajectories(d: Dims) -> impl Iterator<Item = Trajectory> {
    (0..d.trajectory_count().unwrap() as usize).map(move |i| Trajectory::from_index(&d, i))
}

fn prefixes(d: Dims, len: usize) -> Vec<Vec<Step>> {
    let n = (d.observations * d.actions).pow(len as u32);
    (0..n)
        .map(|mut code| {
            let mut steps = vec![Step::new(0, 0); len];
            for s in steps.iter_mut().rev() {
                *s = Step::new(code / d.actions % d.observations, code % d.actions);
                code /= d.observations * d.actions;
            }
            steps
        })
        .collect()
}

fn under(seed: u64, s: usize) -> TabularPomdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_weakly_revealing(s, 2, 3, 3, 0.05, 1000, &mut rng).unwrap().0
}

fn over(seed: u64) -> TabularPomdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_multistep_revealing(3, 2, 2, 3, 2, 0.05, 1000, &mut rng).unwrap().0
}

#[test]
fn undercomplete_operators_reproduce_forward() {
    for seed in 0..10 {
        let m = under(seed, 2 + (seed as usize % 2));
        let oom = single_step_operators(&m, DEFAULT_SVD_TOL).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pi = HistoryPolicy::random(m.dims(), &mut rng);
        let mut total = 0.0;
        for t in all_trajectories(m.dims()) {
            let p = trajectory_probability_oom(&oom, &pi, &t).unwrap();
            let q = policy_probability(&pi, t.steps()) * path_weight(&m, t.steps());
            assert!((p - q).abs() <= 1e-10);
            total += p;
        }
        assert!((total - 1.0).abs() <= 1e-9);
        assert!((oom.b0().sum() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn overcomplete_operators_reproduce_forward() {
    for seed in 0..5 {
        let m = over(seed);
        assert!(m.dims().states > m.dims().observations);
        let oom = multi_step_operators(&m, 2, DEFAULT_SVD_TOL).unwrap();
        assert_eq!(oom.dim(), 2 * 2 * 2);
        let pi = HistoryPolicy::uniform(m.dims());
        for t in all_trajectories(m.dims()) {
            let p = trajectory_probability_oom(&oom, &pi, &t).unwrap();
            let q = policy_probability(&pi, t.steps()) * path_weight(&m, t.steps());
            assert!((p - q).abs() <= 1e-10);
        }
    }
}

#[test]
fn window_one_is_bitwise_single_step() {
    for seed in 0..5 {
        let m = under(seed, 2);
        assert_eq!(
            multi_step_operators(&m, 1, DEFAULT_SVD_TOL).unwrap(),
            single_step_operators(&m, DEFAULT_SVD_TOL).unwrap()
        );
        assert_eq!(build_m_step_matrix(&m, 1, 1).unwrap().matrix, *m.emis(1));
    }
}

#[test]
fn beliefs_are_joint_predictions() {
    let m = under(3, 3);
    let oom = single_step_operators(&m, DEFAULT_SVD_TOL).unwrap();
    for prefix in prefixes(m.dims(), 2) {
        let b = belief_vector(&oom, &prefix).unwrap();
        for o in 0..3 {
            let mut ext = prefix.clone();
            ext.push(Step::new(o, 0));
            assert!((b[o] - path_weight(&m, &ext)).abs() <= 1e-10);
        }
    }
    let m2 = over(4);
    let oom2 = multi_step_operators(&m2, 2, DEFAULT_SVD_TOL).unwrap();
    for prefix in prefixes(m2.dims(), 1) {
        let b = belief_vector(&oom2, &prefix).unwrap();
        for a in 0..2 {
            for o1 in 0..2 {
                for o2 in 0..2 {
                    let mut ext = prefix.clone();
                    ext.push(Step::new(o1, a));
                    ext.push(Step::new(o2, 0));
                    let row = a * 4 + o1 * 2 + o2;
                    assert!((b[row] - path_weight(&m2, &ext)).abs() <= 1e-10);
                }
            }
        }
    }
}

#[test]
fn belief_mass_totals() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = under(5, 2);
    let oom = single_step_operators(&m, DEFAULT_SVD_TOL).unwrap();
    let pi = HistoryPolicy::random(m.dims(), &mut rng);
    for h in 0..=2 {
        let total: f64 = prefixes(m.dims(), h)
            .iter()
            .map(|p| belief_vector(&oom, p).unwrap().abs().sum() * policy_probability(&pi, p))
            .sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }
    let m2 = over(5);
    let oom2 = multi_step_operators(&m2, 2, DEFAULT_SVD_TOL).unwrap();
    let pi2 = HistoryPolicy::random(m2.dims(), &mut rng);
    for h in 0..=1 {
        let total: f64 = prefixes(m2.dims(), h)
            .iter()
            .map(|p| belief_vector(&oom2, p).unwrap().abs().sum() * policy_probability(&pi2, p))
            .sum();
        assert!((total - 2.0).abs() <= 1e-9);
    }
}

#[test]
fn marginalizing_last_observation() {
    let m = under(11, 2);
    let oom = single_step_operators(&m, DEFAULT_SVD_TOL).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pi = HistoryPolicy::random(m.dims(), &mut rng);
    for prefix in prefixes(m.dims(), 2) {
        let p_prefix = policy_probability(&pi, &prefix) * path_weight(&m, &prefix);
        let b = belief_vector(&oom, &prefix[..1]).unwrap();
        let via_ops = policy_probability(&pi, &prefix) * b[prefix[1].obs];
        assert!((via_ops - p_prefix).abs() <= 1e-10);
        let next = belief_vector(&oom, &prefix).unwrap();
        let summed: f64 = (0..3).map(|o| policy_probability(&pi, &prefix) * next[o]).sum();
        assert!((summed - p_prefix).abs() <= 1e-10);
    }
}

#[test]
fn operator_norms_respect_margin() {
    for seed in 0..20 {
        let m = under(seed + 50, 2 + seed as usize % 2);
        let alpha = weakly_revealing_margin(&m).unwrap();
        let s = m.dims().states as f64;
        let oom = single_step_operators(&m, DEFAULT_SVD_TOL).unwrap();
        for h in 0..oom.steps() {
            for b in oom.ops_at(h) {
                assert!(operator_norm_11(b) <= s.sqrt() / alpha + 1e-9);
                assert!(spectral_norm(b) <= s / alpha + 1e-9);
            }
        }
    }
}

#[test]
fn stacked_margin_dominates_action_blocks() {
    for seed in 0..20 {
        let m = over(seed + 200);
        for (h, sigma) in multistep_margins(&m, 2).unwrap().into_iter().enumerate() {
            let em = build_m_step_matrix(&m, h, 2).unwrap();
            for a in 0..em.action_blocks() {
                let block = em.action_block(a);
                for c in 0..block.ncols() {
                    assert!((block.column(c).sum() - 1.0).abs() <= 1e-12);
                }
                assert!(sigma >= sigma_k(&block, 3) - 1e-10);
            }
        }
    }
}

#[test]
fn structured_instances_margins() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for m in 1..=4 {
        let lock = combinatorial_lock_over(m, 2, None, &mut rng).unwrap();
        assert!(multistep_revealing_margin(&lock, m).unwrap() >= 1.0 - 1e-12);
        assert!(multi_step_operators(&lock, m, DEFAULT_SVD_TOL).is_ok());
    }
    for o in 3..7 {
        let b = block_mdp(3, 2, o, 2, &mut rng).unwrap();
        assert!(weakly_revealing_margin(&b).unwrap() >= 1.0 / (o as f64).sqrt() - 1e-12);
    }
}

fn random_stochastic(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() + 1e-3);
    for mut c in m.column_iter_mut() {
        let s = c.sum();
        c /= s;
    }
    m
}

#[test]
fn confusable_mixtures_iff_rank_deficient() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for i in 0..20 {
        let s = 2 + i % 3;
        let o = s + i % 2;
        let full = random_stochastic(o, s, &mut rng);
        assert!(find_confusable_mixtures(&full, DEFAULT_SVD_TOL).is_none());
        let low = random_stochastic(o, s - 1, &mut rng) * random_stochastic(s - 1, s, &mut rng);
        let (n1, n2) = find_confusable_mixtures(&low, DEFAULT_SVD_TOL).expect("witness");
        assert!(n1.iter().zip(n2.iter()).all(|(a, b)| *a == 0.0 || *b == 0.0));
        assert!((n1.sum() - 1.0).abs() <= 1e-12 && (n2.sum() - 1.0).abs() <= 1e-12);
        assert!((&low * (&n1 - &n2)).abs().sum() <= 1e-9);
    }
    let (a, b) = find_confusable_mixtures(&DMatrix::from_element(2, 2, 0.5), DEFAULT_SVD_TOL).unwrap();
    assert_eq!((a[0], a[1], b[0], b[1]), (1.0, 0.0, 0.0, 1.0));
}

/// Convex combination of two models' parameters.
fn mix(a: &TabularPomdp, b: &TabularPomdp, t: f64) -> TabularPomdp {
    let d = a.dims();
    let lerp = |x: &DMatrix<f64>, y: &DMatrix<f64>| x * (1.0 - t) + y * t;
    TabularPomdp::new(
        d,
        a.mu1() * (1.0 - t) + b.mu1() * t,
        (0..d.horizon - 1)
            .map(|h| (0..d.actions).map(|k| lerp(a.trans(h, k), b.trans(h, k))).collect())
            .collect(),
        (0..d.horizon).map(|h| lerp(a.emis(h), b.emis(h))).collect(),
        (0..d.horizon).map(|h| a.rewards(h).to_vec()).collect(),
    )
    .unwrap()
}

#[test]
fn product_error_is_decomposed() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for i in 0..10 {
        let truth = under(300 + i, 2);
        let other = under(400 + i, 2);
        let est = mix(&truth, &other, rng.random_range(0.05..0.4));
        let t = single_step_operators(&truth, DEFAULT_SVD_TOL).unwrap();
        let e = single_step_operators(&est, DEFAULT_SVD_TOL).unwrap();
        let pi = HistoryPolicy::random(truth.dims(), &mut rng);
        for h in 0..=t.steps() {
            let r = product_error_decomposition(&t, &e, &pi, h, EnumerationCap::default()).unwrap();
            assert!(r.lhs <= r.rhs + 1e-9, "h={h}: {r:?}");
        }
        let same = product_error_decomposition(&t, &t, &pi, 2, EnumerationCap::default()).unwrap();
        assert_eq!((same.lhs, same.rhs), (0.0, 0.0));
        let zero = product_error_decomposition(&t, &e, &pi, 0, EnumerationCap::default()).unwrap();
        assert_eq!(zero.lhs, (e.b0() - t.b0()).abs().sum());
    }
}

#[test]
fn overcomplete_product_error_is_decomposed() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for i in 0..10 {
        let truth = over(500 + i);
        let est = mix(&truth, &over(600 + i), rng.random_range(0.05..0.4));
        let t = multi_step_operators(&truth, 2, DEFAULT_SVD_TOL).unwrap();
        let e = multi_step_operators(&est, 2, DEFAULT_SVD_TOL).unwrap();
        let pi = HistoryPolicy::random(truth.dims(), &mut rng);
        for h in 0..=t.steps() {
            let r = product_error_decomposition(&t, &e, &pi, h, EnumerationCap::default()).unwrap();
            assert!(r.lhs <= r.rhs + 1e-9);
            assert!((r.prefactor - 2.0 * 3f64.sqrt() / r.alpha).abs() < 1e-12);
        }
    }
}
