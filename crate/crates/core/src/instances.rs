//! Hard-instance generators (combinatorial locks) and benign random families.
//!
//! Lock states are numbered `2 * stage + j` with `j = 0` the good state and
//! `j = 1` the bad one. The start state is the stage-0 good state, the last
//! stage is absorbing.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::oom::{multistep_revealing_margin, weakly_revealing_margin};
use crate::pomdp::policy::random_simplex;
use crate::pomdp::{Dims, TabularPomdp};
use crate::{Error, Result};

/// Which lower-bound construction a [`LockSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum LockVariant {
    /// `2H` states, `2H + 1` observations, revealing parameter `alpha`.
    Undercomplete { alpha: f64 },
    /// `2m` states, 3 observations, horizon `m`.
    Overcomplete,
}

/// Parameters of a combinatorial lock. `good_actions = None` plants a
/// random sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockSpec {
    #[serde(flatten)]
    pub variant: LockVariant,
    pub depth: usize,
    pub actions: usize,
    #[serde(default)]
    pub good_actions: Option<Vec<usize>>,
}

impl LockSpec {
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TabularPomdp> {
        let good = self.good_actions.as_deref();
        match self.variant {
            LockVariant::Undercomplete { alpha } => combinatorial_lock_under(self.depth, self.actions, alpha, good, rng),
            LockVariant::Overcomplete => combinatorial_lock_over(self.depth, self.actions, good, rng),
        }
    }

    /// All sibling locks, one per planted sequence, in lexicographic order.
    pub fn family(&self) -> Result<Vec<TabularPomdp>> {
        match self.variant {
            LockVariant::Undercomplete { alpha } => lock_family_under(self.depth, self.actions, alpha),
            LockVariant::Overcomplete => lock_family_over(self.depth, self.actions),
        }
    }
}

fn resolve_good_actions<R: Rng + ?Sized>(
    depth: usize,
    actions: usize,
    good: Option<&[usize]>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if actions == 0 {
        return Err(Error::InvalidParameter("lock needs at least one action".into()));
    }
    match good {
        Some(g) => {
            if g.len() != depth - 1 {
                return Err(Error::InvalidParameter(format!(
                    "good action sequence has length {}, expected {}",
                    g.len(),
                    depth - 1
                )));
            }
            if let Some(&bad) = g.iter().find(|&&a| a >= actions) {
                return Err(Error::InvalidParameter(format!("good action {bad} out of range for A={actions}")));
            }
            Ok(g.to_vec())
        }
        None => Ok((0..depth - 1).map(|_| rng.random_range(0..actions)).collect()),
    }
}

/// Deterministic lock transitions shared by both variants: the planted
/// action keeps a good state good, anything else falls to the bad chain.
#[allow(clippy::needless_range_loop)]
fn lock_transitions(depth: usize, actions: usize, good: &[usize]) -> Vec<Vec<DMatrix<f64>>> {
    let s = 2 * depth;
    (0..depth - 1)
        .map(|_| {
            (0..actions)
                .map(|a| {
                    let mut t = DMatrix::zeros(s, s);
                    for stage in 0..depth {
                        for j in 0..2 {
                            let from = 2 * stage + j;
                            let to = if stage + 1 == depth {
                                from
                            } else if j == 0 && a == good[stage] {
                                2 * (stage + 1)
                            } else {
                                2 * (stage + 1) + 1
                            };
                            t[(to, from)] = 1.0;
                        }
                    }
                    t
                })
                .collect()
        })
        .collect()
}

fn start_state(s: usize) -> DVector<f64> {
    let mut mu1 = DVector::zeros(s);
    mu1[0] = 1.0;
    mu1
}

/// Undercomplete lock of depth `H`. Each state emits its own observation
/// with probability `alpha` and the shared dummy otherwise; the final good
/// state always emits its own (rewarding) observation.
pub fn combinatorial_lock_under<R: Rng + ?Sized>(
    horizon: usize,
    actions: usize,
    alpha: f64,
    good_actions: Option<&[usize]>,
    rng: &mut R,
) -> Result<TabularPomdp> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidParameter(format!("alpha={alpha} must lie in (0, 1/2]")));
    }
    if horizon < 2 {
        return Err(Error::InvalidParameter(format!("lock depth must be at least 2, got {horizon}")));
    }
    let good = resolve_good_actions(horizon, actions, good_actions, rng)?;
    let (s, o) = (2 * horizon, 2 * horizon + 1);
    let dummy = 2 * horizon;
    let jackpot = 2 * (horizon - 1);
    let mut emis = DMatrix::zeros(o, s);
    for st in 0..s {
        if st == jackpot {
            emis[(st, st)] = 1.0;
        } else {
            emis[(st, st)] = alpha;
            emis[(dummy, st)] = 1.0 - alpha;
        }
    }
    let mut reward = vec![0.0; o];
    reward[jackpot] = 1.0;
    TabularPomdp::new(
        Dims::new(s, actions, o, horizon),
        start_state(s),
        lock_transitions(horizon, actions, &good),
        vec![emis; horizon],
        vec![reward; horizon],
    )
}

/// Observation ids of the overcomplete lock.
pub const OVER_DUMMY: usize = 0;
pub const OVER_REWARD: usize = 1;
pub const OVER_NO_REWARD: usize = 2;

/// Overcomplete lock with `2m` states, 3 observations and horizon `m`: only
/// the final observation says whether the planted sequence was played.
pub fn combinatorial_lock_over<R: Rng + ?Sized>(
    m: usize,
    actions: usize,
    good_actions: Option<&[usize]>,
    rng: &mut R,
) -> Result<TabularPomdp> {
    if m == 0 {
        return Err(Error::InvalidParameter("lock depth must be positive".into()));
    }
    let good = resolve_good_actions(m, actions, good_actions, rng)?;
    let s = 2 * m;
    let mut emis = DMatrix::zeros(3, s);
    for stage in 0..m {
        if stage + 1 == m {
            emis[(OVER_REWARD, 2 * stage)] = 1.0;
            emis[(OVER_NO_REWARD, 2 * stage + 1)] = 1.0;
        } else {
            emis[(OVER_DUMMY, 2 * stage)] = 1.0;
            emis[(OVER_DUMMY, 2 * stage + 1)] = 1.0;
        }
    }
    TabularPomdp::new(
        Dims::new(s, actions, 3, m),
        start_state(s),
        lock_transitions(m, actions, &good),
        vec![emis; m],
        vec![vec![0.0, 1.0, 0.0]; m],
    )
}

/// Decodes a family index into the planted sequence (earliest action most
/// significant).
pub fn good_actions_of(index: usize, depth: usize, actions: usize) -> Vec<usize> {
    crate::oom::decode_digits(index, actions, depth - 1)
}

/// All `A^{H-1}` undercomplete locks, ordered by planted sequence.
pub fn lock_family_under(horizon: usize, actions: usize, alpha: f64) -> Result<Vec<TabularPomdp>> {
    let n = family_size(horizon, actions)?;
    let mut rng = rand::rng();
    (0..n)
        .map(|i| combinatorial_lock_under(horizon, actions, alpha, Some(&good_actions_of(i, horizon, actions)), &mut rng))
        .collect()
}

/// All `A^{m-1}` overcomplete locks, ordered by planted sequence.
pub fn lock_family_over(m: usize, actions: usize) -> Result<Vec<TabularPomdp>> {
    let n = family_size(m, actions)?;
    let mut rng = rand::rng();
    (0..n)
        .map(|i| combinatorial_lock_over(m, actions, Some(&good_actions_of(i, m, actions)), &mut rng))
        .collect()
}

fn family_size(depth: usize, actions: usize) -> Result<usize> {
    if depth == 0 || actions == 0 {
        return Err(Error::InvalidParameter("lock family needs depth and actions >= 1".into()));
    }
    actions
        .checked_pow(depth as u32 - 1)
        .filter(|&n| n <= 1 << 20)
        .ok_or_else(|| Error::InvalidParameter(format!("lock family A^(depth-1) = {actions}^{} is too large", depth - 1)))
}

fn random_columns<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for c in 0..cols {
        for (r, p) in random_simplex(rows, rng).into_iter().enumerate() {
            m[(r, c)] = p;
        }
    }
    m
}

fn random_model<R: Rng + ?Sized>(d: Dims, rng: &mut R) -> Result<TabularPomdp> {
    let mu1 = DVector::from_vec(random_simplex(d.states, rng));
    let trans = (0..d.horizon.saturating_sub(1))
        .map(|_| (0..d.actions).map(|_| random_columns(d.states, d.states, rng)).collect())
        .collect();
    let emis = (0..d.horizon).map(|_| random_columns(d.observations, d.states, rng)).collect();
    let rewards = (0..d.horizon)
        .map(|_| (0..d.observations).map(|_| rng.random::<f64>()).collect())
        .collect();
    TabularPomdp::new(d, mu1, trans, emis, rewards)
}

fn check_positive(d: &Dims) -> Result<()> {
    if d.states == 0 || d.actions == 0 || d.observations == 0 || d.horizon == 0 {
        return Err(Error::InvalidParameter(format!("all of S, A, O, H must be positive, got {d:?}")));
    }
    Ok(())
}

fn rejection_sample<R: Rng + ?Sized>(
    d: Dims,
    alpha_min: f64,
    max_tries: usize,
    rng: &mut R,
    margin: impl Fn(&TabularPomdp) -> Result<f64>,
) -> Result<(TabularPomdp, f64)> {
    check_positive(&d)?;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..max_tries {
        let model = random_model(d, rng)?;
        let sigma = margin(&model)?;
        if sigma >= alpha_min {
            return Ok((model, sigma));
        }
        best = best.max(sigma);
    }
    Err(Error::GeneratorExhausted {
        tries: max_tries,
        best_margin: best,
        alpha_min,
    })
}

/// Random model with Dirichlet(1) columns and uniform rewards, redrawn until
/// its single-step revealing margin reaches `alpha_min`. Returns the model
/// and its margin.
pub fn random_weakly_revealing<R: Rng + ?Sized>(
    states: usize,
    actions: usize,
    observations: usize,
    horizon: usize,
    alpha_min: f64,
    max_tries: usize,
    rng: &mut R,
) -> Result<(TabularPomdp, f64)> {
    if states > observations {
        return Err(Error::Overcomplete { states, observations });
    }
    let d = Dims::new(states, actions, observations, horizon);
    rejection_sample(d, alpha_min, max_tries, rng, weakly_revealing_margin)
}

/// Like [`random_weakly_revealing`] but gated on the `m`-step margin, so
/// overcomplete shapes are allowed.
#[allow(clippy::too_many_arguments)]
pub fn random_multistep_revealing<R: Rng + ?Sized>(
    states: usize,
    actions: usize,
    observations: usize,
    horizon: usize,
    m: usize,
    alpha_min: f64,
    max_tries: usize,
    rng: &mut R,
) -> Result<(TabularPomdp, f64)> {
    let d = Dims::new(states, actions, observations, horizon);
    rejection_sample(d, alpha_min, max_tries, rng, |model| multistep_revealing_margin(model, m))
}

/// Block MDP: the observations are split into `S` nonempty blocks and each
/// state emits only from its own block, so the state is decodable from any
/// observation. Transitions, emissions within blocks and rewards are random.
pub fn block_mdp<R: Rng + ?Sized>(
    states: usize,
    actions: usize,
    observations: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<TabularPomdp> {
    let d = Dims::new(states, actions, observations, horizon);
    check_positive(&d)?;
    if observations < states {
        return Err(Error::InvalidParameter(format!(
            "block MDP needs O >= S, got O={observations} < S={states}"
        )));
    }
    let mut owner: Vec<usize> = (0..states)
        .chain((states..observations).map(|_| rng.random_range(0..states)))
        .collect();
    owner.shuffle(rng);
    let mut base = random_model(d, rng)?;
    let emis = (0..horizon)
        .map(|_| {
            let mut e = DMatrix::zeros(observations, states);
            for s in 0..states {
                let block: Vec<usize> = (0..observations).filter(|&o| owner[o] == s).collect();
                // strictly positive weights within the block
                let w: Vec<f64> = random_simplex(block.len(), rng).iter().map(|p| p + 1e-3).collect();
                let total: f64 = w.iter().sum();
                let mut acc = 0.0;
                for (i, &o) in block.iter().enumerate() {
                    let p = if i + 1 == block.len() { 1.0 - acc } else { w[i] / total };
                    e[(o, s)] = p;
                    acc += p;
                }
            }
            e
        })
        .collect();
    base = TabularPomdp::new(
        d,
        base.mu1().clone(),
        base.all_trans().to_vec(),
        emis,
        (0..horizon).map(|h| base.rewards(h).to_vec()).collect(),
    )?;
    Ok(base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oom::build_m_step_matrix;
    use crate::pomdp::{policy_value, HistoryPolicy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn under_lock_margin_is_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(h, alpha) in &[(2, 0.5), (3, 0.3), (4, 0.1)] {
            let m = combinatorial_lock_under(h, 2, alpha, None, &mut rng).unwrap();
            let sigma = weakly_revealing_margin(&m).unwrap();
            assert!((sigma - alpha).abs() < 1e-12, "H={h}: {sigma}");
        }
    }

    #[test]
    fn under_lock_rejects_alpha_out_of_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(combinatorial_lock_under(3, 2, 0.0, None, &mut rng).is_err());
        assert!(combinatorial_lock_under(3, 2, 0.51, None, &mut rng).is_err());
        assert!(combinatorial_lock_under(3, 2, 0.5, Some(&[0, 2]), &mut rng).is_err());
    }

    #[test]
    fn planted_sequence_has_value_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = combinatorial_lock_under(3, 2, 0.3, Some(&[1, 0]), &mut rng).unwrap();
        let pi = HistoryPolicy::open_loop(m.dims(), &[1, 0, 0]);
        assert!((policy_value(&m, &pi).unwrap() - 1.0).abs() < 1e-12);
        let off = HistoryPolicy::open_loop(m.dims(), &[1, 1, 0]);
        assert_eq!(policy_value(&m, &off).unwrap(), 0.0);
    }

    #[test]
    fn over_lock_matrix_is_binary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = combinatorial_lock_over(3, 2, None, &mut rng).unwrap();
        assert!(m.dims().observations < m.dims().states);
        let mm = build_m_step_matrix(&m, 0, 3).unwrap().matrix;
        assert!(mm.iter().all(|&x| x == 0.0 || x == 1.0));
        assert!(multistep_revealing_margin(&m, 3).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn families_are_ordered_lexicographically() {
        assert_eq!(good_actions_of(5, 3, 3), vec![1, 2]);
        let fam = lock_family_over(3, 2).unwrap();
        assert_eq!(fam.len(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(fam[2], combinatorial_lock_over(3, 2, Some(&[1, 0]), &mut rng).unwrap());
    }

    #[test]
    fn spec_roundtrip() {
        let spec: LockSpec =
            serde_json::from_str(r#"{"variant":"undercomplete","alpha":0.3,"depth":3,"actions":2}"#).unwrap();
        assert_eq!(spec.variant, LockVariant::Undercomplete { alpha: 0.3 });
        assert_eq!(spec.family().unwrap().len(), 4);
    }

    #[test]
    fn zero_threshold_takes_first_draw() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let (m1, _) = random_weakly_revealing(2, 2, 3, 2, 0.0, 1, &mut a).unwrap();
        let m2 = random_model(Dims::new(2, 2, 3, 2), &mut b).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn impossible_threshold_exhausts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        match random_weakly_revealing(2, 2, 3, 2, 2.0, 5, &mut rng) {
            Err(Error::GeneratorExhausted { tries: 5, best_margin, .. }) => assert!(best_margin < 2.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn block_mdp_is_decodable() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = block_mdp(3, 2, 7, 3, &mut rng).unwrap();
        for h in 0..3 {
            for o in 0..7 {
                let owners = (0..3).filter(|&s| m.emis(h)[(o, s)] > 0.0).count();
                assert_eq!(owners, 1);
            }
        }
        assert!(weakly_revealing_margin(&m).unwrap() >= 1.0 / 7f64.sqrt() - 1e-12);
    }
}
