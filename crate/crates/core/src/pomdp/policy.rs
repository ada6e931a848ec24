use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::model::{Dims, STOCHASTIC_TOL};
use crate::{Error, Result};

/// One observation-action pair of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub obs: usize,
    pub action: usize,
}

impl Step {
    pub fn new(obs: usize, action: usize) -> Self {
        Step { obs, action }
    }
}

/// A full trajectory `(o_1, a_1, ..., o_H, a_H)`. Hidden states are never
/// recorded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trajectory {
    steps: Vec<Step>,
}

impl Trajectory {
    pub fn new(steps: Vec<Step>) -> Self {
        Trajectory { steps }
    }

    /// Builds from `(obs, action)` pairs.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Self {
        Trajectory::new(pairs.iter().map(|&(o, a)| Step::new(o, a)).collect())
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Mixed-radix code: `(((o_1*A + a_1)*O + o_2)*A + a_2)...`.
    pub fn index(&self, dims: &Dims) -> usize {
        self.steps
            .iter()
            .fold(0, |acc, s| (acc * dims.observations + s.obs) * dims.actions + s.action)
    }

    /// Inverse of [`Trajectory::index`] for length-`H` trajectories.
    pub fn from_index(dims: &Dims, mut idx: usize) -> Self {
        let mut steps = vec![Step::new(0, 0); dims.horizon];
        for s in steps.iter_mut().rev() {
            s.action = idx % dims.actions;
            idx /= dims.actions;
            s.obs = idx % dims.observations;
            idx /= dims.observations;
        }
        Trajectory { steps }
    }

    /// Checks length and alphabet against `dims`.
    pub fn check(&self, dims: &Dims) -> Result<()> {
        if self.steps.len() != dims.horizon {
            return Err(Error::DimensionMismatch(format!(
                "trajectory has {} steps, horizon is {}",
                self.steps.len(),
                dims.horizon
            )));
        }
        check_prefix(self.steps(), dims)
    }
}

pub(crate) fn check_prefix(prefix: &[Step], dims: &Dims) -> Result<()> {
    if prefix.len() > dims.horizon {
        return Err(Error::DimensionMismatch(format!(
            "prefix of length {} exceeds horizon {}",
            prefix.len(),
            dims.horizon
        )));
    }
    for (h, s) in prefix.iter().enumerate() {
        if s.obs >= dims.observations || s.action >= dims.actions {
            return Err(Error::DimensionMismatch(format!(
                "step {h}: (o={}, a={}) outside O={} A={}",
                s.obs, s.action, dims.observations, dims.actions
            )));
        }
    }
    Ok(())
}

/// Index of history `(o_1, a_1, ..., o_h, a_h, obs)` within step `h`'s table.
pub(crate) fn history_index(dims: &Dims, prefix: &[Step], obs: usize) -> usize {
    let base = prefix
        .iter()
        .fold(0, |acc, s| (acc * dims.observations + s.obs) * dims.actions + s.action);
    base * dims.observations + obs
}

/// A tabular history-dependent stochastic policy. At step `h` the table
/// holds one action distribution per history `(o_1, a_1, ..., o_h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryPolicy {
    dims: Dims,
    // tables[h][history * A + a]
    tables: Vec<Vec<f64>>,
}

impl HistoryPolicy {
    /// Builds from raw tables, validating every action distribution.
    pub fn from_tables(dims: Dims, tables: Vec<Vec<f64>>) -> Result<Self> {
        if tables.len() != dims.horizon {
            return Err(Error::InvalidPolicy(format!(
                "{} step tables for horizon {}",
                tables.len(),
                dims.horizon
            )));
        }
        for (h, t) in tables.iter().enumerate() {
            let expected = dims.history_count(h) * dims.actions;
            if t.len() != expected {
                return Err(Error::InvalidPolicy(format!(
                    "step {h}: table has {} entries, expected {expected}",
                    t.len()
                )));
            }
            for (hist, dist) in t.chunks(dims.actions).enumerate() {
                let sum: f64 = dist.iter().sum();
                if dist.iter().any(|p| p.is_nan() || *p < 0.0) || (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::InvalidPolicy(format!(
                        "step {h} history {hist}: action distribution {dist:?} is not a probability vector"
                    )));
                }
            }
        }
        Ok(HistoryPolicy { dims, tables })
    }

    pub fn uniform(dims: Dims) -> Self {
        let p = 1.0 / dims.actions as f64;
        let tables = (0..dims.horizon)
            .map(|h| vec![p; dims.history_count(h) * dims.actions])
            .collect();
        HistoryPolicy { dims, tables }
    }

    /// Deterministic policy choosing `choose(step, history_index)`.
    pub fn deterministic(dims: Dims, mut choose: impl FnMut(usize, usize) -> usize) -> Self {
        let tables = (0..dims.horizon)
            .map(|h| {
                let n = dims.history_count(h);
                let mut t = vec![0.0; n * dims.actions];
                for hist in 0..n {
                    let a = choose(h, hist);
                    assert!(a < dims.actions, "action {a} out of range");
                    t[hist * dims.actions + a] = 1.0;
                }
                t
            })
            .collect();
        HistoryPolicy { dims, tables }
    }

    /// Plays `actions[h]` at step `h` whatever was observed. Missing trailing
    /// entries default to action 0.
    pub fn open_loop(dims: Dims, actions: &[usize]) -> Self {
        Self::deterministic(dims, |h, _| actions.get(h).copied().unwrap_or(0))
    }

    /// Action distributions drawn uniformly from the simplex.
    pub fn random<R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> Self {
        let tables = (0..dims.horizon)
            .map(|h| {
                let n = dims.history_count(h);
                let mut t = Vec::with_capacity(n * dims.actions);
                for _ in 0..n {
                    t.extend(random_simplex(dims.actions, rng));
                }
                t
            })
            .collect();
        HistoryPolicy { dims, tables }
    }

    pub fn random_deterministic<R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> Self {
        Self::deterministic(dims, |_, _| rng.random_range(0..dims.actions))
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Action distribution for the history `(prefix, obs)` at step `prefix.len()`.
    pub fn action_probs(&self, prefix: &[Step], obs: usize) -> &[f64] {
        self.probs_at(prefix.len(), history_index(&self.dims, prefix, obs))
    }

    pub(crate) fn probs_at(&self, step: usize, history: usize) -> &[f64] {
        let a = self.dims.actions;
        &self.tables[step][history * a..(history + 1) * a]
    }

    /// Flat action table of step `step`, laid out as `history * A + action`.
    pub fn table(&self, step: usize) -> &[f64] {
        &self.tables[step]
    }

    /// Checks that this policy is defined on `dims`' observation/action alphabet
    /// and horizon.
    pub fn check_compatible(&self, dims: &Dims) -> Result<()> {
        let p = self.dims;
        if p.actions != dims.actions || p.observations != dims.observations || p.horizon != dims.horizon {
            return Err(Error::DimensionMismatch(format!(
                "policy is over (O={}, A={}, H={}), model is (O={}, A={}, H={})",
                p.observations, p.actions, p.horizon, dims.observations, dims.actions, dims.horizon
            )));
        }
        Ok(())
    }
}

pub(crate) fn random_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= sum);
    // keep the sum within rounding of 1
    let tail: f64 = v[..n - 1].iter().sum();
    v[n - 1] = (1.0 - tail).max(0.0);
    v
}

/// `prod_{h' <= h} pi(a_{h'} | o_1, a_1, ..., o_{h'})` for a prefix of length `h`.
pub fn policy_probability(policy: &HistoryPolicy, prefix: &[Step]) -> f64 {
    let dims = policy.dims;
    let mut base = 0usize;
    let mut p = 1.0;
    for (h, s) in prefix.iter().enumerate() {
        let hist = base * dims.observations + s.obs;
        p *= policy.tables[h][hist * dims.actions + s.action];
        base = hist * dims.actions + s.action;
    }
    p
}

/// `pi_{1:h} o a o pi_{h+m:H}`: follows `base` for the first `h` steps, then
/// plays `action_seq` open loop, then resumes `base`.
pub fn policy_splice(base: &HistoryPolicy, h: usize, action_seq: &[usize]) -> Result<HistoryPolicy> {
    let dims = base.dims;
    if h + action_seq.len() > dims.horizon {
        return Err(Error::WindowOverflow {
            step: h,
            window: action_seq.len() + 1,
            horizon: dims.horizon,
        });
    }
    if let Some(&a) = action_seq.iter().find(|&&a| a >= dims.actions) {
        return Err(Error::InvalidParameter(format!("action {a} out of range A={}", dims.actions)));
    }
    let mut tables = base.tables.clone();
    for (offset, &a) in action_seq.iter().enumerate() {
        let t = &mut tables[h + offset];
        for dist in t.chunks_mut(dims.actions) {
            dist.fill(0.0);
            dist[a] = 1.0;
        }
    }
    Ok(HistoryPolicy { dims, tables })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dims() -> Dims {
        Dims::new(2, 2, 2, 3)
    }

    #[test]
    fn index_roundtrip() {
        let d = Dims::new(2, 3, 2, 3);
        for i in 0..d.trajectory_count().unwrap() as usize {
            assert_eq!(Trajectory::from_index(&d, i).index(&d), i);
        }
    }

    #[test]
    fn uniform_probability() {
        let pi = HistoryPolicy::uniform(dims());
        let t = Trajectory::from_pairs(&[(0, 1), (1, 0), (1, 1)]);
        assert_eq!(policy_probability(&pi, t.steps()), 0.125);
    }

    #[test]
    fn deterministic_matching_prefix() {
        let pi = HistoryPolicy::open_loop(dims(), &[1, 0, 1]);
        let t = Trajectory::from_pairs(&[(0, 1), (1, 0), (1, 1)]);
        assert_eq!(policy_probability(&pi, t.steps()), 1.0);
        let off = Trajectory::from_pairs(&[(0, 1), (1, 1), (1, 1)]);
        assert_eq!(policy_probability(&pi, off.steps()), 0.0);
    }

    #[test]
    fn mixed_policy_is_table_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = dims();
        let pi = HistoryPolicy::random(d, &mut rng);
        let t = Trajectory::from_pairs(&[(1, 0), (0, 1), (1, 1)]);
        // histories: step0 (o=1) -> 1; step1 (1,0,0) -> ((1*2+0)*2+0)=4; step2 (1,0,0,1,1) -> ((4*2+1)*2+1)=19
        let by_hand = pi.table(0)[2] * pi.table(1)[4 * 2 + 1] * pi.table(2)[19 * 2 + 1];
        assert_eq!(policy_probability(&pi, t.steps()), by_hand);
    }

    #[test]
    fn splice_at_zero_ignores_observations() {
        let d = dims();
        let base = HistoryPolicy::uniform(d);
        let s = policy_splice(&base, 0, &[1, 1]).unwrap();
        for o in 0..2 {
            assert_eq!(s.action_probs(&[], o), &[0.0, 1.0]);
            assert_eq!(s.action_probs(&[Step::new(o, 0)], 1 - o), &[0.0, 1.0]);
        }
        assert_eq!(s.action_probs(&[Step::new(0, 1), Step::new(1, 1)], 0), &[0.5, 0.5]);
    }

    #[test]
    fn empty_splice_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = HistoryPolicy::random(dims(), &mut rng);
        assert_eq!(policy_splice(&base, 2, &[]).unwrap(), base);
    }

    #[test]
    fn splice_factors_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = Dims::new(2, 2, 2, 4);
        let base = HistoryPolicy::random(d, &mut rng);
        let s = policy_splice(&base, 1, &[1, 0]).unwrap();
        let t = Trajectory::from_pairs(&[(1, 0), (0, 1), (1, 0), (0, 1)]);
        let st = t.steps();
        let head = policy_probability(&base, &st[..1]);
        let tail = base.action_probs(&st[..3], st[3].obs)[st[3].action];
        assert_eq!(policy_probability(&s, st), head * 1.0 * 1.0 * tail);
    }

    #[test]
    fn splice_overflow() {
        let base = HistoryPolicy::uniform(dims());
        assert!(matches!(policy_splice(&base, 2, &[0, 0]), Err(Error::WindowOverflow { .. })));
    }

    #[test]
    fn from_tables_rejects_bad_distribution() {
        let d = Dims::new(1, 2, 1, 1);
        assert!(HistoryPolicy::from_tables(d, vec![vec![0.5, 0.5]]).is_ok());
        assert!(HistoryPolicy::from_tables(d, vec![vec![0.5, 0.6]]).is_err());
        assert!(HistoryPolicy::from_tables(d, vec![vec![0.5, 0.5, 0.0]]).is_err());
    }
}
