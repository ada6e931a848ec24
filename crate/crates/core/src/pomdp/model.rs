use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on column sums of stochastic matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Cardinalities of a tabular POMDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub horizon: usize,
}

impl Dims {
    pub fn new(states: usize, actions: usize, observations: usize, horizon: usize) -> Self {
        Dims {
            states,
            actions,
            observations,
            horizon,
        }
    }

    /// `(O*A)^H`, or `None` on overflow.
    pub fn trajectory_count(&self) -> Option<u64> {
        let oa = (self.observations as u64).checked_mul(self.actions as u64)?;
        oa.checked_pow(u32::try_from(self.horizon).ok()?)
    }

    /// Number of histories `(o_1, a_1, ..., o_{step+1})` seen at `step`.
    pub fn history_count(&self, step: usize) -> usize {
        (self.observations * self.actions).pow(step as u32) * self.observations
    }

    pub fn is_undercomplete(&self) -> bool {
        self.states <= self.observations
    }
}

/// Read access to the raw kernels of a model. Implemented both for valid
/// POMDPs and for parameter vectors that only share their shape (such as an
/// optimistic discretization), so the forward expansion can run on either.
pub trait Kernels {
    fn dims(&self) -> Dims;
    fn mu1(&self) -> &DVector<f64>;
    /// `S x S`, column = current state. Defined for `step < H - 1`.
    fn trans(&self, step: usize, action: usize) -> &DMatrix<f64>;
    /// `O x S`, column = state.
    fn emis(&self, step: usize) -> &DMatrix<f64>;
}

/// A tabular episodic POMDP `(mu1, T, O, r)`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPomdp {
    dims: Dims,
    mu1: DVector<f64>,
    trans: Vec<Vec<DMatrix<f64>>>,
    emis: Vec<DMatrix<f64>>,
    rewards: Vec<Vec<f64>>,
}

impl TabularPomdp {
    /// Builds and validates a model. `trans[h][a]` is `S x S` for
    /// `h < H - 1`, `emis[h]` is `O x S` and `rewards[h][o]` lies in `[0, 1]`.
    pub fn new(
        dims: Dims,
        mu1: DVector<f64>,
        trans: Vec<Vec<DMatrix<f64>>>,
        emis: Vec<DMatrix<f64>>,
        rewards: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let model = TabularPomdp {
            dims,
            mu1,
            trans,
            emis,
            rewards,
        };
        model.check_shapes()?;
        model.validate()?;
        Ok(model)
    }

    fn check_shapes(&self) -> Result<()> {
        let Dims {
            states: s,
            actions: a,
            observations: o,
            horizon: h,
        } = self.dims;
        let bad = |what: &str, detail: String| {
            Err(Error::DimensionMismatch(format!("{what}: {detail}")))
        };
        if s == 0 || a == 0 || o == 0 || h == 0 {
            return bad("dims", format!("all cardinalities must be positive, got {:?}", self.dims));
        }
        if self.mu1.len() != s {
            return bad("mu1", format!("length {} != S={s}", self.mu1.len()));
        }
        if self.trans.len() != h - 1 {
            return bad("trans", format!("{} steps != H-1={}", self.trans.len(), h - 1));
        }
        for (step, per_action) in self.trans.iter().enumerate() {
            if per_action.len() != a {
                return bad(&format!("trans[{step}]"), format!("{} actions != A={a}", per_action.len()));
            }
            for (act, m) in per_action.iter().enumerate() {
                if m.shape() != (s, s) {
                    return bad(&format!("trans[{step}][{act}]"), format!("shape {:?} != ({s}, {s})", m.shape()));
                }
            }
        }
        if self.emis.len() != h {
            return bad("emis", format!("{} steps != H={h}", self.emis.len()));
        }
        for (step, m) in self.emis.iter().enumerate() {
            if m.shape() != (o, s) {
                return bad(&format!("emis[{step}]"), format!("shape {:?} != ({o}, {s})", m.shape()));
            }
        }
        if self.rewards.len() != h {
            return bad("rewards", format!("{} steps != H={h}", self.rewards.len()));
        }
        for (step, r) in self.rewards.iter().enumerate() {
            if r.len() != o {
                return bad(&format!("rewards[{step}]"), format!("length {} != O={o}", r.len()));
            }
        }
        Ok(())
    }

    /// Checks every stochasticity and reward-range invariant, reporting the
    /// first violation found.
    pub fn validate(&self) -> Result<()> {
        check_distribution("mu1", self.mu1.as_slice())?;
        for (step, per_action) in self.trans.iter().enumerate() {
            for (act, m) in per_action.iter().enumerate() {
                check_columns(&format!("trans[{step}][{act}]"), m)?;
            }
        }
        for (step, m) in self.emis.iter().enumerate() {
            check_columns(&format!("emis[{step}]"), m)?;
        }
        for (step, r) in self.rewards.iter().enumerate() {
            for (obs, &v) in r.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidModel {
                        location: format!("rewards[{step}][{obs}]"),
                        detail: format!("reward {v} outside [0, 1]"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn mu1(&self) -> &DVector<f64> {
        &self.mu1
    }

    pub fn trans(&self, step: usize, action: usize) -> &DMatrix<f64> {
        &self.trans[step][action]
    }

    pub fn emis(&self, step: usize) -> &DMatrix<f64> {
        &self.emis[step]
    }

    pub fn reward(&self, step: usize, obs: usize) -> f64 {
        self.rewards[step][obs]
    }

    pub fn rewards(&self, step: usize) -> &[f64] {
        &self.rewards[step]
    }

    pub(crate) fn all_trans(&self) -> &[Vec<DMatrix<f64>>] {
        &self.trans
    }

    pub(crate) fn all_emis(&self) -> &[DMatrix<f64>] {
        &self.emis
    }
}

impl Kernels for TabularPomdp {
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

fn check_distribution(location: &str, p: &[f64]) -> Result<()> {
    if let Some((i, &v)) = p.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
        return Err(Error::InvalidModel {
            location: format!("{location} entry {i}"),
            detail: format!("negative or NaN probability {v}"),
        });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidModel {
            location: location.to_string(),
            detail: format!("sums to {sum} (deviation {:e})", (sum - 1.0).abs()),
        });
    }
    Ok(())
}

fn check_columns(location: &str, m: &DMatrix<f64>) -> Result<()> {
    for (c, col) in m.column_iter().enumerate() {
        let col: Vec<f64> = col.iter().copied().collect();
        check_distribution(&format!("{location} column {c}"), &col)?;
    }
    Ok(())
}
