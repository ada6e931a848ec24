use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::emission_action::{build_m_step_matrix, window_row};
use crate::linalg::{pseudo_inverse, sigma_k};
use crate::pomdp::{policy_probability, Dims, HistoryPolicy, Step, TabularPomdp, Trajectory};
use crate::{Error, Result};

/// Singular values at or below this are truncated in pseudo-inverses.
pub const DEFAULT_SVD_TOL: f64 = 1e-10;

/// Operators `B_h(o, a)` for `h < H - m` and the initial vector `b0`, of
/// dimension `A^{m-1} O^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableOperatorModel {
    dims: Dims,
    window: usize,
    margin: f64,
    b0: DVector<f64>,
    // ops[h][o * A + a]
    ops: Vec<Vec<DMatrix<f64>>>,
}

impl ObservableOperatorModel {
    /// Operator dimension `A^{m-1} O^m`.
    pub fn dim(&self) -> usize {
        self.b0.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Dimensions of the POMDP the operators came from.
    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Revealing margin of the source model (`min_h sigma_S(M_h)`).
    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn b0(&self) -> &DVector<f64> {
        &self.b0
    }

    /// Number of operator steps, `H - m`.
    pub fn steps(&self) -> usize {
        self.ops.len()
    }

    pub fn op(&self, h: usize, obs: usize, action: usize) -> &DMatrix<f64> {
        &self.ops[h][obs * self.dims.actions + action]
    }

    /// All operators of step `h`, indexed by `o * A + a`.
    pub fn ops_at(&self, h: usize) -> &[DMatrix<f64>] {
        &self.ops[h]
    }

    pub fn dump(&self) -> OomDump {
        OomDump {
            dim: self.dim(),
            m: self.window,
            b0: self.b0.iter().copied().collect(),
            ops: self
                .ops
                .iter()
                .map(|per| {
                    per.iter()
                        .map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

/// Debug dump of an OOM. Not a stable format.
#[derive(Debug, Clone, Serialize)]
pub struct OomDump {
    pub dim: usize,
    pub m: usize,
    pub b0: Vec<f64>,
    /// `ops[h][o * A + a][row][col]`
    pub ops: Vec<Vec<Vec<Vec<f64>>>>,
}

/// Single-step operators `B_h(o,a) = O_{h+1} T_{h,a} diag(O_h(o|.)) O_h^+`,
/// `b0 = O_1 mu1`. Needs an undercomplete model with full-column-rank
/// emissions.
pub fn single_step_operators(model: &TabularPomdp, svd_tol: f64) -> Result<ObservableOperatorModel> {
    let d = model.dims();
    if !d.is_undercomplete() {
        return Err(Error::Overcomplete {
            states: d.states,
            observations: d.observations,
        });
    }
    multi_step_operators(model, 1, svd_tol)
}

/// m-step operators `B_h(o,a) = M_{h+1} T_{h,a} diag(O_h(o|.)) M_h^+`,
/// `b0 = M_1 mu1`.
pub fn multi_step_operators(model: &TabularPomdp, m: usize, svd_tol: f64) -> Result<ObservableOperatorModel> {
    let d = model.dims();
    if m == 0 || m > d.horizon {
        return Err(Error::InvalidParameter(format!("window m={m} must lie in 1..={}", d.horizon)));
    }
    let mats = (0..=d.horizon - m)
        .map(|h| build_m_step_matrix(model, h, m).map(|x| x.matrix))
        .collect::<Result<Vec<_>>>()?;
    let mut margin = f64::INFINITY;
    for (h, mh) in mats.iter().enumerate() {
        let sigma = sigma_k(mh, d.states);
        if sigma <= svd_tol {
            return Err(Error::RankDeficient { step: h, sigma, tol: svd_tol });
        }
        margin = margin.min(sigma);
    }
    let mut ops = Vec::with_capacity(d.horizon - m);
    for h in 0..d.horizon - m {
        let pinv = pseudo_inverse(&mats[h], svd_tol);
        let mut per = Vec::with_capacity(d.observations * d.actions);
        for o in 0..d.observations {
            // diag(O_h(o|.)) M_h^+ scales the rows of the pseudo-inverse
            let mut scaled = pinv.clone();
            for (s, mut row) in scaled.row_iter_mut().enumerate() {
                row *= model.emis(h)[(o, s)];
            }
            for a in 0..d.actions {
                per.push(&mats[h + 1] * (model.trans(h, a) * &scaled));
            }
        }
        ops.push(per);
    }
    Ok(ObservableOperatorModel {
        dims: d,
        window: m,
        margin,
        b0: &mats[0] * model.mu1(),
        ops,
    })
}

fn check_alphabet(oom: &ObservableOperatorModel, policy: &HistoryPolicy, steps: &[Step]) -> Result<()> {
    policy.check_compatible(&oom.dims)?;
    crate::pomdp::policy::check_prefix(steps, &oom.dims)
}

/// `b(tau_h) = B_h(o_h, a_h) ... B_1(o_1, a_1) b0` for a prefix of length
/// `h <= H - m`.
pub fn belief_vector(oom: &ObservableOperatorModel, prefix: &[Step]) -> Result<DVector<f64>> {
    crate::pomdp::policy::check_prefix(prefix, &oom.dims)?;
    if prefix.len() > oom.steps() {
        return Err(Error::InvalidParameter(format!(
            "prefix length {} exceeds H - m = {}",
            prefix.len(),
            oom.steps()
        )));
    }
    Ok(apply_ops(oom, prefix))
}

pub(crate) fn apply_ops(oom: &ObservableOperatorModel, prefix: &[Step]) -> DVector<f64> {
    prefix
        .iter()
        .enumerate()
        .fold(oom.b0.clone(), |b, (h, s)| oom.op(h, s.obs, s.action) * b)
}

/// `P(tau) = pi(tau) * e_u^T B_{H-m} ... B_1 b0`, where `u` is the final
/// window of `m` observations and the `m-1` actions between them. Raw
/// floating-point values are returned, including tiny negatives.
pub fn trajectory_probability_oom(
    oom: &ObservableOperatorModel,
    policy: &HistoryPolicy,
    traj: &Trajectory,
) -> Result<f64> {
    let steps = traj.steps();
    if steps.len() != oom.dims.horizon {
        return Err(Error::DimensionMismatch(format!(
            "trajectory has {} steps, horizon is {}",
            steps.len(),
            oom.dims.horizon
        )));
    }
    check_alphabet(oom, policy, steps)?;
    let split = oom.steps();
    let b = apply_ops(oom, &steps[..split]);
    let window = &steps[split..];
    let acts: Vec<usize> = window[..window.len() - 1].iter().map(|s| s.action).collect();
    let obs: Vec<usize> = window.iter().map(|s| s.obs).collect();
    let row = window_row(oom.dims.actions, oom.dims.observations, &acts, &obs);
    Ok(policy_probability(policy, steps) * b[row])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::{trajectory_probability_forward, EnumerationCap};

    fn two_state_identity() -> TabularPomdp {
        TabularPomdp::new(
            Dims::new(2, 2, 2, 2),
            DVector::from_element(2, 0.5),
            vec![vec![
                DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.1, 0.8]),
                DMatrix::from_row_slice(2, 2, &[0.3, 0.6, 0.7, 0.4]),
            ]],
            vec![DMatrix::identity(2, 2); 2],
            vec![vec![0.0, 1.0]; 2],
        )
        .unwrap()
    }

    #[test]
    fn b0_is_first_observation_distribution() {
        let oom = single_step_operators(&two_state_identity(), DEFAULT_SVD_TOL).unwrap();
        assert_eq!(oom.b0().as_slice(), &[0.5, 0.5]);
        assert_eq!(oom.dim(), 2);
    }

    #[test]
    fn identity_emission_operators_match_formula() {
        let m = two_state_identity();
        let oom = single_step_operators(&m, DEFAULT_SVD_TOL).unwrap();
        for o in 0..2 {
            for a in 0..2 {
                let b = oom.op(0, o, a);
                for s in 0..2 {
                    for r in 0..2 {
                        let expected = m.trans(0, a)[(r, s)] * m.emis(0)[(o, s)];
                        assert!((b[(r, s)] - expected).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn one_step_horizon_probability_is_b0_times_policy() {
        let m = TabularPomdp::new(
            Dims::new(2, 2, 3, 1),
            DVector::from_vec(vec![0.25, 0.75]),
            vec![],
            vec![DMatrix::from_row_slice(3, 2, &[0.5, 0.1, 0.3, 0.2, 0.2, 0.7])],
            vec![vec![0.0; 3]],
        )
        .unwrap();
        let oom = single_step_operators(&m, DEFAULT_SVD_TOL).unwrap();
        let pi = HistoryPolicy::uniform(m.dims());
        let t = Trajectory::from_pairs(&[(2, 1)]);
        let p = trajectory_probability_oom(&oom, &pi, &t).unwrap();
        assert_eq!(p, 0.5 * oom.b0()[2]);
        let _ = EnumerationCap::default();
        assert!((p - trajectory_probability_forward(&m, &pi, &t)).abs() < 1e-15);
    }

    #[test]
    fn rank_deficient_emission_is_reported_with_step() {
        let m = TabularPomdp::new(
            Dims::new(2, 1, 2, 2),
            DVector::from_element(2, 0.5),
            vec![vec![DMatrix::identity(2, 2)]],
            vec![DMatrix::identity(2, 2), DMatrix::from_element(2, 2, 0.5)],
            vec![vec![0.0; 2]; 2],
        )
        .unwrap();
        match single_step_operators(&m, DEFAULT_SVD_TOL) {
            Err(Error::RankDeficient { step, sigma, .. }) => {
                assert_eq!(step, 1);
                assert!(sigma < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_prefix_belief_is_b0() {
        let oom = single_step_operators(&two_state_identity(), DEFAULT_SVD_TOL).unwrap();
        assert_eq!(&belief_vector(&oom, &[]).unwrap(), oom.b0());
    }
}
