use nalgebra::{DMatrix, DVector};

use super::operators::ObservableOperatorModel;
use crate::linalg::{l1, norm_11};
use crate::pomdp::{EnumerationCap, HistoryPolicy};
use crate::{Error, Result};

/// `||M||_{1,1} = sup_{|x|_1 <= 1} |Mx|_1`, the maximum absolute column sum.
pub fn operator_norm_11(matrix: &DMatrix<f64>) -> f64 {
    norm_11(matrix)
}

/// Both sides of the operator-product error decomposition at depth `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductErrorBound {
    /// `sum_{tau_h} |b_est(tau_h) - b(tau_h)|_1 * pi(tau_h)`
    pub lhs: f64,
    /// `prefactor * (sum_j sum_{tau_j} |(B_est_j - B_j) b(tau_{j-1})|_1 pi(tau_j) + |b0_est - b0|_1)`
    pub rhs: f64,
    /// `A^{m-1} sqrt(S) / alpha`
    pub prefactor: f64,
    pub alpha: f64,
}

/// Compares the error of operator products against the per-operator errors
/// projected on the true beliefs. `alpha` is the smaller of the two models'
/// revealing margins, so the amplification factor covers the estimated
/// operators that the decomposition propagates through.
pub fn product_error_decomposition(
    oom_true: &ObservableOperatorModel,
    oom_est: &ObservableOperatorModel,
    policy: &HistoryPolicy,
    h: usize,
    cap: EnumerationCap,
) -> Result<ProductErrorBound> {
    let d = oom_true.dims();
    if d != oom_est.dims() || oom_true.window() != oom_est.window() {
        return Err(Error::DimensionMismatch("operator models differ in dimensions or window".into()));
    }
    policy.check_compatible(&d)?;
    if h > oom_true.steps() {
        return Err(Error::InvalidParameter(format!("depth {h} exceeds H - m = {}", oom_true.steps())));
    }
    let prefixes = ((d.observations * d.actions) as u64).checked_pow(h as u32);
    if prefixes.is_none_or(|n| n > cap.0) {
        return Err(Error::EnumerationTooLarge {
            size: format!("({}*{})^{h}", d.observations, d.actions),
            cap: cap.0,
        });
    }
    let alpha = oom_true.margin().min(oom_est.margin());
    let prefactor = (d.actions as f64).powi(oom_true.window() as i32 - 1) * (d.states as f64).sqrt() / alpha;
    let mut acc = Acc { lhs: 0.0, op_err: 0.0 };
    walk(
        oom_true,
        oom_est,
        policy,
        h,
        0,
        oom_true.b0().clone(),
        oom_est.b0().clone(),
        1.0,
        0,
        &mut acc,
    );
    let b0_err = l1(&(oom_est.b0() - oom_true.b0()));
    if h == 0 {
        acc.lhs = b0_err;
    }
    Ok(ProductErrorBound {
        lhs: acc.lhs,
        rhs: prefactor * (acc.op_err + b0_err),
        prefactor,
        alpha,
    })
}

struct Acc {
    lhs: f64,
    op_err: f64,
}

#[allow(clippy::too_many_arguments)]
fn walk(
    t: &ObservableOperatorModel,
    e: &ObservableOperatorModel,
    policy: &HistoryPolicy,
    depth: usize,
    j: usize,
    b_true: DVector<f64>,
    b_est: DVector<f64>,
    pi_weight: f64,
    code: usize,
    acc: &mut Acc,
) {
    if j == depth {
        return;
    }
    let d = t.dims();
    for o in 0..d.observations {
        let hist = code * d.observations + o;
        for (a, &p) in policy.probs_at(j, hist).iter().enumerate() {
            let w = pi_weight * p;
            if w == 0.0 {
                continue;
            }
            let bt = t.op(j, o, a) * &b_true;
            let be = e.op(j, o, a) * &b_est;
            acc.op_err += l1(&(e.op(j, o, a) * &b_true - &bt)) * w;
            if j + 1 == depth {
                acc.lhs += l1(&(&be - &bt)) * w;
            } else {
                walk(t, e, policy, depth, j + 1, bt, be, w, hist * d.actions + a, acc);
            }
        }
    }
}
