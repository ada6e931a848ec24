use nalgebra::{DMatrix, DVector};

use super::emission_action::build_m_step_matrix;
use crate::linalg::{min_right_singular_pair, sigma_k};
use crate::pomdp::TabularPomdp;
use crate::{Error, Result};

/// `sigma_S(O_h)` for every step. Requires `S <= O`.
pub fn weakly_revealing_margins(model: &TabularPomdp) -> Result<Vec<f64>> {
    let d = model.dims();
    if !d.is_undercomplete() {
        return Err(Error::Overcomplete {
            states: d.states,
            observations: d.observations,
        });
    }
    Ok((0..d.horizon).map(|h| sigma_k(model.emis(h), d.states)).collect())
}

/// `min_h sigma_S(O_h)`, the single-step revealing margin.
pub fn weakly_revealing_margin(model: &TabularPomdp) -> Result<f64> {
    Ok(weakly_revealing_margins(model)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// `sigma_S(M_h)` for `h = 0..=H-m`.
pub fn multistep_margins(model: &TabularPomdp, m: usize) -> Result<Vec<f64>> {
    let d = model.dims();
    if m == 0 || m > d.horizon {
        return Err(Error::InvalidParameter(format!("window m={m} must lie in 1..={}", d.horizon)));
    }
    (0..=d.horizon - m)
        .map(|h| Ok(sigma_k(&build_m_step_matrix(model, h, m)?.matrix, d.states)))
        .collect()
}

/// `min_{h} sigma_S(M_h)`, the m-step revealing margin.
pub fn multistep_revealing_margin(model: &TabularPomdp, m: usize) -> Result<f64> {
    Ok(multistep_margins(model, m)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// Two state distributions with disjoint supports that induce the same
/// observation distribution, built from a null vector `z` of `emis` as
/// `z+ / |z+|_1` and `z- / |z-|_1`. Returns `None` when `sigma_S > svd_tol`.
///
/// The sign of `z` is fixed so its first nonzero entry is positive, so the
/// first mixture always contains the lowest-index state in the support.
pub fn find_confusable_mixtures(emis: &DMatrix<f64>, svd_tol: f64) -> Option<(DVector<f64>, DVector<f64>)> {
    let (sigma, mut z) = min_right_singular_pair(emis);
    if sigma > svd_tol {
        return None;
    }
    let scale = z.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let cutoff = scale * 1e-12;
    if let Some(first) = z.iter().find(|x| x.abs() > cutoff) {
        if *first < 0.0 {
            z = -z;
        }
    }
    let plus = z.map(|x| if x > cutoff { x } else { 0.0 });
    let minus = z.map(|x| if x < -cutoff { -x } else { 0.0 });
    let (np, nm) = (plus.sum(), minus.sum());
    if np == 0.0 || nm == 0.0 {
        return None;
    }
    Some((plus / np, minus / nm))
}
