use crate::{Error, Result};

/// Confidence radius
/// `c (H (S^2 A + S O) ln(S A O H K) + ln(K / delta))` for `m = 1` and
/// `c (H (S^2 A + S O) ln(S A O H) + ln(K H A^m / delta))` for `m > 1`.
#[allow(clippy::too_many_arguments)]
pub fn beta_default(
    states: usize,
    actions: usize,
    observations: usize,
    horizon: usize,
    episodes: usize,
    delta: f64,
    c: f64,
    m: usize,
) -> Result<f64> {
    if [states, actions, observations, horizon, episodes, m].contains(&0) {
        return Err(Error::InvalidParameter("S, A, O, H, K and m must be positive".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta={delta} must lie in (0, 1]")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c={c} must be finite and nonnegative")));
    }
    let (s, a, o, h, k) = (
        states as f64,
        actions as f64,
        observations as f64,
        horizon as f64,
        episodes as f64,
    );
    let complexity = h * (s * s * a + s * o);
    let value = if m == 1 {
        complexity * (s * a * o * h * k).ln() + (k / delta).ln()
    } else {
        complexity * (s * a * o * h).ln() + (k * h * a.powi(m as i32) / delta).ln()
    };
    Ok(c * value)
}
