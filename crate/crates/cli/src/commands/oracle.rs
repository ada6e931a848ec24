use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use omle_core::linalg::spectral_norm;
use omle_core::oom::{
    multi_step_operators, operator_norm_11, single_step_operators, trajectory_probability_oom, DEFAULT_SVD_TOL,
};
use omle_core::pomdp::{trajectory_distribution, trajectory_probability_forward, Dims, HistoryPolicy, Trajectory};
use omle_core::{Error, TabularPomdp};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::default_cap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Uniform,
    Random(u64),
    OpenLoop(Vec<usize>),
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "uniform" {
            return Ok(PolicySpec::Uniform);
        }
        if let Some(seed) = s.strip_prefix("random:") {
            return seed.parse().map(PolicySpec::Random).map_err(|_| format!("bad seed in {s:?}"));
        }
        if let Some(list) = s.strip_prefix("open-loop:") {
            return list
                .split(',')
                .map(|a| a.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(PolicySpec::OpenLoop)
                .map_err(|_| format!("bad action list in {s:?}"));
        }
        Err(format!("policy must be uniform, random:<seed> or open-loop:<a1>,...; got {s:?}"))
    }
}

impl PolicySpec {
    pub fn build(&self, dims: Dims) -> Result<HistoryPolicy> {
        Ok(match self {
            PolicySpec::Uniform => HistoryPolicy::uniform(dims),
            PolicySpec::Random(seed) => HistoryPolicy::random(dims, &mut ChaCha8Rng::seed_from_u64(*seed)),
            PolicySpec::OpenLoop(actions) => {
                if actions.len() != dims.horizon || actions.iter().any(|&a| a >= dims.actions) {
                    return Err(Error::InvalidPolicy(format!(
                        "open-loop policy needs {} actions in 0..{}",
                        dims.horizon, dims.actions
                    ))
                    .into());
                }
                HistoryPolicy::open_loop(dims, actions)
            }
        })
    }
}

/// Numbers printed by the oracle command.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub window: usize,
    pub margin: f64,
    pub max_abs_deviation: f64,
    pub forward_total_deviation: f64,
    pub enumeration_total_deviation: f64,
    pub oom_total_deviation: f64,
    pub max_norm_11: f64,
    pub max_norm_2: f64,
    /// `sqrt(S) / alpha` (single-step) or `A^{m-1} sqrt(S) / alpha`.
    pub norm_11_reference: f64,
    /// `S / alpha`, single-step only.
    pub norm_2_bound: Option<f64>,
}

pub fn cmd_oracle(
    path: &Path,
    policy: &PolicySpec,
    window: usize,
    dump: Option<&Path>,
    out: &mut dyn Write,
) -> Result<OracleReport> {
    let model = TabularPomdp::load(path).with_context(|| format!("loading {}", path.display()))?;
    let d = model.dims();
    let cap = default_cap()?;
    let pi = policy.build(d)?;
    let oom = if window == 1 {
        single_step_operators(&model, DEFAULT_SVD_TOL).map_err(|e| match e {
            Error::RankDeficient { step, sigma, .. } => anyhow!(e).context(format!(
                "single-step revealing condition violated: sigma_S(O_h) = {sigma:e} at h = {step}"
            )),
            Error::Overcomplete { .. } => {
                anyhow!(e).context("single-step revealing condition needs S <= O; pass --window")
            }
            other => anyhow!(other),
        })?
    } else {
        multi_step_operators(&model, window, DEFAULT_SVD_TOL).map_err(|e| match e {
            Error::RankDeficient { step, sigma, .. } => anyhow!(e).context(format!(
                "{window}-step revealing condition violated: sigma_S(M_h) = {sigma:e} at h = {step}"
            )),
            other => anyhow!(other),
        })?
    };
    let dist = trajectory_distribution(&model, &pi, cap)?;
    let mut max_dev: f64 = 0.0;
    let (mut fwd_total, mut oom_total) = (0.0, 0.0);
    for i in 0..dist.len() {
        let t = Trajectory::from_index(&d, i);
        let p_fwd = trajectory_probability_forward(&model, &pi, &t);
        let p_oom = trajectory_probability_oom(&oom, &pi, &t)?;
        max_dev = max_dev.max((p_fwd - p_oom).abs());
        fwd_total += p_fwd;
        oom_total += p_oom;
    }
    let (mut n11, mut n2): (f64, f64) = (0.0, 0.0);
    for h in 0..oom.steps() {
        for b in oom.ops_at(h) {
            n11 = n11.max(operator_norm_11(b));
            n2 = n2.max(spectral_norm(b));
        }
    }
    let s = d.states as f64;
    let alpha = oom.margin();
    let report = OracleReport {
        window,
        margin: alpha,
        max_abs_deviation: max_dev,
        forward_total_deviation: (fwd_total - 1.0).abs(),
        enumeration_total_deviation: (dist.total() - 1.0).abs(),
        oom_total_deviation: (oom_total - 1.0).abs(),
        max_norm_11: n11,
        max_norm_2: n2,
        norm_11_reference: (d.actions as f64).powi(window as i32 - 1) * s.sqrt() / alpha,
        norm_2_bound: (window == 1).then_some(s / alpha),
    };
    writeln!(out, "window: {window}")?;
    writeln!(out, "margin: {alpha}")?;
    writeln!(out, "trajectories: {}", dist.len())?;
    writeln!(out, "max |P_oom - P_forward|: {:e}", report.max_abs_deviation)?;
    writeln!(out, "normalization deviation (forward): {:e}", report.forward_total_deviation)?;
    writeln!(out, "normalization deviation (enumeration): {:e}", report.enumeration_total_deviation)?;
    writeln!(out, "normalization deviation (oom): {:e}", report.oom_total_deviation)?;
    if let Some(b2) = report.norm_2_bound {
        let ok11 = n11 <= report.norm_11_reference + 1e-9;
        let ok2 = n2 <= b2 + 1e-9;
        writeln!(out, "max ||B||_11: {n11} (bound sqrt(S)/alpha = {}): {}", report.norm_11_reference, verdict(ok11))?;
        writeln!(out, "max ||B||_2: {n2} (bound S/alpha = {b2}): {}", verdict(ok2))?;
    } else {
        writeln!(out, "max ||B||_11: {n11} (A^(m-1) sqrt(S)/alpha = {})", report.norm_11_reference)?;
        writeln!(out, "max ||B||_2: {n2}")?;
    }
    if let Some(p) = dump {
        let text = serde_json::to_string_pretty(&oom.dump())?;
        std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
        writeln!(out, "dump: {}", p.display())?;
    }
    Ok(report)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "VIOLATED"
    }
}
