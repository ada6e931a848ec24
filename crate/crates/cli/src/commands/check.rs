use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use omle_core::linalg::sigma_k;
use omle_core::oom::{find_confusable_mixtures, multistep_margins, weakly_revealing_margins, DEFAULT_SVD_TOL};
use omle_core::TabularPomdp;

use super::fmt_vec;

pub fn cmd_check(path: &Path, windows: &[usize], out: &mut dyn Write) -> Result<()> {
    let model = TabularPomdp::load(path).with_context(|| format!("loading {}", path.display()))?;
    let d = model.dims();
    writeln!(out, "model: {}", path.display())?;
    writeln!(out, "dims: S={} A={} O={} H={}", d.states, d.actions, d.observations, d.horizon)?;
    writeln!(out, "valid: yes")?;
    if d.is_undercomplete() {
        let margins = weakly_revealing_margins(&model)?;
        let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
        writeln!(out, "single-step margin: {min}")?;
        writeln!(out, "single-step margins by step: {}", fmt_vec(margins))?;
    } else {
        writeln!(
            out,
            "single-step margin: n/a (S={} > O={}: overcomplete, use --window)",
            d.states, d.observations
        )?;
    }
    for h in 0..d.horizon {
        let emis = model.emis(h);
        if sigma_k(emis, d.states) <= DEFAULT_SVD_TOL {
            if let Some((nu1, nu2)) = find_confusable_mixtures(emis, DEFAULT_SVD_TOL) {
                writeln!(out, "confusable mixtures at h={h}:")?;
                writeln!(out, "  nu1: {}", fmt_vec(nu1.iter().copied()))?;
                writeln!(out, "  nu2: {}", fmt_vec(nu2.iter().copied()))?;
            }
        }
    }
    for &m in windows {
        let margins = multistep_margins(&model, m)?;
        let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
        writeln!(out, "window {m} margin: {min}")?;
        writeln!(out, "window {m} margins by step: {}", fmt_vec(margins))?;
    }
    Ok(())
}
