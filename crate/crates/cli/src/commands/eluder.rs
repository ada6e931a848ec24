use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use omle_core::eluder::{eluder_dimension, l2_eluder_dimension, FiniteFunctionClass};

pub fn cmd_eluder(path: &Path, eps: f64, grid: Option<&[f64]>, cap: u64, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let class = FiniteFunctionClass::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let l1 = eluder_dimension(&class, eps, grid, cap).context("l1 search")?;
    let l2 = l2_eluder_dimension(&class, eps, grid, cap).context("l2 search")?;
    writeln!(out, "l1 dimension: {}", l1.dimension)?;
    writeln!(out, "l1 eps': {}", l1.eps_prime)?;
    writeln!(out, "l1 witness: {:?}", l1.witness)?;
    writeln!(out, "l2 dimension: {}", l2.dimension)?;
    writeln!(out, "l2 eps': {}", l2.eps_prime)?;
    writeln!(out, "l2 witness: {:?}", l2.witness)?;
    if l1.dimension > l2.dimension {
        bail!("l1 dimension {} exceeds l2 dimension {}", l1.dimension, l2.dimension);
    }
    writeln!(out, "l1 <= l2: ok")?;
    Ok(())
}
