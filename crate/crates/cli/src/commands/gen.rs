use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::Subcommand;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::GeneratorSpec;

#[derive(Debug, Clone, Subcommand)]
pub enum GenKind {
    /// Undercomplete combinatorial lock.
    LockUnder {
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long)]
        alpha: f64,
        /// Planted sequence, comma separated (random when omitted).
        #[arg(long, value_delimiter = ',')]
        good: Option<Vec<usize>>,
    },
    /// Overcomplete combinatorial lock.
    LockOver {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long, value_delimiter = ',')]
        good: Option<Vec<usize>>,
    },
    /// Random model rejection-sampled on its revealing margin.
    Random {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long)]
        observations: usize,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 0.0)]
        alpha_min: f64,
        #[arg(long, default_value_t = 1000)]
        max_tries: usize,
        #[arg(long, default_value_t = 1)]
        window: usize,
    },
    /// Block MDP with decodable observations.
    BlockMdp {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long)]
        observations: usize,
        #[arg(long)]
        horizon: usize,
    },
}

impl GenKind {
    pub fn spec(&self) -> GeneratorSpec {
        match self.clone() {
            GenKind::LockUnder {
                horizon,
                actions,
                alpha,
                good,
            } => GeneratorSpec::LockUnder {
                horizon,
                actions,
                alpha,
                good_actions: good,
            },
            GenKind::LockOver { m, actions, good } => GeneratorSpec::LockOver {
                m,
                actions,
                good_actions: good,
            },
            GenKind::Random {
                states,
                actions,
                observations,
                horizon,
                alpha_min,
                max_tries,
                window,
            } => GeneratorSpec::Random {
                states,
                actions,
                observations,
                horizon,
                alpha_min,
                max_tries,
                window,
            },
            GenKind::BlockMdp {
                states,
                actions,
                observations,
                horizon,
            } => GeneratorSpec::BlockMdp {
                states,
                actions,
                observations,
                horizon,
            },
        }
    }
}

/// Writes the generated model with the generator parameters and seed echoed
/// under `metadata`.
pub fn cmd_gen(kind: &GenKind, seed: u64, output: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let spec = kind.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = spec.build(&mut rng)?;
    let metadata = json!({ "generator": spec, "seed": seed });
    let text = model.to_json(Some(metadata));
    match output {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}
