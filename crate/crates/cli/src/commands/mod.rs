mod bench;
mod check;
mod eluder;
mod gen;
mod learn;
mod oracle;

use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Subcommand;

pub use bench::cmd_bench;
pub use check::cmd_check;
pub use eluder::cmd_eluder;
pub use gen::{cmd_gen, GenKind};
pub use learn::{cmd_learn, RunSummary, SeedSummary, SUMMARY_SCHEMA_VERSION, TRACE_HEADER};
pub use oracle::{cmd_oracle, PolicySpec};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a model file and report its revealing margins.
    Check {
        model: PathBuf,
        /// Also report the m-step margins for this window (repeatable).
        #[arg(long = "window", short = 'm')]
        windows: Vec<usize>,
    },
    /// Generate an instance as model JSON.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        /// Seed for random choices.
        #[arg(long, default_value_t = 0, global = true)]
        seed: u64,
        /// Output file (stdout when omitted).
        #[arg(long, short, global = true)]
        output: Option<PathBuf>,
    },
    /// Run a learning experiment from a TOML or JSON config.
    Learn {
        config: PathBuf,
        /// Output directory, overriding the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eluder dimensions of a finite function class.
    Eluder {
        class: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Comma-separated thresholds instead of the breakpoint grid.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Maximum prefix sets visited per threshold.
        #[arg(long, default_value_t = omle_core::eluder::DEFAULT_SEARCH_CAP)]
        cap: u64,
    },
    /// Compare operator-model probabilities against the forward algorithm.
    Oracle {
        model: PathBuf,
        /// uniform | random:<seed> | open-loop:<a1>,<a2>,...
        #[arg(long, default_value = "uniform")]
        policy: PolicySpec,
        #[arg(long, short = 'm', default_value_t = 1)]
        window: usize,
        /// Write the operator model as JSON here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Quick timings of the core kernels.
    Bench {
        #[arg(long, default_value_t = 20)]
        reps: usize,
    },
}

pub fn dispatch(cmd: Command, out: &mut dyn Write, _err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Check { model, windows } => cmd_check(&model, &windows, out),
        Command::Gen { kind, seed, output } => cmd_gen(&kind, seed, output.as_deref(), out),
        Command::Learn { config, out: dir } => cmd_learn(&config, dir.as_deref(), out, _err).map(|_| ()),
        Command::Eluder { class, eps, grid, cap } => cmd_eluder(&class, eps, grid.as_deref(), cap, out),
        Command::Oracle {
            model,
            policy,
            window,
            dump,
        } => cmd_oracle(&model, &policy, window, dump.as_deref(), out).map(|_| ()),
        Command::Bench { reps } => cmd_bench(reps, out),
    }
}

fn fmt_vec(v: impl IntoIterator<Item = f64>) -> String {
    let items: Vec<String> = v.into_iter().map(|x| format!("{x}")).collect();
    format!("[{}]", items.join(", "))
}
