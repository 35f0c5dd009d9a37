//! `mlfield` — configuration-driven experiment runner for the point-charge
//! ensemble laboratory. Every run writes `<out>.csv`, `<out>.report.json` and
//! `<out>.manifest.json`; re-running with `--config <out>.manifest.json`
//! reproduces the outputs byte for byte.

// Validation comparisons are written `!(x > y)` on purpose: they reject NaN,
// which `x <= y` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spec::{RunSpec, SpecMap};

#[derive(Parser)]
#[command(name = "mlfield", version, about = "Point-charge Coulomb ensemble laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a Mittag-Leffler function value or the density tail.
    MlEval(CommonArgs),
    /// Finite-n or limiting 1-point density on a grid.
    Density(CommonArgs),
    /// Moment-table and limiting-kernel inspection.
    Kernel(CommonArgs),
    /// Ward-equation residual scan.
    Ward(CommonArgs),
    /// Draw one configuration (moduli-exact or MCMC).
    Sample(CommonArgs),
    /// Central-limit-theorem experiment for the log-modulus fluctuation.
    Clt(CommonArgs),
    /// Insertion-difference field and its mass decomposition.
    Balayage(CommonArgs),
    /// Regular-bulk density ratio check.
    BulkCheck(CommonArgs),
    /// Radial density profiles (limiting R against Lap Q0).
    Figure1(CommonArgs),
    /// Off-center insertion difference fields, both normalizations.
    Figure2(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::MlEval(_) => "ml-eval",
            Command::Density(_) => "density",
            Command::Kernel(_) => "kernel",
            Command::Ward(_) => "ward",
            Command::Sample(_) => "sample",
            Command::Clt(_) => "clt",
            Command::Balayage(_) => "balayage",
            Command::BulkCheck(_) => "bulk-check",
            Command::Figure1(_) => "figure1",
            Command::Figure2(_) => "figure2",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::MlEval(a)
            | Command::Density(a)
            | Command::Kernel(a)
            | Command::Ward(a)
            | Command::Sample(a)
            | Command::Clt(a)
            | Command::Balayage(a)
            | Command::BulkCheck(a)
            | Command::Figure1(a)
            | Command::Figure2(a) => a,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key = value config file, or a manifest JSON from a previous run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path prefix.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (overrides MLFIELD_THREADS; 0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Vanishing degree k of the potential |z|^{2k}.
    #[arg(long)]
    k: Option<u32>,
    /// Inserted charge; a comma list where the command supports several.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long)]
    tau0: Option<f64>,
    /// Particle count.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Square grid min:max:count.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Explicit points "re,im;re,im;...".
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
    #[arg(long)]
    xmax: Option<f64>,
    /// 1D resolution (figure1 profiles).
    #[arg(long)]
    resolution: Option<usize>,
    /// Real evaluation point (ml-eval, kernel).
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    /// Mittag-Leffler index a (ml-eval).
    #[arg(long)]
    a: Option<f64>,
    /// Mittag-Leffler index b (ml-eval).
    #[arg(long)]
    b: Option<f64>,
    /// Evaluate the density tail via the remainder contour (ml-eval).
    #[arg(long)]
    tail: bool,
    /// Evaluate the limiting density instead of the finite-n sum (density).
    #[arg(long)]
    limiting: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    proposal_scale: Option<f64>,
    /// Sampling mode: moduli | mcmc.
    #[arg(long)]
    mode: Option<String>,
    /// Insertion normalization: pure-log | green | both.
    #[arg(long)]
    normalization: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    insertion_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    insertion_im: Option<f64>,
    /// Finite-difference base step (ward).
    #[arg(long)]
    fd_step: Option<f64>,
    /// Comma list of particle counts (clt).
    #[arg(long)]
    n_list: Option<String>,
}

impl CommonArgs {
    fn overrides(&self) -> SpecMap {
        let mut m = SpecMap::new();
        let mut put = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                m.insert(key.to_string(), v);
            }
        };
        put("out", self.out.clone());
        put("threads", self.threads.map(|v| v.to_string()));
        put("k", self.k.map(|v| v.to_string()));
        put("c", self.c.clone());
        put("tau0", self.tau0.map(|v| v.to_string()));
        put("n", self.n.map(|v| v.to_string()));
        put("beta", self.beta.map(|v| v.to_string()));
        put("grid", self.grid.clone());
        put("points", self.points.clone());
        put("xmax", self.xmax.map(|v| v.to_string()));
        put("resolution", self.resolution.map(|v| v.to_string()));
        put("x", self.x.map(|v| v.to_string()));
        put("a", self.a.map(|v| v.to_string()));
        put("b", self.b.map(|v| v.to_string()));
        if self.tail {
            put("tail", Some("true".into()));
        }
        if self.limiting {
            put("limiting", Some("true".into()));
        }
        put("seed", self.seed.map(|v| v.to_string()));
        put("trials", self.trials.map(|v| v.to_string()));
        put("steps", self.steps.map(|v| v.to_string()));
        put("burn_in", self.burn_in.map(|v| v.to_string()));
        put("proposal_scale", self.proposal_scale.map(|v| v.to_string()));
        put("mode", self.mode.clone());
        put("normalization", self.normalization.clone());
        put("insertion_re", self.insertion_re.map(|v| v.to_string()));
        put("insertion_im", self.insertion_im.map(|v| v.to_string()));
        put("fd_step", self.fd_step.map(|v| v.to_string()));
        put("n_list", self.n_list.clone());
        m
    }
}

fn run(cli: Cli) -> mlfield::Result<()> {
    let args = cli.command.args();
    let file = match &args.config {
        Some(path) => Some(spec::load_config(path)?),
        None => None,
    };
    let spec = RunSpec::resolve(cli.command.name(), file, args.overrides())?;
    let threads = spec.effective_threads();
    if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| mlfield::Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| commands::run(&spec))
    } else {
        commands::run(&spec)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, category) = match err.exit_code() {
                2 => (2, "validation"),
                c => (c, "numerical"),
            };
            eprintln!("error: {category}: {err}");
            ExitCode::from(code as u8)
        }
    }
}
