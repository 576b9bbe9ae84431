use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ldsnoma::allocator::Method;
use ldsnoma::harness::{
    run_allocate, run_epsilon, run_evaluate, run_sweep_d, run_sweep_k, summarize,
    visualize_allocation, write_allocation, write_epsilon, write_results, write_summary,
    ExperimentConfig, ExperimentKind, ResultRow,
};
use ldsnoma::model::units::RateUnit;
use ldsnoma::{Error, Result};

/// Sparse spreading experiments for uplink LDS-NOMA.
#[derive(Parser, Debug)]
#[command(name = "ldsnoma", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rates of every method on a scenario file or on random drops.
    Evaluate(Common),
    /// Writes a spreading matrix as triplets.
    Allocate(Common),
    /// Rates versus the number of UEs.
    SweepK(Common),
    /// Rates versus sparsity.
    SweepD(Common),
    /// Residual between simulated and deterministic rates versus sparsity.
    Epsilon(Common),
    /// Greedy allocation of one drop as (f, k, v, beta, eta_f) rows.
    #[command(alias = "visualize-allocation")]
    Visualize(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML file with experiment settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario TOML file used instead of random drops.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    drops: Option<u64>,
    /// Fading realisations per Monte-Carlo estimate.
    #[arg(long)]
    trials: Option<u64>,
    /// Random matrices per sparsity (epsilon).
    #[arg(long)]
    matrices: Option<usize>,
    /// Comma-separated list of greedy, regular, random, dense.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Number of sub-channels.
    #[arg(long = "f")]
    subchannels: Option<usize>,
    /// Comma-separated UE counts.
    #[arg(long = "k", value_delimiter = ',')]
    ues: Option<Vec<usize>>,
    /// Comma-separated sparsities.
    #[arg(long = "d", value_delimiter = ',')]
    sparsity: Option<Vec<usize>>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Skip Monte-Carlo estimation.
    #[arg(long)]
    no_mc: bool,
    /// Reduced drop and trial counts.
    #[arg(long)]
    fast: bool,
    /// Report rates in bits (default).
    #[arg(long, conflicts_with = "nats")]
    bits: bool,
    /// Report rates in nats.
    #[arg(long)]
    nats: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary CSV for evaluate and sweeps (standard error when absent).
    #[arg(long)]
    summary: Option<PathBuf>,
}

impl Common {
    fn config(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(kind);
        if self.fast {
            cfg = cfg.fast();
        }
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
            if cfg.kind != kind {
                return Err(Error::Config(format!(
                    "offending keys: kind: file says {:?} but the command is {:?}",
                    cfg.kind.name(),
                    kind.name()
                )));
            }
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = &self.$flag { cfg.$field = v.clone(); })*
            };
        }
        set!(seed => seed, drops => drops, trials => fading_trials, matrices => matrices,
             methods => methods, subchannels => subchannels, ues => ues,
             sparsity => sparsity, max_iter => max_iter);
        if let Some(p) = &self.scenario {
            cfg.scenario = Some(p.clone());
        }
        if let Some(p) = &self.out {
            cfg.out = Some(p.clone());
        }
        if self.no_mc {
            cfg.monte_carlo = false;
        }
        if self.nats {
            cfg.unit = RateUnit::Nats;
        } else if self.bits {
            cfg.unit = RateUnit::Bits;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_rows(cfg: &ExperimentConfig, rows: &[ResultRow], summary: Option<&Path>) -> Result<()> {
    write_results(rows, cfg.unit, sink(cfg.out.as_deref())?)?;
    let table = summarize(rows);
    match summary {
        Some(p) => write_summary(&table, cfg.unit, BufWriter::new(File::create(p)?)),
        None => write_summary(&table, cfg.unit, io::stderr().lock()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let (kind, common) = match &cli.command {
        Command::Evaluate(c) => (ExperimentKind::Evaluate, c),
        Command::Allocate(c) => (ExperimentKind::Allocate, c),
        Command::SweepK(c) => (ExperimentKind::SweepK, c),
        Command::SweepD(c) => (ExperimentKind::SweepD, c),
        Command::Epsilon(c) => (ExperimentKind::Epsilon, c),
        Command::Visualize(c) => (ExperimentKind::Visualize, c),
    };
    let cfg = common.config(kind)?;
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("offending keys: threads: {e}")))?;
    }
    let summary = common.summary.as_deref();
    match kind {
        ExperimentKind::Evaluate => emit_rows(&cfg, &run_evaluate(&cfg)?, summary),
        ExperimentKind::SweepK => emit_rows(&cfg, &run_sweep_k(&cfg)?, summary),
        ExperimentKind::SweepD => emit_rows(&cfg, &run_sweep_d(&cfg)?, summary),
        ExperimentKind::Epsilon => write_epsilon(&run_epsilon(&cfg)?, cfg.unit, sink(cfg.out.as_deref())?),
        ExperimentKind::Visualize => write_allocation(&visualize_allocation(&cfg)?, sink(cfg.out.as_deref())?),
        ExperimentKind::Allocate => {
            let (scn, v) = run_allocate(&cfg)?;
            v.check_conforms(&scn)?;
            sink(cfg.out.as_deref())?.write_all(v.to_triplets().as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
