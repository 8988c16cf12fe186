use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use beamspace::sim::{
    convergence_trace, load_scenario, run_sweep, solve, write_csv, Algorithm, Axis, ScenarioConfig, SweepSpec,
};

#[derive(Parser)]
#[command(name = "beamspace", version, about = "Beamspace NOMA beam design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design and evaluate one scenario with one algorithm.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "alg2")]
        algo: Algorithm,
    },
    /// Sweep one axis and write CSV rows.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "alg1,alg2,alg3,mf,sdma,tdma")]
        algo: Vec<Algorithm>,
        #[arg(long)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Record measured wall time instead of 0.
        #[arg(long)]
        timing: bool,
    },
    /// Per-iteration surrogate and budget usage of an iterative solver.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "alg1")]
        algo: Algorithm,
    },
    /// Check a config file and print the resolved values.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut config = load_scenario(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }

    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("cannot create {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { common, algo } => {
            let config = common.load()?;
            let out = solve(&config, algo)?;
            let mut w = common.writer()?;
            let r = &out.report;
            writeln!(w, "algorithm: {}", out.algorithm)?;
            writeln!(w, "n_t: {}  k: {}  snr_db: {}  seed: {}", config.n_t, config.k, config.p_max_db, config.seed)?;
            writeln!(w, "weighted_sum_rate: {} (stderr {})", r.weighted_sum_rate, r.sum_rate_stderr)?;
            writeln!(w, "upper_bound: {}", r.upper_bound)?;
            writeln!(w, "mc_realizations: {}", r.num_realizations)?;
            if let Some(trace) = &out.trace {
                writeln!(w, "outer_iters: {}  converged: {}", trace.outer_iters_used, trace.converged)?;
            }
            writeln!(w, "ue,rate")?;
            for (id, rate) in &r.per_ue_rates {
                writeln!(w, "{id},{rate}")?;
            }
            w.flush()?;
        }
        Command::Sweep { common, algo, axis, values, timing } => {
            let config = common.load()?;
            let spec = SweepSpec { axis, values, algorithms: algo, output_path: common.out.clone() };
            let rows = run_sweep(&config, &spec)?;
            let failed = rows.iter().filter(|r| !r.weighted_sum_rate.is_finite()).count();
            if failed > 0 {
                eprintln!("warning: {failed} sweep point(s) failed; their rows hold NaN");
            }
            write_csv(&rows, common.writer()?, timing)?;
        }
        Command::Trace { common, algo } => {
            if !algo.is_iterative() {
                bail!("{algo} is not an iterative solver (expected alg1, alg2 or alg3)");
            }
            let config = common.load()?;
            let (rows, trace) = convergence_trace(&config, algo)?;
            let mut w = common.writer()?;
            writeln!(w, "iteration,surrogate,budget_usage")?;
            for row in &rows {
                writeln!(w, "{},{},{}", row.iteration, row.surrogate, row.budget_usage)?;
            }
            w.flush()?;
            eprintln!("{algo}: {} outer iterations, converged = {}", trace.outer_iters_used, trace.converged);
        }
        Command::Validate { common } => {
            let config = common.load()?;
            let mut w = common.writer()?;
            writeln!(w, "{}: ok", common.config.display())?;
            writeln!(w, "{config:#?}")?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
