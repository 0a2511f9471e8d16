//! The `ftc` command line.
//!
//! Exit codes: 0 on success (including a failed FTC verification), 1 for
//! usage and validation errors, 2 for runtime and I/O failures.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::ConfigFile;
use super::metrics::{write_consensus_csv, write_metrics_csv};
use super::{run_consensus, static_sequence, write_preset, ExperimentPreset, Scale, CONSENSUS_DIM, DEFAULT_ALPHA};
use crate::algorithms::{run, tuned_stepsize, Algorithm, InitMode, RunConfig, StepsizeTuning, TuningVariant};
use crate::matkit::{spectral_deviation, SPECTRAL_MAX_ITERS, SPECTRAL_TOL};
use crate::optim::{estimate_smoothness, generate_problem, DEFAULT_MU};
use crate::topology::{build_sequence, static_variant, verify_ftc, FamilyName, GraphFamily, FTC_TOL};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "ftc", about = "Finite-time consensus topologies and gradient tracking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct TopologyArgs {
    /// Graph family
    #[arg(long)]
    family: FamilyName,
    /// Number of agents
    #[arg(long)]
    n: usize,
    /// De Bruijn base (default: smallest p with n = p^tau)
    #[arg(long)]
    base: Option<usize>,
}

impl TopologyArgs {
    fn resolve(&self) -> Result<GraphFamily> {
        GraphFamily::resolve(&self.family.0, self.n, self.base)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one mixing matrix of a family as CSV
    GenTopology {
        #[command(flatten)]
        topo: TopologyArgs,
        /// Position in the period (taken modulo tau)
        #[arg(long)]
        index: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the finite-time consensus property
    Verify {
        #[command(flatten)]
        topo: TopologyArgs,
        #[arg(long, default_value_t = FTC_TOL)]
        tol: f64,
    },
    /// Print ||W - J||_2 of each matrix
    Spectral {
        #[command(flatten)]
        topo: TopologyArgs,
        /// Use the static variant of the family
        #[arg(long = "static")]
        use_static: bool,
    },
    /// Average-consensus simulation
    Consensus {
        #[command(flatten)]
        topo: TopologyArgs,
        #[arg(long)]
        iters: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Vector dimension
        #[arg(long, default_value_t = CONSENSUS_DIM)]
        d: usize,
    },
    /// Run one optimization arm
    Optimize(Box<OptimizeArgs>),
    /// Run a named experiment preset
    Preset {
        #[arg(long)]
        name: String,
        #[arg(long)]
        scale: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        /// Override the preset's iteration count
        #[arg(long)]
        iters: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    /// gt-ft, gt-static or dgd
    #[arg(long)]
    algo: String,
    #[arg(long)]
    family: FamilyName,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    base: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    warmup: bool,
    /// Replace alpha with the cor5 or cor6 rule
    #[arg(long)]
    tuned_stepsize: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// zero, gaussian or shared-gaussian
    #[arg(long)]
    x0: Option<String>,
    #[arg(long)]
    record_every: Option<usize>,
    /// Flat key=value file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the generated problem here
    #[arg(long)]
    dump_problem: Option<PathBuf>,
}

/// Entry point used by the binary; `argv` includes the program name.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::GenTopology { topo, index, out: path } => {
            let seq = build_sequence(topo.resolve()?, topo.n)?;
            let w = &seq.at_round(index).weights;
            fs::write(&path, w.to_csv())?;
            writeln!(
                out,
                "wrote {}x{} matrix W({}) of {} to {}",
                w.rows(),
                w.cols(),
                index % seq.tau,
                seq.family,
                path.display()
            )?;
        }
        Command::Verify { topo, tol } => {
            let seq = build_sequence(topo.resolve()?, topo.n)?;
            let report = verify_ftc(&seq, tol)?;
            writeln!(out, "family: {}", seq.family)?;
            writeln!(out, "n: {}", seq.n)?;
            writeln!(out, "tau: {}", seq.tau)?;
            writeln!(out, "max degree: {}", seq.max_degree())?;
            writeln!(out, "stochastic residual: {:e}", report.max_stochastic_residual())?;
            writeln!(out, "product residual: {:e}", report.product_residual)?;
            writeln!(out, "result: {}", if report.pass { "pass" } else { "fail" })?;
        }
        Command::Spectral { topo, use_static } => {
            let family = topo.resolve()?;
            let matrices = if use_static && !family.is_static() {
                vec![static_variant(family, topo.n)?]
            } else {
                build_sequence(family, topo.n)?.matrices
            };
            for m in &matrices {
                let rho = spectral_deviation(&m.weights, SPECTRAL_TOL, SPECTRAL_MAX_ITERS)?;
                writeln!(out, "l={} rho={}", m.index, rho)?;
            }
        }
        Command::Consensus { topo, iters, seed, out: path, d } => {
            let trace = run_consensus(topo.resolve()?, topo.n, iters, seed, d)?;
            write_consensus_csv(&trace, &path)?;
            let last = trace.rows.last().map_or(0.0, |r| r.consensus_error);
            writeln!(out, "wrote {} rows to {} (final consensus error {last:e})", trace.rows.len(), path.display())?;
        }
        Command::Optimize(args) => optimize(*args, out)?,
        Command::Preset { name, scale, seed, out_dir, iters } => {
            let preset: ExperimentPreset = name.parse()?;
            let scale: Scale = scale.parse()?;
            let paths = write_preset(preset, scale, seed, iters, &out_dir)?;
            for p in paths {
                writeln!(out, "{}", p.display())?;
            }
        }
    }
    Ok(())
}

fn optimize(args: OptimizeArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let algorithm: Algorithm = args.algo.parse()?;
    let n =
        cfg.pick_opt("n", args.n)?.ok_or_else(|| Error::InvalidArgument("--n is required (flag or config)".into()))?;
    let base = cfg.pick_opt("base", args.base)?;
    let family = GraphFamily::resolve(&args.family.0, n, base)?;
    let iters = cfg
        .pick_opt("iters", args.iters)?
        .ok_or_else(|| Error::InvalidArgument("--iters is required (flag or config)".into()))?;
    let sigma2 = cfg.pick("sigma2", args.sigma2, 0.0)?;
    let seed = cfg.pick("seed", args.seed, 0u64)?;
    let m = cfg.pick("m", args.m, 50usize)?;
    let d = cfg.pick("d", args.d, 10usize)?;
    let delta = cfg.pick("delta", args.delta, 10.0)?;
    let mu = cfg.pick("mu", args.mu, DEFAULT_MU)?;
    let warmup = cfg.flag("warmup", args.warmup)?;
    let x0_mode: InitMode = cfg.pick_opt::<String>("x0", args.x0)?.as_deref().unwrap_or("zero").parse()?;
    let record_every = cfg.pick("record_every", args.record_every, 1usize)?;
    let tuning: Option<TuningVariant> =
        cfg.pick_opt::<String>("tuned_stepsize", args.tuned_stepsize)?.map(|s| s.parse()).transpose()?;

    let topology = match algorithm {
        Algorithm::GtStatic => static_sequence(family, n)?,
        _ => build_sequence(family, n)?,
    };
    let problem = generate_problem(n, m, d, delta, mu, seed)?;
    if let Some(path) = &args.dump_problem {
        fs::write(path, problem.to_dump())?;
    }
    let alpha = match tuning {
        Some(variant) => tuned_stepsize(&StepsizeTuning {
            l: estimate_smoothness(&problem)?,
            sigma2,
            tau: topology.tau,
            n,
            horizon: iters,
            variant,
        })?,
        None => cfg.pick("alpha", args.alpha, DEFAULT_ALPHA)?,
    };

    let config =
        RunConfig { sigma2, warmup, seed, x0_mode, record_every, ..RunConfig::new(algorithm, topology, alpha, iters) };
    let outcome = run(&problem, &config)?;
    write_metrics_csv(&outcome.trace, &args.out)?;
    let last = outcome.trace.last().expect("trace has the initial row");
    writeln!(
        out,
        "{} on {} (n={n}, alpha={alpha:e}): {} rounds, final |grad f(xbar)|^2 = {:e}, consensus error = {:e}",
        algorithm, config.topology.family, iters, last.grad_at_mean_sq, last.consensus_error
    )?;
    writeln!(out, "wrote {}", args.out.display())?;
    Ok(())
}
