//! Experiment presets, metric traces, configuration and the command line.

pub mod cli;
pub mod config;
pub mod metrics;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::thread;

use crate::algorithms::{run, Algorithm, InitMode, RunConfig};
use crate::optim::{consensus_error, gaussian_vec, generate_problem, mean_vector, stream_rng, Stream, DEFAULT_MU};
use crate::topology::{build_sequence, GraphFamily, MixingMatrix, TopologySequence};
use crate::{Error, Result};

pub use cli::cli_main;
pub use config::ConfigFile;
pub use metrics::{write_consensus_csv, write_metrics_csv, ConsensusRow, ConsensusTrace, MetricsRow, MetricsTrace};

/// Dimension of the consensus experiment's vectors.
pub const CONSENSUS_DIM: usize = 10;
pub const DEFAULT_ALPHA: f64 = 1e-4;
pub const STOCHASTIC_SIGMA2: f64 = 1e-4;

/// Pure averaging `x_i ← Σ_j w[j, i] x_j` from a Gaussian start, `Ξ` measured
/// against the initial mean.
pub fn run_consensus(family: GraphFamily, n: usize, iters: usize, seed: u64, d: usize) -> Result<ConsensusTrace> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let seq = build_sequence(family, n)?;
    let period: Vec<_> = seq.matrices.iter().map(MixingMatrix::in_neighbors).collect();
    let mut x: Vec<Vec<f64>> =
        (0..n).map(|i| gaussian_vec(&mut stream_rng(seed, Stream::Consensus, i as u64, 0), d)).collect();
    let reference = mean_vector(&x);
    let mut rows = vec![ConsensusRow { iter: 0, consensus_error: consensus_error(&x, &reference) }];
    for k in 0..iters {
        let neighbors = &period[k % period.len()];
        x = neighbors
            .iter()
            .map(|inn| {
                let mut acc = vec![0.0; d];
                for &(j, w) in inn {
                    acc.iter_mut().zip(&x[j]).for_each(|(a, v)| *a += w * v);
                }
                acc
            })
            .collect();
        rows.push(ConsensusRow { iter: k + 1, consensus_error: consensus_error(&x, &reference) });
    }
    Ok(ConsensusTrace { rows })
}

pub fn run_consensus_preset(family: GraphFamily, n: usize, iters: usize, seed: u64) -> Result<ConsensusTrace> {
    run_consensus(family, n, iters, seed, CONSENSUS_DIM)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Paper,
    Desk,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            _ => Err(Error::InvalidArgument(format!("unknown scale {s:?} (paper, desk)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentPreset {
    Consensus,
    OptimizeExp,
    OptimizeCuboid,
    OptimizeDeBruijn,
}

impl ExperimentPreset {
    pub const NAMES: [&'static str; 4] = ["consensus", "optimize-exp", "optimize-cuboid", "optimize-debruijn"];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentPreset::Consensus => "consensus",
            ExperimentPreset::OptimizeExp => "optimize-exp",
            ExperimentPreset::OptimizeCuboid => "optimize-cuboid",
            ExperimentPreset::OptimizeDeBruijn => "optimize-debruijn",
        }
    }

    /// Consensus-experiment arms: `(family, n)`.
    pub fn consensus_arms(scale: Scale) -> Vec<(GraphFamily, usize)> {
        let (pow2, cuboid) = match scale {
            Scale::Paper => (64, 72),
            Scale::Desk => (8, 12),
        };
        vec![
            (GraphFamily::OnePeerExponential, pow2),
            (GraphFamily::OnePeerHyperCube, pow2),
            (GraphFamily::DeBruijn { p: 2 }, pow2),
            (GraphFamily::PPeerHyperCuboid, cuboid),
            (GraphFamily::StaticExponential, pow2),
            (GraphFamily::StaticHyperCuboid, cuboid),
        ]
    }

    pub fn consensus_iters(scale: Scale) -> usize {
        match scale {
            Scale::Paper => 30,
            Scale::Desk => 20,
        }
    }

    pub fn optimize_setup(&self, scale: Scale) -> Result<OptimizeSetup> {
        let (paper_n, desk_n, family) = match self {
            ExperimentPreset::OptimizeExp => (64, 8, GraphFamily::OnePeerExponential),
            ExperimentPreset::OptimizeCuboid => (72, 12, GraphFamily::PPeerHyperCuboid),
            ExperimentPreset::OptimizeDeBruijn => (64, 8, GraphFamily::DeBruijn { p: 2 }),
            ExperimentPreset::Consensus => {
                return Err(Error::InvalidArgument("consensus is not an optimization preset".into()))
            }
        };
        Ok(match scale {
            Scale::Paper => OptimizeSetup {
                family,
                n: paper_n,
                m: 500,
                d: 20,
                delta: 10.0,
                mu: DEFAULT_MU,
                alpha: DEFAULT_ALPHA,
                iters: 10_000,
                with_static: *self != ExperimentPreset::OptimizeDeBruijn,
            },
            Scale::Desk => OptimizeSetup {
                family,
                n: desk_n,
                m: 50,
                d: 10,
                delta: 10.0,
                mu: DEFAULT_MU,
                alpha: DEFAULT_ALPHA,
                iters: 20_000,
                with_static: *self != ExperimentPreset::OptimizeDeBruijn,
            },
        })
    }
}

impl FromStr for ExperimentPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consensus" => Ok(ExperimentPreset::Consensus),
            "optimize-exp" => Ok(ExperimentPreset::OptimizeExp),
            "optimize-cuboid" => Ok(ExperimentPreset::OptimizeCuboid),
            "optimize-debruijn" => Ok(ExperimentPreset::OptimizeDeBruijn),
            _ => Err(Error::InvalidArgument(format!(
                "unknown preset {s:?} (expected one of {})",
                Self::NAMES.join(", ")
            ))),
        }
    }
}

impl fmt::Display for ExperimentPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of an optimization preset.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSetup {
    /// Time-varying family; the static arms use its static counterpart.
    pub family: GraphFamily,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub delta: f64,
    pub mu: f64,
    pub alpha: f64,
    pub iters: usize,
    /// Whether the preset includes static-topology arms.
    pub with_static: bool,
}

/// Result of one arm of an optimization preset.
#[derive(Debug, Clone)]
pub struct ArmTrace {
    /// `deterministic` or `stochastic`
    pub mode: &'static str,
    pub algorithm: Algorithm,
    pub family: GraphFamily,
    pub trace: MetricsTrace,
}

impl ArmTrace {
    pub fn label(&self) -> String {
        format!("{}_{}_{}", self.mode, self.algorithm, self.family.name())
    }
}

/// Single-matrix sequence for static-topology runs.
pub fn static_sequence(family: GraphFamily, n: usize) -> Result<TopologySequence> {
    match family {
        GraphFamily::DeBruijn { .. } => {
            let seq = build_sequence(family, n)?;
            Ok(TopologySequence::single(family, seq.matrices[0].weights.clone(), seq.tau == 1))
        }
        other => build_sequence(other.static_counterpart(), n),
    }
}

/// Runs every arm of an optimization preset; arms run on separate threads.
pub fn run_optimize_setup(setup: &OptimizeSetup, seed: u64) -> Result<Vec<ArmTrace>> {
    let problem = generate_problem(setup.n, setup.m, setup.d, setup.delta, setup.mu, seed)?;
    let dynamic = build_sequence(setup.family, setup.n)?;
    let fixed = static_sequence(setup.family, setup.n)?;

    let mut jobs = Vec::new();
    for (mode, sigma2) in [("deterministic", 0.0), ("stochastic", STOCHASTIC_SIGMA2)] {
        jobs.push((mode, sigma2, Algorithm::GtFt, &dynamic));
        if setup.with_static {
            jobs.push((mode, sigma2, Algorithm::GtStatic, &fixed));
        }
        jobs.push((mode, sigma2, Algorithm::Dgd, &dynamic));
        if setup.with_static {
            jobs.push((mode, sigma2, Algorithm::Dgd, &fixed));
        }
    }

    let results: Vec<Result<ArmTrace>> = thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(mode, sigma2, algorithm, seq)| {
                let problem = &problem;
                s.spawn(move || {
                    let config = RunConfig {
                        sigma2,
                        seed,
                        x0_mode: InitMode::Zero,
                        ..RunConfig::new(algorithm, seq.clone(), setup.alpha, setup.iters)
                    };
                    let outcome = run(problem, &config)?;
                    Ok(ArmTrace { mode, algorithm, family: seq.family, trace: outcome.trace })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("preset arm panicked")).collect()
    });
    results.into_iter().collect()
}

pub fn run_optimize_preset(preset: ExperimentPreset, scale: Scale, seed: u64) -> Result<Vec<ArmTrace>> {
    run_optimize_setup(&preset.optimize_setup(scale)?, seed)
}

/// Runs a preset and writes one CSV per arm into `out_dir`; returns the paths.
pub fn write_preset(
    preset: ExperimentPreset,
    scale: Scale,
    seed: u64,
    iters: Option<usize>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    match preset {
        ExperimentPreset::Consensus => {
            let iters = iters.unwrap_or(ExperimentPreset::consensus_iters(scale));
            for (family, n) in ExperimentPreset::consensus_arms(scale) {
                let trace = run_consensus_preset(family, n, iters, seed)?;
                let path = out_dir.join(format!("consensus_{}_n{n}.csv", family.name()));
                write_consensus_csv(&trace, &path)?;
                written.push(path);
            }
        }
        _ => {
            let mut setup = preset.optimize_setup(scale)?;
            if let Some(t) = iters {
                setup.iters = t;
            }
            for arm in run_optimize_setup(&setup, seed)? {
                let path = out_dir.join(format!("{}_{}.csv", preset.name(), arm.label()));
                write_metrics_csv(&arm.trace, &path)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
