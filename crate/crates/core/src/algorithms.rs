//! Synchronous-round steppers: gradient tracking over a topology sequence
//! (GT-FT, and static GT as its length-one special case) and DGD.
//!
//! Combination weights are read with the column index as the receiver:
//! agent `i` forms `Σ_j w[j, i] · (message from j)`.

use std::fmt;
use std::str::FromStr;

use crate::harness::metrics::{MetricsRow, MetricsTrace};
use crate::matkit::DenseMatrix;
use crate::optim::{add_noise, consensus_error, gaussian_vec, mean_vector, stream_rng, NoiseModel, Problem, Stream};
use crate::topology::{MixingMatrix, TopologySequence};
use crate::{Error, Result};

/// Abort threshold on any agent's iterate norm.
pub const DIVERGENCE_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Gradient tracking cycling through the topology period.
    GtFt,
    /// Gradient tracking on a single static matrix.
    GtStatic,
    Dgd,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::GtFt => "gt-ft",
            Algorithm::GtStatic => "gt-static",
            Algorithm::Dgd => "dgd",
        }
    }

    pub fn is_tracking(&self) -> bool {
        !matches!(self, Algorithm::Dgd)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gt-ft" => Ok(Algorithm::GtFt),
            "gt-static" => Ok(Algorithm::GtStatic),
            "dgd" => Ok(Algorithm::Dgd),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm {s:?} (gt-ft, gt-static, dgd)"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the initial iterates are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    #[default]
    Zero,
    /// Independent standard normal draw per agent.
    Gaussian,
    /// One standard normal draw shared by every agent.
    SharedGaussian,
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(InitMode::Zero),
            "gaussian" => Ok(InitMode::Gaussian),
            "shared-gaussian" => Ok(InitMode::SharedGaussian),
            _ => Err(Error::InvalidArgument(format!("unknown x0 mode {s:?} (zero, gaussian, shared-gaussian)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub topology: TopologySequence,
    pub alpha: f64,
    pub iters: usize,
    pub sigma2: f64,
    pub warmup: bool,
    pub seed: u64,
    pub x0_mode: InitMode,
    /// Record a metrics row every this many rounds (the last round is always kept).
    pub record_every: usize,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, topology: TopologySequence, alpha: f64, iters: usize) -> Self {
        Self {
            algorithm,
            topology,
            alpha,
            iters,
            sigma2: 0.0,
            warmup: false,
            seed: 0,
            x0_mode: InitMode::Zero,
            record_every: 1,
        }
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("stepsize must be positive (got {})", self.alpha)));
        }
        if self.iters == 0 {
            return Err(Error::InvalidArgument("iters must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        if self.topology.n != problem.n {
            return Err(Error::DimensionMismatch(format!(
                "topology has {} agents, problem has {}",
                self.topology.n, problem.n
            )));
        }
        if self.algorithm == Algorithm::GtStatic && self.topology.matrices.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "gt-static needs a single static matrix, {} has period {}",
                self.topology.family, self.topology.tau
            )));
        }
        NoiseModel::new(self.sigma2, self.seed)?;
        Ok(())
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel { sigma2: self.sigma2, stream: self.seed }
    }
}

/// Per-agent state at round `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentStates {
    pub x: Vec<Vec<f64>>,
    /// Tracking variables; for DGD this mirrors `last_sample`.
    pub g: Vec<Vec<f64>>,
    /// `∇F_i(x_i^{(k)}; ξ_i^{(k)})`, consumed by the round-`k` update.
    pub last_sample: Vec<Vec<f64>>,
    pub round: usize,
}

impl AgentStates {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn mean_x(&self) -> Vec<f64> {
        mean_vector(&self.x)
    }

    pub fn mean_g(&self) -> Vec<f64> {
        mean_vector(&self.g)
    }

    pub fn consensus_error(&self) -> f64 {
        consensus_error(&self.x, &self.mean_x())
    }
}

fn sample(problem: &Problem, agent: usize, x: &[f64], noise: &NoiseModel, round: usize) -> Vec<f64> {
    let mut g = vec![0.0; problem.d];
    problem.local_gradient_into(agent, x, &mut g);
    add_noise(&mut g, noise, agent, round);
    g
}

fn initial_points(problem: &Problem, config: &RunConfig) -> Vec<Vec<f64>> {
    let (n, d) = (problem.n, problem.d);
    match config.x0_mode {
        InitMode::Zero => vec![vec![0.0; d]; n],
        InitMode::Gaussian => {
            (0..n).map(|i| gaussian_vec(&mut stream_rng(config.seed, Stream::InitialPoint, i as u64, 0), d)).collect()
        }
        InitMode::SharedGaussian => {
            let x = gaussian_vec(&mut stream_rng(config.seed, Stream::InitialPoint, u64::MAX, 0), d);
            vec![x; n]
        }
    }
}

/// Round-0 state: `x^{(0)}` per the init mode and `g^{(0)} = ∇F(x^{(0)}; ξ^{(0)})`.
pub fn init_states(problem: &Problem, config: &RunConfig) -> Result<AgentStates> {
    config.validate(problem)?;
    let x = initial_points(problem, config);
    Ok(states_at(problem, config, x, 0))
}

fn states_at(problem: &Problem, config: &RunConfig, x: Vec<Vec<f64>>, round: usize) -> AgentStates {
    let noise = config.noise();
    let samples: Vec<Vec<f64>> = x.iter().enumerate().map(|(i, xi)| sample(problem, i, xi, &noise, round)).collect();
    AgentStates { x, g: samples.clone(), last_sample: samples, round }
}

type Neighbors = Vec<Vec<(usize, f64)>>;

fn check_mixing(w: &MixingMatrix, states: &AgentStates) -> Result<()> {
    if w.n() != states.n() {
        return Err(Error::DimensionMismatch(format!("{}x{} mixing matrix for {} agents", w.n(), w.n(), states.n())));
    }
    Ok(())
}

fn mix(neighbors: &Neighbors, values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = values[0].len();
    neighbors
        .iter()
        .map(|inn| {
            let mut acc = vec![0.0; d];
            for &(j, w) in inn {
                acc.iter_mut().zip(&values[j]).for_each(|(a, v)| *a += w * v);
            }
            acc
        })
        .collect()
}

fn descend(x: &[Vec<f64>], dir: &[Vec<f64>], alpha: f64) -> Vec<Vec<f64>> {
    x.iter().zip(dir).map(|(xi, gi)| xi.iter().zip(gi).map(|(a, b)| a - alpha * b).collect()).collect()
}

fn guard(x: &[Vec<f64>], round: usize) -> Result<()> {
    for xi in x {
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm.is_nan() || norm > DIVERGENCE_GUARD {
            return Err(Error::Divergence { round, norm });
        }
    }
    Ok(())
}

fn gt_step_with(
    states: &AgentStates,
    neighbors: &Neighbors,
    problem: &Problem,
    config: &RunConfig,
) -> Result<AgentStates> {
    let next_round = states.round + 1;
    let x = mix(neighbors, &descend(&states.x, &states.g, config.alpha));
    guard(&x, next_round)?;
    let noise = config.noise();
    let mixed_g = mix(neighbors, &states.g);
    let samples: Vec<Vec<f64>> =
        x.iter().enumerate().map(|(i, xi)| sample(problem, i, xi, &noise, next_round)).collect();
    let g = mixed_g
        .iter()
        .zip(&samples)
        .zip(&states.last_sample)
        .map(|((m, new), old)| m.iter().zip(new).zip(old).map(|((a, b), c)| a + b - c).collect())
        .collect();
    Ok(AgentStates { x, g, last_sample: samples, round: next_round })
}

fn dgd_step_with(
    states: &AgentStates,
    neighbors: &Neighbors,
    problem: &Problem,
    config: &RunConfig,
) -> Result<AgentStates> {
    let next_round = states.round + 1;
    let x = mix(neighbors, &descend(&states.x, &states.last_sample, config.alpha));
    guard(&x, next_round)?;
    Ok(states_at(problem, config, x, next_round))
}

/// One gradient-tracking round with mixing matrix `w`.
pub fn gt_step(states: &AgentStates, w: &MixingMatrix, problem: &Problem, config: &RunConfig) -> Result<AgentStates> {
    check_mixing(w, states)?;
    gt_step_with(states, &w.in_neighbors(), problem, config)
}

/// One adapt-then-combine DGD round with mixing matrix `w`.
pub fn dgd_step(states: &AgentStates, w: &MixingMatrix, problem: &Problem, config: &RunConfig) -> Result<AgentStates> {
    check_mixing(w, states)?;
    dgd_step_with(states, &w.in_neighbors(), problem, config)
}

fn step_with(
    states: &AgentStates,
    neighbors: &Neighbors,
    problem: &Problem,
    config: &RunConfig,
) -> Result<AgentStates> {
    if config.algorithm.is_tracking() {
        gt_step_with(states, neighbors, problem, config)
    } else {
        dgd_step_with(states, neighbors, problem, config)
    }
}

/// Replaces every agent's start point with the network average and
/// re-samples the round-0 gradients there.
fn share_start(states: &AgentStates, problem: &Problem, config: &RunConfig) -> AgentStates {
    let mean = states.mean_x();
    states_at(problem, config, vec![mean; states.n()], states.round)
}

fn averaging_neighbors(n: usize) -> Neighbors {
    MixingMatrix::new(DenseMatrix::averaging(n), 0).in_neighbors()
}

/// Warm-up: shared start point, then `τ` rounds of exact averaging.
///
/// Returns the state at round `τ`; every iterate up to that round is in
/// exact consensus.
pub fn allreduce_warmup(states: &AgentStates, problem: &Problem, config: &RunConfig) -> Result<AgentStates> {
    if states.round != 0 {
        return Err(Error::InvalidArgument(format!("warm-up starts at round 0, got {}", states.round)));
    }
    let exact = averaging_neighbors(states.n());
    let mut s = share_start(states, problem, config);
    for _ in 0..config.topology.tau {
        s = step_with(&s, &exact, problem, config)?;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuningVariant {
    /// `c0 = L²`
    Cor5,
    /// `c0 = 1` (with warm-up)
    Cor6,
}

impl FromStr for TuningVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cor5" => Ok(TuningVariant::Cor5),
            "cor6" => Ok(TuningVariant::Cor6),
            _ => Err(Error::InvalidArgument(format!("unknown stepsize rule {s:?} (cor5, cor6)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepsizeTuning {
    pub l: f64,
    pub sigma2: f64,
    pub tau: usize,
    pub n: usize,
    pub horizon: usize,
    pub variant: TuningVariant,
}

impl StepsizeTuning {
    /// `(c0, c1, c2)`
    pub fn constants(&self) -> (f64, f64, f64) {
        let c0 = match self.variant {
            TuningVariant::Cor5 => self.l * self.l,
            TuningVariant::Cor6 => 1.0,
        };
        let tau = self.tau as f64;
        let c1 = self.l * self.sigma2 / self.n as f64;
        let c2 = tau.powi(3) * self.l * self.l * self.sigma2;
        (c0, c1, c2)
    }
}

/// `α = min{(c0/(c1 T))^{1/2}, (c0/(c2 T))^{1/3}, 1/(2L), 1/(4√3 τ² L)}`.
pub fn tuned_stepsize(t: &StepsizeTuning) -> Result<f64> {
    if !(t.l > 0.0 && t.l.is_finite()) || t.tau == 0 || t.n == 0 || t.horizon == 0 {
        return Err(Error::InvalidArgument(format!("stepsize tuning needs L, tau, n, T > 0 (got {t:?})")));
    }
    if !(t.sigma2 >= 0.0 && t.sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma2 must be >= 0 (got {})", t.sigma2)));
    }
    let (c0, c1, c2) = t.constants();
    let horizon = t.horizon as f64;
    let tau = t.tau as f64;
    let noise_a = if c1 > 0.0 { (c0 / (c1 * horizon)).sqrt() } else { f64::INFINITY };
    let noise_b = if c2 > 0.0 { (c0 / (c2 * horizon)).cbrt() } else { f64::INFINITY };
    let smooth = 1.0 / (2.0 * t.l);
    let consensus = 1.0 / (4.0 * 3f64.sqrt() * tau * tau * t.l);
    Ok(noise_a.min(noise_b).min(smooth).min(consensus))
}

/// Analysis identities checked after each round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundDiagnostics {
    /// Round `k + 1` the check refers to.
    pub round: usize,
    /// `max |ḡ^{(k+1)} - mean_i ∇F_i(x_i^{(k+1)}; ξ_i^{(k+1)})|`
    pub tracking_mean_dev: f64,
    /// `max |x̄^{(k+1)} - (x̄^{(k)} - α ḡ^{(k)})|` (DGD: `ḡ` replaced by the mean sample)
    pub centroid_dev: f64,
    /// `(1/n) Σ ‖x_i^{(k+1)} - x̄^{(k+1)}‖²`
    pub consensus_err: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: MetricsTrace,
    pub diagnostics: Vec<RoundDiagnostics>,
    pub final_states: AgentStates,
    /// Consensus error `(1/n) Σ‖x_i - x̄‖²` at round 0.
    pub initial_consensus_err: f64,
}

impl RunOutcome {
    pub fn max_tracking_mean_dev(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.tracking_mean_dev).fold(0.0, f64::max)
    }

    pub fn max_centroid_dev(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.centroid_dev).fold(0.0, f64::max)
    }

    /// `Σ_{k=0}^{rounds} ‖x^{(k)} - x̄^{(k)}‖²` (un-normalized stacked norm).
    pub fn early_consensus_sum(&self, rounds: usize) -> f64 {
        let n = self.final_states.n() as f64;
        let tail: f64 = self.diagnostics.iter().filter(|d| d.round <= rounds).map(|d| d.consensus_err).sum();
        n * (self.initial_consensus_err + tail)
    }
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

fn metrics_row(problem: &Problem, states: &AgentStates, exact_samples: bool) -> Result<MetricsRow> {
    let xbar = states.mean_x();
    let grads: Vec<Vec<f64>> = if exact_samples {
        states.last_sample.clone()
    } else {
        states.x.iter().enumerate().map(|(i, xi)| problem.local_gradient(i, xi)).collect::<Result<_>>()?
    };
    let grad_mean = mean_vector(&grads);
    let at_mean = problem.global_gradient(&xbar)?;
    Ok(MetricsRow {
        iter: states.round,
        objective: problem.global_objective(&xbar)?,
        grad_mean_sq: grad_mean.iter().map(|v| v * v).sum(),
        grad_at_mean_sq: at_mean.iter().map(|v| v * v).sum(),
        consensus_error: consensus_error(&states.x, &xbar),
    })
}

/// Runs the configured algorithm for `iters` rounds and records metrics.
///
/// With `warmup`, the start point is shared and the first `τ` rounds mix
/// with `J_n`; afterwards round `k` uses `W^{(k mod τ)}`.
pub fn run(problem: &Problem, config: &RunConfig) -> Result<RunOutcome> {
    let mut states = init_states(problem, config)?;
    if config.warmup {
        states = share_start(&states, problem, config);
    }
    let exact = config.sigma2 == 0.0;
    let period: Vec<Neighbors> = config.topology.matrices.iter().map(MixingMatrix::in_neighbors).collect();
    let averaging = averaging_neighbors(problem.n);
    let warm_rounds = if config.warmup { config.topology.tau } else { 0 };

    let mut trace = MetricsTrace::default();
    trace.rows.push(metrics_row(problem, &states, exact)?);
    let initial_consensus_err = states.consensus_error();
    let mut diagnostics = Vec::with_capacity(config.iters);

    for k in 0..config.iters {
        let neighbors = if k < warm_rounds { &averaging } else { &period[k % period.len()] };
        let xbar = states.mean_x();
        let direction = if config.algorithm.is_tracking() { states.mean_g() } else { mean_vector(&states.last_sample) };
        let next = step_with(&states, neighbors, problem, config)?;

        let predicted: Vec<f64> = xbar.iter().zip(&direction).map(|(x, g)| x - config.alpha * g).collect();
        let next_xbar = next.mean_x();
        diagnostics.push(RoundDiagnostics {
            round: next.round,
            tracking_mean_dev: max_dev(&next.mean_g(), &mean_vector(&next.last_sample)),
            centroid_dev: max_dev(&next_xbar, &predicted),
            consensus_err: consensus_error(&next.x, &next_xbar),
        });
        states = next;
        if states.round % config.record_every == 0 || states.round == config.iters {
            trace.rows.push(metrics_row(problem, &states, exact)?);
        }
    }
    Ok(RunOutcome { trace, diagnostics, final_states: states, initial_consensus_err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::generate_problem;
    use crate::topology::{build_sequence, GraphFamily};

    fn problem(n: usize) -> Problem {
        generate_problem(n, 12, 3, 10.0, 0.1, 77).unwrap()
    }

    fn config(algorithm: Algorithm, family: GraphFamily, n: usize, iters: usize) -> RunConfig {
        RunConfig::new(algorithm, build_sequence(family, n).unwrap(), 1e-3, iters)
    }

    #[test]
    fn init_zero_uses_exact_gradient() {
        let p = problem(4);
        let c = config(Algorithm::GtFt, GraphFamily::OnePeerExponential, 4, 1);
        let s = init_states(&p, &c).unwrap();
        for i in 0..4 {
            assert_eq!(s.g[i], p.local_gradient(i, &[0.0; 3]).unwrap());
            assert_eq!(s.g[i], s.last_sample[i]);
        }
        let mut c = c;
        c.x0_mode = InitMode::SharedGaussian;
        c.seed = 3;
        let s = init_states(&p, &c).unwrap();
        assert_eq!(s.consensus_error(), 0.0);
        assert_eq!(s, init_states(&p, &c).unwrap());
        c.x0_mode = InitMode::Gaussian;
        assert!(init_states(&p, &c).unwrap().consensus_error() > 0.0);
    }

    #[test]
    fn identity_mixing_is_local_tracking() {
        let p = problem(3);
        let mut c = config(Algorithm::GtFt, GraphFamily::OnePeerExponential, 3, 1);
        c.x0_mode = InitMode::Gaussian;
        c.alpha = 0.01;
        let s0 = init_states(&p, &c).unwrap();
        let eye = MixingMatrix::new(DenseMatrix::identity(3), 0);
        let s1 = gt_step(&s0, &eye, &p, &c).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s1.x[i][j], s0.x[i][j] - 0.01 * s0.g[i][j]);
            }
            // with W = I, g tracks the local gradient exactly
            let g = p.local_gradient(i, &s1.x[i]).unwrap();
            assert!(max_dev(&s1.g[i], &g) <= 1e-12);
        }
    }

    #[test]
    fn gt_identities_on_directed_sequence() {
        let p = problem(8);
        let mut c = config(Algorithm::GtFt, GraphFamily::OnePeerExponential, 8, 30);
        c.sigma2 = 1e-2;
        c.seed = 5;
        c.x0_mode = InitMode::Gaussian;
        let out = run(&p, &c).unwrap();
        assert!(out.max_tracking_mean_dev() <= 1e-12);
        assert!(out.max_centroid_dev() <= 1e-12);
    }

    #[test]
    fn dgd_with_averaging_is_centralized_descent() {
        let p = problem(4);
        let mut c = config(Algorithm::Dgd, GraphFamily::FullyConnected, 4, 5);
        c.x0_mode = InitMode::Gaussian;
        c.seed = 1;
        let mut s = init_states(&p, &c).unwrap();
        let j = MixingMatrix::new(DenseMatrix::averaging(4), 0);
        let mut central = mean_vector(&{
            let s1 = dgd_step(&s, &j, &p, &c).unwrap();
            s = s1;
            s.x.clone()
        });
        for _ in 0..5 {
            let grad = p.global_gradient(&central).unwrap();
            central = central.iter().zip(&grad).map(|(x, g)| x - c.alpha * g).collect();
            s = dgd_step(&s, &j, &p, &c).unwrap();
            for xi in &s.x {
                assert!(max_dev(xi, &central) <= 1e-13 * central.iter().fold(1.0f64, |a, v| a.max(v.abs())));
            }
        }
    }

    #[test]
    fn single_agent_dgd_is_gradient_descent() {
        let p = problem(1);
        let c = RunConfig::new(
            Algorithm::Dgd,
            TopologySequence::single(GraphFamily::FullyConnected, DenseMatrix::identity(1), true),
            1e-3,
            3,
        );
        let mut s = init_states(&p, &c).unwrap();
        let w = MixingMatrix::new(DenseMatrix::identity(1), 0);
        let mut x = vec![0.0; 3];
        for _ in 0..3 {
            let g = p.local_gradient(0, &x).unwrap();
            x = x.iter().zip(&g).map(|(a, b)| a - 1e-3 * b).collect();
            s = dgd_step(&s, &w, &p, &c).unwrap();
            assert_eq!(s.x[0], x);
        }
    }

    #[test]
    fn warmup_keeps_first_period_in_consensus() {
        let p = problem(8);
        let mut c = config(Algorithm::GtFt, GraphFamily::OnePeerExponential, 8, 10);
        c.x0_mode = InitMode::Gaussian;
        c.warmup = true;
        c.sigma2 = 1e-4;
        let out = run(&p, &c).unwrap();
        assert!(out.early_consensus_sum(3) <= 1e-24);
        let s = allreduce_warmup(&init_states(&p, &c).unwrap(), &p, &c).unwrap();
        assert_eq!(s.round, 3);
        assert!(s.consensus_error() <= 1e-24);
    }

    #[test]
    fn stepsize_rules() {
        let base = StepsizeTuning { l: 4.0, sigma2: 0.0, tau: 3, n: 8, horizon: 1000, variant: TuningVariant::Cor5 };
        let a = tuned_stepsize(&base).unwrap();
        let want = (1.0 / 8.0f64).min(1.0 / (4.0 * 3f64.sqrt() * 9.0 * 4.0));
        assert!((a - want).abs() <= 1e-15 * want);
        assert_eq!(tuned_stepsize(&StepsizeTuning { variant: TuningVariant::Cor6, ..base }).unwrap(), a);

        let t = StepsizeTuning { l: 1.0, sigma2: 0.01, tau: 1, n: 4, horizon: 10_000, variant: TuningVariant::Cor6 };
        let want = [(4.0f64 / (0.01 * 1e4)).sqrt(), (1.0f64 / (0.01 * 1e4)).cbrt(), 0.5, 1.0 / (4.0 * 3f64.sqrt())]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!((tuned_stepsize(&t).unwrap() - want).abs() <= 1e-15);

        let c5 = StepsizeTuning { l: 3.0, sigma2: 1.0, tau: 2, n: 4, horizon: 100, variant: TuningVariant::Cor5 };
        let c6 = StepsizeTuning { variant: TuningVariant::Cor6, ..c5 };
        assert_eq!(c5.constants().1, c6.constants().1);
        assert_eq!(c5.constants().2, c6.constants().2);
        assert_eq!((c5.constants().0, c6.constants().0), (9.0, 1.0));

        assert!(tuned_stepsize(&StepsizeTuning { l: 0.0, ..base }).is_err());
        assert!(tuned_stepsize(&StepsizeTuning { horizon: 0, ..base }).is_err());
        assert!(tuned_stepsize(&StepsizeTuning { sigma2: -1.0, ..base }).is_err());
    }

    #[test]
    fn config_validation() {
        let p = problem(4);
        let mut c = config(Algorithm::GtStatic, GraphFamily::OnePeerExponential, 4, 5);
        assert!(run(&p, &c).is_err());
        c.algorithm = Algorithm::GtFt;
        c.alpha = 0.0;
        assert!(run(&p, &c).is_err());
        c.alpha = 1e-3;
        c.iters = 0;
        assert!(run(&p, &c).is_err());
        let c = config(Algorithm::GtFt, GraphFamily::OnePeerExponential, 8, 5);
        assert!(matches!(run(&p, &c), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn divergence_is_reported() {
        let p = problem(4);
        let mut c = config(Algorithm::GtFt, GraphFamily::PPeerHyperCuboid, 4, 2000);
        c.alpha = 1.0;
        assert!(matches!(run(&p, &c), Err(Error::Divergence { .. })));
    }

    #[test]
    fn record_every_thins_rows() {
        let p = problem(4);
        let mut c = config(Algorithm::GtFt, GraphFamily::PPeerHyperCuboid, 4, 25);
        c.record_every = 10;
        let out = run(&p, &c).unwrap();
        let iters: Vec<usize> = out.trace.rows.iter().map(|r| r.iter).collect();
        assert_eq!(iters, vec![0, 10, 20, 25]);
        assert_eq!(out.diagnostics.len(), 25);
    }
}
