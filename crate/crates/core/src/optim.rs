//! Nonconvex regularized least-squares benchmark and its gradient oracles.
//!
//! Agent `i` holds `f_i(x) = ‖A_i x - b_i‖² + μ Σ_j x_j² / (1 + x_j²)` and the
//! network objective is `f = (1/n) Σ f_i`.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matkit::{dot, format_f64, power_iteration_psd, DenseMatrix};
use crate::{Error, Result};

/// Default regularization weight.
pub const DEFAULT_MU: f64 = 0.1;

/// RNG domains; each gets its own key space under the root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Problem = 1,
    GradientNoise = 2,
    InitialPoint = 3,
    Consensus = 4,
}

/// Counter-based RNG: the stream is a pure function of its coordinates.
pub fn stream_rng(root: u64, domain: Stream, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([root, domain as u64, a, b]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    /// `m × d` data matrix per agent.
    pub a: Vec<DenseMatrix>,
    pub b: Vec<Vec<f64>>,
    pub mu: f64,
    pub delta: f64,
    pub seed: u64,
}

/// Draws `A_i`, `x̃_i`, `z_i` i.i.d. standard normal and sets `b_i = A_i x̃_i + δ z_i`.
pub fn generate_problem(n: usize, m: usize, d: usize, delta: f64, mu: f64, seed: u64) -> Result<Problem> {
    if n == 0 || m == 0 || d == 0 {
        return Err(Error::InvalidArgument(format!("problem sizes must be positive (n={n}, m={m}, d={d})")));
    }
    if !(delta >= 0.0 && mu >= 0.0 && delta.is_finite() && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("need delta, mu >= 0 (got {delta}, {mu})")));
    }
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for agent in 0..n {
        let mut rng = stream_rng(seed, Stream::Problem, agent as u64, 0);
        let ai = DenseMatrix::new(m, d, gaussian_vec(&mut rng, m * d))?;
        let target = gaussian_vec(&mut rng, d);
        let noise = gaussian_vec(&mut rng, m);
        let bi = ai.mul_vec(&target)?.iter().zip(&noise).map(|(v, z)| v + delta * z).collect();
        a.push(ai);
        b.push(bi);
    }
    Ok(Problem { n, m, d, a, b, mu, delta, seed })
}

impl Problem {
    /// Builds a problem from explicit data (`delta` and `seed` are recorded as 0).
    pub fn from_parts(a: Vec<DenseMatrix>, b: Vec<Vec<f64>>, mu: f64) -> Result<Self> {
        let n = a.len();
        if n == 0 || b.len() != n {
            return Err(Error::DimensionMismatch(format!("{} data matrices, {} targets", n, b.len())));
        }
        let (m, d) = (a[0].rows(), a[0].cols());
        if a.iter().any(|ai| ai.rows() != m || ai.cols() != d) || b.iter().any(|bi| bi.len() != m) {
            return Err(Error::DimensionMismatch("inconsistent agent data shapes".into()));
        }
        if mu.is_nan() || mu < 0.0 || b.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("mu must be >= 0 and targets finite".into()));
        }
        Ok(Self { n, m, d, a, b, mu, delta: 0.0, seed: 0 })
    }

    fn check(&self, agent: usize, x: &[f64]) -> Result<()> {
        if agent >= self.n {
            return Err(Error::InvalidArgument(format!("agent {agent} out of range (n = {})", self.n)));
        }
        if x.len() != self.d {
            return Err(Error::DimensionMismatch(format!("iterate of length {} for d = {}", x.len(), self.d)));
        }
        Ok(())
    }

    fn residual(&self, agent: usize, x: &[f64]) -> Vec<f64> {
        let a = &self.a[agent];
        (0..self.m).map(|r| dot(a.row(r), x) - self.b[agent][r]).collect()
    }

    pub fn local_objective(&self, agent: usize, x: &[f64]) -> Result<f64> {
        self.check(agent, x)?;
        let r = self.residual(agent, x);
        let reg: f64 = x.iter().map(|v| v * v / (1.0 + v * v)).sum();
        Ok(dot(&r, &r) + self.mu * reg)
    }

    /// `∇f_i(x) = 2 A_iᵀ(A_i x - b_i) + μ r(x)` with `r(x)_j = 2 x_j / (1 + x_j²)²`.
    pub fn local_gradient(&self, agent: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check(agent, x)?;
        let mut g = vec![0.0; self.d];
        self.local_gradient_into(agent, x, &mut g);
        Ok(g)
    }

    pub(crate) fn local_gradient_into(&self, agent: usize, x: &[f64], g: &mut [f64]) {
        let a = &self.a[agent];
        for (gj, xj) in g.iter_mut().zip(x) {
            let s = 1.0 + xj * xj;
            *gj = self.mu * 2.0 * xj / (s * s);
        }
        for r in 0..self.m {
            let row = a.row(r);
            let res = 2.0 * (dot(row, x) - self.b[agent][r]);
            for (gj, aj) in g.iter_mut().zip(row) {
                *gj += res * aj;
            }
        }
    }

    pub fn global_objective(&self, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.n {
            total += self.local_objective(i, x)?;
        }
        Ok(total / self.n as f64)
    }

    pub fn global_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(0, x)?;
        let mut acc = vec![0.0; self.d];
        let mut g = vec![0.0; self.d];
        for i in 0..self.n {
            self.local_gradient_into(i, x, &mut g);
            acc.iter_mut().zip(&g).for_each(|(a, v)| *a += v);
        }
        let inv = 1.0 / self.n as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        Ok(acc)
    }

    /// Text dump: a `n,m,d,mu,delta,seed` header and value line, then per agent
    /// a `# agent i` line, the `m` rows of `A_i` and the `m` entries of `b_i`.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n,m,d,mu,delta,seed").unwrap();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            self.n,
            self.m,
            self.d,
            format_f64(self.mu),
            format_f64(self.delta),
            self.seed
        )
        .unwrap();
        for i in 0..self.n {
            writeln!(out, "# agent {i}").unwrap();
            out.push_str(&self.a[i].to_csv());
            for v in &self.b[i] {
                writeln!(out, "{}", format_f64(*v)).unwrap();
            }
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let bad = |what: &str| Error::Parse(format!("problem dump: {what}"));
        if lines.next() != Some("n,m,d,mu,delta,seed") {
            return Err(bad("missing header"));
        }
        let vals: Vec<&str> = lines.next().ok_or_else(|| bad("missing values"))?.split(',').collect();
        if vals.len() != 6 {
            return Err(bad("header values"));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad("integer field"));
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad("float field"));
        let (n, m, d) = (int(vals[0])?, int(vals[1])?, int(vals[2])?);
        let (mu, delta) = (float(vals[3])?, float(vals[4])?);
        let seed = vals[5].parse::<u64>().map_err(|_| bad("seed"))?;
        let body: Vec<&str> = lines.collect();
        let block = 1 + 2 * m;
        if body.len() != n * block {
            return Err(bad("unexpected number of lines"));
        }
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for (i, chunk) in body.chunks(block).enumerate() {
            if chunk[0] != format!("# agent {i}") {
                return Err(bad("agent separator"));
            }
            let ai = DenseMatrix::from_csv(&chunk[1..=m].join("\n"))?;
            if ai.rows() != m || ai.cols() != d {
                return Err(bad("matrix shape"));
            }
            let bi = chunk[m + 1..].iter().map(|s| float(s)).collect::<Result<Vec<_>>>()?;
            a.push(ai);
            b.push(bi);
        }
        let mut p = Self::from_parts(a, b, mu)?;
        p.delta = delta;
        p.seed = seed;
        Ok(p)
    }
}

/// Additive Gaussian gradient noise `s ~ N(0, σ² I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma2: f64,
    pub stream: u64,
}

impl NoiseModel {
    pub fn new(sigma2: f64, stream: u64) -> Result<Self> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma2 must be finite and >= 0 (got {sigma2})")));
        }
        Ok(Self { sigma2, stream })
    }

    pub fn exact() -> Self {
        Self { sigma2: 0.0, stream: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub agent: usize,
    pub iterate: Vec<f64>,
    pub value: Vec<f64>,
}

/// `∇f_i(x) + s` where `s` depends only on `(noise.stream, agent, round)`.
pub fn stochastic_gradient(
    problem: &Problem,
    agent: usize,
    x: &[f64],
    noise: &NoiseModel,
    round: usize,
) -> Result<GradientSample> {
    let mut value = problem.local_gradient(agent, x)?;
    add_noise(&mut value, noise, agent, round);
    Ok(GradientSample { agent, iterate: x.to_vec(), value })
}

pub(crate) fn add_noise(value: &mut [f64], noise: &NoiseModel, agent: usize, round: usize) {
    if noise.sigma2 > 0.0 {
        let sigma = noise.sigma2.sqrt();
        let mut rng = stream_rng(noise.stream, Stream::GradientNoise, agent as u64, round as u64);
        for v in value.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += sigma * z;
        }
    }
}

/// `(1/n) Σ_i ‖x_i - reference‖²`
pub fn consensus_error(states: &[Vec<f64>], reference: &[f64]) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    let total: f64 = states
        .iter()
        .map(|x| {
            debug_assert_eq!(x.len(), reference.len());
            x.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        })
        .sum();
    total / states.len() as f64
}

/// Mean of a set of equal-length vectors.
pub fn mean_vector(states: &[Vec<f64>]) -> Vec<f64> {
    let d = states.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; d];
    for x in states {
        acc.iter_mut().zip(x).for_each(|(a, v)| *a += v);
    }
    let inv = 1.0 / states.len() as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    acc
}

/// Gradient Lipschitz constant `L = 2 max_i λ_max(A_iᵀA_i) + 2μ`.
pub fn estimate_smoothness(problem: &Problem) -> Result<f64> {
    let mut lambda_max = 0.0f64;
    for a in &problem.a {
        let lambda = power_iteration_psd(
            problem.d,
            |v, out| {
                let av = a.mul_vec(v).expect("shape");
                out.iter_mut().for_each(|o| *o = 0.0);
                for (r, s) in av.iter().enumerate() {
                    for (o, aj) in out.iter_mut().zip(a.row(r)) {
                        *o += s * aj;
                    }
                }
            },
            false,
            vec![1.0; problem.d],
            1e-10,
            100_000,
        )?;
        lambda_max = lambda_max.max(lambda);
    }
    Ok(2.0 * lambda_max + 2.0 * problem.mu)
}
