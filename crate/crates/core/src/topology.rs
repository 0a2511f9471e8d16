//! Graph-sequence constructors and finite-time consensus verification.
//!
//! A sequence `W^{(0)}, …, W^{(τ-1)}` of doubly stochastic matrices has the
//! finite-time consensus (FTC) property when the ordered product
//! `W^{(τ-1)} ⋯ W^{(0)}` equals `J_n = (1/n) 1 1ᵀ`. The constructors here build
//! the four known FTC families plus their static counterparts; [`verify_ftc`]
//! recomputes the product and never trusts the `ftc_claimed` flag.

use std::fmt;
use std::str::FromStr;

use crate::matkit::{
    self, centered_product_residual, checked_pow, consensus_product_residual, doubly_stochastic_residual, kron_all,
    perfect_shuffle, DenseMatrix, PermutationMap, StochasticResidual,
};
use crate::{Error, Result};

/// Tolerance used for stochasticity and product checks.
pub const FTC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphFamily {
    OnePeerExponential,
    OnePeerHyperCube,
    PPeerHyperCuboid,
    /// De Bruijn graph with base `p` on `n = p^τ` nodes.
    DeBruijn {
        p: usize,
    },
    StaticExponential,
    StaticHyperCuboid,
    FullyConnected,
}

impl GraphFamily {
    /// The CLI-facing names, in a fixed order.
    pub const NAMES: [&'static str; 7] = [
        "one-peer-exp",
        "one-peer-hypercube",
        "p-peer-hypercuboid",
        "de-bruijn",
        "static-exp",
        "static-hypercuboid",
        "fully-connected",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GraphFamily::OnePeerExponential => "one-peer-exp",
            GraphFamily::OnePeerHyperCube => "one-peer-hypercube",
            GraphFamily::PPeerHyperCuboid => "p-peer-hypercuboid",
            GraphFamily::DeBruijn { .. } => "de-bruijn",
            GraphFamily::StaticExponential => "static-exp",
            GraphFamily::StaticHyperCuboid => "static-hypercuboid",
            GraphFamily::FullyConnected => "fully-connected",
        }
    }

    /// Resolves a CLI name for a given network size.
    ///
    /// For `de-bruijn` the base defaults to the smallest `p` with `n = p^τ`.
    pub fn resolve(name: &str, n: usize, base: Option<usize>) -> Result<Self> {
        let family = match name {
            "one-peer-exp" => GraphFamily::OnePeerExponential,
            "one-peer-hypercube" => GraphFamily::OnePeerHyperCube,
            "p-peer-hypercuboid" => GraphFamily::PPeerHyperCuboid,
            "de-bruijn" => {
                let p = match base {
                    Some(p) => p,
                    None => smallest_base(n)?,
                };
                GraphFamily::DeBruijn { p }
            }
            "static-exp" => GraphFamily::StaticExponential,
            "static-hypercuboid" => GraphFamily::StaticHyperCuboid,
            "fully-connected" => GraphFamily::FullyConnected,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown family {other:?} (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        Ok(family)
    }

    pub fn is_static(&self) -> bool {
        matches!(self, GraphFamily::StaticExponential | GraphFamily::StaticHyperCuboid | GraphFamily::FullyConnected)
    }

    /// The static counterpart used by optimization baselines.
    pub fn static_counterpart(&self) -> GraphFamily {
        match self {
            GraphFamily::OnePeerExponential | GraphFamily::StaticExponential => GraphFamily::StaticExponential,
            GraphFamily::OnePeerHyperCube | GraphFamily::PPeerHyperCuboid | GraphFamily::StaticHyperCuboid => {
                GraphFamily::StaticHyperCuboid
            }
            other => *other,
        }
    }
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphFamily::DeBruijn { p } => write!(f, "de-bruijn(p={p})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Name-only parse; de Bruijn bases are resolved later with [`GraphFamily::resolve`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyName(pub String);

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if GraphFamily::NAMES.contains(&s) {
            Ok(FamilyName(s.to_string()))
        } else {
            Err(Error::InvalidArgument(format!(
                "unknown family {s:?} (expected one of {})",
                GraphFamily::NAMES.join(", ")
            )))
        }
    }
}

fn smallest_base(n: usize) -> Result<usize> {
    check_n(n)?;
    (2..=n).find(|&p| is_power_of(n, p)).ok_or_else(|| Error::InvalidArgument(format!("no base for n = {n}")))
}

fn is_power_of(mut n: usize, p: usize) -> bool {
    while n.is_multiple_of(p) {
        n /= p;
    }
    n == 1
}

/// One weight matrix of a topology sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    pub weights: DenseMatrix,
    /// Position `l` inside the period.
    pub index: usize,
    /// Largest count of non-self neighbors (in or out) over all nodes.
    pub max_degree: usize,
}

impl MixingMatrix {
    pub fn new(weights: DenseMatrix, index: usize) -> Self {
        let max_degree = max_degree(&weights);
        Self { weights, index, max_degree }
    }

    pub fn n(&self) -> usize {
        self.weights.rows()
    }

    /// For each receiver `i`, the senders `j` with `w[j, i] != 0` and their weight.
    pub fn in_neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.n();
        (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| {
                        let w = self.weights.get(j, i);
                        (w != 0.0).then_some((j, w))
                    })
                    .collect()
            })
            .collect()
    }
}

fn max_degree(w: &DenseMatrix) -> usize {
    let n = w.rows();
    (0..n)
        .map(|i| {
            let out = (0..n).filter(|&j| j != i && w.get(i, j) != 0.0).count();
            let inn = (0..n).filter(|&j| j != i && w.get(j, i) != 0.0).count();
            out.max(inn)
        })
        .max()
        .unwrap_or(0)
}

/// One period of mixing matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySequence {
    pub n: usize,
    pub tau: usize,
    pub matrices: Vec<MixingMatrix>,
    pub family: GraphFamily,
    /// Whether the family/size pair is covered by a known FTC result.
    pub ftc_claimed: bool,
}

impl TopologySequence {
    /// Matrix used at round `k` (cycles through the period).
    pub fn at_round(&self, k: usize) -> &MixingMatrix {
        &self.matrices[k % self.matrices.len()]
    }

    pub fn weights(&self) -> Vec<DenseMatrix> {
        self.matrices.iter().map(|m| m.weights.clone()).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.matrices.iter().map(|m| m.max_degree).max().unwrap_or(0)
    }

    /// A single-matrix sequence, used for static topologies.
    pub fn single(family: GraphFamily, weights: DenseMatrix, ftc_claimed: bool) -> Self {
        Self { n: weights.rows(), tau: 1, matrices: vec![MixingMatrix::new(weights, 0)], family, ftc_claimed }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("network size must be at least 2 (got {n})")));
    }
    if n > matkit::MAX_DIM {
        return Err(Error::TooLarge(format!("network size {n} exceeds {}", matkit::MAX_DIM)));
    }
    Ok(())
}

/// Prime factors of `n` in ascending order, with multiplicity.
pub fn prime_factorize(n: usize) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("cannot factor {n}")));
    }
    let mut factors = Vec::new();
    let mut rest = n;
    let mut p = 2;
    while p * p <= rest {
        while rest.is_multiple_of(p) {
            factors.push(p);
            rest /= p;
        }
        p += 1;
    }
    if rest > 1 {
        factors.push(rest);
    }
    Ok(factors)
}

/// Mixed-radix representation.
///
/// `bases` is ordered `(p_{τ-1}, …, p_0)` and `digits[k]` is the digit for
/// `bases[k]`, so the last digit (base `p_0`) is the least significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiBaseCode {
    pub bases: Vec<usize>,
    pub digits: Vec<usize>,
}

impl MultiBaseCode {
    pub fn encode(i: usize, bases: &[usize]) -> Result<Self> {
        if bases.is_empty() || bases.iter().any(|&b| b < 2) {
            return Err(Error::InvalidArgument(format!("invalid bases {bases:?}")));
        }
        let total = bases.iter().try_fold(1usize, |acc, &b| acc.checked_mul(b));
        match total {
            Some(total) if i < total => {}
            _ => return Err(Error::InvalidArgument(format!("{i} is out of range for bases {bases:?}"))),
        }
        let mut digits = vec![0; bases.len()];
        let mut rest = i;
        for (d, &b) in digits.iter_mut().zip(bases).rev() {
            *d = rest % b;
            rest /= b;
        }
        Ok(Self { bases: bases.to_vec(), digits })
    }

    pub fn decode(&self) -> usize {
        self.bases.iter().zip(&self.digits).fold(0, |acc, (&b, &d)| acc * b + d)
    }

    /// Digit at position `r` counted from the least significant end (base `p_r`).
    pub fn digit(&self, r: usize) -> usize {
        self.digits[self.digits.len() - 1 - r]
    }
}

/// `⌈log₂ n⌉`
pub fn ceil_log2(n: usize) -> usize {
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

/// One-peer exponential graph: node `i` receives from `i - 2^{l mod τ}` (mod n)
/// with weight 1/2 and keeps 1/2 for itself.
pub fn one_peer_exponential(n: usize, l: usize) -> Result<MixingMatrix> {
    check_n(n)?;
    let tau = ceil_log2(n);
    let hop = 1usize << (l % tau);
    let w = DenseMatrix::from_fn(n, n, |i, j| {
        let mut v = 0.0;
        if i == j {
            v += 0.5;
        }
        if (j + n - i) % n == hop {
            v += 0.5;
        }
        v
    });
    Ok(MixingMatrix::new(w, l % tau))
}

/// One-peer hyper-cube: `i` pairs with `i XOR 2^{l mod τ}`.
pub fn one_peer_hypercube(n: usize, l: usize) -> Result<MixingMatrix> {
    check_n(n)?;
    if !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("one-peer hyper-cube needs a power of 2, got {n}")));
    }
    let tau = n.trailing_zeros() as usize;
    let bit = 1usize << (l % tau);
    let w = DenseMatrix::from_fn(n, n, |i, j| if i == j || (i ^ j) == bit { 0.5 } else { 0.0 });
    Ok(MixingMatrix::new(w, l % tau))
}

/// Bases `(p_{τ-1}, …, p_0)` for the hyper-cuboid on `n` nodes: the prime
/// factors in ascending order, so the largest prime sits at `p_0`.
pub fn cuboid_bases(n: usize) -> Result<Vec<usize>> {
    check_n(n)?;
    prime_factorize(n)
}

/// p-peer hyper-cuboid via its Kronecker form
/// `W^{(l)} = W(p_{τ-1}) ⊗ … ⊗ W(p_0)` with `W(p_r) = J_{p_r}` when `r = l mod τ`
/// and `I_{p_r}` otherwise.
pub fn p_peer_hypercuboid(n: usize, l: usize) -> Result<MixingMatrix> {
    let bases = cuboid_bases(n)?;
    let w = hypercuboid_kron(&bases, l)?;
    Ok(MixingMatrix::new(w, l % bases.len()))
}

fn hypercuboid_kron(bases: &[usize], l: usize) -> Result<DenseMatrix> {
    let tau = bases.len();
    let active = l % tau;
    let factors: Vec<DenseMatrix> = bases
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let r = tau - 1 - k;
            if r == active {
                DenseMatrix::averaging(p)
            } else {
                DenseMatrix::identity(p)
            }
        })
        .collect();
    kron_all(&factors)
}

/// p-peer hyper-cuboid from the digit-wise definition: `i` and `j` are joined
/// with weight `1/p_r` when their codes differ exactly in digit `r = l mod τ`.
pub fn p_peer_hypercuboid_elementwise(n: usize, l: usize) -> Result<MixingMatrix> {
    let bases = cuboid_bases(n)?;
    let tau = bases.len();
    let r = l % tau;
    let p_r = bases[tau - 1 - r];
    let codes: Vec<MultiBaseCode> = (0..n).map(|i| MultiBaseCode::encode(i, &bases)).collect::<Result<_>>()?;
    let w = DenseMatrix::from_fn(n, n, |i, j| {
        let differ: Vec<usize> = (0..tau).filter(|&q| codes[i].digit(q) != codes[j].digit(q)).collect();
        if i == j || differ == [r] {
            1.0 / p_r as f64
        } else {
            0.0
        }
    });
    Ok(MixingMatrix::new(w, r))
}

fn de_bruijn_size(p: usize, tau: usize) -> Result<usize> {
    if p < 2 || tau < 1 {
        return Err(Error::InvalidArgument(format!("de Bruijn needs p >= 2, tau >= 1 (got {p}, {tau})")));
    }
    checked_pow(p, tau)
}

/// De Bruijn graph on `p^tau` nodes: `w[i, j] = 1/p` iff the low `τ-1` digits
/// of `i` equal the high `τ-1` digits of `j` (shift left, append a digit).
pub fn de_bruijn(p: usize, tau: usize) -> Result<MixingMatrix> {
    let n = de_bruijn_size(p, tau)?;
    let top = n / p;
    let w = DenseMatrix::from_fn(n, n, |i, j| if i % top == j / p { 1.0 / p as f64 } else { 0.0 });
    Ok(MixingMatrix::new(w, 0))
}

/// De Bruijn matrix through its Kronecker form `(J_p ⊗ I ⊗ … ⊗ I) · P_s`,
/// with `P_s` the [`perfect_shuffle`].
pub fn de_bruijn_kron(p: usize, tau: usize) -> Result<DenseMatrix> {
    let n = de_bruijn_size(p, tau)?;
    let left = hypercuboid_kron(&vec![p; tau], tau - 1)?;
    let shuffle = perfect_shuffle(p, tau)?;
    // (A · P)[i, j] = A[i, map[j]]
    Ok(DenseMatrix::from_fn(n, n, |i, j| left.get(i, shuffle.as_slice()[j])))
}

/// How a static variant assigns weights on the union of the period's edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StaticWeighting {
    /// Every node splits its weight evenly over itself and its union neighbors.
    #[default]
    Uniform,
    /// Arithmetic mean `(1/τ) Σ W^{(l)}` of one period.
    PeriodMean,
}

/// Static counterpart of a dynamic family with uniform weights on the edge union.
pub fn static_variant(family: GraphFamily, n: usize) -> Result<MixingMatrix> {
    static_variant_with(family, n, StaticWeighting::Uniform)
}

pub fn static_variant_with(family: GraphFamily, n: usize, weighting: StaticWeighting) -> Result<MixingMatrix> {
    if family.is_static() {
        return Err(Error::InvalidArgument(format!("{family} is already static")));
    }
    let period = dynamic_period(family, n)?;
    let first = &period[0].weights;
    if period.iter().all(|m| &m.weights == first) {
        return Ok(MixingMatrix::new(first.clone(), 0));
    }
    let w = match weighting {
        StaticWeighting::PeriodMean => {
            let inv = 1.0 / period.len() as f64;
            DenseMatrix::from_fn(n, n, |i, j| period.iter().map(|m| m.weights.get(i, j)).sum::<f64>() * inv)
        }
        StaticWeighting::Uniform => {
            let support = |i: usize, j: usize| i == j || period.iter().any(|m| m.weights.get(i, j) != 0.0);
            let w = DenseMatrix::from_fn(n, n, |i, j| {
                if support(i, j) {
                    let row_count = (0..n).filter(|&c| support(i, c)).count();
                    1.0 / row_count as f64
                } else {
                    0.0
                }
            });
            let res = doubly_stochastic_residual(&w);
            if res.max() > FTC_TOL {
                return Err(Error::InvalidArgument(format!(
                    "uniform weights on the {family} union are not doubly stochastic (residual {:e})",
                    res.max()
                )));
            }
            w
        }
    };
    Ok(MixingMatrix::new(w, 0))
}

fn dynamic_period(family: GraphFamily, n: usize) -> Result<Vec<MixingMatrix>> {
    check_n(n)?;
    match family {
        GraphFamily::OnePeerExponential => (0..ceil_log2(n)).map(|l| one_peer_exponential(n, l)).collect(),
        GraphFamily::OnePeerHyperCube => {
            if !n.is_power_of_two() {
                return Err(Error::InvalidArgument(format!("one-peer hyper-cube needs a power of 2, got {n}")));
            }
            (0..n.trailing_zeros() as usize).map(|l| one_peer_hypercube(n, l)).collect()
        }
        GraphFamily::PPeerHyperCuboid => (0..prime_factorize(n)?.len()).map(|l| p_peer_hypercuboid(n, l)).collect(),
        GraphFamily::DeBruijn { p } => {
            let tau = exact_log(n, p)?;
            let w = de_bruijn(p, tau)?;
            Ok((0..tau).map(|l| MixingMatrix { index: l, ..w.clone() }).collect())
        }
        GraphFamily::FullyConnected => Ok(vec![MixingMatrix::new(DenseMatrix::averaging(n), 0)]),
        GraphFamily::StaticExponential | GraphFamily::StaticHyperCuboid => {
            Err(Error::InvalidArgument(format!("{family} has no dynamic period")))
        }
    }
}

fn exact_log(n: usize, p: usize) -> Result<usize> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("de Bruijn base must be at least 2 (got {p})")));
    }
    let mut tau = 0;
    let mut rest = n;
    while rest > 1 && rest.is_multiple_of(p) {
        rest /= p;
        tau += 1;
    }
    if rest != 1 || tau == 0 {
        return Err(Error::InvalidArgument(format!("de Bruijn needs n = {p}^tau, got n = {n}")));
    }
    Ok(tau)
}

/// Builds one period of the given family on `n` nodes.
pub fn build_sequence(family: GraphFamily, n: usize) -> Result<TopologySequence> {
    check_n(n)?;
    let (matrices, ftc_claimed) = match family {
        GraphFamily::StaticExponential => (vec![static_variant(GraphFamily::OnePeerExponential, n)?], false),
        GraphFamily::StaticHyperCuboid => (vec![static_variant(GraphFamily::PPeerHyperCuboid, n)?], false),
        GraphFamily::OnePeerExponential => (dynamic_period(family, n)?, n.is_power_of_two()),
        _ => (dynamic_period(family, n)?, true),
    };
    Ok(TopologySequence { n, tau: matrices.len(), matrices, family, ftc_claimed })
}

/// Outcome of [`verify_ftc`].
#[derive(Debug, Clone, PartialEq)]
pub struct FtcReport {
    pub stochastic: Vec<StochasticResidual>,
    /// `‖W^{(τ-1)} ⋯ W^{(0)} - J_n‖_max`
    pub product_residual: f64,
    /// `‖(W^{(τ-1)} - J_n) ⋯ (W^{(0)} - J_n)‖_max`
    pub centered_residual: f64,
    pub pass: bool,
}

impl FtcReport {
    pub fn max_stochastic_residual(&self) -> f64 {
        self.stochastic.iter().map(StochasticResidual::max).fold(0.0, f64::max)
    }
}

/// Recomputes the period product and stochasticity of every matrix.
pub fn verify_ftc(seq: &TopologySequence, tol: f64) -> Result<FtcReport> {
    verify_ftc_matrices(&seq.weights(), tol)
}

pub fn verify_ftc_matrices(matrices: &[DenseMatrix], tol: f64) -> Result<FtcReport> {
    let stochastic: Vec<_> = matrices.iter().map(doubly_stochastic_residual).collect();
    let product_residual = consensus_product_residual(matrices)?;
    let centered_residual = centered_product_residual(matrices)?;
    let pass = product_residual <= tol && stochastic.iter().all(|r| r.max() <= tol);
    Ok(FtcReport { stochastic, product_residual, centered_residual, pass })
}

/// Permutations relating the de Bruijn matrix to one hyper-cuboid matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationEquivalence {
    /// `P = (P_sᵀ)^{l+1}`
    pub row_perm: PermutationMap,
    /// `Q = (P_sᵀ)^l`
    pub col_perm: PermutationMap,
    /// Index of the hyper-cuboid matrix reproduced by `P · W_db · Qᵀ`.
    pub cuboid_index: usize,
    /// `‖W_hc^{(cuboid_index)} - P · W_db · Qᵀ‖_max`
    pub max_error: f64,
}

/// Relabels the de Bruijn graph on `p^tau` nodes into the `l`-th p-peer
/// hyper-cuboid: `W_hc^{(l mod τ)} = (P_sᵀ)^{l+1} W_db P_s^l`.
pub fn debruijn_cuboid_permutation(p: usize, tau: usize, l: usize) -> Result<PermutationEquivalence> {
    let w_db = de_bruijn(p, tau)?.weights;
    let shuffle_t = perfect_shuffle(p, tau)?.inverse();
    let row_perm = shuffle_t.pow(l + 1);
    let col_perm = shuffle_t.pow(l);
    let relabeled = w_db.permuted(&row_perm, &col_perm)?;
    let cuboid_index = l % tau;
    let target = hypercuboid_kron(&vec![p; tau], cuboid_index)?;
    let max_error = target.max_abs_diff(&relabeled)?;
    Ok(PermutationEquivalence { row_perm, col_perm, cuboid_index, max_error })
}
