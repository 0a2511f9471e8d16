//! Dense matrix kernels for topology construction and verification.
//!
//! Everything here works on small dense row-major matrices (a few hundred
//! rows at most). Indexing is 0-based throughout.

use std::fmt::Write as _;

use crate::{Error, Result};

/// Largest row or column count any constructor will produce.
pub const MAX_DIM: usize = 4096;

/// Default relative tolerance for [`spectral_deviation`].
pub const SPECTRAL_TOL: f64 = 1e-12;
/// Default iteration cap for [`spectral_deviation`].
pub const SPECTRAL_MAX_ITERS: usize = 10_000;

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!("empty matrix {rows}x{cols}")));
        }
        check_dim(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite entry at ({}, {})", pos / cols, pos % cols)));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// The exact-averaging matrix `J_n = (1/n) 1 1^T`.
    pub fn averaging(n: usize) -> Self {
        let w = 1.0 / n as f64;
        Self { rows: n, cols: n, data: vec![w; n * n] }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Max-norm of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `P * self * Q^T` for permutations `P` (rows) and `Q` (columns).
    ///
    /// Entries are moved, never combined, so the result is exact.
    pub fn permuted(&self, rows: &PermutationMap, cols: &PermutationMap) -> Result<Self> {
        if rows.len() != self.rows || cols.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "permutations of size {}/{} applied to {}x{}",
                rows.len(),
                cols.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(rows.map[i], cols.map[j], self.get(i, j));
            }
        }
        Ok(out)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// Renders the matrix CSV format: one row per line, 17 significant digits,
    /// comma separated, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows * self.cols * 24);
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{}", format_f64(*v)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the matrix CSV format. Blank lines and `#` comment lines are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut cols = None;
        let mut data = Vec::new();
        let mut rows = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let before = data.len();
            for field in line.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {:?}", lineno + 1, field)))?;
                data.push(v);
            }
            let width = data.len() - before;
            match cols {
                None => cols = Some(width),
                Some(c) if c != width => {
                    return Err(Error::Parse(format!("line {}: expected {c} fields, got {width}", lineno + 1)))
                }
                _ => {}
            }
            rows += 1;
        }
        let cols = cols.ok_or_else(|| Error::Parse("no rows".into()))?;
        Self::new(rows, cols, data)
    }
}

/// Formats a float with 17 significant digits (round-trips bit-exactly).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_dim(rows: usize, cols: usize) -> Result<()> {
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::TooLarge(format!("{rows}x{cols} exceeds the {MAX_DIM} limit")));
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Kronecker product `a ⊗ b`; block `(i, j)` equals `a[i, j] * b`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let rows = a.rows.checked_mul(b.rows).ok_or_else(|| Error::TooLarge("kron rows overflow".into()))?;
    let cols = a.cols.checked_mul(b.cols).ok_or_else(|| Error::TooLarge("kron cols overflow".into()))?;
    check_dim(rows, cols)?;
    let mut out = DenseMatrix::zeros(rows, cols);
    for ai in 0..a.rows {
        for aj in 0..a.cols {
            let s = a.get(ai, aj);
            if s == 0.0 {
                continue;
            }
            for bi in 0..b.rows {
                let dst = (ai * b.rows + bi) * cols + aj * b.cols;
                for (o, bv) in out.data[dst..dst + b.cols].iter_mut().zip(b.row(bi)) {
                    *o = s * bv;
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a list of factors, leftmost first.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a DenseMatrix>) -> Result<DenseMatrix> {
    let mut iter = factors.into_iter();
    let first = iter.next().ok_or_else(|| Error::InvalidArgument("empty Kronecker factor list".into()))?.clone();
    iter.try_fold(first, |acc, f| kron(&acc, f))
}

pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let s = a.get(i, k);
            if s == 0.0 {
                continue;
            }
            let dst = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, bv) in dst.iter_mut().zip(b.row(k)) {
                *o += s * bv;
            }
        }
    }
    Ok(out)
}

/// A permutation of `{0, .., size-1}`; `map[i]` is where index `i` is sent.
///
/// As a matrix, `P e_i = e_{map[i]}`, i.e. `P[map[i], i] = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationMap {
    map: Vec<usize>,
}

impl PermutationMap {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidArgument(format!("{map:?} is not a bijection")));
            }
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        Self { map: inv }
    }

    /// The permutation `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "permutation size mismatch");
        Self { map: other.map.iter().map(|&m| self.map[m]).collect() }
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::identity(self.len()), |acc, _| self.compose(&acc))
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        let n = self.len();
        let mut m = DenseMatrix::zeros(n, n);
        for (i, &dst) in self.map.iter().enumerate() {
            m.set(dst, i, 1.0);
        }
        m
    }
}

/// The perfect shuffle on `p^tau` indices.
///
/// With `i = (i_{τ-1} … i_1 i_0)` in base `p`, it maps basis vector
/// `a_{τ-1} ⊗ … ⊗ a_0` to `a_0 ⊗ a_{τ-1} ⊗ … ⊗ a_1`: the lowest digit becomes
/// the highest and the rest shift down by one place.
pub fn perfect_shuffle(p: usize, tau: usize) -> Result<PermutationMap> {
    if p < 2 || tau < 1 {
        return Err(Error::InvalidArgument(format!("perfect shuffle needs p >= 2, tau >= 1 (got {p}, {tau})")));
    }
    let n = checked_pow(p, tau)?;
    let top = n / p;
    let map = (0..n).map(|i| (i % p) * top + i / p).collect();
    Ok(PermutationMap { map })
}

pub(crate) fn checked_pow(p: usize, tau: usize) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..tau {
        n = n
            .checked_mul(p)
            .filter(|&n| n <= MAX_DIM)
            .ok_or_else(|| Error::TooLarge(format!("{p}^{tau} exceeds the {MAX_DIM} limit")))?;
    }
    Ok(n)
}

/// Deviation of a square matrix from double stochasticity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticResidual {
    /// `max_i |Σ_j w[i,j] - 1|`
    pub row: f64,
    /// `max_j |Σ_i w[i,j] - 1|`
    pub col: f64,
    /// `max(0, -min entry)`
    pub negativity: f64,
}

impl StochasticResidual {
    pub fn max(&self) -> f64 {
        self.row.max(self.col).max(self.negativity)
    }
}

pub fn doubly_stochastic_residual(w: &DenseMatrix) -> StochasticResidual {
    debug_assert!(w.is_square());
    let n = w.rows;
    let mut col_sums = vec![0.0; w.cols];
    let mut row = 0.0f64;
    let mut min = f64::INFINITY;
    for i in 0..n {
        let r = w.row(i);
        row = row.max((r.iter().sum::<f64>() - 1.0).abs());
        for (c, v) in col_sums.iter_mut().zip(r) {
            *c += v;
            min = min.min(*v);
        }
    }
    let col = col_sums.iter().fold(0.0f64, |acc, c| acc.max((c - 1.0).abs()));
    StochasticResidual { row, col, negativity: (-min).max(0.0) }
}

/// Ordered product `W^{(last)} ⋯ W^{(first)}`; the first list element is applied first.
pub fn ordered_product(seq: &[DenseMatrix]) -> Result<DenseMatrix> {
    let (first, rest) = seq.split_first().ok_or_else(|| Error::InvalidArgument("empty matrix sequence".into()))?;
    if !first.is_square() {
        return Err(Error::DimensionMismatch("sequence matrices must be square".into()));
    }
    rest.iter().try_fold(first.clone(), |acc, w| {
        if w.rows != first.rows || !w.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "sequence mixes {}x{} and {}x{}",
                first.rows, first.cols, w.rows, w.cols
            )));
        }
        matmul(w, &acc)
    })
}

/// `‖W^{(τ-1)} ⋯ W^{(0)} - J_n‖_max`.
pub fn consensus_product_residual(seq: &[DenseMatrix]) -> Result<f64> {
    let prod = ordered_product(seq)?;
    prod.max_abs_diff(&DenseMatrix::averaging(prod.rows))
}

/// `‖Ŵ^{(τ-1)} ⋯ Ŵ^{(0)}‖_max` with `Ŵ = W - J_n`.
pub fn centered_product_residual(seq: &[DenseMatrix]) -> Result<f64> {
    let centered = seq.iter().map(|w| w.sub(&DenseMatrix::averaging(w.rows))).collect::<Result<Vec<_>>>()?;
    Ok(ordered_product(&centered)?.max_abs())
}

/// `ρ = ‖W - J_n‖_2`, by power iteration on `ŴᵀŴ` restricted to the
/// complement of the consensus direction.
pub fn spectral_deviation(w: &DenseMatrix, tol: f64, max_iters: usize) -> Result<f64> {
    if !w.is_square() {
        return Err(Error::DimensionMismatch("spectral deviation of a non-square matrix".into()));
    }
    let n = w.rows;
    let centered = w.sub(&DenseMatrix::averaging(n))?;
    let ct = centered.transpose();
    // Alternating signs with a slight non-periodic tilt so the start vector
    // is never exactly orthogonal to a structured singular subspace.
    let seed: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } + 1.0 / (i as f64 + 3.0)).collect();
    let lambda = power_iteration_psd(
        n,
        |v, out| {
            let tmp = centered.mul_vec(v).expect("square");
            out.copy_from_slice(&ct.mul_vec(&tmp).expect("square"));
        },
        true,
        seed,
        tol,
        max_iters,
    )?;
    Ok(lambda.max(0.0).sqrt())
}

/// Largest eigenvalue of a symmetric positive semidefinite operator.
///
/// When `deflate_mean` is set, the iterate is kept orthogonal to `1`.
/// Stops once the Rayleigh quotient changes by at most `tol` relatively.
pub(crate) fn power_iteration_psd(
    n: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    deflate_mean: bool,
    mut v: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<f64> {
    debug_assert_eq!(v.len(), n);
    let project = |x: &mut [f64]| {
        if deflate_mean {
            let mean = x.iter().sum::<f64>() / n as f64;
            x.iter_mut().for_each(|e| *e -= mean);
        }
    };
    project(&mut v);
    if !normalize(&mut v) {
        return Ok(0.0);
    }
    let mut out = vec![0.0; n];
    let mut prev = f64::NAN;
    for _ in 0..max_iters {
        apply(&v, &mut out);
        project(&mut out);
        let rq = dot(&v, &out);
        if !normalize(&mut out) {
            return Ok(0.0);
        }
        std::mem::swap(&mut v, &mut out);
        if (rq - prev).abs() <= tol * rq.abs() {
            return Ok(rq);
        }
        prev = rq;
    }
    Err(Error::NonConvergence { what: "power iteration", iters: max_iters })
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = dot(v, v).sqrt();
    if norm <= 1e-300 {
        return false;
    }
    v.iter_mut().for_each(|e| *e /= norm);
    true
}
