//! Sparse vectors, datasets and the two vector decompositions used by the
//! analysis: top-ℓ head/tail and the 1/√ℓ heavy/light threshold split.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::rng;

/// A vector stored as strictly increasing `(index, value)` pairs with no
/// explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Validating constructor: indices strictly increasing and `< dim`,
    /// values finite and nonzero.
    pub fn new(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: indices.len(), found: values.len() });
        }
        for (k, &i) in indices.iter().enumerate() {
            if i >= dim {
                return Err(invalid("index", format!("{i} out of range for dimension {dim}")));
            }
            if k > 0 && indices[k - 1] >= i {
                return Err(invalid("index", "indices must be strictly increasing"));
            }
        }
        if let Some(v) = values.iter().find(|v| **v == 0.0 || !v.is_finite()) {
            return Err(invalid("value", format!("{v} is zero or not finite")));
        }
        Ok(Self { dim, indices, values })
    }

    /// Builds from unordered pairs. Zeros are dropped; repeated indices are
    /// rejected.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.retain(|p| p.1 != 0.0);
        pairs.sort_by_key(|p| p.0);
        let (indices, values) = pairs.into_iter().unzip();
        Self::new(dim, indices, values)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let (indices, nonzero) = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        Self { dim: values.len(), indices, values: nonzero }
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, indices: Vec::new(), values: Vec::new() }
    }

    /// Standard basis vector `e_i`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        Self::new(dim, vec![i], vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, i: usize) -> f64 {
        self.indices.binary_search(&i).map_or(0.0, |k| self.values[k])
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, alpha: f64) -> Self {
        if alpha == 0.0 {
            return Self::zero(self.dim);
        }
        Self {
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    /// `alpha·self + beta·other`, dropping entries that cancel exactly.
    pub fn axpby(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        let (mut a, mut b) = (0, 0);
        loop {
            let (i, v) = match (self.indices.get(a), other.indices.get(b)) {
                (None, None) => break,
                (Some(&i), None) => {
                    a += 1;
                    (i, alpha * self.values[a - 1])
                }
                (None, Some(&j)) => {
                    b += 1;
                    (j, beta * other.values[b - 1])
                }
                (Some(&i), Some(&j)) if i < j => {
                    a += 1;
                    (i, alpha * self.values[a - 1])
                }
                (Some(&i), Some(&j)) if j < i => {
                    b += 1;
                    (j, beta * other.values[b - 1])
                }
                (Some(&i), Some(_)) => {
                    a += 1;
                    b += 1;
                    (i, alpha * self.values[a - 1] + beta * other.values[b - 1])
                }
            };
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        Ok(Self { dim: self.dim, indices, values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpby(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpby(1.0, other, 1.0)
    }

    /// `‖self − other‖²` by merging supports, without allocating.
    pub fn dist_sq(&self, other: &Self) -> f64 {
        let (mut a, mut b, mut acc) = (0, 0, 0.0);
        while a < self.nnz() || b < other.nnz() {
            let t = match (self.indices.get(a), other.indices.get(b)) {
                (Some(&i), Some(&j)) if i == j => {
                    a += 1;
                    b += 1;
                    self.values[a - 1] - other.values[b - 1]
                }
                (Some(&i), Some(&j)) if i < j => {
                    a += 1;
                    self.values[a - 1]
                }
                (Some(_), None) => {
                    a += 1;
                    self.values[a - 1]
                }
                _ => {
                    b += 1;
                    other.values[b - 1]
                }
            };
            acc += t * t;
        }
        acc
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let (mut a, mut b, mut acc) = (0, 0, 0.0);
        while a < self.nnz() && b < other.nnz() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    /// Keeps only entries whose positions satisfy `keep`.
    fn partition(&self, keep: impl Fn(usize) -> bool) -> (Self, Self) {
        let mut first = Self::zero(self.dim);
        let mut second = Self::zero(self.dim);
        for (k, (i, v)) in self.iter().enumerate() {
            let dst = if keep(k) { &mut first } else { &mut second };
            dst.indices.push(i);
            dst.values.push(v);
        }
        (first, second)
    }
}

/// Which rule produced a [`SplitVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Largest-ℓ magnitudes form the head.
    Top,
    /// Entries with magnitude strictly above 1/√ℓ form the head.
    Heavy,
}

/// A vector split into two parts with disjoint supports.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitVector {
    /// Head (top-ℓ mode) or heavy part (threshold mode).
    pub head: SparseVector,
    /// Tail (top-ℓ mode) or light part (threshold mode).
    pub tail: SparseVector,
    pub ell: usize,
    pub mode: SplitMode,
}

impl SplitVector {
    /// Recombines the parts. Exact, since supports are disjoint.
    pub fn reconstruct(&self) -> SparseVector {
        self.head.add(&self.tail).expect("split parts share a dimension")
    }
}

/// Top-ℓ split. Ties in magnitude go to the lower index.
pub fn split_top(x: &SparseVector, ell: usize) -> Result<SplitVector> {
    if ell == 0 {
        return Err(invalid("ell", "must be at least 1"));
    }
    let mut order: Vec<usize> = (0..x.nnz()).collect();
    // Stable sort keeps lower positions (lower indices) first among ties.
    order.sort_by(|&a, &b| x.values[b].abs().total_cmp(&x.values[a].abs()));
    let mut in_head = vec![false; x.nnz()];
    for &k in order.iter().take(ell) {
        in_head[k] = true;
    }
    let (head, tail) = x.partition(|k| in_head[k]);
    Ok(SplitVector { head, tail, ell, mode: SplitMode::Top })
}

/// Threshold split: heavy entries have `|x_i| > 1/√ℓ` (strict).
pub fn split_heavy(x: &SparseVector, ell: usize) -> Result<SplitVector> {
    if ell == 0 {
        return Err(invalid("ell", "must be at least 1"));
    }
    // |v| > 1/√ℓ  ⇔  v² · ℓ > 1, which avoids rounding in the square root.
    let ell_f = ell as f64;
    let (head, tail) = x.partition(|k| x.values[k] * x.values[k] * ell_f > 1.0);
    Ok(SplitVector { head, tail, ell, mode: SplitMode::Heavy })
}

/// `‖x‖∞ / ‖x‖₂`.
pub fn infty_ratio(x: &SparseVector) -> Result<f64> {
    if x.is_zero() {
        return Err(invalid("x", "zero vector has no ℓ∞/ℓ₂ ratio"));
    }
    Ok(x.norm_inf() / x.norm())
}

/// An ordered collection of points sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    points: Vec<SparseVector>,
    labels: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(dim: usize, points: Vec<SparseVector>) -> Result<Self> {
        if let Some((index, p)) = points.iter().enumerate().find(|(_, p)| p.dim() != dim) {
            return Err(Error::DatasetMember {
                index,
                source: Box::new(Error::DimensionMismatch { expected: dim, found: p.dim() }),
            });
        }
        Ok(Self { dim, points, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::DimensionMismatch { expected: self.points.len(), found: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SparseVector] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            dim: self.dim,
            points: self.points.iter().map(|p| p.scale(alpha)).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Number of unordered pairs `|X|·(|X|−1)/2`.
    pub fn pair_count(&self) -> u64 {
        let n = self.points.len() as u64;
        n * n.saturating_sub(1) / 2
    }
}

/// Normalised pairwise differences `(x_i − x_j)/‖x_i − x_j‖` for `i < j`.
/// Identical pairs are skipped and counted.
pub fn normalize_pairs(x: &Dataset) -> Result<(Dataset, usize)> {
    if x.len() < 2 {
        return Err(invalid("dataset", "needs at least two points"));
    }
    let mut out = Vec::new();
    let mut skipped = 0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let diff = x.points[i].sub(&x.points[j])?;
            if diff.is_zero() {
                skipped += 1;
                continue;
            }
            let n = diff.norm();
            out.push(diff.scale(1.0 / n));
        }
    }
    Ok((Dataset::new(x.dim, out)?, skipped))
}

/// Unit vector with `nnz` nonzeros on a uniformly random support and
/// Gaussian-then-normalised values.
pub fn random_sparse_unit<R: Rng + ?Sized>(dim: usize, nnz: usize, rng: &mut R) -> SparseVector {
    let nnz = nnz.clamp(1, dim);
    let mut support = index::sample(rng, dim, nnz).into_vec();
    support.sort_unstable();
    let mut values: Vec<f64> = (0..nnz)
        .map(|_| loop {
            let g: f64 = rng.sample(StandardNormal);
            if g != 0.0 {
                break g;
            }
        })
        .collect();
    let n = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    values.iter_mut().for_each(|v| *v /= n);
    SparseVector { dim, indices: support, values }
}

/// Support size used by [`standard_dataset`].
pub fn standard_nnz(dim: usize) -> usize {
    dim.min(16)
}

/// The reference random dataset used for calibration and Monte Carlo
/// checks: `n` sparse unit vectors with `min(d, 16)` nonzeros each.
pub fn standard_dataset(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut rng = rng::stream(seed, 0);
    let points = (0..n).map(|_| random_sparse_unit(dim, standard_nnz(dim), &mut rng)).collect();
    Dataset { dim, points, labels: None }
}
