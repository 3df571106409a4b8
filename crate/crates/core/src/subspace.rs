//! Oblivious subspace embeddings: orthonormal bases, the heavy-coordinate
//! cover, ½-nets, exact subspace distortion and sketch-and-solve regression.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, dist_sq, dot, DenseMatrix};
use crate::params::{plan_subspace, Constants, SubspacePlan};
use crate::rng;
use crate::sketch::SparseJlMatrix;

/// Off-diagonal tolerance (relative Frobenius mass) for the Gram spectrum.
pub const GRAM_EIGEN_TOL: f64 = 1e-10;

/// Orthonormal basis of a `k`-dimensional subspace of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    /// `k × d`, one basis vector per row.
    vectors: DenseMatrix,
    /// `τ_i = Σ_j (v^j_i)²` for every coordinate `i`.
    coordinate_scores: Vec<f64>,
}

impl SubspaceBasis {
    pub fn k(&self) -> usize {
        self.vectors.rows()
    }

    pub fn d(&self) -> usize {
        self.vectors.cols()
    }

    pub fn vectors(&self) -> &DenseMatrix {
        &self.vectors
    }

    pub fn coordinate_scores(&self) -> &[f64] {
        &self.coordinate_scores
    }

    /// `Σ_j c_j v^j` for basis coefficients `c`.
    pub fn lift(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), found: coeffs.len() });
        }
        let mut out = vec![0.0; self.d()];
        for (j, c) in coeffs.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.vectors.row(j)) {
                *o += c * v;
            }
        }
        Ok(out)
    }
}

/// Modified Gram–Schmidt with one re-orthogonalisation pass. A row whose
/// residual norm is at most `tol` makes the input rank-deficient.
pub fn orthonormalize(raw: &DenseMatrix, tol: f64) -> Result<SubspaceBasis> {
    let (k, d) = (raw.rows(), raw.cols());
    if k == 0 {
        return Err(invalid("raw", "no rows"));
    }
    if k > d {
        return Err(invalid("raw", format!("{k} rows exceed ambient dimension {d}")));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(invalid("tol", "must be non-negative"));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut deficient = false;
    for i in 0..k {
        let mut v = raw.row(i).to_vec();
        for _pass in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                for (x, qv) in v.iter_mut().zip(q) {
                    *x -= c * qv;
                }
            }
        }
        let norm = linalg::norm_sq(&v).sqrt();
        if norm <= tol {
            deficient = true;
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    if deficient {
        return Err(Error::RankDeficient { rank: basis.len(), cols: k });
    }
    let vectors = DenseMatrix::from_rows(&basis)?;
    let coordinate_scores = (0..d).map(|i| basis.iter().map(|b| b[i] * b[i]).sum()).collect();
    Ok(SubspaceBasis { vectors, coordinate_scores })
}

/// Orthonormalised Gaussian basis of a random `k`-dimensional subspace.
pub fn random_basis(k: usize, d: usize, seed: u64) -> Result<SubspaceBasis> {
    let mut gen = rng::stream(seed, 0);
    loop {
        let data: Vec<f64> = (0..k * d).map(|_| gen.sample(StandardNormal)).collect();
        match orthonormalize(&DenseMatrix::from_row_major(k, d, data)?, 1e-8) {
            Err(Error::RankDeficient { .. }) => continue,
            other => return other,
        }
    }
}

/// Uniform point on the unit sphere of `R^k`.
pub fn random_unit<R: Rng + ?Sized>(k: usize, gen: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| gen.sample(StandardNormal)).collect();
        let n = linalg::norm_sq(&v).sqrt();
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Coordinates with `τ_i ≥ 1/ℓ`. At most `k·ℓ` of them, and every unit
/// vector of the span has magnitude below `1/√ℓ` everywhere else.
pub fn heavy_coordinates(b: &SubspaceBasis, ell: usize) -> Result<Vec<usize>> {
    if ell == 0 {
        return Err(invalid("ell", "must be at least 1"));
    }
    let ell = ell as f64;
    Ok(b.coordinate_scores
        .iter()
        .enumerate()
        .filter(|(_, t)| **t * ell >= 1.0)
        .map(|(i, _)| i)
        .collect())
}

/// Largest `k` for which a net is built (`4^k` growth).
pub const MAX_NET_DIM: usize = 12;

/// Greedy ½-net of the unit sphere in basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfNet {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    /// Total probes drawn.
    pub probe_count: u64,
    /// Largest nearest-point distance seen in the final run of probes that
    /// added nothing. At most 1/2 unless the probe cap stopped the build.
    pub max_observed_gap: f64,
    /// True when the build ended on the total probe cap rather than on
    /// `probe_budget` consecutive misses.
    pub hit_probe_cap: bool,
}

/// Multiple of `probe_budget` after which the greedy build gives up.
pub const NET_PROBE_CAP_FACTOR: u64 = 64;

/// Adds random sphere points that lie farther than 1/2 from every current
/// net point, until `probe_budget` consecutive probes add nothing. This is a
/// Monte Carlo certificate, not a proof of covering.
pub fn build_half_net(b: &SubspaceBasis, probe_budget: usize, seed: u64) -> Result<HalfNet> {
    build_half_net_k(b.k(), probe_budget, seed)
}

pub fn build_half_net_k(k: usize, probe_budget: usize, seed: u64) -> Result<HalfNet> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    if k > MAX_NET_DIM {
        return Err(Error::SizeGuard { what: "net dimension k", value: k as u128, limit: MAX_NET_DIM as u128 });
    }
    if probe_budget == 0 {
        return Err(invalid("probe_budget", "must be at least 1"));
    }
    let mut gen = rng::stream(seed, 0);
    let cap = probe_budget as u64 * NET_PROBE_CAP_FACTOR;
    let mut points: Vec<Vec<f64>> = Vec::new();
    let (mut probes, mut misses, mut gap) = (0u64, 0usize, 0.0f64);
    while misses < probe_budget && probes < cap {
        let p = random_unit(k, &mut gen);
        probes += 1;
        let nearest_sq = points.iter().map(|q| dist_sq(q, &p)).fold(f64::INFINITY, f64::min);
        if nearest_sq > 0.25 {
            points.push(p);
            misses = 0;
            gap = 0.0;
        } else {
            misses += 1;
            gap = gap.max(nearest_sq.sqrt());
        }
    }
    Ok(HalfNet { k, points, probe_count: probes, max_observed_gap: gap, hit_probe_cap: misses < probe_budget })
}

/// `N ∪ {x + y : x, y ∈ N ∪ {0}}`, deduplicated by exact coefficient
/// equality. Contains 0, every `x`, and every `2x`.
pub fn expand_net(net: &HalfNet) -> Vec<Vec<f64>> {
    let zero = vec![0.0; net.k];
    let base: Vec<&Vec<f64>> = std::iter::once(&zero).chain(net.points.iter()).collect();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut out = Vec::new();
    for i in 0..base.len() {
        for j in i..base.len() {
            let sum: Vec<f64> = base[i].iter().zip(base[j]).map(|(a, b)| a + b).collect();
            // +0.0 and -0.0 compare equal as coefficients
            let key = sum.iter().map(|v| if *v == 0.0 { 0 } else { v.to_bits() }).collect();
            if seen.insert(key) {
                out.push(sum);
            }
        }
    }
    out
}

/// Eigenvalues (ascending) of `(A Uᵀ)ᵀ (A Uᵀ)` for the rows `U` of `rows`.
pub fn sketched_gram_eigenvalues(a: &SparseJlMatrix, rows: &DenseMatrix) -> Result<Vec<f64>> {
    if rows.cols() != a.d() {
        return Err(Error::DimensionMismatch { expected: a.d(), found: rows.cols() });
    }
    let sketched = a.apply_to_matrix(&rows.transpose())?;
    linalg::symmetric_eigenvalues(&sketched.gram(), GRAM_EIGEN_TOL)
}

/// `sup_{x ∈ V, ‖x‖ = 1} |‖Ax‖² − 1|`, computed exactly as the largest
/// deviation of the sketched Gram spectrum from 1.
pub fn subspace_distortion(a: &SparseJlMatrix, b: &SubspaceBasis) -> Result<f64> {
    let eig = sketched_gram_eigenvalues(a, &b.vectors)?;
    Ok(eig.iter().fold(0.0f64, |m, l| m.max((l - 1.0).abs())))
}

/// Sketch-and-solve output.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchSolution {
    pub beta: Vec<f64>,
    pub plan: SubspacePlan,
    pub seed: u64,
    pub rank: usize,
}

/// Solves `min ‖(AX)β − Ay‖` with `A` sampled from `plan_subspace(p + 1, eps)`.
/// `ridge = Some(λ)` appends `√λ·I` rows to the sketched system.
pub fn sketch_solve(
    x: &DenseMatrix,
    y: &[f64],
    eps: f64,
    seed: u64,
    constants: Constants,
    ridge: Option<f64>,
) -> Result<SketchSolution> {
    let (n, p) = (x.rows(), x.cols());
    if p == 0 {
        return Err(invalid("design", "has no columns"));
    }
    if n < p {
        return Err(invalid("design", format!("{n} rows < {p} columns")));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    let plan = plan_subspace(p + 1, eps, constants)?;
    let a = SparseJlMatrix::sample(plan.m, n, plan.s, seed)?;
    let ax = a.apply_to_matrix(x)?;
    let ay = a.apply_to_matrix(&DenseMatrix::from_row_major(n, 1, y.to_vec())?)?;
    let mut rhs = ay.as_slice().to_vec();

    let system = match ridge {
        None => ax,
        Some(lambda) => {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(invalid("ridge", format!("{lambda} is not a positive finite number")));
            }
            let mut data = ax.as_slice().to_vec();
            let r = lambda.sqrt();
            for j in 0..p {
                let mut row = vec![0.0; p];
                row[j] = r;
                data.extend(row);
                rhs.push(0.0);
            }
            DenseMatrix::from_row_major(plan.m + p, p, data)?
        }
    };
    let ls = linalg::least_squares(&system, &rhs)?;
    Ok(SketchSolution { beta: ls.solution, plan, seed, rank: ls.rank })
}

/// Unsketched least squares, `argmin ‖Xβ − y‖`.
pub fn exact_least_squares(x: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    Ok(linalg::least_squares(x, y)?.solution)
}

/// `‖Xβ − y‖²`.
pub fn residual_sq(x: &DenseMatrix, beta: &[f64], y: &[f64]) -> Result<f64> {
    let fit = x.mul_vec(beta)?;
    if fit.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: fit.len(), found: y.len() });
    }
    Ok(dist_sq(&fit, y))
}
