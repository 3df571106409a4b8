//! Lower-bound experiments: the subset-indicator hard instance, brute-force
//! counting of heavy row subsets, and grouping of columns by signature.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::diagnostics;
use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::sketch::SparseJlMatrix;
use crate::vectors::{Dataset, SparseVector};

const ELL_ITERATIONS: usize = 50;
const ELL_TOLERANCE: f64 = 1e-9;

/// Largest enumeration any brute-force routine here will attempt.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc · (n − i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

/// Real fixed point of `ℓ = ln n / ln(e·d/ℓ)`, iterated from `ℓ = 1`.
pub fn ell_fixed_point(n: u64, d: u64) -> Result<f64> {
    if n < 2 {
        return Err(invalid("n", format!("{n} < 2")));
    }
    if d < 3 {
        return Err(invalid("d", format!("{d} < 3")));
    }
    let ln_n = (n as f64).ln();
    let ed = std::f64::consts::E * d as f64;
    let mut ell = 1.0f64;
    for _ in 0..ELL_ITERATIONS {
        let base = ed / ell;
        if base <= 1.0 {
            return Err(Error::Divergence(format!("e·d/ℓ = {base} ≤ 1 at ℓ = {ell}")));
        }
        let next = ln_n / base.ln();
        if !next.is_finite() || next >= d as f64 {
            return Err(Error::Divergence(format!("ℓ reached {next} ≥ d = {d}")));
        }
        let step = (next - ell).abs();
        ell = next;
        if step < ELL_TOLERANCE {
            break;
        }
    }
    Ok(ell)
}

/// Integer subset size: the fixed point rounded to nearest, at least 1.
pub fn solve_ell(n: u64, d: u64) -> Result<usize> {
    let real = ell_fixed_point(n, d)?;
    let ell = (real.round() as usize).max(1);
    if ell as u64 >= d {
        return Err(Error::Divergence(format!("ℓ = {ell} ≥ d = {d}")));
    }
    Ok(ell)
}

/// Subset vectors `x_S = Σ_{i∈S} e_i/√ℓ` plus `e_1..e_d` and the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct HardInstance {
    pub d: usize,
    pub ell: usize,
    /// Sorted `ℓ`-subsets in lexicographic order.
    pub subsets: Vec<Vec<usize>>,
    pub includes_basis: bool,
    pub includes_origin: bool,
    /// True when `C(d, ℓ)` exceeded the cap and subsets were sampled.
    pub sampled: bool,
}

impl HardInstance {
    /// The instance as a dataset: subset vectors, then the basis, then 0,
    /// with exact duplicates dropped (first occurrence kept).
    pub fn to_dataset(&self) -> Dataset {
        let value = 1.0 / (self.ell as f64).sqrt();
        let mut points = Vec::with_capacity(self.subsets.len() + self.d + 1);
        for s in &self.subsets {
            points.push(SparseVector::new(self.d, s.clone(), vec![value; s.len()]).expect("valid subset"));
        }
        if self.includes_basis {
            points.extend((0..self.d).map(|i| SparseVector::basis(self.d, i).expect("in range")));
        }
        if self.includes_origin {
            points.push(SparseVector::zero(self.d));
        }
        let mut seen = HashSet::new();
        points.retain(|p| {
            let key: (Vec<usize>, Vec<u64>) = (p.indices().to_vec(), p.values().iter().map(|v| v.to_bits()).collect());
            seen.insert(key)
        });
        Dataset::new(self.d, points).expect("shared dimension")
    }
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else { return };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

/// Builds the hard instance for `n_target` points in dimension `d`.
///
/// With `budget = cap − d − 1`, all `C(d, ℓ)` subsets are enumerated when they
/// fit, otherwise `budget` distinct subsets are drawn uniformly.
pub fn generate(n_target: u64, d: usize, cap: usize, seed: u64) -> Result<HardInstance> {
    if cap < d + 1 {
        return Err(invalid("cap", format!("{cap} < d + 1 = {}", d + 1)));
    }
    let ell = solve_ell(n_target, d as u64)?;
    let budget = cap - d - 1;
    let total = binomial(d as u64, ell as u64);
    let (subsets, sampled) = if total <= budget as u128 {
        let mut all = Vec::with_capacity(total as usize);
        for_each_combination(d, ell, |c| all.push(c.to_vec()));
        (all, false)
    } else {
        let mut gen = rng::stream(seed, 0);
        let mut chosen = BTreeSet::new();
        while chosen.len() < budget {
            let mut s = index::sample(&mut gen, d, ell).into_vec();
            s.sort_unstable();
            chosen.insert(s);
        }
        (chosen.into_iter().collect(), true)
    };
    Ok(HardInstance { d, ell, subsets, includes_basis: true, includes_origin: true, sampled })
}

/// Heavy-subset count and the guaranteed minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeavySubsetCount {
    pub count: u64,
    /// `⌊min(C(m−1, t−1), (s/(8t))^t)⌋`.
    pub bound: u64,
    /// `t ≤ s/8`, the range where the bound is guaranteed.
    pub within_hypothesis: bool,
}

impl HeavySubsetCount {
    pub fn holds(&self) -> bool {
        self.count >= self.bound
    }
}

/// Counts `t`-subsets `T ⊆ [m]` with `Σ_{i∈T} v_i² ≥ t‖v‖²/(2s)` by exhaustive
/// enumeration.
///
/// Requires `‖v‖₀ ≤ s ≤ m/2`, `1 ≤ t ≤ s` and `C(m, t) ≤ 10⁷`. For `t > s/8`
/// the count is still computed and `within_hypothesis` is false.
pub fn count_heavy_subsets(v: &[f64], s: usize, t: usize) -> Result<HeavySubsetCount> {
    let m = v.len();
    let nnz = v.iter().filter(|x| **x != 0.0).count();
    if nnz > s {
        return Err(invalid("v", format!("{nnz} nonzeros exceed s = {s}")));
    }
    if s == 0 || 2 * s > m {
        return Err(invalid("s", format!("need 1 ≤ s ≤ m/2, got s = {s}, m = {m}")));
    }
    if t == 0 || t > s {
        return Err(invalid("t", format!("need 1 ≤ t ≤ s, got t = {t}")));
    }
    let total = binomial(m as u64, t as u64);
    if total > ENUMERATION_LIMIT {
        return Err(Error::SizeGuard { what: "C(m, t)", value: total, limit: ENUMERATION_LIMIT });
    }
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let threshold = t as f64 * sq.iter().sum::<f64>() / (2 * s) as f64;
    let mut count = 0u64;
    for_each_combination(m, t, |c| {
        if c.iter().map(|&i| sq[i]).sum::<f64>() >= threshold {
            count += 1;
        }
    });
    Ok(HeavySubsetCount { count, bound: heavy_subset_bound(m, s, t), within_hypothesis: 8 * t <= s })
}

/// `⌊min(C(m−1, t−1), (s/(8t))^t)⌋`.
pub fn heavy_subset_bound(m: usize, s: usize, t: usize) -> u64 {
    let comb = binomial(m as u64 - 1, t as u64 - 1) as f64;
    let power = (s as f64 / (8 * t) as f64).powi(t as i32);
    comb.min(power).floor() as u64
}

/// A random `m`-vector with between 1 and `s` nonzeros. Values are Gaussian
/// with a log-normal scale so that both flat and spiky vectors occur.
pub fn random_heavy_test_vector<R: Rng + ?Sized>(m: usize, s: usize, gen: &mut R) -> Vec<f64> {
    let nnz = gen.random_range(1..=s.min(m));
    let mut v = vec![0.0; m];
    for i in index::sample(gen, m, nnz) {
        let z: f64 = gen.sample(StandardNormal);
        let w: f64 = gen.sample(StandardNormal);
        v[i] = z * (2.0 * w).exp();
    }
    v
}

/// Runs [`count_heavy_subsets`] on `trials` vectors from
/// [`random_heavy_test_vector`]; trial `k` draws from `rng::stream(seed, k)`.
pub fn heavy_subset_trials(m: usize, s: usize, t: usize, trials: usize, seed: u64) -> Result<Vec<HeavySubsetCount>> {
    (0..trials)
        .map(|k| {
            let mut gen = rng::stream(seed, k as u64);
            count_heavy_subsets(&random_heavy_test_vector(m, s, &mut gen), s, t)
        })
        .collect()
}

/// Columns sharing a signature: the same `t` nonzero rows with the same signs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureGroup {
    pub rows: Vec<u32>,
    pub signs: Vec<i8>,
    pub columns: Vec<usize>,
}

/// Enumerates every `t`-subset of each column's nonzero rows with its sign
/// pattern and groups columns by signature. Groups are returned largest
/// first, ties in signature order.
pub fn signature_groups(a: &SparseJlMatrix, t: usize) -> Result<Vec<SignatureGroup>> {
    if t == 0 || t > a.s() {
        return Err(invalid("t", format!("need 1 ≤ t ≤ s = {}, got {t}", a.s())));
    }
    let per_column = binomial(a.s() as u64, t as u64);
    let work = per_column.saturating_mul(a.d() as u128);
    if work > ENUMERATION_LIMIT {
        return Err(Error::SizeGuard { what: "d*C(s, t)", value: work, limit: ENUMERATION_LIMIT });
    }
    let mut groups: BTreeMap<(Vec<u32>, Vec<i8>), Vec<usize>> = BTreeMap::new();
    for j in 0..a.d() {
        let (rows, signs) = a.column(j);
        for_each_combination(a.s(), t, |c| {
            let key = (c.iter().map(|&b| rows[b]).collect(), c.iter().map(|&b| signs[b]).collect());
            groups.entry(key).or_default().push(j);
        });
    }
    let mut out: Vec<SignatureGroup> = groups
        .into_iter()
        .map(|((rows, signs), columns)| SignatureGroup { rows, signs, columns })
        .collect();
    out.sort_by_key(|g| std::cmp::Reverse(g.columns.len()));
    Ok(out)
}

/// Pigeonhole floor on the largest signature group,
/// `⌊d·C(s,t) / (C(m,t)·2^t)⌋`.
pub fn signature_pigeonhole_floor(m: usize, d: usize, s: usize, t: usize) -> u64 {
    let num = d as f64 * binomial(s as u64, t as u64) as f64;
    let den = binomial(m as u64, t as u64) as f64 * 2f64.powi(t as i32);
    (num / den).floor() as u64
}

/// Settings for [`empirical_lower_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundSweep {
    pub d: usize,
    pub n_target: u64,
    pub eps: f64,
    pub s_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Multiplier in `m = ⌈c_m ε⁻² ln n_target⌉`.
    pub c_m: f64,
    /// Instance size cap passed to [`generate`].
    pub cap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub s: usize,
    pub m: usize,
    pub success: f64,
}

/// Largest hard instance the sweep will build.
pub const SWEEP_INSTANCE_LIMIT: usize = 100_000;

/// Success frequency of `max distortion ≤ ε` on the hard instance for each
/// sparsity in `s_values`. Rows are in input order; `m` is rounded up to a
/// multiple of each `s`.
pub fn empirical_lower_bound(cfg: &LowerBoundSweep) -> Result<Vec<SweepRow>> {
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(invalid("eps", format!("{} is not in (0, 1)", cfg.eps)));
    }
    if !(cfg.c_m > 0.0 && cfg.c_m.is_finite()) {
        return Err(invalid("c_m", "must be positive"));
    }
    if cfg.trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    if cfg.cap > SWEEP_INSTANCE_LIMIT {
        return Err(Error::SizeGuard {
            what: "instance cap",
            value: cfg.cap as u128,
            limit: SWEEP_INSTANCE_LIMIT as u128,
        });
    }
    if cfg.n_target < 2 {
        return Err(invalid("n_target", "must be at least 2"));
    }
    let instance = generate(cfg.n_target, cfg.d, cfg.cap, cfg.seed)?.to_dataset();
    let m0 = ((cfg.c_m * (cfg.n_target as f64).ln() / (cfg.eps * cfg.eps)).ceil() as usize).max(1);
    cfg.s_values
        .iter()
        .map(|&s| {
            if s == 0 {
                return Err(invalid("s_values", "sparsity must be at least 1"));
            }
            let m = m0.max(s).div_ceil(s) * s;
            let ok = diagnostics::count_successes_with(m, s, cfg.eps, &instance, cfg.trials, cfg.seed, None)?;
            Ok(SweepRow { s, m, success: ok as f64 / cfg.trials as f64 })
        })
        .collect()
}

/// Suggested `t = ln(εd/ℓ)/ln(m/s)`, with lower-order terms dropped.
pub fn suggested_t(eps: f64, d: usize, ell: usize, m: usize, s: usize) -> f64 {
    (eps * d as f64 / ell as f64).ln() / (m as f64 / s as f64).ln()
}
