//! Empirical checks: pairwise distortion, Monte Carlo success rates and
//! predicates that mirror the events used in the sparsity analysis.
//!
//! Every reduction here is performed in a fixed order over fixed work units,
//! so reports are bit-identical whatever the size of the rayon pool.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dist_sq, dot, norm_sq};
use crate::params::EmbeddingPlan;
use crate::rng;
use crate::sketch::SparseJlMatrix;
use crate::vectors::{split_top, Dataset, SparseVector, SplitVector};

/// Above this many pairs, all-pairs evaluation is replaced by sampling.
pub const ALL_PAIRS_CAP: u64 = 2_000_000;

/// Which pairs a distortion report covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    All,
    Sampled { pairs: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    /// Pairs evaluated (identical pairs excluded).
    pub pair_count: u64,
    pub max_rel_distortion: f64,
    pub mean_rel_distortion: f64,
    pub violations_at_eps: u64,
    pub eps: f64,
    /// Mode actually used; differs from the request when sampling was forced.
    pub mode: PairMode,
    pub skipped_identical: u64,
}

impl DistortionReport {
    pub fn passes(&self) -> bool {
        self.max_rel_distortion <= self.eps
    }

    pub fn to_records(&self) -> String {
        let mode = match self.mode {
            PairMode::All => "all".to_string(),
            PairMode::Sampled { pairs, seed } => format!("sampled\nsampled_pairs={pairs}\npair_seed={seed}"),
        };
        format!(
            "pair_count={}\nmax_rel_distortion={}\nmean_rel_distortion={}\nviolations_at_eps={}\neps={}\nmode={}\nskipped_identical={}\n",
            self.pair_count,
            self.max_rel_distortion,
            self.mean_rel_distortion,
            self.violations_at_eps,
            self.eps,
            mode,
            self.skipped_identical
        )
    }
}

/// Distortion of a single pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDistortion {
    pub i: usize,
    pub j: usize,
    pub original_sq: f64,
    pub embedded_sq: f64,
    pub rel: f64,
}

/// Embedded points laid out row-major, `m` values per point.
struct Embedded {
    m: usize,
    data: Vec<f64>,
}

impl Embedded {
    fn new(a: &SparseJlMatrix, x: &Dataset) -> Result<Self> {
        if x.dim() != a.d() {
            return Err(Error::DimensionMismatch { expected: a.d(), found: x.dim() });
        }
        let m = a.m();
        let mut data = vec![0.0; m * x.len()];
        data.par_chunks_mut(m.max(1))
            .zip(x.points().par_iter())
            .try_for_each(|(y, p)| a.apply_into(p, y))?;
        Ok(Self { m, data })
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    count: u64,
    skipped: u64,
    max: f64,
    sum: f64,
    violations: u64,
}

impl Accum {
    fn push(&mut self, rel: Option<f64>, eps: f64) {
        match rel {
            None => self.skipped += 1,
            Some(r) => {
                self.count += 1;
                self.sum += r;
                self.max = self.max.max(r);
                if r > eps {
                    self.violations += 1;
                }
            }
        }
    }

    fn merge(mut self, o: Accum) -> Accum {
        self.count += o.count;
        self.skipped += o.skipped;
        self.max = self.max.max(o.max);
        self.sum += o.sum;
        self.violations += o.violations;
        self
    }
}

fn pair_rel(x: &Dataset, y: &Embedded, i: usize, j: usize) -> (f64, f64, Option<f64>) {
    let orig = x.points()[i].dist_sq(&x.points()[j]);
    if orig == 0.0 {
        return (0.0, 0.0, None);
    }
    let emb = dist_sq(y.point(i), y.point(j));
    (orig, emb, Some((emb - orig).abs() / orig))
}

fn resolve_mode(x: &Dataset, mode: PairMode) -> Result<PairMode> {
    match mode {
        PairMode::Sampled { pairs: 0, .. } => Err(invalid("pairs", "sample budget must be at least 1")),
        PairMode::All if x.pair_count() > ALL_PAIRS_CAP => {
            log::warn!("{} pairs exceed the all-pairs cap; sampling {ALL_PAIRS_CAP}", x.pair_count());
            Ok(PairMode::Sampled { pairs: ALL_PAIRS_CAP as usize, seed: 0 })
        }
        m => Ok(m),
    }
}

fn sample_pairs(n: usize, pairs: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut gen = rng::stream(seed, 0);
    (0..pairs)
        .map(|_| {
            let i = gen.random_range(0..n);
            let mut j = gen.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i.min(j), i.max(j))
        })
        .collect()
}

const SAMPLE_CHUNK: usize = 4096;

fn evaluate(
    a: &SparseJlMatrix,
    x: &Dataset,
    eps: f64,
    mode: PairMode,
    keep_pairs: bool,
) -> Result<(DistortionReport, Vec<PairDistortion>)> {
    if x.len() < 2 {
        return Err(invalid("dataset", "needs at least two points"));
    }
    if eps.is_nan() || eps < 0.0 {
        return Err(invalid("eps", "must be non-negative"));
    }
    let mode = resolve_mode(x, mode)?;
    let y = Embedded::new(a, x)?;
    let n = x.len();

    let record = |i: usize, j: usize, acc: &mut Accum, out: &mut Vec<PairDistortion>| {
        let (orig, emb, rel) = pair_rel(x, &y, i, j);
        acc.push(rel, eps);
        if let (true, Some(rel)) = (keep_pairs, rel) {
            out.push(PairDistortion { i, j, original_sq: orig, embedded_sq: emb, rel });
        }
    };

    let parts: Vec<(Accum, Vec<PairDistortion>)> = match mode {
        PairMode::All => (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = Accum::default();
                let mut out = Vec::new();
                for j in i + 1..n {
                    record(i, j, &mut acc, &mut out);
                }
                (acc, out)
            })
            .collect(),
        PairMode::Sampled { pairs, seed } => {
            let list = sample_pairs(n, pairs, seed);
            list.par_chunks(SAMPLE_CHUNK)
                .map(|chunk| {
                    let mut acc = Accum::default();
                    let mut out = Vec::new();
                    for &(i, j) in chunk {
                        record(i, j, &mut acc, &mut out);
                    }
                    (acc, out)
                })
                .collect()
        }
    };

    let mut total = Accum::default();
    let mut pairs = Vec::new();
    for (acc, out) in parts {
        total = total.merge(acc);
        pairs.extend(out);
    }
    let mean = if total.count == 0 { 0.0 } else { total.sum / total.count as f64 };
    Ok((
        DistortionReport {
            pair_count: total.count,
            max_rel_distortion: total.max,
            mean_rel_distortion: mean,
            violations_at_eps: total.violations,
            eps,
            mode,
            skipped_identical: total.skipped,
        },
        pairs,
    ))
}

/// Relative squared-distance distortion `|‖Au−Av‖² − ‖u−v‖²| / ‖u−v‖²`
/// over all pairs or a seeded uniform sample of pairs.
pub fn distortion(a: &SparseJlMatrix, x: &Dataset, eps: f64, mode: PairMode) -> Result<DistortionReport> {
    evaluate(a, x, eps, mode, false).map(|(r, _)| r)
}

/// Like [`distortion`], also returning every evaluated pair in a fixed order.
pub fn distortion_pairs(
    a: &SparseJlMatrix,
    x: &Dataset,
    eps: f64,
    mode: PairMode,
) -> Result<(DistortionReport, Vec<PairDistortion>)> {
    evaluate(a, x, eps, mode, true)
}

/// True when every pair has relative distortion at most `eps`; stops at the
/// first violation.
fn all_within(a: &SparseJlMatrix, x: &Dataset, eps: f64, original: &[f64]) -> Result<bool> {
    let y = Embedded::new(a, x)?;
    let n = x.len();
    let mut k = 0;
    for i in 0..n {
        let yi = y.point(i);
        for j in i + 1..n {
            let orig = original[k];
            k += 1;
            if orig == 0.0 {
                continue;
            }
            let emb = dist_sq(yi, y.point(j));
            if (emb - orig).abs() / orig > eps {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn sampled_within(a: &SparseJlMatrix, x: &Dataset, eps: f64) -> Result<bool> {
    let r = distortion(a, x, eps, PairMode::All)?;
    Ok(r.passes())
}

/// Runs up to `trials` independently seeded `m × d` matrices with sparsity
/// `s` and counts those with max distortion ≤ `eps` on `x`. Trial `t` uses
/// `rng::derive_seed(seed, t)`. With `needed = Some(k)`, stops as soon as `k`
/// successes have become unreachable.
pub(crate) fn count_successes_with(
    m: usize,
    s: usize,
    eps: f64,
    x: &Dataset,
    trials: usize,
    seed: u64,
    needed: Option<usize>,
) -> Result<usize> {
    if x.len() < 2 {
        return Err(invalid("dataset", "needs at least two points"));
    }
    let exhaustive = x.pair_count() <= ALL_PAIRS_CAP;
    let original: Vec<f64> = if exhaustive {
        let n = x.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| x.points()[i].dist_sq(&x.points()[j]))
            .collect()
    } else {
        Vec::new()
    };

    // Fixed chunk size keeps the early-stop point independent of the pool.
    const CHUNK: usize = 8;
    let mut successes = 0;
    let mut done = 0;
    while done < trials {
        let end = (done + CHUNK).min(trials);
        let outcomes: Vec<bool> = (done..end)
            .into_par_iter()
            .map(|t| {
                let a = SparseJlMatrix::sample(m, x.dim(), s, rng::derive_seed(seed, t as u64))?;
                if exhaustive {
                    all_within(&a, x, eps, &original)
                } else {
                    sampled_within(&a, x, eps)
                }
            })
            .collect::<Result<_>>()?;
        successes += outcomes.iter().filter(|ok| **ok).count();
        done = end;
        if let Some(k) = needed {
            if successes + (trials - done) < k {
                break;
            }
        }
    }
    Ok(successes)
}

pub(crate) fn count_successes(
    plan: &EmbeddingPlan,
    x: &Dataset,
    trials: usize,
    seed: u64,
    needed: Option<usize>,
) -> Result<usize> {
    if x.dim() as u64 != plan.d {
        return Err(Error::DimensionMismatch { expected: plan.d as usize, found: x.dim() });
    }
    count_successes_with(plan.m, plan.s, plan.eps, x, trials, seed, needed)
}

/// Fraction of `trials` sampled matrices (seeds derived by counter from
/// `seed`) whose max pairwise distortion on `x` is at most `plan.eps`.
pub fn monte_carlo_success(plan: &EmbeddingPlan, x: &Dataset, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    Ok(count_successes(plan, x, trials, seed, None)? as f64 / trials as f64)
}

/// Row-collision report for a set of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct WellBehavedReport {
    /// Rows holding at least 6 nonzeros among the inspected columns.
    pub bad_row_count: usize,
    /// `6 ln n / ln(1/ε)`.
    pub threshold: f64,
    pub is_well_behaved: bool,
}

/// Rows where the inspected columns collide at least this often are "bad".
pub const COLLISION_ROW_MIN: usize = 6;

fn well_behaved_unchecked(a: &SparseJlMatrix, columns: &[usize], n: u64, eps: f64) -> WellBehavedReport {
    let mut cols = columns.to_vec();
    cols.sort_unstable();
    cols.dedup();
    let mut hits = vec![0u32; a.m()];
    for &j in &cols {
        for &r in a.column(j).0 {
            hits[r as usize] += 1;
        }
    }
    let bad_row_count = hits.iter().filter(|&&h| h as usize >= COLLISION_ROW_MIN).count();
    let threshold = COLLISION_ROW_MIN as f64 * (n as f64).ln() / (1.0 / eps).ln();
    WellBehavedReport { bad_row_count, threshold, is_well_behaved: bad_row_count as f64 <= threshold }
}

/// Counts rows with ≥ 6 nonzeros among `columns` and compares with
/// `6 ln n / ln(1/ε)`.
pub fn well_behaved(a: &SparseJlMatrix, columns: &[usize], n: u64, eps: f64) -> Result<WellBehavedReport> {
    if columns.is_empty() {
        return Err(invalid("columns", "column set is empty"));
    }
    if let Some(j) = columns.iter().find(|&&j| j >= a.d()) {
        return Err(invalid("columns", format!("index {j} out of range for d = {}", a.d())));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("{eps} is not in (0, 1)")));
    }
    if n < 2 {
        return Err(invalid("n", "must be at least 2"));
    }
    Ok(well_behaved_unchecked(a, columns, n, eps))
}

/// Size profile of `A·x_head`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadImageProfile {
    /// Coordinates with magnitude above `√(5/s)`.
    pub large_count: usize,
    pub max_abs: f64,
    /// `√(ℓ/s)` with `ℓ = ‖x_head‖₀`.
    pub max_bound: f64,
    pub support: WellBehavedReport,
    /// `Some(ok)` when the support is well-behaved: whether the large-entry
    /// count stays within the threshold and `max_abs ≤ √(ℓ/s)`.
    pub conditional_ok: Option<bool>,
}

pub fn head_image_profile(a: &SparseJlMatrix, x_head: &SparseVector, n: u64, eps: f64) -> Result<HeadImageProfile> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("{eps} is not in (0, 1)")));
    }
    if x_head.norm_sq() > 1.0 {
        log::warn!("head has norm {} > 1; bounds assume a unit-ball head", x_head.norm());
    }
    let y = a.apply_sparse(x_head)?;
    let s = a.s() as f64;
    // |y_i| > √(5/s)  ⇔  y_i² · s > 5
    let large_count = y.iter().filter(|v| *v * *v * s > 5.0).count();
    let max_abs = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let max_bound = (x_head.nnz() as f64 / s).sqrt();
    let support = well_behaved_unchecked(a, x_head.indices(), n.max(2), eps);
    let conditional_ok = support
        .is_well_behaved
        .then_some(large_count as f64 <= support.threshold && max_abs <= max_bound);
    Ok(HeadImageProfile { large_count, max_abs, max_bound, support, conditional_ok })
}

/// `⟨A·head, A·tail⟩`.
pub fn cross_term(a: &SparseJlMatrix, split: &SplitVector) -> Result<f64> {
    if split.head.dot(&split.tail) != 0.0
        || split.head.indices().iter().any(|i| split.tail.indices().binary_search(i).is_ok())
    {
        return Err(invalid("split", "head and tail supports overlap"));
    }
    let h = a.apply_sparse(&split.head)?;
    let t = a.apply_sparse(&split.tail)?;
    Ok(dot(&h, &t))
}

/// ℓ∞/ℓ₂ admissibility with implied constant 1:
/// `‖v‖∞/‖v‖ ≤ √(ε s ln(m ε²/ln(1/δ)) / ln(1/δ))`. Returns `false` when the
/// inner logarithm's argument is at most 1.
pub fn tail_admissible_with(v: &SparseVector, m: usize, s: usize, eps: f64, delta: f64) -> Result<bool> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} is not in (0, 1)")));
    }
    let ratio = crate::vectors::infty_ratio(v)?;
    let log_inv_delta = (1.0 / delta).ln();
    let arg = m as f64 * eps * eps / log_inv_delta;
    if arg <= 1.0 {
        return Ok(false);
    }
    let bound = (eps * s as f64 * arg.ln() / log_inv_delta).sqrt();
    Ok(ratio <= bound)
}

pub fn tail_admissible(v: &SparseVector, plan: &EmbeddingPlan, delta: f64) -> Result<bool> {
    tail_admissible_with(v, plan.m, plan.s, plan.eps, delta)
}

/// Per-point outcome of the diagnostic battery.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDiagnosis {
    pub index: usize,
    /// `‖Ax‖² ∈ (1 ± ε)` for the normalised point.
    pub norm_ok: bool,
    /// `‖A·head‖² ∈ (1 ± ε)‖head‖²`.
    pub head_ok: bool,
    /// `‖A·tail‖² ∈ ‖tail‖² ± ε`.
    pub tail_ok: bool,
    /// `‖A·head‖² > 2` or `|⟨A·head, A·tail⟩| < ε`.
    pub cross_ok: bool,
    pub well_behaved: bool,
    /// `None` when the head support is not well-behaved.
    pub head_profile_ok: Option<bool>,
    pub tail_admissible: bool,
    pub cross_term: f64,
}

/// Aggregate of [`diagnose`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseSummary {
    pub points: usize,
    pub skipped_zero: usize,
    pub ell: usize,
    pub eps: f64,
    pub n: u64,
    pub delta: f64,
    pub details: Vec<PointDiagnosis>,
}

impl DiagnoseSummary {
    fn fails(&self, f: impl Fn(&PointDiagnosis) -> bool) -> usize {
        self.details.iter().filter(|p| !f(p)).count()
    }

    pub fn norm_pass(&self) -> bool {
        self.fails(|p| p.norm_ok) == 0
    }

    pub fn e1_pass(&self) -> bool {
        self.fails(|p| p.head_ok) == 0
    }

    pub fn e2_pass(&self) -> bool {
        self.fails(|p| p.tail_ok) == 0
    }

    pub fn e3_pass(&self) -> bool {
        self.fails(|p| p.cross_ok) == 0
    }

    pub fn well_behaved_pass(&self) -> bool {
        self.fails(|p| p.well_behaved) == 0
    }

    pub fn head_profile_pass(&self) -> bool {
        self.fails(|p| p.head_profile_ok != Some(false)) == 0
    }

    /// Machine-readable `key=value` lines.
    pub fn to_records(&self) -> String {
        let bit = |b: bool| if b { "PASS" } else { "FAIL" };
        let mut out = String::new();
        out += &format!("points={}\nskipped_zero={}\nn={}\neps={}\nell={}\ndelta={}\n", self.points, self.skipped_zero, self.n, self.eps, self.ell, self.delta);
        out += &format!("norm_failures={}\nnorm={}\n", self.fails(|p| p.norm_ok), bit(self.norm_pass()));
        out += &format!("e1_head_failures={}\ne1_head={}\n", self.fails(|p| p.head_ok), bit(self.e1_pass()));
        out += &format!("e2_tail_failures={}\ne2_tail={}\n", self.fails(|p| p.tail_ok), bit(self.e2_pass()));
        out += &format!("e3_cross_failures={}\ne3_cross={}\n", self.fails(|p| p.cross_ok), bit(self.e3_pass()));
        out += &format!(
            "well_behaved_failures={}\nwell_behaved={}\n",
            self.fails(|p| p.well_behaved),
            bit(self.well_behaved_pass())
        );
        out += &format!(
            "head_profile_failures={}\nhead_profile={}\n",
            self.fails(|p| p.head_profile_ok != Some(false)),
            bit(self.head_profile_pass())
        );
        out += &format!("tail_admissible_count={}\n", self.details.iter().filter(|p| p.tail_admissible).count());
        let max_cross = self.details.iter().fold(0.0f64, |m, p| m.max(p.cross_term.abs()));
        out += &format!("max_abs_cross_term={max_cross}\n");
        out
    }
}

/// Runs the head/tail battery on every nonzero point of `x` after scaling it
/// to unit norm.
pub fn diagnose(a: &SparseJlMatrix, x: &Dataset, n: u64, eps: f64, ell: usize, delta: f64) -> Result<DiagnoseSummary> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("{eps} is not in (0, 1)")));
    }
    if x.dim() != a.d() {
        return Err(Error::DimensionMismatch { expected: a.d(), found: x.dim() });
    }
    let results: Vec<Option<PointDiagnosis>> = x
        .points()
        .par_iter()
        .enumerate()
        .map(|(index, p)| -> Result<Option<PointDiagnosis>> {
            if p.is_zero() {
                return Ok(None);
            }
            let unit = p.scale(1.0 / p.norm());
            let split = split_top(&unit, ell)?;
            let ah = a.apply_sparse(&split.head)?;
            let at = a.apply_sparse(&split.tail)?;
            let ax = a.apply_sparse(&unit)?;
            let head_sq = norm_sq(&ah);
            let cross = dot(&ah, &at);
            let h = split.head.norm_sq();
            let t = split.tail.norm_sq();
            let profile = head_image_profile(a, &split.head, n, eps)?;
            let tail_admissible = if split.tail.is_zero() {
                true
            } else {
                tail_admissible_with(&split.tail, a.m(), a.s(), eps, delta)?
            };
            Ok(Some(PointDiagnosis {
                index,
                norm_ok: (norm_sq(&ax) - 1.0).abs() <= eps,
                head_ok: (head_sq - h).abs() <= eps * h,
                tail_ok: (norm_sq(&at) - t).abs() <= eps,
                cross_ok: head_sq > 2.0 || cross.abs() < eps,
                well_behaved: profile.support.is_well_behaved,
                head_profile_ok: profile.conditional_ok,
                tail_admissible,
                cross_term: cross,
            }))
        })
        .collect::<Result<_>>()?;
    let skipped_zero = results.iter().filter(|r| r.is_none()).count();
    let details: Vec<PointDiagnosis> = results.into_iter().flatten().collect();
    Ok(DiagnoseSummary { points: details.len(), skipped_zero, ell, eps, n, delta, details })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{plan_jl, Constants};
    use crate::vectors::standard_dataset;

    #[test]
    fn origin_basis_pair_is_exact() {
        let a = SparseJlMatrix::sample(12, 5, 3, 4).unwrap();
        let x = Dataset::new(5, vec![SparseVector::zero(5), SparseVector::basis(5, 2).unwrap()]).unwrap();
        let r = distortion(&a, &x, 0.1, PairMode::All).unwrap();
        assert_eq!(r.pair_count, 1);
        assert!(r.max_rel_distortion < 1e-15);
    }

    #[test]
    fn duplicates_only_gives_empty_report() {
        let a = SparseJlMatrix::sample(4, 3, 2, 0).unwrap();
        let e = SparseVector::basis(3, 1).unwrap();
        let x = Dataset::new(3, vec![e.clone(), e.clone(), e]).unwrap();
        let r = distortion(&a, &x, 0.1, PairMode::All).unwrap();
        assert_eq!((r.pair_count, r.skipped_identical), (0, 3));
        assert_eq!(r.max_rel_distortion, 0.0);
        let single = Dataset::new(3, vec![SparseVector::zero(3)]).unwrap();
        assert!(distortion(&a, &single, 0.1, PairMode::All).is_err());
    }

    #[test]
    fn report_invariants_and_sampling() {
        let x = standard_dataset(30, 40, 1);
        let a = SparseJlMatrix::sample(24, 40, 4, 9).unwrap();
        let r = distortion(&a, &x, 0.2, PairMode::All).unwrap();
        assert_eq!(r.pair_count, 435);
        assert!(r.mean_rel_distortion <= r.max_rel_distortion);
        assert_eq!(r.violations_at_eps == 0, r.max_rel_distortion <= r.eps);
        let s = distortion(&a, &x, 0.2, PairMode::Sampled { pairs: 100, seed: 3 }).unwrap();
        assert_eq!(s.pair_count, 100);
        assert!(s.max_rel_distortion <= r.max_rel_distortion);
        assert!(distortion(&a, &x, 0.2, PairMode::Sampled { pairs: 0, seed: 3 }).is_err());
        let (r2, pairs) = distortion_pairs(&a, &x, 0.2, PairMode::All).unwrap();
        assert_eq!(r2, r);
        assert_eq!(pairs.len(), 435);
        assert_eq!((pairs[0].i, pairs[0].j), (0, 1));
    }

    #[test]
    fn trials_of_one_are_binary() {
        let x = standard_dataset(10, 16, 2);
        let plan = plan_jl(10, 16, 0.5, Constants::default()).unwrap();
        let f = monte_carlo_success(&plan, &x, 1, 5).unwrap();
        assert!(f == 0.0 || f == 1.0);
        assert!(monte_carlo_success(&plan, &x, 0, 5).is_err());
    }

    #[test]
    fn well_behaved_small_sets_have_no_bad_rows() {
        let a = SparseJlMatrix::sample(4, 20, 1, 3).unwrap();
        let r = well_behaved(&a, &[0, 1, 2, 3, 4], 100, 0.1).unwrap();
        assert_eq!(r.bad_row_count, 0);
        assert!(r.is_well_behaved);
        assert!(well_behaved(&a, &[], 100, 0.1).is_err());
        assert!(well_behaved(&a, &[20], 100, 0.1).is_err());
    }

    #[test]
    fn head_profile_trivial_cases() {
        let a = SparseJlMatrix::sample(20, 10, 4, 1).unwrap();
        let p = head_image_profile(&a, &SparseVector::basis(10, 3).unwrap(), 100, 0.25).unwrap();
        assert_eq!(p.large_count, 0);
        assert!((p.max_abs - 0.5).abs() < 1e-15);
        let z = head_image_profile(&a, &SparseVector::zero(10), 100, 0.25).unwrap();
        assert_eq!((z.large_count, z.max_abs), (0, 0.0));
    }

    #[test]
    fn cross_term_of_empty_tail_is_zero() {
        let a = SparseJlMatrix::sample(20, 10, 4, 1).unwrap();
        let x = SparseVector::from_dense(&[0.8, 0.6, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let split = split_top(&x, 2).unwrap();
        assert_eq!(cross_term(&a, &split).unwrap(), 0.0);
        let bad = SplitVector { head: x.clone(), tail: x, ell: 2, mode: crate::vectors::SplitMode::Top };
        assert!(cross_term(&a, &bad).is_err());
    }

    #[test]
    fn tail_admissible_small_s_rejects_basis_vector() {
        let e1 = SparseVector::basis(8, 0).unwrap();
        assert!(!tail_admissible_with(&e1, 4, 1, 0.1, 0.5).unwrap());
        assert!(tail_admissible_with(&e1, 4, 1, 0.1, 1.5).is_err());
        assert!(tail_admissible_with(&SparseVector::zero(8), 4, 1, 0.1, 0.5).is_err());
    }
}
