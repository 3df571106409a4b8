//! The block-structured sparse JL matrix.
//!
//! Rows are split into `s` blocks of `m/s` consecutive rows. Every column has
//! exactly one nonzero per block, at a uniformly random row of that block,
//! with value `±1/√s`. Only row indices and signs are stored; the scale is
//! applied when multiplying.
//!
//! Randomness for column `j` comes from [`rng::stream`]`(seed, j)`. For block
//! `b` the generator's words are consumed in order: one `u64` for the row,
//! mapped to `b·block_size + floor(u·block_size/2⁶⁴)`, then one `u64` whose
//! top bit selects the sign (`0 → +1`, `1 → −1`).

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::{self, PRNG_ID};
use crate::vectors::{Dataset, SparseVector};

/// Version of the matrix file layout.
pub const FORMAT_VERSION: u32 = 1;

/// Largest `m·d` that [`SparseJlMatrix::materialize`] will allocate.
pub const MATERIALIZE_LIMIT: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseJlMatrix {
    m: usize,
    d: usize,
    s: usize,
    block_size: usize,
    seed: u64,
    /// Column-major, `s` entries per column, block order.
    rows: Vec<u32>,
    signs: Vec<i8>,
}

/// Header of a serialized matrix. Sufficient to resample it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub format_version: u32,
    pub m: usize,
    pub d: usize,
    pub s: usize,
    pub seed: u64,
    pub prng_id: String,
}

fn check_shape(m: usize, d: usize, s: usize) -> Result<()> {
    if s == 0 {
        return Err(invalid("s", "must be at least 1"));
    }
    if d == 0 {
        return Err(invalid("d", "must be at least 1"));
    }
    if s > m {
        return Err(invalid("s", format!("{s} exceeds m = {m}")));
    }
    if !m.is_multiple_of(s) {
        return Err(invalid("s", format!("{s} does not divide m = {m}")));
    }
    if m > u32::MAX as usize {
        return Err(invalid("m", "exceeds 2^32 - 1"));
    }
    Ok(())
}

/// Fills one column's rows and signs.
fn fill_column(seed: u64, column: usize, block_size: usize, rows: &mut [u32], signs: &mut [i8]) {
    let mut gen = rng::stream(seed, column as u64);
    for (b, (r, sg)) in rows.iter_mut().zip(signs.iter_mut()).enumerate() {
        let offset = rng::bounded(gen.next_u64(), block_size as u64) as usize;
        *r = (b * block_size + offset) as u32;
        *sg = if gen.next_u64() >> 63 == 0 { 1 } else { -1 };
    }
}

/// Generates column `column` of the matrix with parameters `(m, s, seed)`
/// without sampling any other column.
pub fn sample_column(m: usize, s: usize, seed: u64, column: usize) -> Result<(Vec<u32>, Vec<i8>)> {
    check_shape(m, 1, s)?;
    let mut rows = vec![0; s];
    let mut signs = vec![0; s];
    fill_column(seed, column, m / s, &mut rows, &mut signs);
    Ok((rows, signs))
}

impl SparseJlMatrix {
    /// Samples an `m × d` matrix with `s` nonzeros per column.
    pub fn sample(m: usize, d: usize, s: usize, seed: u64) -> Result<Self> {
        check_shape(m, d, s)?;
        let block_size = m / s;
        let mut rows = vec![0u32; d * s];
        let mut signs = vec![0i8; d * s];
        rows.par_chunks_mut(s)
            .zip(signs.par_chunks_mut(s))
            .enumerate()
            .for_each(|(j, (r, sg))| fill_column(seed, j, block_size, r, sg));
        Ok(Self { m, d, s, block_size, seed, rows, signs })
    }

    /// Builds a matrix from explicit per-column entries, validating the
    /// one-entry-per-block structure.
    pub fn from_entries(header: &MatrixHeader, rows: Vec<u32>, signs: Vec<i8>) -> Result<Self> {
        let MatrixHeader { m, d, s, seed, .. } = *header;
        check_shape(m, d, s)?;
        if rows.len() != d * s || signs.len() != d * s {
            return Err(Error::DimensionMismatch { expected: d * s, found: rows.len().min(signs.len()) });
        }
        let block_size = m / s;
        for (k, (&r, &sg)) in rows.iter().zip(&signs).enumerate() {
            let b = k % s;
            let r = r as usize;
            if r < b * block_size || r >= (b + 1) * block_size {
                return Err(invalid("rows", format!("column {} entry {b}: row {r} outside its block", k / s)));
            }
            if sg != 1 && sg != -1 {
                return Err(invalid("signs", format!("column {} entry {b}: sign {sg}", k / s)));
            }
        }
        Ok(Self { m, d, s, block_size, seed, rows, signs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Magnitude of every nonzero entry.
    pub fn scale(&self) -> f64 {
        1.0 / (self.s as f64).sqrt()
    }

    /// Row indices and signs of column `j`, in block order.
    pub fn column(&self, j: usize) -> (&[u32], &[i8]) {
        let r = j * self.s..(j + 1) * self.s;
        (&self.rows[r.clone()], &self.signs[r])
    }

    /// `‖A e_j‖²` evaluated on the stored representation, `Σ σ² / s`.
    /// Equal to 1 exactly for every valid matrix.
    pub fn column_norm_sq_exact(&self, j: usize) -> f64 {
        let (_, signs) = self.column(j);
        let sum: i64 = signs.iter().map(|&s| (s as i64) * (s as i64)).sum();
        sum as f64 / self.s as f64
    }

    pub fn header(&self) -> MatrixHeader {
        MatrixHeader {
            format_version: FORMAT_VERSION,
            m: self.m,
            d: self.d,
            s: self.s,
            seed: self.seed,
            prng_id: PRNG_ID.to_string(),
        }
    }

    /// `A x` by scattering: `s·‖x‖₀` accumulations.
    pub fn apply_sparse(&self, x: &SparseVector) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.m];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }

    /// Accumulates `A x` into `y`, which must have length `m` and is
    /// overwritten.
    pub fn apply_into(&self, x: &SparseVector, y: &mut [f64]) -> Result<()> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: x.dim() });
        }
        if y.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, found: y.len() });
        }
        y.fill(0.0);
        let scale = self.scale();
        for (j, xj) in x.iter() {
            let v = xj * scale;
            let (rows, signs) = self.column(j);
            for (&r, &sg) in rows.iter().zip(signs) {
                y[r as usize] += sg as f64 * v;
            }
        }
        Ok(())
    }

    /// Applies the matrix to every point, in order. The result does not
    /// depend on how the work is scheduled.
    pub fn apply_dataset(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        data.points()
            .par_iter()
            .enumerate()
            .map(|(index, x)| {
                self.apply_sparse(x)
                    .map_err(|e| Error::DatasetMember { index, source: Box::new(e) })
            })
            .collect()
    }

    /// `A X` for a dense `d × c` matrix.
    pub fn apply_to_matrix(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: x.rows() });
        }
        let c = x.cols();
        let mut out = DenseMatrix::zeros(self.m, c);
        let scale = self.scale();
        for j in 0..self.d {
            let src = x.row(j);
            if src.iter().all(|v| *v == 0.0) {
                continue;
            }
            let (rows, signs) = self.column(j);
            for (&r, &sg) in rows.iter().zip(signs) {
                let f = sg as f64 * scale;
                for (o, v) in out.row_mut(r as usize).iter_mut().zip(src) {
                    *o += v * f;
                }
            }
        }
        Ok(out)
    }

    /// The explicit `m × d` matrix.
    pub fn materialize(&self) -> Result<DenseMatrix> {
        let size = self.m as u128 * self.d as u128;
        if size > MATERIALIZE_LIMIT {
            return Err(Error::SizeGuard { what: "m*d", value: size, limit: MATERIALIZE_LIMIT });
        }
        let mut a = DenseMatrix::zeros(self.m, self.d);
        let scale = self.scale();
        for j in 0..self.d {
            let (rows, signs) = self.column(j);
            for (&r, &sg) in rows.iter().zip(signs) {
                a[(r as usize, j)] = sg as f64 * scale;
            }
        }
        Ok(a)
    }

    /// Single-line header record; the matrix is reproducible from it.
    pub fn to_canonical(&self) -> String {
        let mut out = serde_json::to_string(&self.header()).expect("header serializes");
        out.push('\n');
        out
    }

    /// Header line followed by one line per column:
    /// `j row:sign row:sign …` with signs written as `+1` / `-1`.
    pub fn to_explicit(&self) -> String {
        let mut out = self.to_canonical();
        for j in 0..self.d {
            let (rows, signs) = self.column(j);
            out.push_str(&j.to_string());
            for (r, sg) in rows.iter().zip(signs) {
                out.push_str(&format!(" {r}:{}", if *sg > 0 { "+1" } else { "-1" }));
            }
            out.push('\n');
        }
        out
    }

    /// Parses either form. A canonical file is resampled from its header; an
    /// explicit file is loaded entry by entry.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(Error::Parse { line: 1, message: "empty matrix file".into() })?;
        let header: MatrixHeader = serde_json::from_str(first)
            .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Parse {
                line: 1,
                message: format!("unsupported format_version {}", header.format_version),
            });
        }
        let body: Vec<(usize, &str)> = lines.collect();
        if body.is_empty() {
            if header.prng_id != PRNG_ID {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("cannot resample from prng_id {:?}", header.prng_id),
                });
            }
            return Self::sample(header.m, header.d, header.s, header.seed);
        }
        if body.len() != header.d {
            return Err(Error::Parse {
                line: 2,
                message: format!("expected {} column lines, found {}", header.d, body.len()),
            });
        }
        let mut rows = Vec::with_capacity(header.d * header.s);
        let mut signs = Vec::with_capacity(header.d * header.s);
        for (expected_col, (lineno, line)) in body.into_iter().enumerate() {
            let err = |message: String| Error::Parse { line: lineno + 1, message };
            let mut parts = line.split_whitespace();
            let col: usize = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err("missing column index".into()))?;
            if col != expected_col {
                return Err(err(format!("expected column {expected_col}, found {col}")));
            }
            let mut count = 0;
            for tok in parts {
                let (r, sg) = tok.split_once(':').ok_or_else(|| err(format!("bad entry {tok:?}")))?;
                rows.push(r.parse::<u32>().map_err(|e| err(e.to_string()))?);
                signs.push(match sg {
                    "+1" | "1" => 1,
                    "-1" => -1,
                    other => return Err(err(format!("bad sign {other:?}"))),
                });
                count += 1;
            }
            if count != header.s {
                return Err(err(format!("expected {} entries, found {count}", header.s)));
            }
        }
        Self::from_entries(&header, rows, signs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_blocks_structure() {
        for seed in 0..20 {
            let a = SparseJlMatrix::sample(8, 4, 2, seed).unwrap();
            for j in 0..4 {
                let (rows, signs) = a.column(j);
                assert!(rows[0] < 4 && (4..8).contains(&rows[1]));
                assert!(signs.iter().all(|s| *s == 1 || *s == -1));
            }
            let dense = a.materialize().unwrap();
            let r = a.scale();
            assert!((r - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
            assert!(dense.as_slice().iter().all(|v| *v == 0.0 || v.abs() == r));
        }
    }

    #[test]
    fn single_dense_column() {
        let a = SparseJlMatrix::sample(4, 1, 4, 99).unwrap();
        let dense = a.materialize().unwrap();
        assert!(dense.as_slice().iter().all(|v| v.abs() == 0.5));
        assert_eq!(a.column_norm_sq_exact(0), 1.0);
        let y = a.apply_sparse(&SparseVector::basis(1, 0).unwrap()).unwrap();
        assert_eq!(y.iter().map(|v| v * v).sum::<f64>(), 1.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SparseJlMatrix::sample(9, 4, 2, 0).is_err());
        assert!(SparseJlMatrix::sample(2, 4, 4, 0).is_err());
        assert!(SparseJlMatrix::sample(4, 0, 2, 0).is_err());
        assert!(SparseJlMatrix::sample(4, 4, 0, 0).is_err());
    }

    #[test]
    fn tiny_materialize() {
        let a = SparseJlMatrix::sample(2, 1, 2, 5).unwrap();
        let dense = a.materialize().unwrap();
        assert_eq!((dense.rows(), dense.cols()), (2, 1));
        assert!(dense.as_slice().iter().all(|v| (v.abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15));
    }

    #[test]
    fn materialize_guard() {
        let a = SparseJlMatrix::sample(20_000, 10_000, 1, 0).unwrap();
        assert!(matches!(a.materialize(), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn zero_vector_maps_to_zero() {
        let a = SparseJlMatrix::sample(12, 7, 3, 1).unwrap();
        assert!(a.apply_sparse(&SparseVector::zero(7)).unwrap().iter().all(|v| *v == 0.0));
        assert!(a.apply_sparse(&SparseVector::zero(6)).is_err());
    }

    #[test]
    fn basis_image_is_column() {
        let a = SparseJlMatrix::sample(12, 7, 3, 2).unwrap();
        let y = a.apply_sparse(&SparseVector::basis(7, 4).unwrap()).unwrap();
        assert_eq!(y.iter().filter(|v| **v != 0.0).count(), 3);
        assert!(y.iter().all(|v| *v == 0.0 || (v.abs() - 1.0 / 3f64.sqrt()).abs() < 1e-16));
        assert!((y.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn columns_are_addressable() {
        let a = SparseJlMatrix::sample(30, 50, 5, 1234).unwrap();
        for j in [0, 17, 49] {
            let (rows, signs) = sample_column(30, 5, 1234, j).unwrap();
            assert_eq!(a.column(j), (rows.as_slice(), signs.as_slice()));
        }
        assert_eq!(a, SparseJlMatrix::sample(30, 50, 5, 1234).unwrap());
        assert_ne!(a, SparseJlMatrix::sample(30, 50, 5, 1235).unwrap());
    }

    #[test]
    fn identity_matrix_product_returns_columns() {
        let a = SparseJlMatrix::sample(6, 5, 2, 8).unwrap();
        let out = a.apply_to_matrix(&DenseMatrix::identity(5)).unwrap();
        assert_eq!(out, a.materialize().unwrap());

        let mut x = DenseMatrix::zeros(5, 3);
        x[(2, 1)] = 1.5;
        x[(4, 1)] = -1.0;
        let out = a.apply_to_matrix(&x).unwrap();
        for i in 0..6 {
            assert_eq!(out[(i, 0)], 0.0);
            assert_eq!(out[(i, 2)], 0.0);
        }
        assert!(out.column(1).iter().any(|v| *v != 0.0));
        assert!(a.apply_to_matrix(&DenseMatrix::zeros(4, 3)).is_err());
    }

    #[test]
    fn apply_dataset_orders_and_reports_index() {
        let a = SparseJlMatrix::sample(6, 3, 2, 0).unwrap();
        let empty = Dataset::new(3, vec![]).unwrap();
        assert!(a.apply_dataset(&empty).unwrap().is_empty());
        let e1 = SparseVector::basis(3, 0).unwrap();
        let one = Dataset::new(3, vec![e1.clone()]).unwrap();
        assert_eq!(a.apply_dataset(&one).unwrap(), vec![a.apply_sparse(&e1).unwrap()]);
        let bad = Dataset::new(4, vec![SparseVector::zero(4), SparseVector::zero(4)]).unwrap();
        assert!(matches!(a.apply_dataset(&bad), Err(Error::DatasetMember { index: 0, .. })));
    }

    #[test]
    fn serialization_forms() {
        let a = SparseJlMatrix::sample(8, 4, 2, 7).unwrap();
        let canonical = a.to_canonical();
        assert_eq!(
            canonical,
            format!("{{\"format_version\":1,\"m\":8,\"d\":4,\"s\":2,\"seed\":7,\"prng_id\":\"{PRNG_ID}\"}}\n")
        );
        assert_eq!(SparseJlMatrix::parse(&canonical).unwrap(), a);
        let explicit = a.to_explicit();
        assert_eq!(explicit.lines().count(), 5);
        assert_eq!(SparseJlMatrix::parse(&explicit).unwrap(), a);

        let broken = explicit.replacen(" 4:", " 3:", 1);
        if broken != explicit {
            assert!(SparseJlMatrix::parse(&broken).is_err());
        }
        assert!(SparseJlMatrix::parse("").is_err());
        assert!(SparseJlMatrix::parse("{\"format_version\":9,\"m\":8,\"d\":4,\"s\":2,\"seed\":7,\"prng_id\":\"x\"}").is_err());
    }
}
