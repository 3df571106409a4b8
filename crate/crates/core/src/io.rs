//! Dataset and matrix file formats.
//!
//! * Sparse text: one vector per line, an optional leading label token, then
//!   `index:value` pairs (0-based unless `one_based`). `#` starts a comment;
//!   a `# dim=N` comment fixes the dimension. Blank lines are ignored, so the
//!   zero vector is written as `0:0`.
//! * Dense CSV: one vector per row, no header.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::linalg::DenseMatrix;
use crate::vectors::{Dataset, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Sparse,
    DenseCsv,
}

impl DataFormat {
    /// `.csv` is dense; anything else is sparse text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::DenseCsv,
            _ => DataFormat::Sparse,
        }
    }
}

impl std::str::FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" | "svm" | "sv" => Ok(DataFormat::Sparse),
            "csv" | "dense" => Ok(DataFormat::DenseCsv),
            other => Err(invalid("format", format!("unknown format {other:?}"))),
        }
    }
}

type LabeledPairs = (Option<String>, Vec<(usize, f64)>);

/// Parses sparse text. The dimension is `dim` if given, else a `# dim=N`
/// comment, else one past the largest index seen.
pub fn parse_sparse(text: &str, dim: Option<usize>, one_based: bool) -> Result<Dataset> {
    let mut declared = None;
    let mut rows: Vec<LabeledPairs> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("dim=") {
                declared = Some(v.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad dim comment: {e}"),
                })?);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: lineno + 1, message };
        let mut tokens = line.split_whitespace().peekable();
        let label = match tokens.peek() {
            Some(t) if !t.contains(':') => tokens.next().map(str::to_string),
            _ => None,
        };
        let mut pairs = Vec::new();
        for tok in tokens {
            let (i, v) = tok.split_once(':').ok_or_else(|| err(format!("expected index:value, got {tok:?}")))?;
            let mut i: usize = i.parse().map_err(|e| err(format!("bad index {i:?}: {e}")))?;
            if one_based {
                i = i.checked_sub(1).ok_or_else(|| err("index 0 in one-based input".into()))?;
            }
            let v: f64 = v.parse().map_err(|e| err(format!("bad value {v:?}: {e}")))?;
            if !v.is_finite() {
                return Err(err(format!("value {v} is not finite")));
            }
            pairs.push((i, v));
        }
        rows.push((label, pairs));
    }
    let inferred = rows.iter().flat_map(|(_, p)| p.iter().map(|(i, _)| i + 1)).max().unwrap_or(0);
    let dim = dim.or(declared).unwrap_or(inferred);
    let has_labels = rows.iter().any(|(l, _)| l.is_some());
    let mut labels = Vec::with_capacity(rows.len());
    let mut points = Vec::with_capacity(rows.len());
    for (k, (label, pairs)) in rows.into_iter().enumerate() {
        let p = SparseVector::from_pairs(dim, pairs)
            .map_err(|e| Error::DatasetMember { index: k, source: Box::new(e) })?;
        points.push(p);
        labels.push(label.unwrap_or_default());
    }
    let data = Dataset::new(dim, points)?;
    if has_labels {
        data.with_labels(labels)
    } else {
        Ok(data)
    }
}

/// Writes sparse text with a leading `# dim=N` comment.
pub fn format_sparse(data: &Dataset) -> String {
    let mut out = format!("# dim={}\n", data.dim());
    for (k, p) in data.points().iter().enumerate() {
        let mut line = String::new();
        if let Some(l) = data.labels().map(|l| &l[k]).filter(|l| !l.is_empty()) {
            line.push_str(l);
        }
        if p.is_zero() {
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str("0:0");
        }
        for (i, v) in p.iter() {
            if !line.is_empty() {
                line.push(' ');
            }
            let _ = write!(line, "{i}:{v}");
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Parses headerless dense CSV into rows.
pub fn parse_csv_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse { line: k + 1, message: e.to_string() })?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse { line, message: format!("bad number {f:?}") })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(Error::Parse { line, message: format!("expected {first} fields, found {}", row.len()) });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn parse_dense_dataset(text: &str) -> Result<Dataset> {
    let rows = parse_csv_rows(text)?;
    let dim = rows.first().map_or(0, Vec::len);
    Dataset::new(dim, rows.iter().map(|r| SparseVector::from_dense(r)).collect())
}

pub fn parse_dense_matrix(text: &str) -> Result<DenseMatrix> {
    DenseMatrix::from_rows(&parse_csv_rows(text)?)
}

/// One CSV row per slice.
pub fn format_csv_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut out = String::new();
    for row in rows {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn format_dense_matrix(m: &DenseMatrix) -> String {
    format_csv_rows((0..m.rows()).map(|i| m.row(i)))
}

/// Reads a dataset, picking the format from the extension unless given.
pub fn read_dataset(path: &Path, format: Option<DataFormat>, dim: Option<usize>, one_based: bool) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    match format.unwrap_or_else(|| DataFormat::from_path(path)) {
        DataFormat::Sparse => parse_sparse(&text, dim, one_based),
        DataFormat::DenseCsv => {
            let data = parse_dense_dataset(&text)?;
            match dim {
                Some(d) if d != data.dim() => Err(Error::DimensionMismatch { expected: d, found: data.dim() }),
                _ => Ok(data),
            }
        }
    }
}

pub fn read_dense_matrix(path: &Path) -> Result<DenseMatrix> {
    parse_dense_matrix(&fs::read_to_string(path)?)
}

/// A single column of numbers (one per row) or a single row.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let rows = parse_csv_rows(&fs::read_to_string(path)?)?;
    match rows.as_slice() {
        [single] => Ok(single.clone()),
        many if many.iter().all(|r| r.len() == 1) => Ok(many.iter().map(|r| r[0]).collect()),
        _ => Err(invalid("vector", "expected a single row or a single column")),
    }
}
