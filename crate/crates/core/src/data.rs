//! Sparse examples, the on-disk line format, n-gram featurization and
//! column normalization.
//!
//! The line format is one example per line:
//!
//! ```text
//! #dim 8
//! 1 2:0.5 6:1.2
//! 0 1:3 # trailing comments are ignored
//! ```
//!
//! Indices are 1-based and strictly ascending on disk and 0-based in memory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

/// A sparse feature vector with strictly ascending indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    indices: Vec<usize>,
    values: Vec<f64>,
    dim: usize,
}

impl SparseVector {
    pub fn new(indices: Vec<usize>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(contract("indices and values differ in length"));
        }
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(contract("sparse indices must be strictly ascending"));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(contract(format!("index {last} out of range for dimension {dim}")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(contract("sparse values must be finite"));
        }
        // drop explicit zeros so `nnz` is the active support
        let (indices, values) = indices
            .into_iter()
            .zip(values)
            .filter(|&(_, v)| v != 0.0)
            .unzip();
        Ok(Self { indices, values, dim })
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(j, &v)| (j, v))
            .unzip();
        Self { indices, values, dim: dense.len() }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { indices: Vec::new(), values: Vec::new(), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
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

    pub fn get(&self, j: usize) -> f64 {
        match self.indices.binary_search(&j) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }

    /// Inner product with a dense weight vector of the same dimension.
    pub fn dot(&self, beta: &[f64]) -> f64 {
        debug_assert_eq!(beta.len(), self.dim);
        self.iter().map(|(j, v)| v * beta[j]).sum()
    }

    /// `Σ_j x_j² β_j²`
    pub fn weighted_sq_norm(&self, beta: &[f64]) -> f64 {
        self.iter().map(|(j, v)| (v * beta[j]).powi(2)).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (j, v) in self.iter() {
            out[j] = v;
        }
        out
    }

    /// Multiply each stored entry by `factors[j]`.
    pub fn scaled(&self, factors: &[f64]) -> Self {
        let (indices, values) = self
            .iter()
            .map(|(j, v)| (j, v * factors[j]))
            .filter(|&(_, v)| v != 0.0)
            .unzip();
        Self { indices, values, dim: self.dim }
    }
}

/// Labelled rows of uniform dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    rows: Vec<SparseVector>,
    labels: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(rows: Vec<SparseVector>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(contract(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.dim() != dim) {
            return Err(contract(format!(
                "row {i} has dimension {} but the dataset has {dim}",
                rows[i].dim()
            )));
        }
        if labels.iter().any(|y| !y.is_finite()) {
            return Err(contract("labels must be finite"));
        }
        Ok(Self { rows, labels, dim })
    }

    pub fn from_dense(rows: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        Self::new(rows.iter().map(|r| SparseVector::from_dense(r)).collect(), labels, dim)
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SparseVector, f64)> + '_ {
        self.rows.iter().zip(self.labels.iter().copied())
    }

    pub fn with_labels(&self, labels: Vec<f64>) -> Result<Self> {
        Self::new(self.rows.clone(), labels, self.dim)
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
        }
    }

    /// Serialize in the sparse line format, with a `#dim` header.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "#dim {}", self.dim)?;
        let mut line = String::new();
        for (row, y) in self.iter() {
            line.clear();
            write!(line, "{y}").unwrap();
            for (j, v) in row.iter() {
                write!(line, " {}:{v}", j + 1).unwrap();
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        parse_sparse(BufReader::new(input))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

/// Read a dataset in the sparse line format from disk.
pub fn read_sparse_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    Dataset::read_file(path)
}

fn parse_sparse<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut header_dim = None;
    let mut rows: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = None::<usize>;

    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        let perr = |message: String| Error::Parse { line: line_no, message };

        if k == 0 {
            if let Some(rest) = line.trim().strip_prefix("#dim") {
                let d = rest
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| perr(format!("bad #dim header: {e}")))?;
                header_dim = Some(d);
                continue;
            }
        }
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut fields = body.split_whitespace();
        let label_tok = fields.next().expect("non-empty line has a field");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| perr(format!("bad label {label_tok:?}")))?;
        if !label.is_finite() {
            return Err(perr(format!("non-finite label {label_tok:?}")));
        }
        let mut idx = Vec::new();
        let mut vals = Vec::new();
        for tok in fields {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| perr(format!("expected index:value, got {tok:?}")))?;
            let i: usize = i.parse().map_err(|_| perr(format!("bad index in {tok:?}")))?;
            if i == 0 {
                return Err(perr("indices are 1-based".into()));
            }
            let v: f64 = v.parse().map_err(|_| perr(format!("bad value in {tok:?}")))?;
            if !v.is_finite() {
                return Err(perr(format!("non-finite value in {tok:?}")));
            }
            if let Some(&prev) = idx.last() {
                if i - 1 <= prev {
                    return Err(perr(format!("index {i} is not strictly ascending")));
                }
            }
            idx.push(i - 1);
            vals.push(v);
        }
        if let Some(&last) = idx.last() {
            max_index = Some(max_index.map_or(last, |m: usize| m.max(last)));
        }
        rows.push((idx, vals));
        labels.push(label);
    }

    if rows.is_empty() {
        return Err(contract("empty dataset"));
    }
    let inferred = max_index.map_or(0, |m| m + 1);
    let dim = match header_dim {
        Some(d) if d < inferred => {
            return Err(contract(format!(
                "#dim {d} is smaller than the largest index {inferred}"
            )))
        }
        Some(d) => d,
        None => inferred,
    };
    let rows = rows
        .into_iter()
        .map(|(i, v)| SparseVector::new(i, v, dim))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(rows, labels, dim)
}

/// Lowercase and split on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn ngram_counts(text: &str, order: usize) -> BTreeMap<String, usize> {
    let toks = tokenize(text);
    let mut counts = BTreeMap::new();
    for t in &toks {
        *counts.entry(t.clone()).or_insert(0) += 1;
    }
    if order >= 2 {
        for w in toks.windows(2) {
            *counts.entry(format!("{}_{}", w[0], w[1])).or_insert(0) += 1;
        }
    }
    counts
}

/// Bag-of-n-grams featurization. Vocabulary is sorted lexicographically;
/// tokens whose corpus count is below `min_count` are dropped.
pub fn featurize_ngrams(
    documents: &[&str],
    labels: &[f64],
    order: usize,
    min_count: usize,
) -> Result<(Dataset, Vec<String>)> {
    if !(1..=2).contains(&order) {
        return Err(contract(format!("n-gram order must be 1 or 2, got {order}")));
    }
    if documents.len() != labels.len() {
        return Err(contract("documents and labels differ in length"));
    }
    let per_doc: Vec<_> = documents.iter().map(|d| ngram_counts(d, order)).collect();
    let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &per_doc {
        for (tok, c) in doc {
            *totals.entry(tok.as_str()).or_insert(0) += c;
        }
    }
    let vocab: Vec<String> = totals
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(t, _)| t.to_string())
        .collect();
    let index: BTreeMap<&str, usize> =
        vocab.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let dim = vocab.len();
    let rows = per_doc
        .iter()
        .map(|doc| {
            // BTreeMap iteration is lexicographic, which matches vocabulary order
            let (i, v): (Vec<usize>, Vec<f64>) = doc
                .iter()
                .filter_map(|(t, &c)| index.get(t.as_str()).map(|&j| (j, c as f64)))
                .unzip();
            SparseVector::new(i, v, dim)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Dataset::new(rows, labels.to_vec(), dim)?, vocab))
}

/// One token per line; the 0-based line number is the feature index.
pub fn write_vocabulary<W: Write>(vocab: &[String], mut out: W) -> Result<()> {
    for t in vocab {
        writeln!(out, "{t}")?;
    }
    Ok(())
}

pub fn read_vocabulary<R: Read>(input: R) -> Result<Vec<String>> {
    BufReader::new(input)
        .lines()
        .map(|l| l.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    UnitSecondMoment,
    None,
}

/// Per-column factors produced by [`normalize_columns`]; apply them to test
/// and unlabeled rows so every split lives in the same basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub mode: ScalingMode,
    pub factors: Vec<f64>,
    /// Columns left untouched because they are identically zero.
    pub zero_columns: Vec<usize>,
}

impl ScalingReport {
    pub fn identity(dim: usize) -> Self {
        Self { mode: ScalingMode::None, factors: vec![1.0; dim], zero_columns: Vec::new() }
    }

    pub fn apply_row(&self, row: &SparseVector) -> SparseVector {
        row.scaled(&self.factors)
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if data.dim() != self.factors.len() {
            return Err(contract(format!(
                "scaling has {} factors but data has dimension {}",
                self.factors.len(),
                data.dim()
            )));
        }
        Dataset::new(
            data.rows().iter().map(|r| self.apply_row(r)).collect(),
            data.labels().to_vec(),
            data.dim(),
        )
    }
}

/// Per-column sums of squares over a set of rows.
pub fn column_second_moments<'a>(
    rows: impl IntoIterator<Item = &'a SparseVector>,
    dim: usize,
) -> Vec<f64> {
    let mut ss = vec![0.0; dim];
    for r in rows {
        for (j, v) in r.iter() {
            ss[j] += v * v;
        }
    }
    ss
}

/// Factors that bring every nonzero column to `Σ_i x_ij² = 1`.
pub fn scaling_from_rows<'a>(
    rows: impl IntoIterator<Item = &'a SparseVector>,
    dim: usize,
    mode: ScalingMode,
) -> ScalingReport {
    if mode == ScalingMode::None {
        return ScalingReport::identity(dim);
    }
    let ss = column_second_moments(rows, dim);
    let mut zero_columns = Vec::new();
    let factors = ss
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            if s > 0.0 {
                1.0 / s.sqrt()
            } else {
                zero_columns.push(j);
                1.0
            }
        })
        .collect();
    ScalingReport { mode, factors, zero_columns }
}

pub fn normalize_columns(data: &Dataset, mode: ScalingMode) -> Result<(Dataset, ScalingReport)> {
    if data.is_empty() {
        return Err(contract("cannot normalize an empty dataset"));
    }
    let report = scaling_from_rows(data.rows(), data.dim(), mode);
    Ok((report.apply(data)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_reference_line() {
        let d = Dataset::read_from("1 2:0.5 6:1.2\n".as_bytes()).unwrap();
        assert_eq!(d.labels(), &[1.0]);
        assert_eq!(d.rows()[0].indices(), &[1, 5]);
        assert_eq!(d.rows()[0].values(), &[0.5, 1.2]);
        assert_eq!(d.dim(), 6);
    }

    #[test]
    fn header_comments_and_blank_lines() {
        let text = "#dim 10\n\n# a comment\n0 1:2 # tail\n1\n";
        let d = Dataset::read_from(text.as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim(), 10);
        assert_eq!(d.rows()[1].nnz(), 0);
    }

    #[test]
    fn empty_file_is_contract_error() {
        let err = Dataset::read_from("".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        let err = Dataset::read_from("#dim 3\n\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Dataset::read_from("1 1:1\n0 3:1 2:1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = Dataset::read_from("1 1:1\n\nx 1:1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = Dataset::read_from("1 0:1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = Dataset::read_from("1 1:abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn header_smaller_than_index_is_rejected() {
        assert!(Dataset::read_from("#dim 2\n1 5:1\n".as_bytes()).is_err());
    }

    #[test]
    fn unigrams() {
        let (d, vocab) = featurize_ngrams(&["Good movie"], &[1.0], 1, 0).unwrap();
        assert_eq!(vocab, vec!["good", "movie"]);
        assert_eq!(d.rows()[0].to_dense(), vec![1.0, 1.0]);
    }

    #[test]
    fn bigrams() {
        let (d, vocab) = featurize_ngrams(&["a b a"], &[0.0], 2, 0).unwrap();
        assert_eq!(vocab, vec!["a", "a_b", "b", "b_a"]);
        assert_eq!(d.rows()[0].to_dense(), vec![2.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn min_count_drops_rare_tokens() {
        let (d, vocab) = featurize_ngrams(&["x y", "x z"], &[0.0, 1.0], 1, 2).unwrap();
        assert_eq!(vocab, vec!["x"]);
        assert_eq!(d.dim(), 1);
    }

    #[test]
    fn featurize_is_deterministic() {
        let docs = ["The cat sat.", "A dog; the DOG ran!", "cat-dog"];
        let a = featurize_ngrams(&docs, &[0.0, 1.0, 1.0], 2, 1).unwrap();
        let b = featurize_ngrams(&docs, &[0.0, 1.0, 1.0], 2, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.0.rows().iter().flat_map(|r| r.values()).all(|&v| v >= 1.0));
        assert_eq!(a.0.dim(), a.1.len());
    }

    #[test]
    fn bad_order_rejected() {
        assert!(featurize_ngrams(&["a"], &[0.0], 3, 0).is_err());
    }

    #[test]
    fn column_three_four() {
        let d = Dataset::from_dense(&[vec![3.0, 0.0], vec![4.0, 0.0]], vec![0.0, 1.0]).unwrap();
        let (n, rep) = normalize_columns(&d, ScalingMode::UnitSecondMoment).unwrap();
        assert!((n.rows()[0].get(0) - 0.6).abs() < 1e-15);
        assert!((n.rows()[1].get(0) - 0.8).abs() < 1e-15);
        assert_eq!(rep.zero_columns, vec![1]);
        assert_eq!(rep.factors[1], 1.0);
    }

    #[test]
    fn vocabulary_round_trip() {
        let vocab = vec!["a".to_string(), "a_b".to_string()];
        let mut buf = Vec::new();
        write_vocabulary(&vocab, &mut buf).unwrap();
        assert_eq!(read_vocabulary(buf.as_slice()).unwrap(), vocab);
    }

    #[test]
    fn sparse_vector_drops_zeros_and_validates() {
        let v = SparseVector::new(vec![0, 2], vec![0.0, 1.0], 3).unwrap();
        assert_eq!(v.nnz(), 1);
        assert!(SparseVector::new(vec![2, 1], vec![1.0, 1.0], 3).is_err());
        assert!(SparseVector::new(vec![3], vec![1.0], 3).is_err());
        assert!(SparseVector::new(vec![0], vec![f64::NAN], 3).is_err());
    }
}
