//! Tabular regression data: typed feature columns plus a numeric response.
//!
//! Storage is column-major (`columns[j][i]` is feature `j` of row `i`), which
//! is what every downstream pass wants — histograms, per-feature sorts, tree
//! split scans. Categorical columns hold integer level codes as `f64`; codes
//! come from [`encode_categoricals`], which assigns them in lexicographic
//! (byte) order of the level strings so that encoding is independent of row
//! order.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

impl FeatureKind {
    pub fn label(&self) -> &'static str {
        match self {
            FeatureKind::Numeric => "numeric",
            FeatureKind::Categorical => "categorical",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    names: Vec<String>,
    kinds: Vec<FeatureKind>,
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    /// Level strings for categorical columns, indexed by code; `None` for
    /// numeric columns or programmatically built categorical ones.
    levels: Vec<Option<Vec<String>>>,
}

impl Dataset {
    /// Build and validate a dataset. Column order defines feature indices.
    pub fn new(
        names: Vec<String>,
        kinds: Vec<FeatureKind>,
        columns: Vec<Vec<f64>>,
        y: Vec<f64>,
    ) -> Result<Dataset> {
        let p = columns.len();
        let n = y.len();
        if p == 0 {
            return Err(Error::InvalidArg("dataset needs at least one feature".into()));
        }
        if n < 2 {
            return Err(Error::InvalidArg("dataset needs at least two rows".into()));
        }
        if names.len() != p || kinds.len() != p {
            return Err(Error::InvalidArg(format!(
                "got {} columns but {} names and {} kinds",
                p,
                names.len(),
                kinds.len()
            )));
        }
        for (j, name) in names.iter().enumerate() {
            if names[..j].contains(name) {
                return Err(Error::InvalidArg(format!("duplicate feature name '{name}'")));
            }
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidArg(format!(
                    "column '{}' has {} rows, expected {}",
                    names[j],
                    col.len(),
                    n
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArg(format!(
                    "column '{}' contains a non-finite value",
                    names[j]
                )));
            }
            if kinds[j] == FeatureKind::Categorical
                && col.iter().any(|&v| v < 0.0 || v.fract() != 0.0)
            {
                return Err(Error::InvalidArg(format!(
                    "categorical column '{}' must hold non-negative integer codes",
                    names[j]
                )));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArg("response contains a non-finite value".into()));
        }
        let levels = vec![None; p];
        Ok(Dataset {
            names,
            kinds,
            columns,
            y,
            levels,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn kind(&self, j: usize) -> FeatureKind {
        self.kinds[j]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Level string for a categorical code; falls back to the code itself
    /// when the dataset was built without level names.
    pub fn level_name(&self, j: usize, code: usize) -> String {
        match &self.levels[j] {
            Some(ls) if code < ls.len() => ls[code].clone(),
            _ => code.to_string(),
        }
    }

    pub(crate) fn set_levels(&mut self, j: usize, levels: Vec<String>) {
        self.levels[j] = Some(levels);
    }

    /// Borrowed view of all feature columns, in order.
    pub fn view_all(&self) -> Vec<&[f64]> {
        self.columns.iter().map(|c| c.as_slice()).collect()
    }

    /// All columns except feature `j` (the stratification design for `j`).
    pub fn view_without(&self, j: usize) -> Vec<&[f64]> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, c)| c.as_slice())
            .collect()
    }

    /// The columns at `idx`, in the order given.
    pub fn view_of(&self, idx: &[usize]) -> Vec<&[f64]> {
        idx.iter().map(|&j| self.columns[j].as_slice()).collect()
    }

    fn gather(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&i| c[i]).collect())
            .collect();
        let y = rows.iter().map(|&i| self.y[i]).collect();
        Dataset {
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            columns,
            y,
            levels: self.levels.clone(),
        }
    }
}

/// Sorted unique values of one column with their multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn n_unique(&self) -> usize {
        self.values.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Unique-value histogram of feature `j`. Values compare by exact f64
/// equality, which is the right notion here: the grid of a PD curve is the
/// set of values that actually occur.
pub fn histogram(ds: &Dataset, j: usize) -> Histogram {
    let mut sorted: Vec<f64> = ds.column(j).to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut values = Vec::new();
    let mut counts = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut c = 0;
        while i < sorted.len() && sorted[i] == v {
            c += 1;
            i += 1;
        }
        values.push(v);
        counts.push(c);
    }
    Histogram { values, counts }
}

/// Encode raw level strings as integer codes assigned in lexicographic (byte)
/// order of the distinct levels. Returns the codes and the code→level table.
/// Sorting the distinct levels — rather than numbering by first appearance —
/// makes the encoding a pure function of the value set, so shuffled rows
/// produce identical codes.
pub fn encode_categoricals(values: &[String]) -> (Vec<f64>, Vec<String>) {
    let mut levels: Vec<String> = values.to_vec();
    levels.sort();
    levels.dedup();
    let codes = values
        .iter()
        .map(|v| levels.binary_search(v).expect("level vanished") as f64)
        .collect();
    (codes, levels)
}

/// Load a CSV with a header row. Every non-target column becomes a feature;
/// the ones named in `categorical` are label-encoded, the rest must parse as
/// finite numbers. Any empty cell rejects its row's file with a row-indexed
/// error — there is no missing-value handling downstream.
pub fn load_csv(path: &Path, target: &str, categorical: &[String]) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => Error::Csv(e.to_string()),
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(|h| h.to_string())
        .collect();

    let target_idx = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::MissingTarget(target.to_string()))?;
    for c in categorical {
        if c == target {
            return Err(Error::InvalidArg(format!(
                "target column '{c}' cannot also be categorical"
            )));
        }
        if !headers.contains(c) {
            return Err(Error::UnknownColumn(c.clone()));
        }
    }

    let feat_cols: Vec<usize> = (0..headers.len()).filter(|&i| i != target_idx).collect();
    if feat_cols.is_empty() {
        return Err(Error::InvalidArg("no feature columns besides the target".into()));
    }
    let names: Vec<String> = feat_cols.iter().map(|&i| headers[i].clone()).collect();
    let kinds: Vec<FeatureKind> = names
        .iter()
        .map(|n| {
            if categorical.contains(n) {
                FeatureKind::Categorical
            } else {
                FeatureKind::Numeric
            }
        })
        .collect();

    // Raw cells per feature column; categorical ones get encoded after the
    // full pass so codes reflect the complete level set.
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); feat_cols.len()];
    let mut y: Vec<f64> = Vec::new();

    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let row = r + 1; // 1-based data row for messages
        if record.len() != headers.len() {
            return Err(Error::Csv(format!(
                "data row {row}: {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        for (slot, &ci) in feat_cols.iter().enumerate() {
            let cell = record.get(ci).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::MissingValue {
                    row,
                    col: headers[ci].clone(),
                });
            }
            raw[slot].push(cell.to_string());
        }
        let ycell = record.get(target_idx).unwrap_or("");
        if ycell.is_empty() {
            return Err(Error::MissingValue {
                row,
                col: headers[target_idx].clone(),
            });
        }
        y.push(parse_number(ycell, row, &headers[target_idx])?);
    }

    if y.is_empty() {
        return Err(Error::EmptyData);
    }

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(feat_cols.len());
    let mut level_tables: Vec<Option<Vec<String>>> = Vec::with_capacity(feat_cols.len());
    for (slot, cells) in raw.iter().enumerate() {
        match kinds[slot] {
            FeatureKind::Numeric => {
                let mut col = Vec::with_capacity(cells.len());
                for (r, cell) in cells.iter().enumerate() {
                    col.push(parse_number(cell, r + 1, &names[slot])?);
                }
                columns.push(col);
                level_tables.push(None);
            }
            FeatureKind::Categorical => {
                let (codes, levels) = encode_categoricals(cells);
                columns.push(codes);
                level_tables.push(Some(levels));
            }
        }
    }

    let mut ds = Dataset::new(names, kinds, columns, y)?;
    for (j, table) in level_tables.into_iter().enumerate() {
        if let Some(t) = table {
            ds.set_levels(j, t);
        }
    }
    Ok(ds)
}

fn parse_number(cell: &str, row: usize, col: &str) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::BadCell {
        row,
        col: col.to_string(),
        value: cell.to_string(),
    })?;
    if !v.is_finite() {
        return Err(Error::BadCell {
            row,
            col: col.to_string(),
            value: cell.to_string(),
        });
    }
    Ok(v)
}

/// Draw `ceil(frac * n)` rows, with replacement (bootstrap) or without
/// (subsample). Identical `(seed, frac, replace)` on the same dataset gives
/// the identical sample; the draw is a pure function of the seed, not of
/// platform or schedule.
pub fn sample_rows(ds: &Dataset, frac: f64, replace: bool, seed: u64) -> Result<Dataset> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::InvalidArg(format!(
            "sample fraction must be in (0, 1], got {frac}"
        )));
    }
    let n = ds.n();
    let m = (frac * n as f64).ceil() as usize;
    if m < 2 {
        return Err(Error::InvalidArg(format!(
            "sample of {m} row(s) is too small to be useful"
        )));
    }
    let mut rng = rng_from(seed);
    let rows: Vec<usize> = if replace {
        (0..m).map(|_| rng.random_range(0..n)).collect()
    } else {
        // partial Fisher-Yates: the first m entries of a seeded shuffle
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = rng.random_range(i..n);
            idx.swap(i, j);
        }
        idx.truncate(m);
        idx
    };
    Ok(ds.gather(&rows))
}
