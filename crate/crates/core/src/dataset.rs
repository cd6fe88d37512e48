//! Imbalanced binary-classification datasets.
//!
//! A [`Dataset`] is an ordered list of [`FitnessCase`]s. The class of
//! interest (usually the minority class) is [`Label::Positive`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("file is empty")]
    Empty,
    #[error("ragged rows: line {line} has {found} columns, expected {expected}")]
    Ragged {
        line: usize,
        found: usize,
        expected: usize,
    },
    #[error("label column {column} out of range for {width} columns")]
    LabelColumn { column: usize, width: usize },
    #[error("non-numeric feature cell {cell:?} at line {line}, column {column}")]
    NonNumeric {
        line: usize,
        column: usize,
        cell: String,
    },
    #[error("label cardinality: expected exactly two label tokens, found {0:?}")]
    LabelCardinality(Vec<String>),
    #[error("positive label {0:?} does not occur in the label column")]
    UnknownPositive(String),
    #[error("class {0} has no cases")]
    EmptyClass(Label),
    #[error("class {label} has {count} cases, at least 2 are required to split")]
    ClassTooSmall { label: Label, count: usize },
    #[error("train fraction {0} is not in (0, 1)")]
    Fraction(f64),
    #[error("feature count mismatch: {found} features, expected {expected}")]
    FeatureCount { found: usize, expected: usize },
    #[error("dataset needs at least one feature column")]
    NoFeatures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Positive => f.write_str("positive"),
            Label::Negative => f.write_str("negative"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessCase {
    pub features: Vec<f64>,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.positive + self.negative
    }

    pub fn get(&self, label: Label) -> usize {
        match label {
            Label::Positive => self.positive,
            Label::Negative => self.negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    cases: Vec<FitnessCase>,
    n_features: usize,
    positive_token: String,
    negative_token: String,
}

impl Dataset {
    /// Builds a dataset from in-memory cases, checking the shape invariants.
    pub fn new(
        cases: Vec<FitnessCase>,
        positive_token: impl Into<String>,
        negative_token: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        let n_features = cases.first().map(|c| c.features.len()).unwrap_or(0);
        if n_features == 0 {
            return Err(DatasetError::NoFeatures);
        }
        if let Some(bad) = cases.iter().find(|c| c.features.len() != n_features) {
            return Err(DatasetError::FeatureCount {
                found: bad.features.len(),
                expected: n_features,
            });
        }
        let ds = Dataset {
            cases,
            n_features,
            positive_token: positive_token.into(),
            negative_token: negative_token.into(),
        };
        let counts = ds.class_counts();
        for label in [Label::Positive, Label::Negative] {
            if counts.get(label) == 0 {
                return Err(DatasetError::EmptyClass(label));
            }
        }
        Ok(ds)
    }

    pub fn cases(&self) -> &[FitnessCase] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn positive_token(&self) -> &str {
        &self.positive_token
    }

    pub fn negative_token(&self) -> &str {
        &self.negative_token
    }

    pub fn class_counts(&self) -> ClassCounts {
        let mut counts = ClassCounts::default();
        for case in &self.cases {
            match case.label {
                Label::Positive => counts.positive += 1,
                Label::Negative => counts.negative += 1,
            }
        }
        counts
    }

    pub fn labels(&self) -> Vec<Label> {
        self.cases.iter().map(|c| c.label).collect()
    }

    /// Feature-major copy of the inputs: `columns()[k][i]` is feature `k` of case `i`.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_features)
            .map(|k| self.cases.iter().map(|c| c.features[k]).collect())
            .collect()
    }

    fn with_cases(&self, cases: Vec<FitnessCase>) -> Dataset {
        Dataset {
            cases,
            n_features: self.n_features,
            positive_token: self.positive_token.clone(),
            negative_token: self.negative_token.clone(),
        }
    }
}

/// Loads a comma-separated file.
///
/// `label_column` defaults to the last column. When `positive_label` is
/// `None` the rarer label token becomes the positive class (ties go to the
/// lexicographically smaller token). A first row whose feature cells do not
/// all parse as numbers is treated as a header.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: Option<usize>,
    positive_label: Option<&str>,
) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, label_column, positive_label)
}

/// Same as [`load_csv`] on already-read text.
pub fn parse_csv(
    text: &str,
    label_column: Option<usize>,
    positive_label: Option<&str>,
) -> Result<Dataset, DatasetError> {
    let rows: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect()))
        .collect();
    let Some((_, first)) = rows.first() else {
        return Err(DatasetError::Empty);
    };
    let width = first.len();
    let label_col = label_column.unwrap_or(width.saturating_sub(1));
    if label_col >= width {
        return Err(DatasetError::LabelColumn {
            column: label_col,
            width,
        });
    }
    if width < 2 {
        return Err(DatasetError::NoFeatures);
    }
    for (line, row) in &rows {
        if row.len() != width {
            return Err(DatasetError::Ragged {
                line: *line,
                found: row.len(),
                expected: width,
            });
        }
    }

    let is_header = first
        .iter()
        .enumerate()
        .any(|(j, cell)| j != label_col && parse_feature(cell).is_none());
    let body = if is_header { &rows[1..] } else { &rows[..] };
    if body.is_empty() {
        return Err(DatasetError::Empty);
    }

    let mut token_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, row) in body {
        *token_counts.entry(row[label_col]).or_default() += 1;
    }
    if token_counts.len() != 2 {
        return Err(DatasetError::LabelCardinality(
            token_counts.keys().map(|s| s.to_string()).collect(),
        ));
    }
    let positive = match positive_label {
        Some(tok) => {
            if !token_counts.contains_key(tok) {
                return Err(DatasetError::UnknownPositive(tok.to_string()));
            }
            tok
        }
        // BTreeMap iterates in token order, so min_by_key keeps the smaller token on ties.
        None => token_counts
            .iter()
            .min_by_key(|(_, &n)| n)
            .map(|(t, _)| *t)
            .expect("two tokens"),
    };
    let negative = *token_counts
        .keys()
        .find(|t| **t != positive)
        .expect("two tokens");

    let mut cases = Vec::with_capacity(body.len());
    for (line, row) in body {
        let mut features = Vec::with_capacity(width - 1);
        for (j, cell) in row.iter().enumerate() {
            if j == label_col {
                continue;
            }
            let v = parse_feature(cell).ok_or_else(|| DatasetError::NonNumeric {
                line: *line,
                column: j,
                cell: cell.to_string(),
            })?;
            features.push(v);
        }
        let label = if row[label_col] == positive {
            Label::Positive
        } else {
            Label::Negative
        };
        cases.push(FitnessCase { features, label });
    }
    Dataset::new(cases, positive, negative)
}

fn parse_feature(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Per-class shuffled split. Each class contributes `round(fraction · n_class)`
/// cases to the training half, clamped so both halves keep at least one case
/// of every class. Cases keep their original relative order in each half.
pub fn stratified_split(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::Fraction(train_fraction));
    }
    let counts = ds.class_counts();
    for label in [Label::Positive, Label::Negative] {
        let count = counts.get(label);
        if count < 2 {
            return Err(DatasetError::ClassTooSmall { label, count });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; ds.len()];
    for label in [Label::Positive, Label::Negative] {
        let mut idx: Vec<usize> = ds
            .cases
            .iter()
            .enumerate()
            .filter(|(_, c)| c.label == label)
            .map(|(i, _)| i)
            .collect();
        let n = idx.len();
        let take = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        idx.shuffle(&mut rng);
        for &i in &idx[..take] {
            in_train[i] = true;
        }
    }

    let (train, test): (Vec<_>, Vec<_>) = ds
        .cases
        .iter()
        .cloned()
        .zip(in_train)
        .partition(|(_, t)| *t);
    Ok((
        ds.with_cases(train.into_iter().map(|(c, _)| c).collect()),
        ds.with_cases(test.into_iter().map(|(c, _)| c).collect()),
    ))
}

/// Per-feature min-max scaling to [0, 1], fitted on one dataset and
/// applicable to others. Constant features map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(ds: &Dataset) -> Self {
        let mut min = vec![f64::INFINITY; ds.n_features];
        let mut max = vec![f64::NEG_INFINITY; ds.n_features];
        for case in &ds.cases {
            for (k, &v) in case.features.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        MinMaxScaler { min, max }
    }

    pub fn transform(&self, ds: &Dataset) -> Dataset {
        let cases = ds
            .cases
            .iter()
            .map(|c| FitnessCase {
                features: c
                    .features
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let range = self.max[k] - self.min[k];
                        if range > 0.0 {
                            (v - self.min[k]) / range
                        } else {
                            0.0
                        }
                    })
                    .collect(),
                label: c.label,
            })
            .collect();
        ds.with_cases(cases)
    }
}
