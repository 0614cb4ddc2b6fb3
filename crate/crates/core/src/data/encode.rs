use std::collections::BTreeMap;

use ndarray::{Array2, Axis};

use crate::data::dataset::{Cell, Dataset};
use crate::data::schema::ColumnKind;
use crate::error::{Error, Result};

/// One protected attribute after encoding: privileged rows are 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitiveColumn {
    pub name: String,
    pub values: Vec<u8>,
    /// Column of the feature matrix that mirrors `values`, when the
    /// attribute is part of the learner's input.
    pub feature_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EncodeOptions {
    /// Append each protected attribute to the feature matrix as one binary
    /// column. The mitigation pipeline needs this on; off is for ablation.
    pub include_sensitive: bool,
}

/// Numeric view of a dataset that every pipeline stage consumes.
///
/// Invariants: every feature lies in `[0, 1]`; label and sensitive entries
/// are 0 or 1; the feature matrix has one row per label.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub(crate) features: Array2<f64>,
    pub(crate) feature_names: Vec<String>,
    pub(crate) label: Vec<u8>,
    pub(crate) sensitive: Vec<SensitiveColumn>,
    pub(crate) strata: Vec<u32>,
    pub(crate) strata_labels: Vec<String>,
    pub(crate) warnings: Vec<String>,
}

impl EncodedDataset {
    /// Builds an encoded dataset from already numeric parts, checking every
    /// invariant. Stratum ids must be below `strata_count`.
    pub fn from_parts(
        features: Array2<f64>,
        feature_names: Vec<String>,
        label: Vec<u8>,
        sensitive: Vec<SensitiveColumn>,
        strata: Vec<u32>,
        strata_count: usize,
    ) -> Result<Self> {
        let n = label.len();
        if features.nrows() != n || strata.len() != n {
            return Err(Error::Data("row counts of features, label and strata differ".into()));
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::Data("one feature name per column required".into()));
        }
        if features.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Data("features must lie in [0, 1]".into()));
        }
        if label.iter().any(|&y| y > 1) {
            return Err(Error::Data("labels must be 0 or 1".into()));
        }
        for s in &sensitive {
            if s.values.len() != n || s.values.iter().any(|&a| a > 1) {
                return Err(Error::Data(format!("sensitive column `{}` malformed", s.name)));
            }
            if let Some(j) = s.feature_index {
                if j >= features.ncols()
                    || features
                        .column(j)
                        .iter()
                        .zip(&s.values)
                        .any(|(&x, &a)| x != f64::from(a))
                {
                    return Err(Error::Data(format!("feature mirror of `{}` disagrees", s.name)));
                }
            }
        }
        if strata.iter().any(|&z| z as usize >= strata_count.max(1)) {
            return Err(Error::Data("stratum id out of range".into()));
        }
        Ok(Self {
            features,
            feature_names,
            label,
            sensitive,
            strata,
            strata_labels: (0..strata_count.max(1)).map(|z| z.to_string()).collect(),
            warnings: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.label.len()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label(&self) -> &[u8] {
        &self.label
    }

    pub fn sensitive(&self) -> &[SensitiveColumn] {
        &self.sensitive
    }

    pub fn sensitive_index(&self, name: &str) -> Option<usize> {
        self.sensitive.iter().position(|s| s.name == name)
    }

    pub fn strata_key(&self) -> &[u32] {
        &self.strata
    }

    pub fn strata_count(&self) -> usize {
        self.strata_labels.len()
    }

    pub fn strata_labels(&self) -> &[String] {
        &self.strata_labels
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            feature_names: self.feature_names.clone(),
            label: indices.iter().map(|&i| self.label[i]).collect(),
            sensitive: self
                .sensitive
                .iter()
                .map(|s| SensitiveColumn {
                    name: s.name.clone(),
                    values: indices.iter().map(|&i| s.values[i]).collect(),
                    feature_index: s.feature_index,
                })
                .collect(),
            strata: indices.iter().map(|&i| self.strata[i]).collect(),
            strata_labels: self.strata_labels.clone(),
            warnings: self.warnings.clone(),
        }
    }
}

/// Quartile cut points (linear interpolation between order statistics).
fn quartile_cuts(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() {
        return Vec::new();
    }
    let mut cuts: Vec<f64> = [0.25, 0.5, 0.75]
        .iter()
        .map(|q| {
            let pos = q * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        })
        .collect();
    cuts.dedup();
    cuts
}

/// Encodes a dataset: one-hot categoricals (levels in sorted order),
/// min-max scaled numerics, label favorable → 1, sensitive privileged → 1.
pub fn encode(ds: &Dataset, options: EncodeOptions) -> Result<EncodedDataset> {
    let schema = ds.schema();
    let rows = ds.rows();
    let n = rows.len();
    let mut warnings = Vec::new();

    let label_idx = schema.column_index(&schema.label_column).expect("validated schema");
    let label: Vec<u8> = rows
        .iter()
        .map(|r| {
            let v = r[label_idx].as_text().unwrap_or_default();
            u8::from(schema.favorable.iter().any(|f| f == v))
        })
        .collect();

    let mut sensitive = Vec::with_capacity(schema.sensitive.len());
    for spec in &schema.sensitive {
        let idx = schema.column_index(&spec.column).expect("validated schema");
        let values: Vec<u8> = rows
            .iter()
            .map(|r| {
                u8::from(match &r[idx] {
                    Cell::Text(s) => spec.privileged.matches_text(s),
                    Cell::Number(x) => spec.privileged.matches_number(*x),
                })
            })
            .collect();
        if n > 0 && !values.contains(&1) {
            return Err(Error::Data(format!(
                "sensitive column `{}` never takes its privileged value",
                spec.column
            )));
        }
        sensitive.push(SensitiveColumn {
            name: spec.column.clone(),
            values,
            feature_index: None,
        });
    }

    let skip = |name: &str| name == schema.label_column || schema.sensitive.iter().any(|s| s.column == name);

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    for (j, col) in schema.columns.iter().enumerate() {
        if skip(&col.name) {
            continue;
        }
        match col.kind {
            ColumnKind::Categorical => {
                let levels: BTreeMap<&str, usize> = {
                    let mut set: Vec<&str> = rows.iter().filter_map(|r| r[j].as_text()).collect();
                    set.sort_unstable();
                    set.dedup();
                    set.into_iter().enumerate().map(|(i, l)| (l, i)).collect()
                };
                let base = columns.len();
                for level in levels.keys() {
                    columns.push(vec![0.0; n]);
                    names.push(format!("{}={}", col.name, level));
                }
                for (i, r) in rows.iter().enumerate() {
                    let level = r[j].as_text().unwrap_or_default();
                    columns[base + levels[level]][i] = 1.0;
                }
            }
            ColumnKind::Numeric => {
                let values: Vec<f64> = rows.iter().map(|r| r[j].as_number().unwrap_or_default()).collect();
                let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                    (lo.min(x), hi.max(x))
                });
                let scaled = if n > 0 && hi > lo {
                    values.iter().map(|x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
                } else {
                    if n > 0 {
                        warnings.push(format!("numeric column `{}` is constant; encoded as 0", col.name));
                    }
                    vec![0.0; n]
                };
                columns.push(scaled);
                names.push(col.name.clone());
            }
        }
    }

    if options.include_sensitive {
        for s in &mut sensitive {
            s.feature_index = Some(columns.len());
            columns.push(s.values.iter().map(|&a| f64::from(a)).collect());
            names.push(s.name.clone());
        }
    }

    let d = columns.len();
    let mut features = Array2::<f64>::zeros((n, d));
    for (j, col) in columns.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            features[[i, j]] = x;
        }
    }

    let (strata, strata_labels) = strata_keys(ds);

    Ok(EncodedDataset {
        features,
        feature_names: names,
        label,
        sensitive,
        strata,
        strata_labels,
        warnings,
    })
}

/// Stratum id per row: the raw values of the strata columns joined, with
/// numeric strata columns replaced by their quartile bin. Ids follow the
/// sorted order of the joined keys.
fn strata_keys(ds: &Dataset) -> (Vec<u32>, Vec<String>) {
    let schema = ds.schema();
    let rows = ds.rows();
    if schema.strata_columns.is_empty() {
        return (vec![0; rows.len()], vec![String::from("*")]);
    }
    let parts: Vec<(usize, Option<Vec<f64>>)> = schema
        .strata_columns
        .iter()
        .map(|name| {
            let j = schema.column_index(name).expect("validated schema");
            let cuts = match schema.columns[j].kind {
                ColumnKind::Numeric => {
                    let values: Vec<f64> = rows.iter().filter_map(|r| r[j].as_number()).collect();
                    Some(quartile_cuts(&values))
                }
                ColumnKind::Categorical => None,
            };
            (j, cuts)
        })
        .collect();

    let keys: Vec<String> = rows
        .iter()
        .map(|r| {
            parts
                .iter()
                .map(|(j, cuts)| match (cuts, &r[*j]) {
                    (Some(cuts), Cell::Number(x)) => format!("q{}", cuts.iter().filter(|c| *x > **c).count()),
                    (_, Cell::Text(s)) => s.clone(),
                    (None, Cell::Number(x)) => x.to_string(),
                })
                .collect::<Vec<_>>()
                .join("|")
        })
        .collect();
    let ids: BTreeMap<&str, u32> = {
        let mut distinct: Vec<&str> = keys.iter().map(String::as_str).collect();
        distinct.sort_unstable();
        distinct.dedup();
        distinct.into_iter().enumerate().map(|(i, k)| (k, i as u32)).collect()
    };
    let strata = keys.iter().map(|k| ids[k.as_str()]).collect();
    let labels = ids.keys().map(|k| (*k).to_owned()).collect();
    (strata, labels)
}
