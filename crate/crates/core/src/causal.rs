//! Intervened outcome probabilities via the backdoor adjustment
//! `P(Y=y | do(T=t)) = sum_z P(Y=y | T=t, Z=z) P(Z=z)` over declared strata.

use serde::{Deserialize, Serialize};

use crate::data::EncodedDataset;
use crate::error::{Error, Result};

/// Per-stratum counts of (sensitive value, label) for one sensitive feature.
#[derive(Debug, Clone, PartialEq)]
pub struct StrataTable {
    feature: String,
    lambda: f64,
    n: usize,
    /// `cells[z][t][y]`
    cells: Vec<[[usize; 2]; 2]>,
    marginal: [[usize; 2]; 2],
}

impl StrataTable {
    pub fn feature(&self) -> &str {
        &self.feature
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn strata(&self) -> usize {
        self.cells.len()
    }

    /// `cells[t][y]` counts for stratum `z`.
    pub fn counts(&self, z: usize) -> [[usize; 2]; 2] {
        self.cells[z]
    }

    /// Empirical `P(Z = z)`.
    pub fn weight(&self, z: usize) -> f64 {
        let c = self.cells[z];
        (c[0][0] + c[0][1] + c[1][0] + c[1][1]) as f64 / self.n as f64
    }

    /// Smoothed `P(Y=y | T=t, Z=z)`; `None` for an empty cell when λ = 0.
    pub fn conditional(&self, y: u8, t: u8, z: usize) -> Option<f64> {
        let c = self.cells[z][t as usize];
        let total = (c[0] + c[1]) as f64 + 2.0 * self.lambda;
        (total > 0.0).then(|| (c[y as usize] as f64 + self.lambda) / total)
    }

    /// Unadjusted `P(Y=y | T=t)` over all rows.
    pub fn marginal(&self, y: u8, t: u8) -> Option<f64> {
        let c = self.marginal[t as usize];
        let total = c[0] + c[1];
        (total > 0).then(|| c[y as usize] as f64 / total as f64)
    }

    /// Strata with rows but no `T = t` rows, which fall back to the marginal
    /// conditional when λ = 0.
    pub fn fallback_cells(&self, t: u8) -> usize {
        (0..self.strata())
            .filter(|&z| self.weight(z) > 0.0 && self.conditional(1, t, z).is_none())
            .count()
    }
}

/// Tabulates strata counts for sensitive feature `sensitive_index`.
pub fn build_strata(train: &EncodedDataset, sensitive_index: usize, lambda: f64) -> Result<StrataTable> {
    let col = train
        .sensitive()
        .get(sensitive_index)
        .ok_or_else(|| Error::InvalidArgument(format!("no sensitive feature #{sensitive_index}")))?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("smoothing must be >= 0, got {lambda}")));
    }
    if train.n() == 0 {
        return Err(Error::Data("cannot tabulate strata of an empty dataset".into()));
    }
    let mut cells = vec![[[0usize; 2]; 2]; train.strata_count()];
    let mut marginal = [[0usize; 2]; 2];
    for ((&z, &t), &y) in train.strata_key().iter().zip(&col.values).zip(train.label()) {
        cells[z as usize][t as usize][y as usize] += 1;
        marginal[t as usize][y as usize] += 1;
    }
    Ok(StrataTable {
        feature: col.name.clone(),
        lambda,
        n: train.n(),
        cells,
        marginal,
    })
}

/// Average causal effect `P(Y=y | do(T=t))`.
///
/// Empty cells at λ = 0 contribute their stratum weight times the marginal
/// `P(Y=y | T=t)`.
pub fn ace(table: &StrataTable, y: u8, t: u8) -> Result<f64> {
    let fallback = table.marginal(y, t);
    let mut total = 0.0;
    for z in 0..table.strata() {
        let w = table.weight(z);
        if w == 0.0 {
            continue;
        }
        let p = table
            .conditional(y, t, z)
            .or(fallback)
            .ok_or_else(|| Error::UndefinedEffect {
                feature: table.feature.clone(),
                value: t,
            })?;
        total += p * w;
    }
    Ok(total)
}

/// Average causal difference `ACE(y, t_j) - ACE(y, t_k)`.
pub fn acd(table: &StrataTable, y: u8, t_j: u8, t_k: u8) -> Result<f64> {
    Ok(ace(table, y, t_j)? - ace(table, y, t_k)?)
}

/// Causal summary of one protected feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEffect {
    pub feature: String,
    /// `ace[t][y]`
    pub ace: [[f64; 2]; 2],
    /// `ACE(y=1, t=1) - ACE(y=1, t=0)`
    pub acd: f64,
    pub privileged_value_inferred: u8,
    pub declared_privileged_value: u8,
    /// Rows per sensitive value `[t=0, t=1]`.
    pub group_sizes: [usize; 2],
    pub favorable_counts: [usize; 2],
    /// Unadjusted `P(Y=1 | T=1) - P(Y=1 | T=0)`.
    pub marginal_gap: f64,
    /// Marginal gap and adjusted difference have opposite signs.
    pub simpson_reversal: bool,
    pub fallback_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalReport {
    pub n: usize,
    pub lambda: f64,
    pub strata: usize,
    pub features: Vec<FeatureEffect>,
}

impl CausalReport {
    pub fn feature(&self, name: &str) -> Option<&FeatureEffect> {
        self.features.iter().find(|f| f.feature == name)
    }
}

pub fn feature_effect(train: &EncodedDataset, sensitive_index: usize, lambda: f64) -> Result<FeatureEffect> {
    let table = build_strata(train, sensitive_index, lambda)?;
    let mut group_sizes = [0; 2];
    let mut favorable_counts = [0; 2];
    for t in 0..2 {
        let c = table.marginal[t];
        group_sizes[t] = c[0] + c[1];
        favorable_counts[t] = c[1];
        if group_sizes[t] == 0 {
            return Err(Error::Data(format!(
                "sensitive feature `{}` has no rows with value {t}",
                table.feature
            )));
        }
    }
    let mut effects = [[0.0; 2]; 2];
    for (t, row) in effects.iter_mut().enumerate() {
        for (y, cell) in row.iter_mut().enumerate() {
            *cell = ace(&table, y as u8, t as u8)?;
        }
    }
    let acd = effects[1][1] - effects[0][1];
    let marginal_gap = table.marginal(1, 1).unwrap_or(0.0) - table.marginal(1, 0).unwrap_or(0.0);
    // ties resolve to the declared privileged value, which encoding maps to 1
    let inferred = if effects[0][1] > effects[1][1] { 0 } else { 1 };
    Ok(FeatureEffect {
        feature: table.feature.clone(),
        ace: effects,
        acd,
        privileged_value_inferred: inferred,
        declared_privileged_value: 1,
        group_sizes,
        favorable_counts,
        marginal_gap,
        simpson_reversal: marginal_gap * acd < 0.0,
        fallback_cells: table.fallback_cells(0) + table.fallback_cells(1),
    })
}

/// Causal report covering every protected feature of `train`.
pub fn identify_bias(train: &EncodedDataset, lambda: f64) -> Result<CausalReport> {
    let features = (0..train.sensitive().len())
        .map(|i| feature_effect(train, i, lambda))
        .collect::<Result<_>>()?;
    Ok(CausalReport {
        n: train.n(),
        lambda,
        strata: train.strata_count(),
        features,
    })
}
