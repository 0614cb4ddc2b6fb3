use crate::data::EncodedDataset;
use crate::error::{Error, Result};

/// Row weights `P(a)·P(y) / P(a, y)` for the protected feature at
/// `sensitive_index`. Under these weights the joint distribution of group
/// and label factorizes.
pub fn reweigh(train: &EncodedDataset, sensitive_index: usize) -> Result<Vec<f64>> {
    let col = train
        .sensitive()
        .get(sensitive_index)
        .ok_or_else(|| Error::InvalidArgument(format!("no protected feature at index {sensitive_index}")))?;
    let weights = cell_weights(&col.values, train.label())?;
    Ok(col
        .values
        .iter()
        .zip(train.label())
        .map(|(&a, &y)| weights[a as usize][y as usize])
        .collect())
}

/// Weight of each `(a, y)` cell, indexed `[a][y]`.
pub fn cell_weights(groups: &[u8], labels: &[u8]) -> Result<[[f64; 2]; 2]> {
    if groups.len() != labels.len() {
        return Err(Error::InvalidArgument("group and label lengths differ".into()));
    }
    let mut counts = [[0usize; 2]; 2];
    for (&a, &y) in groups.iter().zip(labels) {
        counts[a as usize][y as usize] += 1;
    }
    let n = groups.len() as f64;
    let mut w = [[0.0; 2]; 2];
    for a in 0..2 {
        for y in 0..2 {
            if counts[a][y] == 0 {
                return Err(Error::Data(format!("reweighing cell (group={a}, label={y}) is empty")));
            }
            let pa = (counts[a][0] + counts[a][1]) as f64;
            let py = (counts[0][y] + counts[1][y]) as f64;
            w[a][y] = pa * py / (n * counts[a][y] as f64);
        }
    }
    Ok(w)
}
