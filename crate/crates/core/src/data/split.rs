use rand::seq::SliceRandom;

use crate::data::encode::EncodedDataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: EncodedDataset,
    pub test: EncodedDataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

/// Number of training rows for `n` rows and a test fraction:
/// `ceil((1 - test_fraction) * n)`, kept within `[1, n - 1]`.
pub fn train_size(n: usize, test_fraction: f64) -> usize {
    // the epsilon absorbs representation error such as (1 - 0.3) * 10 = 7.000000000000001
    let raw = ((1.0 - test_fraction) * n as f64 - 1e-9).ceil() as usize;
    raw.clamp(1, n.saturating_sub(1).max(1))
}

/// Seeded random partition into train and test rows.
pub fn split(eds: &EncodedDataset, test_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = eds.n();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("cannot split {n} rows")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let k = train_size(n, test_fraction);
    let test_indices = order.split_off(k);
    let train_indices = order;
    Ok(SplitPair {
        train: eds.subset(&train_indices),
        test: eds.subset(&test_indices),
        train_indices,
        test_indices,
        seed,
    })
}
