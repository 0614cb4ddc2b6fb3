use ndarray::ArrayView2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{canonical_order, DecisionTree, Grower, TreeParams};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            tree: TreeParams::default(),
        }
    }
}

/// Each tree sees an `n`-row bootstrap drawn with probability proportional
/// to the sample weights, under its own seeded stream.
pub(crate) fn fit(
    x: ArrayView2<f64>,
    y: &[u8],
    w: &[f64],
    names: &[String],
    params: &ForestParams,
    seed: u64,
) -> Vec<DecisionTree> {
    let n = y.len();
    let d = x.ncols();
    let canonical = canonical_order(names);
    let m = params
        .max_features
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d.max(1));
    let unit = vec![1.0; n];
    let uniform = w.iter().all(|&v| v == w[0]);
    let sampler = (!uniform).then(|| WeightedIndex::new(w).expect("positive weights"));
    let grower = Grower {
        x,
        y,
        w: &unit,
        params: params.tree,
        canonical: &canonical,
        max_features: Some(m),
    };
    (0..params.n_trees)
        .map(|t| {
            let mut rng = seed::rng(seed::derive(seed, "tree", t as u64));
            let rows: Vec<usize> = match &sampler {
                Some(s) => (0..n).map(|_| s.sample(&mut rng)).collect(),
                None => (0..n).map(|_| rng.random_range(0..n)).collect(),
            };
            grower.grow(rows, Some(&mut rng))
        })
        .collect()
}
