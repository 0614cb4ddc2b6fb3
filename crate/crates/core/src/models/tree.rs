use std::cmp::Ordering;

use ndarray::{ArrayView1, ArrayView2};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// CART with weighted Gini impurity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum number of training rows in each leaf.
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 10,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Leaf {
        /// Weighted fraction of favorable rows.
        score: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn score(&self, row: ArrayView1<f64>) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { score } => return score,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

/// Feature indices ordered by column name. Split search visits features in
/// this order and keeps the first of equally good splits, so results do not
/// depend on column layout.
pub(crate) fn canonical_order(names: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]).then(a.cmp(&b)));
    order
}

pub(crate) struct Grower<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: &'a [u8],
    pub w: &'a [f64],
    pub params: TreeParams,
    pub canonical: &'a [usize],
    /// Per-split feature subsample size; `None` searches every feature.
    pub max_features: Option<usize>,
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn gini_mass(total: f64, pos: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    total * (1.0 - p * p - (1.0 - p) * (1.0 - p))
}

impl Grower<'_> {
    /// Grows a tree over `rows`, which may repeat indices (bootstrap).
    pub fn grow(&self, rows: Vec<usize>, rng: Option<&mut ChaCha8Rng>) -> DecisionTree {
        let mut tree = DecisionTree { nodes: Vec::new() };
        let mut rng = rng;
        self.grow_node(&mut tree, rows, 0, &mut rng);
        tree
    }

    fn grow_node(
        &self,
        tree: &mut DecisionTree,
        rows: Vec<usize>,
        depth: usize,
        rng: &mut Option<&mut ChaCha8Rng>,
    ) -> usize {
        let id = tree.nodes.len();
        let (total, pos) = rows.iter().fold((0.0, 0.0), |(t, p), &r| {
            (t + self.w[r], p + self.w[r] * f64::from(self.y[r]))
        });
        let score = if total > 0.0 { pos / total } else { 0.0 };
        tree.nodes.push(Node::Leaf { score });

        let pure = pos <= 0.0 || pos >= total;
        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf.max(1) || pure {
            return id;
        }
        let Some(best) = self.best_split(&rows, total, pos, rng) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.x[[r, best.feature]] <= best.threshold);
        let left = self.grow_node(tree, left_rows, depth + 1, rng);
        let right = self.grow_node(tree, right_rows, depth + 1, rng);
        tree.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn candidate_features(&self, rng: &mut Option<&mut ChaCha8Rng>) -> Vec<usize> {
        let d = self.canonical.len();
        match (self.max_features, rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut picks: Vec<usize> = rand::seq::index::sample(rng, d, m).into_vec();
                picks.sort_unstable();
                picks.into_iter().map(|k| self.canonical[k]).collect()
            }
            _ => self.canonical.to_vec(),
        }
    }

    fn best_split(&self, rows: &[usize], total: f64, pos: f64, rng: &mut Option<&mut ChaCha8Rng>) -> Option<Candidate> {
        let parent = gini_mass(total, pos);
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<Candidate> = None;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        for f in self.candidate_features(rng) {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x[[r, f]], r)));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if sorted[0].0 == sorted[sorted.len() - 1].0 {
                continue;
            }
            let (mut lw, mut lp) = (0.0, 0.0);
            for i in 0..sorted.len() - 1 {
                let r = sorted[i].1;
                lw += self.w[r];
                lp += self.w[r] * f64::from(self.y[r]);
                let left_n = i + 1;
                if sorted[i].0 == sorted[i + 1].0 || left_n < min_leaf || sorted.len() - left_n < min_leaf {
                    continue;
                }
                let gain = parent - gini_mass(lw, lp) - gini_mass(total - lw, pos - lp);
                let better = match &best {
                    None => gain > 1e-12 * total,
                    Some(b) => gain.partial_cmp(&b.gain) == Some(Ordering::Greater),
                };
                if better {
                    best = Some(Candidate {
                        gain,
                        feature: f,
                        threshold: 0.5 * (sorted[i].0 + sorted[i + 1].0),
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn xor() -> (Array2<f64>, Vec<u8>) {
        let mut x = Array2::zeros((40, 2));
        let mut y = Vec::new();
        for i in 0..40 {
            let (a, b) = ((i % 2) as f64, ((i / 2) % 2) as f64);
            x[[i, 0]] = a;
            x[[i, 1]] = b;
            y.push(u8::from(a != b));
        }
        (x, y)
    }

    /// All four axis-aligned stumps on balanced XOR reach exactly 1/2.
    #[test]
    fn stumps_on_xor_cannot_beat_three_quarters() {
        let (x, y) = xor();
        for feature in 0..2 {
            for (left_label, right_label) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
                let correct = (0..40)
                    .filter(|&i| {
                        (if x[[i, feature]] <= 0.5 {
                            left_label
                        } else {
                            right_label
                        }) == y[i]
                    })
                    .count();
                assert!(correct as f64 / 40.0 <= 0.75);
            }
        }
        let w = vec![1.0; 40];
        let names = vec!["a".to_owned(), "b".to_owned()];
        let canonical = canonical_order(&names);
        let g = Grower {
            x: x.view(),
            y: &y,
            w: &w,
            params: TreeParams {
                max_depth: 1,
                min_leaf: 1,
            },
            canonical: &canonical,
            max_features: None,
        };
        let tree = g.grow((0..40).collect(), None);
        let acc = (0..40)
            .filter(|&i| u8::from(tree.score(x.row(i)) >= 0.5) == y[i])
            .count() as f64
            / 40.0;
        assert!(acc <= 0.75);
    }

    #[test]
    fn zero_gain_root_stays_leaf() {
        let (x, y) = xor();
        let w = vec![1.0; 40];
        let names = vec!["a".to_owned(), "b".to_owned()];
        let canonical = canonical_order(&names);
        // XOR has no informative first split, so a zero-gain root stays a leaf
        let g = Grower {
            x: x.view(),
            y: &y,
            w: &w,
            params: TreeParams::default(),
            canonical: &canonical,
            max_features: None,
        };
        let tree = g.grow((0..40).collect(), None);
        assert_eq!(tree.nodes.len(), 1);
    }

    #[test]
    fn min_leaf_is_respected() {
        let x = Array2::from_shape_fn((10, 1), |(i, _)| i as f64 / 10.0);
        let y: Vec<u8> = (0..10).map(|i| u8::from(i >= 8)).collect();
        let w = vec![1.0; 10];
        let names = vec!["x".to_owned()];
        let canonical = canonical_order(&names);
        let g = Grower {
            x: x.view(),
            y: &y,
            w: &w,
            params: TreeParams {
                max_depth: 5,
                min_leaf: 3,
            },
            canonical: &canonical,
            max_features: None,
        };
        let tree = g.grow((0..10).collect(), None);
        assert!(tree.nodes.len() > 1);
        let mut per_leaf = std::collections::BTreeMap::new();
        for i in 0..10 {
            let mut at = 0;
            while let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = tree.nodes[at]
            {
                at = if x[[i, feature]] <= threshold { left } else { right };
            }
            *per_leaf.entry(at).or_insert(0) += 1;
        }
        assert!(per_leaf.values().all(|&c| c >= 3));
    }
}
