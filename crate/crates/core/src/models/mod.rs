//! Self-contained binary classifiers behind one fit/predict interface.
//!
//! Every learner is deterministic given its spec seed and data. Predicted
//! labels are always `score >= 0.5`, so thresholding [`predict_scores`]
//! reproduces [`predict`] exactly.

mod forest;
mod logistic;
mod svm;
mod tree;

use std::fmt::{self, Write as _};
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use forest::ForestParams;
pub use logistic::LogisticParams;
pub use svm::SvmParams;
pub use tree::TreeParams;

use logistic::{sigmoid, LinearModel};
use tree::{canonical_order, DecisionTree, Grower, Node};

use crate::data::EncodedDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Lr,
    Dt,
    Rf,
    Lsvm,
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "logistic" => Ok(Self::Lr),
            "dt" | "tree" => Ok(Self::Dt),
            "rf" | "forest" => Ok(Self::Rf),
            "lsvm" | "svm" => Ok(Self::Lsvm),
            other => Err(Error::InvalidArgument(format!("unknown model kind `{other}`"))),
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lr => "lr",
            Self::Dt => "dt",
            Self::Rf => "rf",
            Self::Lsvm => "lsvm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    #[serde(default)]
    pub logistic: LogisticParams,
    #[serde(default)]
    pub tree: TreeParams,
    #[serde(default)]
    pub forest: ForestParams,
    #[serde(default)]
    pub svm: SvmParams,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        Self {
            kind,
            logistic: LogisticParams::default(),
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            svm: SvmParams::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_owned()));
        if self.logistic.l2.is_nan() || self.logistic.l2 < 0.0 || self.logistic.tol <= 0.0 {
            return bad("logistic: l2 must be >= 0 and tol > 0");
        }
        if self.tree.max_depth == 0 || self.tree.min_leaf == 0 {
            return bad("tree: max_depth and min_leaf must be >= 1");
        }
        if self.forest.n_trees == 0 || self.forest.max_features == Some(0) {
            return bad("forest: n_trees and max_features must be >= 1");
        }
        if self.forest.tree.max_depth == 0 || self.forest.tree.min_leaf == 0 {
            return bad("forest: max_depth and min_leaf must be >= 1");
        }
        if self.svm.l2.is_nan() || self.svm.l2 <= 0.0 || self.svm.epochs == 0 {
            return bad("svm: l2 must be > 0 and epochs >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Learned {
    Linear(LinearModel),
    Tree(DecisionTree),
    Forest(Vec<DecisionTree>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    kind: ClassifierKind,
    dim: usize,
    feature_names: Vec<String>,
    weighted: bool,
    learned: Learned,
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weighted(&self) -> bool {
        self.weighted
    }

    pub fn n_trees(&self) -> usize {
        match &self.learned {
            Learned::Forest(trees) => trees.len(),
            Learned::Tree(_) => 1,
            Learned::Linear(_) => 0,
        }
    }

    /// Plain-text parameter dump (see `docs/model-dump.md`).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model {}", self.kind);
        let _ = writeln!(out, "dim {}", self.dim);
        let _ = writeln!(out, "weighted {}", self.weighted);
        for name in &self.feature_names {
            let _ = writeln!(out, "feature {name}");
        }
        let dump_tree = |out: &mut String, t: &DecisionTree| {
            for (id, node) in t.nodes.iter().enumerate() {
                let _ = match node {
                    Node::Leaf { score } => writeln!(out, "node {id} leaf {score}"),
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => writeln!(out, "node {id} split {feature} {threshold} {left} {right}"),
                };
            }
        };
        match &self.learned {
            Learned::Linear(m) => {
                let _ = writeln!(out, "intercept {}", m.intercept);
                let coef: Vec<String> = m.coef.iter().map(f64::to_string).collect();
                let _ = writeln!(out, "coef {}", coef.join(" "));
            }
            Learned::Tree(t) => {
                let _ = writeln!(out, "tree 0 nodes {}", t.nodes.len());
                dump_tree(&mut out, t);
            }
            Learned::Forest(trees) => {
                for (k, t) in trees.iter().enumerate() {
                    let _ = writeln!(out, "tree {k} nodes {}", t.nodes.len());
                    dump_tree(&mut out, t);
                }
            }
        }
        out
    }
}

/// Fits `spec` on the encoded training data, optionally weighting rows.
pub fn fit(spec: &ClassifierSpec, train: &EncodedDataset, weights: Option<&[f64]>) -> Result<TrainedModel> {
    fit_matrix(
        spec,
        train.features().view(),
        train.label(),
        train.feature_names(),
        weights,
    )
}

pub fn fit_matrix(
    spec: &ClassifierSpec,
    x: ArrayView2<f64>,
    y: &[u8],
    feature_names: &[String],
    weights: Option<&[f64]>,
) -> Result<TrainedModel> {
    spec.validate()?;
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(Error::InvalidArgument(format!("{} labels for {n} rows", y.len())));
    }
    if feature_names.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: feature_names.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidArgument("at least two training rows required".into()));
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(Error::SingleClass);
    }
    let unit;
    let w = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::InvalidArgument(format!("{} weights for {n} rows", w.len())));
            }
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidArgument("sample weights must be positive".into()));
            }
            w
        }
        None => {
            unit = vec![1.0; n];
            &unit[..]
        }
    };

    let learned = match spec.kind {
        ClassifierKind::Lr => Learned::Linear(logistic::fit(x, y, w, &spec.logistic)),
        ClassifierKind::Lsvm => Learned::Linear(svm::fit(x, y, w, &spec.svm)),
        ClassifierKind::Dt => {
            let canonical = canonical_order(feature_names);
            let grower = Grower {
                x,
                y,
                w,
                params: spec.tree,
                canonical: &canonical,
                max_features: None,
            };
            Learned::Tree(grower.grow((0..n).collect(), None))
        }
        ClassifierKind::Rf => Learned::Forest(forest::fit(x, y, w, feature_names, &spec.forest, spec.seed)),
    };
    Ok(TrainedModel {
        kind: spec.kind,
        dim: d,
        feature_names: feature_names.to_vec(),
        weighted: weights.is_some(),
        learned,
    })
}

/// Probability-like scores in `[0, 1]`: sigmoid of the margin for linear
/// models, leaf favorable fraction for a tree, vote fraction for a forest.
pub fn predict_scores(model: &TrainedModel, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
    if rows.ncols() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: rows.ncols(),
        });
    }
    Ok(match &model.learned {
        Learned::Linear(m) => m.margins(rows).iter().map(|&z| sigmoid(z)).collect(),
        Learned::Tree(t) => rows.rows().into_iter().map(|r| t.score(r)).collect(),
        Learned::Forest(trees) => rows
            .rows()
            .into_iter()
            .map(|r| {
                let votes = trees.iter().filter(|t| t.score(r) >= 0.5).count();
                votes as f64 / trees.len() as f64
            })
            .collect(),
    })
}

/// Hard labels; a score of exactly 0.5 predicts the favorable label.
pub fn predict(model: &TrainedModel, rows: ArrayView2<f64>) -> Result<Vec<u8>> {
    Ok(predict_scores(model, rows)?
        .into_iter()
        .map(|s| u8::from(s >= 0.5))
        .collect())
}
