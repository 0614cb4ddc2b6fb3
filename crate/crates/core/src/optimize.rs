//! Weighted objective over mutation plans and the particle swarm search.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::causal::{identify_bias, CausalReport};
use crate::data::{split, EncodedDataset};
use crate::decorrelate::{mutate, MutationPlan, MutationStrategy};
use crate::error::{Error, Result};
use crate::metrics::metric_bundle;
use crate::models::{self, ClassifierSpec};
use crate::seed;

/// `w_perf·(F1 + Acc) − w_fair·(|EOD| + |AOD|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub w_perf: f64,
    pub w_fair: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            w_perf: 1.0,
            w_fair: 1.0,
        }
    }
}

impl ObjectiveWeights {
    pub fn new(w_perf: f64, w_fair: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(w_perf) || !ok(w_fair) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and non-negative, got {w_perf}:{w_fair}"
            )));
        }
        if w_perf == 0.0 && w_fair == 0.0 {
            return Err(Error::InvalidArgument("weights 0:0 leave nothing to optimize".into()));
        }
        Ok(Self { w_perf, w_fair })
    }
}

impl FromStr for ObjectiveWeights {
    type Err = Error;

    /// Parses a `P:F` ratio such as `1:1`, `30:1` or `0.1:1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("weights must look like P:F, got `{s}`"));
        let (p, f) = s.split_once(':').ok_or_else(bad)?;
        let p: f64 = p.trim().parse().map_err(|_| bad())?;
        let f: f64 = f.trim().parse().map_err(|_| bad())?;
        Self::new(p, f)
    }
}

impl fmt::Display for ObjectiveWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.w_perf, self.w_fair)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    pub population: usize,
    /// Evaluation rounds, the initial one included.
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub v_max: f64,
    pub seed: u64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            population: 10,
            iterations: 5,
            inertia: 0.8,
            cognitive: 0.5,
            social: 0.5,
            v_max: 0.5,
            seed: 0,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 || self.iterations == 0 {
            return Err(Error::InvalidArgument("population and iterations must be >= 1".into()));
        }
        if [self.inertia, self.cognitive, self.social, self.v_max]
            .iter()
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::InvalidArgument(
                "inertia, cognitive, social and v_max must be > 0".into(),
            ));
        }
        Ok(())
    }
}

fn promote(pbest: &[Vec<f64>], pscore: &[f64], gbest: &mut Vec<f64>, gscore: &mut f64) {
    for (pos, &s) in pbest.iter().zip(pscore) {
        if s > *gscore {
            *gscore = s;
            gbest.clone_from(pos);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Swarm {
    pub best_alpha: Vec<f64>,
    pub best_score: f64,
    /// Global-best score after each round.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

/// Maximizes `f` over `[0, 1]^dim`. Each particle draws from its own
/// stream, and the global best only moves on a strict improvement.
pub fn pso<F: FnMut(&[f64]) -> f64>(dim: usize, params: &PsoParams, mut f: F) -> Result<Swarm> {
    params.validate()?;
    if dim == 0 {
        return Err(Error::InvalidArgument("search space has no dimensions".into()));
    }
    let p = params.population;
    let mut rngs: Vec<_> = (0..p)
        .map(|i| seed::rng(seed::derive(params.seed, "particle", i as u64)))
        .collect();
    let mut x: Vec<Vec<f64>> = rngs
        .iter_mut()
        .map(|r| (0..dim).map(|_| r.random::<f64>()).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = rngs
        .iter_mut()
        .map(|r| (0..dim).map(|_| r.random_range(-0.1..=0.1)).collect())
        .collect();

    let mut evaluations = 0;
    let mut eval = |pos: &[f64]| {
        evaluations += 1;
        let s = f(pos);
        if s.is_nan() {
            f64::NEG_INFINITY
        } else {
            s
        }
    };

    let mut pbest = x.clone();
    let mut pscore: Vec<f64> = x.iter().map(|pos| eval(pos)).collect();
    let mut gbest = pbest[0].clone();
    let mut gscore = pscore[0];
    promote(&pbest, &pscore, &mut gbest, &mut gscore);
    let mut trace = vec![gscore];

    for _ in 1..params.iterations {
        for i in 0..p {
            let rng = &mut rngs[i];
            for d in 0..dim {
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let vel = params.inertia * v[i][d]
                    + params.cognitive * r1 * (pbest[i][d] - x[i][d])
                    + params.social * r2 * (gbest[d] - x[i][d]);
                v[i][d] = vel.clamp(-params.v_max, params.v_max);
                x[i][d] = (x[i][d] + v[i][d]).clamp(0.0, 1.0);
            }
            let s = eval(&x[i]);
            if s > pscore[i] {
                pscore[i] = s;
                pbest[i].clone_from(&x[i]);
            }
        }
        promote(&pbest, &pscore, &mut gbest, &mut gscore);
        trace.push(gscore);
    }

    Ok(Swarm {
        best_alpha: gbest,
        best_score: gscore,
        trace,
        evaluations,
    })
}

/// Objective terms at one α. Fairness magnitudes are averaged over the
/// protected features; each undefined magnitude costs a penalty of 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub score: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub abs_eod: f64,
    pub abs_aod: f64,
    pub undefined_terms: usize,
    pub failed: bool,
}

impl ObjectiveBreakdown {
    fn failure() -> Self {
        Self {
            score: f64::NEG_INFINITY,
            f1: 0.0,
            accuracy: 0.0,
            abs_eod: 0.0,
            abs_aod: 0.0,
            undefined_terms: 0,
            failed: true,
        }
    }
}

struct Fold {
    fit: EncodedDataset,
    val: EncodedDataset,
    report: CausalReport,
}

/// Everything the objective needs: inner fit/validation splits of the
/// training data with their causal reports, the model spec and the
/// mutation settings. The test split never enters here.
pub struct ObjectiveContext {
    folds: Vec<Fold>,
    pub spec: ClassifierSpec,
    pub strategy: MutationStrategy,
    pub weights: ObjectiveWeights,
    pub mutation_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveOptions {
    pub strategy: MutationStrategy,
    pub weights: ObjectiveWeights,
    pub lambda: f64,
    /// Fraction of the training data held out for validation.
    pub validation_fraction: f64,
    /// Average over this many folds instead of a single hold-out.
    pub folds: Option<usize>,
}

impl Default for ObjectiveOptions {
    fn default() -> Self {
        Self {
            strategy: MutationStrategy::default(),
            weights: ObjectiveWeights::default(),
            lambda: 0.0,
            validation_fraction: 0.2,
            folds: None,
        }
    }
}

impl ObjectiveContext {
    pub fn new(train: &EncodedDataset, spec: ClassifierSpec, options: &ObjectiveOptions, seed: u64) -> Result<Self> {
        let mut folds = Vec::new();
        let mut push = |fit: EncodedDataset, val: EncodedDataset| -> Result<()> {
            let report = identify_bias(&fit, options.lambda)?;
            folds.push(Fold { fit, val, report });
            Ok(())
        };
        match options.folds {
            None | Some(1) => {
                let pair = split(train, options.validation_fraction, seed::derive(seed, "inner", 0))?;
                push(pair.train, pair.test)?;
            }
            Some(0) => return Err(Error::InvalidArgument("fold count must be >= 1".into())),
            Some(k) => {
                let n = train.n();
                if n < k {
                    return Err(Error::InvalidArgument(format!("cannot make {k} folds from {n} rows")));
                }
                let mut order: Vec<usize> = (0..n).collect();
                rand::seq::SliceRandom::shuffle(&mut order[..], &mut seed::rng(seed::derive(seed, "inner", 0)));
                for f in 0..k {
                    let (lo, hi) = (f * n / k, (f + 1) * n / k);
                    let val: Vec<usize> = order[lo..hi].to_vec();
                    let fit: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
                    push(train.subset(&fit), train.subset(&val))?;
                }
            }
        }
        Ok(Self {
            folds,
            spec,
            strategy: options.strategy,
            weights: options.weights,
            mutation_seed: seed::derive(seed, "inner-mutate", 0),
        })
    }

    pub fn dim(&self) -> usize {
        self.folds[0].fit.sensitive().len()
    }

    fn evaluate_fold(&self, fold: &Fold, alpha: &[f64]) -> Result<ObjectiveBreakdown> {
        let plan = MutationPlan {
            alphas: alpha.to_vec(),
            strategy: self.strategy,
            seed: self.mutation_seed,
        };
        let outcome = mutate(&fold.fit, &plan, &fold.report)?;
        let model = match models::fit(&self.spec, &outcome.mutated_train, None) {
            Ok(m) => m,
            Err(Error::SingleClass) => return Ok(ObjectiveBreakdown::failure()),
            Err(e) => return Err(e),
        };
        let pred = models::predict(&model, fold.val.features().view())?;
        let bundle = metric_bundle(fold.val.label(), &pred, fold.val.sensitive())?;
        let k = bundle.per_feature.len().max(1) as f64;
        let mut undefined = 0;
        let mut magnitude = |v: Option<f64>| match v {
            Some(v) => v.abs(),
            None => {
                undefined += 1;
                1.0
            }
        };
        let abs_eod = bundle.per_feature.iter().map(|f| magnitude(f.eod)).sum::<f64>() / k;
        let abs_aod = bundle.per_feature.iter().map(|f| magnitude(f.aod)).sum::<f64>() / k;
        let w = self.weights;
        Ok(ObjectiveBreakdown {
            score: w.w_perf * (bundle.f1 + bundle.accuracy) - w.w_fair * (abs_eod + abs_aod),
            f1: bundle.f1,
            accuracy: bundle.accuracy,
            abs_eod,
            abs_aod,
            undefined_terms: undefined,
            failed: false,
        })
    }

    /// Objective terms averaged over folds; any failed fold fails the
    /// evaluation.
    pub fn evaluate(&self, alpha: &[f64]) -> Result<ObjectiveBreakdown> {
        let parts = self
            .folds
            .iter()
            .map(|f| self.evaluate_fold(f, alpha))
            .collect::<Result<Vec<_>>>()?;
        if parts.iter().any(|p| p.failed) {
            return Ok(ObjectiveBreakdown::failure());
        }
        let m = parts.len() as f64;
        let mean = |g: fn(&ObjectiveBreakdown) -> f64| parts.iter().map(g).sum::<f64>() / m;
        Ok(ObjectiveBreakdown {
            score: mean(|p| p.score),
            f1: mean(|p| p.f1),
            accuracy: mean(|p| p.accuracy),
            abs_eod: mean(|p| p.abs_eod),
            abs_aod: mean(|p| p.abs_aod),
            undefined_terms: parts.iter().map(|p| p.undefined_terms).sum(),
            failed: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_alpha: Vec<f64>,
    pub best_score: f64,
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub failed_evaluations: usize,
    pub breakdown: ObjectiveBreakdown,
}

/// Searches the mutation fractions that maximize the objective.
pub fn pso_search(ctx: &ObjectiveContext, params: &PsoParams) -> Result<SearchResult> {
    let mut error = None;
    let mut failed = 0;
    let swarm = pso(ctx.dim(), params, |alpha| match ctx.evaluate(alpha) {
        Ok(b) => {
            failed += usize::from(b.failed);
            b.score
        }
        Err(e) => {
            error.get_or_insert(e);
            f64::NEG_INFINITY
        }
    })?;
    if let Some(e) = error {
        return Err(e);
    }
    // evaluation is deterministic, so this reproduces the winning terms
    let breakdown = ctx.evaluate(&swarm.best_alpha)?;
    Ok(SearchResult {
        best_alpha: swarm.best_alpha,
        best_score: swarm.best_score,
        trace: swarm.trace,
        evaluations: swarm.evaluations,
        failed_evaluations: failed,
        breakdown,
    })
}
