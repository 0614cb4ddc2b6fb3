use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::fairea::{
    classify_tradeoff, fairea_baseline, FairMetric, FaireaBaseline, FaireaOptions, PerfMetric, Region,
};
use super::mwu::{mann_whitney_u, MannWhitney};
use super::reweigh::reweigh;
use super::roc::roc_postprocess;
use crate::causal::identify_bias;
use crate::data::{encode, split, Dataset, EncodeOptions, EncodedDataset};
use crate::decorrelate::{mutate, MutationPlan, MutationStrategy};
use crate::error::{Error, Result};
use crate::metrics::{metric_bundle, Fairness, MetricBundle, Performance};
use crate::models::{self, ClassifierKind, ClassifierSpec, TrainedModel};
use crate::optimize::{pso_search, ObjectiveContext, ObjectiveOptions, ObjectiveWeights, PsoParams};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Default,
    Fitness,
    Rew,
    Roc,
}

impl Method {
    pub const ALL: [Self; 4] = [Self::Default, Self::Fitness, Self::Rew, Self::Roc];
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "default" | "none" => Ok(Self::Default),
            "fitness" => Ok(Self::Fitness),
            "rew" | "reweigh" | "reweighing" => Ok(Self::Rew),
            "roc" => Ok(Self::Roc),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Default => "default",
            Self::Fitness => "fitness",
            Self::Rew => "rew",
            Self::Roc => "roc",
        })
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Default, Method::Fitness]
}

fn default_repeats() -> usize {
    50
}

fn default_test_fraction() -> f64 {
    0.3
}

fn default_theta() -> f64 {
    0.1
}

fn default_fairea_repeats() -> usize {
    10
}

fn default_validation_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ClassifierKind,
    /// The default model is always trained, since every other method is
    /// compared against it.
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub weights: ObjectiveWeights,
    /// Swarm settings; the seed field is replaced per repeat.
    #[serde(default)]
    pub pso: PsoParams,
    #[serde(default)]
    pub strategy: MutationStrategy,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    #[serde(default)]
    pub folds: Option<usize>,
    #[serde(default = "default_theta")]
    pub roc_theta: f64,
    #[serde(default)]
    pub seed: u64,
    /// Classify each FITNESS result against the Fairea baseline.
    #[serde(default)]
    pub fairea: bool,
    #[serde(default = "default_fairea_repeats")]
    pub fairea_repeats: usize,
}

impl ExperimentConfig {
    pub fn new(model: ClassifierKind) -> Self {
        Self {
            model,
            methods: default_methods(),
            repeats: default_repeats(),
            test_fraction: default_test_fraction(),
            weights: ObjectiveWeights::default(),
            pso: PsoParams::default(),
            strategy: MutationStrategy::default(),
            lambda: 0.0,
            validation_fraction: default_validation_fraction(),
            folds: None,
            roc_theta: default_theta(),
            seed: 0,
            fairea: false,
            fairea_repeats: default_fairea_repeats(),
        }
    }

    /// Requested methods in canonical order, default first.
    pub fn method_list(&self) -> Vec<Method> {
        Method::ALL
            .into_iter()
            .filter(|m| *m == Method::Default || self.methods.contains(m))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test fraction must lie in (0, 1), got {}", self.test_fraction));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!(
                "validation fraction must lie in (0, 1), got {}",
                self.validation_fraction
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("smoothing must be >= 0, got {}", self.lambda));
        }
        if !(self.roc_theta > 0.0 && self.roc_theta <= 0.5) {
            return bad(format!("ROC theta must lie in (0, 0.5], got {}", self.roc_theta));
        }
        if self.fairea && self.fairea_repeats == 0 {
            return bad("Fairea repeats must be >= 1".into());
        }
        ObjectiveWeights::new(self.weights.w_perf, self.weights.w_fair)?;
        self.pso.validate()?;
        ClassifierSpec::new(self.model, 0).validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub metrics: MetricBundle,
    pub composite_fairness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessDetail {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub failed_evaluations: usize,
    pub n_mutated: Vec<usize>,
    pub acd_before: Vec<f64>,
    pub acd_after: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub performance_metric: PerfMetric,
    pub fairness_metric: FairMetric,
    pub region: Region,
    pub fairness: f64,
    pub performance: f64,
    pub baseline_performance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub index: usize,
    pub seed: u64,
    pub error: Option<String>,
    pub results: Vec<MethodResult>,
    pub fitness: Option<FitnessDetail>,
    pub fairea: Option<Vec<PairVerdict>>,
}

impl RepeatRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn result(&self, method: Method) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }
}

/// Mean of a metric over successful repeats; undefined values are
/// skipped and counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanValue {
    pub mean: Option<f64>,
    pub defined: usize,
}

impl MeanValue {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut sum = 0.0;
        let mut defined = 0;
        for v in values.into_iter().flatten() {
            sum += v;
            defined += 1;
        }
        Self {
            mean: (defined > 0).then(|| sum / defined as f64),
            defined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub repeats: usize,
    pub accuracy: MeanValue,
    pub precision: MeanValue,
    pub recall: MeanValue,
    pub f1: MeanValue,
    pub spd: MeanValue,
    pub aod: MeanValue,
    pub eod: MeanValue,
    pub abs_spd: MeanValue,
    pub abs_aod: MeanValue,
    pub abs_eod: MeanValue,
    pub composite_fairness: MeanValue,
}

impl Aggregate {
    pub fn from_records(method: Method, records: &[RepeatRecord]) -> Self {
        let rs: Vec<&MethodResult> = records
            .iter()
            .filter(|r| r.ok())
            .filter_map(|r| r.result(method))
            .collect();
        let m = |g: fn(&MethodResult) -> Option<f64>| MeanValue::of(rs.iter().map(|r| g(r)));
        Self {
            method,
            repeats: rs.len(),
            accuracy: m(|r| Some(r.metrics.accuracy)),
            precision: m(|r| Some(r.metrics.precision)),
            recall: m(|r| Some(r.metrics.recall)),
            f1: m(|r| Some(r.metrics.f1)),
            spd: m(|r| r.metrics.spd),
            aod: m(|r| r.metrics.aod),
            eod: m(|r| r.metrics.eod),
            abs_spd: m(|r| r.metrics.spd.map(f64::abs)),
            abs_aod: m(|r| r.metrics.aod.map(f64::abs)),
            abs_eod: m(|r| r.metrics.eod.map(f64::abs)),
            composite_fairness: m(|r| r.composite_fairness),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceTest {
    pub u: f64,
    pub p: f64,
    pub exact: bool,
    pub significant: bool,
    /// Repeats contributing to each sample.
    pub samples: usize,
}

impl SignificanceTest {
    fn from(r: MannWhitney, samples: usize) -> Self {
        Self {
            u: r.u,
            p: r.p,
            exact: r.exact,
            significant: r.p < 0.05,
            samples,
        }
    }
}

/// Default model versus one method, across repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub method: Method,
    pub composite_fairness: Option<SignificanceTest>,
    pub accuracy: Option<SignificanceTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBeatRate {
    pub performance_metric: PerfMetric,
    pub fairness_metric: FairMetric,
    pub beats: usize,
    pub cases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCount {
    pub region: Region,
    pub count: usize,
}

/// Fairea outcome counts at two granularities: every (repeat, metric
/// pair) case, and per trained model, where a model beats the baseline
/// when a strict majority of its metric pairs do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaireaSummary {
    pub regions: Vec<RegionCount>,
    pub pairs: Vec<PairBeatRate>,
    pub case_beats: usize,
    pub cases: usize,
    pub model_beats: usize,
    pub models: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub schema: String,
    pub rows: usize,
    pub dropped_rows: usize,
    pub features: usize,
    pub protected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: DatasetInfo,
    pub config: ExperimentConfig,
    pub repeats: Vec<RepeatRecord>,
    pub failed_repeats: usize,
    pub aggregates: Vec<Aggregate>,
    pub significance: Vec<Significance>,
    pub fairea: Option<FaireaSummary>,
}

/// Encodes `dataset` (protected features included as model inputs) and
/// runs the repeated comparison.
pub fn run_experiment(dataset: &Dataset, config: &ExperimentConfig) -> Result<RunReport> {
    let encoded = encode(
        dataset,
        EncodeOptions {
            include_sensitive: true,
        },
    )?;
    let info = DatasetInfo {
        name: dataset.source_name().to_owned(),
        schema: dataset.schema().name.clone(),
        rows: dataset.len(),
        dropped_rows: dataset.dropped(),
        features: encoded.feature_names().len(),
        protected: encoded.sensitive().iter().map(|s| s.name.clone()).collect(),
    };
    run_encoded(&encoded, info, config)
}

/// Seed of repeat `index` under the run seed.
pub fn repeat_seed(seed: u64, index: usize) -> u64 {
    seed::derive(seed, "repeat", index as u64)
}

/// The train/test partition used by a repeat.
pub fn repeat_split(data: &EncodedDataset, test_fraction: f64, rseed: u64) -> Result<crate::data::SplitPair> {
    split(data, test_fraction, seed::derive(rseed, "split", 0))
}

/// The model spec used by a repeat.
pub fn repeat_spec(kind: ClassifierKind, rseed: u64) -> ClassifierSpec {
    ClassifierSpec::new(kind, seed::derive(rseed, "model", 0))
}

pub fn run_encoded(data: &EncodedDataset, info: DatasetInfo, config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    if data.sensitive().is_empty() {
        return Err(Error::InvalidArgument("no protected features to evaluate".into()));
    }
    let methods = config.method_list();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let records = run_repeats(data, config, &methods, workers);
    let failed = records.iter().filter(|r| !r.ok()).count();
    if failed * 5 > config.repeats {
        let first = records.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        return Err(Error::Experiment(format!(
            "{failed} of {} repeats failed; first error: {first}",
            config.repeats
        )));
    }

    let aggregates = methods.iter().map(|&m| Aggregate::from_records(m, &records)).collect();
    let significance = methods
        .iter()
        .filter(|&&m| m != Method::Default)
        .map(|&m| significance(&records, m))
        .collect::<Result<Vec<_>>>()?;
    let fairea = (config.fairea && methods.contains(&Method::Fitness)).then(|| fairea_summary(&records));

    Ok(RunReport {
        dataset: info,
        config: config.clone(),
        repeats: records,
        failed_repeats: failed,
        aggregates,
        significance,
        fairea,
    })
}

fn record(data: &EncodedDataset, config: &ExperimentConfig, methods: &[Method], r: usize) -> RepeatRecord {
    let rseed = repeat_seed(config.seed, r);
    match run_repeat(data, config, methods, rseed) {
        Ok((results, fitness, fairea)) => RepeatRecord {
            index: r,
            seed: rseed,
            error: None,
            results,
            fitness,
            fairea,
        },
        Err(e) => RepeatRecord {
            index: r,
            seed: rseed,
            error: Some(e.to_string()),
            results: Vec::new(),
            fitness: None,
            fairea: None,
        },
    }
}

/// Runs every repeat on up to `workers` threads. Each repeat owns its
/// seed, so the records do not depend on scheduling.
fn run_repeats(
    data: &EncodedDataset,
    config: &ExperimentConfig,
    methods: &[Method],
    workers: usize,
) -> Vec<RepeatRecord> {
    let workers = workers.min(config.repeats);
    if workers <= 1 {
        return (0..config.repeats).map(|r| record(data, config, methods, r)).collect();
    }
    let next = AtomicUsize::new(0);
    let done = Mutex::new(Vec::with_capacity(config.repeats));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let r = next.fetch_add(1, Ordering::Relaxed);
                if r >= config.repeats {
                    break;
                }
                let rec = record(data, config, methods, r);
                done.lock().unwrap().push(rec);
            });
        }
    });
    let mut records = done.into_inner().unwrap();
    records.sort_by_key(|r| r.index);
    records
}

type RepeatOutput = (Vec<MethodResult>, Option<FitnessDetail>, Option<Vec<PairVerdict>>);

fn result(method: Method, y: &[u8], pred: &[u8], test: &EncodedDataset) -> Result<MethodResult> {
    let metrics = metric_bundle(y, pred, test.sensitive())?;
    Ok(MethodResult {
        method,
        composite_fairness: metrics.composite_fairness(),
        metrics,
    })
}

fn run_repeat(
    data: &EncodedDataset,
    config: &ExperimentConfig,
    methods: &[Method],
    rseed: u64,
) -> Result<RepeatOutput> {
    let pair = repeat_split(data, config.test_fraction, rseed)?;
    let (train, test) = (&pair.train, &pair.test);
    let spec = repeat_spec(config.model, rseed);
    let x_test = test.features().view();
    let y_test = test.label();

    let default_model = models::fit(&spec, train, None)?;
    let mut results = Vec::with_capacity(methods.len());
    let mut fitness = None;
    let mut verdicts = None;
    for &method in methods {
        match method {
            Method::Default => {
                let pred = models::predict(&default_model, x_test)?;
                results.push(result(method, y_test, &pred, test)?);
            }
            Method::Fitness => {
                let (model, detail) = apply_fitness(train, &spec, config, rseed)?;
                let pred = models::predict(&model, x_test)?;
                let res = result(method, y_test, &pred, test)?;
                if config.fairea {
                    let options = FaireaOptions {
                        repeats: config.fairea_repeats,
                        seed: seed::derive(rseed, "fairea", 0),
                        ..FaireaOptions::default()
                    };
                    let baselines = fairea_baseline(&default_model, test, &options)?;
                    verdicts = Some(fairea_verdicts(&baselines, &res.metrics)?);
                }
                results.push(res);
                fitness = Some(detail);
            }
            Method::Rew => {
                let w = reweigh(train, 0)?;
                let model = models::fit(&spec, train, Some(&w))?;
                let pred = models::predict(&model, x_test)?;
                results.push(result(method, y_test, &pred, test)?);
            }
            Method::Roc => {
                let scores = models::predict_scores(&default_model, x_test)?;
                let pred = roc_postprocess(&scores, &test.sensitive()[0].values, config.roc_theta)?;
                results.push(result(method, y_test, &pred, test)?);
            }
        }
    }
    Ok((results, fitness, verdicts))
}

/// Searches mutation fractions on `train`, applies them and fits the
/// model on the mutated data. `rseed` is the repeat seed.
pub fn apply_fitness(
    train: &EncodedDataset,
    spec: &ClassifierSpec,
    config: &ExperimentConfig,
    rseed: u64,
) -> Result<(TrainedModel, FitnessDetail)> {
    let options = ObjectiveOptions {
        strategy: config.strategy,
        weights: config.weights,
        lambda: config.lambda,
        validation_fraction: config.validation_fraction,
        folds: config.folds,
    };
    let ctx = ObjectiveContext::new(train, spec.clone(), &options, seed::derive(rseed, "objective", 0))?;
    let pso = PsoParams {
        seed: seed::derive(rseed, "pso", 0),
        ..config.pso
    };
    let search = pso_search(&ctx, &pso)?;
    let report = identify_bias(train, config.lambda)?;
    let plan = MutationPlan {
        alphas: search.best_alpha.clone(),
        strategy: config.strategy,
        seed: seed::derive(rseed, "mutate", 0),
    };
    let outcome = mutate(train, &plan, &report)?;
    let model = models::fit(spec, &outcome.mutated_train, None)?;
    Ok((
        model,
        FitnessDetail {
            alpha: search.best_alpha,
            objective: search.best_score,
            trace: search.trace,
            evaluations: search.evaluations,
            failed_evaluations: search.failed_evaluations,
            n_mutated: outcome.n_mutated,
            acd_before: outcome.acd_before,
            acd_after: outcome.acd_after,
        },
    ))
}

/// Classifies a mitigated model's metrics against every baseline. The
/// fairness values are those of the first protected feature.
pub fn fairea_verdicts(baselines: &[FaireaBaseline], point: &MetricBundle) -> Result<Vec<PairVerdict>> {
    let perf = Performance {
        accuracy: point.accuracy,
        precision: point.precision,
        recall: point.recall,
        f1: point.f1,
    };
    let fair = Fairness {
        spd: point.spd,
        aod: point.aod,
        eod: point.eod,
    };
    let mut out = Vec::new();
    for b in baselines {
        let Some(f) = b.fairness_metric.of(&fair) else { continue };
        let v = classify_tradeoff((f, b.performance_metric.of(&perf)), b)?;
        out.push(PairVerdict {
            performance_metric: b.performance_metric,
            fairness_metric: b.fairness_metric,
            region: v.region,
            fairness: v.fairness,
            performance: v.performance,
            baseline_performance: v.baseline_performance,
        });
    }
    Ok(out)
}

fn significance(records: &[RepeatRecord], method: Method) -> Result<Significance> {
    let ok: Vec<&RepeatRecord> = records.iter().filter(|r| r.ok()).collect();
    let paired = |g: fn(&MethodResult) -> Option<f64>| -> Result<Option<SignificanceTest>> {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for r in &ok {
            if let (Some(d), Some(m)) = (r.result(Method::Default).and_then(g), r.result(method).and_then(g)) {
                a.push(d);
                b.push(m);
            }
        }
        if a.is_empty() {
            return Ok(None);
        }
        Ok(Some(SignificanceTest::from(mann_whitney_u(&a, &b)?, a.len())))
    };
    Ok(Significance {
        method,
        composite_fairness: paired(|r| r.composite_fairness)?,
        accuracy: paired(|r| Some(r.metrics.accuracy))?,
    })
}

fn fairea_summary(records: &[RepeatRecord]) -> FaireaSummary {
    let verdicts: Vec<&Vec<PairVerdict>> = records
        .iter()
        .filter(|r| r.ok())
        .filter_map(|r| r.fairea.as_ref())
        .collect();
    let all = || verdicts.iter().flat_map(|v| v.iter());
    let regions = Region::ALL
        .into_iter()
        .map(|region| RegionCount {
            region,
            count: all().filter(|v| v.region == region).count(),
        })
        .collect();
    let mut pairs = Vec::new();
    for pm in PerfMetric::ALL {
        for fm in FairMetric::ALL {
            let cases: Vec<_> = all()
                .filter(|v| v.performance_metric == pm && v.fairness_metric == fm)
                .collect();
            pairs.push(PairBeatRate {
                performance_metric: pm,
                fairness_metric: fm,
                beats: cases.iter().filter(|v| v.region.beats_baseline()).count(),
                cases: cases.len(),
            });
        }
    }
    FaireaSummary {
        regions,
        pairs,
        case_beats: all().filter(|v| v.region.beats_baseline()).count(),
        cases: all().count(),
        model_beats: verdicts
            .iter()
            .filter(|v| 2 * v.iter().filter(|p| p.region.beats_baseline()).count() > v.len())
            .count(),
        models: verdicts.len(),
    }
}
