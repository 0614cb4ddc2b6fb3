//! Baseline mitigations, the Fairea trade-off baseline, significance
//! testing and the repeated-run experiment harness.

mod experiment;
mod fairea;
mod mwu;
mod reweigh;
mod roc;

pub use experiment::{
    apply_fitness, fairea_verdicts, repeat_seed, repeat_spec, repeat_split, run_encoded, run_experiment, Aggregate,
    DatasetInfo, ExperimentConfig, FaireaSummary, FitnessDetail, MeanValue, Method, MethodResult, PairBeatRate,
    PairVerdict, RegionCount, RepeatRecord, RunReport, Significance, SignificanceTest,
};
pub use fairea::{
    classify_tradeoff, fairea_baseline, fairea_from_predictions, interpolate, Anchor, FairMetric, FaireaBaseline,
    FaireaOptions, PerfMetric, Region, TradeoffVerdict,
};
pub use mwu::{mann_whitney_u, MannWhitney, EXACT_BUDGET};
pub use reweigh::{cell_weights, reweigh};
pub use roc::roc_postprocess;
