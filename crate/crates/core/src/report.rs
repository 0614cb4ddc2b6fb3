//! Machine-readable report documents and the flat CSV sidecar.
//!
//! Every document is a JSON object that starts with `kind`, `tool` and
//! `version`, followed by the payload fields. Output is byte-stable: all
//! collections are ordered vectors and floats use shortest round-trip
//! formatting. Non-finite numbers are written as `null`. The schema lives
//! in `docs/report.schema.json`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::causal::CausalReport;
use crate::error::{Error, Result};
use crate::evaluate::{FaireaBaseline, PairVerdict, RunReport};
use crate::metrics::MetricBundle;

pub const TOOL: &str = "fitness";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    kind: &'a str,
    tool: &'a str,
    version: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Causal analysis of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentifyDocument {
    pub dataset: String,
    pub schema: String,
    pub rows: usize,
    pub dropped_rows: usize,
    pub strata_columns: Vec<String>,
    pub report: CausalReport,
}

/// Fairea baselines for one trained model, with optional verdicts for a
/// mitigated model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaireaDocument {
    pub dataset: String,
    pub model: String,
    pub seed: u64,
    pub test_rows: usize,
    pub original: MetricBundle,
    pub baselines: Vec<FaireaBaseline>,
    pub mitigated: Option<MetricBundle>,
    pub alpha: Option<Vec<f64>>,
    pub verdicts: Vec<PairVerdict>,
}

pub enum Document<'a> {
    Run(&'a RunReport),
    Compare(&'a RunReport),
    Identify(&'a IdentifyDocument),
    Fairea(&'a FaireaDocument),
}

impl Document<'_> {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Run(_) => "run",
            Document::Compare(_) => "compare",
            Document::Identify(_) => "identify",
            Document::Fairea(_) => "fairea",
        }
    }

    pub fn to_json(&self) -> Result<String> {
        fn wrap<T: Serialize>(kind: &str, body: &T) -> Result<String> {
            let mut s = serde_json::to_string_pretty(&Envelope {
                kind,
                tool: TOOL,
                version: VERSION,
                body,
            })?;
            s.push('\n');
            Ok(s)
        }
        match self {
            Document::Run(r) | Document::Compare(r) => wrap(self.kind(), *r),
            Document::Identify(r) => wrap(self.kind(), *r),
            Document::Fairea(r) => wrap(self.kind(), *r),
        }
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let err = |source| Error::Write {
        path: path.to_owned(),
        source,
    };
    let mut f = fs::File::create(path).map_err(err)?;
    f.write_all(bytes).map_err(err)
}

pub fn write_report(doc: &Document<'_>, path: &Path) -> Result<()> {
    write_bytes(path, doc.to_json()?.as_bytes())
}

pub const CSV_HEADER: [&str; 14] = [
    "repeat",
    "seed",
    "method",
    "feature",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "spd",
    "aod",
    "eod",
    "composite_fairness",
    "alpha",
    "error",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per repeat, method and protected feature. Failed repeats get a
/// single row carrying the error message.
pub fn run_csv(report: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for rec in &report.repeats {
        let (index, seed) = (rec.index.to_string(), rec.seed.to_string());
        if let Some(e) = &rec.error {
            let mut row = vec![String::new(); CSV_HEADER.len()];
            row[0] = index;
            row[1] = seed;
            row[13] = e.clone();
            w.write_record(&row)?;
            continue;
        }
        for res in &rec.results {
            let alpha = match (&rec.fitness, res.method) {
                (Some(f), crate::evaluate::Method::Fitness) => {
                    f.alpha.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
                }
                _ => String::new(),
            };
            for ff in &res.metrics.per_feature {
                w.write_record([
                    index.clone(),
                    seed.clone(),
                    res.method.to_string(),
                    ff.feature.clone(),
                    res.metrics.accuracy.to_string(),
                    res.metrics.precision.to_string(),
                    res.metrics.recall.to_string(),
                    res.metrics.f1.to_string(),
                    opt(ff.spd),
                    opt(ff.aod),
                    opt(ff.eod),
                    opt(res.composite_fairness),
                    alpha.clone(),
                    String::new(),
                ])?;
            }
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Experiment(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_run_csv(report: &RunReport, path: &Path) -> Result<()> {
    write_bytes(path, run_csv(report)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_biased, SynthSpec};
    use crate::evaluate::{run_experiment, ExperimentConfig, Method};
    use crate::models::ClassifierKind;

    fn small() -> RunReport {
        let ds = synth_biased(&SynthSpec::new(200, 0.5, 0.8, 0.2), 2).unwrap();
        let config = ExperimentConfig {
            repeats: 2,
            methods: vec![Method::Default],
            ..ExperimentConfig::new(ClassifierKind::Lr)
        };
        run_experiment(&ds, &config).unwrap()
    }

    #[test]
    fn envelope_comes_first() {
        let r = small();
        let json = Document::Run(&r).to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["kind"], "run");
        assert_eq!(v["tool"], TOOL);
        assert!(json.starts_with("{\n  \"kind\": \"run\",\n  \"tool\""));
        assert_eq!(v["repeats"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn csv_rows() {
        let r = small();
        let text = run_csv(&r).unwrap();
        assert_eq!(text.lines().count(), 1 + 2);
        assert!(text.starts_with("repeat,seed,method,feature,"));
    }

    #[test]
    fn non_finite_becomes_null() {
        let mut r = small();
        r.aggregates[0].accuracy.mean = Some(f64::NEG_INFINITY);
        let json = Document::Run(&r).to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["aggregates"][0]["accuracy"]["mean"].is_null());
    }
}
