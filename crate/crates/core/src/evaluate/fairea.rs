use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::metrics::{confusion_by_group, fairness, performance, Fairness, Performance};
use crate::models::{predict, TrainedModel};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerfMetric {
    Accuracy,
    Precision,
    Recall,
    F1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FairMetric {
    Spd,
    Aod,
    Eod,
}

impl PerfMetric {
    pub const ALL: [Self; 4] = [Self::Accuracy, Self::Precision, Self::Recall, Self::F1];

    pub fn of(self, p: &Performance) -> f64 {
        match self {
            Self::Accuracy => p.accuracy,
            Self::Precision => p.precision,
            Self::Recall => p.recall,
            Self::F1 => p.f1,
        }
    }
}

impl FairMetric {
    pub const ALL: [Self; 3] = [Self::Spd, Self::Aod, Self::Eod];

    /// Magnitude of the metric, if defined.
    pub fn of(self, f: &Fairness) -> Option<f64> {
        match self {
            Self::Spd => f.spd,
            Self::Aod => f.aod,
            Self::Eod => f.eod,
        }
        .map(f64::abs)
    }
}

impl fmt::Display for PerfMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Accuracy => "accuracy",
            Self::Precision => "precision",
            Self::Recall => "recall",
            Self::F1 => "f1",
        })
    }
}

impl fmt::Display for FairMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Spd => "spd",
            Self::Aod => "aod",
            Self::Eod => "eod",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub degree: f64,
    /// Mean |fairness| over the repeats at this degree.
    pub fairness: f64,
    pub performance: f64,
}

/// Trade-off polyline for one (performance, fairness) metric pair,
/// anchors ordered by mutation degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaireaBaseline {
    pub performance_metric: PerfMetric,
    pub fairness_metric: FairMetric,
    pub anchors: Vec<Anchor>,
    pub repeats: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaireaOptions {
    pub degrees: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    /// Protected feature whose groups define the fairness metrics.
    pub feature: usize,
}

impl Default for FaireaOptions {
    fn default() -> Self {
        Self {
            degrees: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
            repeats: 10,
            seed: 0,
            feature: 0,
        }
    }
}

/// Builds the baselines for all twelve metric pairs from the model's
/// predictions on `test`.
pub fn fairea_baseline(
    model: &TrainedModel,
    test: &EncodedDataset,
    options: &FaireaOptions,
) -> Result<Vec<FaireaBaseline>> {
    if test.n() == 0 {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let group = &test
        .sensitive()
        .get(options.feature)
        .ok_or_else(|| Error::InvalidArgument(format!("no protected feature at index {}", options.feature)))?
        .values;
    let pred = predict(model, test.features().view())?;
    fairea_from_predictions(test.label(), &pred, group, options)
}

/// As [`fairea_baseline`], from precomputed predictions. At degree `d` a
/// uniformly chosen `round(d·n)` predictions are replaced by the majority
/// test label (favorable on a tie). Pairs whose fairness metric is
/// undefined at some degree are left out.
pub fn fairea_from_predictions(
    y_true: &[u8],
    y_pred: &[u8],
    group: &[u8],
    options: &FaireaOptions,
) -> Result<Vec<FaireaBaseline>> {
    let degrees = &options.degrees;
    if options.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be >= 1".into()));
    }
    if degrees.iter().any(|d| !(0.0..=1.0).contains(d)) || degrees.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "degrees must be increasing fractions in [0, 1]".into(),
        ));
    }
    if degrees.first() != Some(&0.0) || degrees.last() != Some(&1.0) {
        return Err(Error::InvalidArgument("degrees must include 0 and 1".into()));
    }
    let n = y_true.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let favorable = y_true.iter().filter(|&&y| y == 1).count();
    let majority = u8::from(2 * favorable >= n);

    // points[d] holds one (performance, fairness) sample per repeat
    let mut points: Vec<Vec<(Performance, Fairness)>> = Vec::with_capacity(degrees.len());
    for (di, &d) in degrees.iter().enumerate() {
        let reps = if d == 0.0 { 1 } else { options.repeats };
        let count = ((d * n as f64).round() as usize).min(n);
        let mut samples = Vec::with_capacity(reps);
        for r in 0..reps {
            let mut mutated = y_pred.to_vec();
            let mut rng = seed::rng(seed::derive(options.seed, "fairea", (di * 1_000_000 + r) as u64));
            for i in rand::seq::index::sample(&mut rng, n, count) {
                mutated[i] = majority;
            }
            let c = confusion_by_group(y_true, &mutated, group)?;
            samples.push((performance(&c)?, fairness(&c)));
        }
        points.push(samples);
    }

    let mut out = Vec::new();
    for pm in PerfMetric::ALL {
        'pair: for fm in FairMetric::ALL {
            let mut anchors = Vec::with_capacity(degrees.len());
            for (&degree, samples) in degrees.iter().zip(&points) {
                let mut fsum = 0.0;
                let mut psum = 0.0;
                for (p, f) in samples {
                    let Some(v) = fm.of(f) else { continue 'pair };
                    fsum += v;
                    psum += pm.of(p);
                }
                let k = samples.len() as f64;
                anchors.push(Anchor {
                    degree,
                    fairness: fsum / k,
                    performance: psum / k,
                });
            }
            out.push(FaireaBaseline {
                performance_metric: pm,
                fairness_metric: fm,
                anchors,
                repeats: options.repeats,
                seed: options.seed,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    WinWin,
    Good,
    Poor,
    Inverted,
    LoseLose,
}

impl Region {
    pub const ALL: [Self; 5] = [Self::WinWin, Self::Good, Self::Poor, Self::Inverted, Self::LoseLose];

    /// Whether the point beats the baseline (win-win or good).
    pub fn beats_baseline(self) -> bool {
        matches!(self, Self::WinWin | Self::Good)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::WinWin => "win-win",
            Self::Good => "good",
            Self::Poor => "poor",
            Self::Inverted => "inverted",
            Self::LoseLose => "lose-lose",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffVerdict {
    pub region: Region,
    pub fairness: f64,
    pub performance: f64,
    /// Baseline performance at the point's fairness level.
    pub baseline_performance: f64,
}

/// Baseline performance at fairness level `f`, interpolating linearly
/// along the first degree-ordered segment that spans `f`. Outside the
/// polyline the nearest anchor's performance is used.
pub fn interpolate(anchors: &[Anchor], f: f64) -> Result<f64> {
    if anchors.len() < 2 {
        return Err(Error::InvalidArgument("baseline needs at least two anchors".into()));
    }
    for w in anchors.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (lo, hi) = if a.fairness <= b.fairness {
            (a.fairness, b.fairness)
        } else {
            (b.fairness, a.fairness)
        };
        if (lo..=hi).contains(&f) {
            if a.fairness == b.fairness {
                return Ok(a.performance);
            }
            let t = (f - a.fairness) / (b.fairness - a.fairness);
            return Ok(a.performance + t * (b.performance - a.performance));
        }
    }
    let nearest = anchors
        .iter()
        .min_by(|a, b| (a.fairness - f).abs().total_cmp(&(b.fairness - f).abs()))
        .expect("non-empty");
    Ok(nearest.performance)
}

/// Places a `(|fairness|, performance)` point relative to the degree-0
/// anchor and the baseline polyline. Ties with the anchor count as no
/// improvement; a tie with the polyline counts as good.
pub fn classify_tradeoff(point: (f64, f64), baseline: &FaireaBaseline) -> Result<TradeoffVerdict> {
    let (f, p) = point;
    if !(f.is_finite() && p.is_finite()) {
        return Err(Error::InvalidArgument("trade-off point must be finite".into()));
    }
    let base = interpolate(&baseline.anchors, f)?;
    let origin = baseline.anchors[0];
    let fair_better = f < origin.fairness;
    let perf_better = p > origin.performance;
    let region = match (fair_better, perf_better) {
        (true, true) => Region::WinWin,
        (false, true) => Region::Inverted,
        (false, false) => Region::LoseLose,
        (true, false) if p >= base => Region::Good,
        (true, false) => Region::Poor,
    };
    Ok(TradeoffVerdict {
        region,
        fairness: f,
        performance: p,
        baseline_performance: base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> FaireaBaseline {
        FaireaBaseline {
            performance_metric: PerfMetric::Accuracy,
            fairness_metric: FairMetric::Spd,
            anchors: vec![
                Anchor {
                    degree: 0.0,
                    fairness: 0.2,
                    performance: 0.8,
                },
                Anchor {
                    degree: 1.0,
                    fairness: 0.0,
                    performance: 0.7,
                },
            ],
            repeats: 1,
            seed: 0,
        }
    }

    #[test]
    fn worked_interpolation() {
        assert!((interpolate(&two_point().anchors, 0.05).unwrap() - 0.725).abs() < 1e-12);
    }

    #[test]
    fn worked_regions() {
        let b = two_point();
        assert_eq!(classify_tradeoff((0.05, 0.78), &b).unwrap().region, Region::Good);
        assert_eq!(classify_tradeoff((0.10, 0.82), &b).unwrap().region, Region::WinWin);
        assert_eq!(classify_tradeoff((0.25, 0.75), &b).unwrap().region, Region::LoseLose);
        assert_eq!(classify_tradeoff((0.25, 0.85), &b).unwrap().region, Region::Inverted);
        assert_eq!(classify_tradeoff((0.05, 0.70), &b).unwrap().region, Region::Poor);
    }

    #[test]
    fn boundary_conventions() {
        let b = two_point();
        // same fairness as the original model: not an improvement
        assert_eq!(classify_tradeoff((0.2, 0.8), &b).unwrap().region, Region::LoseLose);
        // exactly on the polyline
        assert_eq!(classify_tradeoff((0.0, 0.7), &b).unwrap().region, Region::Good);
    }

    #[test]
    fn clamps_outside_polyline() {
        let b = two_point();
        assert_eq!(interpolate(&b.anchors, 0.5).unwrap(), 0.8);
        assert_eq!(interpolate(&b.anchors, -0.1).unwrap(), 0.7);
    }

    #[test]
    fn degree_zero_is_the_model_point() {
        let y_true = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1];
        let y_pred = [1, 0, 0, 1, 1, 0, 1, 0, 0, 1];
        let group = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let pairs = fairea_from_predictions(&y_true, &y_pred, &group, &FaireaOptions::default()).unwrap();
        assert_eq!(pairs.len(), 12);
        let c = confusion_by_group(&y_true, &y_pred, &group).unwrap();
        let (p, f) = (performance(&c).unwrap(), fairness(&c));
        for b in &pairs {
            let a0 = b.anchors[0];
            assert_eq!(a0.performance, b.performance_metric.of(&p));
            assert_eq!(Some(a0.fairness), b.fairness_metric.of(&f));
            let last = b.anchors.last().unwrap();
            if b.fairness_metric == FairMetric::Spd {
                assert_eq!(last.fairness, 0.0);
            }
            if b.performance_metric == PerfMetric::Accuracy {
                assert!((last.performance - 0.6).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let y_true: Vec<u8> = (0..50).map(|i| u8::from(i % 3 == 0)).collect();
        let y_pred: Vec<u8> = (0..50).map(|i| u8::from(i % 4 == 0)).collect();
        let group: Vec<u8> = (0..50).map(|i| u8::from(i % 2 == 0)).collect();
        let o = FaireaOptions {
            seed: 9,
            ..FaireaOptions::default()
        };
        assert_eq!(
            fairea_from_predictions(&y_true, &y_pred, &group, &o).unwrap(),
            fairea_from_predictions(&y_true, &y_pred, &group, &o).unwrap()
        );
    }
}
