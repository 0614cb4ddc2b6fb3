//! Performance and group-fairness metrics.
//!
//! Fairness differences are unprivileged minus privileged and are reported
//! signed. A rate over an empty population is undefined and surfaces as
//! `None` (serialized `null`), never as 0.

use serde::{Deserialize, Serialize};

use crate::data::SensitiveColumn;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn n(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn add(&mut self, truth: u8, pred: u8) {
        match (truth, pred) {
            (1, 1) => self.tp += 1,
            (0, 1) => self.fp += 1,
            (0, 0) => self.tn += 1,
            _ => self.fn_ += 1,
        }
    }

    fn ratio(num: usize, den: usize) -> Option<f64> {
        (den > 0).then(|| num as f64 / den as f64)
    }

    pub fn positive_rate(&self) -> Option<f64> {
        Self::ratio(self.tp + self.fp, self.n())
    }

    pub fn tpr(&self) -> Option<f64> {
        Self::ratio(self.tp, self.tp + self.fn_)
    }

    pub fn fpr(&self) -> Option<f64> {
        Self::ratio(self.fp, self.fp + self.tn)
    }
}

/// Confusion counts split by sensitive group: index 0 unprivileged,
/// index 1 privileged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupConfusion {
    pub groups: [Confusion; 2],
    pub pooled: Confusion,
}

pub fn confusion_by_group(y_true: &[u8], y_pred: &[u8], group: &[u8]) -> Result<GroupConfusion> {
    if y_true.len() != y_pred.len() || y_true.len() != group.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} truths, {} predictions, {} group entries",
            y_true.len(),
            y_pred.len(),
            group.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("no rows to score".into()));
    }
    let mut c = GroupConfusion::default();
    for ((&t, &p), &g) in y_true.iter().zip(y_pred).zip(group) {
        if t > 1 || p > 1 || g > 1 {
            return Err(Error::InvalidArgument("labels and groups must be 0 or 1".into()));
        }
        c.groups[g as usize].add(t, p);
        c.pooled.add(t, p);
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Pooled performance. Precision, recall and F1 are 0 when their
/// denominators vanish.
pub fn performance(conf: &GroupConfusion) -> Result<Performance> {
    let c = &conf.pooled;
    if c.n() == 0 {
        return Err(Error::InvalidArgument("no rows to score".into()));
    }
    let accuracy = (c.tp + c.tn) as f64 / c.n() as f64;
    let precision = Confusion::ratio(c.tp, c.tp + c.fp).unwrap_or(0.0);
    let recall = Confusion::ratio(c.tp, c.tp + c.fn_).unwrap_or(0.0);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Performance {
        accuracy,
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fairness {
    pub spd: Option<f64>,
    pub aod: Option<f64>,
    pub eod: Option<f64>,
}

fn diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? - b?)
}

/// SPD = P(Ŷ=1|A=0) − P(Ŷ=1|A=1); EOD = TPR₀ − TPR₁;
/// AOD = ½[(FPR₀ − FPR₁) + (TPR₀ − TPR₁)].
pub fn fairness(conf: &GroupConfusion) -> Fairness {
    let [u, p] = &conf.groups;
    let eod = diff(u.tpr(), p.tpr());
    let fpr_gap = diff(u.fpr(), p.fpr());
    Fairness {
        spd: diff(u.positive_rate(), p.positive_rate()),
        aod: eod.zip(fpr_gap).map(|(e, f)| 0.5 * (f + e)),
        eod,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFairness {
    pub feature: String,
    pub spd: Option<f64>,
    pub aod: Option<f64>,
    pub eod: Option<f64>,
}

/// Metrics of one model on one evaluation split. The top-level fairness
/// values belong to the first protected feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub spd: Option<f64>,
    pub aod: Option<f64>,
    pub eod: Option<f64>,
    pub per_feature: Vec<FeatureFairness>,
}

impl MetricBundle {
    /// Mean of |SPD|, |AOD| and |EOD| over every defined value of every
    /// protected feature.
    pub fn composite_fairness(&self) -> Option<f64> {
        let values: Vec<f64> = self
            .per_feature
            .iter()
            .flat_map(|f| [f.spd, f.aod, f.eod])
            .flatten()
            .map(f64::abs)
            .collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }
}

pub fn metric_bundle(y_true: &[u8], y_pred: &[u8], sensitive: &[SensitiveColumn]) -> Result<MetricBundle> {
    let pooled_groups = sensitive
        .first()
        .map(|s| s.values.clone())
        .unwrap_or_else(|| vec![0; y_true.len()]);
    let perf = performance(&confusion_by_group(y_true, y_pred, &pooled_groups)?)?;
    let per_feature = sensitive
        .iter()
        .map(|s| {
            let f = fairness(&confusion_by_group(y_true, y_pred, &s.values)?);
            Ok(FeatureFairness {
                feature: s.name.clone(),
                spd: f.spd,
                aod: f.aod,
                eod: f.eod,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let first = per_feature.first();
    Ok(MetricBundle {
        accuracy: perf.accuracy,
        precision: perf.precision,
        recall: perf.recall,
        f1: perf.f1,
        spd: first.and_then(|f| f.spd),
        aod: first.and_then(|f| f.aod),
        eod: first.and_then(|f| f.eod),
        per_feature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conf(tp: usize, fp: usize, tn: usize, fn_: usize) -> Confusion {
        Confusion { tp, fp, tn, fn_ }
    }

    #[test]
    fn two_row_counts() {
        let c = confusion_by_group(&[1, 0], &[1, 0], &[1, 0]).unwrap();
        assert_eq!(c.groups[1], conf(1, 0, 0, 0));
        assert_eq!(c.groups[0], conf(0, 0, 1, 0));
    }

    #[test]
    fn all_wrong() {
        let c = confusion_by_group(&[1, 0, 1, 0], &[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap();
        for g in c.groups {
            assert_eq!((g.tp, g.tn), (0, 0));
        }
    }

    #[test]
    fn worked_performance() {
        let c = GroupConfusion {
            groups: [Confusion::default(); 2],
            pooled: conf(40, 10, 45, 5),
        };
        let p = performance(&c).unwrap();
        assert_eq!(p.precision, 0.8);
        assert_eq!(p.recall, 40.0 / 45.0);
        assert_eq!(p.accuracy, 0.85);
        assert!((p.f1 - 0.842_105_263_157_894_7).abs() < 1e-15);
    }

    #[test]
    fn degenerate_performance() {
        let c = GroupConfusion {
            groups: [Confusion::default(); 2],
            pooled: conf(0, 0, 7, 0),
        };
        let p = performance(&c).unwrap();
        assert_eq!((p.precision, p.recall, p.f1, p.accuracy), (0.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn worked_spd() {
        // group 0: 4 of 10 predicted favorable; group 1: 7 of 10
        let c = GroupConfusion {
            groups: [conf(2, 2, 4, 2), conf(4, 3, 2, 1)],
            pooled: Confusion::default(),
        };
        assert!((fairness(&c).spd.unwrap() - (-0.3)).abs() < 1e-15);
    }

    #[test]
    fn worked_eod_aod() {
        // TPR0 = 0.5, TPR1 = 0.9, FPR0 = 0.2, FPR1 = 0.4
        let c = GroupConfusion {
            groups: [conf(5, 2, 8, 5), conf(9, 4, 6, 1)],
            pooled: Confusion::default(),
        };
        let f = fairness(&c);
        assert!((f.eod.unwrap() + 0.4).abs() < 1e-15);
        assert!((f.aod.unwrap() + 0.3).abs() < 1e-15);
    }

    #[test]
    fn identical_groups_are_fair() {
        let g = conf(3, 2, 4, 1);
        let f = fairness(&GroupConfusion {
            groups: [g, g],
            pooled: Confusion::default(),
        });
        assert_eq!((f.spd, f.aod, f.eod), (Some(0.0), Some(0.0), Some(0.0)));
    }

    #[test]
    fn undefined_rates_are_marked() {
        // privileged group has no positive truths
        let c = confusion_by_group(&[1, 0, 0], &[1, 0, 1], &[0, 0, 1]).unwrap();
        let f = fairness(&c);
        assert!(f.spd.is_some());
        assert_eq!((f.eod, f.aod), (None, None));
    }

    #[test]
    fn length_mismatch() {
        assert!(confusion_by_group(&[1], &[1, 0], &[1]).is_err());
    }
}
