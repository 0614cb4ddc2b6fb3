//! The α-parameterized instance mutation that drives ACD toward zero.
//!
//! For each protected feature, donors are the training rows that carry the
//! inferred privileged value and the favorable label. A seeded uniform
//! sample of `min(round(α·n), donors)` of them is mutated toward the
//! unprivileged group.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::causal::{acd, build_strata, CausalReport};
use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationStrategy {
    /// Move donors to the unprivileged value, keeping their label.
    #[default]
    FlipSensitive,
    /// Set donors' label to unfavorable, keeping their sensitive value.
    FlipLabel,
    FlipBoth,
}

impl FromStr for MutationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flip-sensitive" | "sensitive" => Ok(Self::FlipSensitive),
            "flip-label" | "label" => Ok(Self::FlipLabel),
            "flip-both" | "both" => Ok(Self::FlipBoth),
            other => Err(Error::InvalidArgument(format!("unknown mutation strategy `{other}`"))),
        }
    }
}

impl fmt::Display for MutationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FlipSensitive => "flip-sensitive",
            Self::FlipLabel => "flip-label",
            Self::FlipBoth => "flip-both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationPlan {
    /// One mutation fraction per protected feature, each in `[0, 1]`.
    pub alphas: Vec<f64>,
    pub strategy: MutationStrategy,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct MutationOutcome {
    pub mutated_train: EncodedDataset,
    pub n_mutated: Vec<usize>,
    /// `ACD(y=1; 1, 0)` per feature before and after mutation.
    pub acd_before: Vec<f64>,
    pub acd_after: Vec<f64>,
    pub delta_acd: Vec<f64>,
}

/// Applies `plan` to `train`. `report` must have been computed on `train`;
/// the residual ACD is recomputed with the report's smoothing.
pub fn mutate(train: &EncodedDataset, plan: &MutationPlan, report: &CausalReport) -> Result<MutationOutcome> {
    let k = train.sensitive().len();
    if plan.alphas.len() != k || report.features.len() != k || report.n != train.n() {
        return Err(Error::InvalidArgument(format!(
            "plan has {} fractions and report covers {} features over {} rows; dataset has {k} protected features over {} rows",
            plan.alphas.len(),
            report.features.len(),
            report.n,
            train.n()
        )));
    }
    for (effect, col) in report.features.iter().zip(train.sensitive()) {
        if effect.feature != col.name {
            return Err(Error::InvalidArgument(format!(
                "report feature `{}` does not match dataset feature `{}`",
                effect.feature, col.name
            )));
        }
    }
    if let Some(a) = plan.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidArgument(format!("mutation fraction {a} outside [0, 1]")));
    }

    let n = train.n();
    let mut data = train.clone();
    let mut n_mutated = Vec::with_capacity(k);
    let mut acd_before = Vec::with_capacity(k);
    let mut acd_after = Vec::with_capacity(k);

    for (i, (&alpha, effect)) in plan.alphas.iter().zip(&report.features).enumerate() {
        acd_before.push(effect.acd);
        let privileged = effect.privileged_value_inferred;
        let donors: Vec<usize> = (0..n)
            .filter(|&r| data.sensitive[i].values[r] == privileged && data.label[r] == 1)
            .collect();
        let count = ((alpha * n as f64).round() as usize).min(donors.len());
        let mut rng = seed::rng(seed::derive(plan.seed, "mutate", i as u64));
        let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, donors.len(), count)
            .into_iter()
            .map(|j| donors[j])
            .collect();
        picked.sort_unstable();

        let flip_sensitive = matches!(
            plan.strategy,
            MutationStrategy::FlipSensitive | MutationStrategy::FlipBoth
        );
        let flip_label = matches!(plan.strategy, MutationStrategy::FlipLabel | MutationStrategy::FlipBoth);
        let target = 1 - privileged;
        let mirror = data.sensitive[i].feature_index;
        for &r in &picked {
            if flip_sensitive {
                data.sensitive[i].values[r] = target;
                if let Some(j) = mirror {
                    data.features[[r, j]] = f64::from(target);
                }
            }
            if flip_label {
                data.label[r] = 0;
            }
        }
        n_mutated.push(count);
    }

    for i in 0..k {
        let table = build_strata(&data, i, report.lambda)?;
        acd_after.push(acd(&table, 1, 1, 0)?);
    }
    let delta_acd = acd_after.iter().zip(&acd_before).map(|(a, b)| a - b).collect();

    Ok(MutationOutcome {
        mutated_train: data,
        n_mutated,
        acd_before,
        acd_after,
        delta_acd,
    })
}

/// ACD left after mutation, per protected feature.
pub fn residual_acd(outcome: &MutationOutcome) -> &[f64] {
    &outcome.acd_after
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::fixtures::from_counts;
    use crate::causal::identify_bias;

    fn hundred() -> EncodedDataset {
        from_counts(&[(1, 0, 1, 40), (1, 0, 0, 10), (0, 0, 1, 10), (0, 0, 0, 40)])
    }

    fn plan(alpha: f64, strategy: MutationStrategy) -> MutationPlan {
        MutationPlan {
            alphas: vec![alpha],
            strategy,
            seed: 5,
        }
    }

    #[test]
    fn zero_alpha_is_identity() {
        let d = hundred();
        let r = identify_bias(&d, 0.0).unwrap();
        let out = mutate(&d, &plan(0.0, MutationStrategy::FlipSensitive), &r).unwrap();
        assert_eq!(out.mutated_train, d);
        assert_eq!(out.delta_acd, vec![0.0]);
        assert_eq!(residual_acd(&out), &out.acd_before[..]);
    }

    #[test]
    fn worked_hundred_row_example() {
        let d = hundred();
        let r = identify_bias(&d, 0.0).unwrap();
        assert!((r.features[0].acd - 0.6).abs() < 1e-15);
        let out = mutate(&d, &plan(0.15, MutationStrategy::FlipSensitive), &r).unwrap();
        assert_eq!(out.n_mutated, vec![15]);
        let expected = 25.0 / 35.0 - 25.0 / 65.0;
        assert!((out.acd_after[0] - expected).abs() < 1e-15);
        assert!((out.delta_acd[0] - (expected - 0.6)).abs() < 1e-15);
    }

    #[test]
    fn count_is_capped_at_donor_group() {
        let d = hundred();
        let r = identify_bias(&d, 0.0).unwrap();
        let out = mutate(&d, &plan(0.9, MutationStrategy::FlipSensitive), &r).unwrap();
        assert_eq!(out.n_mutated, vec![40]);
    }

    #[test]
    fn flip_label_preserves_sensitive_marginal() {
        let d = hundred();
        let r = identify_bias(&d, 0.0).unwrap();
        let out = mutate(&d, &plan(0.2, MutationStrategy::FlipLabel), &r).unwrap();
        assert_eq!(out.mutated_train.sensitive()[0].values, d.sensitive()[0].values);
        assert_eq!(out.mutated_train.label().iter().filter(|&&y| y == 1).count(), 30);
    }

    #[test]
    fn flip_both_changes_both() {
        let d = hundred();
        let r = identify_bias(&d, 0.0).unwrap();
        let out = mutate(&d, &plan(0.1, MutationStrategy::FlipBoth), &r).unwrap();
        let m = &out.mutated_train;
        let moved = (0..100)
            .filter(|&i| d.sensitive()[0].values[i] == 1 && m.sensitive()[0].values[i] == 0)
            .count();
        assert_eq!(moved, 10);
        assert!((0..100).all(|i| m.sensitive()[0].values[i] == d.sensitive()[0].values[i] || m.label()[i] == 0));
    }

    #[test]
    fn mismatched_report_is_rejected() {
        let d = hundred();
        let other = from_counts(&[(1, 0, 1, 3), (0, 0, 0, 3)]);
        let r = identify_bias(&other, 0.0).unwrap();
        assert!(mutate(&d, &plan(0.1, MutationStrategy::FlipSensitive), &r).is_err());
    }

    #[test]
    fn strategy_tags() {
        assert_eq!(
            "flip-label".parse::<MutationStrategy>().unwrap(),
            MutationStrategy::FlipLabel
        );
        assert!("flip-everything".parse::<MutationStrategy>().is_err());
    }
}
