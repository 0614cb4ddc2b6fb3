use fitness::causal::{ace, build_strata, feature_effect, identify_bias};
use fitness::data::{split, EncodedDataset, SensitiveColumn};
use fitness::decorrelate::{mutate, MutationPlan, MutationStrategy};
use fitness::evaluate::{cell_weights, mann_whitney_u};
use fitness::metrics::{confusion_by_group, metric_bundle, performance};
use ndarray::Array2;
use proptest::prelude::*;

fn encoded(rows: &[(u8, u32, u8)]) -> EncodedDataset {
    let n = rows.len();
    let strata = rows.iter().map(|r| r.1).max().map_or(1, |m| m as usize + 1);
    let t: Vec<u8> = rows.iter().map(|r| r.0).collect();
    let features = Array2::from_shape_fn(
        (n, 2),
        |(i, j)| if j == 0 { f64::from(t[i]) } else { i as f64 / n as f64 },
    );
    EncodedDataset::from_parts(
        features,
        vec!["t".into(), "idx".into()],
        rows.iter().map(|r| r.2).collect(),
        vec![SensitiveColumn {
            name: "t".into(),
            values: t,
            feature_index: Some(0),
        }],
        rows.iter().map(|r| r.1).collect(),
        strata,
    )
    .unwrap()
}

fn triples(max_strata: u32, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<(u8, u32, u8)>> {
    prop::collection::vec((0u8..2, 0..max_strata, 0u8..2), len)
}

/// Both groups present with both labels, so every effect is defined.
fn covered(rows: &[(u8, u32, u8)]) -> bool {
    (0..2).all(|t| (0..2).all(|y| rows.iter().any(|r| r.0 == t && r.2 == y)))
}

fn binary(len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, len)
}

fn labelled() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<u8>)> {
    (1usize..80).prop_flat_map(|n| (binary(n), binary(n), binary(n)))
}

/// Backdoor estimate recomputed from raw rows.
fn ace_oracle(rows: &[(u8, u32, u8)], y: u8, t: u8, lambda: f64) -> f64 {
    let n = rows.len() as f64;
    let mut zs: Vec<u32> = rows.iter().map(|r| r.1).collect();
    zs.sort_unstable();
    zs.dedup();
    let in_t: Vec<_> = rows.iter().filter(|r| r.0 == t).collect();
    let marginal = in_t.iter().filter(|r| r.2 == y).count() as f64 / in_t.len() as f64;
    zs.iter()
        .map(|&z| {
            let pz = rows.iter().filter(|r| r.1 == z).count() as f64 / n;
            let cell: Vec<_> = in_t.iter().filter(|r| r.1 == z).collect();
            let denom = cell.len() as f64 + 2.0 * lambda;
            let cond = if denom == 0.0 {
                marginal
            } else {
                (cell.iter().filter(|r| r.2 == y).count() as f64 + lambda) / denom
            };
            cond * pz
        })
        .sum()
}

proptest! {
    #[test]
    fn swapping_groups_negates_fairness((y, p, g) in labelled()) {
        let col = |v: Vec<u8>| vec![SensitiveColumn { name: "a".into(), values: v, feature_index: None }];
        let a = metric_bundle(&y, &p, &col(g.clone())).unwrap();
        let b = metric_bundle(&y, &p, &col(g.iter().map(|v| 1 - v).collect())).unwrap();
        for (u, v) in [(a.spd, b.spd), (a.aod, b.aod), (a.eod, b.eod)] {
            match (u, v) {
                (Some(u), Some(v)) => prop_assert!((u + v).abs() < 1e-12),
                (None, None) => {}
                other => prop_assert!(false, "definedness differs: {other:?}"),
            }
        }
        prop_assert_eq!(a.accuracy, b.accuracy);
    }

    #[test]
    fn row_order_is_irrelevant((y, p, g) in labelled(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..y.len()).collect();
        order.shuffle(&mut fitness::seed::rng(seed));
        let pick = |v: &[u8]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let a = confusion_by_group(&y, &p, &g).unwrap();
        let b = confusion_by_group(&pick(&y), &pick(&p), &pick(&g)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn confusion_matches_recount((y, p, g) in labelled()) {
        let c = confusion_by_group(&y, &p, &g).unwrap();
        for grp in 0..2u8 {
            let count = |ty: u8, py: u8| (0..y.len()).filter(|&i| g[i] == grp && y[i] == ty && p[i] == py).count();
            let k = &c.groups[grp as usize];
            prop_assert_eq!((k.tp, k.fp, k.tn, k.fn_), (count(1, 1), count(0, 1), count(0, 0), count(1, 0)));
        }
        prop_assert_eq!(c.pooled.n(), y.len());
        let rate = |grp: u8| {
            let idx: Vec<usize> = (0..y.len()).filter(|&i| g[i] == grp).collect();
            (!idx.is_empty()).then(|| idx.iter().filter(|&&i| p[i] == 1).count() as f64 / idx.len() as f64)
        };
        let spd = fitness::metrics::fairness(&c).spd;
        match (rate(0), rate(1)) {
            (Some(u), Some(v)) => prop_assert!((spd.unwrap() - (u - v)).abs() < 1e-12),
            _ => prop_assert!(spd.is_none()),
        }
    }

    #[test]
    fn f1_between_precision_and_recall((y, p, g) in labelled()) {
        let perf = performance(&confusion_by_group(&y, &p, &g).unwrap()).unwrap();
        let lo = perf.precision.min(perf.recall);
        let hi = perf.precision.max(perf.recall);
        prop_assert!(perf.f1 >= lo - 1e-12 && perf.f1 <= hi + 1e-12);
        prop_assert!((0.0..=1.0).contains(&perf.accuracy));
    }

    #[test]
    fn ace_matches_oracle(rows in triples(8, 2..200), lambda in prop_oneof![Just(0.0), 0.0..2.0]) {
        prop_assume!(covered(&rows));
        let table = build_strata(&encoded(&rows), 0, lambda).unwrap();
        for t in 0..2 {
            for y in 0..2 {
                let got = ace(&table, y, t).unwrap();
                let want = ace_oracle(&rows, y, t, lambda);
                prop_assert!((got - want).abs() < 1e-12, "t={} y={}: {} vs {}", t, y, got, want);
            }
        }
    }

    #[test]
    fn ace_complements_to_one(rows in triples(8, 2..200), lambda in 0.0..2.0f64) {
        prop_assume!(covered(&rows));
        let table = build_strata(&encoded(&rows), 0, lambda).unwrap();
        for t in 0..2 {
            let sum = ace(&table, 0, t).unwrap() + ace(&table, 1, t).unwrap();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn acd_flips_with_group_coding(rows in triples(6, 2..150)) {
        prop_assume!(covered(&rows));
        let flipped: Vec<_> = rows.iter().map(|&(t, z, y)| (1 - t, z, y)).collect();
        let a = feature_effect(&encoded(&rows), 0, 1.0).unwrap();
        let b = feature_effect(&encoded(&flipped), 0, 1.0).unwrap();
        prop_assert!((a.acd + b.acd).abs() < 1e-12);
    }

    #[test]
    fn mutation_count_grows_with_alpha(rows in triples(4, 10..150), lo in 0.0..1.0f64, hi in 0.0..1.0f64, seed in any::<u64>()) {
        prop_assume!(covered(&rows));
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let train = encoded(&rows);
        let report = identify_bias(&train, 1.0).unwrap();
        let run = |alpha: f64| {
            let plan = MutationPlan { alphas: vec![alpha], strategy: MutationStrategy::FlipSensitive, seed };
            mutate(&train, &plan, &report).unwrap()
        };
        prop_assert!(run(lo).n_mutated[0] <= run(hi).n_mutated[0]);
        let zero = run(0.0);
        prop_assert_eq!(zero.n_mutated[0], 0);
        prop_assert_eq!(&zero.mutated_train, &train);
    }

    #[test]
    fn strategies_touch_only_their_column(rows in triples(4, 10..150), alpha in 0.0..1.0f64, seed in any::<u64>()) {
        prop_assume!(covered(&rows));
        let train = encoded(&rows);
        let report = identify_bias(&train, 1.0).unwrap();
        let run = |strategy| {
            let plan = MutationPlan { alphas: vec![alpha], strategy, seed };
            mutate(&train, &plan, &report).unwrap()
        };
        let s = run(MutationStrategy::FlipSensitive);
        prop_assert_eq!(s.mutated_train.label(), train.label());
        let changed = s.mutated_train.sensitive()[0].values.iter().zip(&train.sensitive()[0].values).filter(|(a, b)| a != b).count();
        prop_assert_eq!(changed, s.n_mutated[0]);
        let l = run(MutationStrategy::FlipLabel);
        prop_assert_eq!(&l.mutated_train.sensitive()[0].values, &train.sensitive()[0].values);
        let flipped = l.mutated_train.label().iter().zip(train.label()).filter(|(a, b)| a != b).count();
        prop_assert_eq!(flipped, l.n_mutated[0]);
    }

    #[test]
    fn reweighing_makes_group_and_label_independent((g, y) in (4usize..120).prop_flat_map(|n| (binary(n), binary(n)))) {
        let Ok(w) = cell_weights(&g, &y) else {
            return Ok(());
        };
        let total = g.len() as f64;
        let mass = |a: Option<u8>, l: Option<u8>| {
            g.iter().zip(&y)
                .filter(|&(&ga, &yl)| a.is_none_or(|a| a == ga) && l.is_none_or(|l| l == yl))
                .map(|(&ga, &yl)| w[ga as usize][yl as usize])
                .sum::<f64>() / total
        };
        prop_assert!((mass(None, None) - 1.0).abs() < 1e-9);
        for a in 0..2 {
            for l in 0..2 {
                let joint = mass(Some(a), Some(l));
                prop_assert!((joint - mass(Some(a), None) * mass(None, Some(l))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_mwu_matches_enumeration(
        a in prop::collection::vec(0u8..6, 1..=8),
        b in prop::collection::vec(0u8..6, 1..=8),
    ) {
        let (fa, fb): (Vec<f64>, Vec<f64>) = (a.iter().map(|&v| f64::from(v)).collect(), b.iter().map(|&v| f64::from(v)).collect());
        let r = mann_whitney_u(&fa, &fb).unwrap();
        prop_assert!(r.exact);
        let (n1, n2) = (fa.len(), fb.len());
        prop_assert_eq!(r.u + r.u_other, (n1 * n2) as f64);

        let u_of = |x: &[f64], y: &[f64]| -> f64 {
            x.iter().map(|&p| y.iter().map(|&q| if p > q { 1.0 } else if p == q { 0.5 } else { 0.0 }).sum::<f64>()).sum()
        };
        prop_assert_eq!(r.u, u_of(&fa, &fb));

        let pooled: Vec<f64> = fa.iter().chain(&fb).copied().collect();
        let n = pooled.len();
        let centre = (n1 * n2) as f64 / 2.0;
        let observed = (r.u - centre).abs();
        let (mut hits, mut total) = (0u32, 0u32);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != n1 {
                continue;
            }
            let (x, y): (Vec<f64>, Vec<f64>) = {
                let mut x = Vec::new();
                let mut y = Vec::new();
                for (i, &v) in pooled.iter().enumerate() {
                    if mask >> i & 1 == 1 { x.push(v) } else { y.push(v) }
                }
                (x, y)
            };
            total += 1;
            hits += u32::from((u_of(&x, &y) - centre).abs() >= observed - 1e-9);
        }
        prop_assert!((r.p - f64::from(hits) / f64::from(total)).abs() < 1e-12);
    }

    #[test]
    fn split_partitions_rows(n in 2usize..300, frac in 0.05..0.95f64, seed in any::<u64>()) {
        let rows: Vec<_> = (0..n).map(|i| ((i % 2) as u8, 0, ((i / 2) % 2) as u8)).collect();
        let s = split(&encoded(&rows), frac, seed).unwrap();
        let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(!s.train_indices.is_empty() && !s.test_indices.is_empty());
        prop_assert_eq!(s.train.n(), s.train_indices.len());
        let again = split(&encoded(&rows), frac, seed).unwrap();
        prop_assert_eq!(again.test_indices, s.test_indices);
    }
}
