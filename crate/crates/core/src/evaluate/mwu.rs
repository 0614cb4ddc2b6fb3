use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of group assignments enumerated for an exact p-value.
/// Covers every pair of samples with at most 8 values each.
pub const EXACT_BUDGET: u64 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// Statistic for the first sample.
    pub u: f64,
    /// Statistic for the second sample; `u + u_other = n1·n2`.
    pub u_other: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Doubled midranks, so ties stay integral.
fn doubled_ranks(values: &[f64]) -> (Vec<i64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0i64; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share rank (i + 1 + j + 1) / 2
        let r = (i + j + 2) as i64;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut c: u64 = 1;
    for i in 0..k {
        c = c.saturating_mul(n - i) / (i + 1);
        if c > EXACT_BUDGET * 1000 {
            return u64::MAX;
        }
    }
    c
}

/// Two-sided Mann-Whitney U test. The p-value is exact (full enumeration
/// of group assignments over the observed midranks) when there are at
/// most [`EXACT_BUDGET`] assignments, otherwise the tie- and
/// continuity-corrected normal approximation.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("both samples must be non-empty".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("samples contain NaN".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = doubled_ranks(&pooled);
    let r1: i64 = ranks[..n1].iter().sum();
    // 2·U1 = 2·R1 − n1(n1 + 1)
    let two_u = r1 - (n1 * (n1 + 1)) as i64;
    let nn = (n1 * n2) as i64;
    let u = two_u as f64 / 2.0;
    let u_other = nn as f64 - u;
    // distances from the mean, doubled: |2U − n1·n2|
    let observed = (two_u - nn).abs();

    let exact = binomial(n as u64, n1 as u64) <= EXACT_BUDGET;
    let p = if exact {
        let (mut hits, mut total) = (0u64, 0u64);
        let mut pick = Vec::with_capacity(n1);
        enumerate(&ranks, n1, 0, 0, &mut pick, &mut |sum| {
            total += 1;
            let d = (sum - (n1 * (n1 + 1)) as i64 - nn).abs();
            hits += u64::from(d >= observed);
        });
        hits as f64 / total as f64
    } else {
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1)) as f64;
        let var = (n1 * n2) as f64 / 12.0 * ((n + 1) as f64 - tie_term);
        if var <= 0.0 {
            1.0
        } else {
            let z = ((observed as f64 / 2.0 - 0.5).max(0.0)) / var.sqrt();
            let normal = Normal::standard();
            (2.0 * normal.sf(z)).min(1.0)
        }
    };
    Ok(MannWhitney { u, u_other, p, exact })
}

/// Calls `visit` with the doubled rank sum of every `k`-subset.
fn enumerate(ranks: &[i64], k: usize, start: usize, sum: i64, pick: &mut Vec<usize>, visit: &mut dyn FnMut(i64)) {
    if pick.len() == k {
        visit(sum);
        return;
    }
    let need = k - pick.len();
    for i in start..=ranks.len() - need {
        pick.push(i);
        enumerate(ranks, k, i + 1, sum + ranks[i], pick, visit);
        pick.pop();
    }
}
