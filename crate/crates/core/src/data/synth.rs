use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::dataset::{Cell, Dataset};
use crate::data::schema::{ColumnKind, ColumnSpec, PrivilegedRule, Schema, SensitiveSpec};
use crate::error::{Error, Result};
use crate::seed;

/// Parameters of the biased synthetic fixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub p_priv: f64,
    pub p_fav_given_priv: f64,
    pub p_fav_given_unpriv: f64,
    #[serde(default = "default_noise")]
    pub n_noise_features: usize,
}

fn default_noise() -> usize {
    3
}

impl SynthSpec {
    pub fn new(n: usize, p_priv: f64, p_fav_given_priv: f64, p_fav_given_unpriv: f64) -> Self {
        Self {
            n,
            p_priv,
            p_fav_given_priv,
            p_fav_given_unpriv,
            n_noise_features: default_noise(),
        }
    }

    /// Parses `n=2000,p_priv=0.5,pf1=0.8,pf0=0.2[,noise=3]`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = SynthSpec::new(0, f64::NAN, f64::NAN, f64::NAN);
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("synthetic spec item `{part}` lacks `=`")))?;
            let bad = || Error::InvalidArgument(format!("bad value in `{part}`"));
            match k.trim() {
                "n" => spec.n = v.trim().parse().map_err(|_| bad())?,
                "p_priv" => spec.p_priv = v.trim().parse().map_err(|_| bad())?,
                "pf1" | "p_fav_given_priv" => spec.p_fav_given_priv = v.trim().parse().map_err(|_| bad())?,
                "pf0" | "p_fav_given_unpriv" => spec.p_fav_given_unpriv = v.trim().parse().map_err(|_| bad())?,
                "noise" | "n_noise_features" => spec.n_noise_features = v.trim().parse().map_err(|_| bad())?,
                other => return Err(Error::InvalidArgument(format!("unknown synthetic key `{other}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_priv", self.p_priv),
            ("pf1", self.p_fav_given_priv),
            ("pf0", self.p_fav_given_unpriv),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} must be a probability, got {p}")));
            }
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        Ok(())
    }

    pub fn schema(&self) -> Schema {
        let mut columns = vec![ColumnSpec {
            name: "group".into(),
            kind: ColumnKind::Categorical,
        }];
        columns.extend((0..self.n_noise_features).map(|k| ColumnSpec {
            name: format!("x{k}"),
            kind: ColumnKind::Numeric,
        }));
        columns.push(ColumnSpec {
            name: "label".into(),
            kind: ColumnKind::Categorical,
        });
        Schema {
            name: "synthetic".into(),
            columns,
            label_column: "label".into(),
            favorable: vec!["1".into()],
            unfavorable: vec!["0".into()],
            sensitive: vec![SensitiveSpec {
                column: "group".into(),
                privileged: PrivilegedRule::OneOf(vec!["privileged".into()]),
            }],
            strata_columns: Vec::new(),
            delimiter: b',',
            has_header: true,
            missing_tokens: vec![String::new()],
        }
    }
}

/// Draws `A ~ Bernoulli(p_priv)`, `Y ~ Bernoulli(p_fav | A)` and independent
/// uniform noise columns for each row.
pub fn synth_biased(spec: &SynthSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = seed::rng(seed);
    let rows = (0..spec.n)
        .map(|_| {
            let privileged = rng.random::<f64>() < spec.p_priv;
            let p_fav = if privileged {
                spec.p_fav_given_priv
            } else {
                spec.p_fav_given_unpriv
            };
            let favorable = rng.random::<f64>() < p_fav;
            let mut row = Vec::with_capacity(spec.n_noise_features + 2);
            row.push(Cell::Text(
                if privileged { "privileged" } else { "unprivileged" }.into(),
            ));
            row.extend((0..spec.n_noise_features).map(|_| Cell::Number(rng.random::<f64>())));
            row.push(Cell::Text(if favorable { "1" } else { "0" }.into()));
            row
        })
        .collect();
    Dataset::new(spec.schema(), rows, "synthetic")
}
