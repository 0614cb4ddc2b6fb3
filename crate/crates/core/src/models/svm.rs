use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::logistic::LinearModel;

/// Linear SVM: `l2/2 |w|^2 + weighted mean hinge`, full-batch sub-gradient
/// descent with step `1 / (l2 * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub l2: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { l2: 1.0, epochs: 500 }
    }
}

pub(crate) fn fit(x: ArrayView2<f64>, y: &[u8], w: &[f64], params: &SvmParams) -> LinearModel {
    let (n, d) = x.dim();
    let total: f64 = w.iter().sum();
    let signs: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let mut model = LinearModel {
        coef: Array1::zeros(d),
        intercept: 0.0,
    };
    let mut coeffs = Array1::<f64>::zeros(n);
    for t in 1..=params.epochs {
        let step = 1.0 / (params.l2 * t as f64);
        let margins = model.margins(x);
        let mut bias_grad = 0.0;
        for i in 0..n {
            coeffs[i] = if signs[i] * margins[i] < 1.0 {
                w[i] * signs[i] / total
            } else {
                0.0
            };
            bias_grad -= coeffs[i];
        }
        let grad = params.l2 * &model.coef - x.t().dot(&coeffs);
        model.coef = &model.coef - step * &grad;
        model.intercept -= step * bias_grad;
    }
    model
}
