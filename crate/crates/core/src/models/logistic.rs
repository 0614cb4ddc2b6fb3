use ndarray::{s, Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

/// L2-regularized logistic regression fitted by damped Newton steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// Penalty `l2/2 * |coef|^2`; the intercept is not penalized.
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm falls below `tol` times its initial value.
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1.0,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LinearModel {
    pub coef: Array1<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn margins(&self, x: ArrayView2<f64>) -> Array1<f64> {
        x.dot(&self.coef) + self.intercept
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Weighted log-loss plus penalty, and its gradient `(d coef, d intercept)`.
pub(crate) fn loss_and_grad(
    x: ArrayView2<f64>,
    y: &[u8],
    w: &[f64],
    l2: f64,
    model: &LinearModel,
) -> (f64, Array1<f64>, f64) {
    let z = model.margins(x);
    let mut loss = 0.5 * l2 * model.coef.dot(&model.coef);
    let mut residual = Array1::<f64>::zeros(y.len());
    for i in 0..y.len() {
        let yi = f64::from(y[i]);
        loss += w[i] * (softplus(z[i]) - yi * z[i]);
        residual[i] = w[i] * (sigmoid(z[i]) - yi);
    }
    let grad = x.t().dot(&residual) + l2 * &model.coef;
    (loss, grad, residual.sum())
}

fn loss_only(x: ArrayView2<f64>, y: &[u8], w: &[f64], l2: f64, model: &LinearModel) -> f64 {
    let z = model.margins(x);
    let mut loss = 0.5 * l2 * model.coef.dot(&model.coef);
    for i in 0..y.len() {
        loss += w[i] * (softplus(z[i]) - f64::from(y[i]) * z[i]);
    }
    loss
}

/// In-place Cholesky solve of `a · x = b` for a symmetric positive
/// definite `a`. Returns `None` if `a` is not positive definite.
fn cholesky_solve(mut a: Array2<f64>, mut b: Array1<f64>) -> Option<Array1<f64>> {
    let n = b.len();
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= a[[j, k]] * a[[j, k]];
        }
        if diag.is_nan() || diag <= 0.0 {
            return None;
        }
        let l = diag.sqrt();
        a[[j, j]] = l;
        for i in j + 1..n {
            let mut v = a[[i, j]];
            for k in 0..j {
                v -= a[[i, k]] * a[[j, k]];
            }
            a[[i, j]] = v / l;
        }
    }
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= a[[i, k]] * b[k];
        }
        b[i] = v / a[[i, i]];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in i + 1..n {
            v -= a[[k, i]] * b[k];
        }
        b[i] = v / a[[i, i]];
    }
    Some(b)
}

/// Newton's method on the penalized log-loss with Armijo backtracking.
/// The objective is strictly convex in the coefficients, so the solution
/// is unique up to the stopping tolerance.
pub(crate) fn fit(x: ArrayView2<f64>, y: &[u8], w: &[f64], params: &LogisticParams) -> LinearModel {
    let (n, d) = x.dim();
    let mut model = LinearModel {
        coef: Array1::zeros(d),
        intercept: 0.0,
    };
    // design matrix with a trailing intercept column
    let mut xa = Array2::<f64>::ones((n, d + 1));
    xa.slice_mut(s![.., ..d]).assign(&x);

    let (mut loss, mut g, mut gb) = loss_and_grad(x, y, w, params.l2, &model);
    let norm = |g: &Array1<f64>, gb: f64| (g.dot(g) + gb * gb).sqrt();
    let g0 = norm(&g, gb).max(1e-300);
    let mut scaled = Array2::<f64>::zeros((n, d + 1));

    for _ in 0..params.max_iter {
        let gnorm = norm(&g, gb);
        if gnorm <= params.tol * g0 {
            break;
        }
        let z = model.margins(x);
        for (i, (mut row, src)) in scaled.rows_mut().into_iter().zip(xa.rows()).enumerate() {
            let p = sigmoid(z[i]);
            let c = w[i] * p * (1.0 - p);
            row.zip_mut_with(&src, |r, &v| *r = c * v);
        }
        let mut h = xa.t().dot(&scaled);
        for j in 0..d {
            h[[j, j]] += params.l2;
        }
        // keeps the intercept direction well posed when every p saturates
        h[[d, d]] += 1e-12 * (1.0 + h[[d, d]]);
        let mut rhs = Array1::zeros(d + 1);
        rhs.slice_mut(s![..d]).assign(&g);
        rhs[d] = gb;
        let Some(dir) = cholesky_solve(h, rhs.clone()) else {
            break;
        };
        let slope = rhs.dot(&dir);
        if slope.is_nan() || slope <= 0.0 {
            break;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let candidate = LinearModel {
                coef: &model.coef - &(t * &dir.slice(s![..d])),
                intercept: model.intercept - t * dir[d],
            };
            let l = loss_only(x, y, w, params.l2, &candidate);
            if l <= loss - 1e-4 * t * slope {
                accepted = Some(candidate);
                break;
            }
            t *= 0.5;
        }
        let Some(next) = accepted else { break };
        model = next;
        (loss, g, gb) = loss_and_grad(x, y, w, params.l2, &model);
    }
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = crate::seed::rng(4);
        for _ in 0..20 {
            let (n, d) = (15, 4);
            let x = Array2::from_shape_fn((n, d), |_| rng.random::<f64>());
            let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
            let model = LinearModel {
                coef: Array1::from_shape_fn(d, |_| rng.random_range(-2.0..2.0)),
                intercept: rng.random_range(-1.0..1.0),
            };
            let (_, g, gb) = loss_and_grad(x.view(), &y, &w, 1.0, &model);
            let h = 1e-6;
            for j in 0..=d {
                let shifted = |delta: f64| {
                    let mut m = model.clone();
                    if j < d {
                        m.coef[j] += delta;
                    } else {
                        m.intercept += delta;
                    }
                    loss_only(x.view(), &y, &w, 1.0, &m)
                };
                let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
                let analytic = if j < d { g[j] } else { gb };
                let rel = (numeric - analytic).abs() / analytic.abs().max(1e-3);
                assert!(rel <= 1e-4, "component {j}: {numeric} vs {analytic}");
            }
        }
    }

    #[test]
    fn sigmoid_is_stable_and_symmetric() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn converges_to_stationary_point() {
        let x = array![[0.0, 0.2], [0.1, 0.9], [0.8, 0.3], [0.9, 1.0], [0.5, 0.5], [0.3, 0.7]];
        let y = [0, 0, 1, 1, 1, 0];
        let w = [1.0; 6];
        let params = LogisticParams {
            tol: 1e-12,
            max_iter: 100,
            ..Default::default()
        };
        let m = fit(x.view(), &y, &w, &params);
        let (_, g, gb) = loss_and_grad(x.view(), &y, &w, 1.0, &m);
        assert!(g.iter().all(|v| v.abs() < 1e-8) && gb.abs() < 1e-8);
    }
}
