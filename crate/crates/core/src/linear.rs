//! L2-regularized logistic regression on sparse count vectors.
//!
//! Each binary problem is solved in the dual by coordinate descent with a
//! Newton step per coordinate (Yu, Huang & Lin 2011), the same method as
//! liblinear's `L2R_LR_DUAL` solver. Multi-class problems use one-vs-rest.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WeaselError};
use crate::scalar::Scalar;
use crate::selection::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    /// Trade-off between data loss and regularization (liblinear's `C`).
    pub reg_tradeoff: f64,
    /// Stopping tolerance on the largest dual projected gradient.
    pub tolerance: f64,
    /// Value of the implicit constant feature; `<= 0` disables the intercept.
    pub bias: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            reg_tradeoff: 1.0,
            tolerance: 0.1,
            bias: 1.0,
            max_iter: 1000,
            seed: 0,
        }
    }
}

/// One weight row per class; the intercept weight multiplies `bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinearModel<T: Scalar> {
    pub n_features: usize,
    pub bias: T,
    pub weights: Vec<Vec<T>>,
    pub intercepts: Vec<T>,
}

impl<T: Scalar> LinearModel<T> {
    pub fn n_classes(&self) -> usize {
        self.weights.len()
    }

    /// Decision value per class.
    pub fn scores(&self, x: &SparseVector<T>) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.intercepts)
            .map(|(w, &b)| {
                x.iter()
                    .filter(|&(i, _)| i < self.n_features)
                    .map(|(i, v)| w[i] * v)
                    .sum::<T>()
                    + b * self.bias
            })
            .collect()
    }

    /// Index of the highest score, first class on ties.
    pub fn predict(&self, x: &SparseVector<T>) -> usize {
        argmax(&self.scores(x))
    }

    /// Per-class probability estimates: normalized one-vs-rest sigmoids.
    pub fn probabilities(&self, x: &SparseVector<T>) -> Vec<T> {
        let scores = self.scores(x);
        if scores.len() == 2 {
            // the two rows are negations of each other
            let p = sigmoid(scores[0]);
            return vec![p, T::one() - p];
        }
        let raw: Vec<T> = scores.into_iter().map(sigmoid).collect();
        let total: T = raw.iter().copied().sum();
        raw.into_iter().map(|p| p / total).collect()
    }
}

pub(crate) fn argmax<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn sigmoid<T: Scalar>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

/// Trains one-vs-rest models; with two classes a single binary model is
/// trained (class 0 positive) and the second row is its negation.
pub fn train_linear<T: Scalar>(
    vectors: &[SparseVector<T>],
    labels: &[usize],
    n_classes: usize,
    n_features: usize,
    params: &LinearParams,
) -> Result<LinearModel<T>> {
    if vectors.len() != labels.len() {
        return Err(WeaselError::ShapeMismatch {
            expected: vectors.len(),
            found: labels.len(),
        });
    }
    let mut present = vec![false; n_classes];
    for &y in labels {
        if y >= n_classes {
            return Err(WeaselError::Config(format!("label {y} >= {n_classes} classes")));
        }
        present[y] = true;
    }
    let n_present = present.iter().filter(|&&p| p).count();
    if n_present < 2 {
        return Err(WeaselError::InsufficientClasses(n_present));
    }
    if let Some(i) = vectors
        .iter()
        .flat_map(|v| v.indices.iter())
        .find(|&&i| i as usize >= n_features)
    {
        return Err(WeaselError::ShapeMismatch {
            expected: n_features,
            found: *i as usize + 1,
        });
    }

    let bias = T::lit(params.bias.max(0.0));
    let solve = |positive: usize, seed: u64| {
        let y: Vec<T> = labels
            .iter()
            .map(|&l| if l == positive { T::one() } else { -T::one() })
            .collect();
        solve_dual(vectors, &y, n_features, bias, params, seed)
    };

    let mut weights = Vec::with_capacity(n_classes);
    let mut intercepts = Vec::with_capacity(n_classes);
    if n_classes == 2 {
        let (w, b) = solve(0, params.seed);
        weights.push(w.clone());
        intercepts.push(b);
        weights.push(w.into_iter().map(|v| -v).collect());
        intercepts.push(-b);
    } else {
        for class in 0..n_classes {
            let (w, b) = solve(class, params.seed.wrapping_add(class as u64));
            weights.push(w);
            intercepts.push(b);
        }
    }
    Ok(LinearModel {
        n_features,
        bias,
        weights,
        intercepts,
    })
}

/// Dual coordinate descent for
/// `min_w 0.5 |w|^2 + C * sum_i log(1 + exp(-y_i w.x_i))`.
/// Returns `(w, intercept)`.
fn solve_dual<T: Scalar>(
    xs: &[SparseVector<T>],
    y: &[T],
    n_features: usize,
    bias: T,
    params: &LinearParams,
    seed: u64,
) -> (Vec<T>, T) {
    let l = xs.len();
    let c = T::lit(params.reg_tradeoff);
    let eps = T::lit(params.tolerance);
    let max_inner = 100;
    let eta = T::lit(0.1);
    let mut inner_eps = T::lit(1e-2);
    let inner_eps_min = T::lit(1e-8).min(eps);

    let mut w = vec![T::zero(); n_features];
    let mut w_bias = T::zero();
    let bias_sq = bias * bias;

    // alpha[2i] is the dual variable, alpha[2i + 1] = C - alpha[2i]
    let init = (T::lit(1e-3) * c).min(T::lit(1e-8));
    let mut alpha = vec![T::zero(); 2 * l];
    let mut xtx = vec![T::zero(); l];
    for i in 0..l {
        alpha[2 * i] = init;
        alpha[2 * i + 1] = c - init;
        xtx[i] = xs[i].squared_norm() + bias_sq;
        for (j, v) in xs[i].iter() {
            w[j] += y[i] * init * v;
        }
        w_bias += y[i] * init * bias;
    }

    let mut order: Vec<usize> = (0..l).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut iter = 0;
    while iter < params.max_iter {
        order.shuffle(&mut rng);
        let mut newton_iter = 0;
        let mut g_max = T::zero();
        for &i in &order {
            let yi = y[i];
            let a = xtx[i];
            let b = yi * (xs[i].dot(&w) + w_bias * bias);

            let (mut ind1, mut ind2, mut sign) = (2 * i, 2 * i + 1, T::one());
            if T::lit(0.5) * a * (alpha[ind2] - alpha[ind1]) + b < T::zero() {
                ind1 = 2 * i + 1;
                ind2 = 2 * i;
                sign = -T::one();
            }

            let alpha_old = alpha[ind1];
            let mut z = alpha_old;
            if c - z < T::lit(0.5) * c {
                z = T::lit(0.1) * z;
            }
            let mut gp = a * (z - alpha_old) + sign * b + (z / (c - z)).ln();
            g_max = g_max.max(gp.abs());

            let mut inner = 0;
            while inner <= max_inner {
                if gp.abs() < inner_eps {
                    break;
                }
                let gpp = a + c / (c - z) / z;
                let tmpz = z - gp / gpp;
                if tmpz <= T::zero() {
                    z *= eta;
                } else {
                    z = tmpz;
                }
                gp = a * (z - alpha_old) + sign * b + (z / (c - z)).ln();
                newton_iter += 1;
                inner += 1;
            }

            if inner > 0 {
                alpha[ind1] = z;
                alpha[ind2] = c - z;
                let step = sign * (z - alpha_old) * yi;
                for (j, v) in xs[i].iter() {
                    w[j] += step * v;
                }
                w_bias += step * bias;
            }
        }
        iter += 1;
        if g_max < eps {
            break;
        }
        if newton_iter <= l / 10 {
            inner_eps = inner_eps_min.max(T::lit(0.1) * inner_eps);
        }
    }
    if iter >= params.max_iter {
        log::warn!("dual coordinate descent reached {} iterations", params.max_iter);
    }
    (w, w_bias)
}
