use super::{ClassifierError, Dataset, StandardizationStats};

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    /// Strength of the `(λ/2)‖w‖²` penalty; the bias is not penalized.
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop once the gradient's ∞-norm falls below this.
    pub tol: f64,
    /// Weight each class by `n / (2 n_class)`.
    pub balance_classes: bool,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            max_iters: 2000,
            tol: 1e-6,
            balance_classes: false,
        }
    }
}

/// Logistic-regression weights together with the standardization they
/// expect to be applied to raw features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub stats: StandardizationStats,
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// Margin `w·x + b` of an already standardized row.
    fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict_proba(&self, raw: &[f64]) -> Result<f64, ClassifierError> {
        if raw.len() != self.n_features() {
            return Err(ClassifierError::LengthMismatch {
                expected: self.n_features(),
                found: raw.len(),
            });
        }
        Ok(sigmoid(self.margin(&self.stats.apply_row(raw)?)))
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearModel,
    pub iterations: usize,
    pub final_loss: f64,
    /// Whether the gradient tolerance was met.
    pub converged: bool,
    /// Loss after every accepted step, starting with the initial loss.
    pub loss_trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Weighted mean logistic loss plus the L2 penalty, as a function of the
/// parameter vector `[w_0, ..., w_{d-1}, b]`.
pub struct LogisticObjective<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    sample_weights: Vec<f64>,
    lambda: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(x: &'a [Vec<f64>], y: &'a [u8], lambda: f64, balance_classes: bool) -> Self {
        let n = y.len() as f64;
        let positives = y.iter().filter(|&&l| l == 1).count() as f64;
        let sample_weights = y
            .iter()
            .map(|&l| {
                if !balance_classes {
                    return 1.0;
                }
                let class_size = if l == 1 { positives } else { n - positives };
                n / (2.0 * class_size)
            })
            .collect();
        Self {
            x,
            y,
            sample_weights,
            lambda,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len) + 1
    }

    fn margin(params: &[f64], row: &[f64]) -> f64 {
        let (w, b) = params.split_at(params.len() - 1);
        dot(w, row) + b[0]
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        let w = &params[..params.len() - 1];
        0.5 * self.lambda * dot(w, w)
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        let n = self.y.len() as f64;
        let data: f64 = self
            .x
            .iter()
            .zip(self.y)
            .zip(&self.sample_weights)
            .map(|((row, &label), &weight)| {
                let z = Self::margin(params, row);
                weight * (softplus(z) - f64::from(label) * z)
            })
            .sum();
        data / n + self.penalty(params)
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let n = self.y.len() as f64;
        let d = params.len() - 1;
        let mut grad = vec![0.0; params.len()];
        for ((row, &label), &weight) in self.x.iter().zip(self.y).zip(&self.sample_weights) {
            let residual = weight * (sigmoid(Self::margin(params, row)) - f64::from(label));
            for (g, &xj) in grad[..d].iter_mut().zip(row) {
                *g += residual * xj;
            }
            grad[d] += residual;
        }
        for (g, &w) in grad[..d].iter_mut().zip(&params[..d]) {
            *g = *g / n + self.lambda * w;
        }
        grad[d] /= n;
        grad
    }
}

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
const MAX_STEP: f64 = 1e6;

/// Full-batch gradient descent with a backtracking (Armijo) line search on
/// standardized features. The step size starts each iteration at twice the
/// last accepted step.
pub fn train_logreg(
    x: &[Vec<f64>],
    y: &[u8],
    stats: StandardizationStats,
    params: &TrainParams,
) -> Result<TrainOutcome, ClassifierError> {
    if !(params.lambda >= 0.0 && params.lambda.is_finite()) {
        return Err(ClassifierError::Lambda(params.lambda));
    }
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch {
            expected: y.len(),
            found: x.len(),
        });
    }
    if x.is_empty() {
        return Err(ClassifierError::TooFewSamples {
            needed: 1,
            found: 0,
        });
    }
    let d = stats.len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(ClassifierError::LengthMismatch {
                expected: d,
                found: row.len(),
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(ClassifierError::NonFiniteFeature {
                sample: i,
                feature: j,
            });
        }
    }
    if let Some(&bad) = y.iter().find(|&&l| l > 1) {
        return Err(ClassifierError::Label(bad));
    }

    let objective = LogisticObjective::new(x, y, params.lambda, params.balance_classes);
    let mut theta = vec![0.0; d + 1];
    let mut loss = objective.loss(&theta);
    let mut trace = vec![loss];
    let mut step = 1.0f64;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iters {
        let grad = objective.gradient(&theta);
        let grad_inf = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_inf < params.tol {
            converged = true;
            break;
        }
        let grad_sq = dot(&grad, &grad);
        step = (step * 2.0).min(MAX_STEP);
        let accepted = loop {
            let candidate: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let candidate_loss = objective.loss(&candidate);
            if !candidate_loss.is_finite() {
                return Err(ClassifierError::NonFiniteLoss {
                    feature: largest_weight(&candidate),
                });
            }
            if candidate_loss <= loss - ARMIJO_C * step * grad_sq {
                break Some((candidate, candidate_loss));
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((next, next_loss)) = accepted else {
            break;
        };
        theta = next;
        loss = next_loss;
        trace.push(loss);
        iterations += 1;
    }
    if !converged && iterations < params.max_iters {
        // line search stalled; the gradient may still be under tolerance
        let grad = objective.gradient(&theta);
        converged = grad.iter().all(|g| g.abs() < params.tol);
    }

    let bias = theta.pop().expect("bias");
    Ok(TrainOutcome {
        model: LinearModel {
            weights: theta,
            bias,
            lambda: params.lambda,
            stats,
        },
        iterations,
        final_loss: loss,
        converged,
        loss_trace: trace,
    })
}

fn largest_weight(theta: &[f64]) -> usize {
    theta[..theta.len() - 1]
        .iter()
        .enumerate()
        .fold((0, -1.0), |(best, mag), (j, w)| {
            let a = if w.is_finite() {
                w.abs()
            } else {
                f64::INFINITY
            };
            if a > mag {
                (j, a)
            } else {
                (best, mag)
            }
        })
        .0
}

/// Probability of label 1 for every raw (unstandardized) row.
pub fn predict(model: &LinearModel, rows: &[Vec<f64>]) -> Result<Vec<f64>, ClassifierError> {
    rows.iter().map(|r| model.predict_proba(r)).collect()
}

/// Label 1 iff the probability reaches `threshold`.
pub fn classify(probabilities: &[f64], threshold: f64) -> Vec<u8> {
    probabilities
        .iter()
        .map(|&p| u8::from(p >= threshold))
        .collect()
}

impl Dataset {
    /// Fits the standardizer on this set and trains on the standardized rows.
    pub fn train(&self, params: &TrainParams) -> Result<TrainOutcome, ClassifierError> {
        let stats = StandardizationStats::fit(&self.features)?;
        let x = stats.apply(&self.features)?;
        train_logreg(&x, &self.labels, stats, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_stats(d: usize) -> StandardizationStats {
        StandardizationStats {
            means: vec![0.0; d],
            stds: vec![0.0; d],
        }
    }

    #[test]
    fn sigmoid_identities() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
    }

    #[test]
    fn zero_model_predicts_one_half() {
        let model = LinearModel {
            weights: vec![0.0; 3],
            bias: 0.0,
            lambda: 0.0,
            stats: identity_stats(3),
        };
        let p = predict(&model, &[vec![1.0, -4.0, 9.0], vec![0.0; 3]]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        assert!(model.predict_proba(&[1.0]).is_err());
    }

    #[test]
    fn margin_ln3_gives_three_quarters() {
        let model = LinearModel {
            weights: vec![1.0],
            bias: 0.0,
            lambda: 0.0,
            stats: identity_stats(1),
        };
        assert!((model.predict_proba(&[3f64.ln()]).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn classify_threshold_rule() {
        assert_eq!(classify(&[0.5, 0.49, 0.99, 1.0], 0.5), vec![1, 0, 1, 1]);
        assert_eq!(classify(&[0.5, 0.999999, 1.0], 1.0), vec![0, 0, 1]);
    }

    #[test]
    fn heavy_regularization_leaves_only_the_bias() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 20.0 - 1.0]).collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from(i >= 10)).collect();
        let params = TrainParams {
            lambda: 1e6,
            ..TrainParams::default()
        };
        let out = train_logreg(&x, &y, identity_stats(1), &params).unwrap();
        assert!(out.model.weights[0].abs() < 1e-6);
        // only the bias moves, towards the logit of the 30/10 majority
        assert!(out.model.bias > 0.0 && out.model.bias < 3f64.ln());
        let labels = classify(&predict(&out.model, &x).unwrap(), 0.5);
        assert!(labels.iter().all(|&l| l == 1));
    }

    #[test]
    fn rejects_non_finite_features() {
        let x = vec![vec![0.0, 1.0], vec![f64::NAN, f64::INFINITY]];
        match train_logreg(&x, &[0, 1], identity_stats(2), &TrainParams::default()) {
            Err(ClassifierError::NonFiniteFeature {
                sample: 1,
                feature: 0,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_lambda() {
        let x = vec![vec![0.0], vec![1.0]];
        let params = TrainParams {
            lambda: -1.0,
            ..TrainParams::default()
        };
        assert!(matches!(
            train_logreg(&x, &[0, 1], identity_stats(1), &params),
            Err(ClassifierError::Lambda(_))
        ));
    }

    #[test]
    fn class_balancing_weights() {
        let x = vec![vec![0.0]; 4];
        let y = [1, 0, 0, 0];
        let obj = LogisticObjective::new(&x, &y, 0.0, true);
        assert_eq!(
            obj.sample_weights,
            vec![2.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]
        );
    }
}
