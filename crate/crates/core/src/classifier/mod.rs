//! L2-regularized logistic regression over feature vectors, with a
//! stratified split, feature standardization and F1/accuracy reporting.

mod logreg;
mod model_file;
mod standardize;

use std::fmt;
use std::io;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::FeatureVector;

pub use logreg::{
    classify, predict, train_logreg, LinearModel, LogisticObjective, TrainOutcome, TrainParams,
};
pub use model_file::MODEL_HEADER;
pub use standardize::StandardizationStats;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    TrainFraction(f64),
    #[error("class {0} has no samples")]
    EmptyClass(u8),
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("expected {expected} features, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("label {0} is not 0 or 1")]
    Label(u8),
    #[error("no predictions to evaluate")]
    EmptyInput,
    #[error("regularization strength {0} must be finite and non-negative")]
    Lambda(f64),
    #[error("sample {sample}: feature {feature} is not finite")]
    NonFiniteFeature { sample: usize, feature: usize },
    #[error("feature {feature}: mean or standard deviation over the training set is not finite")]
    NonFiniteStatistics { feature: usize },
    #[error("loss became non-finite (feature {feature} has the largest weight magnitude)")]
    NonFiniteLoss { feature: usize },
    #[error("model file line {line}: {reason}")]
    ModelFormat { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Labelled feature rows of equal width.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub labels: Vec<u8>,
    pub features: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn from_feature_vectors(rows: Vec<FeatureVector>) -> Result<Self, ClassifierError> {
        let width = rows.first().map_or(0, |r| r.values.len());
        let mut ds = Dataset::default();
        for r in rows {
            if r.values.len() != width {
                return Err(ClassifierError::LengthMismatch {
                    expected: width,
                    found: r.values.len(),
                });
            }
            if r.label > 1 {
                return Err(ClassifierError::Label(r.label));
            }
            ds.ids.push(r.sample_id);
            ds.labels.push(r.label);
            ds.features.push(r.values);
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    fn select(&self, indices: &[usize]) -> Self {
        Dataset {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
        }
    }
}

/// Stratified train/test split. Each class is shuffled with a generator
/// seeded by `seed` and `round(train_fraction * class_size)` of its samples
/// go to training. Both parts keep the original sample order.
pub fn split(
    data: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), ClassifierError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(ClassifierError::TrainFraction(train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..data.len())
            .filter(|&i| data.labels[i] == class)
            .collect();
        if members.is_empty() {
            return Err(ClassifierError::EmptyClass(class));
        }
        members.shuffle(&mut rng);
        let n_train = (train_fraction * members.len() as f64).round() as usize;
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.select(&train), data.select(&test)))
}

/// Binary classification metrics; the positive class is label 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub f1: f64,
    pub accuracy: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl EvalReport {
    /// Single-line `f1=.. accuracy=.. tp=.. fp=.. tn=.. fn=..` record.
    pub fn record(&self) -> String {
        format!(
            "f1={} accuracy={} tp={} fp={} tn={} fn={}",
            self.f1, self.accuracy, self.tp, self.fp, self.tn, self.fn_
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.tp + self.fp + self.tn + self.fn_;
        writeln!(f, "samples   {n}")?;
        writeln!(f, "F1        {:.4}", self.f1)?;
        writeln!(f, "accuracy  {:.4}", self.accuracy)?;
        writeln!(f, "            pred 1  pred 0")?;
        writeln!(f, "  true 1  {:>8}{:>8}", self.tp, self.fn_)?;
        write!(f, "  true 0  {:>8}{:>8}", self.fp, self.tn)
    }
}

pub fn evaluate(predicted: &[u8], truth: &[u8]) -> Result<EvalReport, ClassifierError> {
    if predicted.len() != truth.len() {
        return Err(ClassifierError::LengthMismatch {
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(ClassifierError::EmptyInput);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            (0, 1) => fn_ += 1,
            _ => return Err(ClassifierError::Label(p.max(t))),
        }
    }
    let f1_denominator = 2 * tp + fp + fn_;
    let f1 = if f1_denominator == 0 {
        0.0
    } else {
        (2 * tp) as f64 / f1_denominator as f64
    };
    Ok(EvalReport {
        f1,
        accuracy: (tp + tn) as f64 / truth.len() as f64,
        tp,
        fp,
        tn,
        fn_,
    })
}
