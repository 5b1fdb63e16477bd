//! Seeded generator of labelled attention tensors with a planted
//! topological difference between the classes.
//!
//! Class 1 heads attend strongly to the two neighbours of each token along a
//! random cyclic ordering of the tokens. After symmetrization the ring edges
//! are short and every chord is long, so the ring is a dimension-1 class
//! that lives from the longest ring edge to the shortest chord. Class 0
//! heads spread attention over all tokens with random jitter. Samples
//! alternate between the classes, starting with class 0.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::attention::{AttentionTensor, Sample};
use crate::homology::MAX_TOKENS;

/// Attention kept on the token itself in a ring head.
const RING_SELF_WEIGHT: f64 = 0.05;
/// Range of the weight put on each ring neighbour.
const RING_NEIGHBOUR_WEIGHT: (f64, f64) = (0.35, 0.45);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("tokens must lie in 4..={MAX_TOKENS}, got {0}")]
    Tokens(usize),
    #[error("layers and heads must lie in 1..=65535, got {layers}x{heads}")]
    Shape { layers: usize, heads: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthConfig {
    pub samples: usize,
    pub layers: usize,
    pub heads: usize,
    pub tokens: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            samples: 400,
            layers: 2,
            heads: 2,
            tokens: 30,
            seed: 0,
        }
    }
}

pub fn generate(config: &SynthConfig) -> Result<Vec<Sample>, SynthError> {
    if config.samples < 2 {
        return Err(SynthError::TooFewSamples(config.samples));
    }
    if config.tokens < 4 || config.tokens > MAX_TOKENS {
        return Err(SynthError::Tokens(config.tokens));
    }
    if config.layers == 0 || config.heads == 0 || config.layers > 65535 || config.heads > 65535 {
        return Err(SynthError::Shape {
            layers: config.layers,
            heads: config.heads,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let m = config.tokens;
    let samples = (0..config.samples)
        .map(|i| {
            let label = (i % 2) as u8;
            let mut weights = Vec::with_capacity(config.layers * config.heads * m * m);
            for _ in 0..config.layers * config.heads {
                let head = if label == 1 {
                    ring_head(&mut rng, m)
                } else {
                    diffuse_head(&mut rng, m)
                };
                weights.extend(head);
            }
            Sample {
                id: format!("synth-{i:06}"),
                label,
                tensor: AttentionTensor::new(config.layers, config.heads, m, weights)
                    .expect("shape checked above"),
            }
        })
        .collect();
    Ok(samples)
}

/// Normalizes a row of positive weights to sum to one, in f32.
fn push_row(out: &mut Vec<f32>, row: &[f64]) {
    let total: f64 = row.iter().sum();
    out.extend(row.iter().map(|&w| (w / total) as f32));
}

fn diffuse_head(rng: &mut ChaCha8Rng, m: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(m * m);
    let mut row = vec![0.0; m];
    for _ in 0..m {
        for w in row.iter_mut() {
            *w = 1.0 + rng.random::<f64>();
        }
        push_row(&mut out, &row);
    }
    out
}

fn ring_head(rng: &mut ChaCha8Rng, m: usize) -> Vec<f32> {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let mut position = vec![0; m];
    for (p, &token) in order.iter().enumerate() {
        position[token] = p;
    }
    let neighbour = rng.random_range(RING_NEIGHBOUR_WEIGHT.0..RING_NEIGHBOUR_WEIGHT.1);
    let background = (1.0 - 2.0 * neighbour - RING_SELF_WEIGHT) / (m - 3) as f64;

    let mut out = Vec::with_capacity(m * m);
    let mut row = vec![0.0; m];
    for i in 0..m {
        let prev = order[(position[i] + m - 1) % m];
        let next = order[(position[i] + 1) % m];
        for (j, w) in row.iter_mut().enumerate() {
            *w = if j == i {
                RING_SELF_WEIGHT
            } else if j == prev || j == next {
                neighbour
            } else {
                background * (0.5 + rng.random::<f64>())
            };
        }
        push_row(&mut out, &row);
    }
    out
}
