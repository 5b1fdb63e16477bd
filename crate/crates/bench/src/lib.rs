//! Seeded inputs shared by the benchmarks.

use attn_topo_core::attention::{AttentionTensor, Sample};
use attn_topo_core::homology::DistanceMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform random distances on `n` points.
pub fn uniform_matrix(n: usize, seed: u64) -> DistanceMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DistanceMatrix::from_fn(n, |_, _| rng.random::<f64>()).expect("token count within limits")
}

/// One sample whose rows are softmax outputs of uniform logits.
pub fn softmax_sample(layers: usize, heads: usize, tokens: usize, seed: u64) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(layers * heads * tokens * tokens);
    for _ in 0..layers * heads * tokens {
        let exp: Vec<f64> = (0..tokens)
            .map(|_| rng.random_range(-3.0f64..3.0).exp())
            .collect();
        let total: f64 = exp.iter().sum();
        weights.extend(exp.iter().map(|e| (e / total) as f32));
    }
    Sample {
        id: format!("bench-{seed}"),
        label: (seed % 2) as u8,
        tensor: AttentionTensor::new(layers, heads, tokens, weights).expect("valid shape"),
    }
}
