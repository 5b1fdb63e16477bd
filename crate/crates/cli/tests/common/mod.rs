#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use attn_topo_core::attention::{write_attn_file, AttentionTensor, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BIN: &str = env!("CARGO_BIN_EXE_attn-topo");

pub fn attn_topo<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(BIN)
        .args(args)
        .output()
        .expect("failed to start attn-topo")
}

pub fn path_arg(p: &Path) -> String {
    p.to_str().expect("utf-8 temp path").to_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Value of `key=` in the `f1=.. accuracy=..` record line.
pub fn record_value(stdout: &str, key: &str) -> Option<f64> {
    let line = stdout.lines().find(|l| l.starts_with("f1="))?;
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))?
        .parse()
        .ok()
}

/// Row-stochastic tensor from softmax of uniform logits.
pub fn random_tensor(
    rng: &mut ChaCha8Rng,
    layers: usize,
    heads: usize,
    tokens: usize,
) -> AttentionTensor {
    let mut weights = Vec::with_capacity(layers * heads * tokens * tokens);
    for _ in 0..layers * heads * tokens {
        let logits: Vec<f64> = (0..tokens).map(|_| rng.random_range(-3.0..3.0)).collect();
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|z| (z - top).exp()).collect();
        let total: f64 = exp.iter().sum();
        weights.extend(exp.iter().map(|e| (e / total) as f32));
    }
    AttentionTensor::new(layers, heads, tokens, weights).unwrap()
}

pub fn random_samples(
    seed: u64,
    count: usize,
    layers: usize,
    heads: usize,
    tokens: usize,
) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| Sample {
            id: format!("rand-{i}"),
            label: (i % 2) as u8,
            tensor: random_tensor(&mut rng, layers, heads, tokens),
        })
        .collect()
}

pub fn write_samples(dir: &Path, name: &str, samples: &[Sample]) -> PathBuf {
    let path = dir.join(name);
    write_attn_file(samples, &path).unwrap();
    path
}

/// Every file under `dir` with its bytes, sorted by name.
pub fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}
