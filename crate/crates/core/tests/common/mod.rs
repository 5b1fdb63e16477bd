#![allow(dead_code)]

use attn_topo_core::homology::{DistanceMatrix, FilteredComplex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform distances; roughly a third of them snapped to a coarse grid so
/// that ties are common.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DistanceMatrix {
    DistanceMatrix::from_fn(n, |_, _| {
        if rng.random_bool(0.35) {
            f64::from(rng.random_range(0..=8u32)) / 8.0
        } else {
            rng.random::<f64>()
        }
    })
    .unwrap()
}

/// Prim's algorithm on the dense matrix; returns the sorted MST weights.
pub fn mst_weights(m: &DistanceMatrix) -> Vec<f64> {
    let n = m.tokens();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut weights = Vec::new();
    for step in 0..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[v] = true;
        if step > 0 {
            weights.push(best[v]);
        }
        for u in 0..n {
            if !in_tree[u] && m.get(u, v) < best[u] {
                best[u] = m.get(u, v);
            }
        }
    }
    weights.sort_by(f64::total_cmp);
    weights
}

/// Checks the filtration invariants without reusing the library ordering:
/// simplex counts, values, the sort key and face-before-coface.
pub fn check_filtration(m: &DistanceMatrix, fc: &FilteredComplex) -> Result<(), String> {
    let n = m.tokens();
    let s = fc.simplices();
    let count = |d| s.iter().filter(|x| x.dim() == d).count();
    let tri = if n >= 3 { n * (n - 1) * (n - 2) / 6 } else { 0 };
    if (count(0), count(1), count(2)) != (n, n * (n - 1) / 2, tri) {
        return Err(format!("counts {:?}", (count(0), count(1), count(2))));
    }
    let mut position = std::collections::HashMap::new();
    for (i, x) in s.iter().enumerate() {
        let v = x.vertices();
        if !v.windows(2).all(|w| w[0] < w[1]) {
            return Err(format!("unsorted vertices {v:?}"));
        }
        let expected = match v.len() {
            1 => 0.0,
            2 => m.get(v[0], v[1]),
            _ => m
                .get(v[0], v[1])
                .max(m.get(v[0], v[2]))
                .max(m.get(v[1], v[2])),
        };
        if x.value() != expected {
            return Err(format!("{v:?} has value {} not {expected}", x.value()));
        }
        position.insert(v.to_vec(), i);
    }
    let mut keyed: Vec<(f64, usize, Vec<usize>)> = s
        .iter()
        .map(|x| (x.value(), x.dim(), x.vertices().to_vec()))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (i, (value, dim, verts)) in keyed.iter().enumerate() {
        let x = &s[i];
        if x.value() != *value || x.dim() != *dim || x.vertices() != verts.as_slice() {
            return Err(format!("position {i} out of order"));
        }
    }
    for (i, x) in s.iter().enumerate() {
        let v = x.vertices();
        if v.len() < 2 {
            continue;
        }
        for skip in 0..v.len() {
            let face: Vec<usize> = v
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != skip)
                .map(|(_, &u)| u)
                .collect();
            if position[&face] >= i {
                return Err(format!("face {face:?} does not precede {v:?}"));
            }
        }
    }
    Ok(())
}
