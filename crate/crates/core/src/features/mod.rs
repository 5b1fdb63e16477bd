//! Five summary statistics per persistence diagram and the per-sample
//! feature vector built from them.
//!
//! Layout: for each selected head `(layer, head)` in ascending order, the
//! dimension-0 block then the dimension-1 block, each
//! `[mean, variance, max, count, entropy]` of the lifespans. With all heads
//! selected the index of a value is
//! `((layer * heads + head) * 2 + dim) * 5 + feature`.
//!
//! Variance is the population variance. Lifespans include the capped
//! essential class and zero-persistence pairs unless the configuration drops
//! the latter.

mod csv;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::attention::{symmetrize, validate_tensor, AttentionError, Sample, Violation};
use crate::homology::{compute_diagrams, PersistenceDiagram};

pub use self::csv::{read_feature_csv, write_feature_csv, CsvError};

/// Base of the logarithm in [`persistence_entropy`].
pub const ENTROPY_LOG_BASE: f64 = std::f64::consts::E;

pub const FEATURES_PER_DIAGRAM: usize = 5;
pub const FEATURES_PER_HEAD: usize = 2 * FEATURES_PER_DIAGRAM;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("sample {id}: {source}")]
    Attention {
        id: String,
        #[source]
        source: AttentionError,
    },
    #[error("sample {id}: {} tensor violation(s), first at {}", violations.len(), violations[0])]
    InvalidTensor {
        id: String,
        violations: Vec<Violation>,
    },
    #[error("sample {id}: head {layer}:{head} outside a {layers}x{heads} tensor")]
    HeadOutOfRange {
        id: String,
        layer: usize,
        head: usize,
        layers: usize,
        heads: usize,
    },
}

/// Shannon entropy of the normalized lifespans. Zero lifespans contribute
/// nothing; an empty diagram or one with zero total lifespan has entropy 0.
pub fn persistence_entropy(dgm: &PersistenceDiagram) -> f64 {
    let total: f64 = dgm.lifespans().sum();
    if total.is_nan() || total <= 0.0 {
        return 0.0;
    }
    let ln_base = ENTROPY_LOG_BASE.ln();
    let h = dgm
        .lifespans()
        .filter(|&l| l > 0.0)
        .map(|l| {
            let p = l / total;
            -p * p.ln() / ln_base
        })
        .sum::<f64>();
    h.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagramFeatures {
    pub mean_lifespan: f64,
    pub var_lifespan: f64,
    pub max_lifespan: f64,
    pub point_count: f64,
    pub entropy: f64,
}

impl DiagramFeatures {
    pub fn to_array(self) -> [f64; FEATURES_PER_DIAGRAM] {
        [
            self.mean_lifespan,
            self.var_lifespan,
            self.max_lifespan,
            self.point_count,
            self.entropy,
        ]
    }
}

pub fn diagram_features(dgm: &PersistenceDiagram) -> DiagramFeatures {
    if dgm.is_empty() {
        return DiagramFeatures::default();
    }
    let k = dgm.len() as f64;
    let max = dgm.lifespans().fold(0.0, f64::max);
    // rounding can push the mean of identical values one ulp above them
    let mean = (dgm.lifespans().sum::<f64>() / k).min(max);
    let var = dgm
        .lifespans()
        .map(|l| (l - mean) * (l - mean))
        .sum::<f64>()
        / k;
    DiagramFeatures {
        mean_lifespan: mean,
        var_lifespan: var,
        max_lifespan: max,
        point_count: k,
        entropy: persistence_entropy(dgm),
    }
}

/// A set of `(layer, head)` pairs, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum HeadSelection {
    #[default]
    All,
    Subset(Vec<(usize, usize)>),
}

impl HeadSelection {
    pub fn subset(heads: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut heads: Vec<_> = heads.into_iter().collect();
        heads.sort_unstable();
        heads.dedup();
        HeadSelection::Subset(heads)
    }

    /// The selected heads of a `layers × heads` tensor in layout order.
    pub fn resolve(
        &self,
        layers: usize,
        heads: usize,
    ) -> Result<Vec<(usize, usize)>, (usize, usize)> {
        match self {
            HeadSelection::All => Ok((0..layers)
                .flat_map(|l| (0..heads).map(move |h| (l, h)))
                .collect()),
            HeadSelection::Subset(sel) => {
                if let Some(&bad) = sel.iter().find(|&&(l, h)| l >= layers || h >= heads) {
                    return Err(bad);
                }
                Ok(sel.clone())
            }
        }
    }
}

/// Parses `layer:head[,layer:head...]`, or `all`.
impl FromStr for HeadSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(HeadSelection::All);
        }
        let mut heads = Vec::new();
        for part in s.split(',') {
            let (l, h) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| format!("expected layer:head, got {part:?}"))?;
            let l = l
                .trim()
                .parse()
                .map_err(|_| format!("bad layer in {part:?}"))?;
            let h = h
                .trim()
                .parse()
                .map_err(|_| format!("bad head in {part:?}"))?;
            heads.push((l, h));
        }
        if heads.is_empty() {
            return Err("empty head selection".to_string());
        }
        Ok(HeadSelection::subset(heads))
    }
}

impl fmt::Display for HeadSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeadSelection::All => f.write_str("all"),
            HeadSelection::Subset(heads) => {
                for (i, (l, h)) in heads.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{l}:{h}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureConfig {
    pub heads: HeadSelection,
    pub drop_zero_persistence: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub sample_id: String,
    pub label: u8,
    pub values: Vec<f64>,
}

/// Dimension-0 and dimension-1 diagrams of each `(layer, head)`.
pub type HeadDiagrams = Vec<((usize, usize), PersistenceDiagram, PersistenceDiagram)>;

/// Diagrams of the heads picked by `config`, in layout order, after the
/// zero-persistence filter if it is enabled.
pub fn sample_diagrams(
    sample: &Sample,
    config: &FeatureConfig,
) -> Result<HeadDiagrams, FeatureError> {
    let t = &sample.tensor;
    let violations = validate_tensor(t);
    if !violations.is_empty() {
        return Err(FeatureError::InvalidTensor {
            id: sample.id.clone(),
            violations,
        });
    }
    let heads = config
        .heads
        .resolve(t.layers(), t.heads())
        .map_err(|(layer, head)| FeatureError::HeadOutOfRange {
            id: sample.id.clone(),
            layer,
            head,
            layers: t.layers(),
            heads: t.heads(),
        })?;
    heads
        .into_iter()
        .map(|(layer, head)| {
            let m = symmetrize(t.tokens(), t.head(layer, head)).map_err(|source| {
                FeatureError::Attention {
                    id: sample.id.clone(),
                    source,
                }
            })?;
            let (h0, h1) = compute_diagrams(&m);
            if config.drop_zero_persistence {
                Ok((
                    (layer, head),
                    h0.without_zero_persistence(),
                    h1.without_zero_persistence(),
                ))
            } else {
                Ok(((layer, head), h0, h1))
            }
        })
        .collect()
}

pub fn featurize_sample(sample: &Sample) -> Result<FeatureVector, FeatureError> {
    featurize_sample_with(sample, &FeatureConfig::default())
}

pub fn featurize_sample_with(
    sample: &Sample,
    config: &FeatureConfig,
) -> Result<FeatureVector, FeatureError> {
    let diagrams = sample_diagrams(sample, config)?;
    let mut values = Vec::with_capacity(diagrams.len() * FEATURES_PER_HEAD);
    for (_, h0, h1) in &diagrams {
        values.extend(diagram_features(h0).to_array());
        values.extend(diagram_features(h1).to_array());
    }
    Ok(FeatureVector {
        sample_id: sample.id.clone(),
        label: sample.label,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::AttentionTensor;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(persistence_entropy(&PersistenceDiagram::new(0)), 0.0);
        assert_eq!(
            persistence_entropy(&PersistenceDiagram::from_pairs(0, [(0.0, 1.0)])),
            0.0
        );
        let two = PersistenceDiagram::from_pairs(1, [(0.1, 0.3), (0.5, 0.7)]);
        assert!(close(persistence_entropy(&two), 2f64.ln(), 1e-12));
        let split = PersistenceDiagram::from_pairs(0, [(0.0, 0.75), (0.0, 0.25)]);
        assert!(close(persistence_entropy(&split), 0.5623351, 1e-6));
        let zeros = PersistenceDiagram::from_pairs(1, [(0.4, 0.4), (0.6, 0.6)]);
        assert_eq!(persistence_entropy(&zeros), 0.0);
    }

    #[test]
    fn features_of_empty_diagram() {
        assert_eq!(
            diagram_features(&PersistenceDiagram::new(1)).to_array(),
            [0.0; 5]
        );
    }

    #[test]
    fn features_of_two_bars() {
        let f = diagram_features(&PersistenceDiagram::from_pairs(0, [(0.0, 0.4), (0.0, 1.0)]));
        assert!(close(f.mean_lifespan, 0.7, 1e-15));
        assert!(close(f.var_lifespan, 0.09, 1e-15));
        assert_eq!(f.max_lifespan, 1.0);
        assert_eq!(f.point_count, 2.0);
        // -(2/7) ln(2/7) - (5/7) ln(5/7), evaluated independently
        let expected = (2.0 / 7.0) * (3.5f64).log2() / std::f64::consts::LOG2_E
            + (5.0 / 7.0) * (1.4f64).log2() / std::f64::consts::LOG2_E;
        assert!(close(f.entropy, expected, 1e-12));
        assert!(close(f.entropy, 0.5982696, 1e-7));
    }

    #[test]
    fn features_of_identical_bars() {
        for k in 1..20 {
            let c = 0.1 * k as f64 / 3.0;
            let f = diagram_features(&PersistenceDiagram::from_pairs(0, vec![(0.0, c); k]));
            assert!(close(f.mean_lifespan, c, 1e-15));
            assert!(f.mean_lifespan <= f.max_lifespan);
            assert!(f.var_lifespan < 1e-30);
            assert_eq!(f.point_count, k as f64);
            assert!(close(f.entropy, (k as f64).ln(), 1e-12));
        }
    }

    #[test]
    fn head_selection_parsing() {
        assert_eq!("all".parse::<HeadSelection>(), Ok(HeadSelection::All));
        let sel: HeadSelection = "1:2, 0:0,1:2".parse().unwrap();
        assert_eq!(sel, HeadSelection::Subset(vec![(0, 0), (1, 2)]));
        assert_eq!(sel.to_string(), "0:0,1:2");
        assert!("0-0".parse::<HeadSelection>().is_err());
        assert!("a:1".parse::<HeadSelection>().is_err());
        assert_eq!(sel.resolve(2, 2), Err((1, 2)));
        assert_eq!(sel.resolve(2, 3), Ok(vec![(0, 0), (1, 2)]));
        assert_eq!(
            HeadSelection::All.resolve(2, 2),
            Ok(vec![(0, 0), (0, 1), (1, 0), (1, 1)])
        );
    }

    fn uniform_sample(layers: usize, heads: usize, m: usize) -> Sample {
        let w = 1.0 / m as f32;
        Sample {
            id: "s".into(),
            label: 1,
            tensor: AttentionTensor::new(layers, heads, m, vec![w; layers * heads * m * m])
                .unwrap(),
        }
    }

    #[test]
    fn vector_length_and_counts() {
        let s = uniform_sample(2, 3, 5);
        let fv = featurize_sample(&s).unwrap();
        assert_eq!(fv.values.len(), 2 * 3 * 10);
        assert_eq!(fv.label, 1);
        for head in 0..6 {
            assert_eq!(fv.values[head * 10 + 3], 5.0);
            assert!(fv.values.iter().all(|v| v.is_finite()));
        }
        let one = featurize_sample_with(
            &s,
            &FeatureConfig {
                heads: "1:2".parse().unwrap(),
                drop_zero_persistence: false,
            },
        )
        .unwrap();
        assert_eq!(one.values, fv.values[50..60]);
    }

    #[test]
    fn drop_zero_persistence_removes_flat_cycles() {
        let s = uniform_sample(1, 1, 5);
        let kept = featurize_sample(&s).unwrap();
        // six zero-persistence cycles in the complete graph on 5 points
        assert_eq!(kept.values[8], 6.0);
        let dropped = featurize_sample_with(
            &s,
            &FeatureConfig {
                heads: HeadSelection::All,
                drop_zero_persistence: true,
            },
        )
        .unwrap();
        assert_eq!(dropped.values[5..10], [0.0; 5]);
        assert_eq!(dropped.values[3], 5.0);
    }

    #[test]
    fn rejects_bad_heads_and_tensors() {
        let s = uniform_sample(1, 1, 3);
        let cfg = FeatureConfig {
            heads: "0:1".parse().unwrap(),
            drop_zero_persistence: false,
        };
        assert!(matches!(
            featurize_sample_with(&s, &cfg),
            Err(FeatureError::HeadOutOfRange { head: 1, .. })
        ));
        let mut bad = s.clone();
        bad.tensor = AttentionTensor::new(1, 1, 2, vec![0.5, 0.5, 0.5, 0.2]).unwrap();
        assert!(matches!(
            featurize_sample(&bad),
            Err(FeatureError::InvalidTensor { .. })
        ));
    }
}
