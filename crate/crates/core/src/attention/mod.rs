//! Per-sample attention tensors, their structural checks and the conversion
//! of one head into a token distance matrix.

mod format;

use std::fmt;

use thiserror::Error;

use crate::homology::{DistanceMatrix, MAX_TOKENS};

pub use format::{
    decode_attn, decode_attn_unvalidated, encode_attn, encoded_len, read_attn_file,
    read_attn_file_unvalidated, write_attn_file, AttnError, SampleRef, FILE_HEADER_LEN,
    FORMAT_VERSION, MAGIC,
};

/// Allowed deviation of a row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-3;

/// Slack tolerated by [`symmetrize`] outside `[0, 1]` before rejecting a weight.
pub const RANGE_SLACK: f64 = 1e-6;

/// Longest sample id, in bytes.
pub const MAX_ID_BYTES: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttentionError {
    #[error("tensor shape {layers}x{heads}x{tokens} is not allowed (each ≥ 1, layers and heads ≤ 65535, tokens ≤ {MAX_TOKENS})")]
    Shape {
        layers: usize,
        heads: usize,
        tokens: usize,
    },
    #[error("expected {expected} weights, got {found}")]
    WeightCount { expected: usize, found: usize },
    #[error("weight {value} at row {row}, column {col} outside [0, 1]")]
    WeightOutOfRange { row: usize, col: usize, value: f32 },
    #[error("sample id must be 1..={MAX_ID_BYTES} bytes, got {0}")]
    IdLength(usize),
    #[error("label must be 0 or 1, got {0}")]
    Label(u8),
}

/// `layers × heads` stacked `tokens × tokens` row-stochastic matrices.
/// Storage is layer-major, head-minor, each matrix row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTensor {
    layers: usize,
    heads: usize,
    tokens: usize,
    weights: Vec<f32>,
}

impl AttentionTensor {
    pub fn new(
        layers: usize,
        heads: usize,
        tokens: usize,
        weights: Vec<f32>,
    ) -> Result<Self, AttentionError> {
        let max_dim = u16::MAX as usize;
        if layers == 0
            || heads == 0
            || tokens == 0
            || layers > max_dim
            || heads > max_dim
            || tokens > MAX_TOKENS
        {
            return Err(AttentionError::Shape {
                layers,
                heads,
                tokens,
            });
        }
        let expected = layers * heads * tokens * tokens;
        if weights.len() != expected {
            return Err(AttentionError::WeightCount {
                expected,
                found: weights.len(),
            });
        }
        Ok(Self {
            layers,
            heads,
            tokens,
            weights,
        })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    /// The `tokens × tokens` matrix of one head, row-major.
    pub fn head(&self, layer: usize, head: usize) -> &[f32] {
        assert!(
            layer < self.layers && head < self.heads,
            "head ({layer}, {head}) out of range"
        );
        let size = self.tokens * self.tokens;
        let start = (layer * self.heads + head) * size;
        &self.weights[start..start + size]
    }
}

/// One labelled code sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    /// 1 = vulnerable, 0 = not.
    pub label: u8,
    pub tensor: AttentionTensor,
}

impl Sample {
    /// Checks the id and label constraints (the tensor is checked by
    /// [`validate_tensor`]).
    pub fn check_header(&self) -> Result<(), AttentionError> {
        if self.id.is_empty() || self.id.len() > MAX_ID_BYTES {
            return Err(AttentionError::IdLength(self.id.len()));
        }
        if self.label > 1 {
            return Err(AttentionError::Label(self.label));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    RowSum { sum: f64 },
    OutOfRange { column: usize, value: f32 },
}

/// A broken tensor invariant, located by layer, head and row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub layer: usize,
    pub head: usize,
    pub row: usize,
    pub kind: ViolationKind,
}

/// Tab-separated `layer head row detail`; prefix the sample id for a full
/// report line.
impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t", self.layer, self.head, self.row)?;
        match self.kind {
            ViolationKind::RowSum { sum } => {
                write!(
                    f,
                    "row sum {sum} differs from 1 by more than {ROW_SUM_TOLERANCE}"
                )
            }
            ViolationKind::OutOfRange { column, value } => {
                write!(f, "value {value} at column {column} outside [0, 1]")
            }
        }
    }
}

/// Lists every out-of-range weight and every row whose sum is not 1 within
/// [`ROW_SUM_TOLERANCE`]. Empty iff the tensor is a valid softmax output.
pub fn validate_tensor(t: &AttentionTensor) -> Vec<Violation> {
    let mut violations = Vec::new();
    let m = t.tokens;
    for layer in 0..t.layers {
        for head in 0..t.heads {
            for (row, values) in t.head(layer, head).chunks_exact(m).enumerate() {
                let mut sum = 0.0f64;
                for (column, &value) in values.iter().enumerate() {
                    if !(0.0..=1.0).contains(&value) {
                        violations.push(Violation {
                            layer,
                            head,
                            row,
                            kind: ViolationKind::OutOfRange { column, value },
                        });
                    }
                    sum += f64::from(value);
                }
                // written so that a NaN sum is reported
                let within = (sum - 1.0).abs() <= ROW_SUM_TOLERANCE;
                if !within {
                    violations.push(Violation {
                        layer,
                        head,
                        row,
                        kind: ViolationKind::RowSum { sum },
                    });
                }
            }
        }
    }
    violations
}

/// Turns one head into distances: `d(i, j) = 1 − max(w_ij, w_ji)` for
/// `i < j`. The diagonal is ignored.
pub fn symmetrize(tokens: usize, head: &[f32]) -> Result<DistanceMatrix, AttentionError> {
    if tokens == 0 || tokens > MAX_TOKENS {
        return Err(AttentionError::Shape {
            layers: 1,
            heads: 1,
            tokens,
        });
    }
    if head.len() != tokens * tokens {
        return Err(AttentionError::WeightCount {
            expected: tokens * tokens,
            found: head.len(),
        });
    }
    let lo = -RANGE_SLACK;
    let hi = 1.0 + RANGE_SLACK;
    for (k, &value) in head.iter().enumerate() {
        if !(lo..=hi).contains(&f64::from(value)) {
            return Err(AttentionError::WeightOutOfRange {
                row: k / tokens,
                col: k % tokens,
                value,
            });
        }
    }
    let d = DistanceMatrix::from_fn(tokens, |i, j| {
        let w = f64::from(head[i * tokens + j]).max(f64::from(head[j * tokens + i]));
        1.0 - w.clamp(0.0, 1.0)
    })
    .expect("distances lie in [0, 1] after clamping");
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(layers: usize, heads: usize, m: usize) -> AttentionTensor {
        let w = 1.0 / m as f32;
        AttentionTensor::new(layers, heads, m, vec![w; layers * heads * m * m]).unwrap()
    }

    #[test]
    fn shape_checks() {
        assert!(AttentionTensor::new(0, 1, 2, vec![]).is_err());
        assert!(AttentionTensor::new(1, 1, MAX_TOKENS + 1, vec![]).is_err());
        assert_eq!(
            AttentionTensor::new(1, 1, 2, vec![0.5; 3]),
            Err(AttentionError::WeightCount {
                expected: 4,
                found: 3
            })
        );
    }

    #[test]
    fn head_slices_are_layer_major() {
        let weights: Vec<f32> = (0..2 * 3 * 4).map(|x| x as f32).collect();
        let t = AttentionTensor::new(2, 3, 2, weights).unwrap();
        assert_eq!(t.head(0, 0), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(t.head(0, 2), &[8.0, 9.0, 10.0, 11.0]);
        assert_eq!(t.head(1, 0), &[12.0, 13.0, 14.0, 15.0]);
    }

    #[test]
    fn valid_softmax_rows_pass() {
        assert!(validate_tensor(&uniform(2, 3, 7)).is_empty());
    }

    #[test]
    fn short_row_is_reported() {
        let t =
            AttentionTensor::new(1, 2, 2, vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.4, 0.5]).unwrap();
        let v = validate_tensor(&t);
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].layer, v[0].head, v[0].row), (0, 1, 1));
        match v[0].kind {
            ViolationKind::RowSum { sum } => assert!((sum - 0.9).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(v[0].to_string().starts_with("0\t1\t1\trow sum 0.9"));
    }

    #[test]
    fn out_of_range_is_reported() {
        let t = AttentionTensor::new(1, 1, 2, vec![1.2, -0.2, 0.5, 0.5]).unwrap();
        let v = validate_tensor(&t);
        assert_eq!(v.len(), 2);
        assert!(matches!(
            v[0].kind,
            ViolationKind::OutOfRange { column: 0, value } if value == 1.2
        ));
        let nan = AttentionTensor::new(1, 1, 1, vec![f32::NAN]).unwrap();
        assert_eq!(validate_tensor(&nan).len(), 2);
    }

    #[test]
    fn symmetrize_takes_the_stronger_direction() {
        let d = symmetrize(2, &[0.7, 0.3, 0.4, 0.6]).unwrap();
        assert_eq!(d.get(0, 1), 1.0 - f64::from(0.4f32));
    }

    #[test]
    fn symmetrize_of_symmetric_input() {
        let w = [0.5f32, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5];
        let d = symmetrize(3, &w).unwrap();
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(d.get(i, j), 1.0 - f64::from(w[i * 3 + j]));
            }
        }
    }

    #[test]
    fn symmetrize_of_identity_is_all_ones() {
        let w = [1.0f32, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let d = symmetrize(3, &w).unwrap();
        assert!(d.upper().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn symmetrize_slack() {
        assert!(symmetrize(2, &[0.5, 1.0000005, 0.5, 0.5]).is_ok());
        assert!(symmetrize(2, &[0.5, -0.0000005, 0.5, 0.5]).is_ok());
        assert_eq!(
            symmetrize(2, &[0.5, 0.5, 1.01, 0.5]),
            Err(AttentionError::WeightOutOfRange {
                row: 1,
                col: 0,
                value: 1.01
            })
        );
    }

    #[test]
    fn sample_header_rules() {
        let mut s = Sample {
            id: "a".into(),
            label: 1,
            tensor: uniform(1, 1, 2),
        };
        assert!(s.check_header().is_ok());
        s.label = 2;
        assert_eq!(s.check_header(), Err(AttentionError::Label(2)));
        s.label = 0;
        s.id = String::new();
        assert_eq!(s.check_header(), Err(AttentionError::IdLength(0)));
        s.id = "x".repeat(257);
        assert_eq!(s.check_header(), Err(AttentionError::IdLength(257)));
    }
}
