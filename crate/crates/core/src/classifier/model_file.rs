//! Plain-text model file.
//!
//! ```text
//! ATTN-TOPO-MODEL v1
//! lambda=<f>
//! bias=<f>
//! weights=<f>,<f>,...
//! means=<f>,<f>,...
//! stds=<f>,<f>,...
//! ```
//!
//! Floats carry 17 significant digits, so they parse back to the same bits.

use std::fs;
use std::path::Path;

use super::{ClassifierError, LinearModel, StandardizationStats};

pub const MODEL_HEADER: &str = "ATTN-TOPO-MODEL v1";

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn floats(xs: &[f64]) -> String {
    xs.iter().map(|&x| float(x)).collect::<Vec<_>>().join(",")
}

impl LinearModel {
    pub fn to_text(&self) -> String {
        format!(
            "{MODEL_HEADER}\nlambda={}\nbias={}\nweights={}\nmeans={}\nstds={}\n",
            float(self.lambda),
            float(self.bias),
            floats(&self.weights),
            floats(&self.stats.means),
            floats(&self.stats.stds),
        )
    }

    pub fn from_text(text: &str) -> Result<Self, ClassifierError> {
        let err = |line: usize, reason: String| ClassifierError::ModelFormat { line, reason };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, header)) if header.trim_end() == MODEL_HEADER => {}
            _ => return Err(err(1, format!("expected header {MODEL_HEADER:?}"))),
        }

        let mut field = |key: &str| -> Result<(usize, Vec<f64>), ClassifierError> {
            let (line, text) = lines
                .next()
                .ok_or_else(|| err(0, format!("missing {key}")))?;
            let value = text
                .strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('='))
                .ok_or_else(|| err(line, format!("expected {key}=...")))?;
            if value.is_empty() {
                return Ok((line, Vec::new()));
            }
            let parsed = value
                .split(',')
                .map(|v| match v.trim().parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(err(line, format!("{v:?} is not a finite number"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((line, parsed))
        };

        let scalar = |(line, v): (usize, Vec<f64>), key: &str| -> Result<f64, ClassifierError> {
            match v.as_slice() {
                [x] => Ok(*x),
                _ => Err(err(line, format!("{key} must be a single number"))),
            }
        };
        let lambda = scalar(field("lambda")?, "lambda")?;
        let bias = scalar(field("bias")?, "bias")?;
        let (_, weights) = field("weights")?;
        let (line, means) = field("means")?;
        if means.len() != weights.len() {
            return Err(err(line, "means and weights differ in length".to_string()));
        }
        let (line, stds) = field("stds")?;
        if stds.len() != weights.len() {
            return Err(err(line, "stds and weights differ in length".to_string()));
        }
        if lambda < 0.0 || stds.iter().any(|&s| s < 0.0) {
            return Err(err(
                line,
                "negative lambda or standard deviation".to_string(),
            ));
        }
        Ok(LinearModel {
            weights,
            bias,
            lambda,
            stats: StandardizationStats { means, stds },
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|source| ClassifierError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ClassifierError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}
