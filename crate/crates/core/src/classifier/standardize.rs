use super::ClassifierError;

/// Per-feature mean and population standard deviation of the training set.
/// A feature whose standard deviation is recorded as 0 is left untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl StandardizationStats {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, ClassifierError> {
        if rows.len() < 2 {
            return Err(ClassifierError::TooFewSamples {
                needed: 2,
                found: rows.len(),
            });
        }
        let width = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(ClassifierError::LengthMismatch {
                expected: width,
                found: r.len(),
            });
        }
        let k = rows.len() as f64;
        let mut means = vec![0.0; width];
        let mut stds = vec![0.0; width];
        for j in 0..width {
            let first = rows[0][j];
            if rows.iter().all(|r| r[j] == first) {
                means[j] = first;
                continue;
            }
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / k;
            let var = rows
                .iter()
                .map(|r| (r[j] - mean) * (r[j] - mean))
                .sum::<f64>()
                / k;
            if !(mean.is_finite() && var.is_finite()) {
                return Err(ClassifierError::NonFiniteStatistics { feature: j });
            }
            means[j] = mean;
            stds[j] = var.sqrt();
        }
        Ok(Self { means, stds })
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        if row.len() != self.len() {
            return Err(ClassifierError::LengthMismatch {
                expected: self.len(),
                found: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&x, (&mean, &std))| if std > 0.0 { (x - mean) / std } else { x })
            .collect())
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ClassifierError> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_column() {
        let stats = StandardizationStats::fit(&[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(stats.means, vec![2.0]);
        assert_eq!(stats.stds, vec![1.0]);
        assert_eq!(
            stats.apply(&[vec![1.0], vec![3.0]]).unwrap(),
            vec![vec![-1.0], vec![1.0]]
        );
    }

    #[test]
    fn constant_column_passes_through() {
        let rows = vec![vec![0.1, 5.0], vec![0.1, 6.0], vec![0.1, 7.0]];
        let stats = StandardizationStats::fit(&rows).unwrap();
        assert_eq!(stats.stds[0], 0.0);
        let out = stats.apply(&rows).unwrap();
        assert!(out.iter().all(|r| r[0] == 0.1));
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_std() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64 * 0.37).sin() * 4.0 + 2.0, (i * i) as f64])
            .collect();
        let stats = StandardizationStats::fit(&rows).unwrap();
        let out = stats.apply(&rows).unwrap();
        for j in 0..2 {
            let mean = out.iter().map(|r| r[j]).sum::<f64>() / 50.0;
            let var = out.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-12);
        }
        let again = StandardizationStats::fit(&out).unwrap();
        assert!(again.means.iter().all(|m| m.abs() < 1e-9));
        assert!(again.stds.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn errors() {
        assert!(StandardizationStats::fit(&[vec![1.0]]).is_err());
        let stats = StandardizationStats::fit(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(stats.apply_row(&[1.0, 2.0]).is_err());
        match StandardizationStats::fit(&[vec![0.0, 1.7e308], vec![1.0, 1.7e308], vec![2.0, 0.0]]) {
            Err(ClassifierError::NonFiniteStatistics { feature: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
