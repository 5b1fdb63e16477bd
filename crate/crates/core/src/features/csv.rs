//! Feature CSV: header `sample_id,label,f0000,...`, one row per sample,
//! values with 9 significant digits, LF line endings.

use std::io::{Read, Write};

use thiserror::Error;

use super::FeatureVector;
use crate::numfmt::format_significant;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] ::csv::Error),
    #[error("line {line}: {reason}")]
    Format { line: u64, reason: String },
    #[error("sample {id} has {found} features, expected {expected}")]
    RaggedRows {
        id: String,
        expected: usize,
        found: usize,
    },
}

fn column_name(i: usize) -> String {
    format!("f{i:04}")
}

pub fn write_feature_csv<W: Write>(out: W, rows: &[FeatureVector]) -> Result<(), CsvError> {
    let width = rows.first().map_or(0, |r| r.values.len());
    if let Some(bad) = rows.iter().find(|r| r.values.len() != width) {
        return Err(CsvError::RaggedRows {
            id: bad.sample_id.clone(),
            expected: width,
            found: bad.values.len(),
        });
    }
    let mut w = ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec!["sample_id".to_string(), "label".to_string()];
    header.extend((0..width).map(column_name));
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(width + 2);
    for row in rows {
        record.clear();
        record.push(row.sample_id.clone());
        record.push(row.label.to_string());
        record.extend(row.values.iter().map(|&v| format_significant(v, 9)));
        w.write_record(&record)?;
    }
    w.flush().map_err(::csv::Error::from)?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<FeatureVector>, CsvError> {
    let mut r = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < 2 || &header[0] != "sample_id" || &header[1] != "label" {
        return Err(CsvError::Format {
            line: 1,
            reason: "header must start with sample_id,label".to_string(),
        });
    }
    for (i, name) in header.iter().skip(2).enumerate() {
        if name != column_name(i) {
            return Err(CsvError::Format {
                line: 1,
                reason: format!(
                    "column {} is {name:?}, expected {:?}",
                    i + 2,
                    column_name(i)
                ),
            });
        }
    }

    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let label = match &record[1] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(CsvError::Format {
                    line,
                    reason: format!("label {other:?} is not 0 or 1"),
                })
            }
        };
        let values = record
            .iter()
            .skip(2)
            .enumerate()
            .map(|(i, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CsvError::Format {
                    line,
                    reason: format!("{} = {field:?} is not a finite number", column_name(i)),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(FeatureVector {
            sample_id: record[0].to_string(),
            label,
            values,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, label: u8, values: &[f64]) -> FeatureVector {
        FeatureVector {
            sample_id: id.to_string(),
            label,
            values: values.to_vec(),
        }
    }

    #[test]
    fn writes_expected_text() {
        let mut out = Vec::new();
        write_feature_csv(
            &mut out,
            &[row("a", 1, &[0.7, 1.0 / 3.0]), row("b,c", 0, &[0.0, 12.0])],
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "sample_id,label,f0000,f0001\na,1,0.7,0.333333333\n\"b,c\",0,0,12\n"
        );
    }

    #[test]
    fn reads_back() {
        let rows = vec![row("x", 0, &[0.25, 2.0]), row("y\"z", 1, &[1e-7, 0.5])];
        let mut out = Vec::new();
        write_feature_csv(&mut out, &rows).unwrap();
        assert_eq!(read_feature_csv(out.as_slice()).unwrap(), rows);
    }

    #[test]
    fn empty_set_has_header_only() {
        let mut out = Vec::new();
        write_feature_csv(&mut out, &[]).unwrap();
        assert_eq!(out, b"sample_id,label\n");
        assert!(read_feature_csv(out.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(write_feature_csv(Vec::new(), &[row("a", 0, &[1.0]), row("b", 0, &[])]).is_err());
        let bad_label = "sample_id,label,f0000\na,2,0.5\n";
        assert!(matches!(
            read_feature_csv(bad_label.as_bytes()),
            Err(CsvError::Format { line: 2, .. })
        ));
        let bad_value = "sample_id,label,f0000\na,1,NaN\n";
        assert!(read_feature_csv(bad_value.as_bytes()).is_err());
        let bad_header = "id,label,f0000\n";
        assert!(read_feature_csv(bad_header.as_bytes()).is_err());
        let ragged = "sample_id,label,f0000\na,1,0.5,0.2\n";
        assert!(read_feature_csv(ragged.as_bytes()).is_err());
    }
}
