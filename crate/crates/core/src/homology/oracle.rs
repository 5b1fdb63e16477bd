//! Textbook boundary-matrix reduction over GF(2), for checking the fast
//! paths on small inputs.
//!
//! Every simplex of the filtration gets a column holding the positions of its
//! faces. Columns are reduced left to right: while some earlier column has
//! the same lowest nonzero row, that column is added. A nonzero reduced
//! column `j` with lowest row `i` pairs simplex `i` (birth) with simplex `j`
//! (death). Positive simplices that end up unpaired are essential classes.

use std::collections::HashMap;

use super::{FilteredComplex, HomologyError, PersistenceDiagram, ESSENTIAL_DEATH};

/// Largest token count the oracle accepts.
pub const ORACLE_MAX_TOKENS: usize = 10;

pub fn oracle_reduction(
    fc: &FilteredComplex,
) -> Result<(PersistenceDiagram, PersistenceDiagram), HomologyError> {
    if fc.tokens() > ORACLE_MAX_TOKENS {
        return Err(HomologyError::OracleTooLarge {
            n: fc.tokens(),
            max: ORACLE_MAX_TOKENS,
        });
    }
    let simplices = fc.simplices();
    let position: HashMap<Vec<usize>, usize> = simplices
        .iter()
        .enumerate()
        .map(|(i, s)| (s.vertices().to_vec(), i))
        .collect();

    let mut columns: Vec<Vec<usize>> = simplices
        .iter()
        .map(|s| {
            let verts = s.vertices();
            let mut faces: Vec<usize> = if verts.len() == 1 {
                Vec::new()
            } else {
                (0..verts.len())
                    .map(|skip| {
                        let face: Vec<usize> = verts
                            .iter()
                            .enumerate()
                            .filter(|&(k, _)| k != skip)
                            .map(|(_, &v)| v)
                            .collect();
                        position[&face]
                    })
                    .collect()
            };
            faces.sort_unstable();
            faces
        })
        .collect();

    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            let Some(k) = (0..j).find(|&k| columns[k].last() == Some(&low)) else {
                break;
            };
            let sum = xor(&columns[j], &columns[k]);
            columns[j] = sum;
        }
    }

    let mut paired = vec![false; simplices.len()];
    let mut h0 = PersistenceDiagram::new(0);
    let mut h1 = PersistenceDiagram::new(1);
    for (j, col) in columns.iter().enumerate() {
        if let Some(&low) = col.last() {
            paired[low] = true;
            paired[j] = true;
            let birth = simplices[low].value();
            let death = simplices[j].value();
            match simplices[low].dim() {
                0 => h0.push(birth, death),
                1 => h1.push(birth, death),
                _ => {}
            }
        }
    }
    for (j, col) in columns.iter().enumerate() {
        if col.is_empty() && !paired[j] {
            let birth = simplices[j].value();
            match simplices[j].dim() {
                0 => h0.push(birth, ESSENTIAL_DEATH),
                1 => h1.push(birth, ESSENTIAL_DEATH),
                _ => {}
            }
        }
    }
    Ok((h0, h1))
}

fn xor(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().filter(|x| !b.contains(x)).copied().collect();
    out.extend(b.iter().filter(|x| !a.contains(x)));
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{build_filtration, DistanceMatrix};

    fn diagrams(n: usize, d: Vec<f64>) -> (PersistenceDiagram, PersistenceDiagram) {
        oracle_reduction(&build_filtration(&DistanceMatrix::new(n, d).unwrap())).unwrap()
    }

    #[test]
    fn hand_computed_small_cases() {
        let (h0, h1) = diagrams(1, vec![]);
        assert_eq!(h0, PersistenceDiagram::from_pairs(0, [(0.0, 1.0)]));
        assert!(h1.is_empty());

        let (h0, h1) = diagrams(2, vec![0.4]);
        assert!(h0.same_multiset(&PersistenceDiagram::from_pairs(0, [(0.0, 0.4), (0.0, 1.0)])));
        assert!(h1.is_empty());

        let (h0, h1) = diagrams(3, vec![0.2, 0.5, 0.3]);
        assert!(h0.same_multiset(&PersistenceDiagram::from_pairs(
            0,
            [(0.0, 0.2), (0.0, 0.3), (0.0, 1.0)]
        )));
        assert_eq!(h1, PersistenceDiagram::from_pairs(1, [(0.5, 0.5)]));

        let (_, h1) = diagrams(4, vec![0.1, 0.9, 0.1, 0.1, 0.9, 0.1]);
        assert!(h1.same_multiset(&PersistenceDiagram::from_pairs(
            1,
            [(0.1, 0.9), (0.9, 0.9), (0.9, 0.9)]
        )));
    }

    #[test]
    fn rejects_large_inputs() {
        let m = DistanceMatrix::new(11, vec![0.5; 55]).unwrap();
        assert_eq!(
            oracle_reduction(&build_filtration(&m)),
            Err(HomologyError::OracleTooLarge { n: 11, max: 10 })
        );
    }
}
