//! Flag-complex filtrations over token distance matrices and their
//! persistence diagrams in dimensions 0 and 1.
//!
//! A [`DistanceMatrix`] is read as a weighted complete graph. Its flag
//! complex, truncated at triangles, is filtered by distance: every vertex is
//! present from 0, an edge enters at its distance and a triangle at the
//! largest of its three edge distances. Dimension-0 persistence is computed
//! with a union-find sweep over the edges; dimension-1 persistence with a
//! reduction of the coboundary matrix that skips (clears) every edge already
//! known to merge two components. [`oracle_reduction`] is an unoptimized
//! boundary-matrix reduction kept around to check both.
//!
//! Simplices with equal filtration value are ordered by dimension, then by
//! their vertex tuple. The one component that never dies is given the death
//! value [`ESSENTIAL_DEATH`].

mod cohomology;
pub mod oracle;
mod union_find;

use std::cmp::Ordering;
use std::io::{self, Write};

use thiserror::Error;

use crate::numfmt::format_significant;
use union_find::DisjointSet;

pub use oracle::{oracle_reduction, ORACLE_MAX_TOKENS};

/// Largest token count accepted anywhere in the pipeline.
pub const MAX_TOKENS: usize = 512;

/// Death assigned to the essential dimension-0 class.
pub const ESSENTIAL_DEATH: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomologyError {
    #[error("token count {0} outside 1..={MAX_TOKENS}")]
    TokenCount(usize),
    #[error("{n} tokens need {expected} upper-triangular distances, got {found}")]
    Length {
        n: usize,
        expected: usize,
        found: usize,
    },
    #[error("distance d({i},{j}) = {value} outside [0, 1]")]
    OutOfRange { i: usize, j: usize, value: f64 },
    #[error("oracle reduction is limited to {max} tokens, got {n}")]
    OracleTooLarge { n: usize, max: usize },
}

/// Symmetric matrix of pairwise token distances in `[0, 1]` with an implied
/// zero diagonal. Only the strict upper triangle is stored, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n: usize, d: Vec<f64>) -> Result<Self, HomologyError> {
        if n == 0 || n > MAX_TOKENS {
            return Err(HomologyError::TokenCount(n));
        }
        let expected = n * (n - 1) / 2;
        if d.len() != expected {
            return Err(HomologyError::Length {
                n,
                expected,
                found: d.len(),
            });
        }
        let mut d = d;
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                let value = d[k];
                if !(0.0..=1.0).contains(&value) {
                    return Err(HomologyError::OutOfRange { i, j, value });
                }
                // -0.0 and 0.0 must sort and hash identically
                d[k] = value + 0.0;
                k += 1;
            }
        }
        Ok(Self { n, d })
    }

    /// Builds a matrix by evaluating `f(i, j)` for every `i < j`.
    pub fn from_fn(
        n: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, HomologyError> {
        if n == 0 || n > MAX_TOKENS {
            return Err(HomologyError::TokenCount(n));
        }
        let mut d = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                d.push(f(i, j));
            }
        }
        Self::new(n, d)
    }

    /// Number of tokens (points).
    pub fn tokens(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            Ordering::Equal => 0.0,
            Ordering::Less => self.d[upper_index(self.n, i, j)],
            Ordering::Greater => self.d[upper_index(self.n, j, i)],
        }
    }

    /// Strict upper triangle, row-major.
    pub fn upper(&self) -> &[f64] {
        &self.d
    }

    /// Relabels the points: entry `(i, j)` of the result is entry
    /// `(perm[i], perm[j])` of `self`.
    ///
    /// # Panics
    /// If `perm` is not a permutation of `0..tokens()`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length");
        let mut seen = vec![false; self.n];
        for &p in perm {
            assert!(!std::mem::replace(&mut seen[p], true), "not a permutation");
        }
        Self::from_fn(self.n, |i, j| self.get(perm[i], perm[j])).expect("same shape and range")
    }
}

pub(crate) fn upper_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// A vertex, edge or triangle of the flag complex with its filtration value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex {
    vertices: [usize; 3],
    dim: u8,
    value: f64,
}

impl Simplex {
    pub fn vertex(v: usize) -> Self {
        Self {
            vertices: [v, 0, 0],
            dim: 0,
            value: 0.0,
        }
    }

    pub fn edge(u: usize, v: usize, value: f64) -> Self {
        debug_assert!(u < v);
        Self {
            vertices: [u, v, 0],
            dim: 1,
            value,
        }
    }

    pub fn triangle(a: usize, b: usize, c: usize, value: f64) -> Self {
        debug_assert!(a < b && b < c);
        Self {
            vertices: [a, b, c],
            dim: 2,
            value,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Strictly increasing vertex indices (1, 2 or 3 of them).
    pub fn vertices(&self) -> &[usize] {
        &self.vertices[..=self.dim as usize]
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Filtration order: value, then dimension, then vertex tuple.
    pub fn filtration_cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.dim.cmp(&other.dim))
            .then_with(|| self.vertices().cmp(other.vertices()))
    }
}

/// The flag complex of a distance matrix up to dimension 2, sorted in
/// filtration order.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredComplex {
    n: usize,
    simplices: Vec<Simplex>,
}

impl FilteredComplex {
    pub fn tokens(&self) -> usize {
        self.n
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Recovers the distance matrix from the edge values.
    pub fn distance_matrix(&self) -> DistanceMatrix {
        let n = self.n;
        let mut d = vec![0.0; n * (n - 1) / 2];
        for s in self.simplices.iter().filter(|s| s.dim == 1) {
            d[upper_index(n, s.vertices[0], s.vertices[1])] = s.value;
        }
        DistanceMatrix { n, d }
    }
}

/// Builds the flag complex of `m` up to triangles in filtration order.
pub fn build_filtration(m: &DistanceMatrix) -> FilteredComplex {
    let n = m.n;
    let n_tri = if n >= 3 { n * (n - 1) * (n - 2) / 6 } else { 0 };
    let mut simplices = Vec::with_capacity(n + m.d.len() + n_tri);
    simplices.extend((0..n).map(Simplex::vertex));
    for i in 0..n {
        for j in i + 1..n {
            simplices.push(Simplex::edge(i, j, m.get(i, j)));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let dij = m.get(i, j);
            for k in j + 1..n {
                let value = dij.max(m.get(i, k)).max(m.get(j, k));
                simplices.push(Simplex::triangle(i, j, k, value));
            }
        }
    }
    simplices.sort_by(Simplex::filtration_cmp);
    FilteredComplex { n, simplices }
}

/// One point of a persistence diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub dim: u8,
    pub birth: f64,
    pub death: f64,
}

impl PersistencePair {
    pub fn lifespan(&self) -> f64 {
        self.death - self.birth
    }
}

/// Multiset of birth/death pairs in one homology dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    dim: u8,
    pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn new(dim: u8) -> Self {
        Self {
            dim,
            pairs: Vec::new(),
        }
    }

    pub fn from_pairs(dim: u8, pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut dgm = Self::new(dim);
        for (birth, death) in pairs {
            dgm.push(birth, death);
        }
        dgm
    }

    pub fn push(&mut self, birth: f64, death: f64) {
        debug_assert!(birth <= death, "birth {birth} after death {death}");
        self.pairs.push(PersistencePair {
            dim: self.dim,
            birth,
            death,
        });
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn lifespans(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(PersistencePair::lifespan)
    }

    /// The same multiset with pairs sorted by (birth, death).
    pub fn canonical(&self) -> Self {
        let mut pairs = self.pairs.clone();
        pairs.sort_by(|a, b| {
            a.birth
                .total_cmp(&b.birth)
                .then(a.death.total_cmp(&b.death))
        });
        Self {
            dim: self.dim,
            pairs,
        }
    }

    /// Multiset equality, ignoring pair order.
    pub fn same_multiset(&self, other: &Self) -> bool {
        self.dim == other.dim && self.canonical().pairs == other.canonical().pairs
    }

    /// Drops pairs with `birth == death`.
    pub fn without_zero_persistence(&self) -> Self {
        Self {
            dim: self.dim,
            pairs: self
                .pairs
                .iter()
                .copied()
                .filter(|p| p.death != p.birth)
                .collect(),
        }
    }

    /// Text dump, one `dim birth death` line per pair, 9 significant digits.
    pub fn write_text<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for p in &self.pairs {
            writeln!(
                out,
                "{} {} {}",
                p.dim,
                format_significant(p.birth, 9),
                format_significant(p.death, 9)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Edge {
    pub(crate) u: usize,
    pub(crate) v: usize,
    pub(crate) value: f64,
}

/// All edges of `m` in filtration order.
pub(crate) fn sorted_edges(m: &DistanceMatrix) -> Vec<Edge> {
    let mut edges = Vec::with_capacity(m.d.len());
    for u in 0..m.n {
        for v in u + 1..m.n {
            edges.push(Edge {
                u,
                v,
                value: m.get(u, v),
            });
        }
    }
    // (u, v) is already lexicographic, so a stable sort on value suffices
    edges.sort_by(|a, b| a.value.total_cmp(&b.value));
    edges
}

/// Union-find sweep. Returns the diagram and, per sorted edge, whether that
/// edge merged two components.
fn zero_dim(m: &DistanceMatrix, edges: &[Edge]) -> (PersistenceDiagram, Vec<bool>) {
    let mut components = DisjointSet::new(m.n);
    let mut dgm = PersistenceDiagram::new(0);
    let mut merges = vec![false; edges.len()];
    for (e, merged) in edges.iter().zip(merges.iter_mut()) {
        if components.union(e.u, e.v) {
            dgm.push(0.0, e.value);
            *merged = true;
        }
    }
    dgm.push(0.0, ESSENTIAL_DEATH);
    (dgm, merges)
}

/// Dimension-0 diagram: one `(0, d)` pair per merge, plus the capped
/// essential class.
pub fn compute_h0(m: &DistanceMatrix) -> PersistenceDiagram {
    zero_dim(m, &sorted_edges(m)).0
}

/// Dimension-1 diagram of a filtered flag complex. Zero-persistence pairs
/// are kept.
pub fn compute_h1(fc: &FilteredComplex) -> PersistenceDiagram {
    let m = fc.distance_matrix();
    let edges = sorted_edges(&m);
    let (_, merges) = zero_dim(&m, &edges);
    cohomology::one_dim(&m, &edges, &merges)
}

/// Dimension-0 and dimension-1 diagrams of `m`, sharing one edge sort.
pub fn compute_diagrams(m: &DistanceMatrix) -> (PersistenceDiagram, PersistenceDiagram) {
    let edges = sorted_edges(m);
    let (h0, merges) = zero_dim(m, &edges);
    let h1 = cohomology::one_dim(m, &edges, &merges);
    (h0, h1)
}
