//! Dimension-1 pairing by reduction of the coboundary matrix.
//!
//! Columns are edges taken in reverse filtration order, rows are triangles,
//! and the pivot of a column is its earliest triangle. This is the
//! anti-transpose of the boundary matrix restricted to edges and triangles,
//! so it yields the same persistence pairs as the boundary reduction. Edges
//! that merged two components are exactly the pivots of the vertex
//! coboundaries; their columns are cleared without being reduced.
//!
//! A reduced column is stored as the set of edges whose coboundaries sum to
//! it, not as its triangles. Reducing a column merges those sorted
//! coboundaries lazily and stops at the first surviving key, so long columns
//! are never materialized.
//!
//! A triangle is identified by a 64-bit key whose order is filtration order:
//! the dense rank of its value in the high bits, then its vertex tuple.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use super::{upper_index, DistanceMatrix, Edge, PersistenceDiagram, ESSENTIAL_DEATH};

const VERTEX_BITS: u32 = 9;

struct TriangleKeys {
    n: usize,
    /// Dense value rank of every edge, indexed like the upper triangle.
    edge_rank: Vec<u64>,
    /// Distinct edge values, ascending.
    values: Vec<f64>,
}

impl TriangleKeys {
    fn new(m: &DistanceMatrix, edges: &[Edge]) -> Self {
        let n = m.tokens();
        debug_assert!(n <= 1 << VERTEX_BITS);
        let mut edge_rank = vec![0u64; edges.len()];
        let mut values: Vec<f64> = Vec::new();
        for e in edges {
            if values.last() != Some(&e.value) {
                values.push(e.value);
            }
            edge_rank[upper_index(n, e.u, e.v)] = (values.len() - 1) as u64;
        }
        Self {
            n,
            edge_rank,
            values,
        }
    }

    fn rank(&self, i: usize, j: usize) -> u64 {
        self.edge_rank[upper_index(self.n, i, j)]
    }

    /// Key of triangle `a < b < c`.
    fn key(&self, a: usize, b: usize, c: usize) -> u64 {
        let rank = self.rank(a, b).max(self.rank(a, c)).max(self.rank(b, c));
        (rank << (3 * VERTEX_BITS))
            | ((a as u64) << (2 * VERTEX_BITS))
            | ((b as u64) << VERTEX_BITS)
            | c as u64
    }

    fn value(&self, key: u64) -> f64 {
        self.values[(key >> (3 * VERTEX_BITS)) as usize]
    }

    /// Writes the coboundary of edge `u < v` into `out`, unsorted.
    fn coboundary(&self, u: usize, v: usize, out: &mut Vec<u64>) {
        out.clear();
        out.extend((0..self.n).filter(|&w| w != u && w != v).map(|w| {
            if w < u {
                self.key(w, u, v)
            } else if w < v {
                self.key(u, w, v)
            } else {
                self.key(u, v, w)
            }
        }));
    }
}

/// Sorted coboundaries, computed on first use and indexed like the edge list.
struct CoboundaryCache<'a> {
    keys: &'a TriangleKeys,
    edges: &'a [Edge],
    sorted: Vec<Vec<u64>>,
}

impl<'a> CoboundaryCache<'a> {
    fn new(keys: &'a TriangleKeys, edges: &'a [Edge]) -> Self {
        Self {
            keys,
            edges,
            sorted: vec![Vec::new(); edges.len()],
        }
    }

    fn ensure(&mut self, index: usize) {
        if self.sorted[index].is_empty() {
            let e = &self.edges[index];
            let mut col = Vec::new();
            self.keys.coboundary(e.u, e.v, &mut col);
            col.sort_unstable();
            self.sorted[index] = col;
        }
    }
}

/// A column over the two-element field, kept as a sum of sorted
/// coboundaries that is merged lazily. Each summand has a cursor; the heap
/// holds the next key of every cursor, and equal keys cancel in pairs as the
/// merge passes them.
#[derive(Default)]
struct WorkingColumn {
    heap: BinaryHeap<Reverse<(u64, usize)>>,
    /// (edge index, position of the next unread key)
    cursors: Vec<(usize, usize)>,
}

impl WorkingColumn {
    fn clear(&mut self) {
        self.heap.clear();
        self.cursors.clear();
    }

    /// Adds the coboundary of edge `index`, skipping its keys up to and
    /// including `after`.
    fn add(&mut self, cache: &CoboundaryCache, index: usize, after: Option<u64>) {
        let col = &cache.sorted[index];
        let start = after.map_or(0, |p| col.partition_point(|&k| k <= p));
        if let Some(&key) = col.get(start) {
            self.heap.push(Reverse((key, self.cursors.len())));
            self.cursors.push((index, start + 1));
        }
    }

    fn advance(&mut self, cache: &CoboundaryCache, cursor: usize) {
        let (index, next) = &mut self.cursors[cursor];
        if let Some(&key) = cache.sorted[*index].get(*next) {
            *next += 1;
            self.heap.push(Reverse((key, cursor)));
        }
    }

    /// Consumes keys up to the earliest one of odd multiplicity and returns
    /// it. That key is consumed too, so a column added next must skip its own
    /// keys up to the returned one.
    fn pop_pivot(&mut self, cache: &CoboundaryCache) -> Option<u64> {
        while let Some(Reverse((key, cursor))) = self.heap.pop() {
            let mut odd = true;
            self.advance(cache, cursor);
            while let Some(&Reverse((next, other))) = self.heap.peek() {
                if next != key {
                    break;
                }
                self.heap.pop();
                self.advance(cache, other);
                odd = !odd;
            }
            if odd {
                return Some(key);
            }
        }
        None
    }
}

/// Sorts a list of edge indices and drops those that occur an even number of
/// times.
fn cancel_pairs(mut edges: Vec<usize>) -> Vec<usize> {
    edges.sort_unstable();
    let mut out = Vec::with_capacity(edges.len());
    for e in edges {
        if out.last() == Some(&e) {
            out.pop();
        } else {
            out.push(e);
        }
    }
    out
}

pub(super) fn one_dim(m: &DistanceMatrix, edges: &[Edge], merges: &[bool]) -> PersistenceDiagram {
    let mut dgm = PersistenceDiagram::new(1);
    if m.tokens() < 3 {
        return dgm;
    }
    let keys = TriangleKeys::new(m, edges);
    let mut cache = CoboundaryCache::new(&keys, edges);
    // pivot triangle -> index into `reductions`
    let mut owner: HashMap<u64, usize> = HashMap::new();
    // edges whose coboundaries sum to each reduced column
    let mut reductions: Vec<Vec<usize>> = Vec::new();
    let mut work = WorkingColumn::default();
    let mut scratch = Vec::with_capacity(m.tokens());

    for (index, e) in edges.iter().enumerate().rev() {
        if merges[index] {
            continue;
        }
        keys.coboundary(e.u, e.v, &mut scratch);
        let earliest = *scratch.iter().min().expect("at least one cofacet");
        if let Entry::Vacant(slot) = owner.entry(earliest) {
            slot.insert(reductions.len());
            reductions.push(vec![index]);
            dgm.push(e.value, keys.value(earliest));
            continue;
        }
        work.clear();
        cache.ensure(index);
        work.add(&cache, index, None);
        let mut reduction = vec![index];
        loop {
            let Some(pivot) = work.pop_pivot(&cache) else {
                // a cycle that is never filled; cannot happen in a full flag complex
                dgm.push(e.value, ESSENTIAL_DEATH);
                break;
            };
            match owner.get(&pivot) {
                Some(&other) => {
                    for &f in &reductions[other] {
                        cache.ensure(f);
                        work.add(&cache, f, Some(pivot));
                        reduction.push(f);
                    }
                }
                None => {
                    owner.insert(pivot, reductions.len());
                    reductions.push(cancel_pairs(reduction));
                    dgm.push(e.value, keys.value(pivot));
                    break;
                }
            }
        }
    }
    dgm.canonical()
}
