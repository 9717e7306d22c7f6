//! k-nearest-neighbor search: exhaustive full search (FSA) and the
//! reference-point location-difference approximation (LDMDBA).
//!
//! Both searches order neighbors by ascending distance with ties broken by the
//! lower sample index, and never return a sample as its own neighbor.

use std::cmp::Ordering;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::{sq_dist, KernelSpec, Rows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KnnAlgorithm {
    Fsa,
    Ldmdba,
}

impl KnnAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            KnnAlgorithm::Fsa => "fsa",
            KnnAlgorithm::Ldmdba => "ldmdba",
        }
    }
}

/// Metric the neighbors are measured in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchSpace {
    Input,
    /// `‖φ(x) − φ(y)‖` for the kernel's feature map.
    Kernel(KernelSpec),
}

impl SearchSpace {
    #[inline]
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            SearchSpace::Input => sq_dist(x, y).sqrt(),
            SearchSpace::Kernel(spec) => spec.feature_distance(x, y),
        }
    }
}

/// `k` neighbors per sample, stored row-major (`n × k`).
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborIndex {
    pub k: usize,
    pub algorithm: KnnAlgorithm,
    pub space: SearchSpace,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborIndex {
    pub fn len(&self) -> usize {
        self.indices.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Neighbor indices of sample `j`, nearest first.
    pub fn neighbors(&self, j: usize) -> &[usize] {
        &self.indices[j * self.k..(j + 1) * self.k]
    }

    /// Distances matching [`NeighborIndex::neighbors`].
    pub fn distances(&self, j: usize) -> &[f64] {
        &self.distances[j * self.k..(j + 1) * self.k]
    }

    /// Builds an index from explicit per-sample lists; every list must hold
    /// exactly `k` entries.
    pub fn from_lists(
        k: usize,
        lists: Vec<Vec<(usize, f64)>>,
        algorithm: KnnAlgorithm,
        space: SearchSpace,
    ) -> Result<Self> {
        let mut indices = Vec::with_capacity(lists.len() * k);
        let mut distances = Vec::with_capacity(lists.len() * k);
        for list in lists {
            if list.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: list.len(),
                });
            }
            for (i, d) in list {
                indices.push(i);
                distances.push(d);
            }
        }
        Ok(NeighborIndex {
            k,
            algorithm,
            space,
            indices,
            distances,
        })
    }

    /// `sample_index,rank,neighbor_index,distance` with a header row.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
        writeln!(out, "sample_index,rank,neighbor_index,distance").map_err(io)?;
        for j in 0..self.len() {
            for (rank, (&i, &d)) in self.neighbors(j).iter().zip(self.distances(j)).enumerate() {
                writeln!(out, "{j},{rank},{i},{d}").map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }
}

#[inline]
fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("neighbor count k must be at least 1".into()));
    }
    if k >= n {
        return Err(Error::TooManyNeighbors { k, n });
    }
    Ok(())
}

fn assemble(k: usize, lists: Vec<Vec<(f64, usize)>>, algorithm: KnnAlgorithm, space: SearchSpace) -> NeighborIndex {
    let mut indices = Vec::with_capacity(lists.len() * k);
    let mut distances = Vec::with_capacity(lists.len() * k);
    for list in lists {
        for (d, i) in list {
            indices.push(i);
            distances.push(d);
        }
    }
    NeighborIndex {
        k,
        algorithm,
        space,
        indices,
        distances,
    }
}

/// Exact k-NN: for every sample the full distance row is computed and the
/// `k` smallest entries other than the sample are kept, in order.
pub fn knn_fsa(data: &DMatrix<f64>, k: usize, space: SearchSpace) -> Result<NeighborIndex> {
    knn_fsa_with(data, k, space, Execution::default())
}

pub fn knn_fsa_with(data: &DMatrix<f64>, k: usize, space: SearchSpace, exec: Execution) -> Result<NeighborIndex> {
    let n = data.nrows();
    check_k(n, k)?;
    let rows = Rows::new(data);
    let lists = exec.map(n, |j| {
        let x = rows.row(j);
        let mut row: Vec<(f64, usize)> = (0..n)
            .filter(|&i| i != j)
            .map(|i| (space.distance(x, rows.row(i)), i))
            .collect();
        // the order is total, so selecting first keeps the exact result
        if k < row.len() {
            row.select_nth_unstable_by(k, by_distance_then_index);
            row.truncate(k);
        }
        row.sort_by(by_distance_then_index);
        row
    });
    Ok(assemble(k, lists, KnnAlgorithm::Fsa, space))
}

/// Reference points and window size used by [`knn_ldmdba`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePointPlan {
    /// Point `i` (zero-based) has its first `i + 1` coordinates at -1 and the
    /// rest at +1.
    pub points: Vec<Vec<f64>>,
    /// Positions examined on each side of a sample in the sorted sequence.
    pub subsequence_halfwidth: usize,
}

impl ReferencePointPlan {
    /// `ceil(log2 d)` points (at least one) and a half-window of
    /// `ceil(k · log2(log2 n))` positions. The log-log factor is floored at 1
    /// so tiny sets (n < 4) still get a window of `k`.
    pub fn new(n: usize, d: usize, k: usize) -> Self {
        let count = if d <= 1 {
            1
        } else {
            ((d as f64).log2().ceil() as usize).max(1)
        };
        let points = (0..count)
            .map(|i| (0..d).map(|c| if c <= i { -1.0 } else { 1.0 }).collect())
            .collect();
        let eps = if n >= 4 { (n as f64).log2().log2() } else { 1.0 };
        let subsequence_halfwidth = ((k as f64) * eps).ceil() as usize;
        ReferencePointPlan {
            points,
            subsequence_halfwidth,
        }
    }
}

/// Approximate k-NN by location difference to reference points.
///
/// For each reference point the samples are sorted by their distance to it;
/// a sample's candidates are the samples within `subsequence_halfwidth`
/// positions of it in that order (truncated at both ends). Candidates from
/// all reference points are unioned and the `k` with the smallest exact
/// distance are returned.
pub fn knn_ldmdba(data: &DMatrix<f64>, k: usize, space: SearchSpace) -> Result<NeighborIndex> {
    knn_ldmdba_with(data, k, space, Execution::default())
}

pub fn knn_ldmdba_with(data: &DMatrix<f64>, k: usize, space: SearchSpace, exec: Execution) -> Result<NeighborIndex> {
    let (n, d) = data.shape();
    check_k(n, k)?;
    let rows = Rows::new(data);
    let plan = ReferencePointPlan::new(n, d, k);
    let h = plan.subsequence_halfwidth;

    // (sorted order, position of each sample in it) per reference point
    let sequences: Vec<(Vec<usize>, Vec<usize>)> = plan
        .points
        .iter()
        .map(|reference| {
            let dist = exec.map(n, |j| space.distance(rows.row(j), reference));
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
            let mut position = vec![0; n];
            for (p, &j) in order.iter().enumerate() {
                position[j] = p;
            }
            (order, position)
        })
        .collect();

    let lists = exec.map(n, |j| {
        let mut candidates = Vec::with_capacity(sequences.len() * (2 * h + 1));
        for (order, position) in &sequences {
            let p = position[j];
            let lo = p.saturating_sub(h);
            let hi = (p + h).min(n - 1);
            candidates.extend(order[lo..=hi].iter().copied().filter(|&i| i != j));
        }
        candidates.sort_unstable();
        candidates.dedup();
        let x = rows.row(j);
        let mut scored: Vec<(f64, usize)> = candidates
            .into_iter()
            .map(|i| (space.distance(x, rows.row(i)), i))
            .collect();
        scored.sort_by(by_distance_then_index);
        scored.truncate(k);
        scored
    });
    Ok(assemble(k, lists, KnnAlgorithm::Ldmdba, space))
}

pub fn knn_search(
    data: &DMatrix<f64>,
    k: usize,
    space: SearchSpace,
    algorithm: KnnAlgorithm,
    exec: Execution,
) -> Result<NeighborIndex> {
    match algorithm {
        KnnAlgorithm::Fsa => knn_fsa_with(data, k, space, exec),
        KnnAlgorithm::Ldmdba => knn_ldmdba_with(data, k, space, exec),
    }
}

/// Mean over samples of `|approx ∩ exact| / k`.
pub fn knn_recall(approx: &NeighborIndex, exact: &NeighborIndex) -> Result<f64> {
    if approx.k != exact.k {
        return Err(Error::DimensionMismatch {
            expected: exact.k,
            found: approx.k,
        });
    }
    if approx.len() != exact.len() {
        return Err(Error::DimensionMismatch {
            expected: exact.len(),
            found: approx.len(),
        });
    }
    let n = exact.len();
    if n == 0 {
        return Ok(1.0);
    }
    let hits: usize = (0..n)
        .map(|j| {
            let truth = exact.neighbors(j);
            approx.neighbors(j).iter().filter(|i| truth.contains(i)).count()
        })
        .sum();
    Ok(hits as f64 / (n * exact.k) as f64)
}
