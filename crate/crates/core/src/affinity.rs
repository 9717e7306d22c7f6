//! Distance-weighted intra-class / inter-class KNN graphs, per-sample density
//! weights and margin-point flags.
//!
//! Neighbor sets come from one [`NeighborIndex`] over the full training set
//! and are split by label: same-label neighbors form the intra-class set,
//! opposite-label neighbors the inter-class set. A neighbor's weight is its
//! linear rank in distance between the owner's first and k-th neighbor,
//! see [`neighbor_weight`].

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::Label;
use crate::error::{Error, Result};
use crate::neighbors::NeighborIndex;

/// How graph edges are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WeightScheme {
    /// Linear distance weights in `[0, 1]`.
    #[default]
    Distance,
    /// Every neighbor relation counts 1 (neighbor counting).
    Binary,
}

/// `(d_k − d_i) / (d_k − d_1)`, or 1 when the first and k-th distances
/// coincide.
pub fn neighbor_weight(dist_to_i: f64, dist_to_first: f64, dist_to_kth: f64) -> Result<f64> {
    if !(dist_to_first <= dist_to_i && dist_to_i <= dist_to_kth) {
        return Err(Error::InvalidParameter(format!(
            "neighbor distances out of order: first {dist_to_first}, i {dist_to_i}, kth {dist_to_kth}"
        )));
    }
    if dist_to_kth == dist_to_first {
        return Ok(1.0);
    }
    Ok((dist_to_kth - dist_to_i) / (dist_to_kth - dist_to_first))
}

/// Weights of `j`'s neighbor list, one per rank.
fn list_weights(index: &NeighborIndex, j: usize, scheme: WeightScheme) -> Result<Vec<f64>> {
    let dist = index.distances(j);
    match scheme {
        WeightScheme::Binary => Ok(vec![1.0; dist.len()]),
        WeightScheme::Distance => {
            let (first, last) = (dist[0], dist[dist.len() - 1]);
            dist.iter().map(|&d| neighbor_weight(d, first, last)).collect()
        }
    }
}

fn check_index(index: &NeighborIndex, labels: &[Label]) -> Result<()> {
    if index.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: index.len(),
        });
    }
    Ok(())
}

/// Dense weight graphs for one target class.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGraph {
    /// `n_c × n_c`, symmetric, unit diagonal.
    pub intra: DMatrix<f64>,
    /// `n_c × n_other`; column `j` holds the weights of target samples inside
    /// the neighbor list of other-class sample `j`.
    pub inter: DMatrix<f64>,
    /// Training-set row of each target-class position.
    pub members: Vec<usize>,
    /// Training-set row of each other-class position.
    pub others: Vec<usize>,
}

pub fn build_weight_graphs(index: &NeighborIndex, labels: &[Label], target: Label) -> Result<WeightGraph> {
    build_weight_graphs_with(index, labels, target, WeightScheme::Distance)
}

pub fn build_weight_graphs_with(
    index: &NeighborIndex,
    labels: &[Label],
    target: Label,
    scheme: WeightScheme,
) -> Result<WeightGraph> {
    check_index(index, labels)?;
    let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == target).collect();
    let others: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != target).collect();
    if members.is_empty() {
        return Err(Error::ClassTooSmall {
            label: target.sign(),
            size: 0,
            required: 1,
        });
    }
    let mut slot = vec![usize::MAX; labels.len()];
    for (p, &i) in members.iter().enumerate() {
        slot[i] = p;
    }
    for (p, &i) in others.iter().enumerate() {
        slot[i] = p;
    }

    let mut intra = DMatrix::<f64>::identity(members.len(), members.len());
    for (pj, &j) in members.iter().enumerate() {
        let weights = list_weights(index, j, scheme)?;
        for (&i, &w) in index.neighbors(j).iter().zip(&weights) {
            if labels[i] == target && i != j {
                let pi = slot[i];
                // either membership sets the edge; the larger weight wins
                let v = intra[(pi, pj)].max(w);
                intra[(pi, pj)] = v;
                intra[(pj, pi)] = v;
            }
        }
    }

    let mut inter = DMatrix::<f64>::zeros(members.len(), others.len());
    for (pj, &j) in others.iter().enumerate() {
        let weights = list_weights(index, j, scheme)?;
        for (&i, &w) in index.neighbors(j).iter().zip(&weights) {
            if labels[i] == target {
                inter[(slot[i], pj)] = w;
            }
        }
    }

    Ok(WeightGraph {
        intra,
        inter,
        members,
        others,
    })
}

/// Per-class weights and the margin points of the opposite class.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityResult {
    /// Density weight of each target-class sample (column sums of the
    /// intra-class graph, so at least 1).
    pub weights: Vec<f64>,
    /// One flag per other-class sample: some inter-class weight is nonzero.
    pub margin_flags: Vec<bool>,
    pub margin_count: usize,
}

impl AffinityResult {
    /// Positions (within the other class) of the margin points.
    pub fn margin_positions(&self) -> Vec<usize> {
        self.margin_flags
            .iter()
            .enumerate()
            .filter_map(|(j, &f)| f.then_some(j))
            .collect()
    }

    /// `index,weight` rows for the target class followed by
    /// `index,margin_flag` rows for the other class; see
    /// [`AffinityResult::write_csv`].
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
        writeln!(out, "index,weight,margin_flag").map_err(io)?;
        let rows = self.weights.len().max(self.margin_flags.len());
        for i in 0..rows {
            let w = self.weights.get(i).map_or(String::new(), |w| format!("{w}"));
            let f = self
                .margin_flags
                .get(i)
                .map_or(String::new(), |&f| u8::from(f).to_string());
            writeln!(out, "{i},{w},{f}").map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

pub fn affinity_for_class(graph: &WeightGraph) -> AffinityResult {
    let weights: Vec<f64> = graph.intra.column_iter().map(|c| c.sum()).collect();
    let margin_flags: Vec<bool> = graph
        .inter
        .column_iter()
        .map(|c| c.iter().any(|&w| w != 0.0))
        .collect();
    let margin_count = margin_flags.iter().filter(|&&f| f).count();
    AffinityResult {
        weights,
        margin_flags,
        margin_count,
    }
}

/// Same result as `affinity_for_class(build_weight_graphs_with(..))`, computed
/// from the neighbor lists in `O(n·k)` memory instead of dense graphs.
pub fn class_affinity(
    index: &NeighborIndex,
    labels: &[Label],
    target: Label,
    scheme: WeightScheme,
) -> Result<AffinityResult> {
    check_index(index, labels)?;
    let n = labels.len();
    let mut slot = vec![usize::MAX; n];
    let (mut n_target, mut n_other) = (0, 0);
    for i in 0..n {
        if labels[i] == target {
            slot[i] = n_target;
            n_target += 1;
        } else {
            slot[i] = n_other;
            n_other += 1;
        }
    }
    if n_target == 0 {
        return Err(Error::ClassTooSmall {
            label: target.sign(),
            size: 0,
            required: 1,
        });
    }

    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut margin_flags = vec![false; n_other];
    for j in 0..n {
        let weights = list_weights(index, j, scheme)?;
        for (&i, &w) in index.neighbors(j).iter().zip(&weights) {
            if labels[j] == target {
                if labels[i] == target && i != j {
                    let (a, b) = if i < j { (i, j) } else { (j, i) };
                    edges.push((a, b, w));
                }
            } else if labels[i] == target && w != 0.0 {
                margin_flags[slot[j]] = true;
            }
        }
    }

    edges.sort_by_key(|x| (x.0, x.1));
    let mut weights = vec![1.0; n_target];
    let mut e = 0;
    while e < edges.len() {
        let (a, b, mut w) = edges[e];
        e += 1;
        while e < edges.len() && (edges[e].0, edges[e].1) == (a, b) {
            w = w.max(edges[e].2);
            e += 1;
        }
        weights[slot[a]] += w;
        weights[slot[b]] += w;
    }

    let margin_count = margin_flags.iter().filter(|&&f| f).count();
    Ok(AffinityResult {
        weights,
        margin_flags,
        margin_count,
    })
}
