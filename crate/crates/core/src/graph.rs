//! Sparse graph representation, label/split bookkeeping, and evolving
//! snapshot assembly from batch streams.
//!
//! Graphs are stored symmetrized in CSR form with unit (or normalized) edge
//! weights. The evolving setting is additive-only: a batch stream either
//! progressively reveals training labels on a fixed graph (transductive) or
//! progressively adds nodes and their induced edges (inductive).

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

/// Symmetric CSR adjacency. Every stored (u,v) has a mirrored (v,u) with the
/// same weight; self-loops appear only in normalized graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    edge_values: Vec<f64>,
}

impl SparseGraph {
    /// Builds a symmetrized, deduplicated, unit-weight CSR from an edge list.
    /// Self-loops in the input are dropped (normalization re-adds them), and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut pairs = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Bounds(format!(
                    "edge ({u}, {v}) exceeds node count {num_nodes}"
                )));
            }
            if u == v {
                continue;
            }
            pairs.push((u, v));
            pairs.push((v, u));
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Self::from_sorted_pairs(num_nodes, &pairs, 1.0))
    }

    /// Assembles CSR from sorted, deduplicated (row, col) pairs with one
    /// shared weight.
    fn from_sorted_pairs(num_nodes: usize, pairs: &[(usize, usize)], weight: f64) -> Self {
        let mut row_offsets = vec![0usize; num_nodes + 1];
        for &(u, _) in pairs {
            row_offsets[u + 1] += 1;
        }
        for i in 0..num_nodes {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices: Vec<usize> = pairs.iter().map(|&(_, v)| v).collect();
        let edge_values = vec![weight; col_indices.len()];
        SparseGraph {
            num_nodes,
            row_offsets,
            col_indices,
            edge_values,
        }
    }

    /// Builds directly from CSR parts; used by normalization, which produces
    /// per-entry weights. Validates the structural invariants.
    pub fn from_csr(
        num_nodes: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        edge_values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != num_nodes + 1 {
            return Err(Error::Dimension(format!(
                "row_offsets length {} != num_nodes+1 = {}",
                row_offsets.len(),
                num_nodes + 1
            )));
        }
        if *row_offsets.last().unwrap_or(&0) != col_indices.len()
            || col_indices.len() != edge_values.len()
        {
            return Err(Error::Dimension(
                "CSR arrays disagree on stored entry count".into(),
            ));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Internal("row_offsets must be non-decreasing".into()));
        }
        if col_indices.iter().any(|&c| c >= num_nodes) {
            return Err(Error::Bounds("column index exceeds node count".into()));
        }
        Ok(SparseGraph {
            num_nodes,
            row_offsets,
            col_indices,
            edge_values,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of stored directed entries (twice the undirected edge count for
    /// loop-free graphs).
    pub fn num_entries(&self) -> usize {
        self.col_indices.len()
    }

    /// Number of undirected edges, counting a self-loop as one edge.
    pub fn num_edges(&self) -> usize {
        let loops = (0..self.num_nodes)
            .filter(|&u| self.neighbors(u).0.contains(&u))
            .count();
        (self.num_entries() - loops) / 2 + loops
    }

    /// Neighbor ids and weights of `u`, ascending by id.
    pub fn neighbors(&self, u: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[u];
        let hi = self.row_offsets[u + 1];
        (&self.col_indices[lo..hi], &self.edge_values[lo..hi])
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row_offsets[u + 1] - self.row_offsets[u]
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn edge_values(&self) -> &[f64] {
        &self.edge_values
    }

    /// Undirected edge list with u ≤ v, ascending; inverse of `from_edges` up
    /// to ordering (self-loops, present only in normalized graphs, appear as
    /// u == v).
    pub fn to_edge_list(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_entries() / 2);
        for u in 0..self.num_nodes {
            let (cols, _) = self.neighbors(u);
            for &v in cols {
                if u <= v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Induced subgraph on `nodes` (must be sorted ascending, deduplicated).
    /// Returns the subgraph plus the remap table `remap[new] = old`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<(SparseGraph, Vec<usize>)> {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        let mut old_to_new = vec![usize::MAX; self.num_nodes];
        for (new, &old) in nodes.iter().enumerate() {
            if old >= self.num_nodes {
                return Err(Error::Bounds(format!(
                    "subgraph node {old} exceeds node count {}",
                    self.num_nodes
                )));
            }
            old_to_new[old] = new;
        }
        let mut pairs = Vec::new();
        for (new_u, &old_u) in nodes.iter().enumerate() {
            let (cols, _) = self.neighbors(old_u);
            for &old_v in cols {
                let new_v = old_to_new[old_v];
                if new_v != usize::MAX {
                    pairs.push((new_u, new_v));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok((
            Self::from_sorted_pairs(nodes.len(), &pairs, 1.0),
            nodes.to_vec(),
        ))
    }

    /// FNV-1a over the CSR arrays; keys the propagation cache.
    pub fn content_hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        eat(&(self.num_nodes as u64).to_le_bytes());
        for &v in &self.row_offsets {
            eat(&(v as u64).to_le_bytes());
        }
        for &v in &self.col_indices {
            eat(&(v as u64).to_le_bytes());
        }
        for &v in &self.edge_values {
            eat(&v.to_bits().to_le_bytes());
        }
        h
    }
}

/// Node labels in {0..c−1} plus train/val/test index arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl LabelSet {
    /// Validates bounds, label range, and split disjointness against a node
    /// count.
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        if self.labels.len() != num_nodes {
            return Err(Error::Dimension(format!(
                "{} labels for {num_nodes} nodes",
                self.labels.len()
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&y| y >= self.num_classes) {
            return Err(Error::Bounds(format!(
                "label {bad} outside 0..{}",
                self.num_classes
            )));
        }
        let mut seen = vec![0u8; num_nodes];
        for (name, idx) in [
            ("train", &self.train_idx),
            ("val", &self.val_idx),
            ("test", &self.test_idx),
        ] {
            for &i in idx {
                if i >= num_nodes {
                    return Err(Error::Bounds(format!(
                        "{name} index {i} exceeds node count {num_nodes}"
                    )));
                }
                if seen[i] != 0 {
                    return Err(Error::Config(format!(
                        "node {i} appears in more than one split"
                    )));
                }
                seen[i] = 1;
            }
        }
        Ok(())
    }

    /// Checks that every class has at least one representative in `idx`;
    /// required of the training set at every evaluated step.
    pub fn check_class_coverage(&self, idx: &[usize]) -> Result<()> {
        let mut present = vec![false; self.num_classes];
        for &i in idx {
            present[self.labels[i]] = true;
        }
        if let Some(missing) = present.iter().position(|&p| !p) {
            return Err(Error::Config(format!(
                "class {missing} has no training node at this step"
            )));
        }
        Ok(())
    }

    /// Splits `idx` into per-class member lists, each preserving the order of
    /// `idx`.
    pub fn class_members(&self, idx: &[usize]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for &i in idx {
            out[self.labels[i]].push(i);
        }
        out
    }

    /// One-hot label matrix over the given node ids (row order follows `idx`).
    pub fn one_hot(&self, idx: &[usize]) -> FeatureMatrix {
        let mut m = FeatureMatrix::zeros(idx.len(), self.num_classes);
        for (row, &i) in idx.iter().enumerate() {
            m.set(row, self.labels[i], 1.0);
        }
        m
    }
}

/// Whether a batch stream reveals labels on a fixed graph or grows the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamMode {
    Transductive,
    Inductive,
}

/// An ordered stream of pairwise-disjoint node batches.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BatchStream {
    pub mode: StreamMode,
    pub batches: Vec<Vec<usize>>,
}

impl BatchStream {
    /// Validates disjointness and node bounds.
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = vec![false; num_nodes];
        for (b, batch) in self.batches.iter().enumerate() {
            for &i in batch {
                if i >= num_nodes {
                    return Err(Error::Bounds(format!(
                        "batch {b} references node {i}, graph has {num_nodes}"
                    )));
                }
                if seen[i] {
                    return Err(Error::Config(format!(
                        "node {i} appears in more than one batch"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    /// Sorted union of batches 1..=t (1-based step index).
    pub fn union_through(&self, t: usize) -> Result<Vec<usize>> {
        if t == 0 || t > self.batches.len() {
            return Err(Error::Bounds(format!(
                "step {t} outside 1..={}",
                self.batches.len()
            )));
        }
        let mut out: Vec<usize> = self.batches[..t].iter().flatten().copied().collect();
        out.sort_unstable();
        Ok(out)
    }
}

/// One step of an evolving graph: the visible graph, its features and labels,
/// and (inductive only) the new-to-original index remap.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub graph: SparseGraph,
    pub features: FeatureMatrix,
    pub labels: LabelSet,
    /// `remap[new] = original`; `None` in transductive mode where indices are
    /// unchanged.
    pub remap: Option<Vec<usize>>,
}

/// Assembles the step-`t` snapshot (1-based). Transductive: graph and
/// features pass through, the training split becomes the union of batches
/// 1..=t. Inductive: the node set is that union, edges are the induced
/// subgraph, and all indices are remapped to 0..n_t−1.
pub fn snapshot(
    full: &SparseGraph,
    features: &FeatureMatrix,
    labels: &LabelSet,
    stream: &BatchStream,
    t: usize,
) -> Result<Snapshot> {
    let visible = stream.union_through(t)?;
    match stream.mode {
        StreamMode::Transductive => {
            let mut labels_t = labels.clone();
            labels_t.train_idx = visible;
            Ok(Snapshot {
                graph: full.clone(),
                features: features.clone(),
                labels: labels_t,
                remap: None,
            })
        }
        StreamMode::Inductive => {
            let (graph_t, remap) = full.induced_subgraph(&visible)?;
            let mut old_to_new = vec![usize::MAX; full.num_nodes()];
            for (new, &old) in remap.iter().enumerate() {
                old_to_new[old] = new;
            }
            let remap_split = |split: &[usize]| -> Vec<usize> {
                let mut out: Vec<usize> = split
                    .iter()
                    .filter_map(|&old| {
                        let new = old_to_new[old];
                        (new != usize::MAX).then_some(new)
                    })
                    .collect();
                out.sort_unstable();
                out
            };
            let labels_t = LabelSet {
                labels: remap.iter().map(|&old| labels.labels[old]).collect(),
                num_classes: labels.num_classes,
                train_idx: remap_split(&labels.train_idx),
                val_idx: remap_split(&labels.val_idx),
                test_idx: remap_split(&labels.test_idx),
            };
            Ok(Snapshot {
                graph: graph_t,
                features: features.select_rows(&remap),
                labels: labels_t,
                remap: Some(remap),
            })
        }
    }
}

/// Splits `pool` into `m` random batches, class-stratified so every prefix
/// union stays within one node of exact per-class proportionality. Per class
/// the members are shuffled, then batch t receives the slice between the
/// rounded cumulative quotas round(t·n_k/m) and round((t−1)·n_k/m); each batch
/// therefore gets the floor or ceiling of n_k/m, and every snapshot's class
/// counts deviate from t·n_k/m by at most 1/2. Batches are sorted ascending.
pub fn stratified_batches<R: Rng>(
    labels: &LabelSet,
    pool: &[usize],
    m: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if m == 0 {
        return Err(Error::Config("batch count must be at least 1".into()));
    }
    let mut batches = vec![Vec::new(); m];
    for mut members in labels.class_members(pool) {
        members.shuffle(rng);
        let n_k = members.len();
        // round(t·n_k/m) in exact integer arithmetic: floor((2·t·n_k + m) / 2m).
        let quota = |t: usize| (2 * t * n_k + m) / (2 * m);
        for (t, batch) in batches.iter_mut().enumerate() {
            batch.extend_from_slice(&members[quota(t)..quota(t + 1)]);
        }
    }
    for batch in &mut batches {
        batch.sort_unstable();
    }
    Ok(batches)
}
