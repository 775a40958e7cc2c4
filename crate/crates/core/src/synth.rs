//! Stochastic-block-model dataset generator for desk-scale experiments:
//! class-contiguous nodes, Bernoulli block edges (geometric skip sampling, so
//! cost is O(E) not O(n²)), Gaussian features around per-class means, a
//! stratified train/val/test split, and a stratified batch stream.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::{stratified_batches, BatchStream, LabelSet, SparseGraph, StreamMode};
use crate::rng::SeedDomain;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Recipe for one synthetic dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    /// Training-graph block sizes; length is the class count.
    pub nodes_per_class: Vec<usize>,
    pub dim: usize,
    /// Within-class edge probability.
    pub p_in: f64,
    /// Across-class edge probability.
    pub p_out: f64,
    /// Feature noise σ around the class mean.
    pub noise: f64,
    /// Scale applied to the default ±1 class-mean pattern.
    pub mean_scale: f64,
    /// Explicit per-class mean vectors; when absent, class k gets the sign
    /// pattern (−1)^{bit j mod B of k} · mean_scale across dimensions, which
    /// for two classes is the antipodal all-(+1) / all-(−1) pair.
    pub class_means: Option<Vec<Vec<f64>>>,
    pub train_fraction: f64,
    pub val_fraction: f64,
    /// Number of stream batches carved out of the train split.
    pub batches: usize,
    pub mode: StreamMode,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            nodes_per_class: vec![100, 100],
            dim: 4,
            p_in: 0.5,
            p_out: 0.01,
            noise: 0.1,
            mean_scale: 1.0,
            class_means: None,
            train_fraction: 0.6,
            val_fraction: 0.2,
            batches: 5,
            mode: StreamMode::Transductive,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn num_nodes(&self) -> usize {
        self.nodes_per_class.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_class.is_empty() || self.nodes_per_class.iter().any(|&n| n == 0) {
            return Err(Error::Config(
                "every class needs at least one node".into(),
            ));
        }
        if self.dim == 0 {
            return Err(Error::Config("feature dimension must be positive".into()));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if self.noise < 0.0 || !self.noise.is_finite() {
            return Err(Error::Config(format!("noise σ = {} must be ≥ 0", self.noise)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "train fraction {} outside (0, 1]",
                self.train_fraction
            )));
        }
        if self.val_fraction < 0.0 || self.train_fraction + self.val_fraction > 1.0 {
            return Err(Error::Config(format!(
                "train {} + val {} exceeds 1",
                self.train_fraction, self.val_fraction
            )));
        }
        if self.batches == 0 {
            return Err(Error::Config("batch count must be at least 1".into()));
        }
        if let Some(means) = &self.class_means {
            if means.len() != self.nodes_per_class.len()
                || means.iter().any(|m| m.len() != self.dim)
            {
                return Err(Error::Config(format!(
                    "class means must be {} vectors of length {}",
                    self.nodes_per_class.len(),
                    self.dim
                )));
            }
        }
        Ok(())
    }

    /// The per-class mean vectors actually used.
    pub fn resolved_means(&self) -> Vec<Vec<f64>> {
        if let Some(means) = &self.class_means {
            return means.clone();
        }
        let c = self.nodes_per_class.len();
        let bits = usize::BITS - (c.max(2) - 1).leading_zeros(); // ceil(log2 c), ≥ 1
        (0..c)
            .map(|k| {
                (0..self.dim)
                    .map(|j| {
                        let bit = (k >> (j as u32 % bits)) & 1;
                        if bit == 0 { self.mean_scale } else { -self.mean_scale }
                    })
                    .collect()
            })
            .collect()
    }
}

/// A generated dataset plus the mean vectors used, for oracle checks.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub graph: SparseGraph,
    pub features: FeatureMatrix,
    pub labels: LabelSet,
    pub stream: BatchStream,
    pub class_means: Vec<Vec<f64>>,
}

/// Emits `count` successes of a Bernoulli(p) sequence of length `len` via
/// geometric gaps, visiting only the successes.
fn bernoulli_hits<R: Rng>(len: usize, p: f64, rng: &mut R, mut emit: impl FnMut(usize)) {
    if len == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        (0..len).for_each(emit);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut i: i64 = -1;
    loop {
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let gap = (u.ln() / log_q).floor() as i64;
        i += gap + 1;
        if i >= len as i64 {
            return;
        }
        emit(i as usize);
    }
}

/// Generates the dataset deterministically from the spec's seed; edges,
/// features, splits, and the batch stream draw from independent streams, so
/// changing σ never reshuffles the graph.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let dom = SeedDomain::new(spec.seed);
    let n = spec.num_nodes();
    let c = spec.nodes_per_class.len();

    // Class-contiguous layout: class k owns [offsets[k], offsets[k+1]).
    let mut offsets = Vec::with_capacity(c + 1);
    offsets.push(0usize);
    for &nk in &spec.nodes_per_class {
        offsets.push(offsets.last().unwrap() + nk);
    }
    let classes: Vec<usize> = (0..c)
        .flat_map(|k| std::iter::repeat(k).take(spec.nodes_per_class[k]))
        .collect();

    // Edges: for row u only columns v > u are sampled (symmetrized later).
    // That leaves at most two homogeneous segments per row: the tail of u's
    // own block at p_in, then everything after the block at p_out.
    let mut rng_edges = dom.synth(0);
    let mut edges = Vec::new();
    for u in 0..n {
        let block_end = offsets[classes[u] + 1];
        let in_len = block_end - (u + 1);
        bernoulli_hits(in_len, spec.p_in, &mut rng_edges, |i| {
            edges.push((u, u + 1 + i));
        });
        let out_len = n - block_end;
        bernoulli_hits(out_len, spec.p_out, &mut rng_edges, |i| {
            edges.push((u, block_end + i));
        });
    }
    let graph = SparseGraph::from_edges(n, &edges)?;

    // Features: class mean plus isotropic Gaussian noise.
    let means = spec.resolved_means();
    let mut rng_feat = dom.synth(1);
    let mut features = FeatureMatrix::zeros(n, spec.dim);
    for i in 0..n {
        let mean = &means[classes[i]];
        let row = features.row_mut(i);
        for (j, slot) in row.iter_mut().enumerate() {
            let z: f64 = rng_feat.sample(StandardNormal);
            *slot = mean[j] + spec.noise * z;
        }
    }

    // Stratified split: per class, shuffled then cut at rounded fractions.
    let mut rng_split = dom.synth(2);
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for k in 0..c {
        let mut members: Vec<usize> = (offsets[k]..offsets[k + 1]).collect();
        members.shuffle(&mut rng_split);
        let n_k = members.len();
        let n_train = ((n_k as f64 * spec.train_fraction).round() as usize)
            .clamp(1, n_k);
        let n_val = ((n_k as f64 * spec.val_fraction).round() as usize).min(n_k - n_train);
        train.extend_from_slice(&members[..n_train]);
        val.extend_from_slice(&members[n_train..n_train + n_val]);
        test.extend_from_slice(&members[n_train + n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    let labels = LabelSet {
        labels: classes,
        num_classes: c,
        train_idx: train,
        val_idx: val,
        test_idx: test,
    };
    labels.validate(n)?;
    labels.check_class_coverage(&labels.train_idx)?;

    let mut rng_batches = dom.synth(3);
    let batches = stratified_batches(&labels, &labels.train_idx, spec.batches, &mut rng_batches)?;
    let stream = BatchStream {
        mode: spec.mode,
        batches,
    };
    stream.validate(n)?;

    Ok(SyntheticDataset {
        graph,
        features,
        labels,
        stream,
        class_means: means,
    })
}
