//! Evolving condensation: as batches of nodes arrive, each step condenses
//! the current snapshot while warm-starting from the previous step's
//! centroids, growing the centroid set by distance-weighted seeds drawn from
//! the newly arrived training rows. Step 1 has no prior and is bit-identical
//! to a static condensation of the first snapshot.

use crate::clustering::ClusterConfig;
use crate::condense::{condense_with, CondenseOptions, CondenseReport, CondensedGraph, WarmSource};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::{snapshot, BatchStream, LabelSet, SparseGraph, StreamMode};
use crate::propagation::{PropagationCache, PropagationConfig};

/// Whether a ledger row's class was refined from prior centroids or seeded
/// from scratch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    Warm,
    Cold,
}

impl StepMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepMode::Warm => "warm",
            StepMode::Cold => "cold",
        }
    }
}

/// One ledger row: the clustering outcome of one class at one step.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub class: usize,
    pub mode: StepMode,
    pub iterations: usize,
    pub j: f64,
    pub sse: f64,
    pub penalty: f64,
    /// Propagation wall-clock of the step; identical across the step's rows.
    pub seconds_propagate: f64,
    pub seconds_cluster: f64,
    /// Centroids this class contributes at this step.
    pub condensed_size: usize,
}

/// Carry-over between steps: the step counter, per-class prior centroids,
/// and the accumulated ledger.
#[derive(Debug, Clone)]
pub struct EvolveState {
    /// Completed steps; the next call processes step `step + 1`.
    pub step: usize,
    /// Per-class centroids from the latest completed step, in
    /// propagated-feature space. Empty matrices before step 1.
    pub prior: Vec<FeatureMatrix>,
    pub ledger: Vec<StepRecord>,
    pub cache_hits: usize,
    pub cache_misses: usize,
}

impl EvolveState {
    pub fn new(num_classes: usize) -> Self {
        EvolveState {
            step: 0,
            prior: vec![FeatureMatrix::zeros(0, 0); num_classes],
            ledger: Vec::new(),
            cache_hits: 0,
            cache_misses: 0,
        }
    }
}

/// The full evolving dataset a stream walks over.
#[derive(Debug, Clone, Copy)]
pub struct EvolveInputs<'a> {
    pub graph: &'a SparseGraph,
    pub features: &'a FeatureMatrix,
    pub labels: &'a LabelSet,
    pub stream: &'a BatchStream,
}

/// Training nodes that arrive exactly at step `t`, expressed as indices into
/// the step-`t` snapshot.
fn new_train_rows(
    inp: &EvolveInputs,
    snap_remap: &Option<Vec<usize>>,
    t: usize,
) -> Result<Vec<usize>> {
    let batch = &inp.stream.batches[t - 1];
    match inp.stream.mode {
        // Transductive batches are training nodes by definition, and the
        // snapshot keeps original indices.
        StreamMode::Transductive => Ok(batch.clone()),
        // Inductive batches may also carry val/test nodes; keep the training
        // ones and translate them into the remapped snapshot space.
        StreamMode::Inductive => {
            let remap = snap_remap
                .as_ref()
                .ok_or_else(|| Error::Internal("inductive snapshot lost its remap".into()))?;
            let mut old_to_new = vec![usize::MAX; inp.graph.num_nodes()];
            for (new, &old) in remap.iter().enumerate() {
                old_to_new[old] = new;
            }
            let mut is_train = vec![false; inp.graph.num_nodes()];
            for &i in &inp.labels.train_idx {
                is_train[i] = true;
            }
            let mut rows: Vec<usize> = batch
                .iter()
                .filter(|&&old| is_train[old])
                .map(|&old| old_to_new[old])
                .collect();
            if rows.iter().any(|&r| r == usize::MAX) {
                return Err(Error::Internal(
                    "batch node missing from its own snapshot".into(),
                ));
            }
            rows.sort_unstable();
            Ok(rows)
        }
    }
}

/// Processes the next step of the stream: assemble the snapshot, condense it
/// (warm-started from `state.prior` when requested), then update the state's
/// priors and ledger. Returns the step's condensed graph and report.
pub fn evolve_step(
    state: &mut EvolveState,
    inp: &EvolveInputs,
    cfg_prop: &PropagationConfig,
    cfg_clust: &ClusterConfig,
    warm_start: bool,
    cache: &mut PropagationCache,
) -> Result<(CondensedGraph, CondenseReport)> {
    let t = state.step + 1;
    if t > inp.stream.len() {
        return Err(Error::Bounds(format!(
            "step {t} exceeds stream length {}",
            inp.stream.len()
        )));
    }
    if state.prior.len() != inp.labels.num_classes {
        return Err(Error::Dimension(format!(
            "state tracks {} classes, labels have {}",
            state.prior.len(),
            inp.labels.num_classes
        )));
    }
    let snap = snapshot(inp.graph, inp.features, inp.labels, inp.stream, t)?;

    let warm = if warm_start && state.prior.iter().any(|p| p.rows() > 0) {
        let members = snap
            .labels
            .class_members(&new_train_rows(inp, &snap.remap, t)?);
        Some(WarmSource {
            prior: state.prior.clone(),
            new_train_rows: members,
        })
    } else {
        None
    };
    let opts = CondenseOptions {
        step: t,
        warm,
        node_ids: snap.remap.clone(),
    };
    let (cg, report) = condense_with(
        &snap.graph,
        &snap.features,
        &snap.labels,
        cfg_prop,
        cfg_clust,
        opts,
        Some(cache),
    )?;

    for cr in &report.per_class {
        state.ledger.push(StepRecord {
            step: t,
            class: cr.class,
            mode: if cr.warm { StepMode::Warm } else { StepMode::Cold },
            iterations: cr.iterations,
            j: cr.j,
            sse: cr.sse,
            penalty: cr.penalty,
            seconds_propagate: report.seconds_propagate,
            seconds_cluster: cr.seconds_cluster,
            condensed_size: cr.m_k,
        });
    }
    for class in 0..inp.labels.num_classes {
        state.prior[class] = cg.class_block(class);
    }
    state.step = t;
    state.cache_hits = cache.hits();
    state.cache_misses = cache.misses();
    Ok((cg, report))
}

/// Runs every step of the stream in order, sharing one propagation cache.
/// With `warm_start` false each step is an independent cold condensation of
/// its snapshot — bit-identical to calling the static path at the same step
/// coordinate.
pub fn run_stream(
    inp: &EvolveInputs,
    cfg_prop: &PropagationConfig,
    cfg_clust: &ClusterConfig,
    warm_start: bool,
) -> Result<(Vec<CondensedGraph>, EvolveState)> {
    let mut state = EvolveState::new(inp.labels.num_classes);
    let mut cache = PropagationCache::new();
    let mut out = Vec::with_capacity(inp.stream.len());
    for _ in 0..inp.stream.len() {
        let (cg, _) = evolve_step(&mut state, inp, cfg_prop, cfg_clust, warm_start, &mut cache)?;
        out.push(cg);
    }
    Ok((out, state))
}
