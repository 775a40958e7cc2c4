//! Node-selection coreset baselines. Each picks real training nodes (per
//! class, same budget arithmetic as condensation) and uses their propagated
//! feature rows verbatim as the condensed set — the standard comparison
//! points for clustering-based condensation.

use crate::clustering::cluster_counts;
use crate::condense::{CentroidProvenance, CondensedGraph};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::LabelSet;
use crate::rng::SeedDomain;
use rand::seq::SliceRandom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMethod {
    /// Class-stratified uniform sample.
    Random,
    /// Greedy farthest-point traversal per class, started at the class's
    /// first training node.
    KCenter,
    /// Greedy mean-matching per class (one pass).
    Herding,
}

impl BaselineMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineMethod::Random => "random",
            BaselineMethod::KCenter => "kcenter",
            BaselineMethod::Herding => "herding",
        }
    }

    pub fn all() -> [BaselineMethod; 3] {
        [
            BaselineMethod::Random,
            BaselineMethod::KCenter,
            BaselineMethod::Herding,
        ]
    }
}

/// Farthest-point selection: start at the first (lowest-index) member, then
/// repeatedly add the point maximizing its distance to the selected set;
/// ties resolve to the lowest index.
fn kcenter_select(points: &FeatureMatrix, budget: usize) -> Vec<usize> {
    let n = points.rows();
    let mut selected = Vec::with_capacity(budget);
    selected.push(0);
    let mut dist: Vec<f64> = (0..n).map(|i| points.sq_dist_row(i, points.row(0))).collect();
    while selected.len() < budget {
        let mut best = 0;
        let mut best_d = f64::NEG_INFINITY;
        for (i, &d) in dist.iter().enumerate() {
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        selected.push(best);
        let row: Vec<f64> = points.row(best).to_vec();
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(points.sq_dist_row(i, &row));
        }
    }
    selected
}

/// Kernel-herding selection against the class mean: maintain a drift vector
/// w, pick argmax ⟨w, x⟩ among unselected points, update w += μ − x.
fn herding_select(points: &FeatureMatrix, budget: usize) -> Vec<usize> {
    let n = points.rows();
    let d = points.dim();
    let mut mu = vec![0.0f64; d];
    for i in 0..n {
        for (m, &x) in mu.iter_mut().zip(points.row(i)) {
            *m += x;
        }
    }
    for m in &mut mu {
        *m /= n as f64;
    }
    let mut w = mu.clone();
    let mut taken = vec![false; n];
    let mut selected = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best = usize::MAX;
        let mut best_score = f64::NEG_INFINITY;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            let score: f64 = w.iter().zip(points.row(i)).map(|(a, b)| a * b).sum();
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        taken[best] = true;
        selected.push(best);
        for ((wj, &mj), &xj) in w.iter_mut().zip(&mu).zip(points.row(best)) {
            *wj += mj - xj;
        }
    }
    selected
}

/// Selects per-class training nodes under the shared budget arithmetic and
/// assembles them as a condensed graph with singleton provenance.
pub fn coreset_baselines(
    f: &FeatureMatrix,
    labels: &LabelSet,
    r: f64,
    method: BaselineMethod,
    seed: u64,
) -> Result<CondensedGraph> {
    if f.rows() != labels.labels.len() {
        return Err(Error::Dimension(format!(
            "{} feature rows for {} labels",
            f.rows(),
            labels.labels.len()
        )));
    }
    labels.check_class_coverage(&labels.train_idx)?;
    let budgets = cluster_counts(labels, &labels.train_idx, r)?;
    let members_per_class = labels.class_members(&labels.train_idx);
    let dom = SeedDomain::new(seed);

    let mut rows: Vec<usize> = Vec::new();
    let mut centroid_labels = Vec::new();
    let mut provenance = Vec::new();
    for (class, members) in members_per_class.iter().enumerate() {
        let budget = budgets[class];
        if budget > members.len() {
            return Err(Error::Bounds(format!(
                "budget {budget} exceeds class {class} size {}",
                members.len()
            )));
        }
        let picked_local: Vec<usize> = match method {
            BaselineMethod::Random => {
                let mut rng = dom.baseline(0, class);
                let mut idx: Vec<usize> = (0..members.len()).collect();
                idx.shuffle(&mut rng);
                let mut take: Vec<usize> = idx.into_iter().take(budget).collect();
                take.sort_unstable();
                take
            }
            BaselineMethod::KCenter => {
                let pts = f.select_rows(members);
                kcenter_select(&pts, budget)
            }
            BaselineMethod::Herding => {
                let pts = f.select_rows(members);
                herding_select(&pts, budget)
            }
        };
        for &local in &picked_local {
            let node = members[local];
            provenance.push(CentroidProvenance {
                centroid: rows.len(),
                class,
                members: vec![(node, 1.0)],
            });
            rows.push(node);
            centroid_labels.push(class);
        }
    }
    Ok(CondensedGraph {
        features: f.select_rows(&rows),
        labels: centroid_labels,
        provenance,
    })
}
