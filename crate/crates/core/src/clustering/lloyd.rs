//! Hard k-means (Lloyd) iteration with deterministic tie-breaking and
//! empty-cluster repair.
//!
//! Determinism contract: nearest-centroid ties go to the lowest centroid
//! index, repair donors are scanned in ascending point order, and centroid
//! sums accumulate over ascending point indices in one thread — so results
//! are bit-identical at any thread count, and an independent recomputation of
//! the centroid formula from the final assignment reproduces the returned
//! centroids exactly.

use crate::clustering::{hard_centroids, ClusterConfig};
use crate::error::{Error, Result};
use crate::features::{sq_dist, FeatureMatrix};
use rayon::prelude::*;

/// Output of one Lloyd run.
#[derive(Debug, Clone)]
pub struct LloydResult {
    /// Cluster index per point.
    pub assign: Vec<usize>,
    /// Final centroids, exactly the per-cluster means of `assign`.
    pub centroids: FeatureMatrix,
    /// Hard member count per cluster; all positive.
    pub sizes: Vec<f64>,
    /// Number of assignment/update rounds performed.
    pub iterations: usize,
    /// Σ_i ‖x_i − c_{assign(i)}‖² for the returned pair.
    pub sse: f64,
    /// SSE after each round's update; non-increasing.
    pub sse_trace: Vec<f64>,
}

/// Nearest-centroid assignment; ties broken toward the lowest centroid index.
fn assign_step(points: &FeatureMatrix, centroids: &FeatureMatrix) -> Vec<usize> {
    (0..points.rows())
        .into_par_iter()
        .map(|i| {
            let row = points.row(i);
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for c in 0..centroids.rows() {
                let d = sq_dist(row, centroids.row(c));
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Re-seeds every empty cluster to the point currently farthest from its own
/// centroid, drawn from clusters that can spare a member (≥ 2). Scans in
/// ascending order with a strict comparison, so ties pick the lowest point
/// index. Counts are maintained live across repairs within the round.
fn repair_empty(
    points: &FeatureMatrix,
    centroids: &FeatureMatrix,
    assign: &mut [usize],
    counts: &mut [usize],
) -> Result<()> {
    let k = counts.len();
    for e in 0..k {
        if counts[e] > 0 {
            continue;
        }
        let mut donor: Option<(usize, f64)> = None;
        for (i, &a) in assign.iter().enumerate() {
            if counts[a] < 2 {
                continue;
            }
            let d = sq_dist(points.row(i), centroids.row(a));
            if donor.map_or(true, |(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        let (i, _) = donor.ok_or_else(|| {
            Error::Internal("empty-cluster repair found no donor with two or more members".into())
        })?;
        counts[assign[i]] -= 1;
        assign[i] = e;
        counts[e] = 1;
    }
    Ok(())
}

/// Runs Lloyd iteration from `init` until the summed squared centroid shift
/// drops below `cfg.tol` or `cfg.max_iter` rounds elapse.
pub fn lloyd(points: &FeatureMatrix, init: &FeatureMatrix, cfg: &ClusterConfig) -> Result<LloydResult> {
    let n = points.rows();
    let k = init.rows();
    if k == 0 || k > n {
        return Err(Error::Bounds(format!("{k} clusters for {n} points")));
    }
    if init.dim() != points.dim() {
        return Err(Error::Dimension(format!(
            "init centroids have dim {}, points dim {}",
            init.dim(),
            points.dim()
        )));
    }

    let mut centroids = init.clone();
    let mut assign = vec![0usize; n];
    let mut sizes = vec![0.0f64; k];
    let mut iterations = 0;
    let mut sse_trace = Vec::new();

    for round in 0..cfg.max_iter {
        iterations = round + 1;
        assign = assign_step(points, &centroids);
        let mut counts = vec![0usize; k];
        for &a in &assign {
            counts[a] += 1;
        }
        if counts.iter().any(|&c| c == 0) {
            repair_empty(points, &centroids, &mut assign, &mut counts)?;
        }
        let (new_centroids, new_sizes) = hard_centroids(points, &assign, k);
        let shift: f64 = centroids
            .data()
            .iter()
            .zip(new_centroids.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        centroids = new_centroids;
        sizes = new_sizes;
        sse_trace.push(hard_sse(points, &assign, &centroids));
        if shift < cfg.tol {
            break;
        }
    }

    let sse = *sse_trace
        .last()
        .ok_or_else(|| Error::Internal("lloyd ran zero iterations".into()))?;
    Ok(LloydResult {
        assign,
        centroids,
        sizes,
        iterations,
        sse,
        sse_trace,
    })
}

/// Σ_i ‖x_i − c_{assign(i)}‖², accumulated in ascending point order.
pub fn hard_sse(points: &FeatureMatrix, assign: &[usize], centroids: &FeatureMatrix) -> f64 {
    assign
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_dist(points.row(i), centroids.row(a)))
        .sum()
}
