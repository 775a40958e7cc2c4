//! Fuzzy c-means with the crate's centroid-extraction convention.
//!
//! The iteration is standard Bezdek FCM: memberships from inverse-distance
//! ratios, internal centroids from memberships raised to the fuzziness
//! exponent. The *returned* centroids, however, are recomputed from the raw
//! (unexponentiated) membership matrix — the same weighted-mean formula the
//! hard path uses — so condensed artifacts always satisfy the one centroid
//! equation regardless of clustering mode. Fuzziness exactly 1 is the hard
//! k-means limit and delegates to Lloyd, returning one-hot memberships.

use crate::clustering::lloyd::{hard_sse, lloyd};
use crate::clustering::{soft_centroids, ClusterConfig};
use crate::error::{Error, Result};
use crate::features::{sq_dist, FeatureMatrix};
use rayon::prelude::*;

/// Output of one fuzzy c-means run.
#[derive(Debug, Clone)]
pub struct FcmResult {
    /// Row-stochastic membership matrix, n × k.
    pub memberships: FeatureMatrix,
    /// Centroids from the raw-membership weighted mean (see module docs).
    pub centroids: FeatureMatrix,
    /// Soft mass per cluster: column sums of the membership matrix.
    pub sizes: Vec<f64>,
    pub iterations: usize,
    /// Hard SSE of the defuzzified (argmax) assignment against `centroids`.
    pub sse: f64,
}

/// One membership row from squared distances to every centroid.
///
/// Stable form: with d_min the smallest distance, u_j ∝ (d_min/d_j)^{1/(m−1)}.
/// Every ratio is ≤ 1, so nothing overflows; the argmin term is exactly 1, so
/// the normalizer is ≥ 1. A zero distance is the textbook singularity: the
/// point sits on a centroid and gets full membership there (lowest index on
/// coincident ties).
fn membership_row(dists: &[f64], inv_fuzz: f64, out: &mut [f64]) {
    if let Some(hit) = dists.iter().position(|&d| d == 0.0) {
        out.fill(0.0);
        out[hit] = 1.0;
        return;
    }
    let d_min = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for (o, &d) in out.iter_mut().zip(dists) {
        let r = (d_min / d).powf(inv_fuzz);
        *o = r;
        total += r;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Runs fuzzy c-means from `init` until the summed squared centroid shift
/// drops below `cfg.tol` or `cfg.max_iter` rounds elapse.
pub fn fuzzy_cmeans(
    points: &FeatureMatrix,
    init: &FeatureMatrix,
    cfg: &ClusterConfig,
) -> Result<FcmResult> {
    if cfg.fuzziness < 1.0 {
        return Err(Error::Config(format!(
            "fuzziness must be at least 1, got {}",
            cfg.fuzziness
        )));
    }
    if cfg.fuzziness == 1.0 {
        // Hard limit: delegate to Lloyd and present one-hot memberships.
        let r = lloyd(points, init, cfg)?;
        let k = init.rows();
        let mut memberships = FeatureMatrix::zeros(points.rows(), k);
        for (i, &a) in r.assign.iter().enumerate() {
            memberships.set(i, a, 1.0);
        }
        return Ok(FcmResult {
            memberships,
            centroids: r.centroids,
            sizes: r.sizes,
            iterations: r.iterations,
            sse: r.sse,
        });
    }

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
    let d = points.dim();
    let inv_fuzz = 1.0 / (cfg.fuzziness - 1.0);

    let mut centroids = init.clone();
    let mut memberships = FeatureMatrix::zeros(n, k);
    let mut iterations = 0;

    for round in 0..cfg.max_iter {
        iterations = round + 1;
        // Membership update, parallel over points (row-local, deterministic).
        let cent_ref = &centroids;
        memberships
            .data_mut()
            .par_chunks_mut(k)
            .enumerate()
            .for_each(|(i, row)| {
                let mut dists = vec![0.0; k];
                for (c, slot) in dists.iter_mut().enumerate() {
                    *slot = sq_dist(points.row(i), cent_ref.row(c));
                }
                membership_row(&dists, inv_fuzz, row);
            });

        // Internal centroid update with fuzzified weights u^m, accumulated
        // sequentially in ascending point order.
        let mut sums = vec![0.0f64; k * d];
        let mut mass = vec![0.0f64; k];
        for i in 0..n {
            let row = points.row(i);
            for c in 0..k {
                let w = memberships.get(i, c).powf(cfg.fuzziness);
                mass[c] += w;
                for (s, &x) in sums[c * d..(c + 1) * d].iter_mut().zip(row) {
                    *s += w * x;
                }
            }
        }
        let mut shift = 0.0;
        for c in 0..k {
            if mass[c] == 0.0 {
                // Cluster lost all (fuzzified) mass; keep its old position
                // rather than divide by zero. It can regain mass next round.
                continue;
            }
            for j in 0..d {
                let new = sums[c * d + j] / mass[c];
                let old = centroids.get(c, j);
                shift += (new - old) * (new - old);
                centroids.set(c, j, new);
            }
        }
        if shift < cfg.tol {
            break;
        }
    }

    // Returned centroids: raw-membership weighted means.
    let (centroids, sizes) = soft_centroids(points, &memberships);
    centroids.assert_finite("fuzzy centroids")?;
    let defuzzified = defuzzify(&memberships);
    let sse = hard_sse(points, &defuzzified, &centroids);
    Ok(FcmResult {
        memberships,
        centroids,
        sizes,
        iterations,
        sse,
    })
}

/// Argmax per membership row; ties toward the lowest cluster index.
pub fn defuzzify(memberships: &FeatureMatrix) -> Vec<usize> {
    (0..memberships.rows())
        .map(|i| {
            let row = memberships.row(i);
            let mut best = 0;
            let mut best_u = row[0];
            for (c, &u) in row.iter().enumerate().skip(1) {
                if u > best_u {
                    best_u = u;
                    best = c;
                }
            }
            best
        })
        .collect()
}
