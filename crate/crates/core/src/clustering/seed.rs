//! Seed selection: cold-start k-means++ and the incremental warm-start
//! variant that extends a prior centroid set from newly arrived points.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use rand::Rng;

/// Which power of the point-to-centroid distance weights the seed draw.
///
/// The incremental scheme defines D(x) as the *squared* distance to the prior
/// centroid set and then draws with probability ∝ D(x)² — a fourth power of
/// the distance. Classic k-means++ draws ∝ squared distance. Both are
/// implemented; `Paper` follows the formula as written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedLaw {
    /// Weight = D(x)² where D is already the squared distance (distance⁴).
    Paper,
    /// Weight = squared distance (classic k-means++).
    Classic,
}

/// Draws one index with probability proportional to `weights`. Returns
/// `None` when every weight is zero (the caller picks a fallback). Entries
/// must be non-negative and finite.
pub(crate) fn weighted_draw<R: Rng>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let t = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            cum += w;
            last_positive = Some(i);
            if cum > t {
                return Some(i);
            }
        }
    }
    // Rounding can leave cum marginally below t at the end; the draw then
    // belongs to the final positive-weight entry.
    last_positive
}

/// Uniform draw among the indices not yet chosen; fallback for degenerate
/// all-zero weights (duplicate points coinciding with every seed).
fn uniform_unchosen<R: Rng>(chosen: &[bool], rng: &mut R) -> usize {
    let open: Vec<usize> = (0..chosen.len()).filter(|&i| !chosen[i]).collect();
    open[rng.gen_range(0..open.len())]
}

/// Classic k-means++ seeding: the first seed is uniform, each next seed is
/// drawn with probability proportional to its squared distance to the nearest
/// already-chosen seed. Returns the `k` chosen row indices in draw order; all
/// indices are distinct.
pub fn kmeanspp_seed<R: Rng>(points: &FeatureMatrix, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = points.rows();
    if k > n {
        return Err(Error::Bounds(format!("cannot draw {k} seeds from {n} points")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut chosen_mask = vec![false; n];
    let mut chosen = Vec::with_capacity(k);
    let first = rng.gen_range(0..n);
    chosen.push(first);
    chosen_mask[first] = true;

    // d2[i] = squared distance to the nearest chosen seed so far.
    let mut d2: Vec<f64> = (0..n)
        .map(|i| points.sq_dist_row(i, points.row(first)))
        .collect();

    while chosen.len() < k {
        // Chosen points sit at distance 0 and can never be redrawn.
        let next = match weighted_draw(&d2, rng) {
            Some(i) => i,
            None => uniform_unchosen(&chosen_mask, rng),
        };
        chosen.push(next);
        chosen_mask[next] = true;
        let next_row = points.row(next).to_vec();
        for (i, slot) in d2.iter_mut().enumerate() {
            let d = points.sq_dist_row(i, &next_row);
            if d < *slot {
                *slot = d;
            }
        }
    }
    Ok(chosen)
}

/// Warm-start seeding: keeps `prior` centroids untouched and appends
/// `grow_by` rows of `points_new`, drawn without replacement with weight
/// D(x)² (`Paper`) or D(x) (`Classic`), where D(x) is the squared distance
/// from x to the nearest prior centroid. The distance field is fixed to the
/// prior set — new draws do not re-weight the remaining candidates.
pub fn incremental_seed<R: Rng>(
    points_new: &FeatureMatrix,
    prior: &FeatureMatrix,
    grow_by: usize,
    law: SeedLaw,
    rng: &mut R,
) -> Result<FeatureMatrix> {
    if grow_by == 0 {
        return Ok(prior.clone());
    }
    let n = points_new.rows();
    if grow_by > n {
        return Err(Error::Bounds(format!(
            "cannot grow by {grow_by}: only {n} new points"
        )));
    }
    if prior.rows() > 0 && prior.dim() != points_new.dim() {
        return Err(Error::Dimension(format!(
            "prior centroids have dim {}, new points dim {}",
            prior.dim(),
            points_new.dim()
        )));
    }

    // D(x) = squared distance to the nearest prior centroid; with no prior
    // centroids every candidate is equally unrepresented (uniform weights).
    let d: Vec<f64> = (0..n)
        .map(|i| {
            if prior.rows() == 0 {
                1.0
            } else {
                (0..prior.rows())
                    .map(|c| points_new.sq_dist_row(i, prior.row(c)))
                    .fold(f64::INFINITY, f64::min)
            }
        })
        .collect();
    let mut weights: Vec<f64> = match law {
        SeedLaw::Paper => d.iter().map(|&x| x * x).collect(),
        SeedLaw::Classic => d,
    };

    let mut chosen_mask = vec![false; n];
    let mut chosen = Vec::with_capacity(grow_by);
    for _ in 0..grow_by {
        let next = match weighted_draw(&weights, rng) {
            Some(i) => i,
            None => uniform_unchosen(&chosen_mask, rng),
        };
        chosen.push(next);
        chosen_mask[next] = true;
        weights[next] = 0.0;
    }
    FeatureMatrix::vstack(&[prior, &points_new.select_rows(&chosen)])
}
