//! Class-wise clustering: configuration, the balanced selection objective,
//! restart orchestration, and the shared centroid-extraction formulas.
//!
//! Clustering can be stochastic, so each class runs `repeats` independent
//! rounds (one of them warm-started when prior centroids exist) and keeps the
//! round minimizing the balanced objective J = ‖F − PC‖² + w·‖Pᵀ1 − u‖²,
//! where u is the perfectly balanced cluster-size target. J selects between
//! finished runs; it is not optimized inside the iterations themselves.

pub mod fuzzy;
pub mod lloyd;
pub mod seed;

pub use fuzzy::{defuzzify, fuzzy_cmeans, FcmResult};
pub use lloyd::{hard_sse, lloyd, LloydResult};
pub use seed::{incremental_seed, kmeanspp_seed, SeedLaw};

use crate::error::{Error, Result};
use crate::features::{sq_dist, FeatureMatrix};
use crate::graph::LabelSet;
use crate::rng::SeedDomain;
use rayon::prelude::*;

/// Hard k-means or fuzzy c-means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMode {
    Hard,
    Fuzzy,
}

/// Everything one clustering round needs to know.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    /// Condensed-to-training size ratio r ∈ (0, 1].
    pub reduction_rate: f64,
    pub mode: ClusterMode,
    /// FCM exponent m ≥ 1; exactly 1 is the hard limit.
    pub fuzziness: f64,
    /// Independent restarts per class; the min-J run wins.
    pub repeats: usize,
    pub max_iter: usize,
    /// Convergence threshold on the summed squared centroid shift.
    pub tol: f64,
    /// Master seed for all RNG streams.
    pub seed: u64,
    /// Weight of the balance penalty inside J.
    pub balance_weight: f64,
    /// Distance power for incremental seeding draws.
    pub seed_law: SeedLaw,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            reduction_rate: 0.5,
            mode: ClusterMode::Hard,
            fuzziness: 1.0,
            repeats: 50,
            max_iter: 300,
            tol: 1e-8,
            seed: 0,
            balance_weight: 1.0,
            seed_law: SeedLaw::Paper,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reduction_rate > 0.0 && self.reduction_rate <= 1.0) {
            return Err(Error::Config(format!(
                "reduction rate must lie in (0, 1], got {}",
                self.reduction_rate
            )));
        }
        if self.fuzziness < 1.0 || !self.fuzziness.is_finite() {
            return Err(Error::Config(format!(
                "fuzziness must be at least 1, got {}",
                self.fuzziness
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tol must be finite and ≥ 0, got {}", self.tol)));
        }
        if !(self.balance_weight >= 0.0 && self.balance_weight.is_finite()) {
            return Err(Error::Config(format!(
                "balance weight must be finite and ≥ 0, got {}",
                self.balance_weight
            )));
        }
        Ok(())
    }
}

/// Per-point cluster membership: a hard index vector or a row-stochastic
/// membership matrix.
#[derive(Debug, Clone)]
pub enum Assignment {
    Hard(Vec<usize>),
    Soft(FeatureMatrix),
}

impl Assignment {
    pub fn num_points(&self) -> usize {
        match self {
            Assignment::Hard(a) => a.len(),
            Assignment::Soft(u) => u.rows(),
        }
    }

    /// Hard labels: identity for hard assignments, argmax for soft.
    pub fn hard_labels(&self) -> Vec<usize> {
        match self {
            Assignment::Hard(a) => a.clone(),
            Assignment::Soft(u) => defuzzify(u),
        }
    }

    /// Column sums of the membership matrix: hard counts or soft mass.
    pub fn counts(&self, k: usize) -> Vec<f64> {
        match self {
            Assignment::Hard(a) => {
                let mut c = vec![0.0; k];
                for &x in a {
                    c[x] += 1.0;
                }
                c
            }
            Assignment::Soft(u) => {
                let mut c = vec![0.0; k];
                for i in 0..u.rows() {
                    for (slot, &v) in c.iter_mut().zip(u.row(i)) {
                        *slot += v;
                    }
                }
                c
            }
        }
    }
}

/// Cluster centroids plus their member mass.
#[derive(Debug, Clone)]
pub struct Centroids {
    pub features: FeatureMatrix,
    /// Hard count or soft mass per centroid.
    pub sizes: Vec<f64>,
}

/// The perfectly balanced cluster-size target: n/k for every cluster of one
/// class (blockwise constant across classes once assembled).
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceTarget {
    pub per_cluster: Vec<f64>,
}

impl BalanceTarget {
    pub fn uniform(n_points: usize, k: usize) -> Self {
        BalanceTarget {
            per_cluster: vec![n_points as f64 / k as f64; k],
        }
    }
}

/// The two terms of the balanced objective and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancedSse {
    /// ‖F − PC‖² with P the (hard one-hot or soft) membership matrix.
    pub sse: f64,
    /// ‖Pᵀ1 − u‖².
    pub penalty: f64,
    /// sse + weight · penalty.
    pub j: f64,
}

/// Evaluates J(P, C) = ‖F − PC‖² + weight·‖Pᵀ1 − u‖² literally.
pub fn balanced_sse(
    points: &FeatureMatrix,
    assignment: &Assignment,
    centroids: &FeatureMatrix,
    target: &BalanceTarget,
    weight: f64,
) -> Result<BalancedSse> {
    let k = centroids.rows();
    if target.per_cluster.len() != k {
        return Err(Error::Dimension(format!(
            "balance target has {} entries for {k} clusters",
            target.per_cluster.len()
        )));
    }
    if assignment.num_points() != points.rows() {
        return Err(Error::Dimension(format!(
            "assignment covers {} points, feature matrix has {}",
            assignment.num_points(),
            points.rows()
        )));
    }
    let sse = match assignment {
        Assignment::Hard(a) => {
            if let Some(&bad) = a.iter().find(|&&c| c >= k) {
                return Err(Error::Bounds(format!("assignment index {bad} for {k} clusters")));
            }
            hard_sse(points, a, centroids)
        }
        Assignment::Soft(u) => {
            if u.dim() != k {
                return Err(Error::Dimension(format!(
                    "membership matrix has {} columns for {k} clusters",
                    u.dim()
                )));
            }
            // ‖F − UC‖²: reconstruct each row as the membership-weighted
            // centroid mix.
            let d = points.dim();
            let mut acc = 0.0;
            let mut recon = vec![0.0; d];
            for i in 0..points.rows() {
                recon.fill(0.0);
                for c in 0..k {
                    let w = u.get(i, c);
                    if w != 0.0 {
                        for (r, &cv) in recon.iter_mut().zip(centroids.row(c)) {
                            *r += w * cv;
                        }
                    }
                }
                acc += sq_dist(points.row(i), &recon);
            }
            acc
        }
    };
    let counts = assignment.counts(k);
    let penalty: f64 = counts
        .iter()
        .zip(&target.per_cluster)
        .map(|(c, u)| (c - u) * (c - u))
        .sum();
    Ok(BalancedSse {
        sse,
        penalty,
        j: sse + weight * penalty,
    })
}

/// Per-cluster means of a hard assignment — the one centroid formula
/// (weighted column means of the membership matrix), accumulated over
/// ascending point indices so independent recomputations are bit-identical.
pub fn hard_centroids(points: &FeatureMatrix, assign: &[usize], k: usize) -> (FeatureMatrix, Vec<f64>) {
    let d = points.dim();
    let mut sums = vec![0.0f64; k * d];
    let mut counts = vec![0.0f64; k];
    for (i, &a) in assign.iter().enumerate() {
        counts[a] += 1.0;
        for (s, &x) in sums[a * d..(a + 1) * d].iter_mut().zip(points.row(i)) {
            *s += x;
        }
    }
    for c in 0..k {
        if counts[c] > 0.0 {
            for s in &mut sums[c * d..(c + 1) * d] {
                *s /= counts[c];
            }
        }
    }
    (
        FeatureMatrix::from_vec(k, d, sums).expect("shape by construction"),
        counts,
    )
}

/// Raw-membership weighted means — the same centroid formula with a soft P:
/// centroid c = Σ_i u_ic·x_i / Σ_i u_ic, ascending-i accumulation.
pub fn soft_centroids(points: &FeatureMatrix, memberships: &FeatureMatrix) -> (FeatureMatrix, Vec<f64>) {
    let k = memberships.dim();
    let d = points.dim();
    let mut sums = vec![0.0f64; k * d];
    let mut mass = vec![0.0f64; k];
    for i in 0..points.rows() {
        let row = points.row(i);
        for c in 0..k {
            let w = memberships.get(i, c);
            if w != 0.0 {
                mass[c] += w;
                for (s, &x) in sums[c * d..(c + 1) * d].iter_mut().zip(row) {
                    *s += w * x;
                }
            }
        }
    }
    for c in 0..k {
        if mass[c] > 0.0 {
            for s in &mut sums[c * d..(c + 1) * d] {
                *s /= mass[c];
            }
        }
    }
    (
        FeatureMatrix::from_vec(k, d, sums).expect("shape by construction"),
        mass,
    )
}

/// Per-class condensed cluster counts: M_k = max(1, round(n_k·r)), clamped to
/// the class size. Every class must have at least one training node.
pub fn cluster_counts(labels: &LabelSet, train_idx: &[usize], r: f64) -> Result<Vec<usize>> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Config(format!("reduction rate must lie in (0, 1], got {r}")));
    }
    labels
        .class_members(train_idx)
        .iter()
        .enumerate()
        .map(|(class, members)| {
            let n_k = members.len();
            if n_k == 0 {
                return Err(Error::Config(format!(
                    "class {class} has no training nodes"
                )));
            }
            Ok((((n_k as f64 * r).round() as usize).max(1)).min(n_k))
        })
        .collect()
}

/// Everything the caller learns from clustering one class.
#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    pub assignment: Assignment,
    pub centroids: Centroids,
    /// Iterations of the selected run.
    pub iterations: usize,
    /// Hard SSE of the selected run (defuzzified for soft mode); the ledger
    /// metric.
    pub sse: f64,
    /// Balance penalty of the selected run.
    pub penalty: f64,
    /// Selection objective of the selected run.
    pub j: f64,
    /// J of every run, in run order (run 0 is the warm run when present).
    pub run_js: Vec<f64>,
    pub selected_run: usize,
    /// True when a warm run existed and won selection.
    pub warm_was_selected: bool,
}

/// Clusters one class's points into `m_k` centroids: `repeats` independent
/// runs — run 0 seeded from `warm` when given, all others k-means++ seeded
/// from per-run RNG streams — scored by the balanced objective, minimum J
/// wins (ties → lowest run index).
pub fn cluster_class(
    points: &FeatureMatrix,
    m_k: usize,
    cfg: &ClusterConfig,
    warm: Option<&FeatureMatrix>,
    dom: &SeedDomain,
    step: usize,
    class: usize,
) -> Result<ClusterOutcome> {
    cfg.validate()?;
    let n = points.rows();
    if m_k == 0 || m_k > n {
        return Err(Error::Bounds(format!("{m_k} clusters for {n} points")));
    }
    if let Some(w) = warm {
        if w.rows() != m_k {
            return Err(Error::Dimension(format!(
                "warm start provides {} centroids, class needs {m_k}",
                w.rows()
            )));
        }
        if w.dim() != points.dim() {
            return Err(Error::Dimension(format!(
                "warm centroids have dim {}, points dim {}",
                w.dim(),
                points.dim()
            )));
        }
    }
    let target = BalanceTarget::uniform(n, m_k);

    struct RunOut {
        assignment: Assignment,
        centroids: Centroids,
        iterations: usize,
        hard_sse: f64,
        bal: BalancedSse,
    }

    let runs: Vec<RunOut> = (0..cfg.repeats)
        .into_par_iter()
        .map(|run| -> Result<RunOut> {
            let mut rng = dom.clustering(step, class, run);
            let init = match (run, warm) {
                (0, Some(w)) => w.clone(),
                _ => {
                    let idx = kmeanspp_seed(points, m_k, &mut rng)?;
                    points.select_rows(&idx)
                }
            };
            match cfg.mode {
                ClusterMode::Hard => {
                    let r = lloyd(points, &init, cfg)?;
                    let assignment = Assignment::Hard(r.assign);
                    let bal =
                        balanced_sse(points, &assignment, &r.centroids, &target, cfg.balance_weight)?;
                    Ok(RunOut {
                        assignment,
                        centroids: Centroids {
                            features: r.centroids,
                            sizes: r.sizes,
                        },
                        iterations: r.iterations,
                        hard_sse: r.sse,
                        bal,
                    })
                }
                ClusterMode::Fuzzy => {
                    let r = fuzzy_cmeans(points, &init, cfg)?;
                    let assignment = Assignment::Soft(r.memberships);
                    let bal =
                        balanced_sse(points, &assignment, &r.centroids, &target, cfg.balance_weight)?;
                    Ok(RunOut {
                        assignment,
                        centroids: Centroids {
                            features: r.centroids,
                            sizes: r.sizes,
                        },
                        iterations: r.iterations,
                        hard_sse: r.sse,
                        bal,
                    })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let run_js: Vec<f64> = runs.iter().map(|r| r.bal.j).collect();
    let selected_run = run_js
        .iter()
        .enumerate()
        .fold(0usize, |best, (i, &j)| if j < run_js[best] { i } else { best });
    debug_assert!(run_js.iter().all(|&j| run_js[selected_run] <= j));

    let chosen = runs
        .into_iter()
        .nth(selected_run)
        .ok_or_else(|| Error::Internal("selected run index out of range".into()))?;
    let counts = chosen.assignment.counts(m_k);
    if counts.iter().any(|&c| c <= 0.0) {
        return Err(Error::Internal(
            "selected run produced an empty cluster".into(),
        ));
    }
    Ok(ClusterOutcome {
        warm_was_selected: warm.is_some() && selected_run == 0,
        assignment: chosen.assignment,
        centroids: chosen.centroids,
        iterations: chosen.iterations,
        sse: chosen.hard_sse,
        penalty: chosen.bal.penalty,
        j: chosen.bal.j,
        run_js,
        selected_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labels_with_sizes(sizes: &[usize]) -> (LabelSet, Vec<usize>) {
        let mut labels = Vec::new();
        for (c, &n) in sizes.iter().enumerate() {
            labels.extend(std::iter::repeat(c).take(n));
        }
        let n = labels.len();
        let l = LabelSet {
            labels,
            num_classes: sizes.len(),
            train_idx: (0..n).collect(),
            val_idx: vec![],
            test_idx: vec![],
        };
        let idx = (0..n).collect();
        (l, idx)
    }

    #[test]
    fn cluster_counts_round_and_clamp() {
        // 28 training nodes at half reduction → 14 condensed nodes.
        let (l, idx) = labels_with_sizes(&[28]);
        assert_eq!(cluster_counts(&l, &idx, 0.5).unwrap(), vec![14]);
        // Tiny class floors at 1.
        let (l, idx) = labels_with_sizes(&[1]);
        assert_eq!(cluster_counts(&l, &idx, 0.001).unwrap(), vec![1]);
        // Mixed classes at a tenth.
        let (l, idx) = labels_with_sizes(&[50, 30, 20]);
        let m = cluster_counts(&l, &idx, 0.1).unwrap();
        assert_eq!(m, vec![5, 3, 2]);
        assert_eq!(m.iter().sum::<usize>(), 10);
    }

    #[test]
    fn cluster_counts_reject_empty_class_and_bad_rate() {
        let (l, _) = labels_with_sizes(&[5, 5]);
        // Class 1 absent from the training view.
        let err = cluster_counts(&l, &[0, 1, 2], 0.5).unwrap_err();
        assert!(err.to_string().contains("class 1"));
        let (l, idx) = labels_with_sizes(&[5]);
        assert!(cluster_counts(&l, &idx, 0.0).is_err());
        assert!(cluster_counts(&l, &idx, 1.5).is_err());
    }

    #[test]
    fn balanced_sse_zero_penalty_when_counts_match_target() {
        // 4 points, 2 clusters of 2 → counts equal the uniform target.
        let pts = FeatureMatrix::from_vec(4, 1, vec![0.0, 1.0, 10.0, 11.0]).unwrap();
        let assign = Assignment::Hard(vec![0, 0, 1, 1]);
        let (cents, _) = hard_centroids(&pts, &[0, 0, 1, 1], 2);
        let target = BalanceTarget::uniform(4, 2);
        let b = balanced_sse(&pts, &assign, &cents, &target, 1.0).unwrap();
        assert_eq!(b.penalty, 0.0);
        assert_eq!(b.j, b.sse);
        assert!((b.sse - 1.0).abs() < 1e-12, "two clusters of scatter 0.5");
    }

    #[test]
    fn balanced_sse_zero_for_identical_points_single_cluster() {
        let pts = FeatureMatrix::from_vec(3, 2, vec![2.0; 6]).unwrap();
        let assign = Assignment::Hard(vec![0, 0, 0]);
        let (cents, _) = hard_centroids(&pts, &[0, 0, 0], 1);
        let target = BalanceTarget::uniform(3, 1);
        let b = balanced_sse(&pts, &assign, &cents, &target, 1.0).unwrap();
        assert_eq!(b.j, 0.0, "n/M integral and all points coincide");
    }

    #[test]
    fn balanced_sse_counts_imbalance() {
        // 3 points in cluster 0, 1 in cluster 1; target is 2/2.
        let pts = FeatureMatrix::from_vec(4, 1, vec![0.0, 0.0, 0.0, 5.0]).unwrap();
        let assign = Assignment::Hard(vec![0, 0, 0, 1]);
        let (cents, _) = hard_centroids(&pts, &[0, 0, 0, 1], 2);
        let target = BalanceTarget::uniform(4, 2);
        let b = balanced_sse(&pts, &assign, &cents, &target, 1.0).unwrap();
        assert_eq!(b.penalty, 2.0, "(3−2)² + (1−2)²");
        // Weight scales only the penalty.
        let b2 = balanced_sse(&pts, &assign, &cents, &target, 0.5).unwrap();
        assert_eq!(b2.j, b2.sse + 1.0);
    }

    #[test]
    fn balanced_sse_soft_matches_hard_for_one_hot() {
        let pts = FeatureMatrix::from_vec(4, 1, vec![0.0, 1.0, 10.0, 11.0]).unwrap();
        let hard = Assignment::Hard(vec![0, 0, 1, 1]);
        let mut onehot = FeatureMatrix::zeros(4, 2);
        for (i, &a) in [0usize, 0, 1, 1].iter().enumerate() {
            onehot.set(i, a, 1.0);
        }
        let soft = Assignment::Soft(onehot);
        let (cents, _) = hard_centroids(&pts, &[0, 0, 1, 1], 2);
        let target = BalanceTarget::uniform(4, 2);
        let bh = balanced_sse(&pts, &hard, &cents, &target, 1.0).unwrap();
        let bs = balanced_sse(&pts, &soft, &cents, &target, 1.0).unwrap();
        assert!((bh.sse - bs.sse).abs() < 1e-12);
        assert_eq!(bh.penalty, bs.penalty);
    }

    fn random_points(n: usize, d: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FeatureMatrix::from_vec(n, d, data).unwrap()
    }

    #[test]
    fn single_repeat_returns_that_run() {
        let pts = random_points(40, 3, 1);
        let cfg = ClusterConfig {
            repeats: 1,
            ..ClusterConfig::default()
        };
        let dom = SeedDomain::new(cfg.seed);
        let out = cluster_class(&pts, 4, &cfg, None, &dom, 1, 0).unwrap();
        assert_eq!(out.run_js.len(), 1);
        assert_eq!(out.selected_run, 0);
        assert_eq!(out.j, out.run_js[0]);
    }

    #[test]
    fn min_j_selection_over_repeats() {
        let pts = random_points(120, 5, 2);
        let cfg = ClusterConfig {
            repeats: 50,
            ..ClusterConfig::default()
        };
        let dom = SeedDomain::new(7);
        let out = cluster_class(&pts, 4, &cfg, None, &dom, 1, 0).unwrap();
        assert_eq!(out.run_js.len(), 50);
        for &j in &out.run_js {
            assert!(out.j <= j, "returned J must be the minimum");
        }
        assert_eq!(out.j, out.run_js[out.selected_run]);
    }

    #[test]
    fn repeated_selection_beats_single_run_median() {
        // On unstructured data k-means has many local minima, so the best of
        // 50 restarts should sit strictly below the single-run median
        // essentially always.
        let mut strict = 0;
        const TRIALS: usize = 20;
        for trial in 0..TRIALS {
            let pts = random_points(150, 6, 100 + trial as u64);
            let cfg = ClusterConfig {
                repeats: 50,
                ..ClusterConfig::default()
            };
            let dom = SeedDomain::new(trial as u64);
            let out = cluster_class(&pts, 10, &cfg, None, &dom, 1, 0).unwrap();
            let mut js = out.run_js.clone();
            js.sort_by(f64::total_cmp);
            let median = js[js.len() / 2];
            if out.j < median {
                strict += 1;
            }
        }
        assert!(
            strict >= 19,
            "min-J beat the median in only {strict}/{TRIALS} trials"
        );
    }

    #[test]
    fn selection_penalty_not_worse_than_median_statistically() {
        // The selected run's balance penalty should not exceed the median
        // run's penalty in the typical case (J contains the penalty term).
        let mut wins = 0;
        const TRIALS: usize = 20;
        for trial in 0..TRIALS {
            let pts = random_points(120, 4, 900 + trial as u64);
            let cfg = ClusterConfig {
                repeats: 30,
                ..ClusterConfig::default()
            };
            let dom = SeedDomain::new(50 + trial as u64);
            let out = cluster_class(&pts, 8, &cfg, None, &dom, 1, 0).unwrap();
            // Recover every run's penalty by re-running (streams make this
            // exact); here we only need the selected one vs the median of J
            // as a proxy is wrong, so recompute penalties directly.
            let mut penalties = Vec::new();
            for run in 0..cfg.repeats {
                let single = ClusterConfig {
                    repeats: 1,
                    ..cfg.clone()
                };
                // Re-derive run `run` by seeding a fresh domain pointing at
                // the same stream coordinates.
                let again = cluster_class_single_run(&pts, 8, &single, &dom, 1, 0, run);
                penalties.push(again);
            }
            penalties.sort_by(f64::total_cmp);
            let median = penalties[penalties.len() / 2];
            if out.penalty <= median + 1e-12 {
                wins += 1;
            }
        }
        assert!(
            wins >= 15,
            "selected penalty beat the median in only {wins}/{TRIALS} trials"
        );
    }

    /// Helper: replays a single restart at explicit stream coordinates and
    /// returns its balance penalty.
    fn cluster_class_single_run(
        pts: &FeatureMatrix,
        m_k: usize,
        cfg: &ClusterConfig,
        dom: &SeedDomain,
        step: usize,
        class: usize,
        run: usize,
    ) -> f64 {
        let mut rng = dom.clustering(step, class, run);
        let idx = kmeanspp_seed(pts, m_k, &mut rng).unwrap();
        let r = lloyd(pts, &pts.select_rows(&idx), cfg).unwrap();
        let target = BalanceTarget::uniform(pts.rows(), m_k);
        balanced_sse(
            pts,
            &Assignment::Hard(r.assign),
            &r.centroids,
            &target,
            cfg.balance_weight,
        )
        .unwrap()
        .penalty
    }

    #[test]
    fn warm_run_participates_exactly_once_and_can_win() {
        // Warm centroids placed exactly at the optimal blob means: the warm
        // run converges in one round and must win selection.
        let mut rows = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for c in 0..3 {
            let center = c as f64 * 20.0;
            for _ in 0..30 {
                rows.push(vec![
                    center + rng.gen_range(-0.5..0.5),
                    center + rng.gen_range(-0.5..0.5),
                ]);
            }
        }
        let pts = FeatureMatrix::from_rows(&rows).unwrap();
        let cfg = ClusterConfig {
            repeats: 5,
            ..ClusterConfig::default()
        };
        let dom = SeedDomain::new(11);
        let cold = cluster_class(&pts, 3, &cfg, None, &dom, 1, 0).unwrap();
        let warm = cluster_class(&pts, 3, &cfg, Some(&cold.centroids.features), &dom, 2, 0).unwrap();
        assert_eq!(warm.run_js.len(), cfg.repeats, "warm run replaces run 0");
        assert!(warm.warm_was_selected, "perfect warm start must win");
        assert!(warm.iterations <= 2);
    }

    #[test]
    fn warm_dimension_mismatch_rejected() {
        let pts = random_points(20, 3, 8);
        let warm = FeatureMatrix::zeros(2, 5);
        let cfg = ClusterConfig::default();
        let dom = SeedDomain::new(0);
        assert!(matches!(
            cluster_class(&pts, 2, &cfg, Some(&warm), &dom, 1, 0).unwrap_err(),
            Error::Dimension(_)
        ));
        let warm_wrong_k = FeatureMatrix::zeros(3, 3);
        assert!(matches!(
            cluster_class(&pts, 2, &cfg, Some(&warm_wrong_k), &dom, 1, 0).unwrap_err(),
            Error::Dimension(_)
        ));
    }

    #[test]
    fn cluster_class_deterministic_across_thread_counts() {
        let pts = random_points(200, 5, 13);
        let cfg = ClusterConfig {
            repeats: 16,
            ..ClusterConfig::default()
        };
        let dom = SeedDomain::new(21);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| cluster_class(&pts, 6, &cfg, None, &dom, 1, 0).unwrap())
        };
        let a = run(1);
        let b = run(8);
        assert_eq!(a.selected_run, b.selected_run);
        assert_eq!(a.j.to_bits(), b.j.to_bits());
        assert_eq!(a.centroids.features.data(), b.centroids.features.data());
        match (&a.assignment, &b.assignment) {
            (Assignment::Hard(x), Assignment::Hard(y)) => assert_eq!(x, y),
            _ => panic!("expected hard assignments"),
        }
    }

    #[test]
    fn fuzzy_mode_returns_soft_assignment_with_positive_mass() {
        let pts = random_points(60, 3, 17);
        let cfg = ClusterConfig {
            mode: ClusterMode::Fuzzy,
            fuzziness: 1.3,
            repeats: 3,
            ..ClusterConfig::default()
        };
        let dom = SeedDomain::new(29);
        let out = cluster_class(&pts, 4, &cfg, None, &dom, 1, 0).unwrap();
        match &out.assignment {
            Assignment::Soft(u) => {
                assert_eq!(u.dim(), 4);
                for c in out.assignment.counts(4) {
                    assert!(c > 0.0);
                }
            }
            _ => panic!("fuzzy mode must return soft memberships"),
        }
        assert!(out.sse >= 0.0);
    }
}
