//! Downstream evaluation with the closed-form linear classifier on
//! propagated features, plus coreset baselines and empirical checks of the
//! error-bound inequalities.

pub mod baselines;
pub mod bounds;

pub use baselines::{coreset_baselines, BaselineMethod};
pub use bounds::{
    check_theorem1, check_theorem2, check_theorem3, run_bound_sweep, BoundCheck, BoundReport,
    SkippedInstance, Thm3Outcome,
};

use crate::condense::CondensedGraph;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::LabelSet;
use nalgebra::{Cholesky, DMatrix};

/// Row-major FeatureMatrix → nalgebra dense matrix.
pub(crate) fn to_dmatrix(f: &FeatureMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(f.rows(), f.dim(), f.data())
}

/// nalgebra dense matrix → row-major FeatureMatrix.
pub(crate) fn from_dmatrix(m: &DMatrix<f64>) -> FeatureMatrix {
    let mut out = FeatureMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.set(i, j, m[(i, j)]);
        }
    }
    out
}

/// One-hot matrix for an explicit class-per-row list.
pub fn one_hot_rows(classes: &[usize], num_classes: usize) -> FeatureMatrix {
    let mut y = FeatureMatrix::zeros(classes.len(), num_classes);
    for (i, &c) in classes.iter().enumerate() {
        y.set(i, c, 1.0);
    }
    y
}

/// Closed-form ridge least-squares classifier W = (FᵀF + εI)⁻¹FᵀY.
#[derive(Debug, Clone)]
pub struct LinearModel {
    /// d × c weight matrix.
    pub w: FeatureMatrix,
    pub epsilon: f64,
}

/// Fits the classifier by a Cholesky solve of the normal equations — no
/// explicit inverse. ε = 0 demands full column rank.
pub fn fit_linear(f: &FeatureMatrix, y: &FeatureMatrix, epsilon: f64) -> Result<LinearModel> {
    fit_linear_weighted(f, y, None, epsilon)
}

/// Weighted variant: row i participates with multiplicity `weights[i]`,
/// solving (FᵀΛF + εI)W = FᵀΛY. A centroid weighted by its cluster size
/// reproduces the fit over that many duplicated rows.
pub fn fit_linear_weighted(
    f: &FeatureMatrix,
    y: &FeatureMatrix,
    weights: Option<&[f64]>,
    epsilon: f64,
) -> Result<LinearModel> {
    if f.rows() == 0 {
        return Err(Error::Config("cannot fit on zero rows".into()));
    }
    if f.rows() != y.rows() {
        return Err(Error::Dimension(format!(
            "{} feature rows vs {} label rows",
            f.rows(),
            y.rows()
        )));
    }
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Error::Config(format!("epsilon {epsilon} must be ≥ 0")));
    }
    let mut fm = to_dmatrix(f);
    let mut ym = to_dmatrix(y);
    if let Some(w) = weights {
        if w.len() != f.rows() {
            return Err(Error::Dimension(format!(
                "{} weights for {} rows",
                w.len(),
                f.rows()
            )));
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::Config("row weights must be finite and ≥ 0".into()));
        }
        // Scale rows by √λ so the normal equations carry Λ once.
        for (i, &wi) in w.iter().enumerate() {
            let s = wi.sqrt();
            fm.row_mut(i).scale_mut(s);
            ym.row_mut(i).scale_mut(s);
        }
    }
    let mut gram = fm.transpose() * &fm;
    for i in 0..gram.nrows() {
        gram[(i, i)] += epsilon;
    }
    let rhs = fm.transpose() * &ym;
    let chol = Cholesky::new(gram).ok_or_else(|| {
        Error::Numeric(
            "normal equations are singular; set epsilon > 0 to regularize".into(),
        )
    })?;
    let w = from_dmatrix(&chol.solve(&rhs));
    w.assert_finite("fitted weights")?;
    Ok(LinearModel { w, epsilon })
}

/// Fraction of rows whose argmax prediction matches the label; prediction
/// ties resolve to the lowest class index.
pub fn evaluate(model: &LinearModel, f_test: &FeatureMatrix, y_test: &[usize]) -> Result<f64> {
    if f_test.rows() != y_test.len() {
        return Err(Error::Dimension(format!(
            "{} test rows vs {} labels",
            f_test.rows(),
            y_test.len()
        )));
    }
    if f_test.dim() != model.w.rows() {
        return Err(Error::Dimension(format!(
            "test dim {} vs model dim {}",
            f_test.dim(),
            model.w.rows()
        )));
    }
    if y_test.is_empty() {
        return Err(Error::Config("cannot evaluate on zero rows".into()));
    }
    let c = model.w.dim();
    let mut correct = 0usize;
    for i in 0..f_test.rows() {
        let row = f_test.row(i);
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for k in 0..c {
            let score: f64 = row
                .iter()
                .enumerate()
                .map(|(j, &x)| x * model.w.get(j, k))
                .sum();
            if score > best_score {
                best_score = score;
                best = k;
            }
        }
        if best == y_test[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / y_test.len() as f64)
}

/// The standard downstream protocol: fit on the condensed graph's centroids
/// and labels, score on the given rows of the full propagated features.
pub fn downstream_accuracy(
    cg: &CondensedGraph,
    f_full: &FeatureMatrix,
    labels: &LabelSet,
    split: &[usize],
    epsilon: f64,
) -> Result<f64> {
    let y = one_hot_rows(&cg.labels, labels.num_classes);
    let model = fit_linear(&cg.features, &y, epsilon)?;
    let f_test = f_full.select_rows(split);
    let y_test: Vec<usize> = split.iter().map(|&i| labels.labels[i]).collect();
    evaluate(&model, &f_test, &y_test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> FeatureMatrix {
        let mut m = FeatureMatrix::zeros(rows, cols);
        for v in m.data_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        m
    }

    #[test]
    fn identity_features_recover_identity_weights() {
        let f = FeatureMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let y = f.clone();
        let model = fit_linear(&f, &y, 0.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((model.w.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicated_column_is_singular_without_ridge() {
        let f = FeatureMatrix::from_rows(&[
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![-1.0, -1.0],
        ])
        .unwrap();
        let y = one_hot_rows(&[0, 1, 0], 2);
        let err = fit_linear(&f, &y, 0.0);
        assert!(matches!(err, Err(Error::Numeric(_))));
        let msg = format!("{}", err.unwrap_err());
        assert!(msg.contains("epsilon"), "error advises regularization: {msg}");
        let model = fit_linear(&f, &y, 1e-6).unwrap();
        assert!(model.w.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn normal_equation_residual_is_tiny() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_matrix(100, 10, &mut rng);
        let y = random_matrix(100, 3, &mut rng);
        let eps = 1e-6;
        let model = fit_linear(&f, &y, eps).unwrap();
        let fm = to_dmatrix(&f);
        let wm = to_dmatrix(&model.w);
        let ym = to_dmatrix(&y);
        let mut gram = fm.transpose() * &fm;
        for i in 0..gram.nrows() {
            gram[(i, i)] += eps;
        }
        let residual = (&gram * &wm - fm.transpose() * &ym).norm();
        assert!(residual < 1e-8, "normal-equation residual {residual}");
    }

    #[test]
    fn fit_is_a_local_minimum_of_the_ridge_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_matrix(40, 6, &mut rng);
        let y = random_matrix(40, 2, &mut rng);
        let eps = 1e-6;
        let model = fit_linear(&f, &y, eps).unwrap();
        let objective = |w: &FeatureMatrix| -> f64 {
            let fm = to_dmatrix(&f);
            let res = &fm * to_dmatrix(w) - to_dmatrix(&y);
            res.norm_squared() + eps * to_dmatrix(w).norm_squared()
        };
        let base = objective(&model.w);
        for _ in 0..20 {
            let mut delta = random_matrix(6, 2, &mut rng);
            let scale = 1e-3 / to_dmatrix(&delta).norm();
            for v in delta.data_mut() {
                *v *= scale;
            }
            let mut perturbed = model.w.clone();
            for (p, d) in perturbed.data_mut().iter_mut().zip(delta.data()) {
                *p += d;
            }
            assert!(objective(&perturbed) >= base, "perturbation improved the fit");
        }
    }

    #[test]
    fn separable_line_classifies_perfectly() {
        let f = FeatureMatrix::from_rows(&[
            vec![-2.0],
            vec![-1.0],
            vec![1.0],
            vec![2.0],
        ])
        .unwrap();
        let labels = [0usize, 0, 1, 1];
        let y = one_hot_rows(&labels, 2);
        let model = fit_linear(&f, &y, 1e-6).unwrap();
        assert_eq!(evaluate(&model, &f, &labels).unwrap(), 1.0);
    }

    #[test]
    fn shuffled_labels_score_at_chance() {
        // Symmetric featureless data with random labels: accuracy must land
        // near 1/c. 600 rows, c = 3 → σ = √(p(1−p)/n) ≈ 0.019.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 600;
        let f = random_matrix(n, 4, &mut rng);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3usize)).collect();
        // Evaluate a FIXED arbitrary model against fresh random labels: the
        // prediction is independent of the label, so matches are Bernoulli(1/3).
        let model = LinearModel {
            w: random_matrix(4, 3, &mut rng),
            epsilon: 0.0,
        };
        let acc = evaluate(&model, &f, &labels).unwrap();
        let sigma = ((1.0 / 3.0) * (2.0 / 3.0) / n as f64).sqrt();
        assert!(
            (acc - 1.0 / 3.0).abs() < 3.0 * sigma,
            "accuracy {acc} not within 3σ of 1/3"
        );
    }

    #[test]
    fn evaluate_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = random_matrix(50, 5, &mut rng);
        let labels: Vec<usize> = (0..50).map(|_| rng.gen_range(0..4usize)).collect();
        let y = one_hot_rows(&labels, 4);
        let model = fit_linear(&f, &y, 1e-6).unwrap();
        let base = evaluate(&model, &f, &labels).unwrap();
        let perm: Vec<usize> = (0..50).rev().collect();
        let f_perm = f.select_rows(&perm);
        let labels_perm: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
        assert_eq!(base, evaluate(&model, &f_perm, &labels_perm).unwrap());
    }

    #[test]
    fn weighted_fit_matches_duplicated_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let centroids = random_matrix(6, 3, &mut rng);
        let y = one_hot_rows(&[0, 0, 1, 1, 2, 2], 3);
        let sizes = [3.0, 1.0, 4.0, 2.0, 5.0, 1.0];
        let weighted = fit_linear_weighted(&centroids, &y, Some(&sizes), 1e-6).unwrap();

        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, &s) in sizes.iter().enumerate() {
            for _ in 0..s as usize {
                rows.push(centroids.row(i).to_vec());
                labels.push([0, 0, 1, 1, 2, 2][i]);
            }
        }
        let expanded = FeatureMatrix::from_rows(&rows).unwrap();
        let y_exp = one_hot_rows(&labels, 3);
        let plain = fit_linear(&expanded, &y_exp, 1e-6).unwrap();
        for (a, b) in weighted.w.data().iter().zip(plain.w.data()) {
            assert!((a - b).abs() < 1e-6, "weighted {a} vs expanded {b}");
        }
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let f = FeatureMatrix::zeros(3, 2);
        let y = FeatureMatrix::zeros(4, 2);
        assert!(matches!(fit_linear(&f, &y, 0.1), Err(Error::Dimension(_))));
        let model = LinearModel {
            w: FeatureMatrix::zeros(2, 2),
            epsilon: 0.0,
        };
        assert!(evaluate(&model, &FeatureMatrix::zeros(2, 3), &[0, 1]).is_err());
    }
}
