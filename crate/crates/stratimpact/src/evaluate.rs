//! Top-k validation: how well do the first k features of a ranking predict?
//!
//! For each k the dataset is restricted to the ranking's top k features and a
//! forest is cross-validated on a fold split that depends only on
//! `(n, folds, seed)` — never on the ranking — so curves from different
//! rankers are directly comparable, and rankers that pick the same feature
//! set get bit-identical points. To that end the selected features are always
//! presented to the forest in ascending index order: two rankings that agree
//! as a *set* at some k (always true at k = p) then train literally the same
//! model.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{fit_forest, mae, permutation_importance, TreeParams};
use crate::impact::{compute_all, sample_sd};
use crate::par;
use crate::pd::StratParams;
use crate::rankers::{
    drop_column_scores, ols_t_scores, pca_load_scores, spearman_scores, Ranking,
};
use crate::rng::{derive_seed, rng_from, stream};
use rand::seq::SliceRandom;
use std::str::FromStr;

/// Permutation repeats used when ranking by permutation importance. Five
/// repeats stabilize the ordering without dominating the runtime.
pub const PERMUTATION_REPEATS: usize = 5;

/// Assign each row to a fold. Depends only on the arguments, so every caller
/// sharing (n, folds, seed) gets the same split.
pub fn make_folds(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidArg("need at least 2 folds".into()));
    }
    if folds > n {
        return Err(Error::InvalidArg(format!(
            "cannot split {n} rows into {folds} folds"
        )));
    }
    let mut rows: Vec<usize> = (0..n).collect();
    let mut rng = rng_from(derive_seed(seed, stream::FOLDS, 0));
    rows.shuffle(&mut rng);
    let base = n / folds;
    let rem = n % folds;
    let mut fold_of = vec![0usize; n];
    let mut at = 0;
    for f in 0..folds {
        let size = base + usize::from(f < rem);
        for &i in &rows[at..at + size] {
            fold_of[i] = f;
        }
        at += size;
    }
    Ok(fold_of)
}

/// Cross-validated MAE of a bagged forest on the given columns: (mean, sd)
/// over folds. `seed_of` fixes the forest seed per fold so callers control
/// whether two invocations train comparable models.
pub(crate) fn cv_forest_mae(
    cols: &[&[f64]],
    y: &[f64],
    fold_of: &[usize],
    folds: usize,
    n_trees: usize,
    params: &TreeParams,
    seed_of: &(dyn Fn(usize) -> u64 + Sync),
) -> Result<(f64, f64)> {
    let n = y.len();
    let per: Vec<Result<f64>> = par::map_indices(folds, |f| {
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
        let gather = |rows: &[usize]| -> Vec<Vec<f64>> {
            cols.iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect()
        };
        let tr_cols = gather(&train);
        let tr_views: Vec<&[f64]> = tr_cols.iter().map(|c| c.as_slice()).collect();
        let tr_y: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let forest = fit_forest(
            &tr_views,
            &tr_y,
            n_trees,
            true,
            &TreeParams {
                seed: seed_of(f),
                ..params.clone()
            },
        )?;
        let te_cols = gather(&test);
        let te_views: Vec<&[f64]> = te_cols.iter().map(|c| c.as_slice()).collect();
        let te_y: Vec<f64> = test.iter().map(|&i| y[i]).collect();
        Ok(mae(&forest.predict(&te_views), &te_y))
    });
    let maes = per.into_iter().collect::<Result<Vec<f64>>>()?;
    let mean = maes.iter().sum::<f64>() / maes.len() as f64;
    Ok((mean, sample_sd(&maes, mean)))
}

#[derive(Debug, Clone)]
pub struct MAECurve {
    pub method: String,
    pub k_values: Vec<usize>,
    pub mae: Vec<f64>,
    pub mae_sd: Vec<f64>,
}

/// CV-MAE at every k = 1..=k_max over the ranking's top-k feature sets.
pub fn topk_error_curve(
    ds: &Dataset,
    ranking: &Ranking,
    k_max: usize,
    folds: usize,
    params: &TreeParams,
    n_trees: usize,
    seed: u64,
) -> Result<MAECurve> {
    let p = ds.p();
    if ranking.order.len() != p {
        return Err(Error::InvalidArg(format!(
            "ranking covers {} features, dataset has {p}",
            ranking.order.len()
        )));
    }
    if k_max < 1 || k_max > p {
        return Err(Error::InvalidArg(format!(
            "k_max must be in 1..={p}, got {k_max}"
        )));
    }
    let fold_of = make_folds(ds.n(), folds, seed)?;
    let mut mae_v = Vec::with_capacity(k_max);
    let mut sd_v = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut sel = ranking.order[..k].to_vec();
        sel.sort_unstable();
        let cols = ds.view_of(&sel);
        let seed_of = move |f: usize| derive_seed(seed, stream::EVAL, (k * folds + f) as u64);
        let (m, s) = cv_forest_mae(&cols, ds.y(), &fold_of, folds, n_trees, params, &seed_of)?;
        mae_v.push(m);
        sd_v.push(s);
    }
    Ok(MAECurve {
        method: ranking.method.clone(),
        k_values: (1..=k_max).collect(),
        mae: mae_v,
        mae_sd: sd_v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMethod {
    StratImportance,
    StratImpact,
    Spearman,
    Pca,
    Ols,
    Permutation,
    DropCol,
}

impl RankMethod {
    pub const ALL: [RankMethod; 7] = [
        RankMethod::StratImportance,
        RankMethod::StratImpact,
        RankMethod::Spearman,
        RankMethod::Pca,
        RankMethod::Ols,
        RankMethod::Permutation,
        RankMethod::DropCol,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            RankMethod::StratImportance => "stratimpact-importance",
            RankMethod::StratImpact => "stratimpact-impact",
            RankMethod::Spearman => "spearman",
            RankMethod::Pca => "pca",
            RankMethod::Ols => "ols",
            RankMethod::Permutation => "permutation",
            RankMethod::DropCol => "dropcol",
        }
    }
}

impl FromStr for RankMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<RankMethod> {
        RankMethod::ALL
            .iter()
            .find(|m| m.label() == s)
            .copied()
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Build the ranking a method produces for this dataset. Model-based rankers
/// draw their model seed from `params.seed`; resampling-style randomness
/// (permutation shuffles, fold assignment) flows from `seed`.
pub fn ranking_for(
    ds: &Dataset,
    method: RankMethod,
    params: &TreeParams,
    n_trees: usize,
    folds: usize,
    seed: u64,
) -> Result<Ranking> {
    match method {
        RankMethod::StratImportance | RankMethod::StratImpact => {
            let sp = StratParams {
                min_samples_leaf: params.min_samples_leaf,
                n_strat_trees: 1,
                bootstrap_strata: false,
                seed: params.seed,
            };
            let report = compute_all(ds, &sp)?;
            let mut raw = vec![0.0; ds.p()];
            for s in &report.scores {
                raw[s.feature] = if method == RankMethod::StratImportance {
                    s.importance
                } else {
                    s.impact
                };
            }
            Ok(Ranking::from_scores(method.label(), raw))
        }
        RankMethod::Spearman => spearman_scores(ds),
        RankMethod::Pca => pca_load_scores(ds),
        RankMethod::Ols => ols_t_scores(ds),
        RankMethod::Permutation => {
            let all = ds.view_all();
            let forest = fit_forest(&all, ds.y(), n_trees, true, params)?;
            let raw = permutation_importance(&forest, &all, ds.y(), PERMUTATION_REPEATS, seed)?;
            Ok(Ranking::from_scores(
                method.label(),
                raw.into_iter().map(|v| v.max(0.0)).collect(),
            ))
        }
        RankMethod::DropCol => drop_column_scores(ds, params, n_trees, folds, seed),
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub rankings: Vec<Ranking>,
    pub curves: Vec<MAECurve>,
}

/// One error curve per method, all sharing fold splits and per-(k, fold)
/// forest seeds.
pub fn compare_rankings(
    ds: &Dataset,
    methods: &[RankMethod],
    k_max: usize,
    folds: usize,
    params: &TreeParams,
    n_trees: usize,
    seed: u64,
) -> Result<Comparison> {
    if methods.is_empty() {
        return Err(Error::InvalidArg("no ranking methods given".into()));
    }
    let mut rankings = Vec::with_capacity(methods.len());
    let mut curves = Vec::with_capacity(methods.len());
    for &m in methods {
        let ranking = ranking_for(ds, m, params, n_trees, folds, seed)?;
        curves.push(topk_error_curve(ds, &ranking, k_max, folds, params, n_trees, seed)?);
        rankings.push(ranking);
    }
    Ok(Comparison { rankings, curves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureKind;
    use rand::Rng;

    fn ds(cols: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
        let p = cols.len();
        Dataset::new(
            (0..p).map(|j| format!("x{}", j + 1)).collect(),
            vec![FeatureKind::Numeric; p],
            cols,
            y,
        )
        .unwrap()
    }

    #[test]
    fn folds_partition_evenly() {
        let f = make_folds(23, 5, 1).unwrap();
        assert_eq!(f.len(), 23);
        let mut counts = vec![0usize; 5];
        for &x in &f {
            assert!(x < 5);
            counts[x] += 1;
        }
        counts.sort_unstable();
        assert_eq!(counts, vec![4, 4, 5, 5, 5]);
        assert_eq!(f, make_folds(23, 5, 1).unwrap());
        assert_ne!(f, make_folds(23, 5, 2).unwrap());
        assert!(make_folds(10, 1, 1).is_err());
        assert!(make_folds(3, 4, 1).is_err());
    }

    #[test]
    fn constant_response_gives_zero_mae() {
        let n = 40;
        let x1: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let x2: Vec<f64> = (0..n).map(|i| ((i * 7) % 13) as f64).collect();
        let d = ds(vec![x1, x2], vec![7.0; n]);
        let ranking = Ranking::from_scores("t", vec![1.0, 0.5]);
        let curve = topk_error_curve(&d, &ranking, 2, 4, &TreeParams::default(), 5, 1).unwrap();
        assert_eq!(curve.mae, vec![0.0, 0.0], "constant y is predicted exactly");
        assert_eq!(curve.mae_sd, vec![0.0, 0.0]);
    }

    #[test]
    fn informative_first_beats_noise_first_at_k1() {
        let mut rng = rng_from(3);
        let n = 100;
        let x1: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = x1.iter().map(|v| 5.0 * v).collect();
        let d = ds(vec![x1, x2], y);
        let params = TreeParams { min_samples_leaf: 5, ..Default::default() };
        let good = Ranking::from_scores("good", vec![1.0, 0.0]);
        let bad = Ranking::from_scores("bad", vec![0.0, 1.0]);
        let cg = topk_error_curve(&d, &good, 2, 3, &params, 8, 11).unwrap();
        let cb = topk_error_curve(&d, &bad, 2, 3, &params, 8, 11).unwrap();
        assert!(
            cg.mae[0] < cb.mae[0],
            "informative-first {} must beat noise-first {}",
            cg.mae[0],
            cb.mae[0]
        );
    }

    #[test]
    fn curves_coincide_at_full_feature_set() {
        let mut rng = rng_from(9);
        let n = 80;
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|i| 2.0 * cols[0][i] + cols[1][i]).collect();
        let d = ds(cols, y);
        let params = TreeParams { min_samples_leaf: 5, ..Default::default() };
        let a = Ranking::from_scores("a", vec![3.0, 2.0, 1.0]);
        let b = Ranking::from_scores("b", vec![1.0, 2.0, 3.0]);
        let ca = topk_error_curve(&d, &a, 3, 3, &params, 6, 5).unwrap();
        let cb = topk_error_curve(&d, &b, 3, 3, &params, 6, 5).unwrap();
        assert_eq!(
            ca.mae[2], cb.mae[2],
            "same feature set, same seeds: the k=p points must match bitwise"
        );
        assert_eq!(ca.mae_sd[2], cb.mae_sd[2]);
        assert_ne!(ca.mae[0], cb.mae[0], "different k=1 features should differ");
    }

    #[test]
    fn method_labels_round_trip() {
        for m in RankMethod::ALL {
            assert_eq!(m.label().parse::<RankMethod>().unwrap(), m);
        }
        assert!(matches!(
            "gini".parse::<RankMethod>(),
            Err(Error::UnknownMethod(_))
        ));
    }

    #[test]
    fn compare_runs_every_method() {
        let mut rng = rng_from(21);
        let n = 70;
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 4.0 * cols[0][i] + cols[1][i] + rng.random_range(-0.05..0.05))
            .collect();
        let d = ds(cols, y);
        let params = TreeParams { min_samples_leaf: 5, ..Default::default() };
        let cmp = compare_rankings(&d, &RankMethod::ALL, 3, 3, &params, 6, 2).unwrap();
        assert_eq!(cmp.curves.len(), 7);
        assert_eq!(cmp.rankings.len(), 7);
        for (r, c) in cmp.rankings.iter().zip(&cmp.curves) {
            assert_eq!(r.method, c.method);
            assert_eq!(c.k_values, vec![1, 2, 3]);
            assert!(c.mae.iter().all(|&m| m >= 0.0));
        }
        // every curve ends on the same full-feature point
        let last = cmp.curves[0].mae[2];
        for c in &cmp.curves {
            assert_eq!(c.mae[2], last);
        }
        assert!(matches!(
            compare_rankings(&d, &[], 3, 3, &params, 6, 2),
            Err(Error::InvalidArg(_))
        ));
    }

    #[test]
    fn impact_and_importance_agree_on_all_unique_data() {
        let mut rng = rng_from(33);
        let n = 90;
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|i| 3.0 * cols[0][i] + cols[1][i]).collect();
        let d = ds(cols, y);
        let params = TreeParams { min_samples_leaf: 5, ..Default::default() };
        let ra = ranking_for(&d, RankMethod::StratImportance, &params, 6, 3, 2).unwrap();
        let rb = ranking_for(&d, RankMethod::StratImpact, &params, 6, 3, 2).unwrap();
        assert_eq!(ra.scores, rb.scores, "unique values make the two scores identical");
        assert_eq!(ra.order, rb.order);
        let ca = topk_error_curve(&d, &ra, 2, 3, &params, 6, 2).unwrap();
        let cb = topk_error_curve(&d, &rb, 2, 3, &params, 6, 2).unwrap();
        assert_eq!(ca.mae, cb.mae);
        assert_eq!(ca.mae_sd, cb.mae_sd);
    }

    #[test]
    fn singleton_compare_equals_direct_curve() {
        let mut rng = rng_from(14);
        let n = 60;
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|i| cols[0][i] * 2.0).collect();
        let d = ds(cols, y);
        let params = TreeParams { min_samples_leaf: 5, ..Default::default() };
        let cmp = compare_rankings(&d, &[RankMethod::Spearman], 2, 3, &params, 5, 8).unwrap();
        let r = spearman_scores(&d).unwrap();
        let direct = topk_error_curve(&d, &r, 2, 3, &params, 5, 8).unwrap();
        assert_eq!(cmp.curves[0].mae, direct.mae);
        assert_eq!(cmp.rankings[0].order, r.order);
    }

    use crate::rng::rng_from;
}
