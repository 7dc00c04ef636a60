//! Baseline feature rankers to compare against: Spearman correlation, first
//! principal component loads, OLS t-scores and drop-column importance.
//! Permutation importance lives next to the forest it permutes.
//!
//! Every ranker reduces to a `Ranking`: non-negative per-feature strengths
//! plus the induced order. Signed statistics enter as magnitudes, since a
//! ranking needs a total order of strength, not direction.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::evaluate::{cv_forest_mae, make_folds};
use crate::forest::TreeParams;
use crate::par;
use crate::rng::{derive_seed, stream};

/// Score assigned in place of an infinite t-statistic when a model fits the
/// response perfectly (zero residual variance).
pub const PERFECT_FIT_SENTINEL: f64 = 1e15;

#[derive(Debug, Clone)]
pub struct Ranking {
    pub method: String,
    /// non-negative strength per feature, indexed by feature
    pub scores: Vec<f64>,
    /// feature indices, best first; ties broken by ascending index
    pub order: Vec<usize>,
    /// set when scores are sentinel values from a zero-residual fit
    pub perfect_fit: bool,
}

impl Ranking {
    pub fn from_scores(method: &str, scores: Vec<f64>) -> Ranking {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Ranking {
            method: method.to_string(),
            scores,
            order,
            perfect_fit: false,
        }
    }
}

/// Average ranks (1-based), ties sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // positions i..=j share rank mean of (i+1)..=(j+1)
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; 0 when either side is constant.
fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut ssa = 0.0;
    let mut ssb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        ssa += (x - ma) * (x - ma);
        ssb += (y - mb) * (y - mb);
    }
    if ssa == 0.0 || ssb == 0.0 {
        return 0.0;
    }
    cov / (ssa.sqrt() * ssb.sqrt())
}

/// |Spearman rank correlation| of each feature with the response.
pub fn spearman_scores(ds: &Dataset) -> Result<Ranking> {
    if ds.n() < 3 {
        return Err(Error::InvalidArg(
            "spearman correlation needs at least 3 rows".into(),
        ));
    }
    let y = ds.y();
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::ConstantResponse);
    }
    let ry = average_ranks(y);
    let scores = par::map_indices(ds.p(), |j| {
        let rx = average_ranks(ds.column(j));
        pearson(&rx, &ry).abs()
    });
    Ok(Ranking::from_scores("spearman", scores))
}

/// |loading| of each feature on the first principal component of the
/// standardized design. Power iteration on the correlation matrix; constant
/// columns standardize to zero and load 0.
pub fn pca_load_scores(ds: &Dataset) -> Result<Ranking> {
    let (n, p) = (ds.n(), ds.p());
    if p < 2 {
        return Err(Error::InvalidArg(
            "pca loads need at least 2 features".into(),
        ));
    }
    let z: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let col = ds.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            if sd == 0.0 {
                vec![0.0; n]
            } else {
                col.iter().map(|v| (v - mean) / sd).collect()
            }
        })
        .collect();
    // correlation matrix, mirrored so it is symmetric bit-for-bit
    let mut c = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in a..p {
            let dot: f64 = z[a].iter().zip(&z[b]).map(|(x, y)| x * y).sum();
            let v = dot / (n - 1) as f64;
            c[a][b] = v;
            c[b][a] = v;
        }
    }
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    for _ in 0..10_000 {
        let w: Vec<f64> = (0..p)
            .map(|a| c[a].iter().zip(&v).map(|(m, x)| m * x).sum())
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            // every column constant: nothing loads
            return Ok(Ranking::from_scores("pca", vec![0.0; p]));
        }
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        v = next;
        if delta < 1e-10 {
            break;
        }
    }
    Ok(Ranking::from_scores(
        "pca",
        v.into_iter().map(f64::abs).collect(),
    ))
}

/// Solve the symmetric positive-definite system a·x = rhs in place via
/// Cholesky. Errors when a pivot falls below `1e-10 · max initial diagonal`,
/// which is how a rank-deficient design shows up here.
fn cholesky_factor(a: &mut [Vec<f64>]) -> Result<()> {
    let m = a.len();
    let max_diag = (0..m).map(|i| a[i][i]).fold(0.0f64, f64::max);
    let threshold = 1e-10 * max_diag;
    for k in 0..m {
        let mut d = a[k][k];
        for i in 0..k {
            d -= a[k][i] * a[k][i];
        }
        if d <= threshold {
            return Err(Error::RankDeficient {
                pivot: d,
                threshold,
            });
        }
        let l = d.sqrt();
        a[k][k] = l;
        for r in k + 1..m {
            let mut s = a[r][k];
            for i in 0..k {
                s -= a[r][i] * a[k][i];
            }
            a[r][k] = s / l;
        }
    }
    Ok(())
}

fn cholesky_solve(l: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let m = l.len();
    let mut x = rhs.to_vec();
    for i in 0..m {
        for k in 0..i {
            let t = x[k];
            x[i] -= l[i][k] * t;
        }
        x[i] /= l[i][i];
    }
    for i in (0..m).rev() {
        for k in i + 1..m {
            let t = x[k];
            x[i] -= l[k][i] * t;
        }
        x[i] /= l[i][i];
    }
    x
}

/// |t| of each coefficient in the least-squares fit y ~ intercept + X.
/// A zero-residual fit has no finite t; those features get sentinel scores
/// ordered by the limit ratio |β|/unit-se and the ranking is flagged.
pub fn ols_t_scores(ds: &Dataset) -> Result<Ranking> {
    let (n, p) = (ds.n(), ds.p());
    if n <= p + 1 {
        return Err(Error::TooFewRows { n, p });
    }
    let m = p + 1;
    let col = |j: usize, i: usize| -> f64 {
        if j == 0 {
            1.0
        } else {
            ds.column(j - 1)[i]
        }
    };
    let mut xtx = vec![vec![0.0; m]; m];
    let mut xty = vec![0.0; m];
    let y = ds.y();
    for a in 0..m {
        for b in a..m {
            let mut s = 0.0;
            for i in 0..n {
                s += col(a, i) * col(b, i);
            }
            xtx[a][b] = s;
            xtx[b][a] = s;
        }
        let mut s = 0.0;
        for i in 0..n {
            s += col(a, i) * y[i];
        }
        xty[a] = s;
    }
    cholesky_factor(&mut xtx)?;
    let beta = cholesky_solve(&xtx, &xty);

    let mut rss = 0.0;
    for i in 0..n {
        let mut fit = 0.0;
        for a in 0..m {
            fit += beta[a] * col(a, i);
        }
        rss += (y[i] - fit) * (y[i] - fit);
    }
    let ymean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ymean) * (v - ymean)).sum();

    // unit standard errors: sqrt(diag of (XᵀX)⁻¹), missing only the σ factor
    let unit_se: Vec<f64> = (1..m)
        .map(|a| {
            let mut e = vec![0.0; m];
            e[a] = 1.0;
            cholesky_solve(&xtx, &e)[a].sqrt()
        })
        .collect();

    if rss <= 1e-12 * tss {
        let ratios: Vec<f64> = (0..p).map(|j| beta[j + 1].abs() / unit_se[j]).collect();
        let top = ratios.iter().fold(0.0f64, |a, &b| a.max(b));
        let scores = if top == 0.0 {
            vec![0.0; p]
        } else {
            ratios.iter().map(|r| PERFECT_FIT_SENTINEL * (r / top)).collect()
        };
        let mut ranking = Ranking::from_scores("ols", scores);
        ranking.perfect_fit = true;
        return Ok(ranking);
    }
    let sigma2 = rss / (n - p - 1) as f64;
    let scores = (0..p)
        .map(|j| (beta[j + 1] / (sigma2.sqrt() * unit_se[j])).abs())
        .collect();
    Ok(Ranking::from_scores("ols", scores))
}

/// Cross-validated MAE increase when a feature is dropped, floored at 0.
/// Every feature reuses the same fold split and the same per-fold forest
/// seeds, so the score isolates the feature set as the only difference.
pub fn drop_column_scores(
    ds: &Dataset,
    params: &TreeParams,
    n_trees: usize,
    folds: usize,
    seed: u64,
) -> Result<Ranking> {
    if ds.p() < 2 {
        return Err(Error::InvalidArg(
            "drop-column scores need at least 2 features".into(),
        ));
    }
    let fold_of = make_folds(ds.n(), folds, seed)?;
    let seed_of = move |f: usize| derive_seed(seed, stream::DROPCOL, f as u64);
    let all = ds.view_all();
    let (baseline, _) = cv_forest_mae(&all, ds.y(), &fold_of, folds, n_trees, params, &seed_of)?;
    let per: Vec<Result<f64>> = par::map_indices(ds.p(), |j| {
        let cols = ds.view_without(j);
        let (mae_j, _) = cv_forest_mae(&cols, ds.y(), &fold_of, folds, n_trees, params, &seed_of)?;
        Ok((mae_j - baseline).max(0.0))
    });
    let scores = per.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(Ranking::from_scores("dropcol", scores))
}
