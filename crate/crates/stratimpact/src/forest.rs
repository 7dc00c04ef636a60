//! CART regression trees and bagged ensembles.
//!
//! Split search is exhaustive variance reduction: every candidate feature is
//! scanned over the midpoints between consecutive distinct values, and the
//! split minimizing the children's summed SSE wins. Ties break to the lower
//! feature index, then the lower threshold — enforced by scanning features
//! and thresholds in ascending order and accepting only strict improvements.
//! `min_samples_leaf` is the only stopping rule; there is no depth cap.
//! Categorical codes are treated as ordered integers: the trees here exist to
//! stratify rows into y-homogeneous groups or to serve as a generic CV model,
//! not to produce semantically meaningful splits.
//!
//! Determinism: node candidates are sorted by `(x, y)` pairs, not by row
//! index, so the fitted structure is invariant to row permutation of the
//! input; all bagging randomness comes from per-tree seeds derived before the
//! trees are dispatched, so parallel fits equal sequential ones.

use rand::Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::rng::{derive_seed, rng_from, stream};

#[derive(Debug, Clone)]
pub struct TreeParams {
    /// Minimum rows in each child of a split. The sole regularizer.
    pub min_samples_leaf: usize,
    /// Fraction of features considered per split, in (0, 1]. At 1.0 every
    /// split is deterministic and the seed is never consumed.
    pub max_features: f64,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_samples_leaf: 20,
            max_features: 1.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        rows: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Row groups of all leaves, in deterministic (depth-first) tree order.
    /// Under bagging a row id appears once per time it was drawn.
    pub fn leaf_groups(&self) -> Vec<&[usize]> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { rows, .. } => Some(rows.as_slice()),
                _ => None,
            })
            .collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_groups().len()
    }

    fn predict_row(&self, cols: &[&[f64]], i: usize) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if cols[*feature][i] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn predict(&self, cols: &[&[f64]]) -> Vec<f64> {
        let n = cols.first().map_or(0, |c| c.len());
        (0..n).map(|i| self.predict_row(cols, i)).collect()
    }
}

struct Builder<'a> {
    cols: &'a [&'a [f64]],
    y: &'a [f64],
    min_samples_leaf: usize,
    /// number of features tried per split (ceil(max_features * p), >= 1)
    n_try: usize,
    rng: Option<rand_chacha::ChaCha8Rng>,
    nodes: Vec<Node>,
}

impl<'a> Builder<'a> {
    fn build(&mut self, rows: Vec<usize>) -> usize {
        if let Some((feature, threshold)) = self.best_split(&rows) {
            let (mut left, mut right) = (Vec::new(), Vec::new());
            for &i in &rows {
                if self.cols[feature][i] <= threshold {
                    left.push(i);
                } else {
                    right.push(i);
                }
            }
            let id = self.nodes.len();
            // placeholder, patched after the children exist
            self.nodes.push(Node::Leaf {
                value: 0.0,
                rows: Vec::new(),
            });
            let l = self.build(left);
            let r = self.build(right);
            self.nodes[id] = Node::Split {
                feature,
                threshold,
                left: l,
                right: r,
            };
            id
        } else {
            let value = rows.iter().map(|&i| self.y[i]).sum::<f64>() / rows.len() as f64;
            let id = self.nodes.len();
            self.nodes.push(Node::Leaf { value, rows });
            id
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.cols.len();
        if self.n_try >= p {
            return (0..p).collect();
        }
        // partial Fisher-Yates, then ascending so the tie-break law holds
        let rng = self.rng.as_mut().expect("rng required when subsampling features");
        let mut idx: Vec<usize> = (0..p).collect();
        for i in 0..self.n_try {
            let j = rng.random_range(i..p);
            idx.swap(i, j);
        }
        idx.truncate(self.n_try);
        idx.sort_unstable();
        idx
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<(usize, f64)> {
        let m = rows.len();
        let msl = self.min_samples_leaf;
        if m < 2 * msl {
            return None;
        }
        let mut best: Option<(f64, usize, f64)> = None; // (sse, feature, threshold)
        for f in self.candidate_features() {
            let col = self.cols[f];
            // sort candidates by (x, y): value-canonical, so the chosen split
            // and its score do not depend on the incoming row order
            let mut pairs: Vec<(f64, f64)> = rows.iter().map(|&i| (col[i], self.y[i])).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            if pairs[0].0 == pairs[m - 1].0 {
                continue; // constant within the node
            }
            let mut pre_y = Vec::with_capacity(m + 1);
            let mut pre_yy = Vec::with_capacity(m + 1);
            pre_y.push(0.0);
            pre_yy.push(0.0);
            for &(_, yv) in &pairs {
                pre_y.push(pre_y.last().unwrap() + yv);
                pre_yy.push(pre_yy.last().unwrap() + yv * yv);
            }
            let total_y = pre_y[m];
            let total_yy = pre_yy[m];
            for s in msl..=(m - msl) {
                if pairs[s - 1].0 == pairs[s].0 {
                    continue; // not a value boundary
                }
                let (sl, sll) = (pre_y[s], pre_yy[s]);
                let sse_l = sll - sl * sl / s as f64;
                let sse_r = (total_yy - sll) - (total_y - sl) * (total_y - sl) / (m - s) as f64;
                let sse = sse_l + sse_r;
                if best.as_ref().is_none_or(|b| sse < b.0) {
                    let a = pairs[s - 1].0;
                    let b = pairs[s].0;
                    // midpoint can round onto b for adjacent floats; clamp so
                    // `x <= threshold` always reproduces the scanned boundary
                    let mut thr = a + (b - a) / 2.0;
                    if !(thr < b) {
                        thr = a;
                    }
                    best = Some((sse, f, thr));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Fit one tree on `cols`/`y`. An empty feature set is allowed and yields a
/// single leaf holding every row (that is exactly what stratifying a
/// one-feature dataset degenerates to).
pub fn fit_tree(cols: &[&[f64]], y: &[f64], params: &TreeParams) -> Result<Tree> {
    validate(cols, y, params)?;
    fit_tree_on_rows(cols, y, (0..y.len()).collect(), params)
}

fn fit_tree_on_rows(
    cols: &[&[f64]],
    y: &[f64],
    rows: Vec<usize>,
    params: &TreeParams,
) -> Result<Tree> {
    let p = cols.len();
    let n_try = if params.max_features >= 1.0 {
        p
    } else {
        ((params.max_features * p as f64).ceil() as usize).clamp(1, p)
    };
    let rng = if n_try < p {
        Some(rng_from(params.seed))
    } else {
        None
    };
    let mut b = Builder {
        cols,
        y,
        min_samples_leaf: params.min_samples_leaf,
        n_try,
        rng,
        nodes: Vec::new(),
    };
    let root = b.build(rows);
    debug_assert_eq!(root, 0);
    Ok(Tree { nodes: b.nodes })
}

fn validate(cols: &[&[f64]], y: &[f64], params: &TreeParams) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyData);
    }
    if cols.iter().any(|c| c.len() != y.len()) {
        return Err(Error::InvalidArg("feature/response length mismatch".into()));
    }
    if params.min_samples_leaf == 0 {
        return Err(Error::InvalidArg("min_samples_leaf must be at least 1".into()));
    }
    if !(params.max_features > 0.0 && params.max_features <= 1.0) {
        return Err(Error::InvalidArg(format!(
            "max_features must be in (0, 1], got {}",
            params.max_features
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Forest {
    pub trees: Vec<Tree>,
    /// oob[t][i]: row i was *not* drawn into tree t's bag. All-false when
    /// bagging is off.
    pub oob: Vec<Vec<bool>>,
    n_rows: usize,
}

/// Fit `n_trees` trees. With `bagging` each tree sees a size-n bootstrap of
/// the rows (drawn from a per-tree derived seed) and its out-of-bag mask is
/// recorded; without it every tree sees all rows, which is only useful
/// together with `max_features < 1`.
pub fn fit_forest(
    cols: &[&[f64]],
    y: &[f64],
    n_trees: usize,
    bagging: bool,
    params: &TreeParams,
) -> Result<Forest> {
    validate(cols, y, params)?;
    if n_trees == 0 {
        return Err(Error::InvalidArg("n_trees must be at least 1".into()));
    }
    let n = y.len();
    let results: Vec<Result<(Tree, Vec<bool>)>> = par::map_indices(n_trees, |t| {
        let tp = TreeParams {
            seed: derive_seed(params.seed, stream::TREE, t as u64),
            ..params.clone()
        };
        let (rows, oob) = if bagging {
            let mut rng = rng_from(derive_seed(params.seed, stream::BAG, t as u64));
            let mut in_bag = vec![false; n];
            let rows: Vec<usize> = (0..n)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    in_bag[i] = true;
                    i
                })
                .collect();
            (rows, in_bag.iter().map(|&b| !b).collect())
        } else {
            ((0..n).collect(), vec![false; n])
        };
        Ok((fit_tree_on_rows(cols, y, rows, &tp)?, oob))
    });
    let mut trees = Vec::with_capacity(n_trees);
    let mut oob = Vec::with_capacity(n_trees);
    for r in results {
        let (t, o) = r?;
        trees.push(t);
        oob.push(o);
    }
    Ok(Forest {
        trees,
        oob,
        n_rows: n,
    })
}

impl Forest {
    /// Mean of the per-tree predictions, row by row.
    pub fn predict(&self, cols: &[&[f64]]) -> Vec<f64> {
        let n = cols.first().map_or(0, |c| c.len());
        let nt = self.trees.len() as f64;
        par::map_indices(n, |i| {
            self.trees.iter().map(|t| t.predict_row(cols, i)).sum::<f64>() / nt
        })
    }

    /// Out-of-bag MAE: each row predicted by the trees that never saw it.
    /// None when no row is out of bag anywhere (e.g. bagging off).
    pub fn oob_mae(&self, cols: &[&[f64]], y: &[f64]) -> Option<f64> {
        let mut err = 0.0;
        let mut used = 0usize;
        for i in 0..self.n_rows {
            let mut sum = 0.0;
            let mut cnt = 0usize;
            for (t, tree) in self.trees.iter().enumerate() {
                if self.oob[t][i] {
                    sum += tree.predict_row(cols, i);
                    cnt += 1;
                }
            }
            if cnt > 0 {
                err += (sum / cnt as f64 - y[i]).abs();
                used += 1;
            }
        }
        (used > 0).then(|| err / used as f64)
    }
}

pub fn mae(pred: &[f64], y: &[f64]) -> f64 {
    assert_eq!(pred.len(), y.len());
    pred.iter()
        .zip(y)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / y.len() as f64
}

/// Permutation importance of each feature: mean over `n_repeats` of
/// (MAE with column j shuffled) − (baseline MAE), evaluated on the data
/// given here. A feature no split ever touches scores exactly 0 because the
/// shuffled column never alters a prediction path.
pub fn permutation_importance(
    forest: &Forest,
    cols: &[&[f64]],
    y: &[f64],
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_repeats == 0 {
        return Err(Error::InvalidArg("n_repeats must be at least 1".into()));
    }
    let p = cols.len();
    let n = y.len();
    let baseline = mae(&forest.predict(cols), y);
    Ok(par::map_indices(p, |j| {
        let mut acc = 0.0;
        for r in 0..n_repeats {
            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = rng_from(derive_seed(
                seed,
                stream::PERMUTE,
                (j * n_repeats + r) as u64,
            ));
            for i in (1..n).rev() {
                let k = rng.random_range(0..=i);
                perm.swap(i, k);
            }
            let shuffled: Vec<f64> = perm.iter().map(|&i| cols[j][i]).collect();
            let mut view: Vec<&[f64]> = cols.to_vec();
            view[j] = &shuffled;
            acc += mae(&forest.predict(&view), y) - baseline;
        }
        acc / n_repeats as f64
    }))
}
