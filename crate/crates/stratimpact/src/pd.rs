//! Partial-dependence estimation straight from data.
//!
//! The estimator never fits a model of the response. Instead it fits a
//! regression tree on all features *except* the one under study, so that
//! within each leaf the other features are roughly constant, and reads the
//! feature's effect off the y-differences inside each leaf:
//!
//! * numeric: consecutive unique values a < b inside a leaf yield a slope
//!   segment `(mean_y(b) − mean_y(a)) / (b − a)` weighted by `count(a) +
//!   count(b)`; segments from all leaves are merged per inter-value interval
//!   of the global grid (weighted mean), and the merged slopes integrate to a
//!   curve anchored at `pd[min] = 0`;
//! * categorical: each leaf with at least two observed levels yields mean-y
//!   offsets against the leaf's reference level (most populous, ties to the
//!   lowest code); leaves are stitched together over the level-connectivity
//!   graph by breadth-first offset propagation, and the merged values are
//!   centered to unweighted mean zero over the observed levels, which erases
//!   the arbitrary reference choice.
//!
//! Intervals no leaf covers get slope 0 and zero support; the curve's
//! `coverage` reports how much of the grid was actually estimated. Levels
//! disconnected from the largest connectivity component cannot be placed on
//! a common scale and are reported as unobserved (value 0, flagged).
//!
//! All within-group sums run over `(x, y)`-sorted values, never row order, so
//! curves are invariant to row permutation of the dataset.

use crate::dataset::{histogram, Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, fit_tree, TreeParams};
use crate::par;
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSegment {
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
    /// count(lo) + count(hi) within the leaf that produced the segment
    pub weight: usize,
}

#[derive(Debug, Clone)]
pub struct PDCurve {
    pub feature: usize,
    /// sorted unique values of the feature — the curve's grid
    pub xs: Vec<f64>,
    /// partial dependence at each grid value; pd[0] == 0 by construction
    pub pd: Vec<f64>,
    /// fraction of grid intervals supported by at least one slope segment
    pub coverage: f64,
}

#[derive(Debug, Clone)]
pub struct CatPD {
    pub feature: usize,
    /// category codes present in the data, ascending
    pub levels: Vec<usize>,
    /// per-level effect, unweighted mean 0 over observed levels; 0 for
    /// unobserved ones
    pub pd_centered: Vec<f64>,
    /// false for levels that could not be connected to the main component
    pub observed_mask: Vec<bool>,
    pub dropped_levels: usize,
    pub dropped_samples: usize,
}

impl CatPD {
    /// Center uncentered per-level values to unweighted mean zero over the
    /// observed levels. This is the one place the centering rule lives:
    /// shifting every uncentered value by a constant (equivalently, picking a
    /// different reference level) leaves the result unchanged up to float
    /// noise.
    pub fn from_uncentered(
        feature: usize,
        levels: Vec<usize>,
        uncentered: Vec<f64>,
        observed_mask: Vec<bool>,
        dropped_levels: usize,
        dropped_samples: usize,
    ) -> CatPD {
        assert_eq!(levels.len(), uncentered.len());
        assert_eq!(levels.len(), observed_mask.len());
        let n_obs = observed_mask.iter().filter(|&&m| m).count();
        assert!(n_obs > 0, "need at least one observed level");
        let mean = uncentered
            .iter()
            .zip(&observed_mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| v)
            .sum::<f64>()
            / n_obs as f64;
        let pd_centered = uncentered
            .iter()
            .zip(&observed_mask)
            .map(|(v, &m)| if m { v - mean } else { 0.0 })
            .collect();
        CatPD {
            feature,
            levels,
            pd_centered,
            observed_mask,
            dropped_levels,
            dropped_samples,
        }
    }

    pub fn n_observed(&self) -> usize {
        self.observed_mask.iter().filter(|&&m| m).count()
    }
}

#[derive(Debug, Clone)]
pub struct StratParams {
    pub min_samples_leaf: usize,
    /// trees in the stratifying ensemble; 1 is the plain estimator
    pub n_strat_trees: usize,
    /// bootstrap rows per stratifying tree
    pub bootstrap_strata: bool,
    pub seed: u64,
}

impl Default for StratParams {
    fn default() -> Self {
        StratParams {
            min_samples_leaf: 20,
            n_strat_trees: 1,
            bootstrap_strata: false,
            seed: 1,
        }
    }
}

/// Slope segments between consecutive unique x values of one leaf. Rows with
/// equal x are collapsed to their mean y first. Fewer than two unique values
/// yield no segments.
pub fn leaf_slopes(x: &[f64], y: &[f64]) -> Vec<SlopeSegment> {
    assert_eq!(x.len(), y.len());
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut vals: Vec<f64> = Vec::new();
    let mut means: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        let mut sum = 0.0;
        let mut c = 0usize;
        while i < pairs.len() && pairs[i].0 == v {
            sum += pairs[i].1;
            c += 1;
            i += 1;
        }
        vals.push(v);
        means.push(sum / c as f64);
        counts.push(c);
    }
    if vals.len() < 2 {
        return Vec::new();
    }
    (0..vals.len() - 1)
        .map(|k| SlopeSegment {
            lo: vals[k],
            hi: vals[k + 1],
            slope: (means[k + 1] - means[k]) / (vals[k + 1] - vals[k]),
            weight: counts[k] + counts[k + 1],
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct MergedSlopes {
    /// one slope per grid interval [xs[k], xs[k+1]]; 0 where unsupported
    pub slopes: Vec<f64>,
    /// summed segment weight per interval; 0 where unsupported
    pub support: Vec<usize>,
    pub coverage: f64,
}

/// Weight-average the segments covering each grid interval. A segment
/// [lo, hi] covers interval k when `lo <= xs[k]` and `xs[k+1] <= hi`.
///
/// Runs in O(segments + intervals) via difference arrays: leaves routinely
/// span the whole grid, so touching every covered interval per segment would
/// make the merge quadratic in n.
pub fn merge_slopes(segments: &[SlopeSegment], xs: &[f64]) -> MergedSlopes {
    assert!(xs.len() >= 2, "grid needs at least two values");
    debug_assert!(
        xs.windows(2).all(|w| w[0] < w[1]),
        "grid must be sorted and unique"
    );
    let k = xs.len() - 1;
    let mut d_ws = vec![0.0f64; k + 1]; // weight * slope
    let mut d_w = vec![0.0f64; k + 1]; // weight; integer-valued, exact in f64
    for s in segments {
        if !(s.lo < s.hi) {
            continue;
        }
        let t0 = xs.partition_point(|&v| v < s.lo);
        let hi_cnt = xs.partition_point(|&v| v <= s.hi); // grid values <= hi
        if hi_cnt == 0 || hi_cnt - 1 <= t0 {
            continue; // no whole interval inside [lo, hi]
        }
        let t1 = hi_cnt - 1; // exclusive interval end
        let w = s.weight as f64;
        d_ws[t0] += w * s.slope;
        d_ws[t1] -= w * s.slope;
        d_w[t0] += w;
        d_w[t1] -= w;
    }
    let mut slopes = vec![0.0; k];
    let mut support = vec![0usize; k];
    let mut run_ws = 0.0;
    let mut run_w = 0.0;
    let mut covered = 0usize;
    for t in 0..k {
        run_ws += d_ws[t];
        run_w += d_w[t];
        if run_w > 0.0 {
            slopes[t] = run_ws / run_w;
            support[t] = run_w as usize;
            covered += 1;
        }
    }
    MergedSlopes {
        slopes,
        support,
        coverage: covered as f64 / k as f64,
    }
}

/// Cumulative integral of interval slopes over the grid, anchored at 0 for
/// the smallest value.
pub fn integrate_slopes(xs: &[f64], slopes: &[f64]) -> Vec<f64> {
    assert_eq!(slopes.len() + 1, xs.len());
    let mut pd = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    pd.push(0.0);
    for t in 0..slopes.len() {
        acc += slopes[t] * (xs[t + 1] - xs[t]);
        pd.push(acc);
    }
    pd
}

/// Leaf row groups from the stratifying tree(s) for feature `j`: trees are
/// fit to predict y from every column except `j`.
fn strat_leaves(ds: &Dataset, j: usize, params: &StratParams) -> Result<Vec<Vec<usize>>> {
    if params.n_strat_trees == 0 {
        return Err(Error::InvalidArg("n_strat_trees must be at least 1".into()));
    }
    let cols = ds.view_without(j);
    let tp = TreeParams {
        min_samples_leaf: params.min_samples_leaf,
        max_features: 1.0,
        seed: derive_seed(params.seed, stream::STRAT, j as u64),
    };
    if params.n_strat_trees == 1 && !params.bootstrap_strata {
        let tree = fit_tree(&cols, ds.y(), &tp)?;
        Ok(tree.leaf_groups().iter().map(|g| g.to_vec()).collect())
    } else {
        let forest = fit_forest(&cols, ds.y(), params.n_strat_trees, params.bootstrap_strata, &tp)?;
        Ok(forest
            .trees
            .iter()
            .flat_map(|t| t.leaf_groups().iter().map(|g| g.to_vec()).collect::<Vec<_>>())
            .collect())
    }
}

/// Numeric partial dependence of feature `j`, estimated from stratified
/// within-leaf slopes. Errors on a categorical or constant column.
pub fn stratpd_numeric(ds: &Dataset, j: usize, params: &StratParams) -> Result<PDCurve> {
    if j >= ds.p() {
        return Err(Error::InvalidArg(format!("feature index {j} out of range")));
    }
    if ds.kind(j) != FeatureKind::Numeric {
        return Err(Error::NotNumeric(j));
    }
    let hist = histogram(ds, j);
    if hist.n_unique() < 2 {
        return Err(Error::ConstantColumn(j));
    }
    let leaves = strat_leaves(ds, j, params)?;
    let x = ds.column(j);
    let y = ds.y();

    // Single stratum: its segments line up 1:1 with the grid intervals, so
    // integrate them directly — same result, no weighted-mean rounding, and
    // it keeps the degenerate p=1 case exact.
    if leaves.len() == 1 && leaves[0].len() == ds.n() {
        let segs = leaf_slopes(x, y);
        debug_assert_eq!(segs.len() + 1, hist.values.len());
        let slopes: Vec<f64> = segs.iter().map(|s| s.slope).collect();
        let pd = integrate_slopes(&hist.values, &slopes);
        return Ok(PDCurve {
            feature: j,
            xs: hist.values,
            pd,
            coverage: 1.0,
        });
    }

    let per_leaf: Vec<Vec<SlopeSegment>> = par::map_slice(&leaves, |rows| {
        let lx: Vec<f64> = rows.iter().map(|&i| x[i]).collect();
        let ly: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        leaf_slopes(&lx, &ly)
    });
    let segments: Vec<SlopeSegment> = per_leaf.into_iter().flatten().collect();
    let merged = merge_slopes(&segments, &hist.values);
    let pd = integrate_slopes(&hist.values, &merged.slopes);
    Ok(PDCurve {
        feature: j,
        xs: hist.values,
        pd,
        coverage: merged.coverage,
    })
}

/// Per-leaf level offsets of one leaf: codes present, their counts, and mean
/// y relative to the reference level. None when fewer than two levels occur.
struct LeafDeltas {
    codes: Vec<usize>,
    counts: Vec<usize>,
    deltas: Vec<f64>,
}

fn leaf_deltas(codes: &[f64], y: &[f64], rows: &[usize]) -> Option<LeafDeltas> {
    let mut pairs: Vec<(usize, f64)> = rows.iter().map(|&i| (codes[i] as usize, y[i])).collect();
    pairs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut lv: Vec<usize> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut means: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let c = pairs[i].0;
        let mut sum = 0.0;
        let mut cnt = 0usize;
        while i < pairs.len() && pairs[i].0 == c {
            sum += pairs[i].1;
            cnt += 1;
            i += 1;
        }
        lv.push(c);
        counts.push(cnt);
        means.push(sum / cnt as f64);
    }
    if lv.len() < 2 {
        return None;
    }
    // reference: most populous level; ties fall to the lowest code, which is
    // the first seen since lv is ascending
    let mut r = 0;
    for t in 1..lv.len() {
        if counts[t] > counts[r] {
            r = t;
        }
    }
    let rm = means[r];
    Some(LeafDeltas {
        codes: lv,
        counts,
        deltas: means.iter().map(|m| m - rm).collect(),
    })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, a: usize) -> usize {
        let mut root = a;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = a;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // deterministic: lower root wins
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Categorical partial dependence of feature `j`. Errors on a numeric or
/// constant (single-level) column.
pub fn catstratpd(ds: &Dataset, j: usize, params: &StratParams) -> Result<CatPD> {
    if j >= ds.p() {
        return Err(Error::InvalidArg(format!("feature index {j} out of range")));
    }
    if ds.kind(j) != FeatureKind::Categorical {
        return Err(Error::NotCategorical(j));
    }
    let hist = histogram(ds, j);
    let present: Vec<usize> = hist.values.iter().map(|&v| v as usize).collect();
    if present.len() < 2 {
        return Err(Error::ConstantColumn(j));
    }
    let code_space = present.last().unwrap() + 1;
    let mut global_count = vec![0usize; code_space];
    for (c, n) in present.iter().zip(&hist.counts) {
        global_count[*c] = *n;
    }

    let leaves = strat_leaves(ds, j, params)?;
    let codes = ds.column(j);
    let y = ds.y();
    let infos: Vec<LeafDeltas> = par::map_slice(&leaves, |rows| leaf_deltas(codes, y, rows))
        .into_iter()
        .flatten()
        .collect();

    // connectivity: levels co-occurring in a leaf can be placed on one scale
    let mut uf = UnionFind::new(code_space);
    for info in &infos {
        for w in info.codes.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    // pick the component with the most samples (ties: lowest member code)
    let mut comp_weight = vec![0usize; code_space];
    for &c in &present {
        let root = uf.find(c);
        comp_weight[root] += global_count[c];
    }
    let mut best_root = usize::MAX;
    let mut best_weight = 0usize;
    for &c in &present {
        let root = uf.find(c);
        if root == c && (comp_weight[root] > best_weight
            || (comp_weight[root] == best_weight && root < best_root))
        {
            best_root = root;
            best_weight = comp_weight[root];
        }
    }
    let in_comp: Vec<bool> = (0..code_space).map(|c| uf.find(c) == best_root).collect();

    // breadth-first offset propagation from the component's heaviest level
    let mut val: Vec<Option<f64>> = vec![None; code_space];
    let root_level = present
        .iter()
        .copied()
        .filter(|&c| in_comp[c])
        .max_by(|&a, &b| global_count[a].cmp(&global_count[b]).then(b.cmp(&a)))
        .expect("component has at least one level");
    val[root_level] = Some(0.0);
    loop {
        // estimates for still-unassigned levels, weighted by their sample
        // count in each contributing leaf; assigned levels anchor the leaf's
        // offset, weighted the same way
        let mut est_ws = vec![0.0f64; code_space];
        let mut est_w = vec![0.0f64; code_space];
        let mut any = false;
        for info in &infos {
            let mut osum = 0.0;
            let mut wsum = 0.0;
            for t in 0..info.codes.len() {
                if let Some(v) = val[info.codes[t]] {
                    let w = info.counts[t] as f64;
                    osum += w * (v - info.deltas[t]);
                    wsum += w;
                }
            }
            if wsum == 0.0 {
                continue;
            }
            let offset = osum / wsum;
            for t in 0..info.codes.len() {
                let c = info.codes[t];
                if val[c].is_none() {
                    let w = info.counts[t] as f64;
                    est_ws[c] += w * (info.deltas[t] + offset);
                    est_w[c] += w;
                    any = true;
                }
            }
        }
        if !any {
            break;
        }
        for c in 0..code_space {
            if est_w[c] > 0.0 {
                val[c] = Some(est_ws[c] / est_w[c]);
            }
        }
    }

    let mut uncentered = Vec::with_capacity(present.len());
    let mut observed = Vec::with_capacity(present.len());
    let mut dropped_levels = 0usize;
    let mut dropped_samples = 0usize;
    for &c in &present {
        match val[c] {
            Some(v) => {
                uncentered.push(v);
                observed.push(true);
            }
            None => {
                uncentered.push(0.0);
                observed.push(false);
                dropped_levels += 1;
                dropped_samples += global_count[c];
            }
        }
    }
    Ok(CatPD::from_uncentered(
        j,
        present,
        uncentered,
        observed,
        dropped_levels,
        dropped_samples,
    ))
}
