//! Reduce partial-dependence curves to impact and importance scores.
//!
//! Impact is the mean magnitude of a feature's PD curve over its unique
//! values; importance weights the same magnitudes by how often each value
//! occurs in the data. Normalized variants divide by the total across
//! features, so they sum to 1 and read as fractions of the explained effect.
//!
//! When every value of a feature is unique the two scores coincide exactly —
//! the weighted sum is computed so that this holds bit-for-bit, not just up
//! to rounding.

use crate::dataset::{histogram, sample_rows, Dataset, FeatureKind, Histogram};
use crate::error::{Error, Result};
use crate::par;
use crate::pd::{catstratpd, stratpd_numeric, CatPD, PDCurve, StratParams};
use crate::rng::{derive_seed, stream};
use std::collections::BTreeSet;
use std::str::FromStr;

/// Mean |pd| over the feature's unique values.
pub fn impact_numeric(curve: &PDCurve) -> Result<f64> {
    if curve.pd.is_empty() {
        return Err(Error::InvalidArg("empty curve".into()));
    }
    let sum: f64 = curve.pd.iter().map(|v| v.abs()).sum();
    Ok(sum / curve.pd.len() as f64)
}

/// Histogram-weighted mean of |pd|: sum of count·|pd| over the grid, divided
/// by the row count.
pub fn importance_numeric(curve: &PDCurve, h: &Histogram) -> Result<f64> {
    if h.values != curve.xs {
        return Err(Error::InvalidArg(
            "histogram values do not match the curve grid".into(),
        ));
    }
    let mut sum = 0.0;
    for (pd, &c) in curve.pd.iter().zip(&h.counts) {
        sum += c as f64 * pd.abs();
    }
    Ok(sum / h.total() as f64)
}

/// Mean |pd_centered| over the observed levels.
pub fn impact_categorical(cat: &CatPD) -> Result<f64> {
    let n_obs = cat.n_observed();
    if n_obs == 0 {
        return Err(Error::InvalidArg("no observed levels".into()));
    }
    let sum: f64 = cat
        .pd_centered
        .iter()
        .zip(&cat.observed_mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| v.abs())
        .sum();
    Ok(sum / n_obs as f64)
}

/// Frequency-weighted mean of |pd_centered|. Unobserved levels contribute 0
/// to the numerator but their rows still count in the denominator, so a
/// feature with poorly connected levels scores lower.
pub fn importance_categorical(cat: &CatPD, h: &Histogram) -> Result<f64> {
    if cat.n_observed() == 0 {
        return Err(Error::InvalidArg("no observed levels".into()));
    }
    if h.values.len() != cat.levels.len()
        || h.values.iter().zip(&cat.levels).any(|(&v, &l)| v as usize != l)
    {
        return Err(Error::InvalidArg(
            "histogram levels do not match the categorical curve".into(),
        ));
    }
    let mut sum = 0.0;
    for t in 0..cat.levels.len() {
        if cat.observed_mask[t] {
            sum += h.counts[t] as f64 * cat.pd_centered[t].abs();
        }
    }
    Ok(sum / h.total() as f64)
}

/// Divide by the total so scores sum to 1. All-zero input has no signal to
/// normalize and errors.
pub fn normalize_scores(raw: &[f64]) -> Result<Vec<f64>> {
    debug_assert!(raw.iter().all(|&v| v >= 0.0));
    let sum: f64 = raw.iter().sum();
    if sum == 0.0 {
        return Err(Error::NoSignal);
    }
    Ok(raw.iter().map(|v| v / sum).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Single,
    Bootstrap,
    Subsample,
}

impl RunMode {
    pub fn label(&self) -> &'static str {
        match self {
            RunMode::Single => "single",
            RunMode::Bootstrap => "bootstrap",
            RunMode::Subsample => "subsample",
        }
    }
}

impl FromStr for RunMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<RunMode> {
        match s {
            "single" => Ok(RunMode::Single),
            "bootstrap" => Ok(RunMode::Bootstrap),
            "subsample" => Ok(RunMode::Subsample),
            other => Err(Error::InvalidArg(format!(
                "unknown mode '{other}' (expected bootstrap, subsample or single)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeatureScore {
    pub feature: usize,
    pub name: String,
    pub kind: FeatureKind,
    pub impact: f64,
    pub impact_norm: f64,
    pub importance: f64,
    pub importance_norm: f64,
    /// standard deviation of impact_norm across trials (0 when trials=1)
    pub impact_sd: f64,
    pub importance_sd: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone)]
pub struct ImportanceReport {
    /// sorted by importance_norm descending, ties by feature index
    pub scores: Vec<FeatureScore>,
    pub warnings: Vec<String>,
    pub trials: usize,
    pub sample_frac: f64,
    pub mode: RunMode,
    pub seed: u64,
    pub params: StratParams,
}

impl ImportanceReport {
    /// Feature indices in report order (best first).
    pub fn ranked_features(&self) -> Vec<usize> {
        self.scores.iter().map(|s| s.feature).collect()
    }
}

/// One feature's raw scores: (impact, importance, coverage, warning).
fn score_one(ds: &Dataset, j: usize, params: &StratParams) -> Result<(f64, f64, f64, Option<String>)> {
    match ds.kind(j) {
        FeatureKind::Numeric => {
            let curve = stratpd_numeric(ds, j, params)?;
            let h = histogram(ds, j);
            let impact = impact_numeric(&curve)?;
            let importance = importance_numeric(&curve, &h)?;
            Ok((impact, importance, curve.coverage, None))
        }
        FeatureKind::Categorical => {
            let cat = catstratpd(ds, j, params)?;
            let h = histogram(ds, j);
            let impact = impact_categorical(&cat)?;
            let importance = importance_categorical(&cat, &h)?;
            let observed_rows: usize = h
                .counts
                .iter()
                .zip(&cat.observed_mask)
                .filter(|(_, &m)| m)
                .map(|(&c, _)| c)
                .sum();
            let coverage = observed_rows as f64 / ds.n() as f64;
            let warn = (cat.dropped_levels > 0).then(|| {
                format!(
                    "feature {}: {} level(s) covering {} row(s) are disconnected from the main level group and scored as unobserved",
                    ds.name(j),
                    cat.dropped_levels,
                    cat.dropped_samples
                )
            });
            Ok((impact, importance, coverage, warn))
        }
    }
}

/// Score every feature of the dataset in one deterministic pass. Constant
/// columns score 0 with a warning; the call fails only when no feature
/// carries any signal.
pub fn compute_all(ds: &Dataset, params: &StratParams) -> Result<ImportanceReport> {
    let p = ds.p();
    let per: Vec<Result<(f64, f64, f64, Option<String>)>> =
        par::map_indices(p, |j| score_one(ds, j, params));

    let mut impacts = vec![0.0; p];
    let mut importances = vec![0.0; p];
    let mut coverages = vec![0.0; p];
    let mut warnings = Vec::new();
    for (j, r) in per.into_iter().enumerate() {
        match r {
            Ok((impact, importance, coverage, warn)) => {
                impacts[j] = impact;
                importances[j] = importance;
                coverages[j] = coverage;
                if let Some(w) = warn {
                    warnings.push(w);
                }
            }
            Err(Error::ConstantColumn(_)) => {
                warnings.push(format!("feature {} is constant; scored 0", ds.name(j)));
            }
            Err(e) => return Err(e),
        }
    }
    let impact_norm = normalize_scores(&impacts)?;
    let importance_norm = normalize_scores(&importances)?;

    let mut scores: Vec<FeatureScore> = (0..p)
        .map(|j| FeatureScore {
            feature: j,
            name: ds.name(j).to_string(),
            kind: ds.kind(j),
            impact: impacts[j],
            impact_norm: impact_norm[j],
            importance: importances[j],
            importance_norm: importance_norm[j],
            impact_sd: 0.0,
            importance_sd: 0.0,
            coverage: coverages[j],
        })
        .collect();
    sort_scores(&mut scores);
    Ok(ImportanceReport {
        scores,
        warnings,
        trials: 1,
        sample_frac: 1.0,
        mode: RunMode::Single,
        seed: params.seed,
        params: params.clone(),
    })
}

fn sort_scores(scores: &mut [FeatureScore]) {
    scores.sort_by(|a, b| {
        b.importance_norm
            .total_cmp(&a.importance_norm)
            .then(a.feature.cmp(&b.feature))
    });
}

pub(crate) fn sample_sd(vals: &[f64], mean: f64) -> f64 {
    if vals.len() < 2 {
        return 0.0;
    }
    let ss: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (vals.len() - 1) as f64).sqrt()
}

/// Rerun scoring on resampled data and report per-feature means and standard
/// deviations of the normalized scores. Trial t resamples with the seed
/// derived for index t, so trials are order-independent and the whole run is
/// reproducible from `seed`.
pub fn stability_trials(
    ds: &Dataset,
    params: &StratParams,
    trials: usize,
    frac: f64,
    mode: RunMode,
    seed: u64,
) -> Result<ImportanceReport> {
    if trials == 0 {
        return Err(Error::InvalidArg("trials must be at least 1".into()));
    }
    if mode == RunMode::Single {
        return Err(Error::InvalidArg(
            "stability trials need bootstrap or subsample mode".into(),
        ));
    }
    let p = ds.p();
    let runs: Vec<Result<ImportanceReport>> = par::map_indices(trials, |t| {
        let sample = sample_rows(
            ds,
            frac,
            mode == RunMode::Bootstrap,
            derive_seed(seed, stream::SAMPLE, t as u64),
        )?;
        compute_all(&sample, params)
    });

    // per-feature series, indexed by feature id (reports arrive sorted)
    let mut impact = vec![Vec::with_capacity(trials); p];
    let mut importance = vec![Vec::with_capacity(trials); p];
    let mut impact_norm = vec![Vec::with_capacity(trials); p];
    let mut importance_norm = vec![Vec::with_capacity(trials); p];
    let mut coverage = vec![Vec::with_capacity(trials); p];
    let mut warnings = BTreeSet::new();
    for run in runs {
        let run = run?;
        for s in &run.scores {
            impact[s.feature].push(s.impact);
            importance[s.feature].push(s.importance);
            impact_norm[s.feature].push(s.impact_norm);
            importance_norm[s.feature].push(s.importance_norm);
            coverage[s.feature].push(s.coverage);
        }
        warnings.extend(run.warnings);
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut scores: Vec<FeatureScore> = (0..p)
        .map(|j| {
            let inorm = mean(&impact_norm[j]);
            let mnorm = mean(&importance_norm[j]);
            FeatureScore {
                feature: j,
                name: ds.name(j).to_string(),
                kind: ds.kind(j),
                impact: mean(&impact[j]),
                impact_norm: inorm,
                importance: mean(&importance[j]),
                importance_norm: mnorm,
                impact_sd: sample_sd(&impact_norm[j], inorm),
                importance_sd: sample_sd(&importance_norm[j], mnorm),
                coverage: mean(&coverage[j]),
            }
        })
        .collect();
    sort_scores(&mut scores);
    Ok(ImportanceReport {
        scores,
        warnings: warnings.into_iter().collect(),
        trials,
        sample_frac: frac,
        mode,
        seed,
        params: params.clone(),
    })
}
