//! Plot-ready CSV and JSON renderings of reports, curves and rankings.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a CSV
//! read back through the loader reproduces the numbers bit-for-bit.

use crate::dataset::{Dataset, FeatureKind, Histogram};
use crate::error::{Error, Result};
use crate::evaluate::MAECurve;
use crate::impact::ImportanceReport;
use crate::pd::{CatPD, PDCurve};
use crate::rankers::Ranking;
use serde_json::json;

fn csv_from_records<I>(records: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in records {
        w.write_record(&rec).map_err(|e| Error::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Csv(e.to_string()))
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// `feature,kind,impact,impact_norm,importance,importance_norm,impact_sd,importance_sd,coverage`
pub fn report_csv(report: &ImportanceReport) -> Result<String> {
    let header = vec![
        "feature", "kind", "impact", "impact_norm", "importance", "importance_norm",
        "impact_sd", "importance_sd", "coverage",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    let rows = report.scores.iter().map(|s| {
        vec![
            s.name.clone(),
            s.kind.label().to_string(),
            num(s.impact),
            num(s.impact_norm),
            num(s.importance),
            num(s.importance_norm),
            num(s.impact_sd),
            num(s.importance_sd),
            num(s.coverage),
        ]
    });
    csv_from_records(std::iter::once(header).chain(rows))
}

/// JSON mirror of the report CSV plus run metadata.
pub fn report_json(report: &ImportanceReport, wall_time_s: f64) -> Result<String> {
    let scores: Vec<_> = report
        .scores
        .iter()
        .map(|s| {
            json!({
                "feature": s.feature,
                "name": s.name,
                "kind": s.kind.label(),
                "impact": s.impact,
                "impact_norm": s.impact_norm,
                "importance": s.importance,
                "importance_norm": s.importance_norm,
                "impact_sd": s.impact_sd,
                "importance_sd": s.importance_sd,
                "coverage": s.coverage,
            })
        })
        .collect();
    let doc = json!({
        "meta": {
            "version": env!("CARGO_PKG_VERSION"),
            "seed": report.seed,
            "trials": report.trials,
            "sample_frac": report.sample_frac,
            "mode": report.mode.label(),
            "min_samples_leaf": report.params.min_samples_leaf,
            "n_strat_trees": report.params.n_strat_trees,
            "bootstrap_strata": report.params.bootstrap_strata,
            "wall_time_s": wall_time_s,
            "warnings": report.warnings,
        },
        "scores": scores,
    });
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Csv(e.to_string()))
}

/// `x,pd,count` for one numeric feature's curve.
pub fn pd_curve_csv(curve: &PDCurve, h: &Histogram) -> Result<String> {
    if h.values != curve.xs {
        return Err(Error::InvalidArg(
            "histogram values do not match the curve grid".into(),
        ));
    }
    let header = vec!["x".to_string(), "pd".to_string(), "count".to_string()];
    let rows = (0..curve.xs.len())
        .map(|i| vec![num(curve.xs[i]), num(curve.pd[i]), h.counts[i].to_string()]);
    csv_from_records(std::iter::once(header).chain(rows))
}

/// `level,code,pd_centered,count,observed` for one categorical feature.
pub fn cat_pd_csv(ds: &Dataset, cat: &CatPD, h: &Histogram) -> Result<String> {
    if h.values.len() != cat.levels.len() {
        return Err(Error::InvalidArg(
            "histogram levels do not match the categorical curve".into(),
        ));
    }
    let header = vec!["level", "code", "pd_centered", "count", "observed"]
        .into_iter()
        .map(String::from)
        .collect();
    let rows = (0..cat.levels.len()).map(|t| {
        vec![
            ds.level_name(cat.feature, cat.levels[t]),
            cat.levels[t].to_string(),
            num(cat.pd_centered[t]),
            h.counts[t].to_string(),
            cat.observed_mask[t].to_string(),
        ]
    });
    csv_from_records(std::iter::once(header).chain(rows))
}

/// `method,rank,feature,score` for any number of rankings, stacked.
pub fn rankings_csv(ds: &Dataset, rankings: &[Ranking]) -> Result<String> {
    let header = vec!["method", "rank", "feature", "score"]
        .into_iter()
        .map(String::from)
        .collect();
    let mut records = vec![header];
    for r in rankings {
        for (pos, &j) in r.order.iter().enumerate() {
            records.push(vec![
                r.method.clone(),
                (pos + 1).to_string(),
                ds.name(j).to_string(),
                num(r.scores[j]),
            ]);
        }
    }
    csv_from_records(records)
}

/// `method,k,mae,mae_sd` for any number of error curves, stacked.
pub fn curves_csv(curves: &[MAECurve]) -> Result<String> {
    let header = vec!["method", "k", "mae", "mae_sd"]
        .into_iter()
        .map(String::from)
        .collect();
    let mut records = vec![header];
    for c in curves {
        for (i, &k) in c.k_values.iter().enumerate() {
            records.push(vec![
                c.method.clone(),
                k.to_string(),
                num(c.mae[i]),
                num(c.mae_sd[i]),
            ]);
        }
    }
    csv_from_records(records)
}

/// The dataset as loadable CSV: feature columns (categorical ones as their
/// level names) followed by the target column.
pub fn dataset_csv(ds: &Dataset, target: &str) -> Result<String> {
    let mut header: Vec<String> = ds.names().to_vec();
    header.push(target.to_string());
    let mut records = vec![header];
    for i in 0..ds.n() {
        let mut row: Vec<String> = (0..ds.p())
            .map(|j| match ds.kind(j) {
                FeatureKind::Numeric => num(ds.column(j)[i]),
                FeatureKind::Categorical => ds.level_name(j, ds.column(j)[i] as usize),
            })
            .collect();
        row.push(num(ds.y()[i]));
        records.push(row);
    }
    csv_from_records(records)
}
