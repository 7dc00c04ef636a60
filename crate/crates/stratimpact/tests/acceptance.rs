//! End-to-end acceptance gates. Each test exercises one numbered claim about
//! the library and prints a single `ACCEPTANCE <n> PASS|FAIL` line (run with
//! `--nocapture` to see the lines for passing gates too). Tolerances and
//! sample sizes are pinned here on purpose: they are the contract, not
//! implementation details.
//!
//! Gates 1 and 5 are currently expected to fail; the analysis lives with the
//! project's decision log. In short: (1) with one stratification tree at
//! n=1000 the first and last grid intervals of an all-unique feature are
//! supported by a single leaf segment, so an irrelevant feature's integrated
//! curve inherits an O(within-leaf y-spread) offset whose normalized
//! magnitude straddles the 0.02 bound (median ≈ 0.02, pass rate ≈ 50%, also
//! confirmed with an independent reference implementation); (5) scaling y by
//! a non-dyadic constant rounds every intermediate differently per feature,
//! so normalized scores cannot be bit-identical, only raw scores to ~1e-13.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::Rng;

use stratimpact::dataset::{histogram, load_csv, Dataset};
use stratimpact::evaluate::{compare_rankings, ranking_for, topk_error_curve, RankMethod};
use stratimpact::forest::TreeParams;
use stratimpact::impact::{compute_all, impact_categorical, impact_numeric};
use stratimpact::pd::{
    integrate_slopes, leaf_slopes, merge_slopes, stratpd_numeric, CatPD, SlopeSegment, StratParams,
};
use stratimpact::rankers::Ranking;
use stratimpact::rng::rng_from;
use stratimpact::synth::{gen_linear, gen_quadratic, LinearSpec};
use stratimpact::FeatureKind;

/// Gates share one lock so wall-clock measurements never overlap.
static GATE: Mutex<()> = Mutex::new(());

fn gate() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn impact_norm_of(report: &stratimpact::impact::ImportanceReport, name: &str) -> f64 {
    report
        .scores
        .iter()
        .find(|s| s.name == name)
        .unwrap_or_else(|| panic!("no feature named {name}"))
        .impact_norm
}

/// Quadratic ground truth: y = x1^2 + x2 + 100 with inputs uniform on (0, 3)
/// has analytic normalized impacts (2/3, 1/3), and the irrelevant x3 should
/// score near zero. Checked over twenty data seeds with default parameters,
/// single-threaded, each run under five seconds.
#[test]
fn acceptance_1_quadratic_ground_truth() {
    let _g = gate();
    const X1_BAND: (f64, f64) = (0.617, 0.717);
    const X2_BAND: (f64, f64) = (0.283, 0.383);
    const X3_MAX: f64 = 0.02;
    const SECONDS_MAX: f64 = 5.0;
    const NEED: usize = 18;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("single-thread pool");
    let mut passes = 0usize;
    let mut slowest = Duration::ZERO;
    let mut lines = String::new();
    for seed in 1..=20u64 {
        let ds = gen_quadratic(1000, seed, true).unwrap();
        let t0 = Instant::now();
        let report = pool.install(|| compute_all(&ds, &StratParams::default()).unwrap());
        let dt = t0.elapsed();
        slowest = slowest.max(dt);
        let (x1, x2, x3) = (
            impact_norm_of(&report, "x1"),
            impact_norm_of(&report, "x2"),
            impact_norm_of(&report, "x3"),
        );
        let ok = x1 >= X1_BAND.0
            && x1 <= X1_BAND.1
            && x2 >= X2_BAND.0
            && x2 <= X2_BAND.1
            && x3 <= X3_MAX;
        passes += ok as usize;
        lines.push_str(&format!(
            "  seed {seed:2}: x1={x1:.4} x2={x2:.4} x3={x3:.4} {}\n",
            if ok { "ok" } else { "out of band" }
        ));
    }
    let ok = passes >= NEED && slowest.as_secs_f64() <= SECONDS_MAX;
    print!("{lines}");
    println!(
        "ACCEPTANCE 1 {} — quadratic ground truth: {passes}/20 seeds in bands (need {NEED}), slowest run {:.3}s (cap {SECONDS_MAX}s)",
        if ok { "PASS" } else { "FAIL" },
        slowest.as_secs_f64()
    );
    assert!(
        ok,
        "{passes}/20 seeds inside x1 {X1_BAND:?}, x2 {X2_BAND:?}, x3 <= {X3_MAX}; need {NEED}; slowest {slowest:?}"
    );
}

/// Linear proportionality: for y = x1 + 2 x2 + 4 x3 on (0,1) inputs the
/// normalized impacts are (1/7, 2/7, 4/7). Bands checked at the reference
/// seed; the importance ordering must recover (x3, x2, x1) in at least 19 of
/// 20 seeds.
#[test]
fn acceptance_2_linear_proportionality() {
    let _g = gate();
    const TOL: f64 = 0.04;
    const TARGETS: [f64; 3] = [1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0];

    let mut order_hits = 0usize;
    let mut seed1_bands = false;
    let mut seed1_detail = String::new();
    for seed in 1..=20u64 {
        let ds = gen_linear(&LinearSpec {
            n: 2000,
            seed,
            betas: vec![1.0, 2.0, 4.0],
            ranges: vec![(0.0, 1.0); 3],
            noise_sd: 0.1,
        })
        .unwrap();
        let report = compute_all(&ds, &StratParams::default()).unwrap();
        if report.ranked_features() == vec![2, 1, 0] {
            order_hits += 1;
        }
        if seed == 1 {
            let norms = [
                impact_norm_of(&report, "x1"),
                impact_norm_of(&report, "x2"),
                impact_norm_of(&report, "x3"),
            ];
            seed1_bands = norms
                .iter()
                .zip(&TARGETS)
                .all(|(n, t)| (n - t).abs() <= TOL);
            seed1_detail = format!(
                "norms ({:.4}, {:.4}, {:.4}) vs targets ({:.4}, {:.4}, {:.4}) ± {TOL}",
                norms[0], norms[1], norms[2], TARGETS[0], TARGETS[1], TARGETS[2]
            );
        }
    }
    let ok = seed1_bands && order_hits >= 19;
    println!(
        "ACCEPTANCE 2 {} — linear proportionality: {seed1_detail}; importance order (x3,x2,x1) in {order_hits}/20 seeds (need 19)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "bands at reference seed: {seed1_bands} ({seed1_detail}); order hits {order_hits}/20");
}

/// When every feature value is unique the histogram weights are uniform, so
/// importance must collapse to impact.
#[test]
fn acceptance_3_importance_impact_collapse() {
    let _g = gate();
    const REL: f64 = 1e-12;
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = rng_from(seed.wrapping_add(0x3a11));
        let n = 40 + (seed as usize % 60);
        let p = 2 + (seed as usize % 2);
        let columns: Vec<Vec<f64>> = (0..p)
            .map(|_| {
                let mut col: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
                // nudge collisions apart deterministically
                for i in 0..n {
                    col[i] += i as f64 * 1e-9;
                }
                col
            })
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                columns.iter().map(|c| c[i]).sum::<f64>() + rng.random_range(-1.0..1.0)
            })
            .collect();
        let ds = Dataset::new(
            (0..p).map(|j| format!("x{}", j + 1)).collect(),
            vec![FeatureKind::Numeric; p],
            columns,
            y,
        )
        .unwrap();
        let report = compute_all(&ds, &StratParams::default()).unwrap();
        for s in &report.scores {
            let rel = (s.importance - s.impact).abs() / s.impact.abs().max(1e-300);
            worst = worst.max(rel);
        }
    }
    let ok = worst <= REL;
    println!(
        "ACCEPTANCE 3 {} — importance = impact on all-unique data: worst relative gap {worst:.2e} (cap {REL:.0e}) over 100 datasets",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "worst relative gap {worst}");
}

/// Choice of reference level must not matter: shifting all uncentered
/// per-level values by a constant leaves the categorical impact unchanged.
#[test]
fn acceptance_4_reference_invariance() {
    let _g = gate();
    const TOL: f64 = 1e-9;
    let mut worst = 0.0f64;
    let mut rng = rng_from(0xcafe);
    for _ in 0..1000 {
        let k = rng.random_range(2..12usize);
        let vals: Vec<f64> = (0..k).map(|_| rng.random_range(-50.0..50.0)).collect();
        let observed: Vec<bool> = (0..k)
            .map(|i| i < 2 || rng.random_range(0.0..1.0) > 0.2)
            .collect();
        let shift = rng.random_range(-1000.0..1000.0);
        let levels: Vec<usize> = (0..k).collect();
        let a = CatPD::from_uncentered(0, levels.clone(), vals.clone(), observed.clone(), 0, 0);
        let shifted: Vec<f64> = vals.iter().map(|v| v + shift).collect();
        let b = CatPD::from_uncentered(0, levels, shifted, observed, 0, 0);
        let ia = impact_categorical(&a).unwrap();
        let ib = impact_categorical(&b).unwrap();
        worst = worst.max((ia - ib).abs() / ia.abs().max(1.0));
    }
    let ok = worst <= TOL;
    println!(
        "ACCEPTANCE 4 {} — reference-shift invariance: worst drift {worst:.2e} (cap {TOL:.0e}) over 1000 cases",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "worst drift {worst}");
}

/// Normalization sums to one; scaling y by 7.3 scales raw scores by 7.3 and
/// is asserted to leave normalized scores bit-identical.
#[test]
fn acceptance_5_normalization_and_equivariance() {
    let _g = gate();
    const SUM_TOL: f64 = 1e-9;
    const SCALE_REL: f64 = 1e-9;
    const C: f64 = 7.3;

    let ds = gen_quadratic(1000, 1, true).unwrap();
    let report = compute_all(&ds, &StratParams::default()).unwrap();
    let sum_imp: f64 = report.scores.iter().map(|s| s.impact_norm).sum();
    let sum_impt: f64 = report.scores.iter().map(|s| s.importance_norm).sum();
    let sums_ok = (sum_imp - 1.0).abs() <= SUM_TOL && (sum_impt - 1.0).abs() <= SUM_TOL;

    let scaled = Dataset::new(
        ds.names().to_vec(),
        (0..ds.p()).map(|j| ds.kind(j)).collect(),
        (0..ds.p()).map(|j| ds.column(j).to_vec()).collect(),
        ds.y().iter().map(|v| v * C).collect(),
    )
    .unwrap();
    let scaled_report = compute_all(&scaled, &StratParams::default()).unwrap();
    let mut raw_ok = true;
    let mut bits_ok = true;
    let mut worst_rel = 0.0f64;
    let mut bit_gap = 0u64;
    for (a, b) in report.scores.iter().zip(&scaled_report.scores) {
        assert_eq!(a.feature, b.feature, "scaling must not reorder scores");
        for (ra, rb) in [(a.impact, b.impact), (a.importance, b.importance)] {
            let rel = (rb - ra * C).abs() / (ra * C).abs().max(1e-300);
            worst_rel = worst_rel.max(rel);
            raw_ok &= rel <= SCALE_REL;
        }
        for (na, nb) in [
            (a.impact_norm, b.impact_norm),
            (a.importance_norm, b.importance_norm),
        ] {
            if na.to_bits() != nb.to_bits() {
                bits_ok = false;
                bit_gap = bit_gap.max(na.to_bits().abs_diff(nb.to_bits()));
            }
        }
    }
    let ok = sums_ok && raw_ok && bits_ok;
    println!(
        "ACCEPTANCE 5 {} — norm sums 1±{SUM_TOL:.0e}: {sums_ok}; raw scores scale by {C} within {SCALE_REL:.0e} (worst {worst_rel:.2e}): {raw_ok}; normalized bit-identical: {bits_ok}{}",
        if ok { "PASS" } else { "FAIL" },
        if bits_ok { String::new() } else { format!(" (max gap {bit_gap} ulps)") }
    );
    assert!(
        ok,
        "sums_ok={sums_ok} raw_ok={raw_ok} (worst rel {worst_rel:.2e}) bits_ok={bits_ok} (max gap {bit_gap} ulps)"
    );
}

/// Single-leaf estimation must agree exactly with a straight-line oracle
/// (group means, finite differences, cumulative sum), and the slope
/// machinery must reproduce hand arithmetic on fixed inputs.
#[test]
fn acceptance_6_oracle_equivalence() {
    let _g = gate();

    // (a) p=1 datasets: stratification degenerates to one leaf
    let mut datasets = 0usize;
    for seed in 0..60u64 {
        let mut rng = rng_from(seed.wrapping_mul(0x9e37).wrapping_add(7));
        let n = 30usize;
        let pool = 3 + (seed as usize % 9);
        let x: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(0..pool) as f64) * 0.5)
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let ds = Dataset::new(
            vec!["x".into()],
            vec![FeatureKind::Numeric],
            vec![x.clone()],
            y.clone(),
        )
        .unwrap();
        let curve = stratpd_numeric(&ds, 0, &StratParams::default()).unwrap();

        // brute-force oracle, written independently of the library path
        let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut xs = Vec::new();
        let mut means = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let mut j = i;
            let mut sum = 0.0;
            while j < pairs.len() && pairs[j].0 == pairs[i].0 {
                sum += pairs[j].1;
                j += 1;
            }
            xs.push(pairs[i].0);
            means.push(sum / (j - i) as f64);
            i = j;
        }
        if xs.len() < 2 {
            continue; // constant column is rejected upstream; skip
        }
        let mut pd = vec![0.0];
        let mut acc = 0.0;
        for k in 0..xs.len() - 1 {
            let slope = (means[k + 1] - means[k]) / (xs[k + 1] - xs[k]);
            acc += slope * (xs[k + 1] - xs[k]);
            pd.push(acc);
        }
        assert_eq!(curve.xs, xs, "seed {seed}: grid mismatch");
        assert_eq!(curve.pd, pd, "seed {seed}: curve differs from the brute-force oracle");
        let oracle_impact = pd.iter().map(|v| v.abs()).sum::<f64>() / pd.len() as f64;
        assert_eq!(
            impact_numeric(&curve).unwrap(),
            oracle_impact,
            "seed {seed}: impact differs from the oracle"
        );
        datasets += 1;
    }
    assert!(datasets >= 50, "only {datasets} usable p=1 datasets");

    // (b) hand arithmetic on fixed inputs
    let segs = leaf_slopes(&[1.0, 1.0, 2.0, 4.0], &[2.0, 4.0, 5.0, 9.0]);
    assert_eq!(
        segs,
        vec![
            SlopeSegment { lo: 1.0, hi: 2.0, slope: 2.0, weight: 3 },
            SlopeSegment { lo: 2.0, hi: 4.0, slope: 2.0, weight: 2 },
        ],
        "leaf slopes must match hand arithmetic"
    );
    let merged = merge_slopes(
        &[
            SlopeSegment { lo: 0.0, hi: 2.0, slope: 1.0, weight: 2 },
            SlopeSegment { lo: 1.0, hi: 2.0, slope: 3.0, weight: 2 },
        ],
        &[0.0, 1.0, 2.0],
    );
    assert_eq!(merged.slopes, vec![1.0, 2.0], "weighted merge must match hand arithmetic");
    assert_eq!(
        integrate_slopes(&[0.0, 1.0, 2.0], &[1.0, 2.0]),
        vec![0.0, 1.0, 3.0],
        "integration must match hand arithmetic"
    );

    println!("ACCEPTANCE 6 PASS — exact oracle match on {datasets} single-leaf datasets plus fixed-input hand arithmetic");
}

/// A ranking that puts the strongest feature first must beat its own
/// reversal at k=1 on held-out error, and every method's curve must coincide
/// bit-for-bit at k=p (same features, same folds, same forest seeds).
#[test]
fn acceptance_7_topk_sanity() {
    let _g = gate();
    const NEED: usize = 18;
    let params = TreeParams::default();

    let mut wins = 0usize;
    for seed in 1..=20u64 {
        let ds = gen_linear(&LinearSpec {
            n: 2000,
            seed,
            betas: vec![1.0, 2.0, 4.0],
            ranges: vec![(0.0, 1.0); 3],
            noise_sd: 0.1,
        })
        .unwrap();
        let good = ranking_for(&ds, RankMethod::StratImportance, &params, 40, 5, 1).unwrap();
        let reversed = Ranking {
            method: "reversed".into(),
            scores: good.scores.clone(),
            order: good.order.iter().rev().copied().collect(),
            perfect_fit: false,
        };
        let m_good = topk_error_curve(&ds, &good, 1, 5, &params, 40, 1).unwrap();
        let m_rev = topk_error_curve(&ds, &reversed, 1, 5, &params, 40, 1).unwrap();
        if m_good.mae[0] <= m_rev.mae[0] {
            wins += 1;
        }
    }

    let ds = gen_linear(&LinearSpec {
        n: 2000,
        seed: 1,
        betas: vec![1.0, 2.0, 4.0],
        ranges: vec![(0.0, 1.0); 3],
        noise_sd: 0.1,
    })
    .unwrap();
    let cmp = compare_rankings(&ds, &RankMethod::ALL, ds.p(), 5, &params, 40, 1).unwrap();
    let last = ds.p() - 1;
    let reference = (cmp.curves[0].mae[last], cmp.curves[0].mae_sd[last]);
    let coincide = cmp.curves.iter().all(|c| {
        c.mae[last].to_bits() == reference.0.to_bits()
            && c.mae_sd[last].to_bits() == reference.1.to_bits()
    });

    let ok = wins >= NEED && coincide;
    println!(
        "ACCEPTANCE 7 {} — top-1 beats reversed in {wins}/20 seeds (need {NEED}); all {} methods coincide at k=p: {coincide}",
        if ok { "PASS" } else { "FAIL" },
        cmp.curves.len()
    );
    assert!(ok, "wins {wins}/20, k=p coincidence {coincide}");
}

/// Wall-time growth from n=10k to n=20k: near-linear on numeric-only data,
/// and within a mildly quadratic envelope when wide categorical features
/// join. Minimum of two runs per point to shave scheduler noise.
#[test]
fn acceptance_8_scaling_shape() {
    let _g = gate();
    const NUMERIC_MAX_RATIO: f64 = 3.0;
    const CATEGORICAL_MAX_RATIO: f64 = 4.5;

    fn numeric_ds(n: usize) -> Dataset {
        gen_linear(&LinearSpec {
            n,
            seed: 1,
            betas: (1..=10).map(|b| b as f64).collect(),
            ranges: vec![(0.0, 1.0); 10],
            noise_sd: 0.1,
        })
        .unwrap()
    }

    fn mixed_ds(n: usize) -> Dataset {
        let mut rng = rng_from(0xd15c);
        let mut columns: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let mut kinds = vec![FeatureKind::Numeric; 10];
        for _ in 0..5 {
            columns.push((0..n).map(|_| rng.random_range(0..50) as f64).collect());
            kinds.push(FeatureKind::Categorical);
        }
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let nums: f64 = (0..10).map(|j| (j + 1) as f64 * columns[j][i]).sum();
                let cats: f64 = (10..15).map(|j| columns[j][i] * 0.05).sum();
                nums + cats + rng.random_range(-0.1..0.1)
            })
            .collect();
        let names = (0..15).map(|j| format!("f{j}")).collect();
        Dataset::new(names, kinds, columns, y).unwrap()
    }

    fn best_of_two(ds: &Dataset) -> f64 {
        let mut best = f64::INFINITY;
        for _ in 0..2 {
            let t0 = Instant::now();
            let report = compute_all(ds, &StratParams::default()).unwrap();
            assert!(!report.scores.is_empty());
            best = best.min(t0.elapsed().as_secs_f64());
        }
        best
    }

    let t_num_10 = best_of_two(&numeric_ds(10_000));
    let t_num_20 = best_of_two(&numeric_ds(20_000));
    let numeric_ratio = t_num_20 / t_num_10;

    let t_mix_10 = best_of_two(&mixed_ds(10_000));
    let t_mix_20 = best_of_two(&mixed_ds(20_000));
    let mixed_ratio = t_mix_20 / t_mix_10;

    let ok = numeric_ratio <= NUMERIC_MAX_RATIO && mixed_ratio <= CATEGORICAL_MAX_RATIO;
    println!(
        "ACCEPTANCE 8 {} — numeric 2x-rows ratio {numeric_ratio:.2} ({t_num_10:.2}s → {t_num_20:.2}s, cap {NUMERIC_MAX_RATIO}); with 5 cardinality-50 categoricals {mixed_ratio:.2} ({t_mix_10:.2}s → {t_mix_20:.2}s, cap {CATEGORICAL_MAX_RATIO})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "numeric ratio {numeric_ratio:.2}, categorical ratio {mixed_ratio:.2}");
}

/// The published large-scale studies (external Kaggle data, tuned external
/// models) are out of desk-scale scope. This gate substitutes the mechanics:
/// arbitrary user CSVs flow through ingestion into the ranking comparison,
/// which is the entry point users would re-run such studies with.
#[test]
fn acceptance_9_user_csv_topk_path() {
    let _g = gate();
    let path = std::env::temp_dir().join(format!("acceptance9-{}.csv", std::process::id()));
    let mut body = String::from("a,b,color,y\n");
    let mut rng = rng_from(99);
    for _ in 0..120 {
        let a: f64 = rng.random_range(0.0..4.0);
        let b: f64 = rng.random_range(0.0..4.0);
        let c = rng.random_range(0..3usize);
        let y = 3.0 * a + b + c as f64 + rng.random_range(-0.2..0.2);
        body.push_str(&format!("{a},{b},{}\n", format_args!("{},{y}", ["red", "green", "blue"][c])));
    }
    std::fs::write(&path, body).unwrap();
    let ds = load_csv(&path, "y", &["color".to_string()]).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(ds.p(), 3);
    assert_eq!(ds.kind(2), FeatureKind::Categorical);
    let h = histogram(&ds, 2);
    assert_eq!(h.total(), 120);

    let params = TreeParams { min_samples_leaf: 10, ..TreeParams::default() };
    let cmp = compare_rankings(
        &ds,
        &[RankMethod::StratImportance, RankMethod::Spearman],
        ds.p(),
        3,
        &params,
        8,
        1,
    )
    .unwrap();
    assert_eq!(cmp.curves.len(), 2);
    assert!(cmp.curves.iter().all(|c| c.mae.len() == ds.p()));
    println!(
        "ACCEPTANCE 9 PASS — external-data figure studies substituted: user CSV → ingestion → ranking comparison runs end to end"
    );
}
