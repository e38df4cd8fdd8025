//! Acceptance gate for the calibration toolkit. Seven criteria, one test
//! each; every test finishes by printing a single `acceptance criterion N:
//! PASS` line with the measured numbers (run with `--nocapture` to see them).
//!
//! 1. Exact solvers agree with a slow reference projector.
//! 2. Projection invariants hold on random instances.
//! 3. Truthful reporting maximizes expected convex utility; acceptance
//!    counting breaks that guarantee.
//! 4. The replicated synthetic study shows the headline pattern: large MSE
//!    reduction, improvement growing with ranking length, and the topic
//!    partition flattening that growth.
//! 5. OLS inference matches closed-form algebra and high-precision
//!    t-distribution references.
//! 6. Reports are byte-identical across worker counts.
//! 7. Coverage statistics match exhaustive counting on every small dataset.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use isomech::data::{coverage_stats, Author, Dataset, Submission};
use isomech::eval::{ols_with_pvalue, run_paired_experiment};
use isomech::isotonic::{pava, project_block_order, Direction, OrderSpec, TieMode};
use isomech::mechanism::MechanismOptions;
use isomech::oracle::oracle_project;
use isomech::sim::PolicyAssignment;
use isomech::sim::WorldConfig;
use isomech::stats::t_two_sided_p;
use isomech::truthful::{verify_truthful, UtilitySpec};

fn random_values(rng: &mut StdRng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
    (values, weights)
}

/// Random consecutive blocks covering 0..n.
fn random_blocks(rng: &mut StdRng, n: usize) -> Vec<Vec<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < n {
        let len = rng.random_range(1..=3.min(n - start));
        blocks.push((start..start + len).collect());
        start += len;
    }
    blocks
}

fn singleton_chain(n: usize) -> OrderSpec {
    OrderSpec::new((0..n).map(|i| vec![i]).collect(), TieMode::Dominance)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn acceptance_criterion_1_solvers_agree_with_reference_projector() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xA11CE);
    let mut worst_total: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=12);
        let (values, weights) = random_values(&mut rng, n);
        let fast = pava(&values, &weights, Direction::NonIncreasing).unwrap().fitted;
        let slow = oracle_project(&values, &singleton_chain(n), &weights).unwrap().fitted;
        worst_total = worst_total.max(max_abs_diff(&fast, &slow));
    }
    assert!(worst_total <= 1e-8, "total-order disagreement {worst_total:e}");

    let mut worst_block: f64 = 0.0;
    for i in 0..500 {
        let n = rng.random_range(2..=10);
        let (values, weights) = random_values(&mut rng, n);
        let mode = if i % 2 == 0 { TieMode::Equality } else { TieMode::Dominance };
        let order = OrderSpec::new(random_blocks(&mut rng, n), mode);
        let fast = project_block_order(&values, &order, &weights).unwrap().fitted;
        let slow = oracle_project(&values, &order, &weights).unwrap().fitted;
        worst_block = worst_block.max(max_abs_diff(&fast, &slow));
    }
    assert!(worst_block <= 1e-8, "block disagreement {worst_block:e}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}, budget 30s");
    println!(
        "acceptance criterion 1: PASS — 1000 total-order (n ≤ 12) max |Δ| {worst_total:.2e}, \
         500 block (n ≤ 10) max |Δ| {worst_block:.2e}, {:.1}s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn acceptance_criterion_2_projection_invariants_hold() {
    let mut rng = StdRng::seed_from_u64(0x12A5);
    let mut checked = 0;
    for i in 0..1000 {
        let n = rng.random_range(2..=10);
        let (values, weights) = random_values(&mut rng, n);
        let order = match i % 3 {
            0 => singleton_chain(n),
            1 => OrderSpec::new(random_blocks(&mut rng, n), TieMode::Equality),
            _ => OrderSpec::new(random_blocks(&mut rng, n), TieMode::Dominance),
        };
        let fitted = project_block_order(&values, &order, &weights).unwrap().fitted;

        // Idempotence: projecting a feasible point changes nothing.
        let again = project_block_order(&fitted, &order, &weights).unwrap().fitted;
        assert!(max_abs_diff(&fitted, &again) <= 1e-9, "idempotence, instance {i}");

        // Weighted-sum preservation.
        let before: f64 = values.iter().zip(&weights).map(|(v, w)| v * w).sum();
        let after: f64 = fitted.iter().zip(&weights).map(|(v, w)| v * w).sum();
        assert!(
            (before - after).abs() <= 1e-9 * before.abs().max(1.0),
            "sum preservation, instance {i}: {before} vs {after}"
        );

        // Range containment.
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
        for &f in &fitted {
            assert!(f >= lo - 1e-12 && f <= hi + 1e-12, "range, instance {i}");
        }

        // Translation equivariance.
        let shift = rng.random_range(-5.0..5.0);
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let fitted_shifted = project_block_order(&shifted, &order, &weights).unwrap().fitted;
        let expected: Vec<f64> = fitted.iter().map(|f| f + shift).collect();
        assert!(
            max_abs_diff(&fitted_shifted, &expected) <= 1e-9,
            "translation, instance {i}"
        );
        checked += 1;
    }
    println!(
        "acceptance criterion 2: PASS — idempotence, weighted-sum preservation, range \
         containment, translation equivariance on {checked} instances"
    );
}

#[test]
fn acceptance_criterion_3_truthfulness_suite() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x7247);
    let thetas: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let dim = rng.random_range(2..=5);
            (0..dim).map(|_| rng.random_range(0.0..10.0)).collect()
        })
        .collect();

    let mut verified = 0;
    let mut seed = 0xBEEF_0000u64;
    for exponent in [1.5, 2.0, 3.0] {
        let utility = UtilitySpec::ConvexPower(exponent);
        for noise in [0.0, 0.5, 1.0, 2.0] {
            for theta in &thetas {
                seed += 1;
                let verdict = verify_truthful(theta, &utility, noise, 20_000, seed).unwrap();
                assert!(
                    verdict.truthful_optimal,
                    "exponent {exponent}, noise {noise}, theta {theta:?}: \
                     best {:?} beat truthful by {:e} (tolerance {:e})",
                    verdict.best_report, verdict.margin, verdict.tolerance
                );
                verified += 1;
            }
        }
    }

    // Counting acceptances above a threshold is not convex in the scores:
    // ranking the weaker paper first pools (6, 3.9) to (4.95, 4.95), pushing
    // both above a threshold of 4.
    let verdict =
        verify_truthful(&[6.0, 3.9], &UtilitySpec::AcceptCount(4.0), 0.0, 1, 1).unwrap();
    assert!(!verdict.truthful_optimal, "acceptance counting must be gameable");
    assert_eq!(verdict.best_report, vec![1, 0]);
    assert!((verdict.margin - 1.0).abs() < 1e-12, "margin {}", verdict.margin);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 300, "took {elapsed:?}, budget 5min");
    println!(
        "acceptance criterion 3: PASS — {verified}/2400 convex-power cases truthful-optimal, \
         acceptance-count counterexample confirmed, {:.0}s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn acceptance_criterion_4_replicated_study_shows_headline_pattern() {
    let started = Instant::now();
    let config = WorldConfig::default();
    assert!(config.n_authors >= 2000, "desk-scale world required");
    let report = run_paired_experiment(
        &config,
        &PolicyAssignment::default(),
        &MechanismOptions::default(),
        100,
    )
    .unwrap();

    // (a) Large overall MSE reduction under the full variant.
    let mse_pct = report.full.improvement.mse_pct;
    assert!(mse_pct >= 15.0, "overall MSE improvement {mse_pct:.2}% < 15%");

    // (b) Improvement grows with ranking length, and partitioning flattens
    // the growth, in at least 90% of paired replications.
    let paired = &report.paired;
    assert_eq!(paired.replications, 100);
    assert!(
        paired.both >= 90,
        "full-slope-positive AND partition-slope-smaller in only {}/100 replications \
         (positive {}, smaller {})",
        paired.both,
        paired.full_slope_positive,
        paired.partition_slope_smaller
    );

    // (c) No ranking-length group gets worse on the replication average.
    for (len, group) in &report.full.per_length {
        assert!(
            group.mse_modified <= group.mse_raw + 1e-12,
            "length {len}: modified {} > raw {}",
            group.mse_modified,
            group.mse_raw
        );
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 600, "took {elapsed:?}, budget 10min");
    println!(
        "acceptance criterion 4: PASS — MSE -{mse_pct:.1}% overall, paired pattern {}/100, \
         {} length groups all improved, {:.0}s",
        paired.both,
        report.full.per_length.len(),
        elapsed.as_secs_f64()
    );
}

#[test]
fn acceptance_criterion_5_ols_inference_matches_references() {
    // Slope and intercept against an independent closed-form solve of the
    // 2x2 normal equations.
    let mut rng = StdRng::seed_from_u64(0x015);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(5..=40);
        let a = rng.random_range(-2.0..2.0);
        let b = rng.random_range(-2.0..2.0);
        let x: Vec<f64> =
            (0..n).map(|i| i as f64 * 0.3 + rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> =
            x.iter().map(|&xi| a + b * xi + rng.random_range(-1.0..1.0)).collect();
        let (slope, intercept, _) = ols_with_pvalue(&x, &y).unwrap();

        let nf = n as f64;
        let (sx, sy, sxx, sxy) = x.iter().zip(&y).fold(
            (0.0, 0.0, 0.0, 0.0),
            |(sx, sy, sxx, sxy), (&xi, &yi)| (sx + xi, sy + yi, sxx + xi * xi, sxy + xi * yi),
        );
        let det = nf * sxx - sx * sx;
        let slope_ref = (nf * sxy - sx * sy) / det;
        let intercept_ref = (sxx * sy - sx * sxy) / det;
        worst = worst.max((slope - slope_ref).abs()).max((intercept - intercept_ref).abs());
    }
    assert!(worst <= 1e-12, "normal-equation disagreement {worst:e}");

    // Two-sided t-distribution tail probabilities, frozen from an
    // independent high-precision computation.
    let references: [(f64, f64, f64); 20] = [
        (0.0, 1.0, 1.0),
        (0.5, 1.0, 0.70483276469913345),
        (1.0, 1.0, 0.5),
        (2.0, 1.0, 0.29516723530086655),
        (0.5, 2.0, 0.66666666666666667),
        (1.0606601717798212, 2.0, 0.40000000000000003),
        (2.0, 2.0, 0.18350341907227397),
        (4.0, 2.0, 0.057190958417936634),
        (0.25, 3.0, 0.81872922242882959),
        (1.5, 3.0, 0.23058386524482305),
        (3.0, 3.0, 0.057668885622437309),
        (0.75, 5.0, 0.48702424805930927),
        (2.5, 5.0, 0.054490099342376241),
        (1.0, 8.0, 0.34659350708733425),
        (3.5, 8.0, 0.0080790822604118906),
        (0.1, 13.0, 0.92187002964031896),
        (2.0, 13.0, 0.066840357648254244),
        (1.5, 30.0, 0.144065929128646),
        (5.0, 100.0, 2.4501734135038004e-6),
        (2.0, 998.0, 0.045770887996562413),
    ];
    let mut worst_p: f64 = 0.0;
    for (t, df, expected) in references {
        let p = t_two_sided_p(t, df).unwrap();
        worst_p = worst_p.max((p - expected).abs());
    }
    assert!(worst_p <= 1e-8, "t-distribution disagreement {worst_p:e}");

    println!(
        "acceptance criterion 5: PASS — 100 OLS fits max |Δ| {worst:.2e}, \
         20 t-distribution references max |Δ| {worst_p:.2e}"
    );
}

#[test]
fn acceptance_criterion_6_reports_identical_across_worker_counts() {
    let started = Instant::now();
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.json");
    let dir = tempfile::tempdir().unwrap();

    let mut artifacts = Vec::new();
    for jobs in ["1", "8"] {
        let out_dir = dir.path().join(format!("jobs-{jobs}"));
        let output = Command::new(env!("CARGO_BIN_EXE_isomech"))
            .args([
                "evaluate",
                "--config",
                config,
                "--out",
                out_dir.to_str().unwrap(),
                "--reps",
                "100",
                "--jobs",
                jobs,
                "--seed",
                "2024",
            ])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "jobs {jobs}: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        artifacts.push((
            std::fs::read(out_dir.join("report.json")).unwrap(),
            std::fs::read(out_dir.join("figure1.csv")).unwrap(),
        ));
    }
    assert_eq!(artifacts[0].0, artifacts[1].0, "report.json differs across --jobs");
    assert_eq!(artifacts[0].1, artifacts[1].1, "figure1.csv differs across --jobs");

    println!(
        "acceptance criterion 6: PASS — 100-replication report.json byte-identical for \
         --jobs 1 vs --jobs 8 ({} bytes), {:.0}s",
        artifacts[0].0.len(),
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_criterion_7_coverage_matches_exhaustive_counting() {
    // Every dataset with at most 6 papers and at most 3 authors, generated
    // combinatorially: each author may hold any subset of the papers.
    let paper_ids: Vec<String> = (0..6).map(|i| format!("P{i}")).collect();
    let author_ids: Vec<String> = (0..3).map(|i| format!("A{i}")).collect();

    let mut datasets = 0u64;
    for n_papers in 0..=6usize {
        for n_authors in 0..=3usize {
            let combos = 1u64 << (n_papers * n_authors);
            for code in 0..combos {
                // Author k's subset is bit-slice k of `code`.
                let masks: Vec<u64> =
                    (0..n_authors).map(|k| (code >> (k * n_papers)) & ((1 << n_papers) - 1)).collect();

                let mut submissions = BTreeMap::new();
                for id in &paper_ids[..n_papers] {
                    submissions.insert(
                        id.clone(),
                        Submission { id: id.clone(), topic: None, review_scores: vec![5.0] },
                    );
                }
                let mut authors = BTreeMap::new();
                for (k, mask) in masks.iter().enumerate() {
                    let submission_ids: Vec<String> = (0..n_papers)
                        .filter(|p| mask & (1 << p) != 0)
                        .map(|p| paper_ids[p].clone())
                        .collect();
                    authors.insert(
                        author_ids[k].clone(),
                        Author { id: author_ids[k].clone(), submission_ids },
                    );
                }
                let dataset = Dataset {
                    scale: (1.0, 10.0),
                    submissions,
                    authors,
                    rankings: BTreeMap::new(),
                };
                let stats = coverage_stats(&dataset);

                // Independent recount straight from the bitmasks.
                let multi = masks.iter().filter(|m| m.count_ones() >= 2).count();
                let covered = (0..n_papers)
                    .filter(|p| {
                        masks.iter().any(|m| m.count_ones() >= 2 && m & (1 << p) != 0)
                    })
                    .count();
                let expect_authors =
                    if n_authors == 0 { 0.0 } else { multi as f64 / n_authors as f64 };
                let expect_papers =
                    if n_papers == 0 { 0.0 } else { covered as f64 / n_papers as f64 };
                assert_eq!(
                    stats.frac_multi_submission_authors, expect_authors,
                    "authors, papers {n_papers}, masks {masks:?}"
                );
                assert_eq!(
                    stats.frac_papers_with_multi_submission_coauthor, expect_papers,
                    "papers, papers {n_papers}, masks {masks:?}"
                );
                datasets += 1;
            }
        }
    }
    assert!(datasets > 300_000, "enumeration unexpectedly small: {datasets}");
    println!(
        "acceptance criterion 7: PASS — coverage statistics exact on {datasets} \
         combinatorial datasets (≤ 6 papers, ≤ 3 authors)"
    );
}
