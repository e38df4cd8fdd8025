//! Evaluation of calibration quality against known latent qualities:
//! MSE/MAE by ranking length, percentage improvements, and OLS regression
//! of per-author improvement on the number of submissions.
//!
//! Two distinct analyses are assembled into one report. The length-grouped
//! table scores each ranking author's *own* calibrated estimates over the
//! papers they ranked; the overall table scores the coauthor-averaged
//! modified score per paper. Replicated experiments pool both across
//! replications and additionally record per-replication regression slopes
//! so paired variant comparisons stay meaningful.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{coverage_stats, raw_score, CoverageStats, Dataset, PaperId};
use crate::error::{Error, Result};
use crate::mechanism::{run_mechanism, CalibrationResult, MechanismOptions, Variant};
use crate::seed::{child_seed, Stream};
use crate::sim::{collect_reports, gen_world, PolicyAssignment, SyntheticWorld, WorldConfig};
use crate::stats::t_two_sided_p;

/// Mean squared and mean absolute difference between estimates and truth
/// over a non-empty subset of paper ids.
pub fn error_metrics(
    estimates: &BTreeMap<PaperId, f64>,
    truth: &BTreeMap<PaperId, f64>,
    subset: &[PaperId],
) -> Result<(f64, f64)> {
    if subset.is_empty() {
        return Err(Error::invalid("error_metrics needs a non-empty subset"));
    }
    let mut se = 0.0;
    let mut ae = 0.0;
    for id in subset {
        let est = estimates
            .get(id)
            .ok_or_else(|| Error::invalid(format!("no estimate for paper {id}")))?;
        let tru = truth
            .get(id)
            .ok_or_else(|| Error::invalid(format!("no ground truth for paper {id}")))?;
        let d = est - tru;
        se += d * d;
        ae += d.abs();
    }
    let n = subset.len() as f64;
    Ok((se / n, ae / n))
}

/// One ranking author's error summary over the papers they ranked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuthorRecord {
    pub author_id: String,
    pub ranking_length: u32,
    pub n_submissions: usize,
    pub mse_raw: f64,
    pub mse_modified: f64,
    pub mae_raw: f64,
    pub mae_modified: f64,
}

/// Per-author error records over ranked papers, raw versus that author's
/// own calibrated scores (before coauthor averaging).
pub fn group_by_ranking_length(
    world: &SyntheticWorld,
    result: &CalibrationResult,
) -> Result<Vec<AuthorRecord>> {
    let mut records = Vec::with_capacity(world.dataset.rankings.len());
    for (author_id, ranking) in &world.dataset.rankings {
        let calibrated = result.per_author.get(author_id).ok_or_else(|| {
            Error::internal(format!("no calibration entry for ranking author {author_id}"))
        })?;
        let mut se_raw = 0.0;
        let mut se_mod = 0.0;
        let mut ae_raw = 0.0;
        let mut ae_mod = 0.0;
        let mut n = 0usize;
        for paper in ranking.papers() {
            let theta = *world
                .theta
                .get(paper)
                .ok_or_else(|| Error::invalid(format!("no ground truth for paper {paper}")))?;
            let raw = raw_score(&world.dataset.submissions[paper]);
            let cal = *calibrated.get(paper).ok_or_else(|| {
                Error::internal(format!("author {author_id} has no calibrated score for {paper}"))
            })?;
            se_raw += (raw - theta) * (raw - theta);
            se_mod += (cal - theta) * (cal - theta);
            ae_raw += (raw - theta).abs();
            ae_mod += (cal - theta).abs();
            n += 1;
        }
        let n_f = n as f64;
        records.push(AuthorRecord {
            author_id: author_id.clone(),
            ranking_length: n as u32,
            n_submissions: world.dataset.authors[author_id].submission_ids.len(),
            mse_raw: se_raw / n_f,
            mse_modified: se_mod / n_f,
            mae_raw: ae_raw / n_f,
            mae_modified: ae_mod / n_f,
        });
    }
    Ok(records)
}

/// Ordinary least squares of `y` on `x` with a two-sided t-test of the
/// zero-slope null: returns `(slope, intercept, p_value)`.
///
/// Degenerate cases follow fixed conventions so batch reports stay total:
/// constant `y` reports `(0, y, 1)`; an exact fit with non-constant `y`
/// reports `p = 0`.
pub fn ols_with_pvalue(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "regression length mismatch: {} xs vs {} ys",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::invalid(format!(
            "regression needs at least 3 points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("regression inputs must be finite"));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Ok((0.0, y[0], 1.0));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mean_x) * (v - mean_x)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("regression x values are constant"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mean_x) * (b - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let df = n - 2.0;
    if sse <= 0.0 {
        return Ok((slope, intercept, 0.0));
    }
    let se_slope = (sse / df / sxx).sqrt();
    let t = slope / se_slope;
    let p = t_two_sided_p(t, df)?;
    Ok((slope, intercept, p))
}

/// Regression result that stays JSON-friendly when inference is impossible.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RegressionOutcome {
    Ok { slope: f64, intercept: f64, p_value: f64, n_points: usize },
    Undefined { reason: String },
}

/// Error metrics for one ranking-length group, averaged over its authors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupMetrics {
    pub n_authors: usize,
    pub mse_raw: f64,
    pub mse_modified: f64,
    pub mae_raw: f64,
    pub mae_modified: f64,
}

/// Paper-level error metrics using coauthor-averaged modified scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverallMetrics {
    pub n_papers: usize,
    pub n_ranking_authors: usize,
    pub mse_raw: f64,
    pub mse_modified: f64,
    pub mae_raw: f64,
    pub mae_modified: f64,
}

/// Percentage improvement of modified over raw, `100·(raw − modified)/raw`,
/// zero when the raw error is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Improvement {
    pub mse_pct: f64,
    pub mae_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Authors contributing regression points after the zero-raw-error
    /// exclusion.
    pub regression_points: usize,
    /// Authors excluded from the regressions because their raw error is 0.
    pub excluded_zero_raw_authors: usize,
    pub distinct_ranking_lengths: usize,
    /// Per-replication MSE-improvement regression slopes, in replication
    /// order; null where a replication's regression was undefined.
    pub per_rep_slope_mse: Vec<Option<f64>>,
}

/// Figure-style evaluation of one mechanism variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub per_length: BTreeMap<u32, GroupMetrics>,
    pub overall: OverallMetrics,
    pub improvement: Improvement,
    pub regression_mse: RegressionOutcome,
    pub regression_mae: RegressionOutcome,
    pub coverage: CoverageStats,
    pub diagnostics: Diagnostics,
}

/// One row of the side-by-side per-length table (also the figure CSV).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FigureRow {
    pub ranking_length: u32,
    pub n_authors: usize,
    pub mse_raw: f64,
    pub mse_full: f64,
    pub mse_partition: f64,
    pub mae_raw: f64,
    pub mae_full: f64,
    pub mae_partition: f64,
}

/// Paired comparison of the per-replication regression slopes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedStats {
    pub replications: usize,
    /// Replications where the Full variant's MSE-improvement slope is
    /// strictly positive.
    pub full_slope_positive: usize,
    /// Replications where the TopicPartition slope is strictly smaller than
    /// the Full slope.
    pub partition_slope_smaller: usize,
    /// Replications satisfying both conditions at once.
    pub both: usize,
}

/// Complete evaluation artifact: both variants side by side plus paired
/// replication statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedReport {
    pub seed: Option<u64>,
    pub replications: usize,
    pub config: Option<WorldConfig>,
    pub policy: Option<String>,
    pub tie_mode: crate::isotonic::TieMode,
    pub weight_mode: crate::mechanism::WeightMode,
    pub full: EvaluationReport,
    pub partition: EvaluationReport,
    pub paired: PairedStats,
    pub figure: Vec<FigureRow>,
}

/// Raw evaluation material from a single replication of one variant.
#[derive(Debug, Clone)]
struct RepOutcome {
    records: Vec<AuthorRecord>,
    n_papers: usize,
    se_raw: f64,
    se_mod: f64,
    ae_raw: f64,
    ae_mod: f64,
    coverage: CoverageStats,
}

fn rep_outcome(world: &SyntheticWorld, result: &CalibrationResult) -> Result<RepOutcome> {
    let records = group_by_ranking_length(world, result)?;
    let mut se_raw = 0.0;
    let mut se_mod = 0.0;
    let mut ae_raw = 0.0;
    let mut ae_mod = 0.0;
    for (id, sub) in &world.dataset.submissions {
        let theta = *world
            .theta
            .get(id)
            .ok_or_else(|| Error::invalid(format!("no ground truth for paper {id}")))?;
        let raw = raw_score(sub);
        let modified = *result
            .modified
            .get(id)
            .ok_or_else(|| Error::internal(format!("no modified score for paper {id}")))?;
        se_raw += (raw - theta) * (raw - theta);
        se_mod += (modified - theta) * (modified - theta);
        ae_raw += (raw - theta).abs();
        ae_mod += (modified - theta).abs();
    }
    Ok(RepOutcome {
        records,
        n_papers: world.dataset.submissions.len(),
        se_raw,
        se_mod,
        ae_raw,
        ae_mod,
        coverage: coverage_stats(&world.dataset),
    })
}

/// Improvement-vs-submissions regression points for a set of author
/// records: `(points_mse, points_mae, excluded_zero_raw)`.
fn regression_points(records: &[AuthorRecord]) -> (Vec<(f64, f64)>, Vec<(f64, f64)>, usize) {
    let mut mse = Vec::with_capacity(records.len());
    let mut mae = Vec::with_capacity(records.len());
    let mut excluded = 0;
    for r in records {
        if r.mse_raw == 0.0 || r.mae_raw == 0.0 {
            excluded += 1;
            continue;
        }
        let x = r.n_submissions as f64;
        mse.push((x, 100.0 * (r.mse_raw - r.mse_modified) / r.mse_raw));
        mae.push((x, 100.0 * (r.mae_raw - r.mae_modified) / r.mae_raw));
    }
    (mse, mae, excluded)
}

fn regress(points: &[(f64, f64)]) -> RegressionOutcome {
    let distinct = {
        let mut xs: Vec<f64> = points.iter().map(|&(x, _)| x).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    };
    if distinct < 3 {
        return RegressionOutcome::Undefined {
            reason: format!("needs at least 3 distinct ranking lengths, found {distinct}"),
        };
    }
    let x: Vec<f64> = points.iter().map(|&(a, _)| a).collect();
    let y: Vec<f64> = points.iter().map(|&(_, b)| b).collect();
    match ols_with_pvalue(&x, &y) {
        Ok((slope, intercept, p_value)) => {
            RegressionOutcome::Ok { slope, intercept, p_value, n_points: points.len() }
        }
        Err(e) => RegressionOutcome::Undefined { reason: e.to_string() },
    }
}

fn slope_of(points: &[(f64, f64)]) -> Option<f64> {
    match regress(points) {
        RegressionOutcome::Ok { slope, .. } => Some(slope),
        RegressionOutcome::Undefined { .. } => None,
    }
}

fn pct(raw: f64, modified: f64) -> f64 {
    if raw == 0.0 {
        0.0
    } else {
        100.0 * (raw - modified) / raw
    }
}

/// Pools per-replication outcomes (in replication order) into one report.
fn aggregate(reps: &[RepOutcome]) -> EvaluationReport {
    #[derive(Default)]
    struct Acc {
        n: usize,
        mse_raw: f64,
        mse_mod: f64,
        mae_raw: f64,
        mae_mod: f64,
    }
    let mut groups: BTreeMap<u32, Acc> = BTreeMap::new();
    let mut points_mse = Vec::new();
    let mut points_mae = Vec::new();
    let mut excluded = 0;
    let mut per_rep_slope = Vec::with_capacity(reps.len());
    let mut n_papers = 0usize;
    let mut n_authors = 0usize;
    let (mut se_raw, mut se_mod, mut ae_raw, mut ae_mod) = (0.0, 0.0, 0.0, 0.0);
    let (mut cov_multi, mut cov_papers) = (0.0, 0.0);

    for rep in reps {
        for r in &rep.records {
            let acc = groups.entry(r.ranking_length).or_default();
            acc.n += 1;
            acc.mse_raw += r.mse_raw;
            acc.mse_mod += r.mse_modified;
            acc.mae_raw += r.mae_raw;
            acc.mae_mod += r.mae_modified;
        }
        let (mse, mae, ex) = regression_points(&rep.records);
        per_rep_slope.push(slope_of(&mse));
        points_mse.extend_from_slice(&mse);
        points_mae.extend_from_slice(&mae);
        excluded += ex;
        n_papers += rep.n_papers;
        n_authors += rep.records.len();
        se_raw += rep.se_raw;
        se_mod += rep.se_mod;
        ae_raw += rep.ae_raw;
        ae_mod += rep.ae_mod;
        cov_multi += rep.coverage.frac_multi_submission_authors;
        cov_papers += rep.coverage.frac_papers_with_multi_submission_coauthor;
    }

    let per_length: BTreeMap<u32, GroupMetrics> = groups
        .into_iter()
        .map(|(len, acc)| {
            let n = acc.n as f64;
            (
                len,
                GroupMetrics {
                    n_authors: acc.n,
                    mse_raw: acc.mse_raw / n,
                    mse_modified: acc.mse_mod / n,
                    mae_raw: acc.mae_raw / n,
                    mae_modified: acc.mae_mod / n,
                },
            )
        })
        .collect();

    let paper_n = if n_papers == 0 { 1.0 } else { n_papers as f64 };
    let overall = OverallMetrics {
        n_papers,
        n_ranking_authors: n_authors,
        mse_raw: se_raw / paper_n,
        mse_modified: se_mod / paper_n,
        mae_raw: ae_raw / paper_n,
        mae_modified: ae_mod / paper_n,
    };
    let n_reps = reps.len().max(1) as f64;
    EvaluationReport {
        per_length,
        improvement: Improvement {
            mse_pct: pct(overall.mse_raw, overall.mse_modified),
            mae_pct: pct(overall.mae_raw, overall.mae_modified),
        },
        overall,
        regression_mse: regress(&points_mse),
        regression_mae: regress(&points_mae),
        coverage: CoverageStats {
            frac_multi_submission_authors: cov_multi / n_reps,
            frac_papers_with_multi_submission_coauthor: cov_papers / n_reps,
        },
        diagnostics: Diagnostics {
            regression_points: points_mse.len(),
            excluded_zero_raw_authors: excluded,
            distinct_ranking_lengths: {
                let mut lens: Vec<u32> =
                    reps.iter().flat_map(|r| r.records.iter().map(|a| a.ranking_length)).collect();
                lens.sort_unstable();
                lens.dedup();
                lens.len()
            },
            per_rep_slope_mse: per_rep_slope,
        },
    }
}

/// Assembles the single-variant report for one already-calibrated world.
pub fn build_report(world: &SyntheticWorld, result: &CalibrationResult) -> Result<EvaluationReport> {
    Ok(aggregate(&[rep_outcome(world, result)?]))
}

fn paired_stats(full: &EvaluationReport, partition: &EvaluationReport) -> PairedStats {
    let f = &full.diagnostics.per_rep_slope_mse;
    let p = &partition.diagnostics.per_rep_slope_mse;
    let mut positive = 0;
    let mut smaller = 0;
    let mut both = 0;
    for (sf, sp) in f.iter().zip(p) {
        let is_positive = matches!(sf, Some(s) if *s > 0.0);
        let is_smaller = matches!((sf, sp), (Some(a), Some(b)) if b < a);
        positive += usize::from(is_positive);
        smaller += usize::from(is_smaller);
        both += usize::from(is_positive && is_smaller);
    }
    PairedStats {
        replications: f.len(),
        full_slope_positive: positive,
        partition_slope_smaller: smaller,
        both,
    }
}

fn figure_rows(full: &EvaluationReport, partition: &EvaluationReport) -> Vec<FigureRow> {
    full.per_length
        .iter()
        .map(|(&len, f)| {
            let p = partition.per_length.get(&len).copied().unwrap_or(*f);
            FigureRow {
                ranking_length: len,
                n_authors: f.n_authors,
                mse_raw: f.mse_raw,
                mse_full: f.mse_modified,
                mse_partition: p.mse_modified,
                mae_raw: f.mae_raw,
                mae_full: f.mae_modified,
                mae_partition: p.mae_modified,
            }
        })
        .collect()
}

fn combine(
    seed: Option<u64>,
    replications: usize,
    config: Option<WorldConfig>,
    policy: Option<String>,
    options: &MechanismOptions,
    full: EvaluationReport,
    partition: EvaluationReport,
) -> CombinedReport {
    let paired = paired_stats(&full, &partition);
    let figure = figure_rows(&full, &partition);
    CombinedReport {
        seed,
        replications,
        config,
        policy,
        tie_mode: options.tie_mode,
        weight_mode: options.weight_mode,
        full,
        partition,
        paired,
        figure,
    }
}

/// Runs the replicated synthetic experiment with both variants on shared
/// worlds and reports.
///
/// Replication `r` generates its world from a seed derived from
/// `(config.seed, r)`, so replications are independent and may run on any
/// number of threads; aggregation merges in replication order, making the
/// report identical regardless of schedule.
pub fn run_paired_experiment(
    config: &WorldConfig,
    assignment: &PolicyAssignment,
    options: &MechanismOptions,
    replications: usize,
) -> Result<CombinedReport> {
    if replications == 0 {
        return Err(Error::invalid("replications must be at least 1"));
    }
    config.validate()?;
    options.validate()?;
    let opts_full = MechanismOptions { variant: Variant::Full, ..*options };
    let opts_part = MechanismOptions { variant: Variant::TopicPartition, ..*options };

    let outcomes: Result<Vec<(RepOutcome, RepOutcome)>> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let rep_config = WorldConfig {
                seed: child_seed(config.seed, Stream::Replication, r),
                ..config.clone()
            };
            let mut world = gen_world(&rep_config)?;
            collect_reports(&mut world, assignment)?;
            let res_full = run_mechanism(&world.dataset, &opts_full)?;
            let res_part = run_mechanism(&world.dataset, &opts_part)?;
            Ok((rep_outcome(&world, &res_full)?, rep_outcome(&world, &res_part)?))
        })
        .collect();
    let outcomes = outcomes?;
    let (full_reps, part_reps): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    Ok(combine(
        Some(config.seed),
        replications,
        Some(config.clone()),
        Some(assignment.default.to_string()),
        options,
        aggregate(&full_reps),
        aggregate(&part_reps),
    ))
}

/// Evaluates both variants on a fixed dataset with supplied ground truth.
pub fn evaluate_static(
    dataset: &Dataset,
    theta: &BTreeMap<PaperId, f64>,
    options: &MechanismOptions,
) -> Result<CombinedReport> {
    options.validate()?;
    for id in dataset.submissions.keys() {
        if !theta.contains_key(id) {
            return Err(Error::invalid(format!("no ground truth for paper {id}")));
        }
    }
    for id in theta.keys() {
        if !dataset.submissions.contains_key(id) {
            return Err(Error::invalid(format!("ground truth for unknown paper {id}")));
        }
    }
    let world = SyntheticWorld {
        dataset: dataset.clone(),
        theta: theta.clone(),
        policy_log: BTreeMap::new(),
        seed: 0,
    };
    let opts_full = MechanismOptions { variant: Variant::Full, ..*options };
    let opts_part = MechanismOptions { variant: Variant::TopicPartition, ..*options };
    let full = aggregate(&[rep_outcome(&world, &run_mechanism(&world.dataset, &opts_full)?)?]);
    let partition = aggregate(&[rep_outcome(&world, &run_mechanism(&world.dataset, &opts_part)?)?]);
    Ok(combine(None, 1, None, None, options, full, partition))
}
