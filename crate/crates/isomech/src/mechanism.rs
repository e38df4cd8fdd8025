//! The calibration mechanism: per-author projection of raw scores onto the
//! author's claimed ranking, the topic-partition variant, and coauthor
//! averaging into per-paper modified scores with residual flags.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{raw_score, Author, AuthorId, Dataset, PaperId, Ranking};
use crate::error::{Error, Result};
use crate::isotonic::{project_block_order, OrderSpec, TieMode};

/// Which mechanism variant to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// One projection over the author's whole ranking.
    Full,
    /// Independent projections within each topic's sub-ranking.
    TopicPartition,
}

/// How papers are weighted inside a projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Every paper weighs the same.
    Unit,
    /// Papers weigh as many reviews as they received.
    ReviewCount,
}

/// Run-time options of the mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismOptions {
    pub variant: Variant,
    pub tie_mode: TieMode,
    pub weight_mode: WeightMode,
    /// Papers whose |modified - raw| reaches this threshold are flagged for
    /// meta-reviewer attention. Must be >= 0.
    pub flag_threshold: f64,
}

impl Default for MechanismOptions {
    fn default() -> Self {
        MechanismOptions {
            variant: Variant::Full,
            tie_mode: TieMode::Equality,
            weight_mode: WeightMode::Unit,
            // One point on a 1-10 scale is a visible review-level
            // disagreement; configurable.
            flag_threshold: 1.0,
        }
    }
}

impl MechanismOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.flag_threshold >= 0.0) {
            return Err(Error::invalid(format!(
                "flag_threshold must be >= 0, got {}",
                self.flag_threshold
            )));
        }
        Ok(())
    }
}

/// Output of one full mechanism run over a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    /// Each ranking author's own calibrated scores for their ranked papers.
    pub per_author: BTreeMap<AuthorId, BTreeMap<PaperId, f64>>,
    /// Per-paper modified score: mean of calibrated scores over the authors
    /// who ranked the paper, or the raw score if nobody did.
    pub modified: BTreeMap<PaperId, f64>,
    /// Papers whose modification reached the flag threshold.
    pub flagged: Vec<PaperId>,
    /// Number of calibrating coauthors per paper.
    pub participating: BTreeMap<PaperId, usize>,
}

fn paper_weight(dataset: &Dataset, options: &MechanismOptions, paper: &PaperId) -> f64 {
    match options.weight_mode {
        WeightMode::Unit => 1.0,
        WeightMode::ReviewCount => dataset.submissions[paper].review_scores.len() as f64,
    }
}

/// Calibrates one author's raw scores against their ranking.
///
/// The `Full` variant runs a single projection under the ranking's block
/// order. `TopicPartition` first restricts the ranking to each topic
/// (papers without a topic label form implicit singletons), preserving
/// block order, and projects each topic's sub-ranking independently;
/// single-paper sub-rankings pass the raw score through.
pub fn calibrate_author(
    author: &Author,
    ranking: &Ranking,
    dataset: &Dataset,
    options: &MechanismOptions,
) -> Result<BTreeMap<PaperId, f64>> {
    options.validate()?;
    if ranking.author_id != author.id {
        return Err(Error::invalid(format!(
            "ranking of author {} applied to author {}",
            ranking.author_id, author.id
        )));
    }
    for paper in ranking.papers() {
        if !dataset.submissions.contains_key(paper) {
            return Err(Error::invalid(format!(
                "ranking of author {} references unknown paper {paper}",
                author.id
            )));
        }
        if !author.submission_ids.contains(paper) {
            return Err(Error::invalid(format!(
                "author {} ranks paper {paper} they are not an author of",
                author.id
            )));
        }
    }

    let mut calibrated = BTreeMap::new();
    match options.variant {
        Variant::Full => {
            project_sub_ranking(&ranking.blocks, dataset, options, &mut calibrated)?;
        }
        Variant::TopicPartition => {
            // Topic keys in first-appearance order; unlabeled papers get a
            // unique key each (implicit singleton sub-ranking).
            let mut topic_order: Vec<String> = Vec::new();
            let mut groups: BTreeMap<String, Vec<Vec<PaperId>>> = BTreeMap::new();
            let mut anon = 0usize;
            for (b, block) in ranking.blocks.iter().enumerate() {
                for paper in block {
                    let key = match &dataset.submissions[paper].topic {
                        Some(t) => format!("t:{t}"),
                        None => {
                            anon += 1;
                            format!("anon:{anon}")
                        }
                    };
                    if !groups.contains_key(&key) {
                        topic_order.push(key.clone());
                    }
                    let blocks = groups.entry(key).or_default();
                    // Keep one sub-block per original block index.
                    while blocks.len() <= b {
                        blocks.push(Vec::new());
                    }
                    blocks[b].push(paper.clone());
                }
            }
            for key in topic_order {
                let blocks: Vec<Vec<PaperId>> = groups
                    .remove(&key)
                    .expect("group recorded")
                    .into_iter()
                    .filter(|b| !b.is_empty())
                    .collect();
                project_sub_ranking(&blocks, dataset, options, &mut calibrated)?;
            }
        }
    }
    Ok(calibrated)
}

/// Projects one (sub-)ranking's papers and appends the fitted scores.
fn project_sub_ranking(
    blocks: &[Vec<PaperId>],
    dataset: &Dataset,
    options: &MechanismOptions,
    out: &mut BTreeMap<PaperId, f64>,
) -> Result<()> {
    let papers: Vec<&PaperId> = blocks.iter().flatten().collect();
    if papers.len() == 1 {
        // A lone paper carries no comparative information.
        out.insert(papers[0].clone(), raw_score(&dataset.submissions[papers[0]]));
        return Ok(());
    }
    let raw: Vec<f64> = papers.iter().map(|p| raw_score(&dataset.submissions[*p])).collect();
    let weights: Vec<f64> = papers.iter().map(|p| paper_weight(dataset, options, p)).collect();
    let mut index_blocks = Vec::with_capacity(blocks.len());
    let mut next = 0usize;
    for block in blocks {
        index_blocks.push((next..next + block.len()).collect::<Vec<_>>());
        next += block.len();
    }
    let order = OrderSpec::new(index_blocks, options.tie_mode);
    let result = project_block_order(&raw, &order, &weights)?;
    for (paper, fitted) in papers.into_iter().zip(result.fitted) {
        out.insert(paper.clone(), fitted);
    }
    Ok(())
}

/// Averages per-author calibrations into per-paper modified scores and
/// applies the residual flag rule.
pub fn combine_coauthors(
    dataset: &Dataset,
    per_author: BTreeMap<AuthorId, BTreeMap<PaperId, f64>>,
    options: &MechanismOptions,
) -> Result<CalibrationResult> {
    options.validate()?;
    let mut sums: BTreeMap<&PaperId, (f64, usize)> = BTreeMap::new();
    for scores in per_author.values() {
        for (paper, &score) in scores {
            if !dataset.submissions.contains_key(paper) {
                return Err(Error::invalid(format!(
                    "calibration references unknown paper {paper}"
                )));
            }
            let entry = sums.entry(paper).or_insert((0.0, 0));
            entry.0 += score;
            entry.1 += 1;
        }
    }

    let mut modified = BTreeMap::new();
    let mut participating = BTreeMap::new();
    let mut flagged = Vec::new();
    for (paper_id, submission) in &dataset.submissions {
        let raw = raw_score(submission);
        let (score, count) = match sums.get(paper_id) {
            Some(&(sum, count)) => (sum / count as f64, count),
            None => (raw, 0),
        };
        if count >= 1 && (score - raw).abs() >= options.flag_threshold {
            flagged.push(paper_id.clone());
        }
        modified.insert(paper_id.clone(), score);
        participating.insert(paper_id.clone(), count);
    }

    Ok(CalibrationResult { per_author, modified, flagged, participating })
}

/// Calibrates every ranking author and combines the results — the whole
/// mechanism in one call.
pub fn run_mechanism(dataset: &Dataset, options: &MechanismOptions) -> Result<CalibrationResult> {
    let mut per_author = BTreeMap::new();
    for (author_id, ranking) in &dataset.rankings {
        let author = dataset
            .authors
            .get(author_id)
            .ok_or_else(|| Error::invalid(format!("ranking by unknown author {author_id}")))?;
        per_author.insert(author_id.clone(), calibrate_author(author, ranking, dataset, options)?);
    }
    combine_coauthors(dataset, per_author, options)
}

/// One row of the residual report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub paper_id: PaperId,
    pub raw: f64,
    pub modified: f64,
    pub residual: f64,
}

/// All papers sorted by |residual| descending (ties by paper id ascending),
/// for directing meta-reviewer attention.
pub fn residual_report(result: &CalibrationResult, dataset: &Dataset) -> Vec<ResidualEntry> {
    let mut rows: Vec<ResidualEntry> = dataset
        .submissions
        .values()
        .map(|sub| {
            let raw = raw_score(sub);
            let modified = result.modified[&sub.id];
            ResidualEntry { paper_id: sub.id.clone(), raw, modified, residual: modified - raw }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.residual
            .abs()
            .partial_cmp(&a.residual.abs())
            .expect("finite residuals")
            .then_with(|| a.paper_id.cmp(&b.paper_id))
    });
    rows
}
