//! Peer-review data model: submissions, authors, rankings, datasets.
//!
//! Datasets load from four CSV files (see [`DataPaths`]) and are fully
//! validated on load: referential integrity, score bounds, ranking
//! structure. After load a [`Dataset`] is immutable and safe to share
//! across threads.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PaperId = String;
pub type AuthorId = String;

/// One submission with its topic label and review scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Submission {
    pub id: PaperId,
    /// Free-form topic label; `None` when the column was empty.
    pub topic: Option<String>,
    pub review_scores: Vec<f64>,
}

/// Mean of the submission's review scores — the displayed raw score.
pub fn raw_score(submission: &Submission) -> f64 {
    submission.review_scores.iter().sum::<f64>() / submission.review_scores.len() as f64
}

/// One author and the submissions they are on.
#[derive(Debug, Clone, PartialEq)]
pub struct Author {
    pub id: AuthorId,
    /// Sorted, deduplicated.
    pub submission_ids: Vec<PaperId>,
}

/// An author's coarse ranking: `blocks[0]` is claimed best. Papers within a
/// block are stored sorted; a strict ranking has singleton blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub author_id: AuthorId,
    pub blocks: Vec<Vec<PaperId>>,
}

impl Ranking {
    /// Total number of papers ranked.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All ranked paper ids in block order.
    pub fn papers(&self) -> impl Iterator<Item = &PaperId> {
        self.blocks.iter().flatten()
    }
}

/// A validated review-world snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Inclusive score bounds `(scale_min, scale_max)`.
    pub scale: (f64, f64),
    pub submissions: BTreeMap<PaperId, Submission>,
    pub authors: BTreeMap<AuthorId, Author>,
    /// At most one ranking per author.
    pub rankings: BTreeMap<AuthorId, Ranking>,
}

/// Fractions reported by [`coverage_stats`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    /// Share of authors with at least two submissions.
    pub frac_multi_submission_authors: f64,
    /// Share of papers with at least one coauthor who has two or more
    /// submissions (and could therefore rank this paper against another).
    pub frac_papers_with_multi_submission_coauthor: f64,
}

/// Fraction of authors who could participate and fraction of papers their
/// rankings could cover.
pub fn coverage_stats(dataset: &Dataset) -> CoverageStats {
    let n_authors = dataset.authors.len();
    let n_papers = dataset.submissions.len();
    let multi: BTreeSet<&AuthorId> = dataset
        .authors
        .values()
        .filter(|a| a.submission_ids.len() >= 2)
        .map(|a| &a.id)
        .collect();
    let mut covered: BTreeSet<&PaperId> = BTreeSet::new();
    for id in &multi {
        if let Some(author) = dataset.authors.get(*id) {
            covered.extend(author.submission_ids.iter());
        }
    }
    CoverageStats {
        frac_multi_submission_authors: if n_authors == 0 {
            0.0
        } else {
            multi.len() as f64 / n_authors as f64
        },
        frac_papers_with_multi_submission_coauthor: if n_papers == 0 {
            0.0
        } else {
            covered.len() as f64 / n_papers as f64
        },
    }
}

/// Locations of the four CSV files a dataset loads from.
#[derive(Debug, Clone)]
pub struct DataPaths {
    pub submissions: PathBuf,
    pub reviews: PathBuf,
    pub authorships: PathBuf,
    pub rankings: PathBuf,
}

impl DataPaths {
    /// Standard file names inside one directory.
    pub fn from_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        DataPaths {
            submissions: dir.join("submissions.csv"),
            reviews: dir.join("reviews.csv"),
            authorships: dir.join("authorships.csv"),
            rankings: dir.join("rankings.csv"),
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct SubmissionRow {
    paper_id: String,
    topic: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct ReviewRow {
    paper_id: String,
    score: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct AuthorshipRow {
    paper_id: String,
    author_id: String,
}

#[derive(Debug, Deserialize, Serialize)]
struct RankingRow {
    author_id: String,
    paper_id: String,
    block_index: u32,
}

/// Reads every row of a CSV file, attaching `file:row` locations to errors.
/// Row numbers are 1-based over data rows (the header is row 0).
fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>> {
    if !path.exists() {
        return Err(Error::invalid(format!("missing file: {}", path.display())));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| locate_csv_error(path, e))?;
    let mut rows = Vec::new();
    for (idx, record) in reader.deserialize::<T>().enumerate() {
        let row = idx + 1;
        let value = record.map_err(|e| {
            Error::invalid(format!("{}: row {row}: {}", path.display(), flatten_csv_error(&e)))
        })?;
        rows.push((row, value));
    }
    Ok(rows)
}

fn locate_csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::invalid(format!("{}: {other:?}", path.display())),
        }
    } else {
        Error::invalid(format!("{}: {e}", path.display()))
    }
}

fn flatten_csv_error(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        other => format!("{other:?}"),
    }
}

/// Loads and validates a dataset from the four CSV schemas.
///
/// Every validation failure names the file and data row it came from.
pub fn load_dataset(paths: &DataPaths, scale: (f64, f64)) -> Result<Dataset> {
    if !(scale.0 < scale.1) {
        return Err(Error::invalid(format!(
            "scale minimum {} must be below scale maximum {}",
            scale.0, scale.1
        )));
    }

    let mut submissions: BTreeMap<PaperId, Submission> = BTreeMap::new();
    for (row, rec) in read_rows::<SubmissionRow>(&paths.submissions)? {
        if rec.paper_id.is_empty() {
            return Err(Error::invalid(format!(
                "{}: row {row}: empty paper_id",
                paths.submissions.display()
            )));
        }
        let topic = rec.topic.filter(|t| !t.is_empty());
        match submissions.entry(rec.paper_id.clone()) {
            Entry::Occupied(_) => {
                return Err(Error::invalid(format!(
                    "{}: row {row}: duplicate paper_id {}",
                    paths.submissions.display(),
                    rec.paper_id
                )));
            }
            Entry::Vacant(v) => {
                v.insert(Submission { id: rec.paper_id, topic, review_scores: Vec::new() });
            }
        }
    }

    for (row, rec) in read_rows::<ReviewRow>(&paths.reviews)? {
        let sub = submissions.get_mut(&rec.paper_id).ok_or_else(|| {
            Error::invalid(format!(
                "{}: row {row}: review references unknown paper_id {}",
                paths.reviews.display(),
                rec.paper_id
            ))
        })?;
        if !rec.score.is_finite() || rec.score < scale.0 || rec.score > scale.1 {
            return Err(Error::invalid(format!(
                "{}: row {row}: score {} outside scale [{}, {}]",
                paths.reviews.display(),
                rec.score,
                scale.0,
                scale.1
            )));
        }
        sub.review_scores.push(rec.score);
    }
    for sub in submissions.values() {
        if sub.review_scores.is_empty() {
            return Err(Error::invalid(format!(
                "{}: paper {} has no reviews",
                paths.reviews.display(),
                sub.id
            )));
        }
    }

    let mut authors: BTreeMap<AuthorId, Author> = BTreeMap::new();
    for (row, rec) in read_rows::<AuthorshipRow>(&paths.authorships)? {
        if !submissions.contains_key(&rec.paper_id) {
            return Err(Error::invalid(format!(
                "{}: row {row}: authorship references unknown paper_id {}",
                paths.authorships.display(),
                rec.paper_id
            )));
        }
        if rec.author_id.is_empty() {
            return Err(Error::invalid(format!(
                "{}: row {row}: empty author_id",
                paths.authorships.display()
            )));
        }
        let author = authors
            .entry(rec.author_id.clone())
            .or_insert_with(|| Author { id: rec.author_id.clone(), submission_ids: Vec::new() });
        if author.submission_ids.contains(&rec.paper_id) {
            return Err(Error::invalid(format!(
                "{}: row {row}: duplicate authorship ({}, {})",
                paths.authorships.display(),
                rec.paper_id,
                rec.author_id
            )));
        }
        author.submission_ids.push(rec.paper_id);
    }
    for author in authors.values_mut() {
        author.submission_ids.sort();
    }

    let mut ranking_rows: BTreeMap<AuthorId, Vec<(u32, PaperId)>> = BTreeMap::new();
    let mut seen_pairs: BTreeSet<(AuthorId, PaperId)> = BTreeSet::new();
    for (row, rec) in read_rows::<RankingRow>(&paths.rankings)? {
        let author = authors.get(&rec.author_id).ok_or_else(|| {
            Error::invalid(format!(
                "{}: row {row}: ranking references unknown author_id {}",
                paths.rankings.display(),
                rec.author_id
            ))
        })?;
        if !submissions.contains_key(&rec.paper_id) {
            return Err(Error::invalid(format!(
                "{}: row {row}: ranking references unknown paper_id {}",
                paths.rankings.display(),
                rec.paper_id
            )));
        }
        if !author.submission_ids.contains(&rec.paper_id) {
            return Err(Error::invalid(format!(
                "{}: row {row}: author {} ranks paper {} they are not an author of",
                paths.rankings.display(),
                rec.author_id,
                rec.paper_id
            )));
        }
        if rec.block_index == 0 {
            return Err(Error::invalid(format!(
                "{}: row {row}: block_index is 1-based and must be positive",
                paths.rankings.display()
            )));
        }
        if !seen_pairs.insert((rec.author_id.clone(), rec.paper_id.clone())) {
            return Err(Error::invalid(format!(
                "{}: row {row}: duplicate ranking entry for author {} and paper {}",
                paths.rankings.display(),
                rec.author_id,
                rec.paper_id
            )));
        }
        ranking_rows
            .entry(rec.author_id)
            .or_default()
            .push((rec.block_index, rec.paper_id));
    }

    let mut rankings: BTreeMap<AuthorId, Ranking> = BTreeMap::new();
    for (author_id, mut rows) in ranking_rows {
        if rows.len() < 2 {
            return Err(Error::invalid(format!(
                "{}: author {} ranks only {} paper(s); at least two are required",
                paths.rankings.display(),
                author_id,
                rows.len()
            )));
        }
        // Group by block index; indices need not be contiguous, only ordered.
        rows.sort();
        let mut blocks: Vec<Vec<PaperId>> = Vec::new();
        let mut current_index = 0;
        for (block_index, paper_id) in rows {
            if blocks.is_empty() || block_index != current_index {
                blocks.push(Vec::new());
                current_index = block_index;
            }
            blocks.last_mut().expect("just pushed").push(paper_id);
        }
        rankings.insert(author_id.clone(), Ranking { author_id, blocks });
    }

    Ok(Dataset { scale, submissions, authors, rankings })
}

/// Writes a dataset back out as the four CSV schemas.
pub fn save_dataset(dataset: &Dataset, paths: &DataPaths) -> Result<()> {
    let mut w = csv_writer(&paths.submissions)?;
    for sub in dataset.submissions.values() {
        w.serialize(SubmissionRow {
            paper_id: sub.id.clone(),
            topic: sub.topic.clone(),
        })
        .map_err(|e| locate_csv_error(&paths.submissions, e))?;
    }
    finish(w, &paths.submissions)?;

    let mut w = csv_writer(&paths.reviews)?;
    for sub in dataset.submissions.values() {
        for &score in &sub.review_scores {
            w.serialize(ReviewRow { paper_id: sub.id.clone(), score })
                .map_err(|e| locate_csv_error(&paths.reviews, e))?;
        }
    }
    finish(w, &paths.reviews)?;

    let mut w = csv_writer(&paths.authorships)?;
    for author in dataset.authors.values() {
        for paper in &author.submission_ids {
            w.serialize(AuthorshipRow {
                paper_id: paper.clone(),
                author_id: author.id.clone(),
            })
            .map_err(|e| locate_csv_error(&paths.authorships, e))?;
        }
    }
    finish(w, &paths.authorships)?;

    let mut w = csv_writer(&paths.rankings)?;
    for ranking in dataset.rankings.values() {
        for (block, papers) in ranking.blocks.iter().enumerate() {
            for paper in papers {
                w.serialize(RankingRow {
                    author_id: ranking.author_id.clone(),
                    paper_id: paper.clone(),
                    block_index: (block + 1) as u32,
                })
                .map_err(|e| locate_csv_error(&paths.rankings, e))?;
            }
        }
    }
    finish(w, &paths.rankings)?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| locate_csv_error(path, e))
}

fn finish(w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?
        .sync_all()
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}
