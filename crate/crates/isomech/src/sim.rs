//! Synthetic review worlds with known latent quality, author reporting
//! policies (truthful and strategic), and threshold acceptance.
//!
//! Everything is a pure function of the configured seed: independent random
//! streams are derived per purpose and per index (see [`crate::seed`]), so
//! results never depend on evaluation order or thread count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};
use serde::{Deserialize, Serialize};

use crate::data::{raw_score, Author, AuthorId, Dataset, PaperId, Ranking, Submission};
use crate::error::{Error, Result};
use crate::isotonic::{pava_into, Direction, PavaScratch};
use crate::seed::{child_seed, Stream};

/// Distribution of submission counts per author.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmissionDist {
    /// Every author has exactly this many submissions.
    Fixed(u32),
    /// Uniform over `lo..=hi`.
    Uniform { lo: u32, hi: u32 },
    /// Zipf over `1..=cap` with the given exponent: heavy-tailed counts
    /// with a hard maximum.
    Zipf { exponent: f64, cap: u32 },
}

/// Mean and standard deviation of the latent-quality prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityPrior {
    pub mean: f64,
    pub stddev: f64,
}

/// Full description of a synthetic review world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub n_authors: usize,
    pub submissions_per_author: SubmissionDist,
    /// Probability that a paper gains (another) extra coauthor; extras are
    /// geometric with this continuation probability.
    pub coauthor_rate: f64,
    pub n_topics: usize,
    pub quality_prior: QualityPrior,
    pub reviewer_bias_stddev: f64,
    pub review_noise_stddev: f64,
    /// Inclusive range for the number of reviews a paper receives.
    pub reviews_per_paper: (u32, u32),
    /// Inclusive review-score bounds.
    pub scale: (f64, f64),
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            n_authors: 2200,
            submissions_per_author: SubmissionDist::Zipf { exponent: 1.5, cap: 17 },
            coauthor_rate: 0.35,
            n_topics: 6,
            quality_prior: QualityPrior { mean: 5.5, stddev: 1.2 },
            reviewer_bias_stddev: 0.8,
            review_noise_stddev: 1.1,
            reviews_per_paper: (3, 5),
            scale: (1.0, 10.0),
            seed: 17,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_authors == 0 {
            return Err(Error::invalid("n_authors must be at least 1"));
        }
        match self.submissions_per_author {
            SubmissionDist::Fixed(k) if k < 1 => {
                return Err(Error::invalid("fixed submission count must be at least 1"));
            }
            SubmissionDist::Uniform { lo, hi } if lo < 1 || lo > hi => {
                return Err(Error::invalid(format!(
                    "uniform submission range [{lo}, {hi}] must satisfy 1 <= lo <= hi"
                )));
            }
            SubmissionDist::Zipf { exponent, cap } if !(exponent > 0.0) || cap < 1 => {
                return Err(Error::invalid(
                    "zipf submissions need a positive exponent and cap >= 1",
                ));
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.coauthor_rate) {
            return Err(Error::invalid(format!(
                "coauthor_rate must be in [0, 1], got {}",
                self.coauthor_rate
            )));
        }
        if self.n_topics == 0 {
            return Err(Error::invalid("n_topics must be at least 1"));
        }
        if !(self.quality_prior.stddev >= 0.0) || !self.quality_prior.mean.is_finite() {
            return Err(Error::invalid("quality prior needs a finite mean and stddev >= 0"));
        }
        if !(self.reviewer_bias_stddev >= 0.0) || !(self.review_noise_stddev >= 0.0) {
            return Err(Error::invalid("review stddevs must be >= 0"));
        }
        let (lo, hi) = self.reviews_per_paper;
        if lo < 1 || lo > hi || hi > 10 {
            return Err(Error::invalid(format!(
                "reviews_per_paper range [{lo}, {hi}] must satisfy 1 <= lo <= hi <= 10"
            )));
        }
        if !(self.scale.0 < self.scale.1) {
            return Err(Error::invalid(format!(
                "scale minimum {} must be below scale maximum {}",
                self.scale.0, self.scale.1
            )));
        }
        Ok(())
    }
}

/// How an author converts private knowledge into a reported ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportPolicy {
    /// Strict ranking by descending latent quality, ties by paper id.
    Truthful,
    /// Exhaustive (or hill-climbing beyond 8 papers) search for the
    /// permutation maximizing own papers whose calibrated score exceeds the
    /// threshold, given knowledge of raw scores.
    ThresholdGaming { threshold: f64 },
    /// Truthful order with each adjacent pair independently swapped with
    /// probability `p` (one left-to-right pass).
    NoisySwap { p: f64 },
    /// Truthful order with the listed papers promoted to a tied first block.
    FavorSubset { papers: Vec<PaperId> },
}

impl fmt::Display for ReportPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportPolicy::Truthful => write!(f, "truthful"),
            ReportPolicy::ThresholdGaming { threshold } => {
                write!(f, "threshold_gaming({threshold})")
            }
            ReportPolicy::NoisySwap { p } => write!(f, "noisy_swap({p})"),
            ReportPolicy::FavorSubset { papers } => {
                write!(f, "favor_subset({})", papers.join("+"))
            }
        }
    }
}

/// Assignment of reporting policies to authors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolicyAssignment {
    pub default: ReportPolicy,
    #[serde(default)]
    pub overrides: BTreeMap<AuthorId, ReportPolicy>,
}

impl Default for ReportPolicy {
    fn default() -> Self {
        ReportPolicy::Truthful
    }
}

impl PolicyAssignment {
    pub fn uniform(policy: ReportPolicy) -> Self {
        PolicyAssignment { default: policy, overrides: BTreeMap::new() }
    }

    fn for_author<'a>(&'a self, author: &AuthorId) -> &'a ReportPolicy {
        self.overrides.get(author).unwrap_or(&self.default)
    }
}

/// A generated world: dataset, ground-truth qualities, and (after report
/// collection) the policy applied per ranking author.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub dataset: Dataset,
    pub theta: BTreeMap<PaperId, f64>,
    pub policy_log: BTreeMap<AuthorId, String>,
    /// Seed the world was generated from; report policies derive their
    /// randomness from it.
    pub seed: u64,
}

fn rng_for(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(seed, stream, index))
}

/// Gaussian draw that tolerates a zero standard deviation.
fn gauss(rng: &mut ChaCha8Rng, mean: f64, stddev: f64) -> f64 {
    if stddev == 0.0 {
        return mean;
    }
    Normal::new(mean, stddev).expect("validated stddev").sample(rng)
}

fn sample_count(rng: &mut ChaCha8Rng, dist: SubmissionDist) -> u32 {
    match dist {
        SubmissionDist::Fixed(k) => k,
        SubmissionDist::Uniform { lo, hi } => rng.random_range(lo..=hi),
        SubmissionDist::Zipf { exponent, cap } => {
            let z = Zipf::new(f64::from(cap), exponent).expect("validated zipf");
            z.sample(rng).round() as u32
        }
    }
}

fn paper_name(i: usize) -> PaperId {
    format!("P{i:06}")
}

fn author_name(i: usize) -> AuthorId {
    format!("A{i:06}")
}

/// Generates a synthetic review world from the configuration.
///
/// Latent qualities are i.i.d. from the quality prior; each review is
/// `clamp(round_half_even(theta + bias + noise), scale)` with a fresh bias
/// and noise draw per review; the authorship graph gives every author their
/// sampled primary submissions and then adds geometric coauthor extras.
pub fn gen_world(config: &WorldConfig) -> Result<SyntheticWorld> {
    config.validate()?;
    let seed = config.seed;

    // Primary submission counts.
    let mut rng = rng_for(seed, Stream::Counts, 0);
    let counts: Vec<u32> =
        (0..config.n_authors).map(|_| sample_count(&mut rng, config.submissions_per_author)).collect();

    // One paper list per author, ids assigned in author order.
    let n_papers: usize = counts.iter().map(|&c| c as usize).sum();
    let mut paper_authors: Vec<Vec<usize>> = Vec::with_capacity(n_papers);
    let mut author_papers: Vec<Vec<usize>> = vec![Vec::new(); config.n_authors];
    for (a, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let p = paper_authors.len();
            paper_authors.push(vec![a]);
            author_papers[a].push(p);
        }
    }

    // Geometric coauthor extras; candidates are drawn uniformly and must be
    // new to the paper. Under a capped Zipf the candidate must also stay
    // under the cap so ranking lengths keep the configured maximum.
    let cap_limit = match config.submissions_per_author {
        SubmissionDist::Zipf { cap, .. } => Some(cap as usize),
        _ => None,
    };
    let mut rng = rng_for(seed, Stream::Coauthors, 0);
    if config.n_authors > 1 && config.coauthor_rate > 0.0 {
        for p in 0..n_papers {
            let mut extras = 0;
            while extras < 5 && rng.random::<f64>() < config.coauthor_rate {
                for _attempt in 0..20 {
                    let cand = rng.random_range(0..config.n_authors);
                    let full = cap_limit.is_some_and(|cap| author_papers[cand].len() >= cap);
                    if !paper_authors[p].contains(&cand) && !full {
                        paper_authors[p].push(cand);
                        author_papers[cand].push(p);
                        break;
                    }
                }
                extras += 1;
            }
        }
    }

    // Latent qualities and topics.
    let mut rng = rng_for(seed, Stream::Theta, 0);
    let thetas: Vec<f64> = (0..n_papers)
        .map(|_| gauss(&mut rng, config.quality_prior.mean, config.quality_prior.stddev))
        .collect();
    let mut rng = rng_for(seed, Stream::Topics, 0);
    let topics: Vec<usize> = (0..n_papers).map(|_| rng.random_range(0..config.n_topics)).collect();

    // Reviews.
    let mut rng = rng_for(seed, Stream::Reviews, 0);
    let (lo, hi) = config.reviews_per_paper;
    let mut submissions = BTreeMap::new();
    let mut theta = BTreeMap::new();
    for p in 0..n_papers {
        let id = paper_name(p);
        let n_reviews = rng.random_range(lo..=hi);
        let scores: Vec<f64> = (0..n_reviews)
            .map(|_| {
                let bias = gauss(&mut rng, 0.0, config.reviewer_bias_stddev);
                let noise = gauss(&mut rng, 0.0, config.review_noise_stddev);
                (thetas[p] + bias + noise).round_ties_even().clamp(config.scale.0, config.scale.1)
            })
            .collect();
        submissions.insert(
            id.clone(),
            Submission {
                id: id.clone(),
                topic: Some(format!("t{}", topics[p] + 1)),
                review_scores: scores,
            },
        );
        theta.insert(id, thetas[p]);
    }

    let authors: BTreeMap<AuthorId, Author> = author_papers
        .iter()
        .enumerate()
        .map(|(a, papers)| {
            let id = author_name(a);
            let mut submission_ids: Vec<PaperId> =
                papers.iter().map(|&p| paper_name(p)).collect();
            submission_ids.sort();
            (id.clone(), Author { id, submission_ids })
        })
        .collect();

    Ok(SyntheticWorld {
        dataset: Dataset {
            scale: config.scale,
            submissions,
            authors,
            rankings: BTreeMap::new(),
        },
        theta,
        policy_log: BTreeMap::new(),
        seed,
    })
}

/// Truthful strict order of the author's papers: descending latent quality,
/// ties by paper id.
fn truthful_order(author: &Author, world: &SyntheticWorld) -> Vec<PaperId> {
    let mut papers = author.submission_ids.clone();
    papers.sort_by(|a, b| {
        world.theta[b]
            .partial_cmp(&world.theta[a])
            .expect("finite theta")
            .then_with(|| a.cmp(b))
    });
    papers
}

fn strict_ranking(author_id: &AuthorId, order: Vec<PaperId>) -> Ranking {
    Ranking {
        author_id: author_id.clone(),
        blocks: order.into_iter().map(|p| vec![p]).collect(),
    }
}

/// Counts papers whose calibrated score strictly exceeds the threshold when
/// `raw` is projected under the order given by `perm`.
fn gaming_count(
    raw: &[f64],
    perm: &[usize],
    threshold: f64,
    buf: &mut Vec<f64>,
    fitted: &mut Vec<f64>,
    weights: &[f64],
    scratch: &mut PavaScratch,
) -> usize {
    buf.clear();
    buf.extend(perm.iter().map(|&i| raw[i]));
    fitted.resize(buf.len(), 0.0);
    pava_into(buf, weights, Direction::NonIncreasing, scratch, fitted);
    fitted.iter().filter(|&&f| f > threshold).count()
}

fn threshold_gaming_order(
    author: &Author,
    world: &SyntheticWorld,
    threshold: f64,
) -> Vec<PaperId> {
    let papers: Vec<PaperId> = author.submission_ids.clone();
    let raw: Vec<f64> =
        papers.iter().map(|p| raw_score(&world.dataset.submissions[p])).collect();
    let n = papers.len();
    let weights = vec![1.0; n];
    let mut scratch = PavaScratch::new();
    let mut buf = Vec::with_capacity(n);
    let mut fitted = Vec::with_capacity(n);
    let count =
        |perm: &[usize], buf: &mut Vec<f64>, fitted: &mut Vec<f64>, scratch: &mut PavaScratch| {
            gaming_count(&raw, perm, threshold, buf, fitted, &weights, scratch)
        };

    // The truthful permutation is evaluated first so that ties favour it.
    let truthful = truthful_order(author, world);
    let truthful_perm: Vec<usize> = truthful
        .iter()
        .map(|p| papers.iter().position(|q| q == p).expect("own paper"))
        .collect();
    let mut best_perm = truthful_perm.clone();
    let mut best_count = count(&truthful_perm, &mut buf, &mut fitted, &mut scratch);

    if n <= 8 {
        // Exhaustive search in lexicographic order of index sequences.
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            if perm != truthful_perm {
                let c = count(&perm, &mut buf, &mut fitted, &mut scratch);
                if c > best_count {
                    best_count = c;
                    best_perm = perm.clone();
                }
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
    } else {
        // Greedy pairwise-swap hill climbing: take the best improving swap,
        // repeat until none improves.
        let mut perm = truthful_perm;
        for _pass in 0..n * n {
            let current = count(&perm, &mut buf, &mut fitted, &mut scratch);
            let mut best_swap: Option<(usize, usize, usize)> = None;
            for i in 0..n - 1 {
                for j in i + 1..n {
                    perm.swap(i, j);
                    let c = count(&perm, &mut buf, &mut fitted, &mut scratch);
                    perm.swap(i, j);
                    if c > current && best_swap.map_or(true, |(_, _, bc)| c > bc) {
                        best_swap = Some((i, j, c));
                    }
                }
            }
            match best_swap {
                Some((i, j, _)) => perm.swap(i, j),
                None => break,
            }
        }
        best_perm = perm;
    }
    best_perm.into_iter().map(|i| papers[i].clone()).collect()
}

/// Advances `perm` to the next lexicographic permutation; false at the last.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Produces one author's reported ranking under a policy.
///
/// Requires the author to have at least two submissions; single-submission
/// authors cannot participate.
pub fn author_report(
    author: &Author,
    world: &SyntheticWorld,
    policy: &ReportPolicy,
) -> Result<Ranking> {
    if author.submission_ids.len() < 2 {
        return Err(Error::invalid(format!(
            "author {} has fewer than two submissions and cannot rank",
            author.id
        )));
    }
    match policy {
        ReportPolicy::Truthful => {
            Ok(strict_ranking(&author.id, truthful_order(author, world)))
        }
        ReportPolicy::ThresholdGaming { threshold } => {
            let (lo, hi) = world.dataset.scale;
            if !(*threshold >= lo && *threshold <= hi) {
                return Err(Error::invalid(format!(
                    "gaming threshold {threshold} outside scale [{lo}, {hi}]"
                )));
            }
            Ok(strict_ranking(
                &author.id,
                threshold_gaming_order(author, world, *threshold),
            ))
        }
        ReportPolicy::NoisySwap { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::invalid(format!("swap probability {p} outside [0, 1]")));
            }
            let index = world
                .dataset
                .authors
                .range(..author.id.clone())
                .count() as u64;
            let mut rng = rng_for(world.seed, Stream::Policy, index);
            let mut order = truthful_order(author, world);
            for i in 0..order.len() - 1 {
                if rng.random::<f64>() < *p {
                    order.swap(i, i + 1);
                }
            }
            Ok(strict_ranking(&author.id, order))
        }
        ReportPolicy::FavorSubset { papers } => {
            for p in papers {
                if !author.submission_ids.contains(p) {
                    return Err(Error::invalid(format!(
                        "favored paper {p} is not authored by {}",
                        author.id
                    )));
                }
            }
            let favored: BTreeSet<&PaperId> = papers.iter().collect();
            let mut blocks: Vec<Vec<PaperId>> = Vec::new();
            if !favored.is_empty() {
                blocks.push(favored.iter().map(|p| (*p).clone()).collect());
            }
            for paper in truthful_order(author, world) {
                if !favored.contains(&paper) {
                    blocks.push(vec![paper]);
                }
            }
            Ok(Ranking { author_id: author.id.clone(), blocks })
        }
    }
}

/// Collects reports from every eligible author under the assignment,
/// filling the world's rankings and policy log.
pub fn collect_reports(world: &mut SyntheticWorld, assignment: &PolicyAssignment) -> Result<()> {
    let authors: Vec<Author> = world.dataset.authors.values().cloned().collect();
    let mut rankings = BTreeMap::new();
    let mut log = BTreeMap::new();
    for author in &authors {
        if author.submission_ids.len() < 2 {
            continue;
        }
        let policy = assignment.for_author(&author.id);
        let ranking = author_report(author, world, policy)?;
        rankings.insert(author.id.clone(), ranking);
        log.insert(author.id.clone(), policy.to_string());
    }
    world.dataset.rankings = rankings;
    world.policy_log = log;
    Ok(())
}

/// Papers whose score strictly exceeds the threshold.
pub fn acceptance(scores: &BTreeMap<PaperId, f64>, threshold: f64) -> BTreeSet<PaperId> {
    scores
        .iter()
        .filter(|(_, &s)| s > threshold)
        .map(|(p, _)| p.clone())
        .collect()
}
