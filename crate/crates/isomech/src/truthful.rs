//! Brute-force verification of strategyproofness on small instances.
//!
//! For a single author with known latent qualities θ, every strict ranking
//! of the papers is enumerated and scored by Monte Carlo expected utility
//! of the calibrated scores. Common random numbers are used across reports:
//! every report sees exactly the same noise draws attached to the same
//! paper coordinates, so report comparisons are paired and reproduce
//! bit-exactly for a fixed seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isotonic::{pava_into, Direction, PavaScratch};
use crate::seed::{child_seed, Stream};

/// Hard cap on enumerable instance size (7! = 5040 reports).
pub const REPORT_MAX_LEN: usize = 7;

/// Author utility over their own calibrated scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilitySpec {
    /// `u(x) = Σ |x_i|^p` with `p ≥ 1`; `p = 1` is the linear utility
    /// `Σ x_i`, under which all strict reports tie exactly (projection
    /// preserves sums).
    ConvexPower(f64),
    /// Number of own papers whose calibrated score strictly exceeds the
    /// threshold; the canonical non-convex utility that breaks
    /// truthfulness.
    AcceptCount(f64),
}

impl UtilitySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            UtilitySpec::ConvexPower(p) if !(p.is_finite() && *p >= 1.0) => Err(Error::invalid(
                format!("convex power exponent must be finite and >= 1, got {p}"),
            )),
            UtilitySpec::AcceptCount(t) if !t.is_finite() => {
                Err(Error::invalid("acceptance threshold must be finite"))
            }
            _ => Ok(()),
        }
    }

    fn eval(&self, fitted: &[f64]) -> f64 {
        match *self {
            UtilitySpec::ConvexPower(p) if p == 1.0 => fitted.iter().sum(),
            UtilitySpec::ConvexPower(p) if p == 2.0 => fitted.iter().map(|x| x * x).sum(),
            UtilitySpec::ConvexPower(p) if p == 1.5 => fitted
                .iter()
                .map(|x| {
                    let a = x.abs();
                    a * a.sqrt()
                })
                .sum(),
            UtilitySpec::ConvexPower(p) if p == 3.0 => fitted
                .iter()
                .map(|x| {
                    let a = x.abs();
                    a * a * a
                })
                .sum(),
            UtilitySpec::ConvexPower(p) => fitted.iter().map(|x| x.abs().powf(p)).sum(),
            UtilitySpec::AcceptCount(t) => fitted.iter().filter(|&&x| x > t).count() as f64,
        }
    }
}

/// All strict rankings of `n` papers as index permutations
/// (best-to-worst), in lexicographic order.
pub fn enumerate_reports(n: usize) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Err(Error::invalid("cannot enumerate reports for zero papers"));
    }
    if n > REPORT_MAX_LEN {
        return Err(Error::invalid(format!(
            "report enumeration is capped at {REPORT_MAX_LEN} papers, got {n}"
        )));
    }
    let mut reports = vec![(0..n).collect::<Vec<usize>>()];
    let mut perm: Vec<usize> = (0..n).collect();
    while next_permutation(&mut perm) {
        reports.push(perm.clone());
    }
    Ok(reports)
}

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

/// The truthful report: indices by descending θ, ties by index.
pub fn truthful_report(theta: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&a, &b| theta[b].partial_cmp(&theta[a]).expect("finite theta").then(a.cmp(&b)));
    order
}

fn check_instance(theta: &[f64], noise_stddev: f64, n_draws: usize) -> Result<()> {
    if theta.is_empty() {
        return Err(Error::invalid("theta must be non-empty"));
    }
    if theta.len() > REPORT_MAX_LEN {
        return Err(Error::invalid(format!(
            "truthfulness verification is capped at {REPORT_MAX_LEN} papers, got {}",
            theta.len()
        )));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("theta values must be finite"));
    }
    if !(noise_stddev >= 0.0) || !noise_stddev.is_finite() {
        return Err(Error::invalid("noise stddev must be finite and >= 0"));
    }
    if n_draws == 0 {
        return Err(Error::invalid("need at least one draw"));
    }
    Ok(())
}

/// Score realizations, one row per draw: `theta + noise`, noise attached
/// to paper coordinates so every report sees identical randomness.
fn draw_matrix(theta: &[f64], noise_stddev: f64, n_draws: usize, seed: u64) -> Vec<Vec<f64>> {
    if noise_stddev == 0.0 {
        return vec![theta.to_vec()];
    }
    let normal = Normal::new(0.0, noise_stddev).expect("validated stddev");
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, Stream::Utility, 0));
    (0..n_draws)
        .map(|_| theta.iter().map(|&t| t + normal.sample(&mut rng)).collect())
        .collect()
}

/// Mean utility of one report over the draw rows; also returns per-draw
/// utilities when `per_draw` is given.
fn report_utility(
    rows: &[Vec<f64>],
    report: &[usize],
    utility: &UtilitySpec,
    per_draw: Option<&mut Vec<f64>>,
    buf: &mut Vec<f64>,
    fitted: &mut Vec<f64>,
    weights: &[f64],
    scratch: &mut PavaScratch,
) -> f64 {
    let mut sum = 0.0;
    let mut out = per_draw;
    if let Some(v) = out.as_deref_mut() {
        v.clear();
    }
    for row in rows {
        buf.clear();
        buf.extend(report.iter().map(|&i| row[i]));
        fitted.resize(buf.len(), 0.0);
        pava_into(buf, weights, Direction::NonIncreasing, scratch, fitted);
        let u = utility.eval(fitted);
        sum += u;
        if let Some(v) = out.as_deref_mut() {
            v.push(u);
        }
    }
    sum / rows.len() as f64
}

/// Monte Carlo expected utility of a single report.
///
/// Zero noise collapses to one exact evaluation at θ. The same seed gives
/// the same draw set for every report of the same dimension, so values are
/// directly comparable across reports.
pub fn expected_utility(
    theta: &[f64],
    report: &[usize],
    utility: &UtilitySpec,
    noise_stddev: f64,
    n_draws: usize,
    seed: u64,
) -> Result<f64> {
    check_instance(theta, noise_stddev, n_draws)?;
    utility.validate()?;
    let n = theta.len();
    let mut seen = vec![false; n];
    if report.len() != n || report.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
    {
        return Err(Error::invalid("report must be a permutation of the paper indices"));
    }
    let rows = draw_matrix(theta, noise_stddev, n_draws, seed);
    let weights = vec![1.0; n];
    let mut scratch = PavaScratch::new();
    let (mut buf, mut fitted) = (Vec::with_capacity(n), Vec::with_capacity(n));
    Ok(report_utility(&rows, report, utility, None, &mut buf, &mut fitted, &weights, &mut scratch))
}

/// Outcome of exhaustive truthfulness verification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthfulnessVerdict {
    pub truthful_optimal: bool,
    pub truthful_report: Vec<usize>,
    pub best_report: Vec<usize>,
    pub truthful_utility: f64,
    pub best_utility: f64,
    /// Expected gain of the best deviation over the truthful report
    /// (`best − truthful`); at most the tolerance when truthful reporting
    /// is optimal.
    pub margin: f64,
    /// Comparison tolerance: 1e-9, widened to six paired standard errors
    /// of the (best − truthful) utility difference under Monte Carlo noise.
    pub tolerance: f64,
}

/// Enumerates every strict report and checks that the truthful one attains
/// the maximum expected utility, up to the paired Monte Carlo tolerance.
pub fn verify_truthful(
    theta: &[f64],
    utility: &UtilitySpec,
    noise_stddev: f64,
    n_draws: usize,
    seed: u64,
) -> Result<TruthfulnessVerdict> {
    check_instance(theta, noise_stddev, n_draws)?;
    utility.validate()?;
    let n = theta.len();
    let rows = draw_matrix(theta, noise_stddev, n_draws, seed);
    let truthful = truthful_report(theta);
    let reports = enumerate_reports(n)?;

    let weights = vec![1.0; n];
    let mut scratch = PavaScratch::new();
    let (mut buf, mut fitted) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut eval = |report: &[usize], per_draw: Option<&mut Vec<f64>>| {
        report_utility(&rows, report, utility, per_draw, &mut buf, &mut fitted, &weights, &mut scratch)
    };

    let truthful_utility = eval(&truthful, None);
    let mut best_report = truthful.clone();
    let mut best_utility = truthful_utility;
    for report in &reports {
        let value = eval(report, None);
        if value > best_utility {
            best_utility = value;
            best_report = report.clone();
        }
    }

    // Paired second pass over the two candidates for the tolerance.
    let tolerance = if best_report == truthful || rows.len() < 2 {
        1e-9
    } else {
        let mut u_truth = Vec::with_capacity(rows.len());
        let mut u_best = Vec::with_capacity(rows.len());
        eval(&truthful, Some(&mut u_truth));
        eval(&best_report, Some(&mut u_best));
        let k = rows.len() as f64;
        let diffs: Vec<f64> = u_best.iter().zip(&u_truth).map(|(b, t)| b - t).collect();
        let mean = diffs.iter().sum::<f64>() / k;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (k - 1.0);
        let paired_se = (var / k).sqrt();
        f64::max(1e-9, 6.0 * paired_se)
    };

    let margin = best_utility - truthful_utility;
    Ok(TruthfulnessVerdict {
        truthful_optimal: margin <= tolerance,
        truthful_report: truthful,
        best_report,
        truthful_utility,
        best_utility,
        margin,
        tolerance,
    })
}
