//! Exact weighted least-squares projection onto order constraints.
//!
//! Total orders are handled by pool-adjacent-violators (PAVA). Coarse block
//! orders come in two flavours: `Equality` forces every value in a block to
//! a common level (reducing to PAVA on weighted block means), `Dominance`
//! only requires every value in a block to dominate every value in the next
//! block. The dominance problem is solved exactly by rewriting it in terms
//! of one cut level per adjacent block pair (see `project_block_order`).

use crate::error::{Error, Result};

/// Monotonicity direction for [`pava`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    NonDecreasing,
    NonIncreasing,
}

/// Interpretation of a block in a coarse ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMode {
    /// All values inside a block are forced equal; block levels are ordered.
    Equality,
    /// Every value in block i must be >= every value in block i+1; no
    /// constraint inside a block.
    Dominance,
}

/// An ordered coarse ranking over indices of a score vector.
///
/// `blocks[0]` is the claimed-best block. Indices absent from every block
/// are unconstrained and pass through projection unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderSpec {
    pub blocks: Vec<Vec<usize>>,
    pub tie_mode: TieMode,
}

impl OrderSpec {
    pub fn new(blocks: Vec<Vec<usize>>, tie_mode: TieMode) -> Self {
        OrderSpec { blocks, tie_mode }
    }

    /// Checks structural validity against a vector of length `n`:
    /// non-empty, disjoint blocks with in-range indices.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (b, block) in self.blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::invalid(format!("order block {} is empty", b + 1)));
            }
            for &i in block {
                if i >= n {
                    return Err(Error::invalid(format!(
                        "order block {} references index {i} beyond vector length {n}",
                        b + 1
                    )));
                }
                if seen[i] {
                    return Err(Error::invalid(format!(
                        "index {i} appears in more than one order block"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

/// Result of a projection: fitted vector and weighted squared error.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub fitted: Vec<f64>,
    pub objective: f64,
}

/// Reusable stack storage for [`pava_into`], so hot loops can project
/// millions of small vectors without allocating.
#[derive(Debug, Default)]
pub struct PavaScratch {
    sum: Vec<f64>,
    weight: Vec<f64>,
    len: Vec<usize>,
}

impl PavaScratch {
    pub fn new() -> Self {
        Self::default()
    }
}

fn check_pava_inputs(values: &[f64], weights: &[f64]) -> Result<()> {
    if values.len() != weights.len() {
        return Err(Error::invalid(format!(
            "values ({}) and weights ({}) differ in length",
            values.len(),
            weights.len()
        )));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::invalid(format!(
                "weight at index {i} must be a positive finite number, got {w}"
            )));
        }
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "value at index {i} is not finite"
        )));
    }
    Ok(())
}

/// Allocation-free PAVA core: writes the projection of `values` into
/// `fitted` and returns the weighted squared error.
///
/// Lengths must agree and weights must be positive; this is checked by the
/// safe wrapper [`pava`] and only debug-asserted here.
pub fn pava_into(
    values: &[f64],
    weights: &[f64],
    direction: Direction,
    scratch: &mut PavaScratch,
    fitted: &mut [f64],
) -> f64 {
    debug_assert_eq!(values.len(), weights.len());
    debug_assert_eq!(values.len(), fitted.len());
    let n = values.len();
    scratch.sum.clear();
    scratch.weight.clear();
    scratch.len.clear();

    for i in 0..n {
        scratch.sum.push(values[i] * weights[i]);
        scratch.weight.push(weights[i]);
        scratch.len.push(1);
        // Merge while the two top blocks violate the required order. The
        // comparison is on exact partial means; no epsilon.
        while scratch.sum.len() >= 2 {
            let top = scratch.sum.len() - 1;
            let mean_prev = scratch.sum[top - 1] / scratch.weight[top - 1];
            let mean_top = scratch.sum[top] / scratch.weight[top];
            let violates = match direction {
                Direction::NonDecreasing => mean_prev > mean_top,
                Direction::NonIncreasing => mean_prev < mean_top,
            };
            if !violates {
                break;
            }
            scratch.sum[top - 1] += scratch.sum[top];
            scratch.weight[top - 1] += scratch.weight[top];
            scratch.len[top - 1] += scratch.len[top];
            scratch.sum.pop();
            scratch.weight.pop();
            scratch.len.pop();
        }
    }

    let mut pos = 0;
    for b in 0..scratch.sum.len() {
        let level = scratch.sum[b] / scratch.weight[b];
        for _ in 0..scratch.len[b] {
            fitted[pos] = level;
            pos += 1;
        }
    }
    debug_assert_eq!(pos, n);

    let mut objective = 0.0;
    for i in 0..n {
        let d = fitted[i] - values[i];
        objective += weights[i] * d * d;
    }
    objective
}

/// Weighted least-squares isotonic regression under a total order.
///
/// Single pass with back-merging; linear time in the input length.
pub fn pava(values: &[f64], weights: &[f64], direction: Direction) -> Result<ProjectionResult> {
    check_pava_inputs(values, weights)?;
    let mut fitted = vec![0.0; values.len()];
    let mut scratch = PavaScratch::new();
    let objective = pava_into(values, weights, direction, &mut scratch, &mut fitted);
    Ok(ProjectionResult { fitted, objective })
}

/// Projects raw scores, indexed in the author's claimed best-first order,
/// onto the non-increasing cone.
pub fn project_total_order(raw: &[f64], weights: &[f64]) -> Result<ProjectionResult> {
    pava(raw, weights, Direction::NonIncreasing)
}

/// Projects `raw` onto the constraints of a coarse block ranking.
///
/// `Equality` mode pools each block to its weighted mean and runs PAVA over
/// the block levels. `Dominance` mode introduces one cut level c_b between
/// consecutive blocks: feasibility is equivalent to every value in block b
/// lying in [c_b, c_{b-1}], and for fixed cuts the optimal fitted values are
/// clamps of the raw values to that interval. The resulting objective is a
/// separable convex function of the cuts under the chain constraint
/// c_1 >= c_2 >= ..., which pool-adjacent-violators solves exactly (least
/// minimizers; the fitted vector is the unique projection regardless of
/// which optimal cut vector is found).
pub fn project_block_order(
    raw: &[f64],
    order: &OrderSpec,
    weights: &[f64],
) -> Result<ProjectionResult> {
    check_pava_inputs(raw, weights)?;
    order.validate(raw.len())?;

    let mut fitted = raw.to_vec();
    if order.blocks.len() >= 2 {
        match order.tie_mode {
            TieMode::Equality => equality_fit(raw, order, weights, &mut fitted)?,
            TieMode::Dominance => dominance_fit(raw, order, weights, &mut fitted),
        }
    } else if let Some(block) = order.blocks.first() {
        if order.tie_mode == TieMode::Equality {
            // A lone block still pools under Equality semantics.
            let level = block_mean(raw, weights, block);
            for &i in block {
                fitted[i] = level;
            }
        }
    }

    let mut objective = 0.0;
    for i in 0..raw.len() {
        let d = fitted[i] - raw[i];
        objective += weights[i] * d * d;
    }
    Ok(ProjectionResult { fitted, objective })
}

fn block_mean(raw: &[f64], weights: &[f64], block: &[usize]) -> f64 {
    let mut sum = 0.0;
    let mut w = 0.0;
    for &i in block {
        sum += raw[i] * weights[i];
        w += weights[i];
    }
    sum / w
}

fn equality_fit(
    raw: &[f64],
    order: &OrderSpec,
    weights: &[f64],
    fitted: &mut [f64],
) -> Result<()> {
    let means: Vec<f64> = order.blocks.iter().map(|b| block_mean(raw, weights, b)).collect();
    let block_weights: Vec<f64> = order
        .blocks
        .iter()
        .map(|b| b.iter().map(|&i| weights[i]).sum())
        .collect();
    let levels = pava(&means, &block_weights, Direction::NonIncreasing)?;
    for (block, &level) in order.blocks.iter().zip(levels.fitted.iter()) {
        for &i in block {
            fitted[i] = level;
        }
    }
    Ok(())
}

/// One stacked run of cut indices during the dominance solve.
struct CutRun {
    /// First and last cut index (inclusive) pooled into this run.
    first: usize,
    last: usize,
    value: f64,
}

fn dominance_fit(raw: &[f64], order: &OrderSpec, weights: &[f64], fitted: &mut [f64]) {
    let m = order.blocks.len();
    // least_cut_minimizer needs, for pooled cuts a..=b, the lower-bounded
    // elements (blocks a..=b) and upper-bounded elements (blocks a+1..=b+1).
    let least_minimizer = |first: usize, last: usize| -> f64 {
        least_cut_minimizer(raw, weights, &order.blocks[first..=last], &order.blocks[first + 1..=last + 1])
    };

    let mut stack: Vec<CutRun> = Vec::with_capacity(m - 1);
    for cut in 0..m - 1 {
        let value = least_minimizer(cut, cut);
        stack.push(CutRun { first: cut, last: cut, value });
        // Cuts must be non-increasing; pool adjacent violators.
        while stack.len() >= 2 && stack[stack.len() - 2].value < stack[stack.len() - 1].value {
            let top = stack.pop().expect("stack has two entries");
            let prev = stack.last_mut().expect("stack has two entries");
            prev.last = top.last;
            prev.value = least_minimizer(prev.first, prev.last);
        }
    }

    // Expand runs into per-cut levels, then clamp each block between its
    // neighbouring cuts.
    let mut cuts = vec![0.0; m - 1];
    for run in &stack {
        for c in run.first..=run.last {
            cuts[c] = run.value;
        }
    }
    for (b, block) in order.blocks.iter().enumerate() {
        let hi = if b == 0 { f64::INFINITY } else { cuts[b - 1] };
        let lo = if b == m - 1 { f64::NEG_INFINITY } else { cuts[b] };
        for &i in block {
            fitted[i] = raw[i].clamp(lo, hi);
        }
    }
}

/// Smallest minimizer of the pooled cut objective
/// `sum_{j in lower} w_j (c - y_j)_+^2 + sum_{j in upper} w_j (y_j - c)_+^2`.
///
/// The derivative is continuous, non-decreasing, piecewise linear, tends to
/// -inf (upper blocks are non-empty) and +inf (lower blocks are non-empty),
/// so the smallest root exists; it is found by scanning breakpoints.
fn least_cut_minimizer(
    raw: &[f64],
    weights: &[f64],
    lower_blocks: &[Vec<usize>],
    upper_blocks: &[Vec<usize>],
) -> f64 {
    let lower: Vec<usize> = lower_blocks.iter().flatten().copied().collect();
    let upper: Vec<usize> = upper_blocks.iter().flatten().copied().collect();
    debug_assert!(!lower.is_empty() && !upper.is_empty());

    let derivative = |c: f64| -> f64 {
        let mut d = 0.0;
        for &j in &lower {
            if c > raw[j] {
                d += weights[j] * (c - raw[j]);
            }
        }
        for &j in &upper {
            if raw[j] > c {
                d -= weights[j] * (raw[j] - c);
            }
        }
        d
    };

    let mut breakpoints: Vec<f64> =
        lower.iter().chain(upper.iter()).map(|&j| raw[j]).collect();
    breakpoints.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    breakpoints.dedup();

    // Below the first breakpoint the derivative is d(bp0) + W_upper * (c - bp0)
    // with W_upper > 0, so a root there is exact and minimal.
    let first = breakpoints[0];
    let d_first = derivative(first);
    if d_first >= 0.0 {
        let w_upper: f64 = upper.iter().map(|&j| weights[j]).sum();
        return first - d_first / w_upper;
    }
    for k in 1..breakpoints.len() {
        let d_k = derivative(breakpoints[k]);
        if d_k >= 0.0 {
            // Root lies in (breakpoints[k-1], breakpoints[k]]; the segment is
            // linear, and its left end is strictly negative, so interpolation
            // returns the smallest root.
            let d_prev = derivative(breakpoints[k - 1]);
            let span = breakpoints[k] - breakpoints[k - 1];
            return breakpoints[k - 1] + span * (-d_prev) / (d_k - d_prev);
        }
    }
    // The derivative grows without bound beyond the last breakpoint
    // (lower blocks are non-empty), so the root is past it.
    let last = *breakpoints.last().expect("non-empty breakpoints");
    let w_lower: f64 = lower.iter().map(|&j| weights[j]).sum();
    last - derivative(last) / w_lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    fn assert_vec_close(got: &[f64], want: &[f64], eps: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert_abs_diff_eq!(g, w, epsilon = eps);
        }
    }

    #[test]
    fn pava_keeps_monotone_input() {
        let r = pava(&[1.0, 2.0, 3.0], &unit(3), Direction::NonDecreasing).unwrap();
        assert_vec_close(&r.fitted, &[1.0, 2.0, 3.0], 0.0);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn pava_pools_violators_to_the_mean() {
        // Reference fitted values frozen from an independent quadratic
        // program solve.
        let r = pava(&[3.0, 1.0, 2.0], &unit(3), Direction::NonDecreasing).unwrap();
        assert_vec_close(&r.fitted, &[2.0, 2.0, 2.0], 1e-12);
        assert_abs_diff_eq!(r.objective, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn pava_respects_weights() {
        let r = pava(&[1.0, 3.0], &[2.0, 1.0], Direction::NonIncreasing).unwrap();
        assert_vec_close(&r.fitted, &[5.0 / 3.0, 5.0 / 3.0], 1e-12);
        assert_abs_diff_eq!(r.objective, 8.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn pava_rejects_bad_inputs() {
        assert!(pava(&[1.0], &[1.0, 2.0], Direction::NonDecreasing).is_err());
        assert!(pava(&[1.0, 2.0], &[1.0, 0.0], Direction::NonDecreasing).is_err());
        assert!(pava(&[1.0, f64::NAN], &[1.0, 1.0], Direction::NonDecreasing).is_err());
    }

    #[test]
    fn total_order_consistent_ranking_is_fixed_point() {
        let r = project_total_order(&[5.0, 3.0, 2.0], &unit(3)).unwrap();
        assert_vec_close(&r.fitted, &[5.0, 3.0, 2.0], 0.0);
    }

    #[test]
    fn total_order_reversed_data_pools_to_global_mean() {
        let r = project_total_order(&[2.0, 3.0, 5.0], &unit(3)).unwrap();
        assert_vec_close(&r.fitted, &[10.0 / 3.0; 3], 1e-12);
        assert_abs_diff_eq!(r.objective, 14.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn total_order_pools_a_reversed_pair() {
        let r = project_total_order(&[3.9, 6.0], &unit(2)).unwrap();
        assert_vec_close(&r.fitted, &[4.95, 4.95], 1e-12);
        assert_abs_diff_eq!(r.objective, 2.205, epsilon = 1e-12);
    }

    #[test]
    fn equality_blocks_pool_and_order() {
        // Frozen from an independent quadratic program solve.
        let order = OrderSpec::new(vec![vec![0, 1], vec![2]], TieMode::Equality);
        let r = project_block_order(&[4.0, 2.0, 1.0], &order, &unit(3)).unwrap();
        assert_vec_close(&r.fitted, &[3.0, 3.0, 1.0], 1e-12);
        assert_abs_diff_eq!(r.objective, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn equality_blocks_weighted_reference() {
        // Frozen from an independent quadratic program solve: block means
        // (2, 16/3) violate the order and pool to 11/3.
        let order = OrderSpec::new(vec![vec![0], vec![1, 2], vec![3]], TieMode::Equality);
        let r =
            project_block_order(&[2.0, 6.0, 5.0, 1.0], &order, &[3.0, 1.0, 2.0, 0.5]).unwrap();
        assert_vec_close(&r.fitted, &[11.0 / 3.0, 11.0 / 3.0, 11.0 / 3.0, 1.0], 1e-12);
        assert_abs_diff_eq!(r.objective, 52.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn satisfied_blocks_pass_through_in_both_modes() {
        for mode in [TieMode::Equality, TieMode::Dominance] {
            let order = OrderSpec::new(vec![vec![0], vec![1]], mode);
            let r = project_block_order(&[5.0, 2.0], &order, &unit(2)).unwrap();
            assert_vec_close(&r.fitted, &[5.0, 2.0], 0.0);
            assert_eq!(r.objective, 0.0);
        }
    }

    #[test]
    fn dominance_reference_case() {
        // Frozen from an independent quadratic program solve.
        let order = OrderSpec::new(vec![vec![0, 1], vec![2]], TieMode::Dominance);
        let r = project_block_order(&[4.0, 2.0, 3.0], &order, &unit(3)).unwrap();
        assert_vec_close(&r.fitted, &[4.0, 2.5, 2.5], 1e-10);
        assert_abs_diff_eq!(r.objective, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn dominance_three_blocks_reference() {
        // Frozen from an independent quadratic program solve.
        let order =
            OrderSpec::new(vec![vec![0, 1], vec![2, 3], vec![4]], TieMode::Dominance);
        let r =
            project_block_order(&[1.0, 5.0, 4.0, 0.5, 3.0], &order, &unit(5)).unwrap();
        assert_vec_close(&r.fitted, &[2.5, 5.0, 2.5, 1.75, 1.75], 1e-10);
        assert_abs_diff_eq!(r.objective, 7.625, epsilon = 1e-10);
    }

    #[test]
    fn dominance_weighted_reference() {
        // Frozen from an independent quadratic program solve.
        let order = OrderSpec::new(vec![vec![0], vec![1, 2], vec![3]], TieMode::Dominance);
        let r =
            project_block_order(&[2.0, 6.0, 5.0, 1.0], &order, &[3.0, 1.0, 2.0, 0.5]).unwrap();
        assert_vec_close(&r.fitted, &[11.0 / 3.0, 11.0 / 3.0, 11.0 / 3.0, 1.0], 1e-10);
        assert_abs_diff_eq!(r.objective, 52.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn dominance_feasible_non_contiguous_indices_untouched() {
        // Blocks may reference arbitrary indices of the vector; this
        // instance is already feasible.
        let order = OrderSpec::new(vec![vec![1, 3], vec![0, 2]], TieMode::Dominance);
        let r = project_block_order(&[1.0, 4.0, 2.0, 5.0], &order, &unit(4)).unwrap();
        assert_vec_close(&r.fitted, &[1.0, 4.0, 2.0, 5.0], 0.0);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn dominance_pools_cuts_when_needed() {
        // Singleton dominance blocks are exactly a total order; compare
        // against PAVA.
        let raw = [5.0, 1.0, 10.0, 2.0];
        let order = OrderSpec::new(
            (0..raw.len()).map(|i| vec![i]).collect(),
            TieMode::Dominance,
        );
        let via_blocks = project_block_order(&raw, &order, &unit(4)).unwrap();
        let via_pava = project_total_order(&raw, &unit(4)).unwrap();
        assert_vec_close(&via_blocks.fitted, &via_pava.fitted, 1e-10);
        assert_abs_diff_eq!(via_blocks.objective, via_pava.objective, epsilon = 1e-10);
    }

    #[test]
    fn unconstrained_indices_pass_through() {
        let order = OrderSpec::new(vec![vec![0], vec![3]], TieMode::Dominance);
        let r = project_block_order(&[1.0, 99.0, -7.0, 4.0], &order, &unit(4)).unwrap();
        assert_abs_diff_eq!(r.fitted[1], 99.0, epsilon = 0.0);
        assert_abs_diff_eq!(r.fitted[2], -7.0, epsilon = 0.0);
        assert_abs_diff_eq!(r.fitted[0], 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.fitted[3], 2.5, epsilon = 1e-12);
    }

    #[test]
    fn order_spec_validation_catches_misuse() {
        let n = 3;
        let empty = OrderSpec::new(vec![vec![0], vec![]], TieMode::Equality);
        assert!(empty.validate(n).is_err());
        let dup = OrderSpec::new(vec![vec![0, 1], vec![1]], TieMode::Equality);
        assert!(dup.validate(n).is_err());
        let oob = OrderSpec::new(vec![vec![0], vec![3]], TieMode::Equality);
        assert!(oob.validate(n).is_err());
    }

    #[test]
    fn projection_is_idempotent() {
        let raw = [4.2, 1.0, 3.3, 3.3, 0.5, 9.0];
        let weights = [1.0, 2.0, 0.5, 1.0, 1.0, 3.0];
        let order = OrderSpec::new(vec![vec![0, 2], vec![1, 4], vec![3, 5]], TieMode::Dominance);
        let once = project_block_order(&raw, &order, &weights).unwrap();
        let twice = project_block_order(&once.fitted, &order, &weights).unwrap();
        assert_vec_close(&twice.fitted, &once.fitted, 1e-10);
        assert!(twice.objective <= 1e-18);
    }

    #[test]
    fn translation_equivariance() {
        let raw = [2.0, 7.0, 3.0, 5.0];
        let weights = [1.0, 0.5, 2.0, 1.0];
        let shift = 11.25;
        let shifted: Vec<f64> = raw.iter().map(|v| v + shift).collect();
        for mode in [TieMode::Equality, TieMode::Dominance] {
            let order = OrderSpec::new(vec![vec![0, 1], vec![2, 3]], mode);
            let base = project_block_order(&raw, &order, &weights).unwrap();
            let moved = project_block_order(&shifted, &order, &weights).unwrap();
            for (b, m) in base.fitted.iter().zip(moved.fitted.iter()) {
                assert_abs_diff_eq!(b + shift, m, epsilon = 1e-10);
            }
        }
    }
}
