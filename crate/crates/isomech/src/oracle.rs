//! Brute-force reference solver for order-constrained projection.
//!
//! Independent of the production solvers: the feasible set is expressed as
//! an intersection of pairwise halfspaces/equalities and the projection is
//! computed by Dykstra's algorithm of cyclically corrected projections,
//! which is coordinate descent on the dual of the projection problem. It is
//! deliberately slow and simple, guarded to tiny inputs, and intended only
//! for tests.

use crate::error::{Error, Result};
use crate::isotonic::{OrderSpec, ProjectionResult, TieMode};

/// Largest vector length the oracle accepts (test-scale only).
pub const ORACLE_MAX_LEN: usize = 16;

const MAX_SWEEPS: usize = 500_000;
const SWEEP_TOL: f64 = 1e-13;

/// A single pairwise constraint between two vector indices.
#[derive(Debug, Clone, Copy)]
enum Constraint {
    /// x[a] >= x[b]
    Ge(usize, usize),
    /// x[a] == x[b]
    Eq(usize, usize),
}

fn constraints_for(order: &OrderSpec) -> Vec<Constraint> {
    let mut cs = Vec::new();
    match order.tie_mode {
        TieMode::Equality => {
            for block in &order.blocks {
                for pair in block.windows(2) {
                    cs.push(Constraint::Eq(pair[0], pair[1]));
                }
            }
            for pair in order.blocks.windows(2) {
                cs.push(Constraint::Ge(pair[0][0], pair[1][0]));
            }
        }
        TieMode::Dominance => {
            for pair in order.blocks.windows(2) {
                for &a in &pair[0] {
                    for &b in &pair[1] {
                        cs.push(Constraint::Ge(a, b));
                    }
                }
            }
        }
    }
    cs
}

/// Exact projection onto a pairwise constraint in the weighted inner
/// product `<u, v> = sum_i w_i u_i v_i`.
fn project_constraint(x: &mut [f64], weights: &[f64], c: Constraint) {
    match c {
        Constraint::Ge(a, b) => {
            if x[a] < x[b] {
                let lambda = (x[b] - x[a]) / (1.0 / weights[a] + 1.0 / weights[b]);
                x[a] += lambda / weights[a];
                x[b] -= lambda / weights[b];
            }
        }
        Constraint::Eq(a, b) => {
            let level = (weights[a] * x[a] + weights[b] * x[b]) / (weights[a] + weights[b]);
            x[a] = level;
            x[b] = level;
        }
    }
}

/// Reference projection of `raw` onto the constraints of `order`, used to
/// validate the exact solvers in tests.
///
/// Runs Dykstra's cyclic corrected projections until the iterate moves less
/// than 1e-13 over a full sweep; errors if the iteration cap is reached
/// (which would signal a harness bug, not bad input).
pub fn oracle_project(raw: &[f64], order: &OrderSpec, weights: &[f64]) -> Result<ProjectionResult> {
    if raw.len() > ORACLE_MAX_LEN {
        return Err(Error::invalid(format!(
            "oracle_project is test-scale only: length {} exceeds {ORACLE_MAX_LEN}",
            raw.len()
        )));
    }
    if raw.len() != weights.len() {
        return Err(Error::invalid("values and weights differ in length"));
    }
    order.validate(raw.len())?;

    let constraints = constraints_for(order);
    let mut x = raw.to_vec();
    // One correction vector per constraint.
    let mut corrections = vec![vec![0.0; x.len()]; constraints.len()];
    let mut prev = vec![0.0; x.len()];

    if constraints.is_empty() {
        return Ok(ProjectionResult { fitted: x, objective: 0.0 });
    }

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        prev.copy_from_slice(&x);
        for (c, correction) in constraints.iter().zip(corrections.iter_mut()) {
            for (xi, pi) in x.iter_mut().zip(correction.iter()) {
                *xi += *pi;
            }
            let before = x.to_vec();
            project_constraint(&mut x, weights, *c);
            for i in 0..x.len() {
                correction[i] = before[i] - x[i];
            }
        }
        let change = x
            .iter()
            .zip(prev.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change <= SWEEP_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Internal(format!(
            "oracle projection did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    let objective = raw
        .iter()
        .zip(x.iter())
        .zip(weights.iter())
        .map(|((r, f), w)| w * (f - r) * (f - r))
        .sum();
    Ok(ProjectionResult { fitted: x, objective })
}
