//! Small statistical helpers: Student-t tail probabilities.

use crate::error::{Error, Result};

/// Two-sided p-value for a Student-t statistic `t` with `df` degrees of
/// freedom.
///
/// Computed directly from the tail identity
/// `P(|T| >= |t|) = I_x(df/2, 1/2)` with `x = df / (df + t^2)`, where `I` is
/// the regularized incomplete beta function. Evaluating the tail through the
/// incomplete beta avoids the cancellation a naive `2 * (1 - cdf(|t|))`
/// suffers for large `|t|`.
pub fn t_two_sided_p(t: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) {
        return Err(Error::invalid(format!(
            "degrees of freedom must be positive, got {df}"
        )));
    }
    if t.is_nan() {
        return Err(Error::invalid("t statistic is NaN"));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let x = df / (df + t * t);
    Ok(statrs::function::beta::beta_reg(df / 2.0, 0.5, x))
}
