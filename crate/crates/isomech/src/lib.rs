//! Isotonic calibration of peer-review scores from author-reported
//! rankings.
//!
//! An author who submits several papers to the same venue knows how they
//! compare; review scores are noisy estimates of the same thing. This crate
//! implements the calibration mechanism built on that observation: elicit
//! each author's ranking of their own submissions, then replace the raw
//! review means with their weighted least-squares projection onto the set
//! of score vectors consistent with the claimed order. The projection is
//! solved exactly — pool-adjacent-violators for total orders, a
//! cut-reduction of the same idea for coarse block rankings under either
//! tie semantics — and a slow reference solver double-checks it in tests.
//!
//! Around the solver sit the moving parts of a calibration study:
//!
//! - [`data`]: the CSV review-data model (submissions, reviews,
//!   authorships, rankings) with full referential validation.
//! - [`isotonic`]: exact projection solvers; [`oracle`] is the independent
//!   reference implementation used for cross-checks.
//! - [`mechanism`]: per-author calibration (whole rankings or topic-based
//!   sub-rankings), coauthor averaging, and residual flags for meta-review
//!   attention.
//! - [`sim`]: seeded synthetic review worlds and author reporting policies,
//!   truthful and strategic.
//! - [`eval`]: MSE/MAE by ranking length, percentage improvements, and OLS
//!   inference ([`stats`] supplies the t-distribution tail).
//! - [`truthful`]: brute-force verification that truthful reporting is
//!   optimal under convex utilities — and not under threshold acceptance.
//! - [`io`]: artifact writers/readers used by the command-line tool.
//!
//! Everything randomized flows from explicit seeds through per-purpose
//! derived streams ([`seed`]), so runs are reproducible bit for bit.

pub mod data;
pub mod error;
pub mod eval;
pub mod io;
pub mod isotonic;
pub mod mechanism;
pub mod oracle;
pub mod seed;
pub mod sim;
pub mod stats;
pub mod truthful;

pub use error::{Error, Result};
