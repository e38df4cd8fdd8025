//! Generate a small synthetic review world, calibrate it, and print the
//! headline error reduction.
//!
//! ```text
//! cargo run --release --example quickstart
//! ```

use isomech::eval::build_report;
use isomech::mechanism::{run_mechanism, MechanismOptions};
use isomech::sim::{collect_reports, gen_world, PolicyAssignment, WorldConfig};

fn main() -> isomech::Result<()> {
    let config = WorldConfig { n_authors: 300, seed: 7, ..WorldConfig::default() };
    let mut world = gen_world(&config)?;
    collect_reports(&mut world, &PolicyAssignment::default())?;

    let result = run_mechanism(&world.dataset, &MechanismOptions::default())?;
    let report = build_report(&world, &result)?;

    println!(
        "{} papers, {} ranking authors",
        report.overall.n_papers, report.overall.n_ranking_authors
    );
    println!(
        "MSE {:.4} -> {:.4}  ({:+.1}%)",
        report.overall.mse_raw, report.overall.mse_modified, -report.improvement.mse_pct
    );
    println!(
        "MAE {:.4} -> {:.4}  ({:+.1}%)",
        report.overall.mae_raw, report.overall.mae_modified, -report.improvement.mae_pct
    );
    for (length, group) in &report.per_length {
        println!(
            "ranking length {length:>2}: {:>4} authors, MSE {:.3} -> {:.3}",
            group.n_authors, group.mse_raw, group.mse_modified
        );
    }
    Ok(())
}
