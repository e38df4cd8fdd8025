//! Writers and readers for pipeline artifacts: calibration and residual
//! tables, ground-truth vectors, the per-length figure table, and pretty
//! JSON reports.
//!
//! Existing files are never overwritten unless `force` is set; writers
//! fsync before returning so artifacts are durable once reported.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{raw_score, Dataset, PaperId};
use crate::error::{Error, Result};
use crate::eval::FigureRow;
use crate::mechanism::{CalibrationResult, ResidualEntry};

/// Opens `path` for writing, refusing to clobber an existing file unless
/// `force` is set.
pub fn open_output(path: &Path, force: bool) -> Result<File> {
    let mut opts = OpenOptions::new();
    opts.write(true);
    if force {
        opts.create(true).truncate(true);
    } else {
        opts.create_new(true);
    }
    opts.open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            Error::io(
                path,
                std::io::Error::new(
                    e.kind(),
                    "output already exists (pass --force to overwrite)",
                ),
            )
        } else {
            Error::io(path, e)
        }
    })
}

fn finish(path: &Path, file: File) -> Result<()> {
    file.sync_all().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize)]
struct CalibrationRow<'a> {
    paper_id: &'a str,
    raw: f64,
    modified: f64,
    residual: f64,
    participating: usize,
    flagged: bool,
}

/// Writes the per-paper calibration table: raw mean, modified score,
/// residual, number of calibrating coauthors, and the flag bit.
pub fn write_calibration_csv(
    path: &Path,
    dataset: &Dataset,
    result: &CalibrationResult,
    force: bool,
) -> Result<()> {
    let file = open_output(path, force)?;
    let mut w = csv::Writer::from_writer(&file);
    for (id, sub) in &dataset.submissions {
        let raw = raw_score(sub);
        let modified = *result.modified.get(id).ok_or_else(|| {
            Error::internal(format!("no modified score for paper {id}"))
        })?;
        w.serialize(CalibrationRow {
            paper_id: id,
            raw,
            modified,
            residual: modified - raw,
            participating: result.participating.get(id).copied().unwrap_or(0),
            flagged: result.flagged.contains(id),
        })
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    drop(w);
    finish(path, file)
}

/// Writes the residual report, largest absolute residual first.
pub fn write_residuals_csv(path: &Path, entries: &[ResidualEntry], force: bool) -> Result<()> {
    let file = open_output(path, force)?;
    let mut w = csv::Writer::from_writer(&file);
    for entry in entries {
        w.serialize(entry)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    drop(w);
    finish(path, file)
}

#[derive(Debug, Serialize, Deserialize)]
struct ThetaRow {
    paper_id: String,
    theta: f64,
}

/// Writes the ground-truth quality table (`paper_id,theta`).
pub fn write_theta_csv(path: &Path, theta: &BTreeMap<PaperId, f64>, force: bool) -> Result<()> {
    let file = open_output(path, force)?;
    let mut w = csv::Writer::from_writer(&file);
    for (id, &value) in theta {
        w.serialize(ThetaRow { paper_id: id.clone(), theta: value })
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    drop(w);
    finish(path, file)
}

/// Reads a ground-truth quality table written by [`write_theta_csv`].
pub fn read_theta_csv(path: &Path) -> Result<BTreeMap<PaperId, f64>> {
    let file = File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::invalid(format!("missing file: {}", path.display()))
        } else {
            Error::io(path, e)
        }
    })?;
    let mut reader = csv::Reader::from_reader(file);
    let mut theta = BTreeMap::new();
    for (i, row) in reader.deserialize::<ThetaRow>().enumerate() {
        let row = row.map_err(|e| {
            Error::invalid(format!("{}: row {}: {e}", path.display(), i + 1))
        })?;
        if !row.theta.is_finite() {
            return Err(Error::invalid(format!(
                "{}: row {}: theta must be finite",
                path.display(),
                i + 1
            )));
        }
        if theta.insert(row.paper_id.clone(), row.theta).is_some() {
            return Err(Error::invalid(format!(
                "{}: duplicate theta for paper {}",
                path.display(),
                row.paper_id
            )));
        }
    }
    Ok(theta)
}

/// Writes the side-by-side per-length table
/// (`ranking_length,n_authors,mse_raw,mse_full,mse_partition,...`).
pub fn write_figure_csv(path: &Path, rows: &[FigureRow], force: bool) -> Result<()> {
    let file = open_output(path, force)?;
    let mut w = csv::Writer::from_writer(&file);
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    drop(w);
    finish(path, file)
}

/// Writes any serializable value as pretty JSON with a trailing newline.
/// Key order is the struct field order (or sorted, for maps), so output is
/// byte-stable for equal inputs.
pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T, force: bool) -> Result<()> {
    let mut file = open_output(path, force)?;
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::internal(format!("JSON serialization failed: {e}")))?;
    bytes.push(b'\n');
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    finish(path, file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Author, Ranking, Submission};
    use crate::mechanism::{run_mechanism, MechanismOptions};
    use tempfile::tempdir;

    fn sample_dataset() -> Dataset {
        let p = |id: &str, scores: &[f64]| Submission {
            id: id.to_string(),
            topic: None,
            review_scores: scores.to_vec(),
        };
        Dataset {
            scale: (1.0, 10.0),
            submissions: [
                ("P1".to_string(), p("P1", &[3.0])),
                ("P2".to_string(), p("P2", &[5.0])),
            ]
            .into_iter()
            .collect(),
            authors: [(
                "A1".to_string(),
                Author {
                    id: "A1".to_string(),
                    submission_ids: vec!["P1".to_string(), "P2".to_string()],
                },
            )]
            .into_iter()
            .collect(),
            rankings: [(
                "A1".to_string(),
                Ranking {
                    author_id: "A1".to_string(),
                    blocks: vec![vec!["P1".to_string()], vec!["P2".to_string()]],
                },
            )]
            .into_iter()
            .collect(),
        }
    }

    #[test]
    fn theta_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("theta.csv");
        let theta: BTreeMap<String, f64> =
            [("P1".to_string(), 4.25), ("P2".to_string(), -1.5)].into_iter().collect();
        write_theta_csv(&path, &theta, false).unwrap();
        assert_eq!(read_theta_csv(&path).unwrap(), theta);
    }

    #[test]
    fn missing_theta_is_a_validation_error_naming_the_file() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("theta.csv");
        let err = read_theta_csv(&path).unwrap_err().to_string();
        assert!(err.contains("missing file"), "{err}");
        assert!(err.contains("theta.csv"), "{err}");
    }

    #[test]
    fn outputs_refuse_to_overwrite_without_force() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("theta.csv");
        let theta: BTreeMap<String, f64> = [("P1".to_string(), 1.0)].into_iter().collect();
        write_theta_csv(&path, &theta, false).unwrap();
        let err = write_theta_csv(&path, &theta, false).unwrap_err().to_string();
        assert!(err.contains("--force"), "{err}");
        write_theta_csv(&path, &theta, true).unwrap();
    }

    #[test]
    fn calibration_table_has_expected_header_and_rows() {
        let dir = tempdir().unwrap();
        let dataset = sample_dataset();
        let result = run_mechanism(&dataset, &MechanismOptions::default()).unwrap();
        let path = dir.path().join("calibration.csv");
        write_calibration_csv(&path, &dataset, &result, false).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "paper_id,raw,modified,residual,participating,flagged"
        );
        assert_eq!(lines.clone().count(), 2);
        // P1 ranked above P2 with raw (3, 5) pools to 4.
        assert!(lines.any(|l| l.starts_with("P1,3.0,4.0,1.0,1,")), "{text}");
    }

    #[test]
    fn residuals_and_figure_tables_write_their_orders() {
        let dir = tempdir().unwrap();
        let dataset = sample_dataset();
        let result = run_mechanism(&dataset, &MechanismOptions::default()).unwrap();
        let entries = crate::mechanism::residual_report(&result, &dataset);
        let path = dir.path().join("residuals.csv");
        write_residuals_csv(&path, &entries, false).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("paper_id,raw,modified,residual"), "{text}");

        let fig = dir.path().join("figure1.csv");
        let row = FigureRow {
            ranking_length: 2,
            n_authors: 1,
            mse_raw: 1.0,
            mse_full: 0.5,
            mse_partition: 0.75,
            mae_raw: 1.0,
            mae_full: 0.5,
            mae_partition: 0.75,
        };
        write_figure_csv(&fig, &[row], false).unwrap();
        let text = std::fs::read_to_string(&fig).unwrap();
        assert!(
            text.starts_with(
                "ranking_length,n_authors,mse_raw,mse_full,mse_partition,mae_raw,mae_full,mae_partition"
            ),
            "{text}"
        );
    }

    #[test]
    fn json_writer_is_stable_and_newline_terminated() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("report.json");
        let value: BTreeMap<String, u32> =
            [("b".to_string(), 2), ("a".to_string(), 1)].into_iter().collect();
        write_json_pretty(&path, &value, false).unwrap();
        let a = std::fs::read(&path).unwrap();
        assert!(a.ends_with(b"\n"));
        write_json_pretty(&path, &value, true).unwrap();
        let b = std::fs::read(&path).unwrap();
        assert_eq!(a, b);
    }
}
