//! Dataset ingestion and result serialization.
//!
//! Datasets arrive as headered CSV. Multivariate families read response
//! columns `y1..yp`; regression families read a single `y` column plus
//! covariates `x1..xp`. All numeric parsing is locale-independent.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::adaptive::AsResult;
use crate::error::{Error, Result};
use crate::likelihood::{Dataset, Family};
use crate::mscs::{ImportanceReport, MscsResult};
use crate::simulate::McSummary;

/// Header columns matching `prefix` followed by 1..k, in index order.
/// Errors if the indices are not exactly the contiguous range 1..k.
fn indexed_columns(headers: &csv::StringRecord, prefix: &str) -> Result<Vec<usize>> {
    let mut found: Vec<(usize, usize)> = Vec::new();
    for (col, name) in headers.iter().enumerate() {
        let name = name.trim();
        if let Some(rest) = name.strip_prefix(prefix) {
            if let Ok(idx) = rest.parse::<usize>() {
                found.push((idx, col));
            }
        }
    }
    found.sort_unstable();
    for (want, &(got, _)) in (1..).zip(&found) {
        if got != want {
            return Err(Error::InvalidDataset(format!(
                "expected columns {prefix}1..{prefix}{}, found {prefix}{got}",
                found.len()
            )));
        }
    }
    Ok(found.into_iter().map(|(_, col)| col).collect())
}

fn parse_cell(record: &csv::StringRecord, col: usize, row: usize) -> Result<f64> {
    let raw = record
        .get(col)
        .ok_or_else(|| Error::InvalidDataset(format!("row {row}: missing column {col}")))?
        .trim();
    raw.parse::<f64>()
        .map_err(|_| Error::InvalidDataset(format!("row {row}: cannot parse {raw:?} as a number")))
}

/// Read a dataset for `family` from headered CSV.
pub fn read_dataset_csv<R: Read>(reader: R, family: Family) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    if records.is_empty() {
        return Err(Error::InvalidDataset("no observations".into()));
    }
    let n = records.len();

    if family.is_regression() {
        let y_col = headers
            .iter()
            .position(|h| h.trim() == "y")
            .ok_or_else(|| Error::InvalidDataset("missing response column `y`".into()))?;
        let x_cols = indexed_columns(&headers, "x")?;
        if x_cols.is_empty() {
            return Err(Error::InvalidDataset("missing covariate columns x1..xp".into()));
        }
        let mut y = DMatrix::zeros(n, 1);
        let mut x = DMatrix::zeros(n, x_cols.len());
        for (i, rec) in records.iter().enumerate() {
            y[(i, 0)] = parse_cell(rec, y_col, i + 2)?;
            for (j, &col) in x_cols.iter().enumerate() {
                x[(i, j)] = parse_cell(rec, col, i + 2)?;
            }
        }
        Dataset::new(family, y, Some(x))
    } else {
        let y_cols = indexed_columns(&headers, "y")?;
        if y_cols.is_empty() {
            return Err(Error::InvalidDataset("missing response columns y1..yp".into()));
        }
        let mut y = DMatrix::zeros(n, y_cols.len());
        for (i, rec) in records.iter().enumerate() {
            for (j, &col) in y_cols.iter().enumerate() {
                y[(i, j)] = parse_cell(rec, col, i + 2)?;
            }
        }
        Dataset::new(family, y, None)
    }
}

pub fn read_dataset_csv_path(path: &Path, family: Family) -> Result<Dataset> {
    read_dataset_csv(std::fs::File::open(path)?, family)
}

/// Envelope for JSON outputs: the tool version and resolved inputs travel
/// with every result.
#[derive(serde::Serialize)]
pub struct Report<'a, T: serde::Serialize, C: serde::Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: &'a C,
    pub result: &'a T,
}

pub fn write_json_report<W, T, C>(w: W, seed: u64, config: &C, result: &T) -> Result<()>
where
    W: Write,
    T: serde::Serialize,
    C: serde::Serialize,
{
    let report = Report {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config,
        result,
    };
    serde_json::to_writer_pretty(w, &report).map_err(|e| Error::InvalidSpec(e.to_string()))
}

/// Confidence-set members as CSV: one row per survivor with its test stats.
pub fn write_survivors_csv<W: Write>(w: W, result: &MscsResult) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["model", "lambda", "df", "pvalue"])?;
    for rec in result.survivors() {
        wtr.write_record([
            rec.model.encode(),
            format!("{:.12e}", rec.lambda),
            rec.df.to_string(),
            format!("{:.12e}", rec.pvalue),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_importance_csv<W: Write>(w: W, report: &ImportanceReport) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["feature", "ii", "ci_lo", "ci_hi"])?;
    for e in &report.entries {
        let fmt_ci = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        wtr.write_record([
            e.feature.to_string(),
            format!("{:.6}", e.ii),
            fmt_ci(e.ci_lo),
            fmt_ci(e.ci_hi),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Sampler trajectory: one row per iteration with the level and all weights.
pub fn write_trajectory_csv<W: Write>(w: W, result: &AsResult) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let p = result.omega.len();
    let mut header = vec!["iteration".to_string(), "alpha_t".to_string(), "survivor_fraction".to_string()];
    header.extend((1..=p).map(|j| format!("omega{j}")));
    wtr.write_record(&header)?;
    for snap in &result.trajectory {
        let mut row = vec![
            snap.t.to_string(),
            format!("{:.12e}", snap.alpha_t),
            format!("{:.6}", snap.survivor_fraction),
        ];
        row.extend(snap.omega.iter().map(|o| format!("{o:.6}")));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Coverage table: one row per significance level.
pub fn write_mc_summary_csv<W: Write>(w: W, summary: &McSummary) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["alpha", "coverage", "mean_cardinality", "completed_runs", "discarded_runs"])?;
    for cell in &summary.cells {
        wtr.write_record([
            format!("{}", cell.alpha),
            format!("{:.6}", cell.coverage),
            format!("{:.6}", cell.mean_cardinality),
            summary.completed_runs.to_string(),
            summary.discarded_runs.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mscs::build_mscs;
    use crate::space::ModelSpace;

    #[test]
    fn reads_multivariate_csv() {
        let csv = "y1,y2,y3\n1.0,0.5,-2.0\n0.25,1e-3,3.5\n-1,-2,-3\n0,0,0\n";
        let data = read_dataset_csv(csv.as_bytes(), Family::NormalLocation).unwrap();
        assert_eq!((data.n, data.p), (4, 3));
        assert_eq!(data.y[(0, 2)], -2.0);
        assert_eq!(data.y[(1, 1)], 1e-3);
    }

    #[test]
    fn reads_regression_csv_any_column_order() {
        let csv = "x2,y,x1\n1.5,1,0.5\n-0.25,0,2.0\n0.0,1,0.0\n";
        let data = read_dataset_csv(csv.as_bytes(), Family::Logistic).unwrap();
        assert_eq!((data.n, data.p), (3, 2));
        // x1 comes first regardless of file order
        assert_eq!(data.x.as_ref().unwrap()[(0, 0)], 0.5);
        assert_eq!(data.x.as_ref().unwrap()[(0, 1)], 1.5);
        assert_eq!(data.y[(0, 0)], 1.0);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(read_dataset_csv("y1,y2\n".as_bytes(), Family::NormalLocation).is_err());
        assert!(read_dataset_csv("y1,y3\n1,2\n".as_bytes(), Family::NormalLocation).is_err());
        assert!(read_dataset_csv("y,x1\nabc,1\n".as_bytes(), Family::Poisson).is_err());
        assert!(read_dataset_csv("x1,x2\n1,2\n".as_bytes(), Family::Logistic).is_err());
        // comma decimal separators are not numbers
        assert!(read_dataset_csv("y1\n\"1,5\"\n".as_bytes(), Family::NormalLocation).is_err());
    }

    #[test]
    fn survivors_csv_round_trip() {
        let y = nalgebra::DMatrix::from_fn(50, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5);
        let data = Dataset::new(Family::NormalLocation, y, None).unwrap();
        let space = ModelSpace::all_subsets(2);
        let result = build_mscs(&data, &space, 0.05).unwrap();

        let mut buf = Vec::new();
        write_survivors_csv(&mut buf, &result).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("model,lambda,df,pvalue"));
        assert_eq!(lines.count(), result.survivor_count());
    }

    #[test]
    fn json_report_carries_version_and_seed() {
        let cfg = crate::adaptive::AsConfig::default();
        let mut buf = Vec::new();
        write_json_report(&mut buf, 42, &cfg, &serde_json::json!({"ok": true})).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["seed"], 42);
        assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(v["config"]["b"], 300);
        assert_eq!(v["result"]["ok"], true);
    }
}
