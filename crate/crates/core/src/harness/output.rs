//! Result files: `results.csv` or `results.json`, plus a `meta.json` sidecar
//! holding the resolved configuration and any failed sweep points.
//!
//! CSV columns are the swept parameters followed by
//! `metric,value,stderr,iters,wall_ms`. Floats use the shortest
//! representation that parses back to the same value.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

use super::experiment::{ExperimentOutcome, ResultRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub const FIXED_COLUMNS: [&str; 5] = ["metric", "value", "stderr", "iters", "wall_ms"];

/// Shortest round-trip text for `v`, switching to exponent form outside
/// `[1e-6, 1e16)`.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-6..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn row_json(names: &[String], row: &ResultRow) -> Value {
    let params: Map<String, Value> = names.iter().cloned().zip(row.params.iter().map(|&p| json!(p))).collect();
    json!({
        "params": params,
        "metric": row.metric,
        "value": row.value,
        "stderr": row.stderr,
        "iters": row.iters,
        "wall_ms": row.wall_ms,
    })
}

#[derive(Serialize)]
struct Meta<'a> {
    software: &'static str,
    version: &'static str,
    experiment: &'a super::config::ExperimentSpec,
    scenario: &'a crate::scenario::ScenarioConfig,
    columns: Vec<String>,
    rows: usize,
    failures: &'a [super::experiment::PointFailure],
}

/// Writes the result table and the metadata sidecar into `out_dir`
/// (created if missing) and returns the written paths.
pub fn emit_results(outcome: &ExperimentOutcome, format: OutputFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if outcome.rows.is_empty() {
        return Err(Error::Serialize("no result rows to write".into()));
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut columns = outcome.param_names.clone();
    columns.extend(FIXED_COLUMNS.iter().map(|c| c.to_string()));

    let table = match format {
        OutputFormat::Csv => {
            let path = out_dir.join("results.csv");
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Serialize(format!("{}: {e}", path.display())))?;
            let csv_err = |e: csv::Error| Error::Serialize(e.to_string());
            w.write_record(&columns).map_err(csv_err)?;
            for row in &outcome.rows {
                let mut rec: Vec<String> = row.params.iter().map(|&p| format_f64(p)).collect();
                rec.push(row.metric.clone());
                rec.push(format_f64(row.value));
                rec.push(format_f64(row.stderr));
                rec.push(row.iters.to_string());
                rec.push(row.wall_ms.to_string());
                w.write_record(&rec).map_err(csv_err)?;
            }
            w.flush().map_err(io_err(&path))?;
            path
        }
        OutputFormat::Json => {
            let path = out_dir.join("results.json");
            let rows: Vec<Value> = outcome.rows.iter().map(|r| row_json(&outcome.param_names, r)).collect();
            let text = serde_json::to_string_pretty(&rows).map_err(|e| Error::Serialize(e.to_string()))?;
            fs::write(&path, text + "\n").map_err(io_err(&path))?;
            path
        }
    };

    let meta = Meta {
        software: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: &outcome.spec,
        scenario: &outcome.scenario,
        columns,
        rows: outcome.rows.len(),
        failures: &outcome.failures,
    };
    let meta_path = out_dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Serialize(e.to_string()))?;
    fs::write(&meta_path, text + "\n").map_err(io_err(&meta_path))?;
    Ok(vec![table, meta_path])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{ExperimentKind, ExperimentSpec, Sweep};
    use crate::scenario::{Constraint, ScenarioConfig};

    fn outcome(rows: Vec<ResultRow>) -> ExperimentOutcome {
        ExperimentOutcome {
            spec: ExperimentSpec {
                name: ExperimentKind::SingleSolve,
                sweep: Sweep::default(),
                trials: 1,
                realizations: 1,
                constraint: Constraint::PerSat,
                seed: 1,
                timing: false,
            },
            scenario: ScenarioConfig::default(),
            param_names: vec!["rho_w".into()],
            rows,
            failures: vec![],
        }
    }

    fn row(value: f64) -> ResultRow {
        ResultRow {
            params: vec![50.0],
            metric: "approx_sum_rate".into(),
            value,
            stderr: 1.25e-7,
            iters: 12,
            wall_ms: 0,
        }
    }

    #[test]
    fn single_row_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nested/out");
        let v = 31.234567890123456;
        let paths = emit_results(&outcome(vec![row(v)]), OutputFormat::Csv, &out).unwrap();
        let text = fs::read_to_string(&paths[0]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "rho_w,metric,value,stderr,iters,wall_ms");
        let mut rd = csv::Reader::from_path(&paths[0]).unwrap();
        let rec = rd.records().next().unwrap().unwrap();
        assert_eq!(rec[2].parse::<f64>().unwrap(), v);
        assert_eq!(rec[3].parse::<f64>().unwrap(), 1.25e-7);
        let meta: Value = serde_json::from_str(&fs::read_to_string(&paths[1]).unwrap()).unwrap();
        assert_eq!(meta["rows"], 1);
        assert_eq!(meta["scenario"]["num_sats"], 8);
    }

    #[test]
    fn json_rows_name_their_parameters() {
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_results(&outcome(vec![row(1.5), row(2.5)]), OutputFormat::Json, dir.path()).unwrap();
        let rows: Value = serde_json::from_str(&fs::read_to_string(&paths[0]).unwrap()).unwrap();
        assert_eq!(rows[1]["params"]["rho_w"], 50.0);
        assert_eq!(rows[1]["value"], 2.5);
    }

    #[test]
    fn uncreatable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "x").unwrap();
        let err = emit_results(&outcome(vec![row(1.0)]), OutputFormat::Csv, &file.join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn empty_outcome_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_results(&outcome(vec![]), OutputFormat::Csv, dir.path()).is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.0, 1.0, 0.1, 1e-16, 3.9810717055349565e-16, 123456.789, 1e20, -2.5e-9] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_f64(8.0), "8");
    }
}
