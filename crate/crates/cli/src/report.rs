//! `report`: gathers sweep artifacts into one tidy table.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::estimate::SweepArtifact;
use crate::CliError;

/// One row of the tidy table.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Row {
    pub method: String,
    pub eps: f64,
    pub n: usize,
    pub log_rate: f64,
}

/// Expands directories into their `sweep_*.json` files, or their
/// `sweep_*.csv` files when there is no JSON. Explicit files pass through.
pub fn collect_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if !p.is_dir() {
            out.push(p.clone());
            continue;
        }
        let entries = std::fs::read_dir(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        let mut found: Vec<PathBuf> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|f| f.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("sweep_")))
            .collect();
        found.sort();
        let json: Vec<PathBuf> = found.iter().filter(|f| has_ext(f, "json")).cloned().collect();
        let chosen = if json.is_empty() {
            found.into_iter().filter(|f| has_ext(f, "csv")).collect()
        } else {
            json
        };
        if chosen.is_empty() {
            return Err(CliError::Io(format!("{}: no sweep artifacts", p.display())));
        }
        out.extend(chosen);
    }
    if out.is_empty() {
        return Err(CliError::Config("no input artifacts given".into()));
    }
    Ok(out)
}

fn has_ext(p: &Path, ext: &str) -> bool {
    p.extension().is_some_and(|x| x == ext)
}

/// Reads one artifact. Malformed content is an input error; the message
/// carries the file and the parse position.
pub fn read_rows(path: &Path) -> Result<Vec<Row>, CliError> {
    let io = |e: String| CliError::Io(format!("{}: {e}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
    if has_ext(path, "csv") {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        return rdr
            .deserialize::<Row>()
            .map(|r| {
                r.map_err(|e| {
                    let at = e.position().map_or(String::new(), |p| format!("line {}: ", p.line()));
                    io(format!("{at}{e}"))
                })
            })
            .collect();
    }
    let artifact: SweepArtifact = serde_json::from_str(&text)
        .map_err(|e| io(e.to_string()))?;
    Ok(artifact
        .estimates
        .iter()
        .flat_map(|est| {
            est.log_rates.iter().enumerate().map(move |(i, &r)| Row {
                method: est.method.to_string(),
                eps: est.eps,
                n: i + 1,
                log_rate: r,
            })
        })
        .collect())
}

/// `method,eps,n,log_rate` over all inputs, in input order.
pub fn report(paths: &[PathBuf]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "eps", "n", "log_rate"]).expect("in-memory write");
    for p in collect_inputs(paths)? {
        for row in read_rows(&p)? {
            w.write_record([row.method, row.eps.to_string(), row.n.to_string(), row.log_rate.to_string()])
                .expect("in-memory write");
        }
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"))
}
