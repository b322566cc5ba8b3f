//! `estimate`: pressure sweeps per method, with a cross-method summary.

use std::collections::BTreeMap;
use std::path::PathBuf;

use entrolab_core::complexity::{entropy_extrapolate, pressure_sweep, EntropyEstimate, Extrapolation, Method, SweepSpec};
use entrolab_core::systems::{build_system, SystemSpec};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{to_json, write_file, CliError, SCHEMA_VERSION};

/// Per-method artifact: the sweep rows in grid order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepArtifact {
    pub schema_version: u32,
    pub system: SystemSpec,
    pub method: Method,
    pub estimates: Vec<EntropyEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub eps: Vec<f64>,
    pub loglims: Vec<f64>,
    /// Absent when the grid has fewer than three grains.
    pub extrapolation: Option<Extrapolation>,
    /// `exact`, `greedy` or `mixed`, for the counts at the finest grain.
    pub mode: String,
}

impl MethodSummary {
    /// The finest-grain loglim.
    pub fn value(&self) -> f64 {
        *self.loglims.last().expect("non-empty grid")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub config: RunConfig,
    pub points: usize,
    pub warnings: Vec<String>,
    pub methods: BTreeMap<Method, MethodSummary>,
    /// Largest `|value_i - value_j|` over pairs of methods.
    pub discrepancy: Option<f64>,
    /// The same, over pairs whose finest-grain counts share one solver mode.
    pub discrepancy_matching_modes: Option<f64>,
    pub stabilized: bool,
}

#[derive(Clone, Debug)]
pub struct EstimateOutcome {
    pub summary: Summary,
    pub sweeps: BTreeMap<Method, Vec<EntropyEstimate>>,
}

pub fn estimate(cfg: &RunConfig) -> Result<EstimateOutcome, CliError> {
    cfg.validate()?;
    let system = build_system(&cfg.system)?;
    let mut sweeps = BTreeMap::new();
    for &method in &cfg.methods {
        let spec = SweepSpec {
            method,
            eps_grid: cfg.eps_grid.clone(),
            n_max: cfg.n_max,
            solver: cfg.solver,
            window: cfg.window,
        };
        let est = pressure_sweep(&system.space, &system.map, &spec).map_err(|e| CliError::Internal(e.to_string()))?;
        sweeps.insert(method, est);
    }
    let mut methods = BTreeMap::new();
    for (&m, est) in &sweeps {
        let finest = est.last().expect("non-empty grid");
        let mode = match (finest.all_exact(), finest.exact.iter().any(|&e| e)) {
            (true, _) => "exact",
            (false, false) => "greedy",
            (false, true) => "mixed",
        };
        methods.insert(
            m,
            MethodSummary {
                eps: est.iter().map(|e| e.eps).collect(),
                loglims: est.iter().map(|e| e.loglim).collect(),
                extrapolation: entropy_extrapolate(est, cfg.stability_tol).ok(),
                mode: mode.to_string(),
            },
        );
    }
    let (discrepancy, discrepancy_matching_modes) = discrepancies(&methods);
    let stabilized = methods
        .values()
        .all(|s| s.extrapolation.is_some_and(|x| x.stabilized));
    Ok(EstimateOutcome {
        summary: Summary {
            schema_version: SCHEMA_VERSION,
            config: RunConfig {
                out: PathBuf::new(),
                ..cfg.clone()
            },
            points: system.space.len(),
            warnings: system.warnings,
            methods,
            discrepancy,
            discrepancy_matching_modes,
            stabilized,
        },
        sweeps,
    })
}

fn discrepancies(methods: &BTreeMap<Method, MethodSummary>) -> (Option<f64>, Option<f64>) {
    let list: Vec<&MethodSummary> = methods.values().collect();
    let mut all: Option<f64> = None;
    let mut matching: Option<f64> = None;
    for (i, a) in list.iter().enumerate() {
        for b in &list[i + 1..] {
            let d = (a.value() - b.value()).abs();
            all = Some(all.map_or(d, |x| x.max(d)));
            if a.mode == b.mode {
                matching = Some(matching.map_or(d, |x| x.max(d)));
            }
        }
    }
    (all, matching)
}

/// `method,eps,n,count,exact,log_rate`, one row per grain and horizon.
pub fn sweep_csv(estimates: &[EntropyEstimate]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "eps", "n", "count", "exact", "log_rate"])
        .expect("in-memory write");
    for e in estimates {
        for (i, (&count, &rate)) in e.rates.counts().iter().zip(&e.log_rates).enumerate() {
            w.write_record([
                e.method.to_string(),
                e.eps.to_string(),
                (i + 1).to_string(),
                count.to_string(),
                e.exact[i].to_string(),
                rate.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

/// Writes the sweep tables and `summary.json` under `cfg.out`.
pub fn write_artifacts(cfg: &RunConfig, outcome: &EstimateOutcome) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for (m, est) in &outcome.sweeps {
        if cfg.format.csv() {
            let p = cfg.out.join(format!("sweep_{m}.csv"));
            write_file(&p, &sweep_csv(est))?;
            written.push(p);
        }
        if cfg.format.json() {
            let p = cfg.out.join(format!("sweep_{m}.json"));
            let artifact = SweepArtifact {
                schema_version: SCHEMA_VERSION,
                system: cfg.system.clone(),
                method: *m,
                estimates: est.clone(),
            };
            write_file(&p, &to_json(&artifact))?;
            written.push(p);
        }
    }
    let p = cfg.out.join("summary.json");
    write_file(&p, &to_json(&outcome.summary))?;
    written.push(p);
    Ok(written)
}

/// One line per method for the terminal.
pub fn summary_lines(summary: &Summary) -> Vec<String> {
    let mut out = Vec::new();
    for (m, s) in &summary.methods {
        let mut line = format!("{m}: loglim {:.6} at eps {} ({})", s.value(), s.eps.last().expect("grid"), s.mode);
        if let Some(x) = s.extrapolation {
            line.push_str(&format!(
                ", spread {:.6}, {}",
                x.spread,
                if x.stabilized { "stabilized" } else { "not stabilized" }
            ));
        }
        out.push(line);
    }
    if let Some(d) = summary.discrepancy {
        out.push(format!("discrepancy {d:.6}"));
    }
    out
}
