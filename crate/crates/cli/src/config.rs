//! Run configuration: a JSON file whose fields can be overridden by flags.

use std::path::{Path, PathBuf};

use entrolab_core::complexity::{check_grid, Method, Window, DEFAULT_STABILITY_TOL};
use entrolab_core::solver::{SolveMode, SolverOptions};
use entrolab_core::systems::{MapRule, SystemSpec};
use serde::{Deserialize, Serialize};

use crate::{CliError, SCHEMA_VERSION};

/// Node budget for exact searches unless configured otherwise. Cells that
/// exhaust it fall back to greedy.
pub const DEFAULT_BUDGET: u64 = 20_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "both" => Ok(Format::Both),
            other => Err(format!("unknown format {other:?}, expected csv, json or both")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub system: SystemSpec,
    pub methods: Vec<Method>,
    /// Strictly decreasing, in `(0, 1]`.
    pub eps_grid: Vec<f64>,
    pub n_max: usize,
    pub solver: SolverOptions,
    /// Defaults to the upper half of `1..=n_max`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    /// Not recorded in artifacts, so runs into different directories match.
    #[serde(skip_serializing_if = "is_unset")]
    pub out: PathBuf,
    pub format: Format,
    pub stability_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            system: SystemSpec::DyadicDoubling { m: 11 },
            methods: Method::ALL.to_vec(),
            eps_grid: vec![0.125, 0.0625, 0.03125, 0.015625],
            n_max: 7,
            solver: SolverOptions::exact(DEFAULT_BUDGET),
            window: None,
            out: PathBuf::from("entrolab-out"),
            format: Format::Both,
            stability_tol: DEFAULT_STABILITY_TOL,
        }
    }
}

fn is_unset(p: &Path) -> bool {
    p.as_os_str().is_empty()
}

/// Flag values that replace config-file fields when present.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub system: Option<String>,
    pub eps_grid: Option<String>,
    pub n_max: Option<usize>,
    pub mode: Option<SolveMode>,
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        cfg.apply(overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(s) = &o.system {
            self.system = parse_system(s)?;
        }
        if let Some(g) = &o.eps_grid {
            self.eps_grid = parse_grid(g)?;
        }
        if let Some(n) = o.n_max {
            self.n_max = n;
        }
        if let Some(m) = o.mode {
            self.solver.mode = m;
        }
        if let Some(b) = o.budget {
            self.solver.budget = b;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.methods.is_empty() {
            return Err(CliError::Config("methods must not be empty".into()));
        }
        check_grid(&self.eps_grid).map_err(|e| CliError::Config(format!("eps_grid: {e}")))?;
        if self.n_max < 2 {
            return Err(CliError::Config(format!("n_max = {} must be at least 2", self.n_max)));
        }
        if let Some(w) = self.window {
            if w.lo == 0 || w.lo > w.hi || w.hi > self.n_max {
                return Err(CliError::Config(format!(
                    "window {}..={} must lie in 1..={}",
                    w.lo, w.hi, self.n_max
                )));
            }
        }
        if self.stability_tol.is_nan() || self.stability_tol < 0.0 {
            return Err(CliError::Config("stability_tol must be non-negative".into()));
        }
        self.system
            .validate()
            .map_err(|e| CliError::Config(format!("system: {e}")))?;
        Ok(())
    }
}

/// `a,b,c` as a list of grains.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| CliError::Config(format!("eps grid entry {t:?} is not a number")))
        })
        .collect()
}

/// `KIND` or `KIND:key=value,...`; omitted parameters take the defaults
/// below.
pub fn parse_system(s: &str) -> Result<SystemSpec, CliError> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut params = std::collections::BTreeMap::new();
    for kv in rest.split(',').filter(|t| !t.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("system parameter {kv:?} is not key=value")))?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut take = |key: &str, default: usize| -> Result<usize, CliError> {
        match params.remove(key) {
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Config(format!("system parameter {key} = {v:?} is not an integer"))),
            None => Ok(default),
        }
    };
    let spec = match kind {
        "dyadic_doubling" => SystemSpec::DyadicDoubling { m: take("m", 11)? as u32 },
        "rotation" => SystemSpec::Rotation {
            p: take("p", 1)?,
            q: take("q", 509)?,
        },
        "full_shift" => SystemSpec::FullShift {
            k: take("k", 2)?,
            l: take("l", 12)? as u32,
        },
        "tent" => SystemSpec::Tent { m: take("m", 11)? as u32 },
        "custom" => {
            let rule = match params.remove("rule") {
                Some(r) => r.parse::<MapRule>().map_err(CliError::Config)?,
                None => MapRule::default(),
            };
            SystemSpec::Custom {
                dist: params.remove("dist").map(PathBuf::from),
                map: params.remove("map").map(PathBuf::from),
                points: params.remove("points").map(PathBuf::from),
                rule,
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown system kind {other:?}, expected dyadic_doubling, rotation, full_shift, tent or custom"
            )))
        }
    };
    if let Some(k) = params.keys().next() {
        return Err(CliError::Config(format!("unknown parameter {k:?} for system {kind}")));
    }
    Ok(spec)
}
