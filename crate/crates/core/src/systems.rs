//! Built-in finite dynamical systems and trajectory ingestion.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{DistanceMatrix, EndoMap, FiniteMetricSpace, MetricError};

/// Largest number of points a built-in system may have.
pub const MAX_BUILTIN_POINTS: usize = 1 << 16;

#[derive(Debug, Error, PartialEq)]
pub enum SystemError {
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("{path}: row {row}: {message}")]
    FileMalformed { path: String, row: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapRule {
    /// Row `t` maps to row `t + 1`; the last row is fixed.
    #[default]
    Successor,
    /// Points with a recorded successor map to it; the others take the
    /// successor of the nearest point that has one.
    NearestImage,
}

impl std::str::FromStr for MapRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "successor" => Ok(MapRule::Successor),
            "nearest_image" | "nearest-image" => Ok(MapRule::NearestImage),
            other => Err(format!("unknown map rule {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    /// `2^m` dyadic circle points under `x ↦ 2x mod 1`.
    DyadicDoubling { m: u32 },
    /// `q` circle points under `j ↦ j + p mod q`.
    Rotation { p: usize, q: usize },
    /// All `k^l` words under the cyclic left shift.
    FullShift { k: usize, l: u32 },
    /// `2^m + 1` interval points under the tent map.
    Tent { m: u32 },
    /// A metric and map from CSV files, or a trajectory of points.
    Custom {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dist: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        map: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<PathBuf>,
        #[serde(default)]
        rule: MapRule,
    },
}

impl SystemSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SystemSpec::DyadicDoubling { .. } => "dyadic_doubling",
            SystemSpec::Rotation { .. } => "rotation",
            SystemSpec::FullShift { .. } => "full_shift",
            SystemSpec::Tent { .. } => "tent",
            SystemSpec::Custom { .. } => "custom",
        }
    }

    /// Number of points, for the built-in kinds.
    pub fn size(&self) -> Result<Option<usize>, SystemError> {
        self.validate()?;
        Ok(match *self {
            SystemSpec::DyadicDoubling { m } => Some(1 << m),
            SystemSpec::Rotation { q, .. } => Some(q),
            SystemSpec::FullShift { k, l } => Some(k.pow(l)),
            SystemSpec::Tent { m } => Some((1 << m) + 1),
            SystemSpec::Custom { .. } => None,
        })
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        let bad = |msg: String| Err(SystemError::ParamOutOfRange(msg));
        let too_big = || SystemError::ParamOutOfRange(format!("more than {MAX_BUILTIN_POINTS} points"));
        match *self {
            SystemSpec::DyadicDoubling { m } | SystemSpec::Tent { m } => {
                if m < 2 {
                    return bad(format!("m = {m}, need m >= 2"));
                }
                if m > 16 {
                    return Err(too_big());
                }
            }
            SystemSpec::Rotation { p, q } => {
                if !(1 <= p && p < q) {
                    return bad(format!("p = {p}, q = {q}, need 1 <= p < q"));
                }
                if q > MAX_BUILTIN_POINTS {
                    return Err(too_big());
                }
            }
            SystemSpec::FullShift { k, l } => {
                if k < 2 || l < 2 {
                    return bad(format!("k = {k}, l = {l}, need k >= 2 and l >= 2"));
                }
                match k.checked_pow(l) {
                    Some(n) if n <= MAX_BUILTIN_POINTS => {}
                    _ => return Err(too_big()),
                }
            }
            SystemSpec::Custom {
                ref dist,
                ref map,
                ref points,
                ..
            } => match (dist, map, points) {
                (Some(_), Some(_), None) | (None, None, Some(_)) => {}
                _ => return bad("custom systems need either dist and map, or points".into()),
            },
        }
        Ok(())
    }
}

/// A built or ingested system.
#[derive(Clone, Debug)]
pub struct System {
    pub space: FiniteMetricSpace,
    pub map: EndoMap,
    /// Non-fatal notes from ingestion, such as collapsed duplicates.
    pub warnings: Vec<String>,
}

pub fn build_system(spec: &SystemSpec) -> Result<System, SystemError> {
    spec.validate()?;
    let (dist, image) = match *spec {
        SystemSpec::DyadicDoubling { m } => {
            let n = 1usize << m;
            (circle(n), (0..n).map(|j| (2 * j) % n).collect())
        }
        SystemSpec::Rotation { p, q } => (circle(q), (0..q).map(|j| (j + p) % q).collect()),
        SystemSpec::FullShift { k, l } => full_shift(k, l),
        SystemSpec::Tent { m } => {
            let n = 1usize << m;
            let dist = DistanceMatrix::from_fn(n + 1, |i, j| i.abs_diff(j) as f64 / n as f64);
            let image = (0..=n).map(|j| if 2 * j <= n { 2 * j } else { 2 * n - 2 * j }).collect();
            (dist, image)
        }
        SystemSpec::Custom {
            ref dist,
            ref map,
            ref points,
            rule,
        } => {
            if let Some(points) = points {
                return ingest_trajectory(points, rule);
            }
            let space = FiniteMetricSpace::read_csv(dist.as_ref().expect("validated"))?;
            let map = EndoMap::read_csv(map.as_ref().expect("validated"))?;
            map.check_space(&space)?;
            return Ok(System {
                space,
                map,
                warnings: Vec::new(),
            });
        }
    };
    Ok(System {
        space: FiniteMetricSpace::from_trusted(dist)?,
        map: EndoMap::new(image)?,
        warnings: Vec::new(),
    })
}

/// `n` equally spaced circle points, arc length rescaled so antipodes are at 1.
fn circle(n: usize) -> DistanceMatrix {
    let half = (n / 2) as f64;
    DistanceMatrix::from_fn(n, |i, j| {
        let k = i.abs_diff(j);
        k.min(n - k) as f64 / half
    })
}

/// Words are base-`k` numerals with the first symbol most significant.
/// `d(u, v) = k^-i` at the first disagreement `i` (0-based).
fn full_shift(k: usize, l: u32) -> (DistanceMatrix, Vec<usize>) {
    let n = k.pow(l);
    let top = n / k;
    let weights: Vec<f64> = (0..l as i32).map(|i| (k as f64).powi(-i)).collect();
    let dist = DistanceMatrix::from_fn(n, |u, v| {
        if u == v {
            return 0.0;
        }
        // the first disagreement is the highest differing base-k digit
        let mut i = 0;
        let mut place = top;
        while u / place % k == v / place % k {
            place /= k;
            i += 1;
        }
        weights[i]
    });
    let image = (0..n).map(|w| (w % top) * k + w / top).collect();
    (dist, image)
}

/// Reads one point per row (no header) and builds the Euclidean space,
/// normalized to diameter 1, with the endomap given by `rule`.
pub fn ingest_trajectory(path: impl AsRef<Path>, rule: MapRule) -> Result<System, SystemError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| SystemError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    trajectory_from_reader(file, &path.display().to_string(), rule)
}

pub fn trajectory_from_reader(reader: impl Read, source: &str, rule: MapRule) -> Result<System, SystemError> {
    let malformed = |row: usize, message: String| SystemError::FileMalformed {
        path: source.to_string(),
        row,
        message,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    for (r, record) in csv.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| malformed(row, e.to_string()))?;
        let coords = record
            .iter()
            .enumerate()
            .map(|(c, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(malformed(row, format!("column {}: not a finite number: {field:?}", c + 1))),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(first) = rows.first() {
            if coords.len() != first.len() {
                return Err(malformed(
                    row,
                    format!("{} coordinates, expected {}", coords.len(), first.len()),
                ));
            }
        } else if coords.is_empty() {
            return Err(malformed(row, "empty row".into()));
        }
        rows.push(coords);
    }
    if rows.is_empty() {
        return Err(malformed(0, "no points".into()));
    }

    // class[t]: index of the distinct point at row t
    let mut warnings = Vec::new();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut class = Vec::with_capacity(rows.len());
    for (t, r) in rows.iter().enumerate() {
        match points.iter().position(|p| p == r) {
            Some(c) => {
                warnings.push(format!("DuplicatePoints: row {} repeats row {}", t + 1, first_row(&class, c) + 1));
                class.push(c);
            }
            None => {
                class.push(points.len());
                points.push(r.clone());
            }
        }
    }

    let n = points.len();
    let euclid = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let mut dist = DistanceMatrix::from_fn(n, |i, j| euclid(&points[i], &points[j]));
    let diam = dist.max_entry();
    if diam > 0.0 {
        dist = DistanceMatrix::from_fn(n, |i, j| dist.get(i, j) / diam);
    }

    // successor of each class, from its first occurrence that has one
    let mut next: Vec<Option<usize>> = vec![None; n];
    for t in 0..rows.len().saturating_sub(1) {
        let (c, s) = (class[t], class[t + 1]);
        match next[c] {
            None => next[c] = Some(s),
            Some(prev) if prev != s => warnings.push(format!(
                "row {} has successor row {}, but the point already maps elsewhere; keeping the first",
                t + 1,
                t + 2
            )),
            _ => {}
        }
    }
    let image: Vec<usize> = match rule {
        MapRule::Successor => (0..n).map(|c| next[c].unwrap_or(c)).collect(),
        MapRule::NearestImage => (0..n)
            .map(|c| {
                next[c].unwrap_or_else(|| {
                    (0..n)
                        .filter(|&o| next[o].is_some())
                        .min_by(|&a, &b| dist.get(c, a).total_cmp(&dist.get(c, b)))
                        .and_then(|o| next[o])
                        .unwrap_or(c)
                })
            })
            .collect(),
    };
    Ok(System {
        space: FiniteMetricSpace::from_trusted(dist)?,
        map: EndoMap::new(image)?,
        warnings,
    })
}

fn first_row(class: &[usize], c: usize) -> usize {
    class.iter().position(|&k| k == c).expect("class seen")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::bowen_metric;

    #[test]
    fn rotation_is_an_isometry() {
        let s = build_system(&SystemSpec::Rotation { p: 1, q: 4 }).unwrap();
        assert_eq!(s.space.len(), 4);
        assert!(s.map.is_isometry(&s.space));
        for n in 1..5 {
            assert_eq!(bowen_metric(&s.space, &s.map, n).unwrap().matrix(), s.space.matrix());
        }
    }

    #[test]
    fn doubling_orbit_of_one_eighth() {
        let s = build_system(&SystemSpec::DyadicDoubling { m: 3 }).unwrap();
        assert_eq!(s.space.len(), 8);
        let mut j = 1;
        let mut seen = Vec::new();
        for _ in 0..3 {
            seen.push(j as f64 / 8.0);
            j = s.map.apply(j);
        }
        assert_eq!(seen, vec![0.125, 0.25, 0.5]);
        assert_eq!(s.space.dist(0, 4), 1.0);
        assert_eq!(s.space.dist(1, 7), 0.5);
    }

    #[test]
    fn shift_rotates_words() {
        let s = build_system(&SystemSpec::FullShift { k: 2, l: 3 }).unwrap();
        assert_eq!(s.space.len(), 8);
        // 011 -> 110
        assert_eq!(s.map.apply(0b011), 0b110);
        assert_eq!(s.space.dist(0b000, 0b100), 1.0);
        assert_eq!(s.space.dist(0b000, 0b010), 0.5);
        assert_eq!(s.space.dist(0b000, 0b001), 0.25);
        s.space.matrix().check_metric().unwrap();
    }

    #[test]
    fn tent_folds() {
        let s = build_system(&SystemSpec::Tent { m: 2 }).unwrap();
        assert_eq!(s.map.image(), &[0, 2, 4, 2, 0]);
    }

    #[test]
    fn parameter_ranges() {
        for spec in [
            SystemSpec::DyadicDoubling { m: 1 },
            SystemSpec::Rotation { p: 0, q: 4 },
            SystemSpec::Rotation { p: 4, q: 4 },
            SystemSpec::FullShift { k: 1, l: 3 },
            SystemSpec::FullShift { k: 2, l: 1 },
            SystemSpec::FullShift { k: 2, l: 40 },
        ] {
            assert!(matches!(build_system(&spec), Err(SystemError::ParamOutOfRange(_))), "{spec:?}");
        }
    }

    #[test]
    fn spec_json_shape() {
        let spec: SystemSpec = serde_json::from_str(r#"{"kind":"rotation","p":1,"q":5}"#).unwrap();
        assert_eq!(spec, SystemSpec::Rotation { p: 1, q: 5 });
        let back = serde_json::to_string(&SystemSpec::DyadicDoubling { m: 4 }).unwrap();
        assert_eq!(back, r#"{"kind":"dyadic_doubling","m":4}"#);
    }

    #[test]
    fn duplicates_collapse() {
        let s = trajectory_from_reader("0.5,1\n0.5,1\n".as_bytes(), "t", MapRule::Successor).unwrap();
        assert_eq!(s.space.len(), 1);
        assert_eq!(s.warnings.len(), 1);
        assert!(s.warnings[0].starts_with("DuplicatePoints"));
    }

    #[test]
    fn collinear_spacing_normalizes() {
        let s = trajectory_from_reader("0\n1\n2\n".as_bytes(), "t", MapRule::Successor).unwrap();
        assert_eq!(s.space.dist(0, 1), 0.5);
        assert_eq!(s.map.image(), &[1, 2, 2]);
        let s = trajectory_from_reader("0\n1\n2\n".as_bytes(), "t", MapRule::NearestImage).unwrap();
        // the last point borrows the successor of its neighbour
        assert_eq!(s.map.image(), &[1, 2, 2]);
        let s = trajectory_from_reader("0\n2\n0.1\n".as_bytes(), "t", MapRule::NearestImage).unwrap();
        assert_eq!(s.map.image(), &[1, 2, 1]);
    }

    #[test]
    fn malformed_rows_name_the_row() {
        let err = trajectory_from_reader("0,1\n0,x\n".as_bytes(), "t", MapRule::Successor).unwrap_err();
        assert!(matches!(err, SystemError::FileMalformed { row: 2, .. }), "{err}");
        let err = trajectory_from_reader("0,1\n0\n".as_bytes(), "t", MapRule::Successor).unwrap_err();
        assert!(matches!(err, SystemError::FileMalformed { row: 2, .. }), "{err}");
    }
}
