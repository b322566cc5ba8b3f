//! Finite metric spaces, self-maps and their Bowen refinement metrics.

use std::io::Read;
use std::path::Path;

use thiserror::Error;

/// Absolute tolerance for symmetry and triangle checks.
pub const METRIC_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("distance matrix is empty")]
    EmptySpace,
    #[error("row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("entry ({i}, {j}) is not a finite non-negative number: {value}")]
    InvalidEntry { i: usize, j: usize, value: f64 },
    #[error("diagonal entry ({i}, {i}) is {value}, expected 0")]
    NonZeroDiagonal { i: usize, value: f64 },
    #[error("asymmetric distances: d({i},{j}) = {dij} but d({j},{i}) = {dji}")]
    MetricAsymmetric { i: usize, j: usize, dij: f64, dji: f64 },
    #[error("triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error("map sends point {index} to {value}, outside 0..{size}")]
    MapOutOfRange { index: usize, value: usize, size: usize },
    #[error("map has {map_len} entries but the space has {space_len} points")]
    MapSizeMismatch { map_len: usize, space_len: usize },
    #[error("point {index} out of range 0..{size}")]
    PointOutOfRange { index: usize, size: usize },
    #[error("{path}: row {row}, column {col}: {message}")]
    Csv {
        path: String,
        row: usize,
        col: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Dense symmetric distance matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Wraps row-major data without validation.
    pub fn from_raw(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "distance data must be n*n");
        DistanceMatrix { n, data }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        DistanceMatrix { n, data }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Checks zero diagonal, symmetry and the triangle inequality.
    pub fn check_metric(&self) -> Result<(), MetricError> {
        self.check_entries()?;
        self.check_triangle()
    }

    fn check_entries(&self) -> Result<(), MetricError> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let v = self.get(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(MetricError::InvalidEntry { i, j, value: v });
                }
            }
            let dii = self.get(i, i);
            if dii != 0.0 {
                return Err(MetricError::NonZeroDiagonal { i, value: dii });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (dij, dji) = (self.get(i, j), self.get(j, i));
                if (dij - dji).abs() > METRIC_TOL {
                    return Err(MetricError::MetricAsymmetric { i, j, dij, dji });
                }
            }
        }
        Ok(())
    }

    fn check_triangle(&self) -> Result<(), MetricError> {
        let n = self.n;
        for i in 0..n {
            let ri = self.row(i);
            for j in 0..n {
                let dij = ri[j];
                let rj = self.row(j);
                if ri.iter().zip(rj).any(|(&dik, &djk)| dik > dij + djk + METRIC_TOL) {
                    let k = (0..n)
                        .find(|&k| ri[k] > dij + rj[k] + METRIC_TOL)
                        .expect("violating index");
                    return Err(MetricError::TriangleViolation { i, j, k });
                }
            }
        }
        Ok(())
    }
}

/// A finite metric space of diameter at most one.
///
/// Points are identified by their index `0..len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    dist: DistanceMatrix,
    scale: f64,
}

impl FiniteMetricSpace {
    /// Validates a square distance matrix. Matrices with diameter above one are
    /// rescaled by `1 / max`, and the factor is recorded in [`scale`](Self::scale).
    pub fn validate(rows: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = rows.len();
        if n == 0 {
            return Err(MetricError::EmptySpace);
        }
        let mut data = Vec::with_capacity(n * n);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(MetricError::NotSquare {
                    row,
                    len: r.len(),
                    expected: n,
                });
            }
            data.extend_from_slice(r);
        }
        Self::validate_matrix(DistanceMatrix::from_raw(n, data))
    }

    pub fn validate_matrix(mut dist: DistanceMatrix) -> Result<Self, MetricError> {
        if dist.is_empty() {
            return Err(MetricError::EmptySpace);
        }
        dist.check_entries()?;
        let max = dist.max_entry();
        let mut scale = 1.0;
        if max > 1.0 {
            scale = 1.0 / max;
            for v in dist.data.iter_mut() {
                *v *= scale;
            }
        }
        dist.check_triangle()?;
        Ok(FiniteMetricSpace { dist, scale })
    }

    /// Builds a space from a matrix the caller guarantees to be a metric of
    /// diameter at most one. Only the O(n²) entry checks run; the O(n³)
    /// triangle scan is skipped.
    pub fn from_trusted(dist: DistanceMatrix) -> Result<Self, MetricError> {
        if dist.is_empty() {
            return Err(MetricError::EmptySpace);
        }
        dist.check_entries()?;
        debug_assert!(dist.max_entry() <= 1.0 + METRIC_TOL);
        Ok(FiniteMetricSpace { dist, scale: 1.0 })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dist.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist.get(i, j)
    }

    pub fn matrix(&self) -> &DistanceMatrix {
        &self.dist
    }

    /// Factor applied to the input distances during validation (1 if none).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn diameter(&self) -> f64 {
        self.dist.max_entry()
    }

    /// Same space, tested by pointer first and then by value.
    pub fn same_as(&self, other: &FiniteMetricSpace) -> bool {
        std::ptr::eq(self, other) || self.dist == other.dist
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, MetricError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| MetricError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_csv_reader(file, &path.display().to_string())
    }

    /// Parses `dist.csv`: N rows of N decimals, no header.
    pub fn from_csv_reader(reader: impl Read, source: &str) -> Result<Self, MetricError> {
        let rows = read_float_rows(reader, source)?;
        Self::validate(&rows)
    }
}

pub(crate) fn read_float_rows(reader: impl Read, source: &str) -> Result<Vec<Vec<f64>>, MetricError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| MetricError::Csv {
            path: source.to_string(),
            row,
            col: 0,
            message: e.to_string(),
        })?;
        let mut vals = Vec::with_capacity(rec.len());
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| MetricError::Csv {
                path: source.to_string(),
                row,
                col,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(MetricError::Csv {
                    path: source.to_string(),
                    row,
                    col,
                    message: format!("non-finite value {field:?}"),
                });
            }
            vals.push(v);
        }
        rows.push(vals);
    }
    if let Some(first) = rows.first() {
        let width = first.len();
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(MetricError::Csv {
                path: source.to_string(),
                row,
                col: r.len().min(width),
                message: format!("expected {width} columns, found {}", r.len()),
            });
        }
    }
    Ok(rows)
}

/// A total self-map on the points of a finite space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndoMap {
    image: Vec<usize>,
}

impl EndoMap {
    pub fn new(image: Vec<usize>) -> Result<Self, MetricError> {
        let size = image.len();
        if let Some((index, &value)) = image.iter().enumerate().find(|(_, &v)| v >= size) {
            return Err(MetricError::MapOutOfRange { index, value, size });
        }
        Ok(EndoMap { image })
    }

    pub fn identity(n: usize) -> Self {
        EndoMap {
            image: (0..n).collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.image.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    /// The t-fold iterate as a new map.
    pub fn power(&self, t: usize) -> EndoMap {
        let mut image: Vec<usize> = (0..self.len()).collect();
        for _ in 0..t {
            for v in image.iter_mut() {
                *v = self.image[*v];
            }
        }
        EndoMap { image }
    }

    pub fn check_space(&self, space: &FiniteMetricSpace) -> Result<(), MetricError> {
        if self.len() != space.len() {
            return Err(MetricError::MapSizeMismatch {
                map_len: self.len(),
                space_len: space.len(),
            });
        }
        Ok(())
    }

    /// True when `d(f i, f j) == d(i, j)` for every pair, compared exactly.
    pub fn is_isometry(&self, space: &FiniteMetricSpace) -> bool {
        let n = space.len();
        self.len() == n
            && (0..n).all(|i| {
                (0..n).all(|j| space.dist(self.image[i], self.image[j]) == space.dist(i, j))
            })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, MetricError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| MetricError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_csv_reader(file, &path.display().to_string())
    }

    /// Parses `map.csv`: one 0-based integer per row.
    pub fn from_csv_reader(reader: impl Read, source: &str) -> Result<Self, MetricError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut image = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| MetricError::Csv {
                path: source.to_string(),
                row,
                col: 0,
                message: e.to_string(),
            })?;
            if rec.len() != 1 {
                return Err(MetricError::Csv {
                    path: source.to_string(),
                    row,
                    col: rec.len().min(1),
                    message: format!("expected a single column, found {}", rec.len()),
                });
            }
            let v: usize = rec[0].parse().map_err(|_| MetricError::Csv {
                path: source.to_string(),
                row,
                col: 0,
                message: format!("cannot parse {:?} as a point index", &rec[0]),
            })?;
            image.push(v);
        }
        EndoMap::new(image)
    }
}

/// The metric `d_n(x, y) = max_{0 <= t < n} d(f^t x, f^t y)`.
#[derive(Clone, Debug)]
pub struct BowenMetric<'a> {
    space: &'a FiniteMetricSpace,
    map: &'a EndoMap,
    horizon: usize,
    dist: DistanceMatrix,
}

impl<'a> BowenMetric<'a> {
    pub fn space(&self) -> &'a FiniteMetricSpace {
        self.space
    }

    pub fn map(&self) -> &'a EndoMap {
        self.map
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn matrix(&self) -> &DistanceMatrix {
        &self.dist
    }

    pub fn into_matrix(self) -> DistanceMatrix {
        self.dist
    }

    /// Re-runs the full metric validator on the refined matrix.
    pub fn validate(&self) -> Result<(), MetricError> {
        self.dist.check_metric()
    }

    /// Horizon `n + 1` from horizon `n` via `d_{n+1}(x,y) = max(d(x,y), d_n(fx, fy))`.
    pub fn step(&self) -> BowenMetric<'a> {
        BowenMetric {
            space: self.space,
            map: self.map,
            horizon: self.horizon + 1,
            dist: refine_once(self.space.matrix(), self.map, &self.dist),
        }
    }
}

fn refine_once(base: &DistanceMatrix, map: &EndoMap, prev: &DistanceMatrix) -> DistanceMatrix {
    let n = base.len();
    let mut data = vec![0.0; n * n];
    for x in 0..n {
        let fx = map.apply(x);
        let prev_row = prev.row(fx);
        let base_row = base.row(x);
        let out = &mut data[x * n..(x + 1) * n];
        for y in 0..n {
            out[y] = base_row[y].max(prev_row[map.apply(y)]);
        }
    }
    DistanceMatrix { n, data }
}

pub fn bowen_metric<'a>(
    space: &'a FiniteMetricSpace,
    map: &'a EndoMap,
    n: usize,
) -> Result<BowenMetric<'a>, MetricError> {
    if n == 0 {
        return Err(MetricError::InvalidHorizon);
    }
    map.check_space(space)?;
    let mut metric = BowenMetric {
        space,
        map,
        horizon: 1,
        dist: space.matrix().clone(),
    };
    for _ in 1..n {
        metric = metric.step();
    }
    Ok(metric)
}

/// Iterates the Bowen metrics `d_1, d_2, ...` without rebuilding from scratch.
pub fn bowen_sequence<'a>(
    space: &'a FiniteMetricSpace,
    map: &'a EndoMap,
) -> Result<impl Iterator<Item = BowenMetric<'a>>, MetricError> {
    let first = bowen_metric(space, map, 1)?;
    Ok(std::iter::successors(Some(first), |m| Some(m.step())))
}

pub fn orbit(
    space: &FiniteMetricSpace,
    map: &EndoMap,
    start: usize,
    length: usize,
) -> Result<Vec<usize>, MetricError> {
    map.check_space(space)?;
    if start >= space.len() {
        return Err(MetricError::PointOutOfRange {
            index: start,
            size: space.len(),
        });
    }
    if length == 0 {
        return Err(MetricError::InvalidHorizon);
    }
    let mut out = Vec::with_capacity(length);
    let mut x = start;
    out.push(x);
    for _ in 1..length {
        x = map.apply(x);
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize) -> FiniteMetricSpace {
        // diameter-normalized circle metric on n equally spaced points
        let half = (n / 2) as f64;
        FiniteMetricSpace::validate_matrix(DistanceMatrix::from_fn(n, |i, j| {
            let k = i.abs_diff(j);
            k.min(n - k) as f64 / half
        }))
        .unwrap()
    }

    fn doubling(n: usize) -> EndoMap {
        EndoMap::new((0..n).map(|j| (2 * j) % n).collect()).unwrap()
    }

    #[test]
    fn singleton_space() {
        let s = FiniteMetricSpace::validate(&[vec![0.0]]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.diameter(), 0.0);
        assert_eq!(s.scale(), 1.0);
    }

    #[test]
    fn rescales_large_diameter() {
        let s = FiniteMetricSpace::validate(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(s.matrix().to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(s.scale(), 0.5);
    }

    #[test]
    fn rejects_bad_matrices() {
        let e = FiniteMetricSpace::validate(&[vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap_err();
        assert!(matches!(e, MetricError::MetricAsymmetric { i: 0, j: 1, .. }));
        assert_eq!(FiniteMetricSpace::validate(&[]), Err(MetricError::EmptySpace));
        let tri = vec![
            vec![0.0, 0.1, 1.0],
            vec![0.1, 0.0, 0.1],
            vec![1.0, 0.1, 0.0],
        ];
        assert!(matches!(
            FiniteMetricSpace::validate(&tri),
            Err(MetricError::TriangleViolation { .. })
        ));
        assert!(matches!(
            FiniteMetricSpace::validate(&[vec![0.0, 1.0], vec![1.0]]),
            Err(MetricError::NotSquare { row: 1, .. })
        ));
        assert!(matches!(
            FiniteMetricSpace::validate(&[vec![0.0, -1.0], vec![-1.0, 0.0]]),
            Err(MetricError::InvalidEntry { .. })
        ));
    }

    #[test]
    fn asymmetry_within_tolerance_is_accepted() {
        let s = FiniteMetricSpace::validate(&[vec![0.0, 0.5], vec![0.5 + 1e-13, 0.0]]);
        assert!(s.is_ok());
    }

    #[test]
    fn horizon_zero_is_rejected() {
        let s = circle(4);
        let f = EndoMap::identity(4);
        assert_eq!(bowen_metric(&s, &f, 0).unwrap_err(), MetricError::InvalidHorizon);
    }

    #[test]
    fn horizon_one_is_base_metric() {
        let s = circle(8);
        let f = doubling(8);
        assert_eq!(bowen_metric(&s, &f, 1).unwrap().matrix(), s.matrix());
        let id = EndoMap::identity(8);
        assert_eq!(bowen_metric(&s, &id, 5).unwrap().matrix(), s.matrix());
    }

    #[test]
    fn doubling_on_four_points_two_steps() {
        // grid {0, 1/4, 1/2, 3/4}; circle distances normalized by 1/2
        let s = circle(4);
        let f = doubling(4);
        let d2 = bowen_metric(&s, &f, 2).unwrap();
        // d(0,1) = 0.5 and d(f0, f1) = d(0, 2) = 1
        let expected = [
            [0.0, 1.0, 1.0, 1.0],
            [1.0, 0.0, 1.0, 1.0],
            [1.0, 1.0, 0.0, 1.0],
            [1.0, 1.0, 1.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(d2.matrix().get(i, j), expected[i][j], "({i},{j})");
            }
        }
        // brute-force t-loop agrees
        for i in 0..4 {
            for j in 0..4 {
                let direct = (0..2)
                    .map(|t| {
                        let ft = f.power(t);
                        s.dist(ft.apply(i), ft.apply(j))
                    })
                    .fold(0.0, f64::max);
                assert_eq!(d2.matrix().get(i, j), direct);
            }
        }
        d2.validate().unwrap();
    }

    #[test]
    fn orbit_examples() {
        let s = circle(8);
        let f = doubling(8);
        assert_eq!(orbit(&s, &f, 1, 3).unwrap(), vec![1, 2, 4]);
        assert_eq!(orbit(&s, &f, 3, 1).unwrap(), vec![3]);
        let id = EndoMap::identity(8);
        assert_eq!(orbit(&s, &id, 5, 3).unwrap(), vec![5, 5, 5]);
        assert!(orbit(&s, &f, 9, 2).is_err());
    }

    #[test]
    fn map_validation() {
        assert!(matches!(
            EndoMap::new(vec![0, 3, 1]),
            Err(MetricError::MapOutOfRange { index: 1, value: 3, size: 3 })
        ));
    }

    #[test]
    fn csv_errors_carry_coordinates() {
        let e = FiniteMetricSpace::from_csv_reader("0,1\n1,x\n".as_bytes(), "dist.csv").unwrap_err();
        assert!(matches!(e, MetricError::Csv { row: 1, col: 1, .. }), "{e}");
        let e = FiniteMetricSpace::from_csv_reader("0,1\n1\n".as_bytes(), "dist.csv").unwrap_err();
        assert!(matches!(e, MetricError::Csv { row: 1, .. }), "{e}");
        let e = EndoMap::from_csv_reader("0\n1,2\n".as_bytes(), "map.csv").unwrap_err();
        assert!(matches!(e, MetricError::Csv { row: 1, col: 1, .. }), "{e}");
        let m = EndoMap::from_csv_reader("1\n0\n".as_bytes(), "map.csv").unwrap();
        assert_eq!(m.image(), &[1, 0]);
    }
}
