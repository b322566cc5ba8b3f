//! Covers of a finite metric space and the coarser-than preorder on them.
//!
//! `a` is coarser than `b` when every piece of `b` sits inside some piece of
//! `a`. Pieces are closed point subsets; a uniform disk cover is the family of
//! all closed balls `B(x, r) = {y : d(x, y) <= r}` of one radius.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::BitSet;
use crate::metric::{EndoMap, FiniteMetricSpace, MetricError};
use crate::solver::{self, CountResult, SolverError, SolverOptions};

/// Expansion factor used to build a coarser disk cover of guaranteed
/// Lebesgue number.
pub const DEFAULT_EXPANSION: f64 = 2.01;

#[derive(Debug, Error, PartialEq)]
pub enum CoverError {
    #[error("covers live on different spaces")]
    SpaceMismatch,
    #[error("piece {0} is empty")]
    EmptyPiece(usize),
    #[error("point {0} is not covered by any piece")]
    NotCovering(usize),
    #[error("point {index} out of range 0..{size}")]
    PointOutOfRange { index: usize, size: usize },
    #[error("grain {0} outside (0, 1]")]
    InvalidGrain(f64),
    #[error("expansion factor {0} must exceed 1")]
    InvalidFactor(f64),
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// A finite family of non-empty, pairwise distinct point subsets whose union is
/// the whole space.
#[derive(Clone, Debug)]
pub struct Cover<'a> {
    space: &'a FiniteMetricSpace,
    pieces: Vec<BitSet>,
}

/// JSON form of a cover: `{"pieces": [[indices...], ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverRecord {
    pub pieces: Vec<Vec<usize>>,
}

/// Below this many pieces a linear scan beats hashing.
const SMALL_DEDUP: usize = 32;

fn dedup(pieces: Vec<BitSet>) -> Vec<BitSet> {
    if pieces.len() <= SMALL_DEDUP {
        let mut kept: Vec<BitSet> = Vec::with_capacity(pieces.len());
        for p in pieces {
            if !p.is_empty() && !kept.contains(&p) {
                kept.push(p);
            }
        }
        return kept;
    }
    let mut seen = HashSet::new();
    pieces
        .into_iter()
        .filter(|p| !p.is_empty() && seen.insert(p.clone()))
        .collect()
}

impl<'a> Cover<'a> {
    pub fn new(space: &'a FiniteMetricSpace, pieces: Vec<BitSet>) -> Result<Self, CoverError> {
        let n = space.len();
        let mut union = BitSet::new(n);
        for (i, p) in pieces.iter().enumerate() {
            if p.capacity() != n {
                return Err(CoverError::SpaceMismatch);
            }
            if p.is_empty() {
                return Err(CoverError::EmptyPiece(i));
            }
            union.union_with(p);
        }
        if let Some(missing) = union.complement().first() {
            return Err(CoverError::NotCovering(missing));
        }
        Ok(Cover {
            space,
            pieces: dedup(pieces),
        })
    }

    pub fn from_indices(space: &'a FiniteMetricSpace, pieces: &[Vec<usize>]) -> Result<Self, CoverError> {
        let n = space.len();
        let mut sets = Vec::with_capacity(pieces.len());
        for p in pieces {
            if let Some(&index) = p.iter().find(|&&i| i >= n) {
                return Err(CoverError::PointOutOfRange { index, size: n });
            }
            sets.push(BitSet::from_indices(n, p.iter().copied()));
        }
        Cover::new(space, sets)
    }

    pub fn from_record(space: &'a FiniteMetricSpace, record: &CoverRecord) -> Result<Self, CoverError> {
        Cover::from_indices(space, &record.pieces)
    }

    pub fn to_record(&self) -> CoverRecord {
        CoverRecord {
            pieces: self.pieces.iter().map(BitSet::to_vec).collect(),
        }
    }

    /// The one-piece cover `{X}`.
    pub fn trivial(space: &'a FiniteMetricSpace) -> Self {
        Cover {
            space,
            pieces: vec![BitSet::full(space.len())],
        }
    }

    /// All singletons.
    pub fn discrete(space: &'a FiniteMetricSpace) -> Self {
        let n = space.len();
        Cover {
            space,
            pieces: (0..n).map(|i| BitSet::from_indices(n, [i])).collect(),
        }
    }

    pub fn space(&self) -> &'a FiniteMetricSpace {
        self.space
    }

    pub fn pieces(&self) -> &[BitSet] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    fn check_same(&self, other: &Cover<'_>) -> Result<(), CoverError> {
        if self.space.same_as(other.space) {
            Ok(())
        } else {
            Err(CoverError::SpaceMismatch)
        }
    }

    /// Keeps only the pieces not strictly contained in another piece.
    ///
    /// The result is order-equivalent to `self` (mutually coarser) and has the
    /// same minimal subcover size.
    pub fn reduced(&self) -> Cover<'a> {
        Cover {
            space: self.space,
            pieces: maximal_pieces(self.pieces.clone(), self.space.len()),
        }
    }

    /// Mutual coarseness.
    pub fn equivalent(&self, other: &Cover<'_>) -> Result<bool, CoverError> {
        Ok(coarser_than(self, other)? && coarser_than(other, self)?)
    }
}

/// Drops duplicate pieces and pieces strictly inside another one.
pub(crate) fn maximal_pieces(pieces: Vec<BitSet>, n: usize) -> Vec<BitSet> {
    let mut pieces = dedup(pieces);
    // larger pieces first; stable, so ties keep their original order
    pieces.sort_by_key(|p| std::cmp::Reverse(p.count()));
    let mut kept: Vec<BitSet> = Vec::new();
    let mut by_point: Vec<Vec<usize>> = vec![Vec::new(); n];
    for p in pieces {
        // any superset must contain the rarest member of p
        let probe = p
            .iter()
            .min_by_key(|&x| by_point[x].len())
            .expect("pieces are non-empty");
        if by_point[probe].iter().any(|&k| p.is_subset(&kept[k])) {
            continue;
        }
        let idx = kept.len();
        for x in p.iter() {
            by_point[x].push(idx);
        }
        kept.push(p);
    }
    kept
}

/// True iff every piece of `b` lies inside some piece of `a`.
pub fn coarser_than(a: &Cover<'_>, b: &Cover<'_>) -> Result<bool, CoverError> {
    a.check_same(b)?;
    Ok(b
        .pieces
        .iter()
        .all(|sb| a.pieces.iter().any(|sa| sb.is_subset(sa))))
}

/// All non-empty pairwise intersections, deduplicated.
pub fn join<'a>(a: &Cover<'a>, b: &Cover<'_>) -> Result<Cover<'a>, CoverError> {
    a.check_same(b)?;
    let mut out = Vec::new();
    for sa in &a.pieces {
        for sb in &b.pieces {
            if sa.intersects(sb) {
                out.push(sa.intersection(sb));
            }
        }
    }
    Ok(Cover {
        space: a.space,
        pieces: dedup(out),
    })
}

fn preimages(map: &EndoMap, pieces: &[BitSet], n: usize) -> Vec<BitSet> {
    pieces
        .iter()
        .map(|s| BitSet::from_indices(n, (0..n).filter(|&x| s.contains(map.apply(x)))))
        .collect()
}

/// `{f^{-1}(S) : S in a}` with empty preimages dropped.
pub fn pullback<'a>(map: &EndoMap, a: &Cover<'a>) -> Result<Cover<'a>, CoverError> {
    if map.len() != a.space.len() {
        return Err(CoverError::SpaceMismatch);
    }
    Ok(Cover {
        space: a.space,
        pieces: dedup(preimages(map, &a.pieces, a.space.len())),
    })
}

/// The dynamical refinement `a ∨ f^{-1}a ∨ ... ∨ f^{-(n-1)}a`.
pub fn dyn_refine<'a>(map: &EndoMap, n: usize, a: &Cover<'a>) -> Result<Cover<'a>, CoverError> {
    if n == 0 {
        return Err(CoverError::InvalidHorizon);
    }
    if map.len() != a.space.len() {
        return Err(CoverError::SpaceMismatch);
    }
    let mut acc = a.clone();
    let mut pulled = a.clone();
    for _ in 1..n {
        pulled = pullback(map, &pulled)?;
        acc = join(&acc, &pulled)?;
    }
    Ok(acc)
}

/// Sequence of reduced refinements for horizons `1..=n_max`.
///
/// Entry `n - 1` is order-equivalent to `dyn_refine(map, n, a)` but keeps only
/// maximal pieces, which keeps the piece count near the number of points for
/// ball covers. Uses `a^(n+1) = a ∨ f^{-1}(a^(n))`.
pub fn dyn_refine_reduced_sequence<'a>(
    map: &EndoMap,
    n_max: usize,
    a: &Cover<'a>,
) -> Result<Vec<Cover<'a>>, CoverError> {
    if n_max == 0 {
        return Err(CoverError::InvalidHorizon);
    }
    let n = a.space.len();
    if map.len() != n {
        return Err(CoverError::SpaceMismatch);
    }
    let base = a.reduced();
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, p) in base.pieces.iter().enumerate() {
        for x in p.iter() {
            containing[x].push(k);
        }
    }
    let mut out = vec![base.clone()];
    let mut seen = vec![usize::MAX; base.pieces.len()];
    let mut stamp = 0usize;
    for _ in 1..n_max {
        let prev = out.last().expect("non-empty");
        let pulled = maximal_pieces(preimages(map, &prev.pieces, n), n);
        let mut joined = Vec::new();
        for sb in &pulled {
            // only base pieces meeting sb can give a non-empty intersection
            stamp += 1;
            for x in sb.iter() {
                for &k in &containing[x] {
                    if seen[k] != stamp {
                        seen[k] = stamp;
                        joined.push(base.pieces[k].intersection(sb));
                    }
                }
            }
        }
        out.push(Cover {
            space: a.space,
            pieces: maximal_pieces(joined, n),
        });
    }
    Ok(out)
}

/// Minimum number of pieces of `a` that still cover the space.
pub fn min_subcover_size(a: &Cover<'_>, opts: SolverOptions) -> Result<CountResult, CoverError> {
    Ok(solver::set_cover_size(a.space.len(), &a.pieces, opts)?)
}

fn piece_diameter(space: &FiniteMetricSpace, piece: &BitSet) -> f64 {
    let members = piece.to_vec();
    let mut d: f64 = 0.0;
    for (k, &i) in members.iter().enumerate() {
        for &j in &members[k + 1..] {
            d = d.max(space.dist(i, j));
        }
    }
    d
}

/// Largest pairwise distance inside any one piece.
pub fn diameter(a: &Cover<'_>) -> f64 {
    a.pieces
        .iter()
        .map(|p| piece_diameter(a.space, p))
        .fold(0.0, f64::max)
}

/// `min_x max_{S ∋ x} dist(x, X \ S)`, with a piece equal to `X` contributing 1.
///
/// Every closed ball of radius strictly below the result lies inside a piece.
pub fn lebesgue_number(a: &Cover<'_>) -> f64 {
    let n = a.space.len();
    let full = BitSet::full(n);
    (0..n)
        .map(|x| {
            a.pieces
                .iter()
                .filter(|p| p.contains(x))
                .map(|p| {
                    if *p == full {
                        1.0
                    } else {
                        (0..n)
                            .filter(|&y| !p.contains(y))
                            .map(|y| a.space.dist(x, y))
                            .fold(f64::INFINITY, f64::min)
                    }
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// A cover made of every closed ball of one radius.
#[derive(Clone, Debug)]
pub struct UniformDiskCover<'a> {
    cover: Cover<'a>,
    grain: f64,
}

impl<'a> UniformDiskCover<'a> {
    pub fn cover(&self) -> &Cover<'a> {
        &self.cover
    }

    pub fn into_cover(self) -> Cover<'a> {
        self.cover
    }

    pub fn grain(&self) -> f64 {
        self.grain
    }
}

pub fn ball(space: &FiniteMetricSpace, center: usize, radius: f64) -> BitSet {
    let n = space.len();
    let row = space.matrix().row(center);
    BitSet::from_indices(n, (0..n).filter(|&y| row[y] <= radius))
}

fn balls(space: &FiniteMetricSpace, radius: f64) -> Vec<BitSet> {
    (0..space.len()).map(|x| ball(space, x, radius)).collect()
}

/// All closed balls of radius `eps`.
pub fn free_udc(space: &FiniteMetricSpace, eps: f64) -> Result<UniformDiskCover<'_>, CoverError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(CoverError::InvalidGrain(eps));
    }
    Ok(UniformDiskCover {
        cover: Cover {
            space,
            pieces: dedup(balls(space, eps)),
        },
        grain: eps,
    })
}

/// Same centres, grain `min(factor * r, 1)`.
pub fn expand<'a>(udc: &UniformDiskCover<'a>, factor: f64) -> Result<UniformDiskCover<'a>, CoverError> {
    if !factor.is_finite() || factor <= 1.0 {
        return Err(CoverError::InvalidFactor(factor));
    }
    let grain = (factor * udc.grain).min(1.0);
    let space = udc.cover.space;
    Ok(UniformDiskCover {
        cover: Cover {
            space,
            pieces: dedup(balls(space, grain)),
        },
        grain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::DistanceMatrix;

    /// Points 0, 1/3, 2/3, 1 on a line.
    fn line4() -> FiniteMetricSpace {
        FiniteMetricSpace::validate_matrix(DistanceMatrix::from_fn(4, |i, j| i.abs_diff(j) as f64 / 3.0)).unwrap()
    }

    fn circle(n: usize) -> FiniteMetricSpace {
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

    fn sorted(c: &Cover<'_>) -> Vec<Vec<usize>> {
        let mut v: Vec<Vec<usize>> = c.pieces().iter().map(BitSet::to_vec).collect();
        v.sort();
        v
    }

    #[test]
    fn construction_checks() {
        let s = line4();
        assert_eq!(
            Cover::from_indices(&s, &[vec![0, 1], vec![2]]).unwrap_err(),
            CoverError::NotCovering(3)
        );
        assert_eq!(
            Cover::from_indices(&s, &[vec![0, 1, 2, 3], vec![]]).unwrap_err(),
            CoverError::EmptyPiece(1)
        );
        let c = Cover::from_indices(&s, &[vec![0, 1, 2, 3], vec![0, 1, 2, 3]]).unwrap();
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn trivial_cover_is_coarsest() {
        let s = line4();
        let x = Cover::trivial(&s);
        let halves = Cover::from_indices(&s, &[vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        assert!(coarser_than(&x, &halves).unwrap());
        assert!(coarser_than(&halves, &halves).unwrap());
        assert!(!coarser_than(&halves, &x).unwrap());
    }

    #[test]
    fn halves_versus_small_balls() {
        // subset-scan oracle: each ball B(i, 1/3) must sit inside {0,1,2} or {1,2,3}
        let s = line4();
        let halves = Cover::from_indices(&s, &[vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        let small = free_udc(&s, 0.34).unwrap();
        assert_eq!(sorted(small.cover()), vec![vec![0, 1], vec![0, 1, 2], vec![1, 2, 3], vec![2, 3]]);
        assert!(coarser_than(&halves, small.cover()).unwrap());
        let overlap = Cover::from_indices(&s, &[vec![0, 1], vec![1, 2, 3]]).unwrap();
        assert!(!coarser_than(&overlap, small.cover()).unwrap());
    }

    #[test]
    fn join_examples() {
        let s = line4();
        let a = Cover::from_indices(&s, &[vec![0, 1], vec![1, 2, 3]]).unwrap();
        let b = Cover::from_indices(&s, &[vec![0, 1, 2], vec![2, 3]]).unwrap();
        let j = join(&a, &b).unwrap();
        // the four intersections: {0,1}, {}, {1,2}, {2,3}
        assert_eq!(sorted(&j), vec![vec![0, 1], vec![1, 2], vec![2, 3]]);
        let x = Cover::trivial(&s);
        assert_eq!(sorted(&join(&a, &x).unwrap()), sorted(&a));
        assert_eq!(sorted(&join(&x, &x).unwrap()), vec![vec![0, 1, 2, 3]]);
        assert!(coarser_than(&a, &j).unwrap() && coarser_than(&b, &j).unwrap());
    }

    #[test]
    fn pullback_examples() {
        let s = circle(8);
        let a = Cover::from_indices(&s, &[vec![0, 1, 2, 3, 4], vec![4, 5, 6, 7, 0]]).unwrap();
        assert_eq!(sorted(&pullback(&EndoMap::identity(8), &a).unwrap()), sorted(&a));
        let constant = EndoMap::new(vec![2; 8]).unwrap();
        assert_eq!(sorted(&pullback(&constant, &a).unwrap()), vec![(0..8).collect::<Vec<_>>()]);
        // doubling: x in f^{-1}S iff 2x mod 8 in S
        let p = pullback(&doubling(8), &a).unwrap();
        assert_eq!(sorted(&p), vec![vec![0, 1, 2, 4, 5, 6], vec![0, 2, 3, 4, 6, 7]]);
    }

    #[test]
    fn refinement_examples() {
        let s = circle(8);
        let f = doubling(8);
        let a = Cover::from_indices(&s, &[vec![0, 1, 2, 3], vec![4, 5, 6, 7]]).unwrap();
        assert_eq!(sorted(&dyn_refine(&f, 1, &a).unwrap()), sorted(&a));
        assert_eq!(dyn_refine(&f, 0, &a).unwrap_err(), CoverError::InvalidHorizon);
        // binary cylinders of length 2: first two binary digits of j/8
        let r2 = dyn_refine(&f, 2, &a).unwrap();
        assert_eq!(sorted(&r2), vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]]);
        let r3 = dyn_refine(&f, 3, &a).unwrap();
        assert_eq!(r3.len(), 8);
        // identity: a ∨ a
        let overlapping = Cover::from_indices(&s, &[vec![0, 1, 2, 3, 4], vec![4, 5, 6, 7, 0]]).unwrap();
        let id = EndoMap::identity(8);
        let r = dyn_refine(&id, 3, &overlapping).unwrap();
        assert_eq!(sorted(&r), vec![vec![0, 1, 2, 3, 4], vec![0, 4], vec![0, 4, 5, 6, 7]]);
        assert!(r.equivalent(&overlapping).unwrap());
    }

    #[test]
    fn reduced_sequence_matches_full_refinement() {
        let s = circle(16);
        let f = doubling(16);
        let a = free_udc(&s, 0.25).unwrap().into_cover();
        let seq = dyn_refine_reduced_sequence(&f, 4, &a).unwrap();
        for (k, r) in seq.iter().enumerate() {
            let full = dyn_refine(&f, k + 1, &a).unwrap();
            assert!(r.equivalent(&full).unwrap(), "n = {}", k + 1);
            assert_eq!(sorted(r), sorted(&full.reduced()));
            let opts = SolverOptions::default();
            assert_eq!(min_subcover_size(r, opts).unwrap(), min_subcover_size(&full, opts).unwrap());
        }
    }

    #[test]
    fn subcover_examples() {
        let s = line4();
        let opts = SolverOptions::default();
        assert_eq!(min_subcover_size(&Cover::trivial(&s), opts).unwrap().value, 1);
        let with_x = Cover::from_indices(&s, &[vec![0], vec![0, 1, 2, 3], vec![2, 3]]).unwrap();
        assert_eq!(min_subcover_size(&with_x, opts).unwrap().value, 1);
        let cyc = Cover::from_indices(&s, &[vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]]).unwrap();
        let r = min_subcover_size(&cyc, opts).unwrap();
        assert_eq!(r.value, 2);
        assert!(r.is_exact());
        let g = min_subcover_size(&cyc, SolverOptions::greedy()).unwrap();
        assert!(!g.is_exact());
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"value":2,"mode":"exact"}"#);
    }

    #[test]
    fn diameter_examples() {
        let s = line4();
        assert_eq!(diameter(&Cover::trivial(&s)), 1.0);
        assert_eq!(diameter(&Cover::discrete(&s)), 0.0);
        let a = Cover::from_indices(&s, &[vec![0, 1], vec![1, 2, 3]]).unwrap();
        assert_eq!(diameter(&a), 2.0 / 3.0);
    }

    #[test]
    fn lebesgue_examples() {
        let s = line4();
        assert_eq!(lebesgue_number(&Cover::trivial(&s)), 1.0);
        let single = FiniteMetricSpace::validate(&[vec![0.0]]).unwrap();
        assert_eq!(lebesgue_number(&Cover::trivial(&single)), 1.0);
        // partition {0,1} | {2,3}: boundary points 1 and 2 are 1/3 from the other side
        let halves = Cover::from_indices(&s, &[vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(lebesgue_number(&halves), 1.0 / 3.0);
        let overlap = Cover::from_indices(&s, &[vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        assert_eq!(lebesgue_number(&overlap), 2.0 / 3.0);
    }

    #[test]
    fn grain_validation_and_extremes() {
        let s = line4();
        assert_eq!(free_udc(&s, 0.0).unwrap_err(), CoverError::InvalidGrain(0.0));
        assert_eq!(free_udc(&s, 1.5).unwrap_err(), CoverError::InvalidGrain(1.5));
        assert_eq!(sorted(free_udc(&s, 1.0).unwrap().cover()), vec![vec![0, 1, 2, 3]]);
        let tiny = free_udc(&s, 0.1).unwrap();
        assert_eq!(sorted(tiny.cover()), vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn expansion() {
        let s = circle(8);
        let u = free_udc(&s, 0.25).unwrap();
        let e = expand(&u, DEFAULT_EXPANSION).unwrap();
        assert_eq!(e.grain(), 2.01 * 0.25);
        // circle distances are multiples of 1/4, so radius 0.5025 keeps 5 points per ball
        assert!(e.cover().pieces().iter().all(|p| p.count() == 5));
        assert!(coarser_than(e.cover(), u.cover()).unwrap());
        assert!(lebesgue_number(e.cover()) >= 0.25);
        let capped = expand(&free_udc(&s, 0.6).unwrap(), DEFAULT_EXPANSION).unwrap();
        assert_eq!(capped.grain(), 1.0);
        assert_eq!(sorted(capped.cover()), vec![(0..8).collect::<Vec<_>>()]);
        assert!(expand(&u, 1.0).is_err());
    }

    #[test]
    fn space_mismatch() {
        let a = line4();
        let b = circle(4);
        assert_eq!(
            coarser_than(&Cover::trivial(&a), &Cover::trivial(&b)).unwrap_err(),
            CoverError::SpaceMismatch
        );
        assert!(join(&Cover::trivial(&a), &Cover::trivial(&b)).is_err());
        assert!(pullback(&EndoMap::identity(3), &Cover::trivial(&a)).is_err());
    }
}
