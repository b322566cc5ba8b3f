//! Strategies shared by the property tests.

#![allow(dead_code)]

use entrolab_core::bitset::BitSet;
use entrolab_core::covers::Cover;
use entrolab_core::metric::{EndoMap, FiniteMetricSpace};
use proptest::prelude::*;

/// Points in the unit square; the validator rescales to diameter 1.
pub fn euclidean(max_points: usize) -> impl Strategy<Value = FiniteMetricSpace> {
    prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 1..=max_points).prop_map(|pts| {
        let rows: Vec<Vec<f64>> = pts
            .iter()
            .map(|a| pts.iter().map(|b| (a.0 - b.0).hypot(a.1 - b.1)).collect())
            .collect();
        FiniteMetricSpace::validate(&rows).expect("euclidean distances form a metric")
    })
}

/// Integer-valued distances on a few levels: lots of ties and tight
/// triangles.
pub fn ultrametric_like(max_points: usize) -> impl Strategy<Value = FiniteMetricSpace> {
    prop::collection::vec(0u8..4, 1..=max_points).prop_map(|labels| {
        // d(i, j) = 1 + index of the highest differing bit, an ultrametric
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&a| {
                labels
                    .iter()
                    .map(|&b| if a == b { 0.0 } else { f64::from(8 - (a ^ b).leading_zeros()) })
                    .collect()
            })
            .collect();
        let n = rows.len();
        // break ties between equal labels so the space stays a metric
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i != j && rows[i][j] == 0.0 { 0.5 } else { rows[i][j] }).collect())
            .collect();
        FiniteMetricSpace::validate(&rows).expect("ultrametric with a floor is a metric")
    })
}

pub fn space(max_points: usize) -> impl Strategy<Value = FiniteMetricSpace> {
    prop_oneof![euclidean(max_points), ultrametric_like(max_points)]
}

pub fn system(max_points: usize) -> impl Strategy<Value = (FiniteMetricSpace, EndoMap)> {
    space(max_points).prop_flat_map(|s| {
        let n = s.len();
        prop::collection::vec(0..n, n).prop_map(move |img| (s.clone(), EndoMap::new(img).expect("in range")))
    })
}

/// Random non-empty masks, patched so every point is covered.
pub fn masks(n: usize, max_pieces: usize) -> impl Strategy<Value = Vec<u64>> {
    let full = (1u64 << n) - 1;
    prop::collection::vec((1u64..=full, 0..n), 1..=max_pieces).prop_map(move |raw| {
        let mut pieces: Vec<u64> = raw.iter().map(|&(m, _)| m & full).collect();
        for x in 0..n {
            if pieces.iter().all(|&p| p >> x & 1 == 0) {
                let k = raw[x % raw.len()].1 % pieces.len();
                pieces[k] |= 1 << x;
            }
        }
        pieces
    })
}

pub fn cover_of<'a>(space: &'a FiniteMetricSpace, masks: &[u64]) -> Cover<'a> {
    let n = space.len();
    Cover::new(
        space,
        masks
            .iter()
            .map(|&m| BitSet::from_indices(n, (0..n).filter(|&i| m >> i & 1 == 1)))
            .collect(),
    )
    .expect("masks cover")
}

pub fn to_masks(c: &Cover<'_>) -> Vec<u64> {
    c.pieces().iter().map(|p| p.iter().fold(0u64, |m, x| m | 1 << x)).collect()
}

/// A space with a few random covers over it.
pub fn space_with_covers(
    max_points: usize,
    covers: usize,
) -> impl Strategy<Value = (FiniteMetricSpace, Vec<Vec<u64>>)> {
    space(max_points).prop_flat_map(move |s| {
        let n = s.len();
        prop::collection::vec(masks(n, 6), covers).prop_map(move |m| (s.clone(), m))
    })
}

/// Diameter of every subset of a space of at most 16 points, by mask.
pub fn subset_diameters(space: &FiniteMetricSpace) -> Vec<f64> {
    let n = space.len();
    (0..1u64 << n)
        .map(|s| {
            let mut d: f64 = 0.0;
            for i in (0..n).filter(|&i| s >> i & 1 == 1) {
                for j in (0..n).filter(|&j| s >> j & 1 == 1) {
                    d = d.max(space.dist(i, j));
                }
            }
            d
        })
        .collect()
}
