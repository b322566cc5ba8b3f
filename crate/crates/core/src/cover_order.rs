//! Covers as objects of a finite preorder, and the Lebesgue number and
//! diameter recovered as Kan extensions over the ε-category.
//!
//! The ε-category `E` has objects `{0} ∪ {pairwise distances}`, ordered by
//! `>=`; its least object is the space diameter. `Free'(e)` is the cover by all maximal subsets of
//! diameter at most `e`. Along `K = Free'`:
//!
//! - `Lan_K Id_E (c)` is the least grid `e` with every piece of `c` of
//!   diameter `<= e`, i.e. `diameter(c)`;
//! - `Ran_K Id_E (c)` is the largest grid `e` such that every set of diameter
//!   `<= e` lies in a piece of `c`.

use std::sync::Arc;

use crate::bitset::BitSet;
use crate::covers::{coarser_than, Cover, CoverError};
use crate::metric::FiniteMetricSpace;
use crate::order::{left_kan, right_kan, Chain, ChainValue, FinitePreorder, MonotoneMap, OrderError};

/// Largest space for which covers are enumerated exhaustively.
pub const MAX_ENUMERATED_POINTS: usize = 6;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CoverOrderError {
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("no cover equivalent to the diameter-{0} cover is catalogued")]
    MissingFreeCover(f64),
}

/// A catalogue of covers ordered by `i <= j iff covers[i]` is coarser than
/// `covers[j]`.
#[derive(Clone, Debug)]
pub struct CoverPreorder<'a> {
    covers: Vec<Cover<'a>>,
    order: Arc<FinitePreorder>,
}

impl<'a> CoverPreorder<'a> {
    pub fn new(covers: Vec<Cover<'a>>) -> Result<Self, CoverOrderError> {
        let n = covers.len();
        let mut leq = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                leq[i][j] = i == j || coarser_than(&covers[i], &covers[j])?;
            }
        }
        Ok(CoverPreorder {
            covers,
            order: Arc::new(FinitePreorder::new(leq)?),
        })
    }

    /// The catalogue extended by every `Free'(e)` not already present up to
    /// equivalence.
    pub fn with_diameter_covers(space: &'a FiniteMetricSpace, mut covers: Vec<Cover<'a>>) -> Result<Self, CoverOrderError> {
        for e in distance_grid(space) {
            let free = diameter_cover(space, e);
            let mut present = false;
            for c in &covers {
                if c.equivalent(&free)? {
                    present = true;
                    break;
                }
            }
            if !present {
                covers.push(free);
            }
        }
        CoverPreorder::new(covers)
    }

    pub fn covers(&self) -> &[Cover<'a>] {
        &self.covers
    }

    pub fn order(&self) -> &Arc<FinitePreorder> {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.covers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covers.is_empty()
    }

    /// Index of a catalogued cover equivalent to `c`.
    pub fn position(&self, c: &Cover<'_>) -> Result<Option<usize>, CoverOrderError> {
        for (i, d) in self.covers.iter().enumerate() {
            if d.equivalent(c)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

/// `{0} ∪ {d(x, y)}`, ascending.
pub fn distance_grid(space: &FiniteMetricSpace) -> Vec<f64> {
    let mut v: Vec<f64> = space.matrix().as_slice().to_vec();
    v.push(0.0);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// The ε-category on `grid`, ordered by `>=`.
pub fn eps_category(grid: &[f64]) -> Result<Chain, OrderError> {
    Chain::descending(grid.iter().copied())
}

/// All maximal subsets of diameter at most `e` (maximal cliques of the
/// graph `d <= e`).
pub fn diameter_cover(space: &FiniteMetricSpace, e: f64) -> Cover<'_> {
    let n = space.len();
    let adj: Vec<BitSet> = (0..n)
        .map(|i| BitSet::from_indices(n, (0..n).filter(|&j| j != i && space.dist(i, j) <= e)))
        .collect();
    let mut cliques = Vec::new();
    bron_kerbosch(&adj, BitSet::new(n), BitSet::full(n), BitSet::new(n), &mut cliques);
    Cover::new(space, cliques).expect("maximal cliques cover every point")
}

fn bron_kerbosch(adj: &[BitSet], r: BitSet, mut p: BitSet, mut x: BitSet, out: &mut Vec<BitSet>) {
    if p.is_empty() && x.is_empty() {
        out.push(r);
        return;
    }
    let mut px = p.clone();
    px.union_with(&x);
    let pivot = px
        .iter()
        .max_by_key(|&u| adj[u].intersection_count(&p))
        .expect("p or x non-empty");
    let mut candidates = p.clone();
    candidates.difference_with(&adj[pivot]);
    for v in candidates.iter() {
        let mut r2 = r.clone();
        r2.insert(v);
        bron_kerbosch(adj, r2, p.intersection(&adj[v]), x.intersection(&adj[v]), out);
        p.remove(v);
        x.insert(v);
    }
}

/// The Lebesgue and diameter maps from a cover preorder into the ε-category.
#[derive(Clone, Debug)]
pub struct LebesgueDiameter {
    pub eps: Chain,
    /// `Free' : E → covers`.
    pub free: MonotoneMap,
    /// Right Kan extension of `Id_E` along `Free'`.
    pub lebesgue: MonotoneMap,
    /// Left Kan extension of `Id_E` along `Free'`.
    pub diameter: MonotoneMap,
}

impl LebesgueDiameter {
    pub fn lebesgue_value(&self, cover: usize) -> f64 {
        self.value(self.lebesgue.apply(cover))
    }

    pub fn diameter_value(&self, cover: usize) -> f64 {
        self.value(self.diameter.apply(cover))
    }

    fn value(&self, object: usize) -> f64 {
        match self.eps.label(object) {
            ChainValue::Finite(x) => x,
            other => unreachable!("ε-category labels are finite, got {other}"),
        }
    }
}

/// Builds `(L, D)` on a catalogue that contains every `Free'(e)`.
pub fn lebesgue_diameter_pair(
    space: &FiniteMetricSpace,
    catalogue: &CoverPreorder<'_>,
) -> Result<LebesgueDiameter, CoverOrderError> {
    let grid = distance_grid(space);
    let eps = eps_category(&grid)?;
    let free_values = eps
        .labels()
        .iter()
        .map(|v| {
            let e = v.finite().expect("finite grid");
            catalogue
                .position(&diameter_cover(space, e))?
                .ok_or(CoverOrderError::MissingFreeCover(e))
        })
        .collect::<Result<Vec<_>, CoverOrderError>>()?;
    let free = MonotoneMap::new(eps.order().clone(), catalogue.order().clone(), free_values)?;
    let id = MonotoneMap::identity(eps.order().clone());
    let lebesgue = right_kan(&id, &free)?;
    let diameter = left_kan(&id, &free)?;
    Ok(LebesgueDiameter {
        eps,
        free,
        lebesgue,
        diameter,
    })
}

/// Calls `visit` with every covering antichain of non-empty subsets of
/// `0..n`, pieces as bit masks in increasing mask order.
///
/// Every cover is equivalent in the coarser-than preorder to exactly one
/// covering antichain (its maximal pieces). Panics if `n` exceeds
/// [`MAX_ENUMERATED_POINTS`].
pub fn for_each_covering_antichain(n: usize, mut visit: impl FnMut(&[u64])) {
    assert!(n <= MAX_ENUMERATED_POINTS, "at most {MAX_ENUMERATED_POINTS} points");
    let full = (1u64 << n) - 1;
    let mut chosen = Vec::new();
    extend_antichain(full, 1, 0, &mut chosen, &mut visit);
}

fn extend_antichain(full: u64, next: u64, union: u64, chosen: &mut Vec<u64>, visit: &mut impl FnMut(&[u64])) {
    if union == full {
        visit(chosen);
    }
    for s in next..=full {
        if chosen.iter().all(|&c| c & s != c && c & s != s) {
            chosen.push(s);
            extend_antichain(full, s + 1, union | s, chosen, visit);
            chosen.pop();
        }
    }
}

/// Pieces given as bit masks over at most 64 points.
pub fn cover_from_masks<'a>(space: &'a FiniteMetricSpace, masks: &[u64]) -> Result<Cover<'a>, CoverError> {
    let n = space.len();
    Cover::new(
        space,
        masks
            .iter()
            .map(|&m| BitSet::from_indices(n, (0..n).filter(|&i| m >> i & 1 == 1)))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::diameter;
    use crate::metric::DistanceMatrix;
    use crate::order::{is_qualifying_pair, nat_trans_exists};

    fn line(n: usize) -> FiniteMetricSpace {
        let s = (n - 1) as f64;
        FiniteMetricSpace::validate_matrix(DistanceMatrix::from_fn(n, |i, j| i.abs_diff(j) as f64 / s)).unwrap()
    }

    #[test]
    fn antichain_counts() {
        // covering antichains of 1, 2, 3 points: 1, 2, 9
        for (n, want) in [(1, 1), (2, 2), (3, 9)] {
            let mut count = 0;
            for_each_covering_antichain(n, |_| count += 1);
            assert_eq!(count, want, "n = {n}");
        }
    }

    #[test]
    fn free_prime_on_a_line() {
        let s = line(4);
        let c = diameter_cover(&s, 1.0 / 3.0);
        let mut pieces: Vec<Vec<usize>> = c.pieces().iter().map(BitSet::to_vec).collect();
        pieces.sort();
        assert_eq!(pieces, vec![vec![0, 1], vec![1, 2], vec![2, 3]]);
        assert_eq!(diameter_cover(&s, 0.0).len(), 4);
        assert_eq!(diameter_cover(&s, 1.0).len(), 1);
    }

    #[test]
    fn kan_pair_on_all_covers_of_three_points() {
        let s = FiniteMetricSpace::validate(&[
            vec![0.0, 0.3, 0.8],
            vec![0.3, 0.0, 0.6],
            vec![0.8, 0.6, 0.0],
        ])
        .unwrap();
        let mut covers = Vec::new();
        for_each_covering_antichain(3, |m| covers.push(cover_from_masks(&s, m).unwrap()));
        let cat = CoverPreorder::with_diameter_covers(&s, covers).unwrap();
        let ld = lebesgue_diameter_pair(&s, &cat).unwrap();
        for (i, c) in cat.covers().iter().enumerate() {
            assert_eq!(ld.diameter_value(i), diameter(c));
        }
        assert!(is_qualifying_pair(&ld.lebesgue, &ld.diameter).unwrap());
        assert!(nat_trans_exists(&ld.diameter, &ld.lebesgue).unwrap());
    }
}
