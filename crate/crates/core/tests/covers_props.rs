mod common;

use common::{cover_of, masks, space, space_with_covers, subset_diameters, system, to_masks};
use entrolab_core::cover_order::{
    cover_from_masks, distance_grid, for_each_covering_antichain, lebesgue_diameter_pair, CoverPreorder,
};
use entrolab_core::covers::{
    coarser_than, diameter, dyn_refine, expand, free_udc, join, lebesgue_number, min_subcover_size, Cover,
    DEFAULT_EXPANSION,
};
use entrolab_core::metric::bowen_metric;
use entrolab_core::order::{is_qualifying_pair, nat_trans_exists};
use entrolab_core::solver::{greedy_set_cover, SolverOptions};
use proptest::prelude::*;

const BUDGET: u64 = 1_000_000;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bowen_metric_grows_and_stays_a_metric((s, f) in system(10), n in 1usize..6) {
        let a = bowen_metric(&s, &f, n).unwrap();
        let b = bowen_metric(&s, &f, n + 1).unwrap();
        b.validate().unwrap();
        for i in 0..s.len() {
            for j in 0..s.len() {
                prop_assert!(a.matrix().get(i, j) <= b.matrix().get(i, j));
            }
        }
    }

    #[test]
    fn validated_spaces_have_diameter_at_most_one(s in space(12)) {
        prop_assert!(s.diameter() <= 1.0);
    }

    #[test]
    fn coarser_than_is_a_preorder((s, m) in space_with_covers(7, 3)) {
        let [a, b, c] = [0, 1, 2].map(|i| cover_of(&s, &m[i]));
        prop_assert!(coarser_than(&a, &a).unwrap());
        if coarser_than(&a, &b).unwrap() && coarser_than(&b, &c).unwrap() {
            prop_assert!(coarser_than(&a, &c).unwrap());
        }
        // the join of b with something finer than b is always finer, giving
        // a chain that exercises transitivity non-vacuously
        let bc = join(&b, &c).unwrap();
        let abc = join(&a, &bc).unwrap();
        prop_assert!(coarser_than(&b, &bc).unwrap() && coarser_than(&bc, &abc).unwrap());
        prop_assert!(coarser_than(&b, &abc).unwrap());
    }

    #[test]
    fn join_is_the_least_common_refinement((s, m) in space_with_covers(7, 3)) {
        let [a, b, c] = [0, 1, 2].map(|i| cover_of(&s, &m[i]));
        let ab = join(&a, &b).unwrap();
        prop_assert!(coarser_than(&a, &ab).unwrap());
        prop_assert!(coarser_than(&b, &ab).unwrap());
        if coarser_than(&a, &c).unwrap() && coarser_than(&b, &c).unwrap() {
            prop_assert!(coarser_than(&ab, &c).unwrap());
        }
        // c itself may not refine both, but its join with a and b does
        let abc = join(&ab, &c).unwrap();
        prop_assert!(coarser_than(&ab, &abc).unwrap());
    }

    #[test]
    fn subcover_size_is_monotone_under_refinement((s, m) in space_with_covers(8, 2)) {
        let a = cover_of(&s, &m[0]);
        let finer = join(&a, &cover_of(&s, &m[1])).unwrap();
        let opts = SolverOptions::exact(BUDGET);
        prop_assert!(min_subcover_size(&a, opts).unwrap().value <= min_subcover_size(&finer, opts).unwrap().value);
    }

    /// Every subset of diameter below `Leb(a)` is a piece of some cover of
    /// that diameter, so scanning subsets quantifies over all covers `b`.
    #[test]
    fn lebesgue_lemma_over_all_finer_covers((s, m) in space_with_covers(8, 1)) {
        let a = cover_of(&s, &m[0]);
        let leb = lebesgue_number(&a);
        let diam = subset_diameters(&s);
        let pieces = to_masks(&a);
        for sub in 1..1u64 << s.len() {
            if diam[sub as usize] < leb {
                prop_assert!(pieces.iter().any(|&p| sub & p == sub), "subset {sub:b} below Leb {leb}");
            }
        }
    }

    #[test]
    fn balls_inside_pieces((s, m) in space_with_covers(8, 1)) {
        let a = cover_of(&s, &m[0]);
        let leb = lebesgue_number(&a);
        let pieces = to_masks(&a);
        for x in 0..s.len() {
            let ball = (0..s.len()).filter(|&y| s.dist(x, y) < leb).fold(0u64, |b, y| b | 1 << y);
            prop_assert!(pieces.iter().any(|&p| ball & p == ball));
        }
    }

    #[test]
    fn expanded_disk_covers_qualify(s in space(16), k in 1u32..8) {
        let eps = f64::from(k) / 8.0;
        let udc = free_udc(&s, eps).unwrap();
        let big = expand(&udc, DEFAULT_EXPANSION).unwrap();
        prop_assert!(lebesgue_number(big.cover()) >= eps);
        prop_assert!(coarser_than(big.cover(), udc.cover()).unwrap());
    }

    #[test]
    fn refined_subcover_size_grows_with_horizon((s, f) in system(8), m in masks(8, 5)) {
        let m: Vec<u64> = m.iter().map(|&p| p & ((1 << s.len()) - 1)).filter(|&p| p != 0).collect();
        prop_assume!(!m.is_empty() && m.iter().fold(0, |u, p| u | p) == (1 << s.len()) - 1);
        let a = cover_of(&s, &m);
        let opts = SolverOptions::exact(BUDGET);
        let sizes: Vec<usize> = (1..=4)
            .map(|n| min_subcover_size(&dyn_refine(&f, n, &a).unwrap(), opts).unwrap().value)
            .collect();
        prop_assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "{sizes:?}");
    }

    #[test]
    fn greedy_subcover_is_bracketed((s, m) in space_with_covers(12, 1)) {
        let a = cover_of(&s, &m[0]);
        let exact = min_subcover_size(&a, SolverOptions::exact(BUDGET)).unwrap().value;
        let greedy = min_subcover_size(&a, SolverOptions::greedy()).unwrap().value;
        prop_assert!(greedy >= exact);
        prop_assert!(greedy as f64 <= exact as f64 * (1.0 + (s.len() as f64).ln()));
        prop_assert_eq!(greedy, greedy_set_cover(s.len(), a.pieces()).unwrap().len());
    }

    /// The Kan-extension Lebesgue number never exceeds the diameter, and the
    /// pair qualifies, on the preorder of all covers of a small space.
    #[test]
    fn kan_pair_on_all_covers(s in space(4)) {
        let mut covers: Vec<Cover<'_>> = Vec::new();
        for_each_covering_antichain(s.len(), |m| covers.push(cover_from_masks(&s, m).unwrap()));
        let cat = CoverPreorder::with_diameter_covers(&s, covers).unwrap();
        let ld = lebesgue_diameter_pair(&s, &cat).unwrap();
        prop_assert!(nat_trans_exists(&ld.diameter, &ld.lebesgue).unwrap());
        prop_assert!(is_qualifying_pair(&ld.lebesgue, &ld.diameter).unwrap());
        let grid = distance_grid(&s);
        for (i, c) in cat.covers().iter().enumerate() {
            prop_assert_eq!(ld.diameter_value(i), diameter(c));
            prop_assert!(ld.lebesgue_value(i) <= ld.diameter_value(i) || c.pieces().iter().all(|p| p.count() == 1));
            prop_assert!(grid.contains(&ld.lebesgue_value(i)));
        }
    }
}

/// The ball-based Lebesgue number can exceed the diameter: two close points
/// far from a third.
#[test]
fn ball_lebesgue_number_can_exceed_diameter() {
    let s = entrolab_core::metric::FiniteMetricSpace::validate(&[
        vec![0.0, 0.1, 1.0],
        vec![0.1, 0.0, 0.9],
        vec![1.0, 0.9, 0.0],
    ])
    .unwrap();
    let a = Cover::from_indices(&s, &[vec![0, 1], vec![2]]).unwrap();
    assert!((diameter(&a) - 0.1).abs() < 1e-12);
    assert!((lebesgue_number(&a) - 0.9).abs() < 1e-12);
}
