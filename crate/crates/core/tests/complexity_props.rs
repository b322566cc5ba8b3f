mod common;

use common::{cover_of, system, to_masks};
use entrolab_core::complexity::{cover_complexity, max_separated_count, min_spanning_count};
use entrolab_core::covers::{coarser_than, diameter, free_udc, join, lebesgue_number, Cover};
use entrolab_core::metric::{bowen_metric, DistanceMatrix, EndoMap, FiniteMetricSpace};
use entrolab_core::solver::SolverOptions;
use entrolab_core::systems::{build_system, SystemSpec};
use proptest::prelude::*;

const EXACT: SolverOptions = SolverOptions {
    mode: entrolab_core::solver::SolveMode::Exact,
    budget: 2_000_000,
};

fn span(s: &FiniteMetricSpace, f: &EndoMap, n: usize, eps: f64) -> usize {
    min_spanning_count(s, f, n, eps, EXACT).unwrap().value
}

fn sep(s: &FiniteMetricSpace, f: &EndoMap, n: usize, eps: f64) -> usize {
    max_separated_count(s, f, n, eps, EXACT).unwrap().value
}

fn grain() -> impl Strategy<Value = f64> {
    (1u32..=16).prop_map(|k| f64::from(k) / 16.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn spanning_and_separated_sandwich((s, f) in system(14), n in 1usize..5, eps in grain()) {
        let sp = span(&s, &f, n, eps);
        let se = sep(&s, &f, n, eps);
        prop_assert!(sp <= se, "span {sp} > sep {se}");
        prop_assert!(se <= span(&s, &f, n, eps / 2.0));
    }

    #[test]
    fn cover_complexity_sits_between_the_counts((s, f) in system(10), n in 1usize..4, k in 1u32..8) {
        let r = f64::from(k) / 16.0;
        let a = free_udc(&s, r).unwrap().into_cover();
        let cov = cover_complexity(&s, &f, n, &a, EXACT).unwrap().value;
        let d = diameter(&a);
        // any grain above the diameter; the next eighth is representable
        let eps = ((d * 8.0).floor() + 1.0) / 8.0;
        if eps <= 1.0 {
            prop_assert!(sep(&s, &f, n, eps) <= cov);
        }
        let leb = lebesgue_number(&a);
        if leb > 0.0 {
            prop_assert!(cov <= span(&s, &f, n, (leb / 2.0).min(1.0)));
        }
    }

    #[test]
    fn counts_grow_with_horizon_and_finer_grain((s, f) in system(12), n in 1usize..4, eps in grain()) {
        prop_assert!(span(&s, &f, n, eps) <= span(&s, &f, n + 1, eps));
        prop_assert!(sep(&s, &f, n, eps) <= sep(&s, &f, n + 1, eps));
        let finer = eps / 2.0;
        prop_assert!(span(&s, &f, n, eps) <= span(&s, &f, n, finer));
        prop_assert!(sep(&s, &f, n, eps) <= sep(&s, &f, n, finer));
        let a = free_udc(&s, eps).unwrap().into_cover();
        let c1 = cover_complexity(&s, &f, n, &a, EXACT).unwrap().value;
        prop_assert!(c1 <= cover_complexity(&s, &f, n + 1, &a, EXACT).unwrap().value);
        let b = free_udc(&s, finer).unwrap().into_cover();
        let ab = join(&a, &b).unwrap();
        prop_assert!(coarser_than(&a, &ab).unwrap());
        prop_assert!(c1 <= cover_complexity(&s, &f, n, &ab, EXACT).unwrap().value);
    }

    #[test]
    fn greedy_brackets_exact((s, f) in system(14), n in 1usize..4, eps in grain()) {
        let g_span = min_spanning_count(&s, &f, n, eps, SolverOptions::greedy()).unwrap();
        let g_sep = max_separated_count(&s, &f, n, eps, SolverOptions::greedy()).unwrap();
        prop_assert!(!g_span.is_exact() && !g_sep.is_exact());
        prop_assert!(g_span.value >= span(&s, &f, n, eps));
        prop_assert!(g_sep.value <= sep(&s, &f, n, eps));
    }

    #[test]
    fn rotations_have_constant_counts((q, p) in (3usize..60).prop_flat_map(|q| (Just(q), 1..q)), eps in grain()) {
        let sys = build_system(&SystemSpec::Rotation { p, q }).unwrap();
        prop_assert!(sys.map.is_isometry(&sys.space));
        let base = bowen_metric(&sys.space, &sys.map, 1).unwrap();
        let later = bowen_metric(&sys.space, &sys.map, 5).unwrap();
        prop_assert_eq!(base.matrix(), later.matrix());
        let (s1, e1) = (span(&sys.space, &sys.map, 1, eps), sep(&sys.space, &sys.map, 1, eps));
        for n in 2..=4 {
            prop_assert_eq!(span(&sys.space, &sys.map, n, eps), s1);
            prop_assert_eq!(sep(&sys.space, &sys.map, n, eps), e1);
        }
    }

    /// Relabelling points through a bijection `π`, with `f' = π f π⁻¹`,
    /// changes no count.
    #[test]
    fn counts_are_conjugacy_invariant(
        (s, f) in system(10),
        shuffle in any::<prop::sample::Index>(),
        n in 1usize..4,
        eps in grain(),
    ) {
        let len = s.len();
        let mut perm: Vec<usize> = (0..len).collect();
        let k = shuffle.index(len.max(1));
        perm.rotate_left(k);
        perm.reverse();
        let mut inv = vec![0; len];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let d = DistanceMatrix::from_fn(len, |i, j| s.dist(inv[i], inv[j]));
        let t = FiniteMetricSpace::validate_matrix(d).unwrap();
        let g = EndoMap::new((0..len).map(|y| perm[f.apply(inv[y])]).collect()).unwrap();
        prop_assert_eq!(span(&s, &f, n, eps), span(&t, &g, n, eps));
        prop_assert_eq!(sep(&s, &f, n, eps), sep(&t, &g, n, eps));
        let a = free_udc(&s, eps).unwrap().into_cover();
        let moved: Vec<u64> = to_masks(&a)
            .iter()
            .map(|&m| (0..len).filter(|&i| m >> i & 1 == 1).fold(0u64, |acc, i| acc | 1 << perm[i]))
            .collect();
        let b: Cover<'_> = cover_of(&t, &moved);
        prop_assert_eq!(
            cover_complexity(&s, &f, n, &a, EXACT).unwrap().value,
            cover_complexity(&t, &g, n, &b, EXACT).unwrap().value
        );
    }
}

#[test]
fn built_systems_are_valid() {
    let specs = [
        SystemSpec::DyadicDoubling { m: 6 },
        SystemSpec::Rotation { p: 2, q: 9 },
        SystemSpec::FullShift { k: 3, l: 4 },
        SystemSpec::Tent { m: 5 },
    ];
    for spec in specs {
        let s = build_system(&spec).unwrap();
        s.space.matrix().check_metric().unwrap();
        s.map.check_space(&s.space).unwrap();
        assert!(s.space.diameter() <= 1.0);
    }
    // doubling: x ↦ 2x mod 1 maps grid index j to 2j mod 2^m exactly
    let d = build_system(&SystemSpec::DyadicDoubling { m: 6 }).unwrap();
    assert!((0..64).all(|j| d.map.apply(j) == 2 * j % 64));
}
