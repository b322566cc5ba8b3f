//! `verify`: exact invariant suites over a corpus of small systems.

use entrolab_core::complexity::{separated_count, spanning_count, proximity_graph};
use entrolab_core::cover_order::{diameter_cover, distance_grid};
use entrolab_core::covers::{self, coarser_than, Cover};
use entrolab_core::metric::{bowen_sequence, DistanceMatrix, FiniteMetricSpace};
use entrolab_core::solver::{greedy_dominating_set, greedy_independent_set, greedy_set_cover, SolverOptions};
use entrolab_core::systems::SystemSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{system_corpus, NamedSystem};
use crate::{CliError, SCHEMA_VERSION};

/// Scale guard: exact suites refuse larger spaces.
pub const MAX_VERIFY_POINTS: usize = 256;

pub const DEFAULT_VERIFY_GRID: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
pub const DEFAULT_VERIFY_HORIZON: usize = 5;
pub const DEFAULT_CORPUS_SEED: u64 = 0x5eed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub instances: u64,
    pub passed: u64,
    /// The first violating instance, if any.
    pub first_failure: Option<Value>,
}

impl SuiteReport {
    pub fn new(name: &str) -> Self {
        SuiteReport {
            name: name.to_string(),
            instances: 0,
            passed: 0,
            first_failure: None,
        }
    }

    pub fn record(&mut self, ok: bool, dump: impl FnOnce() -> Value) {
        self.instances += 1;
        if ok {
            self.passed += 1;
        } else if self.first_failure.is_none() {
            self.first_failure = Some(dump());
        }
    }

    pub fn merge(&mut self, other: SuiteReport) {
        self.instances += other.instances;
        self.passed += other.passed;
        if self.first_failure.is_none() {
            self.first_failure = other.first_failure;
        }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.instances
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub systems: usize,
    pub eps_grid: Vec<f64>,
    pub n_max: usize,
    pub suites: Vec<SuiteReport>,
    pub all_pass: bool,
}

impl VerifyReport {
    pub fn first_failing(&self) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| !s.ok())
    }
}

const SUITES: [&str; 6] = [
    "sandwich_a",
    "sandwich_b",
    "monotonicity",
    "isometry",
    "greedy_bracketing",
    "lebesgue_lemma",
];

/// Built-ins of at most 128 points and 48 random systems.
pub fn default_corpus() -> Vec<NamedSystem> {
    let builtins = [
        SystemSpec::DyadicDoubling { m: 3 },
        SystemSpec::DyadicDoubling { m: 5 },
        SystemSpec::DyadicDoubling { m: 7 },
        SystemSpec::Rotation { p: 1, q: 7 },
        SystemSpec::Rotation { p: 3, q: 40 },
        SystemSpec::Rotation { p: 5, q: 127 },
        SystemSpec::FullShift { k: 2, l: 5 },
        SystemSpec::FullShift { k: 2, l: 7 },
        SystemSpec::FullShift { k: 3, l: 3 },
        SystemSpec::Tent { m: 3 },
        SystemSpec::Tent { m: 6 },
    ];
    system_corpus(DEFAULT_CORPUS_SEED, &builtins, 48, &[4, 6, 8, 12, 16, 24, 32, 48, 64, 128])
}

pub fn check_scale(systems: &[NamedSystem]) -> Result<(), CliError> {
    if let Some(s) = systems.iter().find(|s| s.space.len() > MAX_VERIFY_POINTS) {
        return Err(CliError::Config(format!(
            "scale guard: system {} has {} points, verify allows at most {MAX_VERIFY_POINTS}",
            s.name,
            s.space.len()
        )));
    }
    Ok(())
}

/// Runs every suite on every system; systems are processed in parallel and
/// merged in corpus order.
pub fn verify(systems: &[NamedSystem], eps_grid: &[f64], n_max: usize, budget: u64) -> Result<VerifyReport, CliError> {
    check_scale(systems)?;
    entrolab_core::complexity::check_grid(eps_grid).map_err(|e| CliError::Config(format!("eps_grid: {e}")))?;
    if n_max == 0 {
        return Err(CliError::Config("n_max must be at least 1".into()));
    }
    let per_system = systems
        .par_iter()
        .map(|s| verify_system(s, eps_grid, n_max, SolverOptions::exact(budget)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut suites: Vec<SuiteReport> = SUITES.iter().map(|n| SuiteReport::new(n)).collect();
    for reports in per_system {
        for (acc, r) in suites.iter_mut().zip(reports) {
            acc.merge(r);
        }
    }
    let all_pass = suites.iter().all(SuiteReport::ok);
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        systems: systems.len(),
        eps_grid: eps_grid.to_vec(),
        n_max,
        suites,
        all_pass,
    })
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn span(m: &DistanceMatrix, eps: f64, opts: SolverOptions) -> Result<usize, CliError> {
    Ok(spanning_count(m, eps, opts).map_err(internal)?.value)
}

fn sep(m: &DistanceMatrix, eps: f64, opts: SolverOptions) -> Result<usize, CliError> {
    Ok(separated_count(m, eps, opts).map_err(internal)?.value)
}

/// Largest distance strictly below `x`, or 0.
fn distance_below(grid: &[f64], x: f64) -> f64 {
    grid.iter().copied().filter(|&d| d < x).fold(0.0, f64::max)
}

/// The Lebesgue lemma for one cover `a`, over every cover `b` at once: a
/// cover of diameter below `Leb(a)` has all its pieces inside maximal sets of
/// diameter below `Leb(a)`, so `a` must be coarser than the cover by those
/// maximal sets.
pub fn lebesgue_lemma_holds(a: &Cover<'_>) -> Result<bool, CliError> {
    let space = a.space();
    let leb = covers::lebesgue_number(a);
    let finest = diameter_cover(space, distance_below(&distance_grid(space), leb));
    coarser_than(a, &finest).map_err(internal)
}

/// Largest space that also gets overlapping seed covers; their refinements
/// can grow exponentially under discontinuous maps.
pub const OVERLAPPING_SEED_POINTS: usize = 16;

/// Greedy partition: each cell holds the unassigned points within `r` of
/// its first point, so cells have diameter at most `2r`.
fn cluster_partition(space: &FiniteMetricSpace, r: f64, reverse: bool) -> Cover<'_> {
    let n = space.len();
    let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
    let mut assigned = vec![false; n];
    let mut cells = Vec::new();
    for &x in &order {
        if assigned[x] {
            continue;
        }
        let cell: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&y| !assigned[y] && space.dist(x, y) < r)
            .collect();
        for &y in &cell {
            assigned[y] = true;
        }
        cells.push(cell);
    }
    Cover::from_indices(space, &cells).expect("cells partition the space")
}

/// Seed covers of diameter below `eps`. Partitions refine to partitions, so
/// their refinements stay small.
fn seed_covers<'a>(space: &'a FiniteMetricSpace, eps: f64, grid: &[f64]) -> Vec<(String, Cover<'a>)> {
    let mut out = vec![
        ("discrete".to_string(), Cover::discrete(space)),
        ("clusters".to_string(), cluster_partition(space, eps / 2.0, false)),
        ("clusters-reversed".to_string(), cluster_partition(space, eps / 2.0, true)),
    ];
    if space.len() <= OVERLAPPING_SEED_POINTS {
        let e = distance_below(grid, eps);
        if e > 0.0 {
            out.push((format!("diameter<={e}"), diameter_cover(space, e)));
        }
        for r in [eps / 2.0, eps / 3.0] {
            if let Ok(u) = covers::free_udc(space, r) {
                out.push((format!("balls({r})"), u.into_cover()));
            }
        }
    }
    out.retain(|(_, c)| covers::diameter(c) < eps);
    out
}

fn verify_system(
    s: &NamedSystem,
    grid: &[f64],
    n_max: usize,
    opts: SolverOptions,
) -> Result<Vec<SuiteReport>, CliError> {
    let [mut sandwich_a, mut sandwich_b, mut mono, mut iso, mut greedy, mut leb]: [SuiteReport; 6] =
        SUITES.map(SuiteReport::new);
    let space = &s.space;
    let dists = distance_grid(space);
    let bowen: Vec<DistanceMatrix> = bowen_sequence(space, &s.map)
        .map_err(internal)?
        .take(n_max)
        .map(|b| b.into_matrix())
        .collect();
    let isometry = s.map.is_isometry(space);
    // spans[e][n-1], seps[e][n-1]
    let mut spans = vec![Vec::new(); grid.len()];
    let mut seps = vec![Vec::new(); grid.len()];

    for (ei, &eps) in grid.iter().enumerate() {
        let seeds = seed_covers(space, eps, &dists);
        let refined = seeds
            .iter()
            .map(|(_, a)| covers::dyn_refine_reduced_sequence(&s.map, n_max, a).map_err(internal))
            .collect::<Result<Vec<_>, _>>()?;
        for (ni, m) in bowen.iter().enumerate() {
            let n = ni + 1;
            let sp = span(m, eps, opts)?;
            let se = sep(m, eps, opts)?;
            let sp_half = span(m, eps / 2.0, opts)?;
            spans[ei].push(sp);
            seps[ei].push(se);
            sandwich_a.record(sp <= se && se <= sp_half, || {
                json!({"system": s.name, "eps": eps, "n": n, "span": sp, "sep": se, "span_half": sp_half})
            });

            for ((name, a), seq) in seeds.iter().zip(&refined) {
                let cov = covers::min_subcover_size(&seq[ni], opts).map_err(internal)?.value;
                let l = covers::lebesgue_number(a);
                let sp_leb = span(m, l / 2.0, opts)?;
                sandwich_b.record(se <= cov && cov <= sp_leb, || {
                    json!({"system": s.name, "eps": eps, "n": n, "seed": name, "sep": se,
                           "cover_count": cov, "lebesgue": l, "span_half_lebesgue": sp_leb})
                });
                let g = greedy_set_cover(space.len(), seq[ni].pieces()).map_err(internal)?.len();
                greedy.record(g >= cov, || {
                    json!({"system": s.name, "eps": eps, "n": n, "seed": name, "greedy_cover": g, "exact_cover": cov})
                });
            }

            let g = proximity_graph(m, eps);
            let gd = greedy_dominating_set(&g);
            let gi = greedy_independent_set(&g).len();
            greedy.record(gd >= sp && gi <= se, || {
                json!({"system": s.name, "eps": eps, "n": n, "greedy_span": gd, "span": sp,
                       "greedy_sep": gi, "sep": se})
            });
        }
    }

    for ei in 0..grid.len() {
        for ni in 0..n_max {
            let in_n = ni == 0 || (spans[ei][ni - 1] <= spans[ei][ni] && seps[ei][ni - 1] <= seps[ei][ni]);
            let in_eps = ei == 0 || (spans[ei - 1][ni] <= spans[ei][ni] && seps[ei - 1][ni] <= seps[ei][ni]);
            mono.record(in_n && in_eps, || {
                json!({"system": s.name, "eps": grid[ei], "n": ni + 1, "spans": spans, "seps": seps})
            });
        }
        if isometry {
            let constant = spans[ei].iter().all(|&c| c == spans[ei][0]) && seps[ei].iter().all(|&c| c == seps[ei][0]);
            iso.record(constant, || {
                json!({"system": s.name, "eps": grid[ei], "spans": spans[ei], "seps": seps[ei]})
            });
        }
    }

    let small = space.len() <= OVERLAPPING_SEED_POINTS;
    let mut family = vec![Cover::discrete(space), Cover::trivial(space)];
    for &e in grid {
        family.push(cluster_partition(space, e, false));
        if let Ok(u) = covers::free_udc(space, e) {
            family.push(u.into_cover());
        }
        if small {
            family.push(diameter_cover(space, distance_below(&dists, e)));
        }
    }
    let diams: Vec<f64> = family.iter().map(covers::diameter).collect();
    for a in &family {
        let l = covers::lebesgue_number(a);
        for (b, &db) in family.iter().zip(&diams) {
            if db < l {
                let ok = coarser_than(a, b).map_err(internal)?;
                leb.record(ok, || json!({"system": s.name, "coarse": a.to_record(), "fine": b.to_record()}));
            }
        }
        if small {
            let ok = lebesgue_lemma_holds(a)?;
            leb.record(ok, || json!({"system": s.name, "cover": a.to_record()}));
        }
    }

    Ok(vec![sandwich_a, sandwich_b, mono, iso, greedy, leb])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::rng;

    #[test]
    fn small_corpus_passes() {
        let systems = system_corpus(3, &[SystemSpec::Rotation { p: 1, q: 6 }], 4, &[4, 6]);
        let r = verify(&systems, &DEFAULT_VERIFY_GRID, 3, 1_000_000).unwrap();
        assert!(r.all_pass, "{r:?}");
        assert!(r.suites.iter().all(|s| s.instances > 0), "{r:?}");
    }

    #[test]
    fn scale_guard_names_itself() {
        let big = system_corpus(1, &[SystemSpec::Rotation { p: 1, q: 512 }], 0, &[1]);
        let e = verify(&big, &DEFAULT_VERIFY_GRID, 2, 10).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("scale guard"));
    }

    #[test]
    fn lemma_reduction_agrees_with_pairwise_check() {
        use entrolab_core::cover_order::{cover_from_masks, for_each_covering_antichain};
        let mut r = rng(11);
        let space = crate::corpus::random_euclidean(&mut r, 4);
        let mut all = Vec::new();
        for_each_covering_antichain(4, |m| all.push(m.to_vec()));
        let all: Vec<Cover> = all.iter().map(|m| cover_from_masks(&space, m).unwrap()).collect();
        for a in &all {
            let l = covers::lebesgue_number(a);
            let pairwise = all
                .iter()
                .filter(|b| covers::diameter(b) < l)
                .all(|b| coarser_than(a, b).unwrap());
            assert_eq!(lebesgue_lemma_holds(a).unwrap(), pairwise);
        }
    }
}
