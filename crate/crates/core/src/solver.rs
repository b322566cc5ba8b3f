//! Exact and greedy solvers for set cover, dominating set and independent set.
//!
//! The exact solvers are depth-first branch-and-bound searches that count
//! visited nodes against a shared budget. When the budget runs out they
//! return [`SolverError::BudgetExceeded`] and the caller decides whether to
//! fall back to the greedy answer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::BitSet;

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("exact search exceeded its budget of {budget} nodes")]
    BudgetExceeded { budget: u64 },
    #[error("the sets do not cover the universe")]
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    #[default]
    Exact,
    Greedy,
}

impl std::fmt::Display for SolveMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveMode::Exact => "exact",
            SolveMode::Greedy => "greedy",
        })
    }
}

impl std::str::FromStr for SolveMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SolveMode::Exact),
            "greedy" => Ok(SolveMode::Greedy),
            other => Err(format!("unknown mode {other:?}, expected exact or greedy")),
        }
    }
}

/// Solver mode plus the node budget for exact searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub mode: SolveMode,
    pub budget: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            mode: SolveMode::Exact,
            budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl SolverOptions {
    pub fn exact(budget: u64) -> Self {
        SolverOptions {
            mode: SolveMode::Exact,
            budget,
        }
    }

    pub fn greedy() -> Self {
        SolverOptions {
            mode: SolveMode::Greedy,
            budget: 0,
        }
    }
}

/// A count together with the mode that produced it. Greedy values are bounds:
/// upper bounds for minimisation problems, lower bounds for maximisation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountResult {
    pub value: usize,
    pub mode: SolveMode,
}

impl CountResult {
    pub fn is_exact(&self) -> bool {
        self.mode == SolveMode::Exact
    }
}

/// Greedy set cover: repeatedly take the set covering the most uncovered
/// elements, ties to the lowest index. Returns the chosen set indices.
pub fn greedy_set_cover(universe: usize, sets: &[BitSet]) -> Result<Vec<usize>, SolverError> {
    let mut uncovered = BitSet::full(universe);
    let mut chosen = Vec::new();
    while !uncovered.is_empty() {
        let mut best = None;
        let mut best_gain = 0;
        for (i, s) in sets.iter().enumerate() {
            let gain = s.intersection_count(&uncovered);
            if gain > best_gain {
                best_gain = gain;
                best = Some(i);
            }
        }
        let i = best.ok_or(SolverError::Infeasible)?;
        uncovered.difference_with(&sets[i]);
        chosen.push(i);
    }
    Ok(chosen)
}

/// Families larger than this skip the subset-dominance preprocessing.
const DOMINANCE_SCAN_LIMIT: usize = 4096;

struct CoverSearch<'a> {
    universe: usize,
    sets: &'a [BitSet],
    /// containing[e] = indices of sets containing element e, largest first
    containing: Vec<Vec<usize>>,
    /// Sets excluded on the current branch: earlier siblings already
    /// explored every cover that uses them.
    banned: Vec<bool>,
    best: usize,
    nodes: u64,
    budget: u64,
}

impl CoverSearch<'_> {
    fn allowed(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        self.containing[e].iter().copied().filter(|&s| !self.banned[s])
    }

    /// Larger of two bounds: uncovered elements over the best gain, and a
    /// packing of uncovered elements no two of which share an allowed set.
    fn lower_bound(&self, uncovered: &BitSet) -> usize {
        let remaining = uncovered.count();
        if remaining == 0 {
            return 0;
        }
        let mut elems = Vec::with_capacity(remaining);
        for e in uncovered.iter() {
            let k = self.allowed(e).count();
            if k == 0 {
                return usize::MAX;
            }
            elems.push((k, e));
        }
        let max_gain = (0..self.sets.len())
            .filter(|&s| !self.banned[s])
            .map(|s| self.sets[s].intersection_count(uncovered))
            .max()
            .unwrap_or(0);
        elems.sort_unstable();
        let mut blocked = BitSet::new(self.universe);
        let mut packed = 0;
        for &(_, e) in &elems {
            if blocked.contains(e) {
                continue;
            }
            packed += 1;
            for s in self.allowed(e) {
                blocked.union_with(&self.sets[s]);
            }
        }
        packed.max(remaining.div_ceil(max_gain))
    }

    fn search(&mut self, uncovered: &BitSet, depth: usize) -> Result<(), SolverError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(SolverError::BudgetExceeded {
                budget: self.budget,
            });
        }
        if uncovered.is_empty() {
            self.best = self.best.min(depth);
            return Ok(());
        }
        let lb = self.lower_bound(uncovered);
        if lb == usize::MAX || depth + lb >= self.best {
            return Ok(());
        }
        // branch on the uncovered element with the fewest allowed sets
        let pivot = uncovered
            .iter()
            .min_by_key(|&e| self.allowed(e).count())
            .expect("non-empty");
        let mut options: Vec<(usize, usize)> = self
            .allowed(pivot)
            .map(|s| (self.sets[s].intersection_count(uncovered), s))
            .collect();
        options.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut next = uncovered.clone();
        let mut banned_here = Vec::with_capacity(options.len());
        let mut result = Ok(());
        for (_, s) in options {
            if depth + lb >= self.best {
                break;
            }
            next.clone_from(uncovered);
            next.difference_with(&self.sets[s]);
            result = self.search(&next, depth + 1);
            if result.is_err() {
                break;
            }
            self.banned[s] = true;
            banned_here.push(s);
        }
        for s in banned_here {
            self.banned[s] = false;
        }
        result
    }
}

/// Minimum number of sets whose union is `0..universe`.
pub fn exact_set_cover(universe: usize, sets: &[BitSet], budget: u64) -> Result<usize, SolverError> {
    let greedy = greedy_set_cover(universe, sets)?.len();
    if greedy <= 1 {
        return Ok(greedy);
    }
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by(|&a, &b| sets[b].count().cmp(&sets[a].count()).then(a.cmp(&b)));
    // a set inside another (or equal to an earlier one) is never needed;
    // the quadratic scan is skipped for very large families
    let mut kept: Vec<usize> = Vec::with_capacity(order.len());
    for &s in &order {
        if sets.len() > DOMINANCE_SCAN_LIMIT || !kept.iter().any(|&k| sets[s].is_subset(&sets[k])) {
            kept.push(s);
        }
    }
    let mut banned = vec![true; sets.len()];
    for &s in &kept {
        banned[s] = false;
    }
    let mut containing = vec![Vec::new(); universe];
    for &s in &kept {
        for e in sets[s].iter() {
            containing[e].push(s);
        }
    }
    let mut search = CoverSearch {
        universe,
        sets,
        containing,
        banned,
        best: greedy,
        nodes: 0,
        budget,
    };
    let start = BitSet::full(universe);
    if search.lower_bound(&start) >= greedy {
        return Ok(greedy);
    }
    search.search(&start, 0)?;
    Ok(search.best)
}

pub fn set_cover_size(universe: usize, sets: &[BitSet], opts: SolverOptions) -> Result<CountResult, SolverError> {
    match opts.mode {
        SolveMode::Exact => exact_set_cover(universe, sets, opts.budget).map(|value| CountResult {
            value,
            mode: SolveMode::Exact,
        }),
        SolveMode::Greedy => greedy_set_cover(universe, sets).map(|c| CountResult {
            value: c.len(),
            mode: SolveMode::Greedy,
        }),
    }
}

/// Simple undirected graph on `0..n` stored as adjacency bit sets (no loops).
#[derive(Clone, Debug)]
pub struct Graph {
    adj: Vec<BitSet>,
}

impl Graph {
    pub fn from_adjacency(adj: Vec<BitSet>) -> Self {
        Graph { adj }
    }

    /// Joins `i != j` whenever `close(i, j)` holds; `close` must be symmetric.
    pub fn from_relation(n: usize, mut close: impl FnMut(usize, usize) -> bool) -> Self {
        let mut adj = vec![BitSet::new(n); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if close(i, j) {
                    adj[i].insert(j);
                    adj[j].insert(i);
                }
            }
        }
        Graph { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &BitSet {
        &self.adj[v]
    }

    /// Closed neighbourhoods N[v].
    pub fn closed_neighborhoods(&self) -> Vec<BitSet> {
        self.adj
            .iter()
            .enumerate()
            .map(|(v, a)| {
                let mut s = a.clone();
                s.insert(v);
                s
            })
            .collect()
    }
}

pub fn greedy_dominating_set(g: &Graph) -> usize {
    greedy_set_cover(g.len(), &g.closed_neighborhoods())
        .expect("closed neighbourhoods always cover")
        .len()
}

pub fn exact_dominating_set(g: &Graph, budget: u64) -> Result<usize, SolverError> {
    exact_set_cover(g.len(), &g.closed_neighborhoods(), budget)
}

pub fn dominating_set_size(g: &Graph, opts: SolverOptions) -> Result<CountResult, SolverError> {
    set_cover_size(g.len(), &g.closed_neighborhoods(), opts)
}

/// Greedy independent set: repeatedly take a vertex of minimum remaining
/// degree, ties to the lowest index, and discard its neighbours.
pub fn greedy_independent_set(g: &Graph) -> Vec<usize> {
    let n = g.len();
    let mut alive = BitSet::full(n);
    let mut chosen = Vec::new();
    while let Some(v) = alive
        .iter()
        .min_by_key(|&v| g.adj[v].intersection_count(&alive))
    {
        chosen.push(v);
        alive.remove(v);
        alive.difference_with(&g.adj[v]);
    }
    chosen
}

struct IndependentSearch<'a> {
    g: &'a Graph,
    best: usize,
    nodes: u64,
    budget: u64,
}

impl IndependentSearch<'_> {
    /// Partitions `cand` into cliques of `g` (greedy), returning vertices in
    /// order of increasing clique label together with the label + 1. Any
    /// independent set meets each clique at most once, so the label bounds it.
    fn clique_cover_order(&self, cand: &BitSet) -> Vec<(usize, usize)> {
        let mut remaining = cand.clone();
        let mut out = Vec::with_capacity(cand.count());
        let mut label = 0;
        while !remaining.is_empty() {
            label += 1;
            // vertices that can still join the current clique
            let mut open = remaining.clone();
            while let Some(v) = open.first() {
                out.push((v, label));
                remaining.remove(v);
                open.remove(v);
                open.intersect_with(&self.g.adj[v]);
            }
        }
        out
    }

    fn search(&mut self, cand: BitSet, size: usize) -> Result<(), SolverError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(SolverError::BudgetExceeded {
                budget: self.budget,
            });
        }
        if cand.is_empty() {
            self.best = self.best.max(size);
            return Ok(());
        }
        let order = self.clique_cover_order(&cand);
        let mut cand = cand;
        for &(v, bound) in order.iter().rev() {
            if size + bound <= self.best {
                return Ok(());
            }
            let mut next = cand.clone();
            next.remove(v);
            next.difference_with(&self.g.adj[v]);
            self.search(next, size + 1)?;
            cand.remove(v);
        }
        Ok(())
    }
}

/// Maximum independent set size by branch and bound with a clique-cover bound.
pub fn exact_independent_set(g: &Graph, budget: u64) -> Result<usize, SolverError> {
    let n = g.len();
    let greedy = greedy_independent_set(g).len();
    let mut search = IndependentSearch {
        g,
        best: greedy,
        nodes: 0,
        budget,
    };
    let all = BitSet::full(n);
    let root_bound = search.clique_cover_order(&all).last().map_or(0, |&(_, l)| l);
    if root_bound <= greedy {
        return Ok(greedy);
    }
    search.search(all, 0)?;
    Ok(search.best)
}

pub fn independent_set_size(g: &Graph, opts: SolverOptions) -> Result<CountResult, SolverError> {
    match opts.mode {
        SolveMode::Exact => exact_independent_set(g, opts.budget).map(|value| CountResult {
            value,
            mode: SolveMode::Exact,
        }),
        SolveMode::Greedy => Ok(CountResult {
            value: greedy_independent_set(g).len(),
            mode: SolveMode::Greedy,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(n: usize, lists: &[&[usize]]) -> Vec<BitSet> {
        lists.iter().map(|l| BitSet::from_indices(n, l.iter().copied())).collect()
    }

    #[test]
    fn four_cycle_cover_needs_two() {
        let s = sets(4, &[&[0, 1], &[1, 2], &[2, 3], &[0, 3]]);
        assert_eq!(exact_set_cover(4, &s, 1000).unwrap(), 2);
        assert_eq!(greedy_set_cover(4, &s).unwrap(), vec![0, 2]);
    }

    #[test]
    fn greedy_can_be_beaten() {
        let s = sets(6, &[&[1, 2, 4, 5], &[0, 1, 2], &[3, 4, 5]]);
        assert_eq!(greedy_set_cover(6, &s).unwrap().len(), 3);
        assert_eq!(exact_set_cover(6, &s, 1000).unwrap(), 2);
        assert_eq!(
            exact_set_cover(6, &s, 1),
            Err(SolverError::BudgetExceeded { budget: 1 })
        );
    }

    #[test]
    fn infeasible_cover() {
        let s = sets(3, &[&[0, 1]]);
        assert_eq!(greedy_set_cover(3, &s), Err(SolverError::Infeasible));
    }

    #[test]
    fn cycle_graphs() {
        for n in 3..12 {
            let g = Graph::from_relation(n, |i, j| {
                let k = i.abs_diff(j);
                k.min(n - k) == 1
            });
            assert_eq!(exact_dominating_set(&g, 100_000).unwrap(), n.div_ceil(3), "C{n}");
            assert_eq!(exact_independent_set(&g, 100_000).unwrap(), n / 2, "C{n}");
        }
    }

    #[test]
    fn empty_and_complete_graphs() {
        let g = Graph::from_relation(5, |_, _| false);
        assert_eq!(exact_independent_set(&g, 10).unwrap(), 5);
        assert_eq!(exact_dominating_set(&g, 10).unwrap(), 5);
        let k = Graph::from_relation(5, |_, _| true);
        assert_eq!(exact_independent_set(&k, 10).unwrap(), 1);
        assert_eq!(exact_dominating_set(&k, 10).unwrap(), 1);
    }
}
