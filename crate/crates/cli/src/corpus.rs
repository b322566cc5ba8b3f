//! Seeded generators for test corpora: random metric spaces and systems,
//! random preorders and monotone maps.

use std::sync::Arc;

use entrolab_core::metric::{DistanceMatrix, EndoMap, FiniteMetricSpace};
use entrolab_core::order::{FinitePreorder, MonotoneMap};
use entrolab_core::systems::{build_system, SystemSpec};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type CorpusRng = ChaCha8Rng;

pub fn rng(seed: u64) -> CorpusRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A labelled system of the verification corpus.
#[derive(Clone, Debug)]
pub struct NamedSystem {
    pub name: String,
    pub space: FiniteMetricSpace,
    pub map: EndoMap,
}

/// Euclidean points in the unit square, normalized to diameter 1.
pub fn random_euclidean(rng: &mut CorpusRng, n: usize) -> FiniteMetricSpace {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let raw = DistanceMatrix::from_fn(n, |i, j| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1));
    normalize(raw)
}

/// Shortest-path metric of a complete graph with random weights in
/// `[1, 2)`, normalized. Triangle-tight distances exercise `<=` ties.
pub fn random_path_metric(rng: &mut CorpusRng, n: usize) -> FiniteMetricSpace {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = 1.0 + f64::from(rng.gen_range(0..8u8)) / 8.0;
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    normalize(DistanceMatrix::from_fn(n, |i, j| d[i][j]))
}

fn normalize(raw: DistanceMatrix) -> FiniteMetricSpace {
    let max = raw.max_entry();
    let n = raw.len();
    let scaled = if max > 0.0 {
        DistanceMatrix::from_fn(n, |i, j| raw.get(i, j) / max)
    } else {
        raw
    };
    FiniteMetricSpace::validate_matrix(scaled).expect("generated metrics are valid")
}

pub fn random_map(rng: &mut CorpusRng, n: usize) -> EndoMap {
    EndoMap::new((0..n).map(|_| rng.gen_range(0..n)).collect()).expect("in range")
}

/// Built-in systems plus `random` random spaces with random self-maps,
/// sizes drawn from `sizes`.
pub fn system_corpus(seed: u64, builtins: &[SystemSpec], random: usize, sizes: &[usize]) -> Vec<NamedSystem> {
    let mut out: Vec<NamedSystem> = builtins
        .iter()
        .map(|spec| {
            let s = build_system(spec).expect("valid built-in spec");
            NamedSystem {
                name: serde_json::to_string(spec).expect("spec serializes"),
                space: s.space,
                map: s.map,
            }
        })
        .collect();
    let mut rng = rng(seed);
    for i in 0..random {
        let n = *sizes.choose(&mut rng).expect("non-empty sizes");
        let (kind, space) = if i % 2 == 0 {
            ("euclidean", random_euclidean(&mut rng, n))
        } else {
            ("path", random_path_metric(&mut rng, n))
        };
        let map = random_map(&mut rng, n);
        out.push(NamedSystem {
            name: format!("random-{kind}-{i}-n{n}"),
            space,
            map,
        });
    }
    out
}

/// Reflexive-transitive closure of a random relation with edge density
/// `p`.
pub fn random_preorder(rng: &mut CorpusRng, size: usize, p: f64) -> FinitePreorder {
    let rel: Vec<bool> = (0..size * size).map(|_| rng.gen_bool(p)).collect();
    FinitePreorder::closure(size, |i, j| rel[i * size + j])
}

/// A uniformly drawn choice at each step of a depth-first assignment in
/// index order; constant maps guarantee the search succeeds.
pub fn random_monotone(rng: &mut CorpusRng, dom: &Arc<FinitePreorder>, cod: &Arc<FinitePreorder>) -> MonotoneMap {
    fn fill(rng: &mut CorpusRng, dom: &FinitePreorder, cod: &FinitePreorder, values: &mut Vec<usize>) -> bool {
        let i = values.len();
        if i == dom.size() {
            return true;
        }
        let mut cands: Vec<usize> = (0..cod.size()).collect();
        cands.shuffle(rng);
        for v in cands {
            let ok = (0..i).all(|j| {
                (!dom.leq(j, i) || cod.leq(values[j], v)) && (!dom.leq(i, j) || cod.leq(v, values[j]))
            });
            if ok {
                values.push(v);
                if fill(rng, dom, cod, values) {
                    return true;
                }
                values.pop();
            }
        }
        false
    }
    let mut values = Vec::with_capacity(dom.size());
    assert!(fill(rng, dom, cod, &mut values), "constant maps always exist");
    MonotoneMap::new(dom.clone(), cod.clone(), values).expect("monotone by construction")
}

/// All monotone maps when there are at most `limit`, else `limit` random
/// ones (possibly repeating).
pub fn monotone_family(
    rng: &mut CorpusRng,
    dom: &Arc<FinitePreorder>,
    cod: &Arc<FinitePreorder>,
    limit: usize,
) -> (Vec<MonotoneMap>, bool) {
    match dom.monotone_maps(cod, limit) {
        Some(all) => (
            all.into_iter()
                .map(|v| MonotoneMap::new(dom.clone(), cod.clone(), v).expect("enumerated maps are monotone"))
                .collect(),
            true,
        ),
        None => ((0..limit).map(|_| random_monotone(rng, dom, cod)).collect(), false),
    }
}
