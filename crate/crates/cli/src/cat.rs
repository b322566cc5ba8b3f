//! `cat`: order-kernel suites over random or fixture preorders.
//!
//! Each suite checks a library answer against an independent enumeration:
//! natural transformations against explicit component families, Kan
//! extensions against every competing extension, adjoint search against
//! every candidate map.

use std::path::Path;
use std::sync::Arc;

use entrolab_core::order::{
    check_colim_preservation, colim_chain, compose_post_rae, is_post_right_adjoint, is_qualifying_pair, left_kan,
    nat_trans_exists, post_right_adjoint, right_kan, EntangleEdge, EntangleGraph, FinitePreorder, MapRecord,
    MonotoneMap, OrderError, PreorderRecord,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{monotone_family, random_monotone, random_preorder, rng, CorpusRng};
use crate::verify::SuiteReport;
use crate::{CliError, SCHEMA_VERSION};

/// Parameters of a suite run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatOptions {
    pub seed: u64,
    /// Maps per hom-set: all of them when there are at most this many.
    pub map_limit: usize,
    /// Competing extensions enumerated per Kan check.
    pub extension_limit: usize,
    /// Length of the value chain.
    pub chain_len: usize,
    pub entangle_instances: usize,
}

impl Default for CatOptions {
    fn default() -> Self {
        CatOptions {
            seed: 0xca7,
            map_limit: 32,
            extension_limit: 4096,
            chain_len: 4,
            entangle_instances: 200,
        }
    }
}

/// One fixture file: preorders and maps between them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    #[serde(default = "schema")]
    pub schema_version: u32,
    pub preorders: Vec<PreorderRecord>,
    #[serde(default)]
    pub maps: Vec<FixtureMap>,
}

fn schema() -> u32 {
    SCHEMA_VERSION
}

/// A map between two preorders of the same fixture, by position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureMap {
    pub dom: usize,
    pub cod: usize,
    #[serde(flatten)]
    pub record: MapRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatReport {
    pub schema_version: u32,
    pub preorders: usize,
    pub suites: Vec<SuiteReport>,
    pub all_pass: bool,
}

impl CatReport {
    pub fn first_failing(&self) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| !s.ok())
    }
}

/// `count` random preorders of 1 to 6 objects.
pub fn bundled_corpus(count: usize, seed: u64) -> Vec<Arc<FinitePreorder>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let size = r.gen_range(1..=6);
            let p = r.gen_range(0.05..0.5);
            Arc::new(random_preorder(&mut r, size, p))
        })
        .collect()
}

/// Reads every `*.json` fixture in `dir`, in file-name order.
pub fn load_fixtures(dir: &Path) -> Result<(Vec<Arc<FinitePreorder>>, Vec<MonotoneMap>), CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<_> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(format!("{}: no fixture files (*.json)", dir.display())));
    }
    let mut preorders = Vec::new();
    let mut maps = Vec::new();
    for path in files {
        let at = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let fx: Fixture = serde_json::from_str(&text).map_err(|e| at(e.to_string()))?;
        if fx.schema_version != SCHEMA_VERSION {
            return Err(at(format!("unsupported schema_version {}", fx.schema_version)));
        }
        let local: Vec<Arc<FinitePreorder>> = fx
            .preorders
            .iter()
            .enumerate()
            .map(|(i, r)| {
                FinitePreorder::from_record(r)
                    .map(Arc::new)
                    .map_err(|e| at(format!("preorder {i}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        for (k, m) in fx.maps.iter().enumerate() {
            let (Some(dom), Some(cod)) = (local.get(m.dom), local.get(m.cod)) else {
                return Err(at(format!("map {k} names a missing preorder")));
            };
            let map = MonotoneMap::from_record(dom.clone(), cod.clone(), &m.record)
                .map_err(|e| at(format!("map {k}: {e}")))?;
            maps.push(map);
        }
        preorders.extend(local);
    }
    Ok((preorders, maps))
}

const SUITES: [&str; 9] = [
    "nat_trans_brute_force",
    "kan_universal",
    "post_right_adjoint",
    "colim_preservation",
    "adjoint_composition",
    "qualifying_action",
    "colim_restriction",
    "entanglement",
    "fixture_maps",
];

fn order_err(e: OrderError) -> CliError {
    CliError::Internal(e.to_string())
}

fn dump(p: &FinitePreorder) -> serde_json::Value {
    serde_json::to_value(p.to_record()).expect("records serialize")
}

/// Runs all suites. `preorders[i]` is paired with its successors (cyclically)
/// as codomains; `extra` maps from fixtures join the relevant suites.
pub fn run_cat(preorders: &[Arc<FinitePreorder>], extra: &[MonotoneMap], opts: CatOptions) -> Result<CatReport, CliError> {
    if preorders.is_empty() {
        return Err(CliError::Config("no preorders to check".into()));
    }
    let [mut nat, mut kan, mut adj, mut sd40, mut ddp3, mut qual, mut df30, mut ent, mut fixtures]: [SuiteReport; 9] =
        SUITES.map(SuiteReport::new);
    let chain = Arc::new(FinitePreorder::chain(opts.chain_len));
    let mut r = rng(opts.seed);
    let n = preorders.len();
    for i in 0..n {
        let p = &preorders[i];
        let q = &preorders[(i + 1) % n];
        let s = &preorders[(i + 2) % n];
        let lim = opts.map_limit;
        let (pq, _) = monotone_family(&mut r, p, q, lim);
        let (qs, _) = monotone_family(&mut r, q, s, lim);
        let (pc, _) = monotone_family(&mut r, p, &chain, lim);
        let (qc, _) = monotone_family(&mut r, q, &chain, lim);
        let (sp, _) = monotone_family(&mut r, s, p, lim);

        for f in &pq {
            for g in &pq {
                let lib = nat_trans_exists(f, g).map_err(order_err)?;
                let brute = natural_family_exists(f, g);
                nat.record(lib == brute, || {
                    json!({"dom": dump(p), "cod": dump(q), "f": f.values(), "g": g.values(), "library": lib})
                });
            }
        }

        let extensions = q.monotone_maps(&chain, opts.extension_limit);
        if let Some(ext) = &extensions {
            for f in &pc {
                for k in &pq {
                    let ok = kan_universal(f, k, ext, &chain)?;
                    kan.record(ok, || json!({"x": dump(p), "d": dump(q), "f": f.values(), "k": k.values()}));
                }
            }
        }

        let candidates = q.monotone_maps(p, opts.extension_limit);
        for t in &pq {
            let found = post_right_adjoint(t).map_err(order_err)?;
            if let Some(cands) = &candidates {
                let exists = cands.iter().any(|v| v.iter().enumerate().all(|(y, &x)| q.leq(y, t.apply(x))));
                let ok = match &found {
                    Some(ts) => is_post_right_adjoint(t, ts).map_err(order_err)?,
                    None => !exists,
                };
                adj.record(ok, || json!({"a": dump(p), "b": dump(q), "t": t.values(), "found": found.as_ref().map(|m| m.values().to_vec())}));
            }
            let Some(t_star) = found else { continue };
            for rq in &qc {
                let ok = check_colim_preservation(rq, t).map_err(order_err)?;
                sd40.record(ok, || json!({"a": dump(p), "b": dump(q), "t": t.values(), "r": rq.values()}));
            }
            for t2 in &qs {
                if let Some(t2_star) = post_right_adjoint(t2).map_err(order_err)? {
                    let composite = compose_post_rae(t, &t_star, t2, &t2_star).map_err(order_err)?;
                    ddp3.record(composite.is_some(), || {
                        json!({"a": dump(p), "b": dump(q), "c": dump(s), "t1": t.values(), "t2": t2.values()})
                    });
                }
            }
        }

        let mut pairs: Vec<(MonotoneMap, MonotoneMap)> = vec![(MonotoneMap::identity(p.clone()), MonotoneMap::identity(p.clone()))];
        for f in &pq {
            for g in &pq {
                if is_qualifying_pair(f, g).map_err(order_err)? {
                    pairs.push((f.clone(), g.clone()));
                }
            }
        }
        for (f, g) in &pairs {
            for f2 in &sp {
                for g2 in &sp {
                    let lhs = f2.then(f).map_err(order_err)?;
                    let rhs = g2.then(g).map_err(order_err)?;
                    if nat_trans_exists(&lhs, &rhs).map_err(order_err)? {
                        let ok = nat_trans_exists(f2, g2).map_err(order_err)?;
                        qual.record(ok, || {
                            json!({"c": dump(p), "e": dump(s), "f": f.values(), "g": g.values(),
                                   "f_prime": f2.values(), "g_prime": g2.values()})
                        });
                    }
                }
            }
        }

        for m in &qc {
            for pm in &pq {
                let whole = colim_chain(m).map_err(order_err)?;
                let part = colim_chain(&pm.then(m).map_err(order_err)?).map_err(order_err)?;
                df30.record(chain.leq(part, whole), || json!({"p": pm.values(), "m": m.values()}));
            }
        }
    }

    let mut attempts = 0;
    while ent.instances < opts.entangle_instances as u64 {
        attempts += 1;
        if attempts > 200 * opts.entangle_instances.max(1) {
            return Err(CliError::Internal("entanglement instance generation did not converge".into()));
        }
        if let Some(g) = entangle_instance(&mut r, &chain, preorders) {
            match g.check() {
                Ok(v) => {
                    // On a chain the colimit is the largest value attained.
                    let maxima: Vec<usize> = g.nodes.iter().map(|f| *f.values().iter().max().expect("non-empty")).collect();
                    let ok = v.all_hold() && v.colims == maxima && maxima.iter().all(|&c| c == maxima[0]);
                    ent.record(ok, || json!({"colims": v.colims, "maxima": maxima}));
                }
                Err(OrderError::PreconditionFailed(_)) => {}
                Err(e) => return Err(order_err(e)),
            }
        }
    }

    for f in extra {
        let brute_ok = extra
            .iter()
            .filter(|g| g.dom() == f.dom() && g.cod() == f.cod())
            .try_fold(true, |acc, g| Ok::<_, OrderError>(acc && nat_trans_exists(f, g)? == natural_family_exists(f, g)))
            .map_err(order_err)?;
        let adj_ok = match post_right_adjoint(f) {
            Ok(Some(ts)) => is_post_right_adjoint(f, &ts).map_err(order_err)?,
            Ok(None) | Err(OrderError::SearchLimit(_)) => true,
            Err(e) => return Err(order_err(e)),
        };
        fixtures.record(brute_ok && adj_ok, || json!({"map": f.values()}));
    }

    let suites = vec![nat, kan, adj, sd40, ddp3, qual, df30, ent, fixtures];
    let all_pass = suites.iter().all(SuiteReport::ok);
    Ok(CatReport {
        schema_version: SCHEMA_VERSION,
        preorders: preorders.len(),
        suites,
        all_pass,
    })
}

/// A preorder as an explicit category: morphisms are the pairs `a <= b`,
/// composed through a lookup table.
struct ExplicitCategory {
    homs: Vec<(usize, usize)>,
    index: Vec<Vec<Option<usize>>>,
}

impl ExplicitCategory {
    fn new(p: &FinitePreorder) -> Self {
        let n = p.size();
        let mut homs = Vec::new();
        let mut index = vec![vec![None; n]; n];
        for a in 0..n {
            for b in 0..n {
                if p.leq(a, b) {
                    index[a][b] = Some(homs.len());
                    homs.push((a, b));
                }
            }
        }
        ExplicitCategory { homs, index }
    }

    /// `second ∘ first`, defined when the target of `first` is the source
    /// of `second`.
    fn compose(&self, first: usize, second: usize) -> Option<usize> {
        let (a, b) = self.homs[first];
        let (c, d) = self.homs[second];
        if b != c {
            return None;
        }
        Some(self.index[a][d].expect("composite exists in a transitive relation"))
    }
}

/// Searches all families `η_x : F x → G x` of morphisms of the codomain
/// category for one that makes every naturality square commute.
pub fn natural_family_exists(f: &MonotoneMap, g: &MonotoneMap) -> bool {
    let dom = ExplicitCategory::new(f.dom());
    let cod = ExplicitCategory::new(f.cod());
    let n = f.dom().size();
    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|x| {
            (0..cod.homs.len())
                .filter(|&m| cod.homs[m] == (f.apply(x), g.apply(x)))
                .collect()
        })
        .collect();
    let functor = |h: &MonotoneMap, m: usize| {
        let (x, y) = dom.homs[m];
        cod.index[h.apply(x)][h.apply(y)].expect("monotone maps send morphisms to morphisms")
    };
    let mut eta = vec![0; n];
    fn search(
        x: usize,
        eta: &mut [usize],
        candidates: &[Vec<usize>],
        check: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        if x == eta.len() {
            return check(eta);
        }
        for &m in &candidates[x] {
            eta[x] = m;
            if search(x + 1, eta, candidates, check) {
                return true;
            }
        }
        false
    }
    let check = |eta: &[usize]| {
        (0..dom.homs.len()).all(|m| {
            let (x, y) = dom.homs[m];
            cod.compose(eta[x], functor(g, m)) == cod.compose(functor(f, m), eta[y])
        })
    };
    search(0, &mut eta, &candidates, &check)
}

/// Checks `Lan_K F` and `Ran_K F` against every monotone `H` in `ext`.
fn kan_universal(
    f: &MonotoneMap,
    k: &MonotoneMap,
    ext: &[Vec<usize>],
    chain: &Arc<FinitePreorder>,
) -> Result<bool, CliError> {
    let lan = left_kan(f, k).map_err(order_err)?;
    let ran = right_kan(f, k).map_err(order_err)?;
    let x = f.dom().size();
    let below = |h: &[usize]| (0..x).all(|i| chain.leq(f.apply(i), h[k.apply(i)]));
    let above = |h: &[usize]| (0..x).all(|i| chain.leq(h[k.apply(i)], f.apply(i)));
    if !below(lan.values()) || !above(ran.values()) {
        return Ok(false);
    }
    for h in ext {
        let pointwise = |a: &[usize], b: &[usize]| a.iter().zip(b).all(|(&u, &v)| chain.leq(u, v));
        if below(h) && !pointwise(lan.values(), h) {
            return Ok(false);
        }
        if above(h) && !pointwise(h, ran.values()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A 3-cycle `0 → 1 → 2 → 0` with random node functors and random edge
/// data, or `None` when rejection sampling finds no edge data.
fn entangle_instance(
    r: &mut CorpusRng,
    chain: &Arc<FinitePreorder>,
    pool: &[Arc<FinitePreorder>],
) -> Option<EntangleGraph> {
    let pick = |r: &mut CorpusRng| pool[r.gen_range(0..pool.len())].clone();
    let objects: Vec<Arc<FinitePreorder>> = (0..3).map(|_| pick(r)).collect();
    let nodes: Vec<MonotoneMap> = objects.iter().map(|c| random_monotone(r, c, chain)).collect();
    let mut edges = Vec::new();
    for (from, to) in [(0, 1), (1, 2), (2, 0)] {
        let mut found = None;
        for _ in 0..20 {
            let a = pick(r);
            let f = random_monotone(r, &a, &objects[from]);
            if post_right_adjoint(&f).ok().flatten().is_none() {
                continue;
            }
            let g = random_monotone(r, &a, &objects[to]);
            let lhs = f.then(&nodes[from]).ok()?;
            let rhs = g.then(&nodes[to]).ok()?;
            if nat_trans_exists(&lhs, &rhs).ok()? {
                found = Some(EntangleEdge { from, to, f, g });
                break;
            }
        }
        edges.push(found?);
    }
    Some(EntangleGraph { nodes, edges })
}
