//! Finite preorders as thin categories.
//!
//! A monotone map is a functor, a pointwise inequality is the unique natural
//! transformation, and Kan extensions along maps into chains are pointwise
//! suprema and infima. Every universal property here is decidable by
//! enumeration.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Candidate-map limit for the exhaustive post-right-adjoint search.
pub const ADJOINT_SEARCH_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrderError {
    #[error("relation matrix is not square")]
    NotSquare,
    #[error("relation is not reflexive at {0}")]
    NotReflexive(usize),
    #[error("relation is not transitive: {0} <= {1} <= {2}")]
    NotTransitive(usize, usize, usize),
    #[error("value {value} at {index} is outside a codomain of size {size}")]
    ValueOutOfRange { index: usize, value: usize, size: usize },
    #[error("map is not monotone: {0} <= {1} but images are not ordered")]
    NotMonotone(usize, usize),
    #[error("maps do not share domain and codomain")]
    SignatureMismatch,
    #[error("maps do not share a codomain")]
    CodomainMismatch,
    #[error("maps do not compose")]
    NotComposable,
    #[error("no supremum or infimum exists in the target")]
    NoBound,
    #[error("chain labels must be finite and distinct")]
    InvalidChain,
    #[error("no post-right adjoint exists")]
    AdjointMissing,
    #[error("exhaustive adjoint search would exceed {0} candidate maps")]
    SearchLimit(u64),
    #[error("edge preconditions failed: {0:?}")]
    PreconditionFailed(Vec<usize>),
    #[error("entanglement graph is malformed: {0}")]
    MalformedGraph(String),
    #[error("scaling factor must be positive and finite, got {0}")]
    InvalidFactor(f64),
}

/// A reflexive, transitive relation on `0..size`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FinitePreorder {
    size: usize,
    leq: Vec<bool>,
}

/// JSON form: `{"leq": [[bool, ...], ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreorderRecord {
    pub leq: Vec<Vec<bool>>,
}

impl FinitePreorder {
    pub fn new(leq: Vec<Vec<bool>>) -> Result<Self, OrderError> {
        let size = leq.len();
        if leq.iter().any(|row| row.len() != size) {
            return Err(OrderError::NotSquare);
        }
        let p = FinitePreorder {
            size,
            leq: leq.into_iter().flatten().collect(),
        };
        p.check()?;
        Ok(p)
    }

    /// Builds `i <= j iff rel(i, j)`, closing nothing; the relation is validated.
    pub fn from_fn(size: usize, mut rel: impl FnMut(usize, usize) -> bool) -> Result<Self, OrderError> {
        let mut leq = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                leq.push(rel(i, j));
            }
        }
        let p = FinitePreorder { size, leq };
        p.check()?;
        Ok(p)
    }

    /// Reflexive-transitive closure of `rel`.
    pub fn closure(size: usize, mut rel: impl FnMut(usize, usize) -> bool) -> Self {
        let mut leq = vec![false; size * size];
        for i in 0..size {
            for j in 0..size {
                leq[i * size + j] = i == j || rel(i, j);
            }
        }
        for k in 0..size {
            for i in 0..size {
                if leq[i * size + k] {
                    for j in 0..size {
                        if leq[k * size + j] {
                            leq[i * size + j] = true;
                        }
                    }
                }
            }
        }
        FinitePreorder { size, leq }
    }

    fn check(&self) -> Result<(), OrderError> {
        let n = self.size;
        for i in 0..n {
            if !self.leq(i, i) {
                return Err(OrderError::NotReflexive(i));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if !self.leq(i, j) {
                    continue;
                }
                for k in 0..n {
                    if self.leq(j, k) && !self.leq(i, k) {
                        return Err(OrderError::NotTransitive(i, j, k));
                    }
                }
            }
        }
        Ok(())
    }

    /// `0 <= 1 <= ... <= n-1`.
    pub fn chain(n: usize) -> Self {
        FinitePreorder::closure(n, |i, j| i <= j)
    }

    /// Only `i <= i`.
    pub fn antichain(n: usize) -> Self {
        FinitePreorder::closure(n, |_, _| false)
    }

    pub fn from_record(record: &PreorderRecord) -> Result<Self, OrderError> {
        FinitePreorder::new(record.leq.clone())
    }

    pub fn to_record(&self) -> PreorderRecord {
        PreorderRecord {
            leq: (0..self.size)
                .map(|i| (0..self.size).map(|j| self.leq(i, j)).collect())
                .collect(),
        }
    }

    /// The same objects with every arrow reversed.
    pub fn opposite(&self) -> Self {
        let n = self.size;
        FinitePreorder {
            size: n,
            leq: (0..n * n).map(|k| self.leq[(k % n) * n + k / n]).collect(),
        }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i * self.size + j]
    }

    #[inline]
    pub fn equivalent(&self, i: usize, j: usize) -> bool {
        self.leq(i, j) && self.leq(j, i)
    }

    pub fn is_total(&self) -> bool {
        (0..self.size).all(|i| (0..self.size).all(|j| self.leq(i, j) || self.leq(j, i)))
    }

    /// Least upper bound of `objects`, lowest index among equivalent choices.
    /// The empty set yields the least element.
    pub fn sup(&self, objects: impl IntoIterator<Item = usize>) -> Option<usize> {
        let objects: Vec<usize> = objects.into_iter().collect();
        let uppers: Vec<usize> = (0..self.size)
            .filter(|&u| objects.iter().all(|&x| self.leq(x, u)))
            .collect();
        uppers
            .iter()
            .copied()
            .find(|&u| uppers.iter().all(|&v| self.leq(u, v)))
    }

    /// Greatest lower bound of `objects`; the empty set yields the greatest element.
    pub fn inf(&self, objects: impl IntoIterator<Item = usize>) -> Option<usize> {
        let objects: Vec<usize> = objects.into_iter().collect();
        let lowers: Vec<usize> = (0..self.size)
            .filter(|&l| objects.iter().all(|&x| self.leq(l, x)))
            .collect();
        lowers
            .iter()
            .copied()
            .find(|&l| lowers.iter().all(|&v| self.leq(v, l)))
    }

    pub fn bottom(&self) -> Option<usize> {
        self.sup([])
    }

    pub fn top(&self) -> Option<usize> {
        self.inf([])
    }

    /// All monotone maps into `cod` as value vectors, in lexicographic order.
    ///
    /// Returns `None` once more than `limit` maps have been found.
    pub fn monotone_maps(&self, cod: &FinitePreorder, limit: usize) -> Option<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        let mut values = Vec::with_capacity(self.size);
        if self.extend_maps(cod, &mut values, &mut out, limit) {
            Some(out)
        } else {
            None
        }
    }

    fn extend_maps(&self, cod: &FinitePreorder, values: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, limit: usize) -> bool {
        let i = values.len();
        if i == self.size {
            if out.len() >= limit {
                return false;
            }
            out.push(values.clone());
            return true;
        }
        for v in 0..cod.size {
            let ok = (0..i).all(|j| {
                (!self.leq(j, i) || cod.leq(values[j], v)) && (!self.leq(i, j) || cod.leq(v, values[j]))
            });
            if ok {
                values.push(v);
                let more = self.extend_maps(cod, values, out, limit);
                values.pop();
                if !more {
                    return false;
                }
            }
        }
        true
    }
}

/// An extended real used to label chain objects.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ChainValue {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ChainValue {
    fn rank(&self) -> u8 {
        match self {
            ChainValue::NegInf => 0,
            ChainValue::Finite(_) => 1,
            ChainValue::PosInf => 2,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ChainValue::Finite(x) => Some(x),
            _ => None,
        }
    }
}

impl Eq for ChainValue {}

impl PartialOrd for ChainValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ChainValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ChainValue::Finite(a), ChainValue::Finite(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl std::fmt::Display for ChainValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChainValue::NegInf => write!(f, "-inf"),
            ChainValue::Finite(x) => write!(f, "{x}"),
            ChainValue::PosInf => write!(f, "+inf"),
        }
    }
}

/// A totally ordered preorder whose objects carry distinct extended-real labels.
///
/// In an ascending chain object `i <= j` iff `label(i) <= label(j)`; a
/// descending chain (such as the ε-category, ordered by `>=`) uses the
/// opposite relation with the same labels.
#[derive(Clone, Debug)]
pub struct Chain {
    order: Arc<FinitePreorder>,
    labels: Vec<ChainValue>,
}

impl Chain {
    fn build(mut labels: Vec<ChainValue>, descending: bool) -> Result<Self, OrderError> {
        if labels.iter().any(|v| matches!(v, ChainValue::Finite(x) if !x.is_finite())) {
            return Err(OrderError::InvalidChain);
        }
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(OrderError::InvalidChain);
        }
        let n = labels.len();
        let order = if descending {
            FinitePreorder::closure(n, |i, j| i >= j)
        } else {
            FinitePreorder::chain(n)
        };
        Ok(Chain {
            order: Arc::new(order),
            labels,
        })
    }

    /// Ascending chain on the given values.
    pub fn ascending(values: impl IntoIterator<Item = f64>) -> Result<Self, OrderError> {
        Chain::build(values.into_iter().map(ChainValue::Finite).collect(), false)
    }

    /// Ascending chain with `-inf` and `+inf` sentinels added.
    pub fn ascending_extended(values: impl IntoIterator<Item = f64>) -> Result<Self, OrderError> {
        let mut labels: Vec<ChainValue> = values.into_iter().map(ChainValue::Finite).collect();
        labels.push(ChainValue::NegInf);
        labels.push(ChainValue::PosInf);
        Chain::build(labels, false)
    }

    /// The chain ordered by `>=`: larger values come first.
    pub fn descending(values: impl IntoIterator<Item = f64>) -> Result<Self, OrderError> {
        Chain::build(values.into_iter().map(ChainValue::Finite).collect(), true)
    }

    /// `0 <= 1 <= ... <= n-1` labelled by the integers.
    pub fn levels(n: usize) -> Self {
        Chain::ascending((0..n).map(|i| i as f64)).expect("distinct integers")
    }

    pub fn order(&self) -> &Arc<FinitePreorder> {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> ChainValue {
        self.labels[i]
    }

    pub fn labels(&self) -> &[ChainValue] {
        &self.labels
    }

    pub fn index_of(&self, value: ChainValue) -> Option<usize> {
        self.labels.binary_search(&value).ok()
    }
}

/// An order-preserving map between finite preorders.
#[derive(Clone, Debug)]
pub struct MonotoneMap {
    dom: Arc<FinitePreorder>,
    cod: Arc<FinitePreorder>,
    values: Vec<usize>,
}

/// JSON form: `{"values": [...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapRecord {
    pub values: Vec<usize>,
}

fn same(a: &Arc<FinitePreorder>, b: &Arc<FinitePreorder>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl MonotoneMap {
    pub fn new(dom: Arc<FinitePreorder>, cod: Arc<FinitePreorder>, values: Vec<usize>) -> Result<Self, OrderError> {
        if values.len() != dom.size() {
            return Err(OrderError::SignatureMismatch);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, &v)| v >= cod.size()) {
            return Err(OrderError::ValueOutOfRange {
                index,
                value,
                size: cod.size(),
            });
        }
        for i in 0..dom.size() {
            for j in 0..dom.size() {
                if dom.leq(i, j) && !cod.leq(values[i], values[j]) {
                    return Err(OrderError::NotMonotone(i, j));
                }
            }
        }
        Ok(MonotoneMap { dom, cod, values })
    }

    pub fn identity(p: Arc<FinitePreorder>) -> Self {
        MonotoneMap {
            values: (0..p.size()).collect(),
            dom: p.clone(),
            cod: p,
        }
    }

    pub fn constant(dom: Arc<FinitePreorder>, cod: Arc<FinitePreorder>, value: usize) -> Result<Self, OrderError> {
        let values = vec![value; dom.size()];
        MonotoneMap::new(dom, cod, values)
    }

    pub fn from_record(
        dom: Arc<FinitePreorder>,
        cod: Arc<FinitePreorder>,
        record: &MapRecord,
    ) -> Result<Self, OrderError> {
        MonotoneMap::new(dom, cod, record.values.clone())
    }

    pub fn to_record(&self) -> MapRecord {
        MapRecord {
            values: self.values.clone(),
        }
    }

    pub fn dom(&self) -> &Arc<FinitePreorder> {
        &self.dom
    }

    pub fn cod(&self) -> &Arc<FinitePreorder> {
        &self.cod
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.values[x]
    }

    /// `outer ∘ self`.
    pub fn then(&self, outer: &MonotoneMap) -> Result<MonotoneMap, OrderError> {
        if !same(&self.cod, &outer.dom) {
            return Err(OrderError::NotComposable);
        }
        Ok(MonotoneMap {
            dom: self.dom.clone(),
            cod: outer.cod.clone(),
            values: self.values.iter().map(|&v| outer.values[v]).collect(),
        })
    }

    /// Pointwise equivalence in the codomain.
    pub fn equivalent(&self, other: &MonotoneMap) -> Result<bool, OrderError> {
        check_signature(self, other)?;
        Ok((0..self.dom.size()).all(|x| self.cod.equivalent(self.values[x], other.values[x])))
    }
}

fn check_signature(f: &MonotoneMap, g: &MonotoneMap) -> Result<(), OrderError> {
    if same(&f.dom, &g.dom) && same(&f.cod, &g.cod) {
        Ok(())
    } else {
        Err(OrderError::SignatureMismatch)
    }
}

/// A natural transformation `F ⇒ G` exists iff `F(x) <= G(x)` for every `x`.
pub fn nat_trans_exists(f: &MonotoneMap, g: &MonotoneMap) -> Result<bool, OrderError> {
    check_signature(f, g)?;
    Ok((0..f.dom.size()).all(|x| f.cod.leq(f.values[x], g.values[x])))
}

/// Objects of the comma category `F ↓ G`: pairs `(d, e)` with `F(d) <= G(e)`.
pub fn comma_objects(f: &MonotoneMap, g: &MonotoneMap) -> Result<Vec<(usize, usize)>, OrderError> {
    if !same(&f.cod, &g.cod) {
        return Err(OrderError::CodomainMismatch);
    }
    let mut out = Vec::new();
    for d in 0..f.dom.size() {
        for e in 0..g.dom.size() {
            if f.cod.leq(f.values[d], g.values[e]) {
                out.push((d, e));
            }
        }
    }
    Ok(out)
}

/// `G ⇒ F`, and every comma object `F(c1) <= G(c2)` forces `c1 <= c2`.
///
/// The transformation runs from `G` to `F`: for the Lebesgue and diameter
/// pair `(L, D)` it is `D ⇒ L`, the only direction compatible with the
/// reflection condition unless `L = D`.
pub fn is_qualifying_pair(f: &MonotoneMap, g: &MonotoneMap) -> Result<bool, OrderError> {
    if !nat_trans_exists(g, f)? {
        return Ok(false);
    }
    let dom = &f.dom;
    Ok(comma_objects(f, g)?.into_iter().all(|(c1, c2)| dom.leq(c1, c2)))
}

/// `Lan_K F (d) = sup { F(x) : K(x) <= d }`.
pub fn left_kan(f: &MonotoneMap, k: &MonotoneMap) -> Result<MonotoneMap, OrderError> {
    if !same(&f.dom, &k.dom) {
        return Err(OrderError::SignatureMismatch);
    }
    let d = &k.cod;
    let values = (0..d.size())
        .map(|t| {
            f.cod
                .sup((0..f.dom.size()).filter(|&x| d.leq(k.values[x], t)).map(|x| f.values[x]))
                .ok_or(OrderError::NoBound)
        })
        .collect::<Result<Vec<_>, _>>()?;
    MonotoneMap::new(d.clone(), f.cod.clone(), values)
}

/// `Ran_K F (d) = inf { F(x) : d <= K(x) }`.
pub fn right_kan(f: &MonotoneMap, k: &MonotoneMap) -> Result<MonotoneMap, OrderError> {
    if !same(&f.dom, &k.dom) {
        return Err(OrderError::SignatureMismatch);
    }
    let d = &k.cod;
    let values = (0..d.size())
        .map(|t| {
            f.cod
                .inf((0..f.dom.size()).filter(|&x| d.leq(t, k.values[x])).map(|x| f.values[x]))
                .ok_or(OrderError::NoBound)
        })
        .collect::<Result<Vec<_>, _>>()?;
    MonotoneMap::new(d.clone(), f.cod.clone(), values)
}

/// True iff `b <= T(T*(b))` for every `b`.
pub fn is_post_right_adjoint(t: &MonotoneMap, t_star: &MonotoneMap) -> Result<bool, OrderError> {
    if !same(&t.dom, &t_star.cod) || !same(&t.cod, &t_star.dom) {
        return Err(OrderError::SignatureMismatch);
    }
    let b = &t.cod;
    Ok((0..b.size()).all(|y| b.leq(y, t.values[t_star.values[y]])))
}

/// A monotone `T*` with `Id ⇒ T T*`, or `None` when none exists.
///
/// Tries the least candidate `T*(b) ∈ {a : b <= T(a)}` per object first and
/// falls back to exhaustive search, which is refused beyond
/// [`ADJOINT_SEARCH_LIMIT`] candidate maps.
pub fn post_right_adjoint(t: &MonotoneMap) -> Result<Option<MonotoneMap>, OrderError> {
    let (a, b) = (&t.dom, &t.cod);
    let candidates: Vec<Vec<usize>> = (0..b.size())
        .map(|y| (0..a.size()).filter(|&x| b.leq(y, t.values[x])).collect())
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return Ok(None);
    }
    let canonical: Vec<usize> = candidates
        .iter()
        .map(|c| {
            c.iter()
                .copied()
                .find(|&x| c.iter().all(|&z| a.leq(x, z)))
                .unwrap_or(c[0])
        })
        .collect();
    if let Ok(m) = MonotoneMap::new(b.clone(), a.clone(), canonical) {
        return Ok(Some(m));
    }
    let total = candidates
        .iter()
        .try_fold(1u64, |acc, c| acc.checked_mul(c.len() as u64))
        .unwrap_or(u64::MAX);
    if total > ADJOINT_SEARCH_LIMIT {
        return Err(OrderError::SearchLimit(ADJOINT_SEARCH_LIMIT));
    }
    let mut values = Vec::with_capacity(b.size());
    if search_adjoint(b, a, &candidates, &mut values) {
        return Ok(Some(MonotoneMap::new(b.clone(), a.clone(), values)?));
    }
    Ok(None)
}

fn search_adjoint(b: &FinitePreorder, a: &FinitePreorder, candidates: &[Vec<usize>], values: &mut Vec<usize>) -> bool {
    let i = values.len();
    if i == b.size() {
        return true;
    }
    for &v in &candidates[i] {
        let ok = (0..i).all(|j| (!b.leq(j, i) || a.leq(values[j], v)) && (!b.leq(i, j) || a.leq(v, values[j])));
        if ok {
            values.push(v);
            if search_adjoint(b, a, candidates, values) {
                return true;
            }
            values.pop();
        }
    }
    false
}

/// The colimit of a map into a preorder: the supremum of its image.
pub fn colim_chain(f: &MonotoneMap) -> Result<usize, OrderError> {
    f.cod.sup(f.values.iter().copied()).ok_or(OrderError::NoBound)
}

/// The limit: the infimum of the image.
pub fn lim_chain(f: &MonotoneMap) -> Result<usize, OrderError> {
    f.cod.inf(f.values.iter().copied()).ok_or(OrderError::NoBound)
}

/// Compares `colim R` with `colim R∘T`; `T` must admit a post-right adjoint.
pub fn check_colim_preservation(r: &MonotoneMap, t: &MonotoneMap) -> Result<bool, OrderError> {
    if !same(&t.cod, &r.dom) {
        return Err(OrderError::NotComposable);
    }
    if post_right_adjoint(t)?.is_none() {
        return Err(OrderError::AdjointMissing);
    }
    let whole = colim_chain(r)?;
    let restricted = colim_chain(&t.then(r)?)?;
    Ok(r.cod.equivalent(whole, restricted))
}

/// `T1* ∘ T2*` as a post-right adjoint of `T2 ∘ T1`, or `None` if it fails
/// the defining inequality.
pub fn compose_post_rae(
    t1: &MonotoneMap,
    t1_star: &MonotoneMap,
    t2: &MonotoneMap,
    t2_star: &MonotoneMap,
) -> Result<Option<MonotoneMap>, OrderError> {
    let composite = t1.then(t2)?;
    let star = t2_star.then(t1_star)?;
    Ok(is_post_right_adjoint(&composite, &star)?.then_some(star))
}

/// Edge data of an entanglement graph: maps `A → C_from` and `A → C_to`.
#[derive(Clone, Debug)]
pub struct EntangleEdge {
    pub from: usize,
    pub to: usize,
    pub f: MonotoneMap,
    pub g: MonotoneMap,
}

/// Node functors `F_i : C_i → chain` sharing one codomain, joined by edges.
#[derive(Clone, Debug)]
pub struct EntangleGraph {
    pub nodes: Vec<MonotoneMap>,
    pub edges: Vec<EntangleEdge>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntanglePair {
    pub from: usize,
    pub to: usize,
    pub same_component: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntangleVerdict {
    /// Colimit of each node functor, as an object of the shared codomain.
    pub colims: Vec<usize>,
    /// `reach[i][j]`: a directed path leads from `i` to `j`.
    pub reach: Vec<Vec<bool>>,
    /// One entry per ordered pair joined by a path.
    pub pairs: Vec<EntanglePair>,
}

impl EntangleVerdict {
    pub fn all_hold(&self) -> bool {
        self.pairs.iter().all(|p| p.holds)
    }
}

impl EntangleGraph {
    /// Indices of edges whose map `f` has no post-right adjoint or whose
    /// witness `F_from ∘ f <= F_to ∘ g` fails.
    pub fn failed_edges(&self) -> Result<Vec<usize>, OrderError> {
        let mut bad = Vec::new();
        for (k, e) in self.edges.iter().enumerate() {
            if e.from >= self.nodes.len() || e.to >= self.nodes.len() {
                return Err(OrderError::MalformedGraph(format!("edge {k} names a missing node")));
            }
            let lhs = e.f.then(&self.nodes[e.from])?;
            let rhs = e.g.then(&self.nodes[e.to])?;
            if post_right_adjoint(&e.f)?.is_none() || !nat_trans_exists(&lhs, &rhs)? {
                bad.push(k);
            }
        }
        Ok(bad)
    }

    /// Checks `colim F_i <= colim F_j` along every path and equality inside
    /// every strongly connected component.
    pub fn check(&self) -> Result<EntangleVerdict, OrderError> {
        let Some(first) = self.nodes.first() else {
            return Err(OrderError::MalformedGraph("no nodes".into()));
        };
        let target = first.cod.clone();
        if self.nodes.iter().any(|f| !same(&f.cod, &target)) {
            return Err(OrderError::MalformedGraph("node functors have different codomains".into()));
        }
        let bad = self.failed_edges()?;
        if !bad.is_empty() {
            return Err(OrderError::PreconditionFailed(bad));
        }
        let n = self.nodes.len();
        let colims = self.nodes.iter().map(colim_chain).collect::<Result<Vec<_>, _>>()?;
        let reach = FinitePreorder::closure(n, |i, j| self.edges.iter().any(|e| e.from == i && e.to == j));
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || !reach.leq(i, j) {
                    continue;
                }
                let same_component = reach.leq(j, i);
                let holds = if same_component {
                    target.equivalent(colims[i], colims[j])
                } else {
                    target.leq(colims[i], colims[j])
                };
                pairs.push(EntanglePair {
                    from: i,
                    to: j,
                    same_component,
                    holds,
                });
            }
        }
        Ok(EntangleVerdict {
            colims,
            reach: reach.to_record().leq,
            pairs,
        })
    }
}

/// `min(a·x, 1)`.
pub fn scale_eps(x: f64, a: f64) -> f64 {
    (a * x).min(1.0)
}

/// The scaling functor between ε-chains and division by the factor.
#[derive(Clone, Debug)]
pub struct ScalingCheck {
    pub factor: f64,
    pub domain: Chain,
    pub codomain: Chain,
    /// `x ↦ min(a·x, 1)`.
    pub scale: MonotoneMap,
    /// `y ↦ min(y / a, 1)`.
    pub division: MonotoneMap,
    pub division_is_post_right_adjoint: bool,
    /// `scale ∘ division` is the identity.
    pub division_is_right_inverse: bool,
}

/// Builds scaling by `a` on ε-chains (ordered by `>=`) generated by `grid`.
///
/// The domain holds `min(y/a, 1)` for each grid value `y` together with 1;
/// the codomain holds the grid and the scaled domain, so both maps are total.
pub fn scaling_functor(grid: &[f64], a: f64) -> Result<ScalingCheck, OrderError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(OrderError::InvalidFactor(a));
    }
    if grid.iter().any(|&y| !(y > 0.0 && y <= 1.0)) {
        return Err(OrderError::InvalidChain);
    }
    let mut dom_values: Vec<f64> = grid.iter().map(|&y| (y / a).min(1.0)).collect();
    dom_values.push(1.0);
    let domain = Chain::descending(distinct(dom_values))?;
    let mut cod_values: Vec<f64> = grid.to_vec();
    cod_values.extend(domain.labels().iter().filter_map(ChainValue::finite).map(|x| scale_eps(x, a)));
    let codomain = Chain::descending(distinct(cod_values))?;
    let scale_values = domain
        .labels()
        .iter()
        .map(|v| nearest(&codomain, scale_eps(v.finite().expect("finite"), a)))
        .collect::<Result<Vec<_>, _>>()?;
    let division_values = codomain
        .labels()
        .iter()
        .map(|v| nearest(&domain, (v.finite().expect("finite") / a).min(1.0)))
        .collect::<Result<Vec<_>, _>>()?;
    let scale = MonotoneMap::new(domain.order().clone(), codomain.order().clone(), scale_values)?;
    let division = MonotoneMap::new(codomain.order().clone(), domain.order().clone(), division_values)?;
    let division_is_post_right_adjoint = is_post_right_adjoint(&scale, &division)?;
    let round_trip = division.then(&scale)?;
    let division_is_right_inverse = round_trip.values().iter().enumerate().all(|(y, &v)| y == v);
    Ok(ScalingCheck {
        factor: a,
        domain,
        codomain,
        scale,
        division,
        division_is_post_right_adjoint,
        division_is_right_inverse,
    })
}

/// Relative tolerance under which two ε values name the same chain object;
/// absorbs the rounding in `(y / a) * a`.
const SNAP_TOL: f64 = 1e-12;

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= SNAP_TOL * x.abs().max(y.abs())
}

fn distinct(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|x, y| close(*x, *y));
    v
}

fn nearest(c: &Chain, v: f64) -> Result<usize, OrderError> {
    c.labels()
        .iter()
        .position(|l| l.finite().is_some_and(|x| close(x, v)))
        .ok_or(OrderError::InvalidChain)
}
