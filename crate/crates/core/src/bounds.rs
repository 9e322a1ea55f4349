//! Bounds on the normalised equality cost `f(G)`:
//!
//! * the fractional cut packing number `fc(G)`, solved exactly as the
//!   packing LP over all bipartition cuts, with the covering LP optimum read
//!   off the final tableau and both certified against each other;
//! * `c2(G)`, the fewest edges in a 2-edge-connected spanning sub-multigraph
//!   allowed to double edges, by branch and bound;
//! * an interval report combining them with `alpha(G)` and `k/2`, summed
//!   over blocks.
//!
//! Everything is normalised to `n = 1`. Input multiplicities are ignored:
//! a doubled edge is still one communication link.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::{
    self, blocks, enumerate_cuts, hamiltonian_cycle, independence_number, is_two_edge_connected, Cut, Graph,
    GraphError, DEFAULT_VERTEX_LIMIT,
};
use crate::lp::{self, LpError};

pub type Rational = BigRational;

/// Default cap on branch-and-bound nodes for `c2`.
pub const DEFAULT_C2_BUDGET: u64 = 20_000_000;

/// `"p/q"`, or `"p"` when the denominator is 1.
pub fn render(r: &Rational) -> String {
    r.to_string()
}

pub(crate) fn serialize_rational<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&render(r))
}

fn serialize_rationals<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(render))
}

fn half(n: usize) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(2))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("c2 search exceeded {0} nodes")]
    Budget(u64),
    #[error("c2 supports at most 63 edges, got {0}")]
    TooManyEdges(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("primal and dual certificates disagree: {0}")]
    Certificate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub vertices: usize,
    pub c2_nodes: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { vertices: DEFAULT_VERTEX_LIMIT, c2_nodes: DEFAULT_C2_BUDGET }
    }
}

// ---------------------------------------------------------------------------
// Fractional cut packing
// ---------------------------------------------------------------------------

/// Nonnegative weights on cuts, keyed by the canonical side mask.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CutPacking {
    pub weights: BTreeMap<u64, Rational>,
}

impl CutPacking {
    pub fn add(&mut self, side: u64, w: Rational) {
        let entry = self.weights.entry(side).or_insert_with(Rational::zero);
        *entry += w;
    }

    pub fn value(&self) -> Rational {
        self.weights.values().sum()
    }

    /// Total weight of cuts crossing each edge of `g`.
    pub fn edge_loads(&self, g: &Graph) -> Vec<Rational> {
        let mut loads = vec![Rational::zero(); g.edge_count()];
        for (&side, w) in &self.weights {
            for e in Cut::from_side(g, side).crossing {
                loads[e] += w;
            }
        }
        loads
    }

    pub fn is_feasible(&self, g: &Graph) -> bool {
        let one = Rational::one();
        self.weights.values().all(|w| !w.is_negative() && *w <= one) && self.edge_loads(g).iter().all(|l| *l <= one)
    }
}

impl Serialize for CutPacking {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry {
            side: Vec<usize>,
            weight: String,
        }
        s.collect_seq(
            self.weights.iter().map(|(&side, w)| Entry {
                side: (0..64).filter(|&v| (side >> v) & 1 == 1).collect(),
                weight: render(w),
            }),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FcSolution {
    #[serde(serialize_with = "serialize_rational")]
    pub value: Rational,
    /// Optimal covering weights `b(e)`, aligned with [`Graph::edges`].
    #[serde(serialize_with = "serialize_rationals")]
    pub primal: Vec<Rational>,
    pub packing: CutPacking,
}

/// Checks that `b` covers every cut of `g` with weight at least 1.
pub fn covers_all_cuts(g: &Graph, b: &[Rational], cuts: &[Cut]) -> bool {
    let one = Rational::one();
    b.iter().all(|v| !v.is_negative())
        && cuts.iter().all(|c| c.crossing.iter().map(|&e| &b[e]).sum::<Rational>() >= one)
        && b.len() == g.edge_count()
}

/// Exact `fc(G)` with an optimal covering `b` and an optimal packing.
pub fn fc(g: &Graph, limits: Limits) -> Result<FcSolution, BoundsError> {
    let g = g.underlying();
    if !g.is_connected() {
        return Err(GraphError::Disconnected.into());
    }
    let cuts = enumerate_cuts(&g, limits.vertices)?;
    let one = Rational::one();
    let zero = Rational::zero();
    let objective = vec![one.clone(); cuts.len()];
    let rows: Vec<Vec<Rational>> = (0..g.edge_count())
        .map(|e| cuts.iter().map(|c| if c.contains_edge(e) { one.clone() } else { zero.clone() }).collect())
        .collect();
    let rhs = vec![one.clone(); g.edge_count()];
    let sol = lp::maximize(&objective, &rows, &rhs)?;

    let mut packing = CutPacking::default();
    for (cut, w) in cuts.iter().zip(sol.x) {
        if !w.is_zero() {
            packing.add(cut.side_mask(), w);
        }
    }
    let primal = sol.y;
    if !packing.is_feasible(&g) {
        return Err(BoundsError::Certificate("packing overloads an edge".into()));
    }
    if !covers_all_cuts(&g, &primal, &cuts) {
        return Err(BoundsError::Certificate("covering misses a cut".into()));
    }
    let primal_value: Rational = primal.iter().sum();
    if primal_value != packing.value() || primal_value != sol.value {
        return Err(BoundsError::Certificate(format!(
            "covering value {} vs packing value {}",
            render(&primal_value),
            render(&packing.value())
        )));
    }
    Ok(FcSolution { value: sol.value, primal, packing })
}

/// The half-weight packing of a 2-edge-connected graph in which no two
/// vertices of degree above 2 are adjacent. The edges split into threads
/// between high-degree vertices; each thread contributes its internal
/// single-vertex cuts and its whole-interior cut at weight 1/2. A cycle
/// gets every single-vertex cut at 1/2.
pub fn degree2_cut_family(g: &Graph) -> Result<CutPacking, BoundsError> {
    let g = g.underlying();
    if !is_two_edge_connected(&g) {
        return Err(BoundsError::Precondition("graph is not 2-edge-connected".into()));
    }
    let deg = g.degrees();
    if let Some(e) = g.edges().iter().find(|e| deg[e.u] > 2 && deg[e.v] > 2) {
        return Err(BoundsError::Precondition(format!(
            "adjacent vertices {} and {} both have degree above 2",
            e.u, e.v
        )));
    }
    let half = half(1);
    let mut packing = CutPacking::default();
    let single = |v: usize| 1u64 << v;
    let high: Vec<usize> = (0..g.k()).filter(|&v| deg[v] > 2).collect();
    if high.is_empty() {
        for v in 0..g.k() {
            packing.add(Cut::from_side(&g, single(v)).side_mask(), half.clone());
        }
        return Ok(packing);
    }
    let adj = g.adjacency();
    let mut used = vec![false; g.edge_count()];
    for &h in &high {
        for &first in &adj[h] {
            let idx = g.edge_index(h, first).expect("edge");
            if used[idx] {
                continue;
            }
            used[idx] = true;
            let mut interior = Vec::new();
            let (mut prev, mut cur) = (h, first);
            while deg[cur] == 2 {
                interior.push(cur);
                let next = adj[cur].iter().copied().find(|&w| w != prev).expect("degree-2 vertex");
                used[g.edge_index(cur, next).expect("edge")] = true;
                prev = cur;
                cur = next;
            }
            let mut all = 0u64;
            for &v in &interior {
                packing.add(Cut::from_side(&g, single(v)).side_mask(), half.clone());
                all |= single(v);
            }
            packing.add(Cut::from_side(&g, all).side_mask(), half.clone());
        }
    }
    Ok(packing)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularCheck {
    pub degree: usize,
    /// `b = 1/d` on every edge covers every cut.
    pub feasible: bool,
    #[serde(serialize_with = "serialize_rational")]
    pub primal_value: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub fc: Rational,
    /// `fc(G) = k/2`.
    pub matches: bool,
}

/// For a `d`-regular, `d`-edge-connected graph, checks that the uniform
/// covering `b = 1/d` is feasible with value `k/2` and that it matches the
/// LP optimum.
pub fn regular_primal_check(g: &Graph, limits: Limits) -> Result<RegularCheck, BoundsError> {
    let g = g.underlying();
    let deg = g.degrees();
    let d = deg[0];
    if deg.iter().any(|&x| x != d) || d == 0 {
        return Err(BoundsError::Precondition("graph is not regular".into()));
    }
    let cuts = enumerate_cuts(&g, limits.vertices)?;
    let lambda = cuts.iter().map(|c| c.crossing.len()).min().unwrap_or(0);
    if lambda < d {
        return Err(BoundsError::Precondition(format!("edge connectivity {lambda} is below degree {d}")));
    }
    let b = vec![Rational::new(BigInt::one(), BigInt::from(d)); g.edge_count()];
    let feasible = covers_all_cuts(&g, &b, &cuts);
    let primal_value: Rational = b.iter().sum();
    let fc = fc(&g, limits)?.value;
    let matches = fc == half(g.k()) && primal_value == fc;
    Ok(RegularCheck { degree: d, feasible, primal_value, fc, matches })
}

// ---------------------------------------------------------------------------
// c2
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct C2Solution {
    pub value: usize,
    /// Copies of each edge of [`Graph::edges`] in the optimal sub-multigraph.
    pub multiplicities: Vec<u8>,
}

impl C2Solution {
    /// The witness as a multigraph on the same vertex set.
    pub fn witness(&self, g: &Graph) -> Graph {
        let pairs: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(e, &m)| std::iter::repeat_n(e.endpoints(), m as usize))
            .collect();
        Graph::new(g.k(), pairs).expect("witness is a valid multigraph")
    }
}

struct C2Search<'a> {
    k: usize,
    ends: &'a [(usize, usize)],
    best: usize,
    best_mask: u64,
    nodes: u64,
    budget: u64,
}

impl C2Search<'_> {
    fn spans_connected(&self, mask: u64) -> bool {
        let mut reach = 1u64;
        loop {
            let mut grown = reach;
            let mut m = mask;
            while m != 0 {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                let (u, v) = self.ends[i];
                if (reach >> u) & 1 == 1 || (reach >> v) & 1 == 1 {
                    grown |= (1 << u) | (1 << v);
                }
            }
            if grown == reach {
                break;
            }
            reach = grown;
        }
        reach.count_ones() as usize == self.k
    }

    fn bridges(&self, mask: u64) -> usize {
        let mut count = 0;
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros();
            m &= m - 1;
            if !self.spans_connected(mask & !(1 << i)) {
                count += 1;
            }
        }
        count
    }

    fn degree_bound(&self, included: u64) -> usize {
        let mut deg = vec![0usize; self.k];
        let mut m = included;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            deg[self.ends[i].0] += 1;
            deg[self.ends[i].1] += 1;
        }
        deg.iter().map(|&d| d.max(2)).sum::<usize>().div_ceil(2)
    }

    fn dfs(&mut self, i: usize, included: u64, excluded: u64) -> Result<(), BoundsError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(BoundsError::Budget(self.budget));
        }
        let all = (1u64 << self.ends.len()) - 1;
        if !self.spans_connected(all & !excluded) {
            return Ok(());
        }
        if i == self.ends.len() {
            let cost = included.count_ones() as usize + self.bridges(included);
            if cost < self.best {
                self.best = cost;
                self.best_mask = included;
            }
            return Ok(());
        }
        if self.degree_bound(included) >= self.best {
            return Ok(());
        }
        self.dfs(i + 1, included | (1 << i), excluded)?;
        self.dfs(i + 1, included, excluded | (1 << i))
    }
}

/// Exact `c2(G)`. Every optimum has the form "a connected spanning support
/// with its bridges doubled", so the search runs over supports. Returns
/// immediately with a Hamiltonian cycle when one exists, since `k` is a
/// lower bound.
pub fn c2(g: &Graph, limits: Limits) -> Result<C2Solution, BoundsError> {
    let g = g.underlying();
    if !g.is_connected() {
        return Err(GraphError::Disconnected.into());
    }
    let k = g.k();
    let m = g.edge_count();
    if k == 1 {
        return Ok(C2Solution { value: 0, multiplicities: Vec::new() });
    }
    if let Some(cycle) = hamiltonian_cycle(&g, limits.vertices)? {
        let mut mult = vec![0u8; m];
        if k == 2 {
            mult[0] = 2;
        } else {
            for (i, &v) in cycle.iter().enumerate() {
                let w = cycle[(i + 1) % k];
                mult[g.edge_index(v, w).expect("cycle edge")] = 1;
            }
        }
        return Ok(C2Solution { value: k, multiplicities: mult });
    }
    if m > 63 {
        return Err(BoundsError::TooManyEdges(m));
    }
    let ends: Vec<(usize, usize)> = g.edges().iter().map(|e| e.endpoints()).collect();
    let mut search = C2Search { k, ends: &ends, best: usize::MAX, best_mask: 0, nodes: 0, budget: limits.c2_nodes };

    // Doubled BFS tree as the incumbent.
    let tree = spanning_tree_mask(&g);
    search.best = 2 * (k - 1);
    search.best_mask = tree;
    search.dfs(0, 0, 0)?;

    let mask = search.best_mask;
    let mut mult = vec![0u8; m];
    for (i, slot) in mult.iter_mut().enumerate() {
        if (mask >> i) & 1 == 1 {
            *slot = if search.spans_connected(mask & !(1 << i)) { 1 } else { 2 };
        }
    }
    Ok(C2Solution { value: search.best, multiplicities: mult })
}

fn spanning_tree_mask(g: &Graph) -> u64 {
    let adj = g.adjacency();
    let mut seen = vec![false; g.k()];
    let mut queue = std::collections::VecDeque::from([0]);
    seen[0] = true;
    let mut mask = 0u64;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                mask |= 1 << g.edge_index(v, w).expect("edge");
                queue.push_back(w);
            }
        }
    }
    mask
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockBounds {
    pub vertices: Vec<usize>,
    #[serde(serialize_with = "serialize_rational")]
    pub fc: Rational,
    pub c2: usize,
    pub alpha: usize,
    #[serde(serialize_with = "serialize_rational")]
    pub lower: Rational,
    #[serde(serialize_with = "serialize_rational")]
    pub upper: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub k: usize,
    pub edges: usize,
    #[serde(serialize_with = "serialize_rational")]
    pub fc: Rational,
    pub c2: usize,
    pub c2_witness: Vec<u8>,
    pub alpha: usize,
    pub hamiltonian: bool,
    /// `max(fc, alpha, k/2)` per block, summed.
    #[serde(serialize_with = "serialize_rational")]
    pub lower: Rational,
    /// `c2/2` per block, summed.
    #[serde(serialize_with = "serialize_rational")]
    pub upper: Rational,
    pub tight: bool,
    pub blocks: Vec<BlockBounds>,
}

fn floor_bound(fc: &Rational, alpha: usize, k: usize) -> Rational {
    let alpha = Rational::from_integer(BigInt::from(alpha));
    [fc.clone(), alpha, half(k)].into_iter().max().expect("nonempty")
}

/// Bounds for `f(G)`: the whole-graph quantities plus the interval obtained
/// by bounding each block and summing.
pub fn bounds_report(g: &Graph, limits: Limits) -> Result<BoundsReport, BoundsError> {
    let simple = g.underlying();
    let whole_fc = fc(&simple, limits)?;
    let whole_c2 = c2(&simple, limits)?;
    let alpha = independence_number(&simple, limits.vertices)?;
    let hamiltonian = graph::is_hamiltonian(&simple, limits.vertices)?;

    let decomp = blocks(&simple)?;
    let mut per_block = Vec::with_capacity(decomp.blocks.len());
    let mut lower = Rational::zero();
    let mut upper = Rational::zero();
    for b in &decomp.blocks {
        let bfc = fc(&b.graph, limits)?.value;
        let bc2 = c2(&b.graph, limits)?.value;
        let balpha = independence_number(&b.graph, limits.vertices)?;
        let blower = floor_bound(&bfc, balpha, b.graph.k());
        let bupper = half(bc2);
        lower += &blower;
        upper += &bupper;
        per_block.push(BlockBounds {
            vertices: b.vertices.clone(),
            fc: bfc,
            c2: bc2,
            alpha: balpha,
            lower: blower,
            upper: bupper,
        });
    }
    let lower = lower.max(floor_bound(&whole_fc.value, alpha, simple.k()));
    let tight = lower == upper;
    Ok(BoundsReport {
        k: simple.k(),
        edges: simple.edge_count(),
        fc: whole_fc.value,
        c2: whole_c2.value,
        c2_witness: whole_c2.multiplicities,
        alpha,
        hamiltonian,
        lower,
        upper,
        tight,
        blocks: per_block,
    })
}
