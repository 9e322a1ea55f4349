//! Faithful hosts for a 2-connected pattern `H` on `k` vertices.
//!
//! Vertices of `H` are numbered `1..=k` by the ear rule. The host has `k`
//! classes, each identified with `{1..km}`, and one special copy `H_{x,y}`
//! for every `x` in a Behrend-type set `X` and `1 <= y <= m`; that copy puts
//! the vertex numbered `i` at `y + (i-1)x` in class `i`. An edge between
//! classes `a < b` therefore joins `ua` to `ub` exactly when
//! `ub - ua = (b-a)x` and `ua = y + (a-1)x` for admissible `x, y`.

use serde::Serialize;
use thiserror::Error;

use crate::behrend::{verify_no_nontrivial, BehrendError, BehrendSet, Solution, Verdict, VerifyMode};
use crate::graph::{is_two_connected, Graph, VertexNumbering};

/// Default cap on search nodes for [`verify_faithful`].
pub const DEFAULT_VERIFY_NODES: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HostError {
    #[error("pattern is not 2-connected")]
    NotTwoConnected,
    #[error("numbering is not ear-derived: {0}")]
    InvalidNumbering(String),
    #[error("set is not valid for arity {k}: {solution:?}")]
    InvalidSet { k: usize, solution: Solution },
    #[error("set element {0} exceeds m = {1}")]
    SetOutOfRange(usize, usize),
    #[error("m must be positive")]
    ZeroM,
    #[error(transparent)]
    Behrend(#[from] BehrendError),
    #[error("copy index ({x}, {y}) is out of range")]
    CopyOutOfRange { x: usize, y: usize },
    #[error("({a}, {b}) is not an edge of the pattern")]
    NotPatternEdge { a: usize, b: usize },
    #[error("faithfulness search exceeded {0} nodes")]
    Budget(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaithfulHost {
    pattern: Graph,
    numbering: VertexNumbering,
    m: usize,
    x_set: BehrendSet,
    /// Pattern edges as class pairs `(a, b)`, `a < b`, 1-based, sorted.
    class_edges: Vec<(usize, usize)>,
}

impl FaithfulHost {
    pub fn pattern(&self) -> &Graph {
        &self.pattern
    }

    pub fn numbering(&self) -> &VertexNumbering {
        &self.numbering
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn x_set(&self) -> &BehrendSet {
        &self.x_set
    }

    pub fn k(&self) -> usize {
        self.pattern.k()
    }

    /// Size of every class, `km`.
    pub fn class_size(&self) -> usize {
        self.k() * self.m
    }

    pub fn copy_count(&self) -> usize {
        self.m * self.x_set.len()
    }

    pub fn class_edges(&self) -> &[(usize, usize)] {
        &self.class_edges
    }

    /// All copy indices `(x, y)` in lexicographic order.
    pub fn copies(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.x_set.elements.iter().flat_map(move |&x| (1..=self.m).map(move |y| (x, y)))
    }

    /// Host edges as `((class_a, vertex_a), (class_b, vertex_b))` with
    /// `class_a < class_b`, copy by copy.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), (usize, usize))> + '_ {
        self.copies().flat_map(move |(x, y)| {
            self.class_edges.iter().map(move |&(a, b)| ((a, y + (a - 1) * x), (b, y + (b - 1) * x)))
        })
    }

    fn earlier_neighbours(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k() + 1];
        for &(a, b) in &self.class_edges {
            out[b].push(a);
        }
        out
    }
}

fn class_edges(pattern: &Graph, numbering: &VertexNumbering) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = pattern
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = (numbering.number_of(e.u), numbering.number_of(e.v));
            (a.min(b), a.max(b))
        })
        .collect();
    edges.sort_unstable();
    edges
}

/// Builds the host after checking that the pattern is 2-connected, the
/// numbering follows the ear rule for a valid decomposition of `h`, and `x`
/// has no nontrivial solution for arity `k`.
pub fn build_host(h: &Graph, numbering: &VertexNumbering, m: usize, x: &BehrendSet) -> Result<FaithfulHost, HostError> {
    if !is_two_connected(h) {
        return Err(HostError::NotTwoConnected);
    }
    numbering.decomposition.validate(h).map_err(HostError::InvalidNumbering)?;
    numbering.validate().map_err(HostError::InvalidNumbering)?;
    let at_arity = BehrendSet { k: h.k(), ..x.clone() };
    if let Verdict::Counterexample(solution) = verify_no_nontrivial(&at_arity, VerifyMode::default())? {
        return Err(HostError::InvalidSet { k: h.k(), solution });
    }
    build_host_unchecked(h, numbering, m, x)
}

/// Builds the host without validating `x`; used for negative controls.
pub fn build_host_unchecked(
    h: &Graph,
    numbering: &VertexNumbering,
    m: usize,
    x: &BehrendSet,
) -> Result<FaithfulHost, HostError> {
    if m == 0 {
        return Err(HostError::ZeroM);
    }
    if let Some(&e) = x.elements.iter().find(|&&e| e > m) {
        return Err(HostError::SetOutOfRange(e, m));
    }
    Ok(FaithfulHost {
        pattern: h.clone(),
        numbering: numbering.clone(),
        m,
        x_set: x.clone(),
        class_edges: class_edges(h, numbering),
    })
}

/// Vertices `(u_1, ..., u_k)` of `H_{x,y}`, `u_i = y + (i-1)x`.
pub fn special_copy(f: &FaithfulHost, x: usize, y: usize) -> Result<Vec<usize>, HostError> {
    if !f.x_set.contains(x) || y == 0 || y > f.m {
        return Err(HostError::CopyOutOfRange { x, y });
    }
    Ok((0..f.k()).map(|i| y + i * x).collect())
}

/// Inverse of [`special_copy`].
pub fn decode_copy(f: &FaithfulHost, u: &[usize]) -> Option<(usize, usize)> {
    if u.len() != f.k() || u.len() < 2 || u[1] <= u[0] {
        return None;
    }
    let (y, x) = (u[0], u[1] - u[0]);
    if !f.x_set.contains(x) || y == 0 || y > f.m {
        return None;
    }
    u.iter().enumerate().all(|(i, &ui)| ui == y + i * x).then_some((x, y))
}

/// Whether the host has an edge between `ua` in class `a` and `ub` in class
/// `b`, where `(a, b)` must be an edge of the numbered pattern.
pub fn edge_membership(f: &FaithfulHost, a: usize, b: usize, ua: usize, ub: usize) -> Result<bool, HostError> {
    let key = (a.min(b), a.max(b));
    if f.class_edges.binary_search(&key).is_err() {
        return Err(HostError::NotPatternEdge { a, b });
    }
    Ok(joined(f, a, b, ua, ub))
}

fn joined(f: &FaithfulHost, a: usize, b: usize, ua: usize, ub: usize) -> bool {
    let (a, b, ua, ub) = if a < b { (a, b, ua, ub) } else { (b, a, ub, ua) };
    let gap = b - a;
    if ub <= ua || (ub - ua) % gap != 0 {
        return false;
    }
    let x = (ub - ua) / gap;
    if !f.x_set.contains(x) {
        return false;
    }
    let offset = (a - 1) * x;
    ua > offset && ua - offset <= f.m
}

/// A special copy of the pattern that is none of the defining copies,
/// together with the equation instance it solves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RogueCopy {
    /// `tuple[i]` is the vertex in class `i + 1`.
    pub tuple: Vec<usize>,
    pub equation: Option<Solution>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FaithfulVerdict {
    pub faithful: bool,
    /// Every special copy found, defining or not.
    pub special_copies: usize,
    /// Lexicographically least rogue copy.
    pub rogue: Option<RogueCopy>,
    pub nodes: u64,
}

struct CopySearch<'a> {
    f: &'a FaithfulHost,
    earlier: Vec<Vec<usize>>,
    tuple: Vec<usize>,
    found: usize,
    rogue: Option<Vec<usize>>,
    nodes: u64,
    budget: u64,
}

impl CopySearch<'_> {
    fn extend(&mut self, class: usize) -> Result<(), HostError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(HostError::Budget(self.budget));
        }
        let k = self.f.k();
        if class > k {
            self.found += 1;
            if self.rogue.is_none() && decode_copy(self.f, &self.tuple).is_none() {
                self.rogue = Some(self.tuple.clone());
            }
            return Ok(());
        }
        let candidates: Vec<usize> = match self.earlier[class].first() {
            None => (1..=self.f.class_size()).collect(),
            Some(&j) => {
                let uj = self.tuple[j - 1];
                let gap = class - j;
                self.f
                    .x_set
                    .elements
                    .iter()
                    .filter(|&&x| {
                        let off = (j - 1) * x;
                        uj > off && uj - off <= self.f.m
                    })
                    .map(|&x| uj + gap * x)
                    .collect()
            }
        };
        for u in candidates {
            let fits = self.earlier[class].iter().skip(1).all(|&j| joined(self.f, j, class, self.tuple[j - 1], u));
            if !fits {
                continue;
            }
            self.tuple.push(u);
            self.extend(class + 1)?;
            self.tuple.pop();
        }
        Ok(())
    }
}

/// Enumerates every special copy of the pattern in the host by
/// backtracking over classes in numbering order, extending only along host
/// edges. Faithful iff every copy found decodes to a defining `(x, y)`.
pub fn verify_faithful(f: &FaithfulHost, budget: u64) -> Result<FaithfulVerdict, HostError> {
    let mut earlier = f.earlier_neighbours();
    for list in &mut earlier {
        list.sort_unstable();
    }
    let mut search =
        CopySearch { f, earlier, tuple: Vec::with_capacity(f.k()), found: 0, rogue: None, nodes: 0, budget };
    search.extend(1)?;
    let rogue = search.rogue.map(|tuple| {
        let equation = explain_rogue(f, &tuple);
        RogueCopy { tuple, equation }
    });
    Ok(FaithfulVerdict { faithful: rogue.is_none(), special_copies: search.found, rogue, nodes: search.nodes })
}

/// Follows the ear-by-ear induction on a special copy and returns the first
/// equation instance whose variables are not all equal.
pub fn explain_rogue(f: &FaithfulHost, tuple: &[usize]) -> Option<Solution> {
    let num = f.numbering();
    let d = &num.decomposition;
    let step = |a: usize, b: usize| -> usize {
        let (lo, hi) = (a.min(b), a.max(b));
        (tuple[hi - 1] - tuple[lo - 1]) / (hi - lo)
    };
    let nontrivial = |lhs: Vec<usize>, rhs: usize| {
        let s = Solution { lhs, rhs };
        s.holds().then_some(s)
    };
    let t = d.ears[0].len();
    let x = step(1, 2);
    let lhs: Vec<usize> = (1..t).map(|i| step(i, i + 1)).collect();
    if let Some(s) = nontrivial(lhs, step(1, t)) {
        return Some(s);
    }
    for ear in &d.ears[1..] {
        if ear.len() <= 2 {
            continue;
        }
        let (e0, e1) = (num.number_of(ear[0]), num.number_of(ear[ear.len() - 1]));
        let (i, j) = (e0.min(e1), e0.max(e1));
        let mut internal: Vec<usize> = ear[1..ear.len() - 1].iter().map(|&v| num.number_of(v)).collect();
        internal.sort_unstable();
        let (first, last) = (internal[0], internal[internal.len() - 1]);
        let mut lhs = vec![x; j - i];
        lhs.extend(std::iter::repeat_n(step(j, first), first - j));
        lhs.extend(internal.windows(2).map(|w| step(w[0], w[1])));
        if let Some(s) = nontrivial(lhs, step(i, last)) {
            return Some(s);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HostStats {
    pub k: usize,
    pub m: usize,
    pub x_size: usize,
    pub copies: usize,
    pub edges: usize,
    pub faithful: bool,
    pub special_copies: usize,
    pub verify_time_ms: f64,
}
