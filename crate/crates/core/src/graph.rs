//! Undirected multigraphs on vertices `0..k` together with the structural
//! routines everything else is built on: blocks, ear decompositions, the
//! ear-derived vertex numbering, positive-indegree orientations and cut
//! enumeration. The exhaustive routines (cuts, independence number,
//! Hamiltonicity) are oracles for small graphs and are guarded by a vertex
//! limit.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

/// Default vertex limit for the exhaustive routines.
pub const DEFAULT_VERTEX_LIMIT: usize = 16;

/// Hard ceiling imposed by the `u64` vertex masks.
const MASK_BITS: usize = 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("vertex {vertex} out of range for k = {k}")]
    VertexOutOfRange { vertex: usize, k: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) would have multiplicity above 2")]
    MultiplicityExceeded(usize, usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph is not 2-connected: {0}")]
    NotTwoConnected(Separator),
    #[error("graph has a doubled edge; a simple graph is required")]
    NotSimple,
    #[error("{what} is limited to k <= {limit}, got k = {k}")]
    LimitExceeded { what: &'static str, k: usize, limit: usize },
    #[error("unknown graph `{0}`")]
    UnknownSpec(String),
    #[error("cannot read graph file: {0}")]
    Io(String),
}

/// Witness that a graph is not 2-connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Separator {
    Bridge(usize, usize),
    CutVertex(usize),
    /// Fewer than three vertices.
    TooSmall(usize),
}

impl fmt::Display for Separator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Separator::Bridge(u, v) => write!(f, "bridge ({u}, {v})"),
            Separator::CutVertex(v) => write!(f, "cut vertex {v}"),
            Separator::TooSmall(k) => write!(f, "only {k} vertices"),
        }
    }
}

/// An undirected edge `u < v` with multiplicity 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub multiplicity: u8,
}

impl Edge {
    pub fn endpoints(&self) -> (usize, usize) {
        (self.u, self.v)
    }

    pub fn other(&self, w: usize) -> usize {
        if w == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Undirected multigraph on `0..k`. Edges are stored once per vertex pair,
/// sorted by `(u, v)`, and carry their multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    k: usize,
    edges: Vec<Edge>,
}

fn ordered(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Graph {
    /// Builds a graph from a list of vertex pairs. A pair given twice becomes
    /// a doubled edge; a third occurrence is an error.
    pub fn new<I>(k: usize, pairs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges: Vec<Edge> = Vec::new();
        for (a, b) in pairs {
            Self::push_pair(&mut edges, k, a, b)?;
        }
        edges.sort();
        Ok(Graph { k, edges })
    }

    fn push_pair(edges: &mut Vec<Edge>, k: usize, a: usize, b: usize) -> Result<(), GraphError> {
        for vertex in [a, b] {
            if vertex >= k {
                return Err(GraphError::VertexOutOfRange { vertex, k });
            }
        }
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        let (u, v) = ordered(a, b);
        match edges.iter_mut().find(|e| e.u == u && e.v == v) {
            Some(e) if e.multiplicity >= 2 => Err(GraphError::MultiplicityExceeded(u, v)),
            Some(e) => {
                e.multiplicity += 1;
                Ok(())
            }
            None => {
                edges.push(Edge { u, v, multiplicity: 1 });
                Ok(())
            }
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Distinct edges, sorted by endpoints.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Number of distinct vertex pairs joined by an edge.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of edges counted with multiplicity.
    pub fn total_multiplicity(&self) -> usize {
        self.edges.iter().map(|e| e.multiplicity as usize).sum()
    }

    pub fn is_simple(&self) -> bool {
        self.edges.iter().all(|e| e.multiplicity == 1)
    }

    /// The same graph with every multiplicity reset to 1.
    pub fn underlying(&self) -> Graph {
        Graph { k: self.k, edges: self.edges.iter().map(|e| Edge { multiplicity: 1, ..*e }).collect() }
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let (u, v) = ordered(a, b);
        self.edges.binary_search_by(|e| (e.u, e.v).cmp(&(u, v))).ok()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_index(a, b).is_some()
    }

    /// Sorted neighbour lists of the underlying simple graph.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.k];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Simple-graph degree of every vertex.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.k];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    pub(crate) fn neighbour_masks(&self) -> Vec<u64> {
        debug_assert!(self.k <= MASK_BITS);
        let mut masks = vec![0u64; self.k];
        for e in &self.edges {
            masks[e.u] |= 1 << e.v;
            masks[e.v] |= 1 << e.u;
        }
        masks
    }

    pub fn is_connected(&self) -> bool {
        if self.k == 0 {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.k];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.k
    }

    /// Renders the graph in the edge-list text format accepted by
    /// [`parse_graph`]. Doubled edges are written twice.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.k, self.total_multiplicity());
        for e in &self.edges {
            for _ in 0..e.multiplicity {
                out.push_str(&format!("{} {}\n", e.u, e.v));
            }
        }
        out
    }

    pub(crate) fn check_limit(&self, what: &'static str, limit: usize) -> Result<(), GraphError> {
        let limit = limit.min(MASK_BITS);
        if self.k > limit {
            return Err(GraphError::LimitExceeded { what, k: self.k, limit });
        }
        Ok(())
    }
}

/// Parses the edge-list format: a header line `k m` followed by `m` lines
/// `u v`. Blank lines and anything after `#` are ignored. Repeating a line
/// doubles that edge.
pub fn parse_graph(text: &str) -> Result<Graph, GraphError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut lines_seen = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(GraphError::Malformed { line: line_no, msg: format!("expected two integers, found `{line}`") });
        }
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| GraphError::Malformed {
                line: line_no,
                msg: format!("`{s}` is not a non-negative integer"),
            })
        };
        let a = parse(fields[0])?;
        let b = parse(fields[1])?;
        match header {
            None => header = Some((a, b)),
            Some((k, _)) => {
                Graph::push_pair(&mut edges, k, a, b)?;
                lines_seen += 1;
            }
        }
    }
    let (k, m) = header.ok_or(GraphError::Malformed { line: 0, msg: "missing `k m` header".into() })?;
    if k == 0 {
        return Err(GraphError::Malformed { line: 1, msg: "k must be positive".into() });
    }
    if lines_seen != m {
        return Err(GraphError::Malformed {
            line: 1,
            msg: format!("header declares {m} edge lines, found {lines_seen}"),
        });
    }
    edges.sort();
    Ok(Graph { k, edges })
}

// ---------------------------------------------------------------------------
// Named graphs
// ---------------------------------------------------------------------------

pub fn cycle(k: usize) -> Graph {
    assert!(k >= 3, "cycle needs at least 3 vertices");
    Graph::new(k, (0..k).map(|i| (i, (i + 1) % k))).expect("valid cycle")
}

pub fn path(k: usize) -> Graph {
    assert!(k >= 1, "path needs at least 1 vertex");
    Graph::new(k, (1..k).map(|i| (i - 1, i))).expect("valid path")
}

pub fn complete(k: usize) -> Graph {
    assert!(k >= 1, "complete graph needs at least 1 vertex");
    let pairs = (0..k).flat_map(|u| (u + 1..k).map(move |v| (u, v)));
    Graph::new(k, pairs).expect("valid complete graph")
}

/// `K_{s,t}` with parts `0..s` and `s..s+t`.
pub fn complete_bipartite(s: usize, t: usize) -> Graph {
    assert!(s >= 1 && t >= 1, "both parts must be nonempty");
    let pairs = (0..s).flat_map(|u| (0..t).map(move |j| (u, s + j)));
    Graph::new(s + t, pairs).expect("valid complete bipartite graph")
}

pub fn star(t: usize) -> Graph {
    complete_bipartite(1, t)
}

/// Two branch vertices `0` and `1` joined by three internally disjoint
/// paths with `a`, `b` and `c` edges.
pub fn theta(a: usize, b: usize, c: usize) -> Result<Graph, GraphError> {
    let lengths = [a, b, c];
    if lengths.contains(&0) || lengths.iter().filter(|&&l| l == 1).count() > 1 {
        return Err(GraphError::UnknownSpec(format!(
            "theta:{a}:{b}:{c} needs path lengths >= 1 with at most one equal to 1"
        )));
    }
    let mut pairs = Vec::new();
    let mut next = 2;
    for len in lengths {
        let mut prev = 0;
        for _ in 1..len {
            pairs.push((prev, next));
            prev = next;
            next += 1;
        }
        pairs.push((prev, 1));
    }
    Graph::new(next, pairs)
}

pub fn petersen() -> Graph {
    let mut pairs = Vec::new();
    for i in 0..5 {
        pairs.push((i, (i + 1) % 5));
        pairs.push((i, i + 5));
        pairs.push((5 + i, 5 + (i + 2) % 5));
    }
    Graph::new(10, pairs).expect("valid Petersen graph")
}

/// Replaces every edge of `g` by a path of length two.
pub fn subdivide(g: &Graph) -> Graph {
    let mut pairs = Vec::new();
    let mut next = g.k();
    for e in g.edges() {
        pairs.push((e.u, next));
        pairs.push((next, e.v));
        next += 1;
    }
    Graph::new(next, pairs).expect("valid subdivision")
}

/// Two triangles sharing vertex 0.
pub fn bowtie() -> Graph {
    Graph::new(5, [(0, 1), (1, 2), (0, 2), (0, 3), (3, 4), (0, 4)]).expect("valid bowtie")
}

/// Triangles `{0,1,2}` and `{3,4,5}` joined by the bridge `2-3`.
pub fn triangle_bridge_triangle() -> Graph {
    Graph::new(6, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)]).expect("valid triangle-bridge-triangle")
}

/// Resolves a named graph (`petersen`, `cycle:k`, `path:k`, `complete:k`,
/// `complete_bipartite:s:t`, `star:t`, `theta:a:b:c`, `subdivided_complete:k`,
/// `bowtie`, `triangle_bridge_triangle`) or, failing that, reads an
/// edge-list file at that path.
pub fn resolve_graph(spec: &str) -> Result<Graph, GraphError> {
    if let Some(g) = named_graph(spec)? {
        return Ok(g);
    }
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io(e.to_string()))?;
        return parse_graph(&text);
    }
    Err(GraphError::UnknownSpec(spec.to_string()))
}

fn named_graph(spec: &str) -> Result<Option<Graph>, GraphError> {
    let mut parts = spec.split(':');
    let name = parts.next().unwrap_or("");
    let args: Vec<&str> = parts.collect();
    let nums = || -> Result<Vec<usize>, GraphError> {
        args.iter().map(|a| a.parse::<usize>().map_err(|_| GraphError::UnknownSpec(spec.to_string()))).collect()
    };
    let need = |n: usize, min: usize| -> Result<Vec<usize>, GraphError> {
        let v = nums()?;
        if v.len() != n || v.iter().any(|&x| x < min) {
            return Err(GraphError::UnknownSpec(spec.to_string()));
        }
        Ok(v)
    };
    let g = match name {
        "petersen" if args.is_empty() => petersen(),
        "bowtie" if args.is_empty() => bowtie(),
        "triangle_bridge_triangle" if args.is_empty() => triangle_bridge_triangle(),
        "cycle" => cycle(need(1, 3)?[0]),
        "path" => path(need(1, 1)?[0]),
        "complete" => complete(need(1, 1)?[0]),
        "star" => star(need(1, 1)?[0]),
        "subdivided_complete" => subdivide(&complete(need(1, 2)?[0])),
        "complete_bipartite" => {
            let v = need(2, 1)?;
            complete_bipartite(v[0], v[1])
        }
        "theta" => {
            let v = need(3, 1)?;
            theta(v[0], v[1], v[2])?
        }
        _ => return Ok(None),
    };
    Ok(Some(g))
}

// ---------------------------------------------------------------------------
// Blocks
// ---------------------------------------------------------------------------

/// A block of a graph, relabelled onto `0..vertices.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub graph: Graph,
    /// `vertices[local] = global`, ascending.
    pub vertices: Vec<usize>,
}

impl Block {
    pub fn to_global(&self, local: usize) -> usize {
        self.vertices[local]
    }

    pub fn to_local(&self, global: usize) -> Option<usize> {
        self.vertices.binary_search(&global).ok()
    }

    /// Whether this block is a single edge (a bridge of the parent graph).
    pub fn is_bridge(&self) -> bool {
        self.vertices.len() == 2
    }

    /// Global endpoints of every edge in the block.
    pub fn global_edges(&self) -> Vec<(usize, usize)> {
        self.graph.edges().iter().map(|e| ordered(self.vertices[e.u], self.vertices[e.v])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecomposition {
    pub blocks: Vec<Block>,
    pub cut_vertices: BTreeSet<usize>,
}

const UNSEEN: usize = usize::MAX;

struct BlockSearch<'a> {
    adj: &'a [Vec<usize>],
    disc: Vec<usize>,
    low: Vec<usize>,
    time: usize,
    stack: Vec<(usize, usize)>,
    found: Vec<Vec<(usize, usize)>>,
}

impl BlockSearch<'_> {
    fn visit(&mut self, v: usize, parent: usize) {
        self.disc[v] = self.time;
        self.low[v] = self.time;
        self.time += 1;
        for &w in self.adj[v].iter() {
            if self.disc[w] == UNSEEN {
                self.stack.push((v, w));
                self.visit(w, v);
                self.low[v] = self.low[v].min(self.low[w]);
                if self.low[w] >= self.disc[v] {
                    let mut block = Vec::new();
                    while let Some(edge) = self.stack.pop() {
                        block.push(edge);
                        if edge == (v, w) {
                            break;
                        }
                    }
                    self.found.push(block);
                }
            } else if w != parent && self.disc[w] < self.disc[v] {
                self.stack.push((v, w));
                self.low[v] = self.low[v].min(self.disc[w]);
            }
        }
    }
}

/// Splits a connected graph into its blocks (maximal 2-connected subgraphs
/// and bridges). Doubled edges stay inside their block with multiplicity 2.
pub fn blocks(g: &Graph) -> Result<BlockDecomposition, GraphError> {
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    let adj = g.adjacency();
    let mut search = BlockSearch {
        adj: &adj,
        disc: vec![UNSEEN; g.k()],
        low: vec![0; g.k()],
        time: 0,
        stack: Vec::new(),
        found: Vec::new(),
    };
    search.visit(0, UNSEEN);

    let mut membership = vec![0usize; g.k()];
    let mut out = Vec::with_capacity(search.found.len());
    for edge_list in search.found {
        let vertices: BTreeSet<usize> = edge_list.iter().flat_map(|&(a, b)| [a, b]).collect();
        let vertices: Vec<usize> = vertices.into_iter().collect();
        for &v in &vertices {
            membership[v] += 1;
        }
        let local = |x: usize| vertices.binary_search(&x).expect("block vertex");
        let mut pairs = Vec::new();
        for &(a, b) in &edge_list {
            let mult = g.edges()[g.edge_index(a, b).expect("edge of g")].multiplicity;
            for _ in 0..mult {
                pairs.push((local(a), local(b)));
            }
        }
        let graph = Graph::new(vertices.len(), pairs).expect("block is a valid graph");
        out.push(Block { graph, vertices });
    }
    let cut_vertices = (0..g.k()).filter(|&v| membership[v] >= 2).collect();
    Ok(BlockDecomposition { blocks: out, cut_vertices })
}

/// Connected, and no single edge copy disconnects it when removed.
pub fn is_two_edge_connected(g: &Graph) -> bool {
    let Ok(decomp) = blocks(g) else {
        return false;
    };
    decomp.blocks.iter().all(|b| !(b.is_bridge() && b.graph.edges()[0].multiplicity == 1))
}

/// Checks 2-connectivity of a simple graph and names a separator if it fails.
pub fn two_connectivity_witness(g: &Graph) -> Result<Option<Separator>, GraphError> {
    if g.k() < 3 {
        return Ok(Some(Separator::TooSmall(g.k())));
    }
    let decomp = blocks(g)?;
    if decomp.blocks.len() == 1 {
        return Ok(None);
    }
    if let Some(b) = decomp.blocks.iter().filter(|b| b.is_bridge()).min_by_key(|b| b.vertices.clone()) {
        return Ok(Some(Separator::Bridge(b.vertices[0], b.vertices[1])));
    }
    let v = *decomp.cut_vertices.iter().next().expect("several blocks share a cut vertex");
    Ok(Some(Separator::CutVertex(v)))
}

pub fn is_two_connected(g: &Graph) -> bool {
    matches!(two_connectivity_witness(g), Ok(None))
}

// ---------------------------------------------------------------------------
// Ear decomposition, numbering, orientation
// ---------------------------------------------------------------------------

/// `ears[0]` is a cycle listed without repeating its first vertex; every
/// later ear is a path listed from one endpoint to the other.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EarDecomposition {
    pub k: usize,
    pub ears: Vec<Vec<usize>>,
}

impl EarDecomposition {
    /// Edges of ear `j` in traversal order.
    pub fn ear_edges(&self, j: usize) -> Vec<(usize, usize)> {
        let ear = &self.ears[j];
        let mut out: Vec<(usize, usize)> = ear.windows(2).map(|w| (w[0], w[1])).collect();
        if j == 0 {
            out.push((ear[ear.len() - 1], ear[0]));
        }
        out
    }

    /// Checks that the ears partition the edges of `g`, that the first ear is
    /// a cycle, and that each later ear has distinct old endpoints and fresh
    /// internal vertices.
    pub fn validate(&self, g: &Graph) -> Result<(), String> {
        if self.k != g.k() {
            return Err(format!("decomposition is for k = {}, graph has k = {}", self.k, g.k()));
        }
        let Some(first) = self.ears.first() else {
            return Err("no ears".into());
        };
        if first.len() < 3 {
            return Err("first ear is not a cycle".into());
        }
        let mut seen_vertex = vec![false; g.k()];
        let mut used_edge = vec![false; g.edge_count()];
        let mut take_edge = |a: usize, b: usize| -> Result<(), String> {
            let idx = g.edge_index(a, b).ok_or(format!("({a}, {b}) is not an edge"))?;
            if std::mem::replace(&mut used_edge[idx], true) {
                return Err(format!("edge ({a}, {b}) used twice"));
            }
            Ok(())
        };
        for &v in first {
            if v >= g.k() || std::mem::replace(&mut seen_vertex[v], true) {
                return Err(format!("cycle repeats or leaves range at vertex {v}"));
            }
        }
        for (a, b) in self.ear_edges(0) {
            take_edge(a, b)?;
        }
        for (j, ear) in self.ears.iter().enumerate().skip(1) {
            if ear.len() < 2 {
                return Err(format!("ear {j} has no edge"));
            }
            let (start, end) = (ear[0], ear[ear.len() - 1]);
            if start == end {
                return Err(format!("ear {j} is closed"));
            }
            if start >= g.k() || end >= g.k() || !seen_vertex[start] || !seen_vertex[end] {
                return Err(format!("ear {j} endpoints are not on earlier ears"));
            }
            for &v in &ear[1..ear.len() - 1] {
                if v >= g.k() || std::mem::replace(&mut seen_vertex[v], true) {
                    return Err(format!("ear {j} internal vertex {v} is not fresh"));
                }
            }
            for (a, b) in self.ear_edges(j) {
                take_edge(a, b)?;
            }
        }
        if seen_vertex.iter().any(|s| !s) {
            return Err("some vertex is on no ear".into());
        }
        if used_edge.iter().any(|u| !u) {
            return Err("some edge is on no ear".into());
        }
        Ok(())
    }
}

fn dfs_tree(adj: &[Vec<usize>], v: usize, parent: &mut [usize], disc: &mut [usize], order: &mut Vec<usize>) {
    disc[v] = order.len();
    order.push(v);
    for &w in &adj[v] {
        if disc[w] == UNSEEN {
            parent[w] = v;
            dfs_tree(adj, w, parent, disc, order);
        }
    }
}

/// Chain decomposition of a simple 2-connected graph: a DFS from vertex 0
/// (neighbours in ascending order), then for each vertex in preorder and
/// each back edge to a descendant, the chain climbing tree edges until it
/// meets an earlier chain.
pub fn ear_decomposition(g: &Graph) -> Result<EarDecomposition, GraphError> {
    if !g.is_simple() {
        return Err(GraphError::NotSimple);
    }
    if let Some(sep) = two_connectivity_witness(g)? {
        return Err(GraphError::NotTwoConnected(sep));
    }
    let adj = g.adjacency();
    let mut parent = vec![UNSEEN; g.k()];
    let mut disc = vec![UNSEEN; g.k()];
    let mut order = Vec::with_capacity(g.k());
    dfs_tree(&adj, 0, &mut parent, &mut disc, &mut order);

    let mut on_chain = vec![false; g.k()];
    let mut ears = Vec::new();
    for &v in &order {
        for &w in &adj[v] {
            if disc[w] <= disc[v] || parent[w] == v {
                continue;
            }
            on_chain[v] = true;
            let mut chain = vec![v];
            let mut cur = w;
            loop {
                chain.push(cur);
                if on_chain[cur] {
                    break;
                }
                on_chain[cur] = true;
                cur = parent[cur];
            }
            if ears.is_empty() {
                chain.pop();
            }
            ears.push(chain);
        }
    }
    let decomp = EarDecomposition { k: g.k(), ears };
    debug_assert_eq!(decomp.validate(g), Ok(()));
    Ok(decomp)
}

/// Vertex numbering `1..=k` derived ear by ear: the cycle in order, then
/// each ear's internal vertices consecutively, starting next to the
/// endpoint with the larger number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VertexNumbering {
    /// `number[v]` is the 1-based number of vertex `v`.
    pub number: Vec<usize>,
    pub decomposition: EarDecomposition,
}

impl VertexNumbering {
    pub fn number_of(&self, v: usize) -> usize {
        self.number[v]
    }

    /// `vertices()[i]` is the vertex numbered `i + 1`.
    pub fn vertices(&self) -> Vec<usize> {
        let mut inv = vec![0; self.number.len()];
        for (v, &num) in self.number.iter().enumerate() {
            inv[num - 1] = v;
        }
        inv
    }

    /// Checks that this numbering is the one the ear rule assigns to its
    /// decomposition.
    pub fn validate(&self) -> Result<(), String> {
        let expected = ear_numbering(&self.decomposition);
        if expected.number != self.number {
            return Err("numbering does not follow the ear rule".into());
        }
        Ok(())
    }
}

pub fn ear_numbering(d: &EarDecomposition) -> VertexNumbering {
    let mut number = vec![0usize; d.k];
    let mut next = 1;
    for &v in &d.ears[0] {
        number[v] = next;
        next += 1;
    }
    for ear in &d.ears[1..] {
        if ear.len() <= 2 {
            continue;
        }
        let (a, b) = (ear[0], ear[ear.len() - 1]);
        let internal = &ear[1..ear.len() - 1];
        let from_a = number[a] > number[b];
        let seq: Box<dyn Iterator<Item = &usize>> =
            if from_a { Box::new(internal.iter()) } else { Box::new(internal.iter().rev()) };
        for &v in seq {
            number[v] = next;
            next += 1;
        }
    }
    VertexNumbering { number, decomposition: d.clone() }
}

/// One arc `(from, to)` per edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Orientation {
    pub arcs: Vec<(usize, usize)>,
}

impl Orientation {
    /// The first ear cyclically, every other ear as a directed path.
    pub fn from_ears(d: &EarDecomposition) -> Self {
        let arcs = (0..d.ears.len()).flat_map(|j| d.ear_edges(j)).collect();
        Orientation { arcs }
    }

    pub fn indegrees(&self, k: usize) -> Vec<usize> {
        let mut deg = vec![0; k];
        for &(_, to) in &self.arcs {
            deg[to] += 1;
        }
        deg
    }

    pub fn in_neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.arcs.iter().filter(move |a| a.1 == v).map(|a| a.0)
    }
}

pub fn positive_indegree_orientation(g: &Graph) -> Result<Orientation, GraphError> {
    Ok(Orientation::from_ears(&ear_decomposition(g)?))
}

// ---------------------------------------------------------------------------
// Cuts and exhaustive oracles
// ---------------------------------------------------------------------------

/// A vertex bipartition, stored by the side that excludes vertex 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cut {
    side: u64,
    /// Indices into [`Graph::edges`] of the crossing edges.
    pub crossing: Vec<usize>,
}

impl Cut {
    /// Canonical cut of `g` for the given side (either side may be passed).
    pub fn from_side(g: &Graph, side: u64) -> Self {
        let full = if g.k() >= 64 { u64::MAX } else { (1u64 << g.k()) - 1 };
        let side = if side & 1 == 1 { full & !side } else { side & full };
        let crossing = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| ((side >> e.u) & 1) != ((side >> e.v) & 1))
            .map(|(i, _)| i)
            .collect();
        Cut { side, crossing }
    }

    pub fn side_mask(&self) -> u64 {
        self.side
    }

    pub fn side(&self) -> Vec<usize> {
        (0..64).filter(|&v| (self.side >> v) & 1 == 1).collect()
    }

    pub fn contains_edge(&self, edge: usize) -> bool {
        self.crossing.binary_search(&edge).is_ok()
    }
}

/// Every canonical bipartition cut of `g`, in increasing order of side mask.
pub fn enumerate_cuts(g: &Graph, limit: usize) -> Result<Vec<Cut>, GraphError> {
    g.check_limit("cut enumeration", limit)?;
    if g.k() < 2 {
        return Ok(Vec::new());
    }
    let count = 1u64 << (g.k() - 1);
    Ok((1..count).map(|half| Cut::from_side(g, half << 1)).collect())
}

/// Minimum number of distinct edges crossing any cut.
pub fn edge_connectivity(g: &Graph, limit: usize) -> Result<usize, GraphError> {
    Ok(enumerate_cuts(g, limit)?.iter().map(|c| c.crossing.len()).min().unwrap_or(0))
}

fn max_independent(adj: &[u64], cand: u64) -> u32 {
    if cand == 0 {
        return 0;
    }
    let v = cand.trailing_zeros() as usize;
    let rest = cand & !(1 << v);
    let with_v = 1 + max_independent(adj, rest & !adj[v]);
    if adj[v] & rest == 0 {
        return with_v;
    }
    let bound = rest.count_ones();
    if bound <= with_v {
        return with_v;
    }
    with_v.max(max_independent(adj, rest))
}

/// Exact independence number by branching on the lowest candidate vertex.
pub fn independence_number(g: &Graph, limit: usize) -> Result<usize, GraphError> {
    g.check_limit("independence number", limit)?;
    let adj = g.neighbour_masks();
    let all = if g.k() == 0 { 0 } else { (1u64 << g.k()) - 1 };
    Ok(max_independent(&adj, all) as usize)
}

fn extend_cycle(adj: &[u64], path: &mut Vec<usize>, visited: u64, k: usize) -> bool {
    let last = *path.last().expect("nonempty path");
    if path.len() == k {
        return adj[last] & 1 == 1;
    }
    let mut options = adj[last] & !visited;
    while options != 0 {
        let w = options.trailing_zeros() as usize;
        options &= options - 1;
        path.push(w);
        if extend_cycle(adj, path, visited | (1 << w), k) {
            return true;
        }
        path.pop();
    }
    false
}

/// A Hamiltonian cycle through vertex 0, if one exists. `K_2` counts as
/// Hamiltonian via its doubled edge.
pub fn hamiltonian_cycle(g: &Graph, limit: usize) -> Result<Option<Vec<usize>>, GraphError> {
    g.check_limit("Hamiltonicity", limit)?;
    match g.k() {
        0 | 1 => return Ok(None),
        2 => return Ok(g.has_edge(0, 1).then(|| vec![0, 1])),
        _ => {}
    }
    let adj = g.neighbour_masks();
    let mut path = vec![0];
    Ok(extend_cycle(&adj, &mut path, 1, g.k()).then_some(path))
}

pub fn is_hamiltonian(g: &Graph, limit: usize) -> Result<bool, GraphError> {
    Ok(hamiltonian_cycle(g, limit)?.is_some())
}
