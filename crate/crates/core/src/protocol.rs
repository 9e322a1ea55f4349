//! Equality-testing protocols with exact bit accounting.
//!
//! * [`TreeProtocol`]: every non-root player of a BFS tree sends its string
//!   to its parent, `(k-1)n` bits.
//! * [`HostProtocol`]: on a 2-connected graph, inputs are encoded as special
//!   copies of a faithful host; each player sends the identity of its own
//!   vertex along its out-arcs (`ceil(log2(km))` bits) plus one consistency
//!   flag per arc.
//! * [`BlockProtocol`]: block by block, end blocks first, using the host
//!   protocol on 2-connected blocks and a plain `n`-bit send on bridges.
//!
//! The global verdict is the conjunction of all consistency checks, as
//! collected by a referee that is not charged for it.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::behrend::{densest_set, greedy_set, BehrendError, BehrendSet, EXACT_SEARCH_LIMIT};
use crate::graph::{blocks, ear_decomposition, ear_numbering, Graph, GraphError, Orientation};
use crate::host::{build_host, FaithfulHost, HostError};

/// Largest `m` scanned by [`choose_parameters`].
pub const DEFAULT_MAX_M: usize = 1 << 14;

/// Default cap on assignments for exhaustive soundness sweeps.
pub const DEFAULT_SOUNDNESS_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Host(#[from] HostError),
    #[error(transparent)]
    Behrend(#[from] BehrendError),
    #[error("n = {0} is above the supported 63 bits")]
    TooManyBits(usize),
    #[error("expected {expected} strings, got {got}")]
    PlayerCount { expected: usize, got: usize },
    #[error("string {value:#x} does not fit in {n} bits")]
    StringTooLong { value: u64, n: usize },
    #[error("input string {0:#x} is outside the codebook")]
    OutsideCodebook(u64),
    #[error("no m <= {max_m} gives 2^{n} copies")]
    ParameterBudget { n: usize, max_m: usize },
    #[error("codebook needs {needed} copies, host has {available}")]
    CodebookTooSmall { needed: u64, available: u64 },
    #[error("exhaustive sweep over {needed} assignments exceeds budget {budget}")]
    SoundnessBudget { needed: u128, budget: u64 },
}

// ---------------------------------------------------------------------------
// Inputs and transcripts
// ---------------------------------------------------------------------------

/// One `n`-bit string per player, stored as the low `n` bits of a `u64`
/// (bit `n-1` is the first character when rendered).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputAssignment {
    n: usize,
    strings: Vec<u64>,
}

impl InputAssignment {
    pub fn new(n: usize, strings: Vec<u64>) -> Result<Self, ProtocolError> {
        if n > 63 {
            return Err(ProtocolError::TooManyBits(n));
        }
        if let Some(&value) = strings.iter().find(|&&s| s >> n != 0) {
            return Err(ProtocolError::StringTooLong { value, n });
        }
        Ok(InputAssignment { n, strings })
    }

    pub fn equal(k: usize, n: usize, value: u64) -> Result<Self, ProtocolError> {
        Self::new(n, vec![value; k])
    }

    /// The `index`-th assignment in the enumeration where player `i` holds
    /// bits `i*n .. (i+1)*n` of `index`.
    pub fn from_index(k: usize, n: usize, index: u128) -> Self {
        let mask = (1u128 << n) - 1;
        let strings = (0..k).map(|i| ((index >> (i * n)) & mask) as u64).collect();
        InputAssignment { n, strings }
    }

    pub fn random<R: Rng>(k: usize, n: usize, rng: &mut R) -> Self {
        let strings = (0..k).map(|_| if n == 0 { 0 } else { rng.gen::<u64>() >> (64 - n) }).collect();
        InputAssignment { n, strings }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn strings(&self) -> &[u64] {
        &self.strings
    }

    pub fn players(&self) -> usize {
        self.strings.len()
    }

    pub fn all_equal(&self) -> bool {
        self.strings.windows(2).all(|w| w[0] == w[1])
    }

    pub fn render(&self) -> Vec<String> {
        self.strings.iter().map(|&s| render_bits(s, self.n)).collect()
    }

    /// The strings of the given players, in order.
    pub fn restrict(&self, players: &[usize]) -> InputAssignment {
        InputAssignment { n: self.n, strings: players.iter().map(|&p| self.strings[p]).collect() }
    }
}

pub fn render_bits(value: u64, n: usize) -> String {
    (0..n).rev().map(|b| if (value >> b) & 1 == 1 { '1' } else { '0' }).collect()
}

impl Serialize for InputAssignment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.render())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Decision::Accept
        } else {
            Decision::Reject
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Tree,
    Host,
    Blocks,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub protocol: ProtocolKind,
    pub decision: Decision,
    /// Bits sent along each edge `(u, v)`, `u < v`, both directions summed.
    pub per_edge_bits: BTreeMap<(usize, usize), u64>,
    pub total_bits: u64,
}

impl Transcript {
    fn new(protocol: ProtocolKind) -> Self {
        Transcript { protocol, decision: Decision::Accept, per_edge_bits: BTreeMap::new(), total_bits: 0 }
    }

    fn charge(&mut self, a: usize, b: usize, bits: u64) {
        *self.per_edge_bits.entry((a.min(b), a.max(b))).or_insert(0) += bits;
        self.total_bits += bits;
    }
}

impl Serialize for Transcript {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct EdgeBits {
            u: usize,
            v: usize,
            bits: u64,
        }
        #[derive(Serialize)]
        struct Repr {
            protocol: ProtocolKind,
            decision: Decision,
            total_bits: u64,
            per_edge_bits: Vec<EdgeBits>,
        }
        Repr {
            protocol: self.protocol,
            decision: self.decision,
            total_bits: self.total_bits,
            per_edge_bits: self.per_edge_bits.iter().map(|(&(u, v), &bits)| EdgeBits { u, v, bits }).collect(),
        }
        .serialize(s)
    }
}

/// A deterministic equality protocol for a fixed graph and input length.
pub trait EqualityProtocol: Sync {
    fn kind(&self) -> ProtocolKind;
    fn players(&self) -> usize;
    fn n(&self) -> usize;
    fn run(&self, input: &InputAssignment) -> Result<Transcript, ProtocolError>;

    fn check_input(&self, input: &InputAssignment) -> Result<(), ProtocolError> {
        if input.players() != self.players() {
            return Err(ProtocolError::PlayerCount { expected: self.players(), got: input.players() });
        }
        if input.n() != self.n() {
            return Err(ProtocolError::TooManyBits(input.n()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Tree protocol
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TreeProtocol {
    n: usize,
    parent: Vec<Option<usize>>,
}

impl TreeProtocol {
    /// BFS tree rooted at vertex 0.
    pub fn new(g: &Graph, n: usize) -> Result<Self, ProtocolError> {
        if !g.is_connected() {
            return Err(GraphError::Disconnected.into());
        }
        if n > 63 {
            return Err(ProtocolError::TooManyBits(n));
        }
        let adj = g.adjacency();
        let mut parent = vec![None; g.k()];
        let mut seen = vec![false; g.k()];
        seen[0] = true;
        let mut queue = std::collections::VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    queue.push_back(w);
                }
            }
        }
        Ok(TreeProtocol { n, parent })
    }

    /// `(child, parent)` tree edges.
    pub fn tree_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent.iter().enumerate().filter_map(|(v, p)| p.map(|p| (v, p)))
    }
}

impl EqualityProtocol for TreeProtocol {
    fn kind(&self) -> ProtocolKind {
        ProtocolKind::Tree
    }

    fn players(&self) -> usize {
        self.parent.len()
    }

    fn n(&self) -> usize {
        self.n
    }

    fn run(&self, input: &InputAssignment) -> Result<Transcript, ProtocolError> {
        self.check_input(input)?;
        let mut t = Transcript::new(ProtocolKind::Tree);
        let s = input.strings();
        let mut ok = true;
        for (child, parent) in self.tree_edges() {
            t.charge(child, parent, self.n as u64);
            ok &= s[child] == s[parent];
        }
        t.decision = Decision::from_bool(ok);
        Ok(t)
    }
}

pub fn run_tree_protocol(g: &Graph, a: &InputAssignment) -> Result<Transcript, ProtocolError> {
    TreeProtocol::new(g, a.n())?.run(a)
}

// ---------------------------------------------------------------------------
// Host protocol
// ---------------------------------------------------------------------------

/// The first `2^n` copy indices of a host in lexicographic `(x, y)` order;
/// the string with value `s` is represented by `index[s]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    n: usize,
    host: FaithfulHost,
    index: Vec<(usize, usize)>,
}

impl Codebook {
    pub fn new(host: FaithfulHost, n: usize) -> Result<Self, ProtocolError> {
        if n > 63 {
            return Err(ProtocolError::TooManyBits(n));
        }
        let needed = 1u64 << n;
        let available = host.copy_count() as u64;
        if available < needed {
            return Err(ProtocolError::CodebookTooSmall { needed, available });
        }
        let index = host.copies().take(needed as usize).collect();
        Ok(Codebook { n, host, index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn host(&self) -> &FaithfulHost {
        &self.host
    }

    pub fn copy_for(&self, s: u64) -> Result<(usize, usize), ProtocolError> {
        self.index.get(s as usize).copied().ok_or(ProtocolError::OutsideCodebook(s))
    }

    pub fn string_for(&self, copy: (usize, usize)) -> Option<u64> {
        self.index.iter().position(|&c| c == copy).map(|p| p as u64)
    }
}

/// Smallest `m` for which the densest available set `X` for arity `k`
/// gives `m |X| >= 2^n`. Up to the exact-search limit the exact maximum set
/// is used; beyond it the greedy set, whose prefixes are again greedy sets.
pub fn choose_parameters(h: &Graph, n: usize, max_m: usize) -> Result<(usize, BehrendSet), ProtocolError> {
    if n > 63 {
        return Err(ProtocolError::TooManyBits(n));
    }
    let k = h.k().max(2);
    let needed = 1u128 << n;
    let enough = |m: usize, x: &BehrendSet| (m as u128) * (x.len() as u128) >= needed;
    for m in 1..=max_m.min(EXACT_SEARCH_LIMIT) {
        let x = densest_set(m, k)?;
        if enough(m, &x) {
            return Ok((m, x));
        }
    }
    if max_m <= EXACT_SEARCH_LIMIT {
        return Err(ProtocolError::ParameterBudget { n, max_m });
    }
    let greedy = greedy_set(max_m, k)?;
    for m in EXACT_SEARCH_LIMIT + 1..=max_m {
        let size = greedy.elements.partition_point(|&e| e <= m);
        if (m as u128) * (size as u128) >= needed {
            let elements = greedy.elements[..size].to_vec();
            return Ok((m, BehrendSet { m, elements, ..greedy.clone() }));
        }
    }
    Err(ProtocolError::ParameterBudget { n, max_m })
}

/// `ceil(log2(x))` for `x >= 1`.
pub fn ceil_log2(x: usize) -> u64 {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as u64
    }
}

#[derive(Debug, Clone)]
pub struct HostProtocol {
    h: Graph,
    codebook: Codebook,
    orientation: Orientation,
}

impl HostProtocol {
    /// Chooses `m` and `X`, builds and checks the host, and orients `h`
    /// along its ear decomposition.
    pub fn new(h: &Graph, n: usize) -> Result<Self, ProtocolError> {
        let decomposition = ear_decomposition(h)?;
        let numbering = ear_numbering(&decomposition);
        let (m, x) = choose_parameters(h, n, DEFAULT_MAX_M)?;
        let host = build_host(h, &numbering, m, &x)?;
        Self::with_host(host, n)
    }

    /// Uses a prebuilt (possibly unfaithful) host.
    pub fn with_host(host: FaithfulHost, n: usize) -> Result<Self, ProtocolError> {
        let h = host.pattern().clone();
        let orientation = Orientation::from_ears(&host.numbering().decomposition);
        let codebook = Codebook::new(host, n)?;
        Ok(HostProtocol { h, codebook, orientation })
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn orientation(&self) -> &Orientation {
        &self.orientation
    }

    pub fn host(&self) -> &FaithfulHost {
        self.codebook.host()
    }

    /// Bits per arc: the vertex identity plus one consistency flag.
    pub fn bits_per_edge(&self) -> u64 {
        ceil_log2(self.host().class_size()) + 1
    }
}

impl EqualityProtocol for HostProtocol {
    fn kind(&self) -> ProtocolKind {
        ProtocolKind::Host
    }

    fn players(&self) -> usize {
        self.h.k()
    }

    fn n(&self) -> usize {
        self.codebook.n()
    }

    fn run(&self, input: &InputAssignment) -> Result<Transcript, ProtocolError> {
        self.check_input(input)?;
        run_host_protocol(&self.h, input, &self.codebook, &self.orientation)
    }
}

/// Player `v` sends the vertex of its copy in class `number(v)` along every
/// out-arc; the receiver checks it against its own copy. Each arc costs
/// `ceil(log2(km))` bits plus one flag bit.
pub fn run_host_protocol(
    h: &Graph,
    a: &InputAssignment,
    c: &Codebook,
    o: &Orientation,
) -> Result<Transcript, ProtocolError> {
    if a.players() != h.k() {
        return Err(ProtocolError::PlayerCount { expected: h.k(), got: a.players() });
    }
    let host = c.host();
    let numbering = host.numbering();
    let copies: Vec<(usize, usize)> = a.strings().iter().map(|&s| c.copy_for(s)).collect::<Result<_, _>>()?;
    let vertex_in = |copy: (usize, usize), class: usize| copy.1 + (class - 1) * copy.0;
    let bits = ceil_log2(host.class_size()) + 1;
    let mut t = Transcript::new(ProtocolKind::Host);
    let mut ok = true;
    for &(from, to) in &o.arcs {
        let class = numbering.number_of(from);
        let sent = vertex_in(copies[from], class);
        let expected = vertex_in(copies[to], class);
        ok &= sent == expected;
        t.charge(from, to, bits);
    }
    t.decision = Decision::from_bool(ok);
    Ok(t)
}

// ---------------------------------------------------------------------------
// Block composition
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Part {
    Bridge { u: usize, v: usize },
    Host { vertices: Vec<usize>, protocol: Box<HostProtocol> },
}

#[derive(Debug, Clone)]
pub struct BlockProtocol {
    k: usize,
    n: usize,
    parts: Vec<Part>,
}

/// Block indices in end-block-first order: repeatedly remove the
/// lowest-indexed block meeting at most one other remaining block.
fn peel_order(block_vertices: &[Vec<usize>]) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..block_vertices.len()).collect();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let pos = remaining
            .iter()
            .position(|&b| {
                let shared = block_vertices[b]
                    .iter()
                    .filter(|v| remaining.iter().any(|&o| o != b && block_vertices[o].contains(v)))
                    .count();
                shared <= 1
            })
            .expect("block-cut tree has a leaf");
        order.push(remaining.remove(pos));
    }
    order
}

impl BlockProtocol {
    pub fn new(g: &Graph, n: usize) -> Result<Self, ProtocolError> {
        if n > 63 {
            return Err(ProtocolError::TooManyBits(n));
        }
        let simple = g.underlying();
        let decomp = blocks(&simple)?;
        let vertex_sets: Vec<Vec<usize>> = decomp.blocks.iter().map(|b| b.vertices.clone()).collect();
        let mut parts = Vec::with_capacity(decomp.blocks.len());
        for idx in peel_order(&vertex_sets) {
            let b = &decomp.blocks[idx];
            if b.is_bridge() {
                parts.push(Part::Bridge { u: b.vertices[0], v: b.vertices[1] });
            } else {
                let protocol = Box::new(HostProtocol::new(&b.graph, n)?);
                parts.push(Part::Host { vertices: b.vertices.clone(), protocol });
            }
        }
        Ok(BlockProtocol { k: g.k(), n, parts })
    }

    /// Vertex sets of the blocks in execution order.
    pub fn block_order(&self) -> Vec<Vec<usize>> {
        self.parts
            .iter()
            .map(|p| match p {
                Part::Bridge { u, v } => vec![*u, *v],
                Part::Host { vertices, .. } => vertices.clone(),
            })
            .collect()
    }
}

impl EqualityProtocol for BlockProtocol {
    fn kind(&self) -> ProtocolKind {
        ProtocolKind::Blocks
    }

    fn players(&self) -> usize {
        self.k
    }

    fn n(&self) -> usize {
        self.n
    }

    fn run(&self, input: &InputAssignment) -> Result<Transcript, ProtocolError> {
        self.check_input(input)?;
        let mut t = Transcript::new(ProtocolKind::Blocks);
        let s = input.strings();
        let mut ok = true;
        for part in &self.parts {
            match part {
                Part::Bridge { u, v } => {
                    t.charge(*u, *v, self.n as u64);
                    ok &= s[*u] == s[*v];
                }
                Part::Host { vertices, protocol } => {
                    let sub = protocol.run(&input.restrict(vertices))?;
                    for (&(a, b), &bits) in &sub.per_edge_bits {
                        t.charge(vertices[a], vertices[b], bits);
                    }
                    ok &= sub.decision == Decision::Accept;
                }
            }
        }
        t.decision = Decision::from_bool(ok);
        Ok(t)
    }
}

pub fn run_block_composed(g: &Graph, a: &InputAssignment) -> Result<Transcript, ProtocolError> {
    BlockProtocol::new(g, a.n())?.run(a)
}

/// Builds the requested protocol for `g`.
pub fn build_protocol(g: &Graph, n: usize, kind: ProtocolKind) -> Result<Box<dyn EqualityProtocol>, ProtocolError> {
    Ok(match kind {
        ProtocolKind::Tree => Box::new(TreeProtocol::new(g, n)?),
        ProtocolKind::Host => Box::new(HostProtocol::new(g, n)?),
        ProtocolKind::Blocks => Box::new(BlockProtocol::new(g, n)?),
    })
}

// ---------------------------------------------------------------------------
// Soundness sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoundnessMode {
    Exhaustive { budget: u64 },
    Sampled { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub input: InputAssignment,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoundnessReport {
    pub protocol: ProtocolKind,
    pub checked: u64,
    pub violation: Option<Violation>,
}

fn judge(p: &dyn EqualityProtocol, input: InputAssignment) -> Option<Result<Violation, ProtocolError>> {
    match p.run(&input) {
        Err(e) => Some(Err(e)),
        Ok(t) => {
            let correct = (t.decision == Decision::Accept) == input.all_equal();
            (!correct).then_some(Ok(Violation { input, decision: t.decision }))
        }
    }
}

/// Checks that the protocol accepts exactly the all-equal inputs, over the
/// whole input space or a seeded sample. The exhaustive sweep reports the
/// first violation in enumeration order regardless of scheduling.
pub fn exhaustive_soundness(p: &dyn EqualityProtocol, mode: SoundnessMode) -> Result<SoundnessReport, ProtocolError> {
    let (k, n) = (p.players(), p.n());
    let found = match mode {
        SoundnessMode::Exhaustive { budget } => {
            let bits = n * k;
            let total: u128 = if bits >= 127 { u128::MAX } else { 1u128 << bits };
            if total > budget as u128 {
                return Err(ProtocolError::SoundnessBudget { needed: total, budget });
            }
            let total = total as u64;
            let hit = (0..total)
                .into_par_iter()
                .find_map_first(|idx| judge(p, InputAssignment::from_index(k, n, idx as u128)));
            (total, hit)
        }
        SoundnessMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut hit = None;
            for i in 0..samples {
                // every fourth sample is an all-equal input so both answers are exercised
                let input = if i % 4 == 0 {
                    let v = InputAssignment::random(1, n, &mut rng).strings()[0];
                    InputAssignment { n, strings: vec![v; k] }
                } else {
                    InputAssignment::random(k, n, &mut rng)
                };
                if let Some(r) = judge(p, input) {
                    hit = Some(r);
                    break;
                }
            }
            (samples, hit)
        }
    };
    let (checked, hit) = found;
    let violation = hit.transpose()?;
    Ok(SoundnessReport { protocol: p.kind(), checked, violation })
}
