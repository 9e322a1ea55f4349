//! Attack on linear protocols over GF(2).
//!
//! Every bit a linear protocol sends is a parity of input bits, so a
//! protocol is modelled as its list of parity forms. Variable `i*n + b` is
//! bit `b` of player `i`, where bit 0 is the first character of the string.
//! With fewer than `(k-1)n` forms the kernel has dimension above `n` and so
//! contains an input whose strings are not all equal, yet on which every
//! transmitted bit agrees with the all-zero input.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::Graph;
use crate::protocol::{InputAssignment, TreeProtocol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinearError {
    #[error("need k >= 1 and 1 <= n <= 63, got k = {k}, n = {n}")]
    InvalidShape { k: usize, n: usize },
    #[error("form {index} has {got} coefficients, expected {expected}")]
    FormLength { index: usize, got: usize, expected: usize },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("assignment does not match the protocol shape")]
    AssignmentShape,
}

/// A bit vector over `len` coordinates packed in 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn zeros(len: usize) -> Self {
        Bits { words: vec![0; len.div_ceil(64)] }
    }

    fn from_bools(v: &[bool]) -> Self {
        let mut b = Bits::zeros(v.len());
        for (i, _) in v.iter().enumerate().filter(|(_, &x)| x) {
            b.set(i);
        }
        b
    }

    fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn xor(&mut self, other: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    fn dot(&self, other: &Bits) -> bool {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum::<u32>() % 2 == 1
    }

    fn leading(&self) -> Option<usize> {
        self.words.iter().enumerate().find(|(_, &w)| w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

/// Fully reduced row echelon form; rows come back sorted by pivot and each
/// pivot column is zero in every other row.
fn rref(mut rows: Vec<Bits>, len: usize) -> (Vec<Bits>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..len {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row.get(col) {
                row.xor(&pivot);
            }
        }
        pivots.push(col);
        rank += 1;
    }
    rows.truncate(rank);
    (rows, pivots)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProtocol {
    k: usize,
    n: usize,
    forms: Vec<Vec<bool>>,
}

impl LinearProtocol {
    pub fn new(k: usize, n: usize, forms: Vec<Vec<bool>>) -> Result<Self, LinearError> {
        if k == 0 || n == 0 || n > 63 {
            return Err(LinearError::InvalidShape { k, n });
        }
        if let Some((index, f)) = forms.iter().enumerate().find(|(_, f)| f.len() != k * n) {
            return Err(LinearError::FormLength { index, got: f.len(), expected: k * n });
        }
        Ok(LinearProtocol { k, n, forms })
    }

    /// Forms given as lists of variable indices.
    pub fn from_supports(k: usize, n: usize, supports: &[Vec<usize>]) -> Result<Self, LinearError> {
        let forms = supports
            .iter()
            .map(|s| {
                let mut f = vec![false; k * n];
                for &v in s {
                    if v < k * n {
                        f[v] ^= true;
                    }
                }
                f
            })
            .collect();
        Self::new(k, n, forms)
    }

    /// `count` uniformly random forms from a seeded generator.
    pub fn random(k: usize, n: usize, count: usize, seed: u64) -> Result<Self, LinearError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let forms = (0..count).map(|_| (0..k * n).map(|_| rng.gen::<bool>()).collect()).collect();
        Self::new(k, n, forms)
    }

    /// The tree protocol as `(k-1)n` forms equating each bit of a non-root
    /// player with the same bit of its BFS parent.
    pub fn tree(g: &Graph, n: usize) -> Result<Self, LinearError> {
        let (k, shape) = (g.k(), LinearError::InvalidShape { k: g.k(), n });
        let tree = TreeProtocol::new(g, n).map_err(|_| shape)?;
        let supports: Vec<Vec<usize>> =
            tree.tree_edges().flat_map(|(c, p)| (0..n).map(move |b| vec![c * n + b, p * n + b])).collect();
        Self::from_supports(k, n, &supports)
    }

    /// One form per non-empty, non-comment line, written as `0`/`1`
    /// characters; whitespace inside a line is ignored.
    pub fn parse(k: usize, n: usize, text: &str) -> Result<Self, LinearError> {
        let mut forms = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let form = line
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(LinearError::Malformed { line: i + 1, msg: format!("unexpected {other:?}") }),
                })
                .collect::<Result<Vec<bool>, _>>()?;
            forms.push(form);
        }
        Self::new(k, n, forms)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forms(&self) -> &[Vec<bool>] {
        &self.forms
    }

    fn vars(&self) -> usize {
        self.k * self.n
    }

    /// Transmitted bits on the given input.
    pub fn evaluate(&self, s: &InputAssignment) -> Result<Vec<bool>, LinearError> {
        let x = self.encode(s)?;
        Ok(self.forms.iter().map(|f| Bits::from_bools(f).dot(&x)).collect())
    }

    fn encode(&self, s: &InputAssignment) -> Result<Bits, LinearError> {
        if s.players() != self.k || s.n() != self.n {
            return Err(LinearError::AssignmentShape);
        }
        let mut x = Bits::zeros(self.vars());
        for (i, &v) in s.strings().iter().enumerate() {
            for b in 0..self.n {
                if (v >> (self.n - 1 - b)) & 1 == 1 {
                    x.set(i * self.n + b);
                }
            }
        }
        Ok(x)
    }

    fn decode(&self, x: &Bits) -> InputAssignment {
        let strings =
            (0..self.k).map(|i| (0..self.n).fold(0u64, |acc, b| (acc << 1) | x.get(i * self.n + b) as u64)).collect();
        InputAssignment::new(self.n, strings).expect("n <= 63 checked at construction")
    }

    fn all_equal(&self, x: &Bits) -> bool {
        (1..self.k).all(|i| (0..self.n).all(|b| x.get(i * self.n + b) == x.get(b)))
    }

    /// Fully reduced basis of the kernel of the form matrix.
    fn kernel(&self) -> Vec<Bits> {
        let len = self.vars();
        let (rows, pivots) = rref(self.forms.iter().map(|f| Bits::from_bools(f)).collect(), len);
        let free = (0..len).filter(|c| pivots.binary_search(c).is_err());
        let basis = free
            .map(|f| {
                let mut v = Bits::zeros(len);
                v.set(f);
                for (row, &p) in rows.iter().zip(&pivots) {
                    if row.get(f) {
                        v.set(p);
                    }
                }
                v
            })
            .collect();
        rref(basis, len).0
    }

    pub fn kernel_dimension(&self) -> usize {
        self.kernel().len()
    }
}

/// The lexicographically least input (by variable order) that is not
/// all-equal and on which every form vanishes, if any.
pub fn attack(p: &LinearProtocol) -> Option<InputAssignment> {
    let basis = p.kernel();
    // With a fully reduced basis sorted by pivot, comparing combinations
    // lexicographically is comparing their coefficient vectors.
    if basis.iter().all(|b| p.all_equal(b)) {
        return None;
    }
    let mut acc = Bits::zeros(p.vars());
    for (j, b) in basis.iter().enumerate() {
        let rest_equal = basis[j + 1..].iter().all(|r| p.all_equal(r));
        if p.all_equal(&acc) && rest_equal {
            acc.xor(b);
        }
    }
    debug_assert!(!p.all_equal(&acc));
    Some(p.decode(&acc))
}

/// True iff `s` is not all-equal and every form vanishes on it.
pub fn verify_witness(p: &LinearProtocol, s: &InputAssignment) -> bool {
    !s.all_equal() && p.evaluate(s).is_ok_and(|bits| bits.iter().all(|&b| !b))
}

/// Index of the leading variable of each kernel basis vector.
pub fn kernel_pivots(p: &LinearProtocol) -> Vec<usize> {
    p.kernel().iter().filter_map(Bits::leading).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, path, petersen};

    /// All kernel vectors by enumeration, as assignments, in lex order.
    fn brute_kernel(p: &LinearProtocol) -> Vec<InputAssignment> {
        let len = p.vars();
        assert!(len <= 16);
        (0u32..1 << len)
            .map(|code| {
                let v: Vec<bool> = (0..len).map(|i| (code >> (len - 1 - i)) & 1 == 1).collect();
                p.decode(&Bits::from_bools(&v))
            })
            .filter(|s| p.evaluate(s).unwrap().iter().all(|&b| !b))
            .collect()
    }

    #[test]
    fn examples() {
        let p = LinearProtocol::from_supports(2, 2, &[vec![0, 2]]).unwrap();
        let w = attack(&p).unwrap();
        assert_eq!(w.render(), vec!["00", "01"]);
        assert!(verify_witness(&p, &w));

        let p = LinearProtocol::from_supports(2, 1, &[vec![0, 1]]).unwrap();
        assert_eq!(attack(&p), None);

        let zero = InputAssignment::new(2, vec![0, 0]).unwrap();
        let p = LinearProtocol::from_supports(2, 2, &[vec![0, 2]]).unwrap();
        assert!(!verify_witness(&p, &zero));
        let off = InputAssignment::new(2, vec![0b10, 0]).unwrap();
        assert!(!verify_witness(&p, &off));
    }

    #[test]
    fn matches_brute_force() {
        for seed in 0..200 {
            let k = 2 + (seed as usize % 3);
            let n = 1 + (seed as usize / 3) % 4;
            if k * n > 12 {
                continue;
            }
            let count = seed as usize % (k * n + 2);
            let p = LinearProtocol::random(k, n, count, seed).unwrap();
            let kernel = brute_kernel(&p);
            assert_eq!(kernel.len(), 1 << p.kernel_dimension(), "seed {seed}");
            let expected = kernel.into_iter().find(|s| !s.all_equal());
            assert_eq!(attack(&p), expected, "seed {seed}");
        }
    }

    #[test]
    fn tree_forms_admit_no_witness() {
        for (g, n) in [(path(4), 3), (complete(4), 2), (petersen(), 2)] {
            let p = LinearProtocol::tree(&g, n).unwrap();
            assert_eq!(p.forms().len(), (g.k() - 1) * n);
            assert_eq!(attack(&p), None);
            assert_eq!(p.kernel_dimension(), n);
        }
    }

    #[test]
    fn dropping_one_tree_form_breaks_it() {
        let p = LinearProtocol::tree(&path(3), 2).unwrap();
        let mut forms = p.forms().to_vec();
        forms.pop();
        let q = LinearProtocol::new(3, 2, forms).unwrap();
        let w = attack(&q).unwrap();
        assert!(verify_witness(&q, &w));
    }

    #[test]
    fn parse_forms() {
        let p = LinearProtocol::parse(2, 2, "# one form\n10 10\n\n").unwrap();
        assert_eq!(p.forms(), &[vec![true, false, true, false]]);
        assert!(matches!(LinearProtocol::parse(2, 2, "101"), Err(LinearError::FormLength { .. })));
        assert!(matches!(LinearProtocol::parse(2, 2, "10x1"), Err(LinearError::Malformed { line: 1, .. })));
    }

    #[test]
    fn wide_vectors_cross_word_boundaries() {
        let p = LinearProtocol::random(5, 16, 63, 3).unwrap();
        let w = attack(&p).unwrap();
        assert!(verify_witness(&p, &w));
        assert!(p.kernel_dimension() >= 80 - 63);
    }
}
