//! Subsets of `{1..m}` with no nontrivial solution to
//! `x_1 + ... + x_k = k * x_{k+1}`.
//!
//! Three constructors are provided: the digit/sphere construction, an exact
//! branch-and-bound search for maximum sets at small `m`, and the greedy
//! set. [`verify_no_nontrivial`] checks a set either exactly (a multiset
//! counting table) or by random spot checks.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Largest `m` accepted by [`exact_max_set`].
pub const EXACT_SEARCH_LIMIT: usize = 60;

/// Default cell budget for exhaustive verification.
pub const DEFAULT_VERIFY_BUDGET: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BehrendError {
    #[error("need m >= 1 and k >= 2, got m = {m}, k = {k}")]
    InvalidParameters { m: usize, k: usize },
    #[error("exact search is limited to m <= {limit}, got m = {m}")]
    SearchBudget { m: usize, limit: usize },
    #[error("exhaustive verification needs {needed} table cells, budget is {budget}")]
    VerifyBudget { needed: usize, budget: usize },
    #[error("element {0} is outside 1..=m")]
    OutOfRange(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SphereConstruction,
    ExactSearch,
    Greedy,
    /// Supplied by the caller and not checked.
    Given,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BehrendSet {
    pub m: usize,
    pub k: usize,
    pub elements: Vec<usize>,
    pub method: Method,
}

impl BehrendSet {
    /// Wraps an arbitrary subset of `{1..m}` without checking the equation.
    pub fn from_elements(m: usize, k: usize, mut elements: Vec<usize>) -> Result<Self, BehrendError> {
        check_params(m, k)?;
        elements.sort_unstable();
        elements.dedup();
        if let Some(&bad) = elements.iter().find(|&&e| e == 0 || e > m) {
            return Err(BehrendError::OutOfRange(bad));
        }
        Ok(BehrendSet { m, k, elements, method: Method::Given })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.elements.binary_search(&x).is_ok()
    }
}

fn check_params(m: usize, k: usize) -> Result<(), BehrendError> {
    if m == 0 || k < 2 {
        return Err(BehrendError::InvalidParameters { m, k });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Incremental sum table
// ---------------------------------------------------------------------------

/// Tracks, for each multiset size `c <= k`, the set of sums reachable from
/// the elements added so far (with repetition). Elements must be added in
/// increasing order.
#[derive(Clone)]
struct SumTable {
    k: usize,
    words: usize,
    reach: Vec<Vec<u64>>,
    elements: Vec<usize>,
}

impl SumTable {
    fn new(k: usize, m: usize) -> Self {
        let words = (k * m) / 64 + 1;
        let mut reach = vec![vec![0u64; words]; k + 1];
        reach[0][0] = 1;
        SumTable { k, words, reach, elements: Vec::new() }
    }

    fn has(&self, c: usize, sum: usize) -> bool {
        let (w, b) = (sum / 64, sum % 64);
        w < self.words && (self.reach[c][w] >> b) & 1 == 1
    }

    /// Whether adding `e` (larger than every element so far) keeps the set
    /// free of nontrivial solutions. Any new solution must use `e` on the
    /// left-hand side with a strictly smaller right-hand side.
    fn can_add(&self, e: usize) -> bool {
        let k = self.k;
        for &t in &self.elements {
            for j in 1..=k {
                let used = j * e;
                if used > k * t {
                    break;
                }
                if self.has(k - j, k * t - used) {
                    return false;
                }
            }
        }
        true
    }

    fn add(&mut self, e: usize) {
        let old = self.reach.clone();
        for c in 1..=self.k {
            for j in 1..=c {
                let shift = j * e;
                let (ws, bs) = (shift / 64, shift % 64);
                for w in (0..self.words).rev() {
                    if w < ws {
                        break;
                    }
                    let src = w - ws;
                    let mut v = old[c - j][src] << bs;
                    if bs != 0 && src > 0 {
                        v |= old[c - j][src - 1] >> (64 - bs);
                    }
                    self.reach[c][w] |= v;
                }
            }
        }
        self.elements.push(e);
    }
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

/// Digit/sphere construction. For digit bound `d` the base is
/// `q = k(d-1) + 1`, so adding `k` digit vectors never carries; the integers
/// `1 + sum a_i q^i <= m` with digits in `0..d` are grouped by the squared
/// norm of their digit vector and the largest group is kept. Every `d` with
/// `q^2 <= m - 1` is tried and the largest result wins (ties to the smaller
/// `d`, then the smaller norm).
pub fn sphere_construction(m: usize, k: usize) -> Result<BehrendSet, BehrendError> {
    check_params(m, k)?;
    let mut best: Vec<usize> = vec![1];
    let limit = m - 1;
    let mut d = 2;
    loop {
        let q = k * (d - 1) + 1;
        if q.saturating_mul(q) > limit {
            break;
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        collect_digit_vectors(q, d, limit, 0, 1, 0, &mut groups);
        if let Some(group) = groups.values().reduce(|a, b| if b.len() > a.len() { b } else { a }) {
            if group.len() > best.len() {
                best = group.iter().map(|v| v + 1).collect();
            }
        }
        d += 1;
    }
    best.sort_unstable();
    Ok(BehrendSet { m, k, elements: best, method: Method::SphereConstruction })
}

fn collect_digit_vectors(
    q: usize,
    d: usize,
    limit: usize,
    value: usize,
    place: usize,
    norm: usize,
    groups: &mut BTreeMap<usize, Vec<usize>>,
) {
    if place > limit {
        groups.entry(norm).or_default().push(value);
        return;
    }
    for digit in 0..d {
        let next = value + digit * place;
        if next > limit {
            break;
        }
        collect_digit_vectors(q, d, limit, next, place * q, norm + digit * digit, groups);
    }
}

/// Greedy set: scan `1..=m` and keep every integer that creates no solution.
pub fn greedy_set(m: usize, k: usize) -> Result<BehrendSet, BehrendError> {
    check_params(m, k)?;
    let mut table = SumTable::new(k, m);
    for e in 1..=m {
        if table.can_add(e) {
            table.add(e);
        }
    }
    Ok(BehrendSet { m, k, elements: table.elements, method: Method::Greedy })
}

struct ExactSearch<'a> {
    m: usize,
    target: usize,
    /// `sizes[len]` = maximum valid subset of an interval of length `len`.
    sizes: &'a [usize],
    found: Option<Vec<usize>>,
}

impl ExactSearch<'_> {
    fn dfs(&mut self, next: usize, table: &SumTable) -> bool {
        let chosen = table.elements.len();
        if chosen == self.target {
            self.found = Some(table.elements.clone());
            return true;
        }
        if next > self.m {
            return false;
        }
        let remaining = self.m - next + 1;
        // the table may stop one short of `remaining` while it is being grown
        let bound = match self.sizes.get(remaining) {
            Some(&b) => b,
            None => self.sizes[remaining - 1] + 1,
        };
        if chosen + bound < self.target {
            return false;
        }
        if table.can_add(next) {
            let mut with = table.clone();
            with.add(next);
            if self.dfs(next + 1, &with) {
                return true;
            }
        }
        self.dfs(next + 1, table)
    }
}

fn search(m: usize, k: usize, target: usize, sizes: &[usize]) -> Option<Vec<usize>> {
    let mut s = ExactSearch { m, target, sizes, found: None };
    s.dfs(1, &SumTable::new(k, m));
    s.found
}

fn size_cache() -> &'static Mutex<HashMap<usize, Vec<usize>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Vec<usize>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `sizes[j]` for `j in 0..=m`: the maximum size of a valid subset of `{1..j}`.
fn exact_sizes(m: usize, k: usize) -> Vec<usize> {
    let mut cache = size_cache().lock().expect("size cache poisoned");
    let sizes = cache.entry(k).or_insert_with(|| vec![0]);
    while sizes.len() <= m {
        let j = sizes.len();
        let prev = sizes[j - 1];
        let grows = search(j, k, prev + 1, sizes).is_some();
        sizes.push(if grows { prev + 1 } else { prev });
    }
    sizes[..=m].to_vec()
}

/// Maximum-cardinality valid subset of `{1..m}`; among those, the
/// lexicographically least.
pub fn exact_max_set(m: usize, k: usize) -> Result<BehrendSet, BehrendError> {
    check_params(m, k)?;
    if m > EXACT_SEARCH_LIMIT {
        return Err(BehrendError::SearchBudget { m, limit: EXACT_SEARCH_LIMIT });
    }
    let sizes = exact_sizes(m, k);
    let elements = search(m, k, sizes[m], &sizes).expect("a set of the recorded size exists");
    Ok(BehrendSet { m, k, elements, method: Method::ExactSearch })
}

/// The densest set available for `(m, k)`: the exact maximum within the
/// search limit, otherwise the larger of the sphere and greedy sets.
pub fn densest_set(m: usize, k: usize) -> Result<BehrendSet, BehrendError> {
    if m <= EXACT_SEARCH_LIMIT {
        return exact_max_set(m, k);
    }
    let sphere = sphere_construction(m, k)?;
    let greedy = greedy_set(m, k)?;
    Ok(if greedy.len() > sphere.len() { greedy } else { sphere })
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// A nontrivial solution `lhs[0] + ... + lhs[r-1] = r * rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Solution {
    pub lhs: Vec<usize>,
    pub rhs: usize,
}

impl Solution {
    pub fn arity(&self) -> usize {
        self.lhs.len()
    }

    pub fn holds(&self) -> bool {
        self.lhs.iter().sum::<usize>() == self.lhs.len() * self.rhs && self.lhs.iter().any(|&x| x != self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Counterexample(Solution),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    /// Exact check; `budget` caps the size of the counting table.
    Exhaustive { budget: usize },
    /// `samples` random instances per arity `2..=k`.
    Randomized { samples: usize, seed: u64 },
}

impl Default for VerifyMode {
    fn default() -> Self {
        VerifyMode::Exhaustive { budget: DEFAULT_VERIFY_BUDGET }
    }
}

/// Checks the arity-`k` equation and every derived arity `r < k`, in that
/// order. The exhaustive mode reports, for the first failing arity, the
/// smallest right-hand side with a nontrivial solution and the
/// lexicographically least sorted left-hand side.
pub fn verify_no_nontrivial(x: &BehrendSet, mode: VerifyMode) -> Result<Verdict, BehrendError> {
    match mode {
        VerifyMode::Exhaustive { budget } => verify_exhaustive(&x.elements, x.k, budget),
        VerifyMode::Randomized { samples, seed } => Ok(verify_randomized(&x.elements, x.k, samples, seed)),
    }
}

fn verify_exhaustive(elements: &[usize], k: usize, budget: usize) -> Result<Verdict, BehrendError> {
    let Some(&max) = elements.last() else {
        return Ok(Verdict::Valid);
    };
    let s = elements.len();
    let needed = (s + 1) * (k + 1) * (k * max + 1);
    if needed > budget {
        return Err(BehrendError::VerifyBudget { needed, budget });
    }
    for r in (2..=k).rev() {
        let table = MultisetCounts::new(elements, r);
        for (idx, &x) in elements.iter().enumerate() {
            if table.get(0, r, r * x) >= 2 {
                return Ok(Verdict::Counterexample(table.least_nontrivial(r, x, idx)));
            }
        }
    }
    Ok(Verdict::Valid)
}

/// `count(i, c, t)`: number of multisets of size `c` drawn from
/// `elements[i..]` with sum `t`, saturated at 2.
struct MultisetCounts<'a> {
    elements: &'a [usize],
    r: usize,
    span: usize,
    cells: Vec<u8>,
}

impl<'a> MultisetCounts<'a> {
    fn new(elements: &'a [usize], r: usize) -> Self {
        let s = elements.len();
        let span = r * elements[s - 1] + 1;
        let mut t = MultisetCounts { elements, r, span, cells: vec![0; (s + 1) * (r + 1) * span] };
        let base = t.at(s, 0, 0);
        t.cells[base] = 1;
        for i in (0..s).rev() {
            let e = elements[i];
            for c in 0..=r {
                for sum in 0..span {
                    let mut v = t.cells[t.at(i + 1, c, sum)];
                    if c > 0 && sum >= e {
                        v = v.saturating_add(t.cells[t.at(i, c - 1, sum - e)]);
                    }
                    let idx = t.at(i, c, sum);
                    t.cells[idx] = v.min(2);
                }
            }
        }
        t
    }

    fn at(&self, i: usize, c: usize, sum: usize) -> usize {
        (i * (self.r + 1) + c) * self.span + sum
    }

    fn get(&self, i: usize, c: usize, sum: usize) -> u8 {
        if sum >= self.span {
            return 0;
        }
        self.cells[self.at(i, c, sum)]
    }

    fn least_nontrivial(&self, r: usize, x: usize, x_idx: usize) -> Solution {
        let mut lhs = Vec::with_capacity(r);
        let (mut i, mut c, mut sum) = (0, r, r * x);
        let mut trivial = true;
        while c > 0 {
            let pick = (i..self.elements.len())
                .find(|&j| {
                    let e = self.elements[j];
                    if e > sum {
                        return false;
                    }
                    let rest = self.get(j, c - 1, sum - e);
                    if trivial && j == x_idx {
                        rest >= 2
                    } else {
                        rest >= 1
                    }
                })
                .expect("counting table guarantees a completion");
            let e = self.elements[pick];
            trivial &= pick == x_idx;
            lhs.push(e);
            sum -= e;
            c -= 1;
            i = pick;
        }
        Solution { lhs, rhs: x }
    }
}

fn verify_randomized(elements: &[usize], k: usize, samples: usize, seed: u64) -> Verdict {
    if elements.len() < 2 {
        return Verdict::Valid;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |rng: &mut ChaCha8Rng| elements[rng.gen_range(0..elements.len())];
    for r in (2..=k).rev() {
        for _ in 0..samples {
            let rhs = pick(&mut rng);
            let mut lhs: Vec<usize> = (0..r - 1).map(|_| pick(&mut rng)).collect();
            let partial: usize = lhs.iter().sum();
            let Some(last) = (r * rhs).checked_sub(partial) else {
                continue;
            };
            if elements.binary_search(&last).is_err() {
                continue;
            }
            lhs.push(last);
            if lhs.iter().any(|&v| v != rhs) {
                lhs.sort_unstable();
                return Verdict::Counterexample(Solution { lhs, rhs });
            }
        }
    }
    Verdict::Valid
}

// ---------------------------------------------------------------------------
// Density
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub size: usize,
    /// `m / exp(10 * sqrt(ln m * ln k))`.
    pub bound: f64,
    pub satisfied: bool,
}

pub fn density_bound(m: usize, k: usize) -> f64 {
    let (m, k) = (m as f64, k as f64);
    m / (10.0 * (m.ln() * k.ln()).sqrt()).exp()
}

pub fn density_report(x: &BehrendSet) -> DensityReport {
    let bound = density_bound(x.m, x.k);
    DensityReport { size: x.len(), bound, satisfied: x.len() as f64 >= bound }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Enumerates every ordered `(r+1)`-tuple over the set.
    fn brute_has_solution(elements: &[usize], r: usize) -> bool {
        fn rec(el: &[usize], r: usize, acc: &mut Vec<usize>) -> bool {
            if acc.len() == r + 1 {
                let rhs = acc[r];
                let lhs = &acc[..r];
                return lhs.iter().sum::<usize>() == r * rhs && lhs.iter().any(|&v| v != rhs);
            }
            for &e in el {
                acc.push(e);
                if rec(el, r, acc) {
                    return true;
                }
                acc.pop();
            }
            false
        }
        rec(elements, r, &mut Vec::new())
    }

    fn brute_valid(elements: &[usize], k: usize) -> bool {
        (2..=k).all(|r| !brute_has_solution(elements, r))
    }

    fn brute_max_size(m: usize, k: usize) -> usize {
        (0u64..1 << m)
            .filter(|mask| {
                let el: Vec<usize> = (1..=m).filter(|&e| (mask >> (e - 1)) & 1 == 1).collect();
                brute_valid(&el, k)
            })
            .map(|mask| mask.count_ones() as usize)
            .max()
            .unwrap()
    }

    fn given(m: usize, k: usize, el: &[usize]) -> BehrendSet {
        BehrendSet::from_elements(m, k, el.to_vec()).unwrap()
    }

    #[test]
    fn exact_small_sets_match_brute_force() {
        assert_eq!(brute_max_size(5, 2), 4);
        assert_eq!(brute_max_size(3, 2), 2);
        let s = exact_max_set(5, 2).unwrap();
        assert_eq!(s.elements, vec![1, 2, 4, 5]);
        assert_eq!(exact_max_set(3, 2).unwrap().elements, vec![1, 2]);
        assert_eq!(exact_max_set(1, 5).unwrap().elements, vec![1]);
        for k in 2..=4 {
            for m in 1..=10 {
                assert_eq!(exact_max_set(m, k).unwrap().len(), brute_max_size(m, k), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn exact_sets_are_monotone() {
        for k in 2..=4 {
            let sizes: Vec<usize> = (1..=20).map(|m| exact_max_set(m, k).unwrap().len()).collect();
            assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
        }
        for m in 1..=20 {
            let sizes: Vec<usize> = (2..=4).map(|k| exact_max_set(m, k).unwrap().len()).collect();
            assert!(sizes.windows(2).all(|w| w[0] >= w[1]), "m={m}: {sizes:?}");
        }
    }

    #[test]
    fn exact_search_budget() {
        assert_eq!(exact_max_set(61, 2), Err(BehrendError::SearchBudget { m: 61, limit: 60 }));
        assert!(exact_max_set(0, 2).is_err());
        assert!(exact_max_set(4, 1).is_err());
    }

    #[test]
    fn verify_examples() {
        assert_eq!(verify_no_nontrivial(&given(5, 2, &[1, 2, 4, 5]), VerifyMode::default()), Ok(Verdict::Valid));
        assert_eq!(
            verify_no_nontrivial(&given(3, 2, &[1, 2, 3]), VerifyMode::default()),
            Ok(Verdict::Counterexample(Solution { lhs: vec![1, 3], rhs: 2 }))
        );
        assert_eq!(
            verify_no_nontrivial(&given(4, 3, &[2, 3, 4]), VerifyMode::default()),
            Ok(Verdict::Counterexample(Solution { lhs: vec![2, 3, 4], rhs: 3 }))
        );
        assert!(matches!(
            verify_no_nontrivial(&given(40, 3, &[1, 5, 40]), VerifyMode::Exhaustive { budget: 10 }),
            Err(BehrendError::VerifyBudget { .. })
        ));
    }

    #[test]
    fn exhaustive_verification_agrees_with_tuple_enumeration() {
        // every subset of {1..8} for k = 2, 3
        for k in 2..=3 {
            for mask in 1u32..1 << 8 {
                let el: Vec<usize> = (1..=8).filter(|&e| (mask >> (e - 1)) & 1 == 1).collect();
                let verdict = verify_no_nontrivial(&given(8, k, &el), VerifyMode::default()).unwrap();
                assert_eq!(verdict.is_valid(), brute_valid(&el, k), "{el:?} k={k}");
                if let Verdict::Counterexample(sol) = verdict {
                    assert!(sol.holds());
                    assert!(sol.lhs.iter().chain([&sol.rhs]).all(|v| el.contains(v)));
                }
            }
        }
    }

    #[test]
    fn sphere_sets() {
        assert_eq!(sphere_construction(1, 4).unwrap().elements, vec![1]);
        let s = sphere_construction(20, 2).unwrap();
        assert!(s.len() >= 2);
        assert!(brute_valid(&s.elements, 2));
        for m in 1..=200 {
            for k in 2..=5 {
                let s = sphere_construction(m, k).unwrap();
                assert!(!s.is_empty());
                assert!(s.elements.iter().all(|&e| (1..=m).contains(&e)));
                assert!(verify_no_nontrivial(&s, VerifyMode::default()).unwrap().is_valid(), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn greedy_is_valid() {
        for k in 2..=4 {
            let g = greedy_set(300, k).unwrap();
            assert!(verify_no_nontrivial(&g, VerifyMode::default()).unwrap().is_valid());
        }
        // greedy 3-AP-free set is the base-3 digit set {0,1}-digits shifted by one
        assert_eq!(greedy_set(14, 2).unwrap().elements, vec![1, 2, 4, 5, 10, 11, 13, 14]);
    }

    #[test]
    fn randomized_finds_planted_solution() {
        let bad = given(20, 3, &[1, 2, 3, 11, 17]);
        let v = verify_no_nontrivial(&bad, VerifyMode::Randomized { samples: 10_000, seed: 7 }).unwrap();
        match v {
            Verdict::Counterexample(sol) => assert!(sol.holds()),
            Verdict::Valid => panic!("missed planted progression"),
        }
    }

    #[test]
    fn density() {
        let s = sphere_construction(100, 3).unwrap();
        let r = density_report(&s);
        assert!(r.bound < 1.0 && r.satisfied);
        let one = density_report(&exact_max_set(1, 2).unwrap());
        assert_eq!(one.size, 1);
        assert!((one.bound - 1.0).abs() < 1e-12 && one.satisfied);
    }
}
