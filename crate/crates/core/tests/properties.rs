use std::collections::HashSet;

use eqgraph::behrend::{
    densest_set, exact_max_set, greedy_set, sphere_construction, verify_no_nontrivial, BehrendSet, VerifyMode,
};
use eqgraph::bounds::{bounds_report, c2, covers_all_cuts, fc, Limits, Rational};
use eqgraph::graph::{
    blocks, ear_decomposition, ear_numbering, enumerate_cuts, is_two_connected, is_two_edge_connected, parse_graph,
    Graph, Orientation,
};
use eqgraph::host::{build_host, decode_copy, special_copy, verify_faithful, DEFAULT_VERIFY_NODES};
use eqgraph::linear::{attack, verify_witness, LinearProtocol};
use eqgraph::protocol::{BlockProtocol, Decision, EqualityProtocol, HostProtocol, InputAssignment, TreeProtocol};
use num_traits::Zero;
use proptest::prelude::*;

/// A random connected graph: a random spanning tree plus extra edges.
fn connected_graph(max_k: usize) -> impl Strategy<Value = Graph> {
    (2..=max_k).prop_flat_map(|k| {
        let parents: Vec<_> = (1..k).map(|i| 0..i).collect();
        let extra = proptest::collection::vec((0..k, 0..k), 0..=k + 2);
        (Just(k), parents, extra).prop_map(|(k, parents, extra)| {
            let mut pairs: HashSet<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
            for (a, b) in extra {
                if a != b {
                    pairs.insert((a.min(b), a.max(b)));
                }
            }
            Graph::new(k, pairs).unwrap()
        })
    })
}

fn two_connected_graph(max_k: usize) -> impl Strategy<Value = Graph> {
    connected_graph(max_k).prop_filter("2-connected", is_two_connected)
}

/// Nontrivial solutions by enumerating sorted tuples.
fn brute_has_solution(x: &[usize], k: usize) -> bool {
    fn rec(x: &[usize], start: usize, left: usize, sum: usize, r: usize, picked: &mut Vec<usize>) -> bool {
        if left == 0 {
            return sum.is_multiple_of(r)
                && x.binary_search(&(sum / r)).is_ok()
                && picked.iter().any(|&p| p != sum / r);
        }
        (start..x.len()).any(|i| {
            picked.push(x[i]);
            let hit = rec(x, i, left - 1, sum + x[i], r, picked);
            picked.pop();
            hit
        })
    }
    (2..=k).any(|r| rec(x, 0, r, 0, r, &mut Vec::new()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_round_trip(g in connected_graph(9)) {
        prop_assert_eq!(parse_graph(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn blocks_partition_the_edges(g in connected_graph(9)) {
        let d = blocks(&g).unwrap();
        let mut seen: Vec<(usize, usize)> = d.blocks.iter().flat_map(|b| b.global_edges()).collect();
        seen.sort_unstable();
        let all: Vec<(usize, usize)> = g.edges().iter().map(|e| e.endpoints()).collect();
        prop_assert_eq!(seen, all);
        for b in &d.blocks {
            prop_assert!(b.is_bridge() || is_two_connected(&b.graph));
        }
    }

    #[test]
    fn ear_numbering_is_valid(g in two_connected_graph(8)) {
        let d = ear_decomposition(&g).unwrap();
        prop_assert!(d.validate(&g).is_ok());
        let num = ear_numbering(&d);
        prop_assert!(num.validate().is_ok());
        let o = Orientation::from_ears(&d);
        prop_assert_eq!(o.arcs.len(), g.edge_count());
        prop_assert!(o.indegrees(g.k()).iter().all(|&x| x >= 1));
    }

    #[test]
    fn exact_verifier_matches_enumeration(
        k in 2usize..=4,
        m in 1usize..=14,
        mask in any::<u16>(),
    ) {
        let elements: Vec<usize> = (1..=m).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        let x = BehrendSet::from_elements(m, k, elements.clone()).unwrap();
        let verdict = verify_no_nontrivial(&x, VerifyMode::default()).unwrap();
        prop_assert_eq!(verdict.is_valid(), !brute_has_solution(&elements, k));
        if let eqgraph::behrend::Verdict::Counterexample(s) = verdict {
            prop_assert!(s.holds());
            prop_assert!(s.lhs.iter().chain([&s.rhs]).all(|e| elements.contains(e)));
        }
    }

    #[test]
    fn constructions_are_valid(k in 2usize..=6, m in 1usize..=200) {
        for x in [greedy_set(m, k).unwrap(), sphere_construction(m, k).unwrap(), densest_set(m, k).unwrap()] {
            prop_assert!(x.elements.iter().all(|&e| (1..=m).contains(&e)));
            prop_assert!(verify_no_nontrivial(&x, VerifyMode::default()).unwrap().is_valid());
        }
    }

    #[test]
    fn valid_sets_pass_randomized_check(k in 2usize..=5, m in 1usize..=40, seed in any::<u64>()) {
        let x = greedy_set(m, k).unwrap();
        let mode = VerifyMode::Randomized { samples: 500, seed };
        prop_assert!(verify_no_nontrivial(&x, mode).unwrap().is_valid());
    }

    #[test]
    fn bounds_are_consistent(g in connected_graph(7)) {
        let limits = Limits::default();
        let f = fc(&g, limits).unwrap();
        let cuts = enumerate_cuts(&g, 16).unwrap();
        prop_assert!(covers_all_cuts(&g, &f.primal, &cuts));
        prop_assert!(f.packing.is_feasible(&g));
        let primal: Rational = f.primal.iter().sum();
        prop_assert_eq!(&primal, &f.value);
        prop_assert_eq!(f.packing.value(), f.value.clone());

        let c = c2(&g, limits).unwrap();
        prop_assert!(is_two_edge_connected(&c.witness(&g)));
        prop_assert_eq!(c.multiplicities.iter().map(|&x| x as usize).sum::<usize>(), c.value);
        // half of any 2-edge-connected multigraph covers every cut
        prop_assert!(f.value.clone() * Rational::from_integer(2.into()) <= Rational::from_integer(c.value.into()));

        let r = bounds_report(&g, limits).unwrap();
        prop_assert!(r.lower <= r.upper);
        prop_assert_eq!(r.tight, r.lower == r.upper);
        prop_assert!(!r.lower.is_zero());
    }

    #[test]
    fn host_copies_round_trip(g in two_connected_graph(6), m in 1usize..=6) {
        let x = exact_max_set(m, g.k()).unwrap();
        let num = ear_numbering(&ear_decomposition(&g).unwrap());
        let f = build_host(&g, &num, m, &x).unwrap();
        for (a, b) in f.copies() {
            let u = special_copy(&f, a, b).unwrap();
            prop_assert_eq!(decode_copy(&f, &u), Some((a, b)));
        }
        let edges: HashSet<_> = f.edges().collect();
        prop_assert_eq!(edges.len(), m * x.len() * g.edge_count());
        let v = verify_faithful(&f, DEFAULT_VERIFY_NODES).unwrap();
        prop_assert!(v.faithful);
        prop_assert_eq!(v.special_copies, m * x.len());
    }

    #[test]
    fn protocols_decide_equality(
        g in connected_graph(6),
        n in 1usize..=5,
        strings in proptest::collection::vec(any::<u64>(), 6),
        make_equal in any::<bool>(),
    ) {
        let k = g.k();
        let raw: Vec<u64> = strings[..k].iter().map(|s| s & ((1 << n) - 1)).collect();
        let raw = if make_equal { vec![raw[0]; k] } else { raw };
        let input = InputAssignment::new(n, raw).unwrap();
        let expected = if input.all_equal() { Decision::Accept } else { Decision::Reject };
        let tree = TreeProtocol::new(&g, n).unwrap();
        prop_assert_eq!(tree.run(&input).unwrap().decision, expected);
        let comp = BlockProtocol::new(&g, n).unwrap();
        let t = comp.run(&input).unwrap();
        prop_assert_eq!(t.decision, expected);
        prop_assert_eq!(t.per_edge_bits.len(), g.edge_count());
        if is_two_connected(&g) {
            let host = HostProtocol::new(&g, n).unwrap();
            let t = host.run(&input).unwrap();
            prop_assert_eq!(t.decision, expected);
            prop_assert_eq!(t.total_bits, g.edge_count() as u64 * host.bits_per_edge());
        }
    }

    #[test]
    fn short_linear_protocols_err(k in 2usize..=5, n in 1usize..=16, seed in any::<u64>(), deficit in 1usize..=4) {
        let count = ((k - 1) * n).saturating_sub(deficit);
        let p = LinearProtocol::random(k, n, count, seed).unwrap();
        let w = attack(&p);
        prop_assert!(w.is_some());
        prop_assert!(verify_witness(&p, &w.unwrap()));
    }

    #[test]
    fn attack_is_deterministic(k in 2usize..=4, n in 1usize..=8, count in 0usize..=20, seed in any::<u64>()) {
        let p = LinearProtocol::random(k, n, count, seed).unwrap();
        let a = attack(&p);
        prop_assert_eq!(&a, &attack(&p.clone()));
        if let Some(w) = a {
            prop_assert!(verify_witness(&p, &w));
        }
    }
}
