//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use eqgraph::behrend::{exact_max_set, BehrendSet};
use eqgraph::bounds::{bounds_report, c2, covers_all_cuts, degree2_cut_family, fc, render, Limits, Rational};
use eqgraph::graph::{
    blocks, bowtie, complete, complete_bipartite, cycle, ear_decomposition, ear_numbering, enumerate_cuts, path,
    petersen, star, subdivide, theta, triangle_bridge_triangle, Graph,
};
use eqgraph::host::{build_host, build_host_unchecked, explain_rogue, verify_faithful, DEFAULT_VERIFY_NODES};
use eqgraph::linear::{attack, verify_witness, LinearProtocol};
use eqgraph::protocol::{
    ceil_log2, exhaustive_soundness, BlockProtocol, Decision, EqualityProtocol, HostProtocol, InputAssignment,
    SoundnessMode, TreeProtocol, DEFAULT_SOUNDNESS_BUDGET,
};
use num_bigint::BigInt;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Check {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))
}

fn zoo() -> Vec<(String, Graph)> {
    let mut z: Vec<(String, Graph)> = Vec::new();
    for k in 3..=10 {
        z.push((format!("cycle:{k}"), cycle(k)));
    }
    for k in 2..=8 {
        z.push((format!("complete:{k}"), complete(k)));
    }
    for (s, t) in [(1, 1), (1, 3), (2, 2), (2, 4), (3, 3), (3, 5)] {
        z.push((format!("complete_bipartite:{s}:{t}"), complete_bipartite(s, t)));
    }
    for (a, b, c) in [(2, 2, 2), (1, 2, 3), (2, 3, 4), (3, 3, 3)] {
        z.push((format!("theta:{a}:{b}:{c}"), theta(a, b, c).unwrap()));
    }
    z.push(("petersen".into(), petersen()));
    z.push(("subdivided_complete:4".into(), subdivide(&complete(4))));
    z.push(("bowtie".into(), bowtie()));
    z.push(("triangle_bridge_triangle".into(), triangle_bridge_triangle()));
    z.push(("path:5".into(), path(5)));
    z.push(("star:4".into(), star(4)));
    z
}

fn petersen_bounds() -> Check {
    let start = Instant::now();
    let r = bounds_report(&petersen(), Limits::default()).map_err(|e| e.to_string())?;
    ensure(r.fc == q(5, 1), || format!("fc = {}", render(&r.fc)))?;
    ensure(r.c2 == 11, || format!("c2 = {}", r.c2))?;
    ensure(r.lower == q(5, 1) && r.upper == q(11, 2), || {
        format!("interval [{}, {}]", render(&r.lower), render(&r.upper))
    })?;
    ensure(enumerate_cuts(&petersen(), 16).unwrap().len() == 511, || "cut count".into())?;
    within(start, Duration::from_secs(60))
}

fn cycles_and_cliques_tight() -> Check {
    let start = Instant::now();
    for k in 3..=8 {
        for (name, g) in [("cycle", cycle(k)), ("complete", complete(k))] {
            let r = bounds_report(&g, Limits::default()).map_err(|e| e.to_string())?;
            let half = q(k as i64, 2);
            ensure(r.tight && r.lower == half && r.upper == half, || {
                format!("{name}:{k} gives [{}, {}]", render(&r.lower), render(&r.upper))
            })?;
        }
    }
    within(start, Duration::from_secs(10))
}

fn complete_bipartite_tight() -> Check {
    let start = Instant::now();
    for (s, t) in [(1, 1), (1, 3), (2, 2), (2, 4), (3, 5)] {
        let r = bounds_report(&complete_bipartite(s, t), Limits::default()).map_err(|e| e.to_string())?;
        let t_q = q(t as i64, 1);
        ensure(r.tight && r.lower == t_q && r.upper == t_q, || {
            format!("K_{{{s},{t}}} gives [{}, {}]", render(&r.lower), render(&r.upper))
        })?;
    }
    within(start, Duration::from_secs(60))
}

fn degree_two_families() -> Check {
    let start = Instant::now();
    for (name, g) in [("theta:2:2:2", theta(2, 2, 2).unwrap()), ("subdivided K4", subdivide(&complete(4)))] {
        let limits = Limits::default();
        let f = fc(&g, limits).map_err(|e| e.to_string())?;
        let c = c2(&g, limits).map_err(|e| e.to_string())?;
        let half_e = q(g.edge_count() as i64, 2);
        ensure(f.value == half_e, || format!("{name}: fc = {}, |E|/2 = {}", render(&f.value), render(&half_e)))?;
        ensure(q(c.value as i64, 2) == half_e, || format!("{name}: c2 = {}", c.value))?;
        let family = degree2_cut_family(&g).map_err(|e| e.to_string())?;
        ensure(family.is_feasible(&g) && family.value() == f.value, || {
            format!("{name}: family packs {}", render(&family.value()))
        })?;
    }
    within(start, Duration::from_secs(60))
}

fn strong_duality() -> Check {
    for (name, g) in zoo() {
        let f = fc(&g, Limits::default()).map_err(|e| e.to_string())?;
        let simple = g.underlying();
        let cuts = enumerate_cuts(&simple, 16).unwrap();
        let primal: Rational = f.primal.iter().sum();
        ensure(covers_all_cuts(&simple, &f.primal, &cuts), || format!("{name}: covering infeasible"))?;
        ensure(f.packing.is_feasible(&simple), || format!("{name}: packing infeasible"))?;
        ensure(primal == f.value && f.packing.value() == f.value, || {
            format!("{name}: primal {} packing {}", render(&primal), render(&f.packing.value()))
        })?;
    }
    Ok(())
}

fn host_faithfulness() -> Check {
    let start = Instant::now();
    let cases = [(cycle(3), 5), (cycle(4), 5), (complete(4), 5), (theta(2, 2, 2).unwrap(), 4)];
    for (h, m) in cases {
        let x = exact_max_set(m, h.k()).map_err(|e| e.to_string())?;
        let num = ear_numbering(&ear_decomposition(&h).map_err(|e| e.to_string())?);
        let f = build_host(&h, &num, m, &x).map_err(|e| e.to_string())?;
        let v = verify_faithful(&f, DEFAULT_VERIFY_NODES).map_err(|e| e.to_string())?;
        ensure(v.faithful && v.special_copies == m * x.len(), || {
            format!("k={} m={m} X={:?}: faithful={} copies={}", h.k(), x.elements, v.faithful, v.special_copies)
        })?;
    }
    // negative control: {1,2,3} is a progression
    let h = cycle(3);
    let num = ear_numbering(&ear_decomposition(&h).unwrap());
    let x = BehrendSet::from_elements(6, 3, vec![1, 2, 3]).unwrap();
    ensure(build_host(&h, &num, 6, &x).is_err(), || "invalid set accepted".into())?;
    let f = build_host_unchecked(&h, &num, 6, &x).map_err(|e| e.to_string())?;
    let v = verify_faithful(&f, DEFAULT_VERIFY_NODES).map_err(|e| e.to_string())?;
    let rogue = v.rogue.ok_or("negative control found no rogue copy")?;
    let eq = explain_rogue(&f, &rogue.tuple).ok_or("rogue copy without an equation")?;
    ensure(eq.holds(), || format!("equation {eq:?} does not hold"))?;
    within(start, Duration::from_secs(120))
}

fn protocol_soundness() -> Check {
    let start = Instant::now();
    let mode = SoundnessMode::Exhaustive { budget: DEFAULT_SOUNDNESS_BUDGET };
    let host = HostProtocol::new(&cycle(3), 4).map_err(|e| e.to_string())?;
    let r = exhaustive_soundness(&host, mode).map_err(|e| e.to_string())?;
    ensure(r.checked == 4096 && r.violation.is_none(), || format!("C3 host: {r:?}"))?;
    let comp = BlockProtocol::new(&path(3), 3).map_err(|e| e.to_string())?;
    let r = exhaustive_soundness(&comp, mode).map_err(|e| e.to_string())?;
    ensure(r.checked == 512 && r.violation.is_none(), || format!("path3 blocks: {r:?}"))?;
    within(start, Duration::from_secs(60))
}

fn cost_exactness() -> Check {
    for (name, g) in zoo() {
        for n in [1, 4, 8] {
            let p = TreeProtocol::new(&g, n).map_err(|e| e.to_string())?;
            let t = p.run(&InputAssignment::equal(g.k(), n, 1).unwrap()).map_err(|e| e.to_string())?;
            let expected = ((g.k() - 1) * n) as u64;
            ensure(t.total_bits == expected && t.decision == Decision::Accept, || {
                format!("{name} n={n}: tree cost {} != {expected}", t.total_bits)
            })?;
        }
    }
    for n in 1..=10 {
        let p = HostProtocol::new(&cycle(3), n).map_err(|e| e.to_string())?;
        let m = p.host().m();
        let expected = 3 * (ceil_log2(3 * m) + 1);
        for value in [0, (1u64 << n) - 1] {
            let t = p.run(&InputAssignment::equal(3, n, value).unwrap()).map_err(|e| e.to_string())?;
            let edge_sum: u64 = t.per_edge_bits.values().sum();
            ensure(t.total_bits == expected && edge_sum == expected, || {
                format!("C3 n={n} m={m}: host cost {} != {expected}", t.total_bits)
            })?;
        }
    }
    Ok(())
}

fn linear_audit() -> Check {
    let start = Instant::now();
    let mut found = 0;
    for (seed, trial) in (0u64..).zip(0..100) {
        let k = [2, 3, 4][trial % 3];
        let n = [4, 8][(trial / 3) % 2];
        let count = (k - 1) * n - 1;
        let p = LinearProtocol::random(k, n, count, seed).map_err(|e| e.to_string())?;
        if let Some(w) = attack(&p) {
            if verify_witness(&p, &w) {
                found += 1;
            }
        }
    }
    ensure(found == 100, || format!("witness verified in {found}/100"))?;
    for k in [2, 3, 4] {
        for n in [4, 8] {
            let p = LinearProtocol::tree(&path(k), n).map_err(|e| e.to_string())?;
            ensure(p.forms().len() == (k - 1) * n && attack(&p).is_none(), || {
                format!("tree k={k} n={n} admits a witness")
            })?;
        }
    }
    within(start, Duration::from_secs(30))
}

fn block_additivity() -> Check {
    let start = Instant::now();
    let n = 3;
    for (name, g) in [("bowtie", bowtie()), ("triangle_bridge_triangle", triangle_bridge_triangle())] {
        let r = bounds_report(&g, Limits::default()).map_err(|e| e.to_string())?;
        let decomp = blocks(&g).map_err(|e| e.to_string())?;
        let (mut lower, mut upper) = (q(0, 1), q(0, 1));
        let mut cost = 0u64;
        for b in &decomp.blocks {
            let br = bounds_report(&b.graph, Limits::default()).map_err(|e| e.to_string())?;
            lower += &br.lower;
            upper += &br.upper;
            cost += if b.is_bridge() {
                n as u64
            } else {
                let p = HostProtocol::new(&b.graph, n).map_err(|e| e.to_string())?;
                p.run(&InputAssignment::equal(b.graph.k(), n, 2).unwrap()).map_err(|e| e.to_string())?.total_bits
            };
        }
        ensure(r.lower == lower && r.upper == upper, || {
            format!(
                "{name}: [{}, {}] vs block sums [{}, {}]",
                render(&r.lower),
                render(&r.upper),
                render(&lower),
                render(&upper)
            )
        })?;
        let comp = BlockProtocol::new(&g, n).map_err(|e| e.to_string())?;
        let t = comp.run(&InputAssignment::equal(g.k(), n, 2).unwrap()).map_err(|e| e.to_string())?;
        ensure(t.total_bits == cost && t.decision == Decision::Accept, || {
            format!("{name}: composed cost {} vs block sum {cost}", t.total_bits)
        })?;
    }
    let tri = q(3, 2);
    let r = bounds_report(&bowtie(), Limits::default()).map_err(|e| e.to_string())?;
    ensure(r.lower == &tri + &tri && r.tight, || "bowtie is not tight at 3".into())?;
    let r = bounds_report(&triangle_bridge_triangle(), Limits::default()).map_err(|e| e.to_string())?;
    ensure(r.lower == q(4, 1) && r.tight, || "triangle-bridge-triangle is not tight at 4".into())?;
    within(start, Duration::from_secs(30))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 Petersen: fc = 5, c2 = 11, interval [5, 11/2]", petersen_bounds),
        ("2 cycles and cliques k = 3..8 tight at k/2", cycles_and_cliques_tight),
        ("3 complete bipartite K_{s,t} tight at t", complete_bipartite_tight),
        ("4 degree-two families: fc = |E|/2 = c2/2 = family packing", degree_two_families),
        ("5 strong duality on the zoo", strong_duality),
        ("6 host faithfulness and negative control", host_faithfulness),
        ("7 protocol soundness, exhaustive", protocol_soundness),
        ("8 cost exactness", cost_exactness),
        ("9 linear audit", linear_audit),
        ("10 block additivity", block_additivity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        match outcome {
            Ok(()) => println!("PASS  criterion {name}  ({elapsed:.2?})"),
            Err(e) => {
                failed += 1;
                println!("FAIL  criterion {name}  ({elapsed:.2?}): {e}");
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
