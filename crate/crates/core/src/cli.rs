//! Command-line front end. Every command prints one JSON record per line
//! (or a plain table with `--pretty`).

use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::behrend::{
    densest_set, density_report, exact_max_set, greedy_set, sphere_construction, verify_no_nontrivial, Verdict,
    VerifyMode,
};
use crate::bounds::{bounds_report, Limits};
use crate::graph::{ear_decomposition, ear_numbering, resolve_graph};
use crate::host::{build_host, verify_faithful, HostStats, DEFAULT_VERIFY_NODES};
use crate::linear::{attack, verify_witness, LinearProtocol};
use crate::protocol::{
    build_protocol, exhaustive_soundness, Decision, InputAssignment, ProtocolKind, SoundnessMode,
    DEFAULT_SOUNDNESS_BUDGET,
};

#[derive(Debug, Parser)]
#[command(name = "eqgraph", version, about = "Equality testing on graphs: bounds, hosts and protocol simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print a plain table instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Search budget for the exhaustive parts of the command.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputsMode {
    /// One all-equal input.
    Equal,
    /// One random input.
    Random,
    /// Every input, checking soundness.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SetMethod {
    Exact,
    Sphere,
    Greedy,
    Densest,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fractional cut packing, c2 and the resulting interval.
    Bounds {
        #[arg(long)]
        graph: String,
    },
    /// Run a protocol on one input or on all inputs.
    Simulate {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "host")]
        protocol: ProtocolKind,
        #[arg(long, value_enum, default_value = "equal")]
        inputs: InputsMode,
    },
    /// Build a host from the maximum set for the graph and check it.
    Host {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        m: usize,
    },
    /// Construct and verify a set with no nontrivial solutions.
    Behrend {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "densest")]
        method: SetMethod,
    },
    /// Look for an erring input of a linear protocol.
    AuditLinear {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        /// A file of 0/1 rows, `random:<count>` or `tree:<graph>`.
        #[arg(long)]
        forms: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub parameters: Value,
    pub result: Value,
    pub duration_ms: f64,
    pub version: String,
}

/// A finished command: its record and whether the checked property held.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub record: RunRecord,
    pub ok: bool,
}

type CmdResult = Result<(Value, Value, bool), String>;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("records serialize")
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn run(cli: &Cli) -> Result<Outcome, String> {
    let start = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(err)?;
    let (name, (parameters, result, ok)) = pool.install(|| -> Result<_, String> {
        Ok(match &cli.command {
            Command::Bounds { graph } => ("bounds", cmd_bounds(cli, graph)?),
            Command::Simulate { graph, n, protocol, inputs } => {
                ("simulate", cmd_simulate(cli, graph, *n, *protocol, *inputs)?)
            }
            Command::Host { graph, m } => ("host", cmd_host(cli, graph, *m)?),
            Command::Behrend { m, k, method } => ("behrend", cmd_behrend(cli, *m, *k, *method)?),
            Command::AuditLinear { k, n, forms } => ("audit-linear", cmd_audit_linear(cli, *k, *n, forms)?),
        })
    })?;
    let mut parameters = parameters;
    if let Value::Object(map) = &mut parameters {
        map.insert("seed".into(), json!(cli.seed));
        if let Some(b) = cli.budget {
            map.insert("budget".into(), json!(b));
        }
    }
    let record = RunRecord {
        command: name.to_string(),
        parameters,
        result,
        duration_ms: start.elapsed().as_secs_f64() * 1000.0,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(Outcome { record, ok })
}

fn cmd_bounds(cli: &Cli, graph: &str) -> CmdResult {
    let g = resolve_graph(graph).map_err(err)?;
    let mut limits = Limits::default();
    if let Some(b) = cli.budget {
        limits.c2_nodes = b;
    }
    let report = bounds_report(&g, limits).map_err(err)?;
    Ok((json!({ "graph": graph }), to_value(&report), true))
}

fn cmd_simulate(cli: &Cli, graph: &str, n: usize, protocol: ProtocolKind, inputs: InputsMode) -> CmdResult {
    let g = resolve_graph(graph).map_err(err)?;
    let p = build_protocol(&g, n, protocol).map_err(err)?;
    let params = json!({ "graph": graph, "n": n, "protocol": protocol, "inputs": inputs });
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    match inputs {
        InputsMode::Equal | InputsMode::Random => {
            let input = if inputs == InputsMode::Equal {
                let v = InputAssignment::random(1, n, &mut rng).strings()[0];
                InputAssignment::equal(g.k(), n, v).map_err(err)?
            } else {
                InputAssignment::random(g.k(), n, &mut rng)
            };
            let t = p.run(&input).map_err(err)?;
            let ok = (t.decision == Decision::Accept) == input.all_equal();
            Ok((params, json!({ "input": input, "transcript": t, "correct": ok }), ok))
        }
        InputsMode::All => {
            let budget = cli.budget.unwrap_or(DEFAULT_SOUNDNESS_BUDGET);
            let report = exhaustive_soundness(p.as_ref(), SoundnessMode::Exhaustive { budget }).map_err(err)?;
            let equal = p.run(&InputAssignment::equal(g.k(), n, 0).map_err(err)?).map_err(err)?;
            let ok = report.violation.is_none();
            Ok((params, json!({ "soundness": report, "total_bits": equal.total_bits }), ok))
        }
    }
}

fn cmd_host(cli: &Cli, graph: &str, m: usize) -> CmdResult {
    let h = resolve_graph(graph).map_err(err)?;
    let numbering = ear_numbering(&ear_decomposition(&h).map_err(err)?);
    let x = exact_max_set(m, h.k().max(2)).map_err(err)?;
    let f = build_host(&h, &numbering, m, &x).map_err(err)?;
    let start = Instant::now();
    let verdict = verify_faithful(&f, cli.budget.unwrap_or(DEFAULT_VERIFY_NODES)).map_err(err)?;
    let stats = HostStats {
        k: f.k(),
        m,
        x_size: x.len(),
        copies: f.copy_count(),
        edges: f.edges().count(),
        faithful: verdict.faithful,
        special_copies: verdict.special_copies,
        verify_time_ms: start.elapsed().as_secs_f64() * 1000.0,
    };
    let result = json!({ "stats": stats, "x": x.elements, "rogue": verdict.rogue });
    Ok((json!({ "graph": graph, "m": m }), result, verdict.faithful))
}

fn cmd_behrend(cli: &Cli, m: usize, k: usize, method: SetMethod) -> CmdResult {
    let x = match method {
        SetMethod::Exact => exact_max_set(m, k),
        SetMethod::Sphere => sphere_construction(m, k),
        SetMethod::Greedy => greedy_set(m, k),
        SetMethod::Densest => densest_set(m, k),
    }
    .map_err(err)?;
    let mode = match cli.budget {
        Some(b) => VerifyMode::Exhaustive { budget: b as usize },
        None => VerifyMode::default(),
    };
    let verdict = verify_no_nontrivial(&x, mode).map_err(err)?;
    let ok = verdict == Verdict::Valid;
    let result = json!({ "set": x, "size": x.len(), "verdict": verdict, "density": density_report(&x) });
    Ok((json!({ "m": m, "k": k, "method": method }), result, ok))
}

fn cmd_audit_linear(cli: &Cli, k: usize, n: usize, forms: &str) -> CmdResult {
    let p = if let Some(count) = forms.strip_prefix("random:") {
        let count: usize = count.parse().map_err(|_| format!("bad form count {count:?}"))?;
        LinearProtocol::random(k, n, count, cli.seed)
    } else if let Some(graph) = forms.strip_prefix("tree:") {
        let g = resolve_graph(graph).map_err(err)?;
        if g.k() != k {
            return Err(format!("tree graph has {} vertices, expected {k}", g.k()));
        }
        LinearProtocol::tree(&g, n)
    } else {
        let text = std::fs::read_to_string(forms).map_err(|e| format!("{forms}: {e}"))?;
        LinearProtocol::parse(k, n, &text)
    }
    .map_err(err)?;
    let witness = attack(&p);
    let verified = witness.as_ref().is_some_and(|w| verify_witness(&p, w));
    let short = p.forms().len() < k.saturating_sub(1) * n;
    let ok = !short || verified;
    let result = json!({
        "forms": p.forms().len(),
        "threshold": k.saturating_sub(1) * n,
        "kernel_dimension": p.kernel_dimension(),
        "witness": witness.as_ref().map_or(json!("none"), to_value),
        "verified": verified,
    });
    Ok((json!({ "k": k, "n": n, "forms": forms }), result, ok))
}

fn render_pretty(record: &RunRecord) -> String {
    let mut out = format!("{} ({:.1} ms, v{})\n", record.command, record.duration_ms, record.version);
    let mut rows = Vec::new();
    flatten("", &record.result, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        out.push_str(&format!("  {k:<width$}  {v}\n"));
    }
    out
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) if !map.is_empty() => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

/// Parses arguments, runs the command and returns the process exit code:
/// 0 on success, 1 when a checked property failed, 2 on error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            if cli.pretty {
                print!("{}", render_pretty(&outcome.record));
            } else {
                println!("{}", serde_json::to_string(&outcome.record).expect("records serialize"));
            }
            if outcome.ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e }));
            2
        }
    }
}
