//! Command-line front end for tree automaton reduction: validation, stats,
//! reduction with certified methods or forced pruning, relation dumps,
//! language-equality checks, random generation, and density-sweep benchmarks.
//!
//! Exit codes: 0 on success, 1 for semantic negatives and data errors
//! (languages differ, unreadable input), 2 for usage errors. Diagnostics go
//! to standard error; payloads go to standard output or the `-o` file.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;
use ta_reduce::oracle::exact_language_equiv;
use ta_reduce::relation::Relation;
use ta_reduce::simulation::{combined_preorder, downward_simulation, upward_simulation};
use ta_reduce::{
    build_prune_order, experiment, generate, parse_timbuk, prune, realize, realize_base,
    reduce_with_report, serialize_timbuk, write_csv, BenchError, ExperimentConfig, ExperimentRow,
    Method, PassRecord, ReduceError, ReductionReport, RelationSpec, TdGrid, TreeAutomaton,
    TvParams,
};

#[derive(Parser)]
#[command(
    name = "treereduce",
    version,
    about = "Reduce nondeterministic top-down tree automata while preserving their language"
)]
struct Cli {
    /// Suppress informational messages on standard error.
    #[arg(long, global = true)]
    quiet: bool,

    /// Emit machine-readable JSON payloads where applicable.
    #[arg(long, global = true)]
    json: bool,

    /// Seed for the randomized subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a Timbuk file and check every structural invariant.
    Validate { file: PathBuf },

    /// Print size statistics for an automaton.
    Stats { file: PathBuf },

    /// Reduce an automaton with a certified method or a forced prune.
    Reduce {
        file: PathBuf,

        /// ru | ruq | ruqp | heavy (heavy takes --la-dw/--la-up, or use heavy:X:Y).
        #[arg(long)]
        method: Option<String>,

        /// Downward lookahead depth for heavy.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        la_dw: Option<u32>,

        /// Upward lookahead depth for heavy.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        la_up: Option<u32>,

        /// Prune with an uncertified relation pair "U,D"; the output
        /// language may shrink.
        #[arg(long, value_name = "U,D", conflicts_with = "method")]
        force_prune: Option<String>,

        /// Write the reduced automaton here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,

        /// Write the JSON pass report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },

    /// Dump a relation as sorted "p <= q" lines.
    Relation {
        file: PathBuf,

        /// id | dw-sim | dw-la:K | up-sim:IND | up-la:K:IND | combined
        /// (append "!" for the strict part).
        #[arg(long)]
        kind: String,
    },

    /// Decide language equality of two automata.
    Check {
        /// The two automata to compare.
        #[arg(long, num_args = 2, value_names = ["A", "B"], required = true)]
        equiv: Vec<PathBuf>,
    },

    /// Generate a random automaton in the Tabakov-Vardi style.
    Gen {
        /// Number of states.
        #[arg(long)]
        n: usize,

        /// Number of rank-2 symbols.
        #[arg(long)]
        s: usize,

        /// Transition density (transitions per symbol = round(n*td)).
        #[arg(long)]
        td: f64,

        /// Acceptance density (leaf rules = round(n*ad)).
        #[arg(long)]
        ad: f64,

        /// Number of initial states.
        #[arg(long, default_value_t = 1)]
        roots: usize,

        /// Write the automaton here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },

    /// Sweep transition density and compare reduction methods.
    Bench {
        /// Density sweep, e.g. td=1.0:6.0:0.5.
        #[arg(long)]
        grid: String,

        /// Number of states per sample.
        #[arg(long)]
        n: usize,

        /// Number of rank-2 symbols per sample.
        #[arg(long, default_value_t = 2)]
        s: usize,

        /// Acceptance density per sample.
        #[arg(long, default_value_t = 0.8)]
        ad: f64,

        /// Number of initial states per sample.
        #[arg(long, default_value_t = 1)]
        roots: usize,

        /// Samples per grid point.
        #[arg(long)]
        samples: usize,

        /// Comma-separated method tokens, e.g. ru,ruq,ruqp,heavy:1:1,heavy:2:4.
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<String>,

        /// Write the CSV here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let (quiet, json, seed) = (cli.quiet, cli.json, cli.seed);
    match cli.command {
        Command::Validate { file } => cmd_validate(&file, json, quiet),
        Command::Stats { file } => cmd_stats(&file, json),
        Command::Reduce {
            file,
            method,
            la_dw,
            la_up,
            force_prune,
            output,
            report,
        } => cmd_reduce(
            &file,
            method.as_deref(),
            la_dw,
            la_up,
            force_prune.as_deref(),
            output.as_deref(),
            report.as_deref(),
            json,
            quiet,
        ),
        Command::Relation { file, kind } => cmd_relation(&file, &kind, json),
        Command::Check { equiv } => cmd_check(&equiv[0], &equiv[1], json, quiet),
        Command::Gen {
            n,
            s,
            td,
            ad,
            roots,
            output,
        } => cmd_gen(
            TvParams {
                n,
                s,
                td,
                ad,
                seed,
                roots,
            },
            output.as_deref(),
        ),
        Command::Bench {
            grid,
            n,
            s,
            ad,
            roots,
            samples,
            methods,
            output,
        } => cmd_bench(
            &grid,
            TvParams {
                n,
                s,
                td: 0.0,
                ad,
                seed,
                roots,
            },
            samples,
            &methods,
            output.as_deref(),
            json,
            quiet,
        ),
    }
}

fn usage_error(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    2
}

fn load(path: &Path) -> Result<TreeAutomaton> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let automaton =
        parse_timbuk(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(automaton)
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_validate(file: &Path, json: bool, quiet: bool) -> Result<i32> {
    let a = load(file)?;
    let stats = a.stats();
    if json {
        println!(
            "{{\"ok\":true,\"name\":\"{}\",\"states\":{},\"transitions\":{}}}",
            json_escape(a.name()),
            stats.states,
            stats.transitions
        );
    } else if !quiet {
        println!(
            "ok: {}: {} states, {} transitions",
            a.name(),
            stats.states,
            stats.transitions
        );
    }
    Ok(0)
}

fn cmd_stats(file: &Path, json: bool) -> Result<i32> {
    let a = load(file)?;
    let stats = a.stats();
    if json {
        println!(
            "{{\"name\":\"{}\",\"states\":{},\"transitions\":{},\"leaf_rules\":{},\"avg_branching\":{:.4}}}",
            json_escape(a.name()),
            stats.states,
            stats.transitions,
            stats.leaf_rules,
            stats.avg_branching
        );
    } else {
        println!("name: {}", a.name());
        println!("states: {}", stats.states);
        println!("transitions: {}", stats.transitions);
        println!("leaf_rules: {}", stats.leaf_rules);
        println!("avg_branching: {:.4}", stats.avg_branching);
    }
    Ok(0)
}

fn resolve_method(
    token: Option<&str>,
    la_dw: Option<u32>,
    la_up: Option<u32>,
) -> Result<Method, String> {
    let Some(token) = token else {
        return Err("pass --method ru|ruq|ruqp|heavy or --force-prune U,D".to_string());
    };
    if token == "heavy" {
        return Ok(Method::Heavy {
            x: la_dw.unwrap_or(1),
            y: la_up.unwrap_or(1),
        });
    }
    let method = Method::parse_token(token)
        .map_err(|_| format!("unknown method {token:?}; expected ru, ruq, ruqp, or heavy"))?;
    if la_dw.is_some() || la_up.is_some() {
        return Err("--la-dw/--la-up apply only to --method heavy".to_string());
    }
    Ok(method)
}

#[allow(clippy::too_many_arguments)]
fn cmd_reduce(
    file: &Path,
    method: Option<&str>,
    la_dw: Option<u32>,
    la_up: Option<u32>,
    force_prune: Option<&str>,
    output: Option<&Path>,
    report_path: Option<&Path>,
    json: bool,
    quiet: bool,
) -> Result<i32> {
    if json && output.is_none() {
        return Ok(usage_error(
            "--json prints the report to standard output; pass -o FILE for the automaton",
        ));
    }
    let a = load(file)?;
    let (out, report) = if let Some(pair) = force_prune {
        match forced_prune(&a, pair, quiet)? {
            Ok(done) => done,
            Err(code) => return Ok(code),
        }
    } else {
        let method = match resolve_method(method, la_dw, la_up) {
            Ok(m) => m,
            Err(msg) => return Ok(usage_error(&msg)),
        };
        reduce_with_report(&a, method)?
    };
    emit(&serialize_timbuk(&out), output)?;
    if let Some(path) = report_path {
        fs::write(path, report_json(&report))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if json {
        print!("{}", report_json(&report));
    }
    if !quiet {
        eprintln!(
            "{}: {} -> {} states, {} -> {} transitions",
            report.method,
            report.states_before,
            report.states_after,
            report.transitions_before,
            report.transitions_after
        );
    }
    Ok(0)
}

/// Runs an uncertified prune. The outer error is an operational failure;
/// the inner `Err` carries a usage exit code.
fn forced_prune(
    a: &TreeAutomaton,
    pair: &str,
    quiet: bool,
) -> Result<std::result::Result<(TreeAutomaton, ReductionReport), i32>> {
    let Some((u_text, d_text)) = pair.split_once(',') else {
        return Ok(Err(usage_error(
            "--force-prune takes two relation tokens separated by a comma",
        )));
    };
    let u_spec = match RelationSpec::parse_token(u_text.trim()) {
        Ok(s) => s,
        Err(e) => return Ok(Err(usage_error(&format!("bad source-side token: {e}")))),
    };
    let d_spec = match RelationSpec::parse_token(d_text.trim()) {
        Ok(s) => s,
        Err(e) => return Ok(Err(usage_error(&format!("bad target-side token: {e}")))),
    };
    let started = Instant::now();
    let u = realize_base(a, &u_spec).map_err(ReduceError::from)?;
    let d = realize_base(a, &d_spec).map_err(ReduceError::from)?;
    let order = match build_prune_order(a, &u, &u_spec, &d, &d_spec, true) {
        Ok(order) => order,
        Err(e @ (ReduceError::BothStrict | ReduceError::BothNonstrict | ReduceError::Spec(_))) => {
            return Ok(Err(usage_error(&e.to_string())))
        }
        Err(e) => return Err(e.into()),
    };
    let mut pruned = prune(a, &order)?;
    let millis = started.elapsed().as_secs_f64() * 1e3;
    let label = format!("prune({u_spec}, {d_spec})");
    pruned.add_comment(&format!("forced {label}; the language may have shrunk"));
    if !quiet {
        eprintln!(
            "warning: forced pruning is not certified; the output may accept a strictly smaller language"
        );
    }
    let record = PassRecord {
        pass: label.clone(),
        states_before: a.n_states(),
        states_after: pruned.n_states(),
        transitions_before: a.rules().len(),
        transitions_after: pruned.rules().len(),
        millis,
    };
    let report = ReductionReport {
        method: format!("force-{label}"),
        states_before: record.states_before,
        states_after: record.states_after,
        transitions_before: record.transitions_before,
        transitions_after: record.transitions_after,
        passes: vec![record],
    };
    Ok(Ok((pruned, report)))
}

fn cmd_relation(file: &Path, kind: &str, json: bool) -> Result<i32> {
    let a = load(file)?;
    let rel: Relation = if kind == "combined" {
        let d = downward_simulation(&a);
        let u = upward_simulation(&a, &d);
        combined_preorder(&a, &d, &u)
    } else {
        let spec = match RelationSpec::parse_token(kind) {
            Ok(s) => s,
            Err(e) => return Ok(usage_error(&format!("bad relation kind {kind:?}: {e}"))),
        };
        match realize(&a, &spec) {
            Ok(r) => r,
            Err(e) => return Ok(usage_error(&e.to_string())),
        }
    };
    let psi = a.psi();
    let mut pairs: Vec<(String, String)> = rel
        .pairs()
        .filter(|&(p, q)| p != psi && q != psi)
        .map(|(p, q)| (a.state_name(p).to_string(), a.state_name(q).to_string()))
        .collect();
    pairs.sort();
    if json {
        let body: Vec<String> = pairs
            .iter()
            .map(|(p, q)| format!("[\"{}\",\"{}\"]", json_escape(p), json_escape(q)))
            .collect();
        println!(
            "{{\"kind\":\"{}\",\"pairs\":[{}]}}",
            json_escape(kind),
            body.join(",")
        );
    } else {
        for (p, q) in &pairs {
            println!("{p} <= {q}");
        }
    }
    Ok(0)
}

fn cmd_check(a_path: &Path, b_path: &Path, json: bool, quiet: bool) -> Result<i32> {
    let a = load(a_path)?;
    let b = load(b_path)?;
    match exact_language_equiv(&a, &b)? {
        None => {
            if json {
                println!("{{\"equal\":true}}");
            } else if !quiet {
                println!("equal");
            }
            Ok(0)
        }
        Some(witness) => {
            if json {
                println!(
                    "{{\"equal\":false,\"witness\":\"{}\"}}",
                    json_escape(&witness.to_string())
                );
            } else {
                println!("{witness}");
            }
            if !quiet {
                eprintln!("languages differ; the printed tree is accepted by exactly one side");
            }
            Ok(1)
        }
    }
}

fn cmd_gen(params: TvParams, output: Option<&Path>) -> Result<i32> {
    let a = match generate(&params) {
        Ok(a) => a,
        Err(e @ (BenchError::InvalidParams(_) | BenchError::Capacity { .. })) => {
            return Ok(usage_error(&e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    emit(&serialize_timbuk(&a), output)?;
    Ok(0)
}

fn cmd_bench(
    grid: &str,
    base: TvParams,
    samples: usize,
    methods: &[String],
    output: Option<&Path>,
    json: bool,
    quiet: bool,
) -> Result<i32> {
    let grid = match TdGrid::parse(grid) {
        Ok(g) => g,
        Err(e) => return Ok(usage_error(&e.to_string())),
    };
    let mut parsed = Vec::with_capacity(methods.len());
    for token in methods {
        match Method::parse_token(token) {
            Ok(m) => parsed.push(m),
            Err(_) => return Ok(usage_error(&format!("unknown method {token:?}"))),
        }
    }
    let config = ExperimentConfig {
        base,
        grid,
        methods: parsed,
        samples,
    };
    let rows = match experiment(&config) {
        Ok(rows) => rows,
        Err(e @ (BenchError::InvalidParams(_) | BenchError::Capacity { .. })) => {
            return Ok(usage_error(&e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    let payload = if json { rows_json(&rows) } else { write_csv(&rows) };
    emit(&payload, output)?;
    if !quiet {
        eprintln!(
            "{} grid points, {} methods, {} samples each",
            config.grid.points().len(),
            config.methods.len(),
            samples
        );
    }
    Ok(0)
}

fn json_escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn report_json(report: &ReductionReport) -> String {
    let passes: Vec<String> = report
        .passes
        .iter()
        .map(|p| {
            format!(
                "{{\"pass\":\"{}\",\"states_before\":{},\"states_after\":{},\"transitions_before\":{},\"transitions_after\":{},\"millis\":{:.3}}}",
                json_escape(&p.pass),
                p.states_before,
                p.states_after,
                p.transitions_before,
                p.transitions_after,
                p.millis
            )
        })
        .collect();
    format!(
        "{{\"method\":\"{}\",\"states_before\":{},\"states_after\":{},\"transitions_before\":{},\"transitions_after\":{},\"passes\":[{}]}}\n",
        json_escape(&report.method),
        report.states_before,
        report.states_after,
        report.transitions_before,
        report.transitions_after,
        passes.join(",")
    )
}

fn rows_json(rows: &[ExperimentRow]) -> String {
    let body: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{{\"td\":{:.2},\"method\":\"{}\",\"mean_states\":{:.4},\"mean_transitions\":{:.4},\"mean_ms\":{:.3},\"samples\":{}}}",
                r.td,
                json_escape(&r.method),
                r.mean_states,
                r.mean_transitions,
                r.mean_ms,
                r.samples
            )
        })
        .collect();
    format!("[{}]\n", body.join(","))
}
