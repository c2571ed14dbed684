//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treereduce"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../ta-reduce/tests/data")
        .join(format!("{name}.tmb"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path_arg(path: &Path) -> String {
    path.to_str().expect("utf-8 path").to_string()
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

#[test]
fn validate_accepts_a_fixture_and_rejects_garbage() {
    let good = run(&["validate", &path_arg(&fixture("basic"))]);
    assert_eq!(code(&good), 0, "{}", stderr(&good));
    assert!(stdout(&good).starts_with("ok: basic: 6 states, 6 transitions"));

    let json = run(&["--json", "validate", &path_arg(&fixture("basic"))]);
    assert_eq!(code(&json), 0);
    assert_eq!(
        stdout(&json).trim_end(),
        "{\"ok\":true,\"name\":\"basic\",\"states\":6,\"transitions\":6}"
    );

    let dir = tempfile::tempdir().unwrap();
    let bad_path = dir.path().join("broken.tmb");
    std::fs::write(&bad_path, "this is not a timbuk file").unwrap();
    let bad = run(&["validate", &path_arg(&bad_path)]);
    assert_eq!(code(&bad), 1);
    assert!(stderr(&bad).contains("error"));
    assert!(stdout(&bad).is_empty());

    let missing = run(&["validate", "/nonexistent/nowhere.tmb"]);
    assert_eq!(code(&missing), 1);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&run(&["--definitely-not-a-flag"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&[])), 2);
    // Lookahead depths below one are rejected by flag validation.
    let zero = run(&[
        "reduce",
        &path_arg(&fixture("basic")),
        "--method",
        "heavy",
        "--la-dw",
        "0",
    ]);
    assert_eq!(code(&zero), 2);
}

#[test]
fn stats_prints_the_frozen_counts() {
    let text = run(&["stats", &path_arg(&fixture("basic"))]);
    assert_eq!(code(&text), 0);
    let body = stdout(&text);
    assert!(body.contains("name: basic\n"));
    assert!(body.contains("states: 6\n"));
    assert!(body.contains("transitions: 6\n"));
    assert!(body.contains("leaf_rules: 2\n"));
    assert!(body.contains("avg_branching: 1.2000\n"));

    let json = run(&["--json", "stats", &path_arg(&fixture("basic"))]);
    assert_eq!(
        stdout(&json).trim_end(),
        "{\"name\":\"basic\",\"states\":6,\"transitions\":6,\"leaf_rules\":2,\"avg_branching\":1.2000}"
    );
}

#[test]
fn reduce_writes_automaton_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out.tmb");
    let report_path = dir.path().join("report.json");
    let reduced = run(&[
        "reduce",
        &path_arg(&fixture("merge_gain")),
        "--method",
        "heavy",
        "--la-dw",
        "1",
        "--la-up",
        "1",
        "-o",
        &path_arg(&out_path),
        "--report",
        &path_arg(&report_path),
    ]);
    assert_eq!(code(&reduced), 0, "{}", stderr(&reduced));
    assert!(stderr(&reduced).contains("heavy:1:1: 6 -> 4 states"));

    let report = std::fs::read_to_string(&report_path).unwrap();
    assert!(report.starts_with("{\"method\":\"heavy:1:1\",\"states_before\":6,\"states_after\":4,"));
    assert!(report.contains("\"pass\":\"remove_useless\""));
    assert!(report.contains("\"pass\":\"quotient(dw-la:1)\""));

    let check = run(&["validate", &path_arg(&out_path)]);
    assert_eq!(code(&check), 0);
    assert!(stdout(&check).contains("4 states, 5 transitions"));

    // The reduced automaton keeps the language.
    let equal = run(&[
        "check",
        "--equiv",
        &path_arg(&fixture("merge_gain")),
        &path_arg(&out_path),
    ]);
    assert_eq!(code(&equal), 0);
    assert_eq!(stdout(&equal).trim_end(), "equal");
}

#[test]
fn reduce_streams_to_stdout_without_output_flag() {
    let reduced = run(&["--quiet", "reduce", &path_arg(&fixture("basic")), "--method", "ru"]);
    assert_eq!(code(&reduced), 0);
    assert!(stdout(&reduced).starts_with("Ops "));
    assert!(stderr(&reduced).is_empty());
}

#[test]
fn reduce_flag_combinations_are_checked() {
    let file = path_arg(&fixture("basic"));
    // No method and no forced pair.
    assert_eq!(code(&run(&["reduce", &file])), 2);
    // Unknown method token.
    assert_eq!(code(&run(&["reduce", &file, "--method", "fast"])), 2);
    // Lookahead flags on a baseline method.
    assert_eq!(
        code(&run(&["reduce", &file, "--method", "ru", "--la-dw", "2"])),
        2
    );
    // Method and forced prune are mutually exclusive (clap conflict).
    assert_eq!(
        code(&run(&[
            "reduce",
            &file,
            "--method",
            "ru",
            "--force-prune",
            "id,dw-sim!"
        ])),
        2
    );
    // Malformed forced pair: missing comma, bad token, bad parity.
    assert_eq!(code(&run(&["reduce", &file, "--force-prune", "id"])), 2);
    assert_eq!(
        code(&run(&["reduce", &file, "--force-prune", "id,what"])),
        2
    );
    assert_eq!(
        code(&run(&["reduce", &file, "--force-prune", "up-sim:id!,dw-sim!"])),
        2
    );
    // --json without -o would mix two payloads on standard output.
    assert_eq!(
        code(&run(&["--json", "reduce", &file, "--method", "ru"])),
        2
    );
}

#[test]
fn forced_pruning_warns_and_marks_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("pruned.tmb");
    let forced = run(&[
        "reduce",
        &path_arg(&fixture("single_prune")),
        "--force-prune",
        "id,dw-la:1!",
        "-o",
        &path_arg(&out_path),
    ]);
    assert_eq!(code(&forced), 0, "{}", stderr(&forced));
    assert!(stderr(&forced).contains("warning"));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("# forced prune(id, dw-la:1!); the language may have shrunk"));

    let stats = run(&["--json", "stats", &path_arg(&out_path)]);
    assert!(stdout(&stats).contains("\"transitions\":4"));
}

#[test]
fn check_finds_the_lost_witness_after_a_forced_prune() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("pruned.tmb");
    let forced = run(&[
        "--quiet",
        "reduce",
        &path_arg(&fixture("leaf_choice")),
        "--force-prune",
        "up-sim:(dwsim!)!,id",
        "-o",
        &path_arg(&out_path),
    ]);
    assert_eq!(code(&forced), 0, "{}", stderr(&forced));

    let check = run(&[
        "check",
        "--equiv",
        &path_arg(&fixture("leaf_choice")),
        &path_arg(&out_path),
    ]);
    assert_eq!(code(&check), 1);
    assert_eq!(stdout(&check).trim_end(), "a(c,d)");

    let json = run(&[
        "--json",
        "check",
        "--equiv",
        &path_arg(&fixture("leaf_choice")),
        &path_arg(&out_path),
    ]);
    assert_eq!(code(&json), 1);
    assert_eq!(
        stdout(&json).trim_end(),
        "{\"equal\":false,\"witness\":\"a(c,d)\"}"
    );
}

#[test]
fn relation_dumps_sorted_pairs() {
    let dump = run(&[
        "relation",
        &path_arg(&fixture("merge_gain")),
        "--kind",
        "dw-sim",
    ]);
    assert_eq!(code(&dump), 0);
    let body = stdout(&dump);
    let lines: Vec<&str> = body.trim_end().lines().collect();
    // Five reflexive pairs plus the two mutually similar pairs each way.
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[0], "i <= i");
    assert!(lines.contains(&"p <= q"));
    assert!(lines.contains(&"q <= p"));
    assert!(lines.contains(&"r <= s"));
    assert!(lines.contains(&"s <= r"));
    let sorted = {
        let mut copy = lines.clone();
        copy.sort();
        copy
    };
    assert_eq!(lines, sorted);

    let combined = run(&[
        "relation",
        &path_arg(&fixture("merge_gain")),
        "--kind",
        "combined",
    ]);
    assert_eq!(code(&combined), 0);
    assert!(stdout(&combined).contains("p <= q\n"));

    assert_eq!(
        code(&run(&[
            "relation",
            &path_arg(&fixture("merge_gain")),
            "--kind",
            "sideways"
        ])),
        2
    );
}

#[test]
fn gen_is_deterministic_and_checks_parameters() {
    let args = [
        "gen", "--n", "6", "--s", "2", "--td", "2.0", "--ad", "0.5", "--seed", "9",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(stdout(&first), stdout(&second));
    assert!(stdout(&first).starts_with("Ops "));

    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("random.tmb");
    let to_file = run(&[
        "gen", "--n", "6", "--s", "2", "--td", "2.0", "--ad", "0.5", "--seed", "9", "-o",
        &path_arg(&out_path),
    ]);
    assert_eq!(code(&to_file), 0);
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), stdout(&first));
    assert_eq!(code(&run(&["validate", &path_arg(&out_path)])), 0);

    let bad_ad = run(&[
        "gen", "--n", "6", "--s", "2", "--td", "2.0", "--ad", "1.5",
    ]);
    assert_eq!(code(&bad_ad), 2);
    let overfull = run(&["gen", "--n", "1", "--s", "1", "--td", "2.0", "--ad", "1.0"]);
    assert_eq!(code(&overfull), 2);
}

#[test]
fn bench_writes_the_csv_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("results.csv");
    let bench = run(&[
        "--seed",
        "5",
        "bench",
        "--grid",
        "td=1.0:2.0:1.0",
        "--n",
        "6",
        "--samples",
        "2",
        "--methods",
        "ru,heavy:1:1",
        "-o",
        &path_arg(&csv_path),
    ]);
    assert_eq!(code(&bench), 0, "{}", stderr(&bench));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.trim_end().lines().collect();
    assert_eq!(lines[0], "td,method,mean_states,mean_transitions,mean_ms,samples");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1.00,ru,"));
    assert!(lines[4].starts_with("2.00,heavy:1:1,"));

    assert_eq!(
        code(&run(&[
            "bench", "--grid", "td=oops", "--n", "6", "--samples", "1", "--methods", "ru"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "bench",
            "--grid",
            "td=1.0:2.0:1.0",
            "--n",
            "6",
            "--samples",
            "1",
            "--methods",
            "warp"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "bench",
            "--grid",
            "td=1.0:2.0:1.0",
            "--n",
            "6",
            "--samples",
            "0",
            "--methods",
            "ru"
        ])),
        2
    );
}
