use std::path::PathBuf;

use sysgame::cli::dispatch;
use sysgame::wire::{parse_script, TraceLog};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn sysgame(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sysgame").chain(args.iter().copied());
    let code = dispatch(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn attack_demo_prints_six_steps() {
    let (code, out, _) = sysgame(&["attack-demo"]);
    assert_eq!(code, 0);
    let labels: Vec<&str> = out.lines().filter(|l| l.contains("->")).map(str::trim).collect();
    assert_eq!(
        labels,
        ["S->P call f0 (), k0", "P->S call f1 (), k1", "S->P ret l5, k1", "P->S ret l4, k0", "S->P ret l4, k1", "P->S ret l3, k0"]
    );
    assert!(out.trim_end().ends_with("disclosed: {l3}"));
}

#[test]
fn parse_summarizes_prot() {
    let (code, out, _) = sysgame(&["parse", &fixture("prot.slc")]);
    assert_eq!(code, 0);
    assert!(out.contains("exports   prot=f0"));
    assert!(out.contains("imports   read=f1"));
    let (code, out, _) = sysgame(&["parse", &fixture("prot.slc"), "--format", "jsonl"]);
    assert_eq!(code, 0);
    let j: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(j["functions"]["f0"]["arity"], 0);
}

#[test]
fn bisim_exit_codes() {
    assert_eq!(sysgame(&["bisim", &fixture("eq1.slc"), &fixture("eq3.slc"), "--depth", "6"]).0, 0);
    let (code, out, _) = sysgame(&["bisim", &fixture("prot.slc"), &fixture("prot_variant.slc"), "--depth", "6"]);
    assert_eq!(code, 1, "{out}");
    assert_eq!(sysgame(&["bisim", &fixture("prot.slc"), &fixture("fg_m2.slc")]).0, 2);
}

#[test]
fn bisim_witness_replays_as_a_script() {
    let w = std::env::temp_dir().join(format!("sysgame-witness-{}.jsonl", std::process::id()));
    let w = w.display().to_string();
    let (code, _, _) = sysgame(&["bisim", &fixture("prot.slc"), &fixture("prot_variant.slc"), "--witness", &w]);
    assert_eq!(code, 1);
    let written = std::fs::read_to_string(&w).unwrap();
    assert_eq!(parse_script(&written).unwrap().len(), 3);
    let (code, out, _) = sysgame(&["trace", &fixture("prot.slc"), "--script", &w, "--format", "jsonl"]);
    assert_eq!(code, 0);
    assert_eq!(out, written);
    std::fs::remove_file(&w).unwrap();
}

#[test]
fn trace_of_the_bundled_script() {
    let (code, out, _) = sysgame(&["trace", &fixture("prot.slc"), "--script", &fixture("attack.jsonl"), "--format", "jsonl"]);
    assert_eq!(code, 0);
    let log = TraceLog::parse_jsonl(&out).unwrap();
    assert_eq!(log.labels.len(), 6);
    assert_eq!(log.format(sysgame::wire::TraceStyle::Jsonl), out);
    // text: one label line plus one store line per label
    let (_, text, _) = sysgame(&["trace", &fixture("prot.slc"), "--script", &fixture("attack.jsonl")]);
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn run_calls_by_identifier() {
    let (code, out, _) = sysgame(&["run", &fixture("fg_m2.slc"), "--call", "g"]);
    assert_eq!(code, 0);
    assert!(out.contains("P->S ret 0, k0"), "{out}");
    let (code, _, err) = sysgame(&["run", &fixture("fg_m2.slc"), "--call", "nope"]);
    assert_eq!(code, 65, "{err}");
}

#[test]
fn compose_check_reports_json() {
    let (code, out, _) =
        sysgame(&["compose", &fixture("fg_m1.slc"), &fixture("fg_m2.slc"), "--check", "--format", "jsonl", "--jobs", "2"]);
    assert_eq!(code, 0);
    let j: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(j["holds"], true);
    assert_eq!(j["bisim"]["verdict"], "bisimilar");
    assert!(j["lemma"]["shared_covered"]["checked"].as_u64().unwrap() > 0);
}

#[test]
fn error_exit_codes() {
    assert_eq!(sysgame(&["frobnicate"]).0, 64);
    assert_eq!(sysgame(&["explore", &fixture("prot.slc"), "--depth", "x"]).0, 64);
    assert_eq!(sysgame(&["parse", "/nonexistent/file.slc"]).0, 66);
    let bad = std::env::temp_dir().join(format!("sysgame-bad-{}.slc", std::process::id()));
    std::fs::write(&bad, "export f; decl f( {").unwrap();
    let (code, _, err) = sysgame(&["parse", &bad.display().to_string()]);
    assert_eq!(code, 65);
    assert!(err.contains("syntax error"), "{err}");
    std::fs::remove_file(&bad).unwrap();
    let (code, out, _) = sysgame(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("attack-demo"));
}

#[test]
fn explore_output_is_deterministic() {
    let f = fixture("eq1.slc");
    let args = ["explore", f.as_str(), "--depth", "4", "--format", "jsonl"];
    let (code, a, _) = sysgame(&args);
    assert_eq!(code, 0);
    let (_, b, _) = sysgame(&args);
    assert_eq!(a, b);
    let head: serde_json::Value = serde_json::from_str(a.lines().next().unwrap()).unwrap();
    assert_eq!(head["truncated"], false);
}
