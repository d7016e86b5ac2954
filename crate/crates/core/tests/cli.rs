//! Every subcommand on every corpus problem emits one JSON document that
//! validates against the bundled schema, with an exit code fixed by its status.

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

struct Case {
    file: &'static str,
    lambda: &'static str,
    v: &'static str,
}

const CORPUS: &[Case] = &[
    Case { file: "parabolic_pair.toml", lambda: "1,0", v: "1,0,0" },
    Case { file: "parabolic_pair_flipped.toml", lambda: "1,0", v: "1,0,0" },
    Case { file: "box_lcp.toml", lambda: "0", v: "1" },
    Case { file: "unconstrained.toml", lambda: "", v: "1,-1" },
];

fn problem(file: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems");
    root.join(file).to_string_lossy().into_owned()
}

fn schema() -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&doc).unwrap()
}

fn run(args: &[String]) -> (Value, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_mpec-cq")).args(args).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let doc: Value = serde_json::from_str(&text)
        .unwrap_or_else(|e| panic!("{args:?}: not one JSON document ({e}):\n{text}"));
    (doc, out.status.code().unwrap())
}

fn invocations(c: &Case) -> Vec<Vec<String>> {
    let p = problem(c.file);
    let quick = ["--json", "--budget", "8", "--depth", "6"];
    let mut all: Vec<Vec<&str>> = vec![
        vec!["validate"],
        vec!["analyze"],
        vec!["tangent-cone", "--v", c.v],
        vec!["tangent-cone", "--v", c.v, "--v-star", c.v],
        vec!["certify-mscq"],
        vec!["diagnose-mpcc", "--lambda", c.lambda],
        vec!["probe", "--v", c.v, "--v-star", c.v],
    ];
    for a in &mut all {
        a.extend(quick);
    }
    all.into_iter()
        .map(|a| {
            let mut a: Vec<String> = a.into_iter().map(String::from).collect();
            a.push(p.clone());
            a
        })
        .collect()
}

fn expected_code(cmd: &str, status: &str) -> Option<i32> {
    Some(match (cmd, status) {
        (_, "ERROR") => return None,
        (_, "HOLDS" | "FEASIBLE" | "ANALYZED" | "COMPUTED" | "MEMBER" | "RATIO_VANISHES") => 0,
        ("diagnose-mpcc", _) => return None,
        (_, "FAILS" | "INFEASIBLE" | "NO_MULTIPLIER" | "NOT_MEMBER" | "RATIO_BOUNDED_AWAY") => 1,
        (_, "UNKNOWN" | "INCONCLUSIVE") => 2,
        _ => panic!("unexpected status {status} for {cmd}"),
    })
}

#[test]
fn json_output_validates_on_the_corpus() {
    let v = schema();
    let mut failures = Vec::new();
    for c in CORPUS {
        for args in invocations(c) {
            let (doc, code) = run(&args);
            let errs: Vec<String> = v.iter_errors(&doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
            if !errs.is_empty() {
                failures.push(format!("{args:?}:\n  {}", errs.join("\n  ")));
            }
            assert_eq!(doc["exit_code"], code, "{args:?}: exit code disagrees with document");
            let status = doc["status"].as_str().unwrap();
            if let Some(want) = expected_code(&args[0], status) {
                assert_eq!(code, want, "{args:?}: status {status}");
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn errors_are_json_too() {
    let v = schema();
    let missing = vec!["validate".into(), "--json".into(), problem("no_such.toml")];
    let (doc, code) = run(&missing);
    assert!(v.is_valid(&doc), "{doc}");
    assert_eq!(code, 64);
    assert_eq!(doc["status"], "ERROR");

    let usage = vec!["tangent-cone".into(), "--json".into(), problem("box_lcp.toml")];
    let (doc, code) = run(&usage);
    assert!(v.is_valid(&doc), "{doc}");
    assert_eq!(code, 64);
}

#[test]
fn same_seed_same_document() {
    let args: Vec<String> = ["probe", "--json", "--budget", "8", "--v", "1", "--v-star", "1"]
        .into_iter()
        .map(String::from)
        .chain([problem("box_lcp.toml")])
        .collect();
    let (a, _) = run(&args);
    let (b, _) = run(&args);
    assert_eq!(a["report"], b["report"]);
}

#[test]
fn schema_rejects_malformed_documents() {
    let v = schema();
    let args: Vec<String> = ["certify-mscq", "--json"].into_iter().map(String::from).chain([problem("parabolic_pair.toml")]).collect();
    let (doc, _) = run(&args);
    assert!(v.is_valid(&doc));

    let mut bad = doc.clone();
    bad["report"]["status"] = "MAYBE".into();
    assert!(!v.is_valid(&bad));
    let mut bad = doc.clone();
    bad["error"] = serde_json::json!({"code": "X", "message": "y"});
    assert!(!v.is_valid(&bad));
    let mut bad = doc;
    bad.as_object_mut().unwrap().remove("exit_code");
    assert!(!v.is_valid(&bad));
}
