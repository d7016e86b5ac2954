//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if any fails.
//!
//! Runs with `cargo test --test acceptance` (no libtest harness, so the lines
//! are printed as they are decided).

mod common;

use std::time::Instant;

use mpec_cq::certify::{mscq_cascade, soscms_check, IneqSystem, Limits, Status};
use mpec_cq::exactmath::rational::{int, ints, rat};
use mpec_cq::exactmath::scalar::to_f64_vec;
use mpec_cq::lowerlevel::{critical_cone, graph_tangent_member, graph_tangent_slice};
use mpec_cq::model::{corpus, parse_expr, MpecProblem};
use mpec_cq::mpccdiag::{gcq_evidence, mpec_linearized_cone, GcqOptions};
use mpec_cq::oracle::{tangent_ratio_probe, ProbeOptions, ProbeVerdict};
use mpec_cq::polyhedra::Polyhedron;
use mpec_cq::Rational;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn problem_path() -> String {
    format!("{}/../../problems/parabolic_pair.toml", env!("CARGO_MANIFEST_DIR"))
}

fn cli(args: &[&str]) -> (i32, Value) {
    let mut buf = Vec::new();
    let mut argv = vec!["mpec-cq"];
    argv.extend_from_slice(args);
    argv.push("--json");
    let code = mpec_cq::cli::run(argv, &mut buf);
    (code, serde_json::from_slice(&buf).expect("one JSON document"))
}

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn strings(v: &[&str]) -> Value {
    json!(v)
}

fn c1_multiplier_analysis() -> Outcome {
    let (code, v) = cli(&["analyze", &problem_path()]);
    let ms = &v["report"]["multipliers"];
    check(code == 0, format!("exit {code}"))?;
    check(ms["y_star"] == strings(&["0", "0", "1"]), format!("y* = {}", ms["y_star"]))?;
    check(ms["polyhedron"]["eq"] == json!([["1", "1", "1"]]), format!("Λ eq rows {}", ms["polyhedron"]["eq"]))?;
    check(ms["extreme_points"] == json!([["1", "0"], ["0", "1"]]), format!("E = {}", ms["extreme_points"]))?;
    check(v["report"]["uniqueness"]["unique"] == json!(false), "uniqueness reported")?;
    Ok("Λ = {λ ≥ 0 : λ1 + λ2 = 1}, E = {(1,0), (0,1)}, not unique".into())
}

fn c2_mpcc_cq_failure() -> Outcome {
    let mut notes = Vec::new();
    for (lambda, nbranch) in [("1/2,1/2", 1usize), ("1,0", 2)] {
        let (code, v) = cli(&["diagnose-mpcc", &problem_path(), "--lambda", lambda]);
        check(code == 1, format!("λ̄ = {lambda}: exit {code}"))?;
        let br = v["report"]["mpcc_mfcq"]["branches"].as_array().cloned().unwrap_or_default();
        check(br.len() == nbranch, format!("λ̄ = {lambda}: {} branches", br.len()))?;
        check(br.iter().all(|b| b["status"] == "FAILS"), format!("λ̄ = {lambda}: a branch does not fail"))?;
        check(v["report"]["mpcc_licq"]["status"] == "FAILS", format!("λ̄ = {lambda}: LICQ not FAILS"))?;
        notes.push(format!("λ̄ = ({lambda}): {nbranch} branch(es) FAILS, LICQ FAILS"));
    }
    Ok(notes.join("; "))
}

fn c3_weak_stationarity() -> Outcome {
    let p = corpus::load("parabolic_pair");
    let f = p.f.as_ref().ok_or("bundled problem has no F")?;
    let expected = parse_expr("x1 - 3/2*y1 + x2 - 3/2*y2 - y3")
        .and_then(|e| e.to_poly(5, &|s| p.names().iter().position(|n| n == s)))
        .map_err(|e| e.to_string())?;
    check(*f == expected, "F differs from the criterion's objective")?;
    for lambda in ["1,0", "0,1", "7/10,3/10"] {
        let (_, v) = cli(&["diagnose-mpcc", &problem_path(), "--lambda", lambda]);
        check(v["report"]["W_stationarity"]["feasible"] == json!(false), format!("λ̄ = ({lambda}) is W-stationary"))?;
    }
    Ok("λ̄ ∈ {(1,0), (0,1), (7/10,3/10)} all W-infeasible".into())
}

fn c4_linearized_cone() -> Outcome {
    let p = corpus::load("parabolic_pair");
    let half = vec![rat(1, 2), rat(1, 2)];
    let lin = mpec_linearized_cone(&p, &half).map_err(|e| e.to_string())?;
    check(lin.set.pieces.len() == 1, format!("{} pieces", lin.set.pieces.len()))?;
    // (u1, u2, v1, v2, v3, μ1, μ2)
    let z = int(0);
    let row = |v: Vec<Rational>| (v, z.clone());
    let hand = Polyhedron::from_h(
        7,
        vec![row(ints(&[-2, -1, 0, 0, 0, 0, 0])), row(ints(&[-1, -2, 0, 0, 0, 0, 0]))],
        vec![
            row(vec![int(-1), int(0), rat(3, 2), int(0), int(0), int(0), int(0)]),
            row(vec![int(0), int(-1), int(0), rat(3, 2), int(0), int(0), int(0)]),
            row(ints(&[0, 0, 0, 0, 0, 1, 1])),
            row(ints(&[0, 0, 0, 0, 1, 0, 0])),
        ],
    )
    .map_err(|e| e.to_string())?;
    let piece = &lin.set.pieces[0];
    check(piece.rows_valid_on(&hand) && hand.rows_valid_on(piece), "H-rows not mutually valid")?;
    let (_, v) = cli(&["diagnose-mpcc", &problem_path(), "--lambda", "1/2,1/2"]);
    let pieces = v["report"]["linearized_cone"]["pieces"].as_array().map_or(0, Vec::len);
    check(pieces == 1, format!("CLI emits {pieces} pieces"))?;
    Ok("single piece equals the hand-derived system (mutual row validity)".into())
}

fn c5_gcq_gap_evidence() -> Outcome {
    let p = corpus::load("parabolic_pair");
    let half = vec![rat(1, 2), rat(1, 2)];
    let opts = GcqOptions::default();
    check(opts.probe.budget == 200 && opts.probe.seed == 0, "defaults changed")?;
    let d = ints(&[3, 0, 2, 0, 0, 0, 0]);
    let e = gcq_evidence(&p, &half, &d, &opts).map_err(|e| e.to_string())?;
    let min = e.table.ratio.iter().cloned().fold(f64::INFINITY, f64::min);
    check(e.table.ratio.len() == 4 && min >= 0.05, format!("ratios {:?}", e.table.ratio))?;
    let d2 = ints(&[3, 3, 2, 2, 0, 0, 0]);
    let e2 = gcq_evidence(&p, &half, &d2, &opts).map_err(|e| e.to_string())?;
    check(e2.table.final_ratio() < 1e-3, format!("tangent direction ratios {:?}", e2.table.ratio))?;
    Ok(format!("min ratio {min:.4} ≥ 0.05 along ((3,0),(2,0,0),(0,0)); final ratio {:.2e} < 1e-3 along ((3,3),(2,2,0),(0,0))", e2.table.final_ratio()))
}

fn c6_headline_certification() -> Outcome {
    let mut first: Option<Value> = None;
    for threads in 1..=8 {
        let t = threads.to_string();
        let (code, v) = cli(&["certify-mscq", &problem_path(), "--threads", &t]);
        check(code == 0, format!("--threads {t}: exit {code}"))?;
        let r = v["report"].clone();
        match &first {
            None => {
                check(r["status"] == "HOLDS", format!("status {}", r["status"]))?;
                let pre = r["prerequisites"].as_array().cloned().unwrap_or_default();
                let find = |name: &str| pre.iter().find(|x| x["name"] == name).cloned().unwrap_or(Value::Null);
                let (ll, ul, nd) = (find("lower_level_mscq"), find("upper_level_mscq"), find("nondegenerate_G"));
                check(ll["status"] == "HOLDS" && ll["method"] == "nnamcq", format!("lower level {ll}"))?;
                check(ul["status"] == "HOLDS" && ul["method"] == "linear", format!("upper level {ul}"))?;
                check(nd["status"] == "HOLDS", format!("non-degeneracy {nd}"))?;
                let ext = r["certificate"]["extreme_multipliers"].as_array().cloned().unwrap_or_default();
                check(ext.len() == 2 && ext.iter().all(|e| e["sign"] == "POSITIVE"), "Phase I not POSITIVE at both extreme points")?;
                first = Some(r);
            }
            Some(f) => check(*f == r, format!("report differs with --threads {t}"))?,
        }
    }
    Ok("HOLDS via Phase I at (1,0) and (0,1); prerequisites nnamcq/linear/nondeg; identical for --threads 1..8".into())
}

fn c7_tangent_cross_validation() -> Outcome {
    let p = corpus::load("parabolic_pair");
    let ys = ints(&[0, 0, 1]);
    let k = critical_cone(&p, &p.y, &ys, None).map_err(|e| e.to_string())?.cone;
    let dirs = [[1, 0], [0, 1], [1, 1], [2, -1], [-1, 3], [1, -1], [-2, -1], [3, 2], [0, -1], [-1, 0]];
    let mut members = Vec::new();
    let mut non_members = Vec::new();
    for (i, d) in dirs.iter().enumerate() {
        let v = ints(&[d[0], d[1], 0]);
        check(k.contains(&v), format!("{v:?} ∉ K"))?;
        let slice = graph_tangent_slice(&p, &p.y, &ys, &v).map_err(|e| e.to_string())?;
        let vr = slice.slice.vrep();
        let mut m = vr.vertices.first().cloned().ok_or("empty slice")?;
        if let Some(ray) = vr.rays.get(i % vr.rays.len().max(1)) {
            for (a, b) in m.iter_mut().zip(ray) {
                *a += b;
            }
        }
        let is = |vs: &[Rational]| graph_tangent_member(&p, &p.y, &ys, &v, vs).map(|t| t.member).unwrap_or(false);
        check(is(&m), format!("constructed member {m:?} rejected"))?;
        members.push((v.clone(), m.clone()));
        let offsets = [[0, 0, 1], [1, 0, 0], [0, 1, 0], [1, 1, 1], [0, 0, -1]];
        let nm = offsets
            .iter()
            .map(|o| m.iter().zip(o).map(|(a, b)| a + int(*b)).collect::<Vec<_>>())
            .find(|c| !is(c))
            .ok_or(format!("no non-member near {m:?}"))?;
        non_members.push((v, nm));
    }
    let opts = ProbeOptions::default();
    let mut worst_member = 0.0f64;
    let mut best_non = f64::INFINITY;
    for (v, vs) in &members {
        let r = tangent_ratio_probe(&p, &p.y, &ys, &to_f64_vec(v), &to_f64_vec(vs), &opts).map_err(|e| e.to_string())?;
        worst_member = worst_member.max(r.final_ratio());
        check(r.verdict == ProbeVerdict::RatioVanishes, format!("member ({v:?}, {vs:?}): {:?}", r.ratio))?;
    }
    for (v, vs) in &non_members {
        let r = tangent_ratio_probe(&p, &p.y, &ys, &to_f64_vec(v), &to_f64_vec(vs), &opts).map_err(|e| e.to_string())?;
        best_non = best_non.min(r.final_ratio());
        check(r.verdict != ProbeVerdict::RatioVanishes, format!("non-member ({v:?}, {vs:?}) vanishes: {:?}", r.ratio))?;
    }
    Ok(format!("10 members vanish (worst final ratio {worst_member:.1e}); 10 non-members do not (smallest {best_non:.3})"))
}

fn c8_soscms_sanity() -> Outcome {
    let sys = |exprs: &[&str], dim: usize| -> Result<IneqSystem, String> {
        let names: Vec<String> = (1..=dim).map(|i| format!("z{i}")).collect();
        let polys = exprs
            .iter()
            .map(|e| parse_expr(e).and_then(|x| x.to_poly(dim, &|v| names.iter().position(|w| w == v))))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        IneqSystem::new(polys, vec![int(0); dim]).map_err(|e| e.to_string())
    };
    let l = Limits::default();
    let a = soscms_check(&sys(&["-z1^2 - z2^2"], 2)?, &l).map_err(|e| e.to_string())?;
    check(a.status == Status::Holds, format!("−z1²−z2²: {}", a.status))?;
    let b = soscms_check(&sys(&["z1^2"], 1)?, &l).map_err(|e| e.to_string())?;
    check(b.status == Status::Fails, format!("z1²: {}", b.status))?;
    check(b.witness("lambda") == Some(&ints(&[1])[..]) && b.witness("w") == Some(&ints(&[1])[..]), "z1² witness")?;
    let pair = sys(&["z1", "-z1"], 2)?;
    let c = mscq_cascade(&pair, &l).map_err(|e| e.to_string())?;
    check(c.status == Status::Holds && c.method == "linear", format!("(z1, −z1) cascade: {} {}", c.status, c.method))?;
    let raw = soscms_check(&pair, &l).map_err(|e| e.to_string())?;
    check(raw.status == Status::Fails, format!("(z1, −z1) raw: {}", raw.status))?;
    Ok("−z1²−z2² HOLDS; z1² FAILS with (λ, w) = (1, 1); (z1, −z1) cascade HOLDS (linear), raw FAILS".into())
}

fn c9_property_suites() -> Outcome {
    common::polar_is_an_involution(100).map_err(|e| format!("polar: {e}"))?;
    common::lp_certificates_are_exact(200).map_err(|e| format!("LP: {e}"))?;
    common::lower_level_multiplier_invariants(50).map_err(|e| format!("lower level: {e}"))?;
    Ok("100 cones, 200 LPs, 50 lower levels × 20 directions: zero failures".into())
}

fn main() {
    // the bundled problem file is also what the library's corpus embeds
    let on_disk = std::fs::read_to_string(problem_path()).expect("bundled problem file");
    assert_eq!(mpec_cq::model::parse_problem(&on_disk).ok(), Some(corpus::load("parabolic_pair")));
    let _: &MpecProblem = &corpus::load("parabolic_pair");

    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("multiplier analysis", c1_multiplier_analysis),
        ("MPCC-MFCQ/LICQ failure", c2_mpcc_cq_failure),
        ("W-stationarity", c3_weak_stationarity),
        ("linearized-cone fidelity", c4_linearized_cone),
        ("GCQ-gap evidence", c5_gcq_gap_evidence),
        ("headline certification", c6_headline_certification),
        ("tangent-cone cross-validation", c7_tangent_cross_validation),
        ("SOSCMS sanity", c8_soscms_sanity),
        ("property suites", c9_property_suites),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {} ({name}): PASS [{secs:.1}s] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL [{secs:.1}s] {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
