use std::path::Path;
use std::process::{Command, Output};

use scmgen::experiment::{opposing_graph, opposing_svar, ExperimentReport};
use scmgen::io::{self, ScmJson, SortabilityReport, SvarJson, TsGraphJson};
use scmgen_core::scm::analytic_moments;

fn scmgen(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scmgen"))
        .args(args)
        .current_dir(dir)
        .env_remove("SCMGEN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = scmgen(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = scmgen(dir, args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn graph_generation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-graph", "--nodes", "20", "--edge-prob", "0.5", "--seed", "7", "--out", "a.json"]);
    ok(d, &["gen-graph", "--nodes", "20", "--edge-prob", "0.5", "--seed", "7", "--out", "b.json"]);
    ok(d, &["gen-graph", "--nodes", "20", "--edge-prob", "0.5", "--seed", "8", "--out", "c.json"]);
    let read = |f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_ne!(read("a.json"), read("c.json"));
    assert_eq!(io::read_dag(&d.join("a.json")).unwrap().n(), 20);
}

#[test]
fn uumc_model_from_the_cli_is_unitless() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-graph", "--nodes", "10", "--edge-prob", "0.4", "--seed", "1", "--out", "g.json"]);
    ok(d, &["gen-scm", "--graph", "g.json", "--method", "uumc", "--seed", "1", "--out", "m.json"]);
    let m: ScmJson = io::read_json(&d.join("m.json")).unwrap();
    let (var, _) = analytic_moments(&m.to_scm().unwrap()).unwrap();
    assert!(var.iter().all(|v| (v - 1.0).abs() < 1e-10));
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_scmgen"))
        .args(["gen-graph", "--nodes", "3", "--edge-prob", "0.5", "--seed", "1"])
        .current_dir(dir.path())
        .env("SCMGEN_OUT_DIR", dir.path().join("outputs"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("outputs/graph.json").exists());
}

#[test]
fn simulate_then_score_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-graph", "--nodes", "8", "--edge-prob", "0.5", "--seed", "2", "--out", "g.json"]);
    ok(d, &["gen-scm", "--graph", "g.json", "--method", "uvn", "--seed", "2", "--out", "m.json"]);
    ok(d, &["simulate", "--model", "m.json", "--graph", "g.json", "--samples", "2000", "--seed", "3", "--out", "d.csv"]);
    ok(d, &["simulate", "--model", "m.json", "--samples", "2000", "--seed", "3", "--standardize", "--out", "s.csv"]);
    ok(d, &["sortability", "--data", "d.csv", "--graph", "g.json", "--metric", "var", "--out", "raw.json"]);
    ok(d, &["sortability", "--data", "s.csv", "--graph", "g.json", "--metric", "var", "--out", "std.json"]);
    let raw: SortabilityReport = io::read_json(&d.join("raw.json")).unwrap();
    let st: SortabilityReport = io::read_json(&d.join("std.json")).unwrap();
    assert_eq!(raw.metric, "var");
    assert!(raw.score > 0.75, "{}", raw.score);
    assert!((st.score - 0.5).abs() < 0.35, "{}", st.score);
    for v in &st.values {
        assert!((v - 1.0).abs() < 1e-9);
    }

    // Without --out the report goes to stdout.
    let text = ok(d, &["sortability", "--data", "d.csv", "--graph", "g.json", "--metric", "r2"]);
    let r2: SortabilityReport = serde_json::from_str(&text).unwrap();
    assert_eq!(r2.values.len(), 8);
    assert!(r2.values.iter().all(|v| (-1e-9..=1.0).contains(v)));
}

#[test]
fn sample_coupled_models_ship_their_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-graph", "--nodes", "5", "--edge-prob", "0.5", "--seed", "4", "--out", "g.json"]);
    let (c, err) = code(d, &["gen-scm", "--graph", "g.json", "--method", "iscm", "--seed", "4", "--out", "m.json"]);
    assert_eq!(c, 2, "{err}");
    ok(d, &[
        "gen-scm", "--graph", "g.json", "--method", "iscm", "--samples", "300", "--emit-data", "d.csv", "--seed", "4",
        "--out", "m.json",
    ]);
    let (c, err) = code(d, &["simulate", "--model", "m.json", "--samples", "10", "--seed", "1", "--out", "x.csv"]);
    assert_eq!(c, 2);
    assert!(err.contains("emit-data"), "{err}");
    ok(d, &["sortability", "--data", "d.csv", "--graph", "g.json", "--metric", "r2", "--out", "r.json"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Validation.
    assert_eq!(code(d, &["gen-graph", "--nodes", "5", "--edge-prob", "1.5", "--seed", "1"]).0, 2);
    assert_eq!(code(d, &["gen-graph", "--nodes", "5", "--edge-prob", "0.5"]).0, 2);
    // Missing input file.
    assert_eq!(code(d, &["gen-scm", "--graph", "nope.json", "--method", "uumc", "--seed", "1"]).0, 4);
    // Malformed input file.
    std::fs::write(d.join("bad.json"), "{not json").unwrap();
    assert_eq!(code(d, &["gen-scm", "--graph", "bad.json", "--method", "uumc", "--seed", "1"]).0, 2);

    // Dimension mismatch between data and graph.
    ok(d, &["gen-graph", "--nodes", "4", "--edge-prob", "0.5", "--seed", "1", "--out", "g4.json"]);
    ok(d, &["gen-graph", "--nodes", "3", "--edge-prob", "0.5", "--seed", "1", "--out", "g3.json"]);
    ok(d, &["gen-scm", "--graph", "g4.json", "--method", "uumc", "--seed", "1", "--out", "m4.json"]);
    ok(d, &["simulate", "--model", "m4.json", "--samples", "50", "--seed", "1", "--out", "d4.csv"]);
    let (c, err) = code(d, &["sortability", "--data", "d4.csv", "--graph", "g3.json", "--metric", "var"]);
    assert_eq!(c, 2);
    assert!(err.contains("columns"), "{err}");

    // Model edges missing from the graph.
    std::fs::write(d.join("empty.json"), r#"{"n": 4, "edges": []}"#).unwrap();
    let m: ScmJson = io::read_json(&d.join("m4.json")).unwrap();
    if m.weights.iter().flatten().any(|w| *w != 0.0) {
        let args = ["simulate", "--model", "m4.json", "--graph", "empty.json", "--samples", "5", "--seed", "1"];
        assert_eq!(code(d, &args).0, 2);
    }

    // Time-series metric without its lag window.
    assert_eq!(code(d, &["sortability", "--data", "d4.csv", "--graph", "g4.json", "--metric", "r2ts"]).0, 2);
    assert_eq!(code(d, &["sortability", "--data", "d4.csv", "--graph", "g4.json", "--metric", "bogus"]).0, 2);
}

#[test]
fn svar_generation_fails_with_generation_code_or_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Dense graph with strong persistence is prone to instability.
    ok(d, &[
        "gen-graph", "--nodes", "6", "--tau-max", "3", "--p-cross", "0.9", "--p-auto", "1.0", "--seed", "3", "--out",
        "tg.json",
    ]);
    let mut seen = [0; 2];
    for seed in 0..6 {
        let s = seed.to_string();
        let (c, err) = code(d, &["gen-svar", "--graph", "tg.json", "--seed", &s, "--out", "s.json"]);
        match c {
            0 => {
                let m: SvarJson = io::read_json(&d.join("s.json")).unwrap();
                assert!(m.spectral_radius < 1.0);
                seen[0] += 1;
            }
            3 => {
                assert!(err.contains("radius"), "{err}");
                seen[1] += 1;
            }
            other => panic!("unexpected exit {other}: {err}"),
        }
    }
    assert_eq!(seen[0] + seen[1], 6);
}

#[test]
fn svar_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &[
        "gen-graph", "--nodes", "4", "--tau-max", "1", "--p-cross", "0.3", "--p-auto", "0.8", "--seed", "5", "--out",
        "tg.json",
    ]);
    ok(d, &["gen-svar", "--graph", "tg.json", "--seed", "5", "--out", "s.json"]);
    ok(d, &["simulate", "--model", "s.json", "--graph", "tg.json", "--t-len", "500", "--seed", "1", "--out", "a.csv"]);
    ok(d, &[
        "simulate", "--model", "s.json", "--t-len", "500", "--init", "burn-in", "--burn-in", "200", "--seed", "1",
        "--out", "b.csv",
    ]);
    for metric in ["var", "r2star", "r2ts"] {
        let text = ok(d, &["sortability", "--data", "a.csv", "--graph", "tg.json", "--metric", metric, "--tau-max", "1"]);
        let r: SortabilityReport = serde_json::from_str(&text).unwrap();
        assert!((0.0..=1.0).contains(&r.score));
    }
    // A static model file cannot be checked against a time-series graph.
    ok(d, &["gen-graph", "--nodes", "4", "--edge-prob", "0.5", "--seed", "1", "--out", "g.json"]);
    ok(d, &["gen-scm", "--graph", "g.json", "--method", "uumc", "--seed", "1", "--out", "m.json"]);
    assert_eq!(code(d, &["simulate", "--model", "m.json", "--graph", "tg.json", "--samples", "5", "--seed", "1"]).0, 2);
}

#[test]
fn opposing_sortability_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    io::write_json(&d.join("s.json"), &SvarJson::new(&opposing_svar(), 0)).unwrap();
    io::write_json(&d.join("tg.json"), &TsGraphJson::from(&opposing_graph())).unwrap();
    ok(d, &["simulate", "--model", "s.json", "--graph", "tg.json", "--t-len", "100000", "--seed", "12", "--out", "d.csv"]);
    let score = |metric: &str| {
        let text = ok(d, &["sortability", "--data", "d.csv", "--graph", "tg.json", "--metric", metric, "--tau-max", "1"]);
        serde_json::from_str::<SortabilityReport>(&text).unwrap().score
    };
    let (star, full) = (score("r2star"), score("r2ts"));
    assert!(star > 0.5 && full < 0.5, "R2* {star}, R2 {full}");
}

#[test]
fn experiment_reports_rerun_from_their_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &[
        "experiment", "sortability-dist", "--nodes", "6", "--probs", "0.3,0.5", "--methods", "uumc,uvn",
        "--replicates", "20", "--samples", "40", "--seed", "9", "--out", "a.json",
    ]);
    ok(d, &["experiment", "--config", "a.json", "--out", "b.json"]);
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
    let r: ExperimentReport = io::read_json(&d.join("a.json")).unwrap();
    assert_eq!(r.series.len(), 8);
    for s in &r.series {
        assert_eq!(s.histogram.iter().sum::<u64>() as usize + s.skipped, 20);
        assert!((0.0..=1.0).contains(&s.mean));
    }

    ok(d, &["experiment", "triples", "--replicates", "10", "--samples", "50", "--seed", "1", "--out", "t.json"]);
    let t: ExperimentReport = io::read_json(&d.join("t.json")).unwrap();
    assert_eq!(t.tallies.len(), 6);
    assert!(t.tallies.iter().all(|c| c.counts.iter().sum::<usize>() == 10));

    ok(d, &["experiment", "ts-pair", "--replicates", "5", "--t-len", "200", "--seed", "1", "--out", "p.json"]);
    let (c, _) = code(d, &["experiment", "hub", "--replicates", "0", "--seed", "1"]);
    assert_eq!(c, 2);
}
