use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hawkes_granger::model::{LinkFunction, SimulationSpec, ThetaVector};
use hawkes_granger::PatientPanel;
use hawkes_granger_cli::commands::{BootstrapArchive, FitReport, Truth};
use hawkes_granger_cli::export::GraphDocument;
use hawkes_granger_cli::manifest::Manifest;
use hawkes_granger::selection::SelectionTrace;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hawkes-granger"));
    c.env("RUST_LOG", "error");
    c
}

fn fixtures(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_spec(dir: &Path, spec: &SimulationSpec) -> PathBuf {
    let p = dir.join("spec.toml");
    std::fs::write(&p, toml::to_string(spec).unwrap()).unwrap();
    p
}

fn linear_spec() -> SimulationSpec {
    let mut spec = SimulationSpec::independent(2, 1, 500, 0.2, LinkFunction::linear());
    spec.nu = vec![0.2, 0.3];
    spec.alpha = vec![vec![0.3, 0.2], vec![0.5, 0.1]];
    spec
}

fn sigmoid_spec() -> SimulationSpec {
    let mut spec = SimulationSpec::independent(3, 1, 120, -1.0, LinkFunction::sigmoid(10.0));
    // lag-1 effect of node 0 on node 1 is 2.0 (decay rate 1)
    spec.alpha[1][0] = 2.0 * std::f64::consts::E;
    spec
}

#[test]
fn empty_directory_is_input_error() {
    let data = TempDir::new().unwrap();
    let out = TempDir::new().unwrap();
    let r = run(&["ingest", "--data", s(data.path()), "--out", s(out.path())]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn ingest_fixture_accounting() {
    let out = TempDir::new().unwrap();
    ok(&["ingest", "--data", s(&fixtures("cohort")), "--out", s(out.path())]);
    let panels: Vec<PatientPanel> = read(&out.path().join("panels.json"));
    assert_eq!(panels.len(), 3);
    // p001 loses its leading row with no vitals to carry forward
    let lens: Vec<usize> = panels.iter().map(PatientPanel::len).collect();
    assert_eq!(lens, vec![4, 4, 6]);
    let report = std::fs::read_to_string(out.path().join("ingest_report.txt")).unwrap();
    assert!(report.contains("p001.psv\tp001\tok\t5\t4"));
    assert!(report.contains("rows_before 15\trows_after 14"));
    let m: Manifest = read(&out.path().join("ingest.manifest.json"));
    assert_eq!(m.inputs.len(), 3);
    assert_eq!(m.config_sha256.len(), 64);
}

#[test]
fn subgroup_keeps_matching_patients() {
    let out = TempDir::new().unwrap();
    ok(&["ingest", "--data", s(&fixtures("cohort")), "--out", s(out.path()), "--sex", "0", "--min-age", "60"]);
    let panels: Vec<PatientPanel> = read(&out.path().join("panels.json"));
    let ids: Vec<&str> = panels.iter().map(|p| p.id.as_str()).collect();
    assert_eq!(ids, vec!["p001"]);
}

#[test]
fn unreadable_file_does_not_stop_the_run() {
    let out = TempDir::new().unwrap();
    ok(&["ingest", "--data", s(&fixtures("broken")), "--out", s(out.path())]);
    let panels: Vec<PatientPanel> = read(&out.path().join("panels.json"));
    assert_eq!(panels.len(), 1);
    let report = std::fs::read_to_string(out.path().join("ingest_report.txt")).unwrap();
    assert!(report.contains("bad.psv\tbad\terror"));
}

#[test]
fn missing_upstream_names_prior_command() {
    let out = TempDir::new().unwrap();
    let r = run(&["fit", "--out", s(out.path())]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("hawkes-granger ingest"));
    let r = run(&["blockmodel", "--out", s(out.path())]);
    assert!(String::from_utf8_lossy(&r.stderr).contains("hawkes-granger bootstrap"));
}

#[test]
fn unknown_export_format_is_usage_error() {
    let out = TempDir::new().unwrap();
    let r = run(&["export", "--format", "svg", "--out", s(out.path())]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn simulate_then_fit_within_error_bound() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let spec = write_spec(dir.path(), &linear_spec());
    ok(&["simulate", "--spec", s(&spec), "--patients", "8", "--seed", "3", "--out", s(&out)]);
    ok(&["fit", "--out", s(&out), "--link", "linear", "--tol", "1e-9", "--max-iter", "200000"]);
    let truth: Truth = read(&out.join("truth.json"));
    let fit: FitReport = read(&out.join("fit.json"));
    for (nf, t) in fit.nodes.iter().zip(&truth.thetas) {
        assert!(nf.converged, "node {} residual {}", nf.node, nf.residual);
        let err: f64 = nf.theta.flatten().iter().zip(t.flatten()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let bound = nf.bound.as_ref().expect("full-rank design").theta_error_bound;
        assert!(err <= bound, "node {}: error {err} above bound {bound}", nf.node);
    }
    let table = std::fs::read_to_string(out.join("coefficients.txt")).unwrap();
    assert!(table.starts_with("node\tfeature\tlag\tcoefficient\n"));
    assert_eq!(table.lines().count(), 1 + 2 * 3);
}

#[test]
fn fit_uses_selection_trace_subset() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let spec = write_spec(dir.path(), &sigmoid_spec());
    ok(&["simulate", "--spec", s(&spec), "--patients", "20", "--out", s(&out)]);
    ok(&["select", "--target", "y1", "--criterion", "auc", "--out", s(&out), "--max-iter", "2000"]);
    let trace_path = out.join("selection_y1.json");
    let trace: SelectionTrace = read(&trace_path);
    ok(&["fit", "--features", s(&trace_path), "--out", s(&out), "--max-iter", "2000"]);
    let fit: FitReport = read(&out.join("fit.json"));
    let mut expected = trace.initial_subset.clone();
    expected.extend(trace.steps.iter().map(|s| s.feature));
    assert_eq!(fit.nodes[1].features, expected);
    let mut sorted = expected.clone();
    sorted.sort();
    assert_eq!(fit.nodes[1].theta.layout.features(), sorted);
    // nodes without a trace keep every feature
    assert_eq!(fit.nodes[0].theta.layout.features().len(), 3);
}

#[test]
fn bootstrap_graph_respects_threshold() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let spec = write_spec(dir.path(), &sigmoid_spec());
    ok(&["simulate", "--spec", s(&spec), "--patients", "15", "--out", s(&out)]);
    ok(&["bootstrap", "--replicates", "40", "--threshold", "0.15", "--max-iter", "2000", "--out", s(&out)]);
    let boot: BootstrapArchive = read(&out.join("bootstrap.json"));
    let graph: GraphDocument = read(&out.join("graph.json"));
    assert!(graph.edges.iter().all(|e| e.weight.abs() > 0.15));
    let expected = boot.edges.iter().flatten().filter(|e| e.exists && e.weight.abs() > 0.15).count();
    assert_eq!(graph.edges.len(), expected);
    assert!(graph.edges.iter().any(|e| e.source == "y0" && e.target == "y1"), "{graph:?}");
    let dot = std::fs::read_to_string(out.join("graph.dot")).unwrap();
    assert_eq!(dot.matches("->").count(), graph.edges.len());

    ok(&["export", "--format", "json", "--out", s(&out)]);
    let exported: GraphDocument = read(&out.join("export.json"));
    assert_eq!(exported, graph);
    assert_eq!(exported.to_adjacency().unwrap(), graph.to_adjacency().unwrap());

    ok(&["blockmodel", "--k", "2", "--min-size", "4", "--out", s(&out)]);
    let text = std::fs::read_to_string(out.join("blockmodel.txt")).unwrap();
    assert!(text.contains("node\tblock"));
    ok(&["cluster", "--source", "graph", "--k", "2", "--out", s(&out)]);
}

#[test]
fn dot_export_of_single_negative_edge() {
    let dir = TempDir::new().unwrap();
    let doc = GraphDocument {
        nodes: vec!["a".into(), "b".into()],
        edges: vec![hawkes_granger_cli::export::GraphEdge {
            source: "a".into(),
            target: "b".into(),
            weight: -0.4,
            lower: Some(-0.6),
            upper: Some(-0.2),
            exists: true,
        }],
    };
    let input = dir.path().join("g.json");
    std::fs::write(&input, doc.to_json()).unwrap();
    let dot_path = dir.path().join("g.dot");
    ok(&["export", "--input", s(&input), "--format", "dot", "--output", s(&dot_path), "--out", s(dir.path())]);
    let dot = std::fs::read_to_string(dot_path).unwrap();
    assert_eq!(dot.matches("->").count(), 1);
    assert!(dot.contains("color=red") && dot.contains("style=dashed"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), &linear_spec());
    let files = ["panels.json", "truth.json", "fit.json", "coefficients.txt", "fit_graph.json"];
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        ok(&["simulate", "--spec", s(&spec), "--patients", "3", "--seed", "9", "--out", s(&out)]);
        ok(&["fit", "--link", "linear", "--out", s(&out)]);
        runs.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
    let truth: Truth = read(&dir.path().join("out0/truth.json"));
    let th: &ThetaVector = &truth.thetas[0];
    assert_eq!(th.nu, 0.2);
}

#[test]
fn ingest_then_cluster_abnormalities() {
    let out = TempDir::new().unwrap();
    ok(&["ingest", "--data", s(&fixtures("cohort")), "--out", s(out.path())]);
    ok(&["cluster", "--k", "3", "--linkage", "complete", "--out", s(out.path())]);
    let text = std::fs::read_to_string(out.path().join("dendrogram.txt")).unwrap();
    assert!(text.contains("cut\t3"));
    assert!(out.path().join("cluster.manifest.json").exists());
}

#[test]
fn config_file_and_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 4\n[model]\nlink = \"linear\"\n").unwrap();
    let spec = write_spec(dir.path(), &linear_spec());
    let out = dir.path().join("out");
    ok(&["simulate", "--config", s(&cfg), "--spec", s(&spec), "--out", s(&out)]);
    let truth: Truth = read(&out.join("truth.json"));
    assert_eq!(truth.seeds, vec![4]);
    std::fs::write(&cfg, "sede = 4\n").unwrap();
    let r = run(&["simulate", "--config", s(&cfg), "--spec", s(&spec), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn ci_intervals_contain_truth() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let spec = write_spec(dir.path(), &linear_spec());
    ok(&["simulate", "--spec", s(&spec), "--patients", "4", "--seed", "21", "--out", s(&out)]);
    ok(&["ci", "--target", "0", "--link", "linear", "--level", "0.9", "--out", s(&out)]);
    let report: hawkes_granger_cli::commands::CiReport = read(&out.join("ci_y0.json"));
    let truth: Truth = read(&out.join("truth.json"));
    let t = truth.thetas[0].flatten();
    assert_eq!(report.coefficients.len(), t.len());
    assert!(report.s > 1.0);
    for (c, v) in report.coefficients.iter().zip(t) {
        assert!(c.interval.lower <= v && v <= c.interval.upper, "{} {v} outside {:?}", c.column, c.interval);
    }
    let text = std::fs::read_to_string(out.join("ci_y0.txt")).unwrap();
    assert!(text.contains("column\testimate\tlower\tupper\tflag"));
}
