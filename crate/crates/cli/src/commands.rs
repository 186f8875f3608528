//! One function per subcommand. Every command reads its inputs from files,
//! writes its outputs under the output directory and records a manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hawkes_granger::graph::{
    abnormality_correlation, correlation_to_distance, extract_adjacency, hierarchical_blockmodel, hierarchical_cluster,
    symmetrize, threshold_graph, BlockClustering, Dendrogram, LagAggregation,
};
use hawkes_granger::inference::{
    bootstrap_edges, calibrate_s, coordinate_intervals, sigmoid_linear_bounds, estimation_error_bound, BoundReport, CiResult,
    EdgeInterval, LinearEnvelope,
};
use hawkes_granger::ingest::{abnormality_indicators, build_panel, default_rules, parse_psv, FillReport, IngestConfig};
use hawkes_granger::model::{build_design_multi, simulate_panel, Feature, LinkKind, SimulationSpec, ThetaVector};
use hawkes_granger::selection::{forward_select, max_iter_scores, SelectionTrace};
use hawkes_granger::vi::{fit_node, FeasibleSet};
use hawkes_granger::PatientPanel;
use log::{info, warn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::export::{GraphDocument, GraphFormat};
use crate::manifest::write_manifest;

pub const PANELS_FILE: &str = "panels.json";
pub const ABNORMALITY_FILE: &str = "abnormality.json";
pub const FIT_FILE: &str = "fit.json";
pub const GRAPH_FILE: &str = "graph.json";

/// Tracks the files a command touched so the manifest can hash them.
pub struct Run<'a> {
    pub config: &'a RunConfig,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    pub fn new(config: &'a RunConfig) -> CliResult<Self> {
        let out = &config.output_dir;
        fs::create_dir_all(out).map_err(|e| CliError::write(out, e))?;
        Ok(Self { config, inputs: Vec::new(), outputs: Vec::new() })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    fn read_text(&mut self, path: &Path) -> CliResult<String> {
        let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        self.inputs.push(path.to_path_buf());
        Ok(text)
    }

    fn read_json<T: DeserializeOwned>(&mut self, path: &Path) -> CliResult<T> {
        let text = self.read_text(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("invalid JSON in {}: {e}", path.display())))
    }

    /// Reads an artifact produced by an earlier command.
    fn upstream<T: DeserializeOwned>(&mut self, path: Option<&Path>, default: &str, producer: &str) -> CliResult<T> {
        let path = path.map_or_else(|| self.out(default), Path::to_path_buf);
        if !path.exists() {
            return Err(CliError::Input(format!("{} not found; run `hawkes-granger {producer}` first", path.display())));
        }
        self.read_json(&path)
    }

    fn write(&mut self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.out(name);
        fs::write(&path, text).map_err(|e| CliError::write(&path, e))?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Compute(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }

    pub fn finish(mut self, command: &str) -> CliResult<()> {
        let cfg = self.config;
        self.write(&format!("{command}.config.toml"), &cfg.to_toml())?;
        write_manifest(&cfg.output_dir, command, &cfg.hash(), cfg.seed, &self.inputs, &self.outputs)?;
        Ok(())
    }
}

fn load_panels(run: &mut Run, path: Option<&Path>) -> CliResult<Vec<PatientPanel>> {
    let panels: Vec<PatientPanel> = run.upstream(path, PANELS_FILE, "ingest` or `hawkes-granger simulate")?;
    if panels.is_empty() {
        return Err(CliError::Input("panel archive holds no patients".into()));
    }
    for p in &panels {
        p.validate()?;
        if !p.same_vocabulary(&panels[0]) {
            return Err(CliError::Input(format!("panel {} has a different series vocabulary", p.id)));
        }
    }
    Ok(panels)
}

/// Node index from a number or a node label.
pub fn resolve_node(panel: &PatientPanel, key: &str) -> CliResult<usize> {
    if let Some(i) = panel.node_labels.iter().position(|l| l == key) {
        return Ok(i);
    }
    match key.parse::<usize>() {
        Ok(i) if i < panel.n_nodes() => Ok(i),
        _ => Err(CliError::Usage(format!("unknown node {key:?}; known nodes: {}", panel.node_labels.join(", ")))),
    }
}

fn feature_label(panel: &PatientPanel, f: Feature) -> String {
    match f {
        Feature::Static(j) => panel.static_labels[j].clone(),
        Feature::Exogenous(j) => panel.exo_labels[j].clone(),
        Feature::Node(j) => panel.node_labels[j].clone(),
    }
}

fn all_features(panel: &PatientPanel) -> Vec<Feature> {
    let mut f: Vec<Feature> = (0..panel.n_static()).map(Feature::Static).collect();
    f.extend((0..panel.n_exo()).map(Feature::Exogenous));
    f.extend((0..panel.n_nodes()).map(Feature::Node));
    f
}

fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbnormalityArchive {
    pub labels: Vec<String>,
    /// Indicators concatenated over the retained patients.
    pub series: Vec<Vec<f64>>,
}

pub fn ingest(config: &RunConfig, data: Option<&Path>) -> CliResult<()> {
    let dir = data
        .map(Path::to_path_buf)
        .or_else(|| config.data_dir.clone())
        .ok_or_else(|| CliError::Usage("no data directory given (--data or data_dir)".into()))?;
    let entries = fs::read_dir(&dir).map_err(|e| CliError::read(&dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("psv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Input(format!("no .psv files in {}", dir.display())));
    }

    let mut run = Run::new(config)?;
    let rules = default_rules();
    let ingest_cfg = IngestConfig::default();
    let mut panels = Vec::new();
    let mut abn = AbnormalityArchive { labels: Vec::new(), series: Vec::new() };
    let mut report = String::from("file\tpatient\tstatus\trows_before\trows_after\n");
    let (mut failed, mut excluded) = (0usize, 0usize);
    let mut total = FillReport::default();

    for path in &files {
        let id = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        let name = path.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        let parsed = run.read_text(path).and_then(|text| parse_psv(&id, &text).map_err(CliError::from));
        let record = match parsed {
            Ok(r) => r,
            Err(e) => {
                warn!("{name}: {e}");
                let _ = writeln!(report, "{name}\t{id}\terror: {e}\t-\t-");
                failed += 1;
                continue;
            }
        };
        if !config.subgroup.matches(&record) {
            let _ = writeln!(report, "{name}\t{id}\texcluded\t{}\t-", record.len());
            excluded += 1;
            continue;
        }
        match build_panel(&record, &rules, &ingest_cfg) {
            Ok((panel, fill)) => {
                let _ = writeln!(report, "{name}\t{id}\tok\t{}\t{}", fill.rows_before, fill.rows_after);
                total.rows_before += fill.rows_before;
                total.rows_after += fill.rows_after;
                let mut rec = record.clone();
                rec.derive_map();
                let (labels, series) = abnormality_indicators(&rec, &rules);
                if abn.labels.is_empty() {
                    abn.labels = labels;
                    abn.series = vec![Vec::new(); series.len()];
                }
                for (acc, s) in abn.series.iter_mut().zip(series) {
                    acc.extend(s);
                }
                panels.push(panel);
            }
            Err(e) => {
                warn!("{name}: {e}");
                let _ = writeln!(report, "{name}\t{id}\terror: {e}\t{}\t-", record.len());
                failed += 1;
            }
        }
    }
    if failed == files.len() {
        return Err(CliError::Input(format!("all {failed} files in {} failed to ingest", dir.display())));
    }
    let _ = writeln!(
        report,
        "# files {}\tretained {}\texcluded {excluded}\tfailed {failed}\trows_before {}\trows_after {}",
        files.len(),
        panels.len(),
        total.rows_before,
        total.rows_after
    );
    info!("ingested {} of {} patients", panels.len(), files.len());
    run.write_json(PANELS_FILE, &panels)?;
    run.write_json(ABNORMALITY_FILE, &abn)?;
    run.write("ingest_report.txt", &report)?;
    run.finish("ingest")
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Truth {
    pub spec: SimulationSpec,
    pub seeds: Vec<u64>,
    /// Lag-expanded true parameters per node.
    pub thetas: Vec<ThetaVector>,
}

pub fn simulate(config: &RunConfig, spec_path: &Path, patients: usize) -> CliResult<()> {
    if patients == 0 {
        return Err(CliError::Usage("--patients must be at least 1".into()));
    }
    let mut run = Run::new(config)?;
    let text = run.read_text(spec_path)?;
    let spec: SimulationSpec =
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid spec {}: {e}", spec_path.display())))?;
    spec.validate()?;
    let seeds: Vec<u64> = (0..patients as u64).map(|k| config.seed.wrapping_add(k)).collect();
    let mut panels = Vec::with_capacity(patients);
    for &s in &seeds {
        let out = simulate_panel(&spec, s)?;
        let clamped: usize = out.clamp_counts.iter().sum();
        if clamped > 0 {
            warn!("seed {s}: {clamped} predictors clamped into the link domain");
        }
        panels.push(out.panel);
    }
    let thetas = (0..spec.n_nodes).map(|i| spec.true_theta(i)).collect();
    run.write_json(PANELS_FILE, &panels)?;
    run.write_json("truth.json", &Truth { spec, seeds, thetas })?;
    run.finish("simulate")
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeFit {
    pub node: usize,
    pub label: String,
    /// Features in selection order.
    pub features: Vec<Feature>,
    pub theta: ThetaVector,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub bound: Option<BoundReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub d: usize,
    pub link: LinkKind,
    pub nodes: Vec<NodeFit>,
}

/// Per-node feature lists from selection trace files (initial subset, then
/// the selected order).
fn selection_features(run: &mut Run, files: &[PathBuf], panel: &PatientPanel) -> CliResult<Vec<Option<Vec<Feature>>>> {
    let mut out = vec![None; panel.n_nodes()];
    for f in files {
        let trace: SelectionTrace = run.read_json(f)?;
        if trace.target >= panel.n_nodes() {
            return Err(CliError::Input(format!("{}: target {} out of range", f.display(), trace.target)));
        }
        let mut order = trace.initial_subset.clone();
        order.extend(trace.steps.iter().map(|s| s.feature));
        if order.is_empty() {
            return Err(CliError::Input(format!("{}: selection trace has an empty subset", f.display())));
        }
        out[trace.target] = Some(order);
    }
    Ok(out)
}

fn coefficient_table(panel: &PatientPanel, fits: &[NodeFit], d: usize) -> String {
    let mut out = String::from("node\tfeature\tlag\tcoefficient\n");
    for nf in fits {
        let _ = writeln!(out, "{}\t(intercept)\t-\t{:.6}", nf.label, nf.theta.nu);
        for &f in &nf.features {
            let l = &nf.theta.layout;
            let flat = nf.theta.flatten();
            for lag in 1..=d {
                let col = match f {
                    Feature::Static(_) if lag > 1 => continue,
                    _ => l.column(f, lag),
                };
                if let Some(c) = col {
                    let lag_txt = if matches!(f, Feature::Static(_)) { "-".to_string() } else { lag.to_string() };
                    let _ = writeln!(out, "{}\t{}\t{lag_txt}\t{:.6}", nf.label, feature_label(panel, f), flat[c]);
                }
            }
        }
    }
    out
}

pub fn fit(config: &RunConfig, panels_path: Option<&Path>, feature_files: &[PathBuf], epsilon: Option<f64>) -> CliResult<()> {
    let mut run = Run::new(config)?;
    let panels = load_panels(&mut run, panels_path)?;
    let first = &panels[0];
    let subsets = selection_features(&mut run, feature_files, first)?;
    let link = config.link();
    let opts = config.solver();
    let eps = epsilon.unwrap_or(config.inference.epsilon);
    let d = config.model.d;
    let mut fits = Vec::with_capacity(first.n_nodes());
    for i in 0..first.n_nodes() {
        let features = subsets[i].clone().unwrap_or_else(|| all_features(first));
        let design = build_design_multi(&panels, i, d, Some(&features))?;
        let r = fit_node(&design, &link, &opts)?;
        if !r.converged {
            warn!("node {}: residual {:.3e} above tolerance after {} iterations", first.node_labels[i], r.residual, r.iterations);
        }
        let bound = match estimation_error_bound(&design, &link, eps) {
            Ok(b) => Some(b),
            Err(e) => {
                warn!("node {}: no error bound ({e})", first.node_labels[i]);
                None
            }
        };
        fits.push(NodeFit {
            node: i,
            label: first.node_labels[i].clone(),
            features,
            theta: r.theta_hat,
            residual: r.residual,
            iterations: r.iterations,
            converged: r.converged,
            bound,
        });
    }
    let models: Vec<ThetaVector> = fits.iter().map(|f| f.theta.clone()).collect();
    let adj = extract_adjacency(&models, first.node_labels.clone(), LagAggregation::Sum)?;
    run.write_json(FIT_FILE, &FitReport { d, link: config.model.link, nodes: fits.clone() })?;
    run.write("coefficients.txt", &coefficient_table(first, &fits, d))?;
    run.write("fit_graph.json", &GraphDocument::from_adjacency(&adj).to_json())?;
    run.finish("fit")
}

// ---------------------------------------------------------------- select

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxIterTuning {
    pub grid: Vec<usize>,
    pub scores: Vec<f64>,
    pub best: usize,
}

pub fn select(
    config: &RunConfig,
    panels_path: Option<&Path>,
    target: &str,
    initial: Option<&[String]>,
    tune: bool,
) -> CliResult<()> {
    let mut run = Run::new(config)?;
    let panels = load_panels(&mut run, panels_path)?;
    let first = panels[0].clone();
    let target = resolve_node(&first, target)?;
    let cv = config.cv();
    let candidates = all_features(&first);
    let initial: Option<Vec<Feature>> = initial
        .map(|names| {
            names
                .iter()
                .filter(|n| !n.is_empty())
                .map(|n| {
                    candidates
                        .iter()
                        .copied()
                        .find(|&f| feature_label(&first, f) == *n)
                        .ok_or_else(|| CliError::Usage(format!("unknown feature {n:?}")))
                })
                .collect()
        })
        .transpose()?;
    let trace = forward_select(&panels, target, &candidates, initial.as_deref(), &cv)?;
    let label = file_stem(&first.node_labels[target]);
    let mut text = trace.report(|f| feature_label(&first, f));
    if tune {
        let grid = cv.max_iter_grid.clone();
        let scores = max_iter_scores(&panels, target, &trace.final_subset, &grid, &cv)?;
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by_key(|&k| grid[k]);
        let best = order.iter().copied().fold(order[0], |b, k| if scores[k] > scores[b] { k } else { b });
        let _ = writeln!(text, "max_iter\tvalue");
        for &k in &order {
            let _ = writeln!(text, "{}\t{:.6}", grid[k], scores[k]);
        }
        let _ = writeln!(text, "best_max_iter\t{}", grid[best]);
        run.write_json(&format!("max_iter_{label}.json"), &MaxIterTuning { grid: grid.clone(), scores, best: grid[best] })?;
    }
    run.write_json(&format!("selection_{label}.json"), &trace)?;
    run.write(&format!("selection_{label}.txt"), &text)?;
    run.finish("select")
}

// ---------------------------------------------------------------- ci

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientInterval {
    pub column: String,
    pub estimate: f64,
    pub interval: CiResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CiReport {
    pub target: String,
    pub s: f64,
    pub nominal_level: f64,
    pub envelope: LinearEnvelope,
    pub coefficients: Vec<CoefficientInterval>,
}

pub fn ci(
    config: &RunConfig,
    panels_path: Option<&Path>,
    target: &str,
    feature_file: Option<&Path>,
    coordinate: Option<usize>,
) -> CliResult<()> {
    let mut run = Run::new(config)?;
    let panels = load_panels(&mut run, panels_path)?;
    let first = panels[0].clone();
    let target = resolve_node(&first, target)?;
    let features = match feature_file {
        Some(p) => selection_features(&mut run, &[p.to_path_buf()], &first)?[target]
            .clone()
            .ok_or_else(|| CliError::Input(format!("{} is a selection trace for a different node", p.display())))?,
        None => all_features(&first),
    };
    let link = config.link();
    let design = build_design_multi(&panels, target, config.model.d, Some(&features))?;
    let n = design.dim();
    if let Some(k) = coordinate {
        if k >= n {
            return Err(CliError::Usage(format!("coordinate {k} out of range (dimension {n})")));
        }
    }
    let s = match config.inference.s {
        Some(s) => s,
        None => calibrate_s(n, design.total(), config.inference.level)?,
    };
    let feasible = FeasibleSet::for_design(&design, &link, config.model.theta_max)?;
    let envelope = match link.kind {
        LinkKind::Linear => LinearEnvelope::identity(),
        LinkKind::Sigmoid => sigmoid_linear_bounds(link.bound),
    };
    let fit = fit_node(&design, &link, &config.solver())?;
    let estimate = fit.theta_hat.flatten();
    let columns = design.layout().column_labels(&first.node_labels, &first.exo_labels, &first.static_labels);
    let intervals = coordinate_intervals(&design, &feasible, s, &envelope)?;
    let keep: Vec<usize> = coordinate.map_or_else(|| (0..n).collect(), |k| vec![k]);
    let coefficients: Vec<CoefficientInterval> = keep
        .iter()
        .map(|&k| CoefficientInterval { column: columns[k].clone(), estimate: estimate[k], interval: intervals[k].clone() })
        .collect();
    let report = CiReport {
        target: first.node_labels[target].clone(),
        s,
        nominal_level: hawkes_granger::inference::nominal_level(s, n, design.total()),
        envelope,
        coefficients,
    };
    let mut text = format!("target\t{}\ns\t{:.6}\nnominal_level\t{:.6}\n", report.target, report.s, report.nominal_level);
    text.push_str("column\testimate\tlower\tupper\tflag\n");
    for c in &report.coefficients {
        let iv = &c.interval;
        let flag = if iv.infeasible { "infeasible" } else if iv.conservative { "conservative" } else { "" };
        let _ = writeln!(text, "{}\t{:.6}\t{:.6}\t{:.6}\t{flag}", c.column, c.estimate, iv.lower, iv.upper);
    }
    let label = file_stem(&report.target);
    // NaN bounds are not JSON numbers; serialize via the text report only
    let json_safe = report.coefficients.iter().all(|c| c.interval.lower.is_finite() && c.interval.upper.is_finite());
    if json_safe {
        run.write_json(&format!("ci_{label}.json"), &report)?;
    } else {
        warn!("some intervals are infeasible; ci_{label}.json omitted");
    }
    run.write(&format!("ci_{label}.txt"), &text)?;
    run.finish("ci")
}

// ---------------------------------------------------------------- bootstrap

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapArchive {
    pub labels: Vec<String>,
    pub level: f64,
    pub succeeded: usize,
    pub failed: usize,
    /// `edges[i][j]`: effect of node j on node i.
    pub edges: Vec<Vec<EdgeInterval>>,
}

pub fn bootstrap(config: &RunConfig, panels_path: Option<&Path>, feature_files: &[PathBuf]) -> CliResult<()> {
    let mut run = Run::new(config)?;
    let panels = load_panels(&mut run, panels_path)?;
    let first = panels[0].clone();
    let mut cfg = config.bootstrap();
    if !feature_files.is_empty() {
        let subsets = selection_features(&mut run, feature_files, &first)?;
        cfg.node_features =
            Some(subsets.into_iter().map(|s| s.unwrap_or_else(|| all_features(&first))).collect());
    }
    let result = bootstrap_edges(&panels, &cfg)?;
    if result.failed > 0 {
        warn!("{} of {} bootstrap replicates failed", result.failed, cfg.replicates);
    }
    let doc = GraphDocument::from_intervals(&result.edges, &first.node_labels, config.inference.threshold);
    run.write_json(
        "bootstrap.json",
        &BootstrapArchive {
            labels: first.node_labels.clone(),
            level: cfg.level,
            succeeded: result.succeeded,
            failed: result.failed,
            edges: result.edges,
        },
    )?;
    run.write(GRAPH_FILE, &doc.to_json())?;
    run.write("graph.dot", &doc.to_dot())?;
    run.finish("bootstrap")
}

// ---------------------------------------------------------------- cluster

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ClusterSource {
    Abnormality,
    Graph,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterReport {
    pub labels: Vec<String>,
    pub dendrogram: Dendrogram,
    pub k: usize,
    pub assignment: Vec<usize>,
}

pub fn cluster(config: &RunConfig, source: ClusterSource, input: Option<&Path>) -> CliResult<()> {
    let mut run = Run::new(config)?;
    let c = &config.clustering;
    let (labels, dist) = match source {
        ClusterSource::Abnormality => {
            let abn: AbnormalityArchive = run.upstream(input, ABNORMALITY_FILE, "ingest")?;
            let corr = abnormality_correlation(&abn.series)?;
            (abn.labels, correlation_to_distance(&corr, c.far_constant))
        }
        ClusterSource::Graph => {
            let doc: GraphDocument = run.upstream(input, GRAPH_FILE, "bootstrap")?;
            let adj = doc.to_adjacency()?;
            (adj.labels.clone(), correlation_to_distance(&symmetrize(&adj), c.far_constant))
        }
    };
    if c.k == 0 || c.k > labels.len() {
        return Err(CliError::Usage(format!("cannot cut {} items into {} clusters", labels.len(), c.k)));
    }
    let dendrogram = hierarchical_cluster(&dist, c.linkage)?;
    let assignment = dendrogram.cut(c.k);
    let mut text = dendrogram.to_text(&labels);
    let _ = writeln!(text, "cut\t{}", c.k);
    for (l, a) in labels.iter().zip(&assignment) {
        let _ = writeln!(text, "{l}\t{a}");
    }
    run.write_json("clusters.json", &ClusterReport { labels, dendrogram, k: c.k, assignment })?;
    run.write("dendrogram.txt", &text)?;
    run.finish("cluster")
}

// ---------------------------------------------------------------- blockmodel

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockReport {
    pub labels: Vec<String>,
    /// Leaf block per node; `None` for isolated nodes.
    pub blocks: Vec<Option<String>>,
    pub tree: BlockClustering,
}

pub fn blockmodel(config: &RunConfig, input: Option<&Path>, threshold: Option<f64>) -> CliResult<()> {
    let mut run = Run::new(config)?;
    let doc: GraphDocument = run.upstream(input, GRAPH_FILE, "bootstrap")?;
    let adj = threshold_graph(&doc.to_adjacency()?, threshold.unwrap_or(config.inference.threshold));
    let c = &config.clustering;
    let tree = hierarchical_blockmodel(&adj.weights, c.depth, c.k, c.min_size, config.seed)?;
    let blocks = tree.leaf_labels(adj.len());
    let mut text = tree.to_text(&adj.labels);
    let _ = writeln!(text, "node\tblock");
    for (l, b) in adj.labels.iter().zip(&blocks) {
        let _ = writeln!(text, "{l}\t{}", b.as_deref().unwrap_or("NA"));
    }
    run.write_json("blockmodel.json", &BlockReport { labels: adj.labels.clone(), blocks, tree })?;
    run.write("blockmodel.txt", &text)?;
    run.finish("blockmodel")
}

// ---------------------------------------------------------------- export

pub fn export(config: &RunConfig, input: Option<&Path>, format: GraphFormat, output: Option<&Path>) -> CliResult<()> {
    let mut run = Run::new(config)?;
    let doc: GraphDocument = run.upstream(input, GRAPH_FILE, "bootstrap")?;
    let rendered = doc.render(format);
    match output {
        Some(p) => {
            fs::write(p, &rendered).map_err(|e| CliError::write(p, e))?;
            run.outputs.push(p.to_path_buf());
        }
        None => {
            let ext = match format {
                GraphFormat::Dot => "dot",
                GraphFormat::Json => "json",
            };
            run.write(&format!("export.{ext}"), &rendered)?;
        }
    }
    run.finish("export")
}
