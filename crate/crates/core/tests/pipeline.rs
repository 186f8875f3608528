mod common;

use hawkes_granger::graph::{extract_adjacency, LagAggregation};
use hawkes_granger::inference::estimation_error_bound;
use hawkes_granger::ingest::{build_panel, default_rules, parse_psv, IngestConfig};
use hawkes_granger::model::{build_design_multi, simulate_panel, DesignMatrix, LinkFunction, SimulationSpec};
use hawkes_granger::vi::{fit_network, fit_node, SolverOptions};
use hawkes_granger::PatientPanel;

use common::{max_abs_diff, newton_logistic};

fn tight() -> SolverOptions {
    SolverOptions { tol: 1e-10, max_iter: 200_000, ..Default::default() }
}

/// Expands a compressed design back into one row per observation.
fn expand(design: &DesignMatrix) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (mut rows, mut y) = (Vec::new(), Vec::new());
    for u in 0..design.n_unique() {
        for (count, label) in [(design.positives(u), 1.0), (design.negatives(u), 0.0)] {
            for _ in 0..count.round() as usize {
                rows.push(design.row(u).to_vec());
                y.push(label);
            }
        }
    }
    (rows, y)
}

#[test]
fn simulated_network_recovered_within_bound() {
    let mut spec = SimulationSpec::independent(3, 2, 800, 0.0, LinkFunction::linear());
    spec.nu = vec![0.15, 0.2, 0.25];
    spec.alpha = vec![vec![0.4, 0.0, 0.3], vec![0.5, 0.2, 0.0], vec![0.0, 0.6, 0.1]];
    let panels: Vec<PatientPanel> = (0..6).map(|s| simulate_panel(&spec, s).unwrap().panel).collect();
    let link = LinkFunction::linear();
    let fits = fit_network(&panels, &link, spec.d, None, &tight()).unwrap();
    for (i, fit) in fits.iter().enumerate() {
        let design = build_design_multi(&panels, i, spec.d, None).unwrap();
        let single = fit_node(&design, &link, &tight()).unwrap();
        assert_eq!(single.theta_hat, fit.theta_hat);
        let bound = estimation_error_bound(&design, &link, 0.05).unwrap();
        let err = fit
            .theta_hat
            .flatten()
            .iter()
            .zip(spec.true_theta(i).flatten())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= bound.theta_error_bound, "node {i}: {err} > {}", bound.theta_error_bound);
    }
    let models: Vec<_> = fits.into_iter().map(|f| f.theta_hat).collect();
    let adj = extract_adjacency(&models, panels[0].node_labels.clone(), LagAggregation::Sum).unwrap();
    // strongest planted effect is node 1 on node 2
    let (mut best, mut at) = (0.0, (0, 0));
    for i in 0..3 {
        for j in 0..3 {
            if i != j && adj.weights[i][j] > best {
                best = adj.weights[i][j];
                at = (i, j);
            }
        }
    }
    assert_eq!(at, (2, 1));
}

#[test]
fn sigmoid_fit_matches_newton_on_simulated_design() {
    let mut spec = SimulationSpec::independent(2, 1, 600, -0.5, LinkFunction::sigmoid(10.0));
    spec.n_exo = 1;
    spec.beta = vec![vec![0.8], vec![0.0]];
    spec.beta_decay = vec![vec![1.0], vec![1.0]];
    spec.alpha[0][1] = 1.5;
    let panels: Vec<PatientPanel> = (0..4).map(|s| simulate_panel(&spec, 40 + s).unwrap().panel).collect();
    let design = build_design_multi(&panels, 0, 1, None).unwrap();
    let fit = fit_node(&design, &spec.link, &tight()).unwrap();
    let (rows, y) = expand(&design);
    assert_eq!(rows.len() as f64, design.total());
    let mle = newton_logistic(&rows, &y).expect("Newton converges");
    assert!(max_abs_diff(&fit.theta_hat.flatten(), &mle) < 1e-5);
}

#[test]
fn ingested_records_fit_end_to_end() {
    let mut panels = Vec::new();
    for p in 0..4 {
        let mut text = String::from("HR|O2Sat|Temp|SBP|DBP|Resp|Creatinine|Age|Gender|ICULOS|SepsisLabel\n");
        for h in 1..=40 {
            let sick = (h + 7 * p) % 9 < 3;
            let (hr, temp, o2) = if sick { (112, 38.9, 89) } else { (80, 37.0, 97) };
            let creat = if h % 5 == 0 { if sick { "2.2" } else { "0.9" } } else { "NaN" };
            text.push_str(&format!("{hr}|{o2}|{temp}|118|70|18|{creat}|65|1|{h}|{}\n", u8::from(sick && h > 20)));
        }
        let rec = parse_psv(&format!("p{p}"), &text).unwrap();
        let (panel, report) = build_panel(&rec, &default_rules(), &IngestConfig::default()).unwrap();
        assert_eq!(report.rows_after, 40);
        panels.push(panel);
    }
    let fits = fit_network(&panels, &LinkFunction::sigmoid(10.0), 1, None, &SolverOptions::default()).unwrap();
    assert_eq!(fits.len(), panels[0].n_nodes());
    for f in &fits {
        assert!(f.theta_hat.flatten().iter().all(|v| v.is_finite()));
    }
}
