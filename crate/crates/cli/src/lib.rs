//! Command-line front end: ingestion, fitting, selection, inference and
//! graph analysis as separate file-to-file commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod export;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hawkes_granger::graph::Linkage;
use hawkes_granger::model::LinkKind;
use hawkes_granger::selection::Criterion;

use crate::commands::ClusterSource;
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::export::GraphFormat;

#[derive(Debug, Parser)]
#[command(name = "hawkes-granger", version, about = "Granger-causal graphs from clinical time series")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides for the run configuration.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (also where upstream artifacts are looked up).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Memory depth.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    #[arg(long, global = true, value_parser = parse_link)]
    pub link: Option<LinkKind>,
    /// Predictor bound of the sigmoid feasible set.
    #[arg(long, global = true)]
    pub bound: Option<f64>,
    #[arg(long, global = true)]
    pub theta_max: Option<f64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Sex filter for ingestion.
    #[arg(long, global = true)]
    pub sex: Option<u8>,
    /// Keep patients strictly older than this.
    #[arg(long, global = true)]
    pub min_age: Option<f64>,
    #[arg(long, global = true)]
    pub level: Option<f64>,
    /// Edge weight threshold for graphs.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
}

fn parse_link(s: &str) -> Result<LinkKind, String> {
    match s {
        "linear" => Ok(LinkKind::Linear),
        "sigmoid" => Ok(LinkKind::Sigmoid),
        _ => Err(format!("unknown link {s:?} (expected linear or sigmoid)")),
    }
}

fn parse_criterion(s: &str) -> Result<Criterion, String> {
    match s {
        "tp_rate" => Ok(Criterion::TpRate),
        "classification_error" => Ok(Criterion::ClassificationError),
        "auc" => Ok(Criterion::Auc),
        _ => Err(format!("unknown criterion {s:?} (expected tp_rate, classification_error or auc)")),
    }
}

fn parse_linkage(s: &str) -> Result<Linkage, String> {
    match s {
        "average" => Ok(Linkage::Average),
        "complete" => Ok(Linkage::Complete),
        "single" => Ok(Linkage::Single),
        _ => Err(format!("unknown linkage {s:?} (expected average, complete or single)")),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a directory of .psv records into a panel archive.
    Ingest {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Draw panels from a simulation spec (TOML).
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        patients: usize,
    },
    /// Fit every node model.
    Fit {
        #[arg(long)]
        panels: Option<PathBuf>,
        /// Selection trace files fixing per-node feature subsets.
        #[arg(long, num_args = 1..)]
        features: Vec<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Forward feature selection for one node.
    Select {
        #[arg(long)]
        panels: Option<PathBuf>,
        /// Node label or index.
        #[arg(long)]
        target: String,
        #[arg(long, value_parser = parse_criterion)]
        criterion: Option<Criterion>,
        /// Comma-separated starting features; empty for none.
        #[arg(long, value_delimiter = ',')]
        initial: Option<Vec<String>>,
        #[arg(long)]
        split: Option<f64>,
        /// Also score the solver iteration grid on the final subset.
        #[arg(long)]
        tune: bool,
    },
    /// LP confidence intervals for the coefficients of one node.
    Ci {
        #[arg(long)]
        panels: Option<PathBuf>,
        #[arg(long)]
        target: String,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        s: Option<f64>,
        /// Report a single coordinate.
        #[arg(long)]
        coordinate: Option<usize>,
    },
    /// Patient-level bootstrap of the node-to-node effects.
    Bootstrap {
        #[arg(long)]
        panels: Option<PathBuf>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, num_args = 1..)]
        features: Vec<PathBuf>,
    },
    /// Hierarchical clustering of abnormality indicators or graph nodes.
    Cluster {
        #[arg(long, value_enum, default_value = "abnormality")]
        source: ClusterSource,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_parser = parse_linkage)]
        linkage: Option<Linkage>,
        #[arg(long)]
        far: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Hierarchical spectral blockmodel of a graph.
    Blockmodel {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        min_size: Option<usize>,
    },
    /// Render a graph document as DOT or JSON.
    Export {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: GraphFormat,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Config file (or defaults) with command-line overrides applied.
pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let g = &cli.global;
    let mut c = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($src:expr => $dst:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
    }
    set!(g.seed => c.seed);
    set!(g.out => c.output_dir);
    set!(g.d => c.model.d);
    set!(g.link => c.model.link);
    set!(g.bound => c.model.bound);
    set!(g.theta_max => c.model.theta_max);
    set!(g.tol => c.solver.tol);
    set!(g.max_iter => c.solver.max_iter);
    set!(g.level => c.inference.level);
    set!(g.threshold => c.inference.threshold);
    if g.sex.is_some() {
        c.subgroup.sex = g.sex;
    }
    if g.min_age.is_some() {
        c.subgroup.min_age_exclusive = g.min_age;
    }
    match &cli.command {
        Command::Fit { epsilon, .. } => set!(epsilon => c.inference.epsilon),
        Command::Select { criterion, split, .. } => {
            set!(criterion => c.selection.criterion);
            set!(split => c.selection.split);
        }
        Command::Ci { s, .. } => {
            if s.is_some() {
                c.inference.s = *s;
            }
        }
        Command::Bootstrap { replicates, .. } => set!(replicates => c.inference.replicates),
        Command::Cluster { linkage, far, k, .. } => {
            set!(linkage => c.clustering.linkage);
            set!(far => c.clustering.far_constant);
            set!(k => c.clustering.k);
        }
        Command::Blockmodel { k, depth, min_size, .. } => {
            set!(k => c.clustering.k);
            set!(depth => c.clustering.depth);
            set!(min_size => c.clustering.min_size);
        }
        Command::Ingest { .. } | Command::Simulate { .. } | Command::Export { .. } => {}
    }
    c.validate()?;
    Ok(c)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let config = resolve_config(cli)?;
    let c = &config;
    match &cli.command {
        Command::Ingest { data } => commands::ingest(c, data.as_deref()),
        Command::Simulate { spec, patients } => commands::simulate(c, spec, *patients),
        Command::Fit { panels, features, .. } => commands::fit(c, panels.as_deref(), features, None),
        Command::Select { panels, target, initial, tune, .. } => {
            commands::select(c, panels.as_deref(), target, initial.as_deref(), *tune)
        }
        Command::Ci { panels, target, features, coordinate, .. } => {
            commands::ci(c, panels.as_deref(), target, features.as_deref(), *coordinate)
        }
        Command::Bootstrap { panels, features, .. } => commands::bootstrap(c, panels.as_deref(), features),
        Command::Cluster { source, input, .. } => commands::cluster(c, *source, input.as_deref()),
        Command::Blockmodel { input, .. } => commands::blockmodel(c, input.as_deref(), None),
        Command::Export { input, format, output } => commands::export(c, input.as_deref(), *format, output.as_deref()),
    }
}
