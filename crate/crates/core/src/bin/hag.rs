use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hag_core::exact::ExactConfig;
use hag_core::experiments::{
    cmd_compare, cmd_experiment_er, cmd_experiment_layers, cmd_optimize, cmd_validate, load_graph,
    Algorithm, ErExperiment, RunSettings, ValidateConfig,
};
use hag_core::greedy::OptimizerConfig;
use hag_core::heuristics::DegreeRanking;
use hag_core::ingest::{gen_erdos_renyi, ErConfig, Remap};
use hag_core::{build_computation_graph, DirectedGraph, Error, LayerMode};

#[derive(Parser)]
#[command(
    name = "hag",
    version,
    about = "Build and evaluate hierarchical aggregation graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write the resulting HAG.
    Optimize {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "full")]
        algo: Algorithm,
        #[command(flatten)]
        opt: OptArgs,
        /// HAG JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-step trace CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run several algorithms on one graph and report value and runtime ratios.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_delimiter = ',', default_value = "full,partial,degree,hub")]
        algo: Vec<Algorithm>,
        #[command(flatten)]
        opt: OptArgs,
        /// Runs per algorithm; runtimes are averaged.
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Approximation ratios against the exact optimum on random graphs.
    ExperimentEr {
        #[arg(long, default_value_t = 15)]
        n: usize,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"
        )]
        p: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "full,partial")]
        algo: Vec<Algorithm>,
        #[arg(long, default_value_t = 2)]
        candidate_floor: usize,
        #[arg(long)]
        no_stop_on_nonpositive: bool,
        #[arg(long)]
        er_undirected: bool,
        /// Work budget of the exact oracle.
        #[arg(long)]
        budget: Option<u64>,
        /// Per-trial CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Aggregate CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// FullGreedy single- against multi-layer for budgets 1..=k.
    ExperimentLayers {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Per-budget CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check the library's invariants on seeded random instances.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Corrupt one HAG to show the checker catches it.
        #[arg(long)]
        inject_fault: bool,
    },
}

#[derive(Args)]
struct InputArgs {
    /// SNAP edge list; without it a random graph is drawn from --n and --p.
    input: Option<PathBuf>,
    /// Read each edge line in both directions.
    #[arg(long)]
    undirected: bool,
    /// Keep file ids instead of renumbering nodes by first appearance.
    #[arg(long)]
    verbatim_ids: bool,
    #[arg(long, default_value_t = 15)]
    n: usize,
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    er_undirected: bool,
}

impl InputArgs {
    fn load(&self) -> Result<DirectedGraph, Error> {
        match &self.input {
            Some(path) => {
                let remap = if self.verbatim_ids {
                    Remap::Verbatim
                } else {
                    Remap::FirstAppearance
                };
                Ok(load_graph(path, self.undirected, remap)?.graph)
            }
            None => {
                let cfg = ErConfig {
                    undirected: self.er_undirected,
                    ..ErConfig::new(self.n, self.p, self.seed)
                };
                Ok(gen_erdos_renyi(&cfg)?)
            }
        }
    }
}

#[derive(Args)]
struct OptArgs {
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, conflicts_with = "multi_layer")]
    single_layer: bool,
    #[arg(long)]
    multi_layer: bool,
    #[arg(long, default_value_t = 2)]
    candidate_floor: usize,
    #[arg(long)]
    no_stop_on_nonpositive: bool,
    /// Sender ranking of the degree and hub heuristics: out, in or total.
    #[arg(long, default_value = "out", value_parser = parse_ranking)]
    ranking: DegreeRanking,
    #[arg(long)]
    budget: Option<u64>,
}

fn parse_ranking(s: &str) -> Result<DegreeRanking, String> {
    match s {
        "out" => Ok(DegreeRanking::Out),
        "in" => Ok(DegreeRanking::In),
        "total" => Ok(DegreeRanking::Total),
        _ => Err(format!("unknown ranking {s:?}")),
    }
}

impl OptArgs {
    fn settings(&self) -> RunSettings {
        let mode = if self.multi_layer {
            LayerMode::Multi
        } else {
            LayerMode::Single
        };
        let cfg = OptimizerConfig::new(self.k, self.d)
            .with_layer_mode(mode)
            .with_candidate_floor(self.candidate_floor)
            .with_stop_on_nonpositive(!self.no_stop_on_nonpositive);
        RunSettings {
            ranking: self.ranking,
            budget: self.budget.unwrap_or(ExactConfig::new(0, 2).budget),
            ..RunSettings::new(cfg)
        }
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Optimize {
            input,
            algo,
            opt,
            out,
            report,
        } => {
            let g = input.load()?;
            let (summary, _) =
                cmd_optimize(&g, algo, &opt.settings(), out.as_deref(), report.as_deref())?;
            println!("{summary}");
        }
        Command::Compare {
            input,
            algo,
            opt,
            trials,
            report,
        } => {
            let g = input.load()?;
            let cmp = cmd_compare(&g, &opt.settings(), &algo, trials)?;
            for r in cmp.algorithm_rows() {
                println!(
                    "{:<8} value={} k_used={} elapsed_ms={:.3}",
                    r.algorithm,
                    r.value.unwrap_or(0),
                    r.k_used.unwrap_or(0),
                    r.elapsed_ms.unwrap_or(0.0)
                );
            }
            for r in cmp.rows.iter().filter(|r| r.kind == "ratio") {
                let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |x| format!("{x:.4}"));
                println!(
                    "{}/{} value={} runtime={}",
                    r.algorithm,
                    r.baseline,
                    fmt(r.value_ratio),
                    fmt(r.runtime_ratio)
                );
            }
            if let Some(path) = report {
                cmp.write_csv(&path)?;
            }
        }
        Command::ExperimentEr {
            n,
            p,
            trials,
            k,
            d,
            seed,
            algo,
            candidate_floor,
            no_stop_on_nonpositive,
            er_undirected,
            budget,
            out,
            report,
        } => {
            let exp = ErExperiment {
                n,
                p_grid: p,
                trials,
                k_list: k,
                d,
                seed,
                undirected: er_undirected,
                budget: budget.unwrap_or(ExactConfig::new(0, 2).budget),
                algorithms: algo,
                candidate_floor,
                stop_on_nonpositive: !no_stop_on_nonpositive,
            };
            let res = cmd_experiment_er(&exp)?;
            println!("algorithm,p,k,complete,mean_alpha,mean_1-alpha,std_1-alpha,min_alpha");
            let fmt = |x: Option<f64>| x.map_or(String::new(), |x| format!("{x:.4}"));
            for a in &res.aggregates {
                println!(
                    "{},{},{},{}/{},{},{},{},{}",
                    a.algorithm,
                    a.p,
                    a.k,
                    a.complete_trials,
                    a.trials,
                    fmt(a.mean_alpha),
                    fmt(a.mean_one_minus_alpha),
                    fmt(a.std_one_minus_alpha),
                    fmt(a.min_alpha)
                );
            }
            if let Some(path) = out {
                hag_core::experiments::write_csv(&path, &res.trials)?;
            }
            if let Some(path) = report {
                hag_core::experiments::write_csv(&path, &res.aggregates)?;
            }
        }
        Command::ExperimentLayers {
            input,
            k,
            d,
            report,
        } => {
            let g = build_computation_graph(&input.load()?);
            let res = cmd_experiment_layers(&g, k, d)?;
            println!("{res}");
            if let Some(path) = report {
                res.write_csv(&path)?;
            }
        }
        Command::Validate {
            seed,
            trials,
            inject_fault,
        } => {
            let report = cmd_validate(&ValidateConfig {
                seed,
                instances: trials,
                inject_fault,
                ..Default::default()
            });
            print!("{report}");
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
