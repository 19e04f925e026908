//! Single- against multi-layer FullGreedy on a SNAP edge list.
//!
//! `cargo run --release --example snap_layers -- <edges.txt> [k_max] [--undirected]`

use std::path::PathBuf;

use hag_core::build_computation_graph;
use hag_core::experiments::{cmd_experiment_layers, load_graph};
use hag_core::ingest::Remap;

fn main() -> Result<(), hag_core::Error> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let undirected = args.iter().any(|a| a == "--undirected");
    let rest: Vec<&String> = args.iter().filter(|a| !a.starts_with("--")).collect();
    let Some(path) = rest.first().map(PathBuf::from) else {
        eprintln!("usage: snap_layers <edges.txt> [k_max] [--undirected]");
        std::process::exit(2);
    };
    let k_max = rest.get(1).and_then(|k| k.parse().ok()).unwrap_or(100);
    let list = load_graph(&path, undirected, Remap::FirstAppearance)?;
    println!(
        "{} nodes, {} edges",
        list.graph.node_count(),
        list.graph.edge_count()
    );
    let report = cmd_experiment_layers(&build_computation_graph(&list.graph), k_max, 2)?;
    println!("{report}");
    Ok(())
}
