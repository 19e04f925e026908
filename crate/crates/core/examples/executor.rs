//! Runs three GNN rounds on a random graph, once directly and once through
//! an optimized HAG, and compares states and operation counts.

use hag_core::executor::{node_terms, run_gnn, run_hag, MultisetUnion, WrappingSum};
use hag_core::greedy::{full_greedy, OptimizerConfig};
use hag_core::ingest::{gen_erdos_renyi, ErConfig};
use hag_core::{build_computation_graph, LayerMode};

fn main() -> Result<(), hag_core::Error> {
    let src = gen_erdos_renyi(&ErConfig::new(40, 0.3, 7))?;
    let g = build_computation_graph(&src);
    let cfg = OptimizerConfig::new(20, 2).with_layer_mode(LayerMode::Multi);
    let hag = full_greedy(&g, &cfg)?.graph;

    let init = node_terms(g.node_count());
    let plain = run_gnn(&g, 3, &init, &MultisetUnion)?;
    let fast = run_hag(&hag, 3, &init, &MultisetUnion)?;
    println!("value {}", hag.value());
    println!(
        "ops per round: plain {:?}, hag {:?}",
        plain.ops_per_round, fast.ops_per_round
    );
    println!("symbolic states equal: {}", plain.states == fast.states);

    let sums: Vec<i64> = (0..g.node_count() as i64).collect();
    let a = run_gnn(&g, 3, &sums, &WrappingSum)?;
    let b = run_hag(&hag, 3, &sums, &WrappingSum)?;
    println!(
        "integer states equal: {}",
        a.final_states() == b.final_states()
    );
    Ok(())
}
