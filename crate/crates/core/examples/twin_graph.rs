//! Three receivers reading the same two senders: one intermediate node
//! saves two aggregations.

use hag_core::greedy::{full_greedy, OptimizerConfig};
use hag_core::ingest::{export_dot, serialize_hag};
use hag_core::{build_computation_graph, CostParams, DirectedGraph};

fn main() -> Result<(), hag_core::Error> {
    // A=0 and B=1 both feed C=2, D=3 and E=4
    let src = DirectedGraph::new(5, [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)])?;
    let g = build_computation_graph(&src);
    let res = full_greedy(&g, &OptimizerConfig::new(1, 2))?;

    let unit = CostParams::unit();
    println!("value {}", res.value());
    println!(
        "cost before {} after {}",
        g.cost(&unit),
        res.graph.cost(&unit)
    );
    println!("equivalent: {}", res.graph.verify_equivalence(&src).is_ok());
    println!("{}", serialize_hag(&res.graph));
    println!("{}", export_dot(&res.graph, None));
    Ok(())
}
