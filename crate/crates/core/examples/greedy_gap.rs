//! Searches a small graph family for an instance where FullGreedy is stuck
//! at half the optimum while PartialGreedy recovers it, and for a triple of
//! in-sets witnessing that the completion value is not submodular.

use hag_core::experiments::{find_greedy_gap, find_non_submodular};
use hag_core::greedy::OptimizerConfig;

fn main() -> Result<(), hag_core::Error> {
    let names = hag_core::ingest::default_names(10);
    let show = |set: &[u32]| {
        set.iter()
            .map(|&v| names[v as usize].as_str())
            .collect::<Vec<_>>()
            .join("+")
    };

    let cfg = OptimizerConfig::new(3, 2);
    match find_greedy_gap(4, 6, &cfg, 1, 2)? {
        Some(gap) => {
            println!("graph edges: {:?}", gap.graph.edges());
            for (label, res) in [
                ("full", &gap.full),
                ("partial", &gap.partial),
                ("optimal", &gap.optimal),
            ] {
                let picks: Vec<String> = res.trace.iter().map(|s| show(&s.in_set)).collect();
                println!("{label:>8}: value {} via {}", res.value(), picks.join(", "));
            }
        }
        None => println!("no gap instance in the family"),
    }

    match find_non_submodular(4, 6)? {
        Some(w) => {
            println!("graph edges: {:?}", w.graph.edges());
            println!(
                "X = {}, Y = {}, Z = {}: F(X)={} F(X,Z)={} F(X,Y)={} F(X,Y,Z)={}",
                show(&w.x),
                show(&w.y),
                show(&w.z),
                w.f_x,
                w.f_xz,
                w.f_xy,
                w.f_xyz
            );
            println!(
                "gain of Z late {} > early {}",
                w.late_gain(),
                w.early_gain()
            );
        }
        None => println!("no witness in the family"),
    }
    Ok(())
}
