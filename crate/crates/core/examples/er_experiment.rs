//! Small random-graph study: FullGreedy and PartialGreedy against the exact
//! optimum, printed as mean 1 − α per edge probability.
//!
//! `cargo run --release --example er_experiment -- [trials] [seed]`

use hag_core::experiments::{cmd_experiment_er, ErExperiment};

fn main() -> Result<(), hag_core::Error> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().and_then(|a| a.parse().ok()).unwrap_or(10);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let exp = ErExperiment {
        trials,
        n: 12,
        ..ErExperiment::desk_scale(seed)
    };
    let report = cmd_experiment_er(&exp)?;
    println!("algorithm  p     k  mean(1-alpha)  min(alpha)");
    for a in &report.aggregates {
        println!(
            "{:<10} {:<5} {}  {:<13.4}  {:.4}",
            a.algorithm,
            a.p,
            a.k,
            a.mean_one_minus_alpha.unwrap_or(f64::NAN),
            a.min_alpha.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
