//! Degree and hub heuristics next to FullGreedy on a random graph.

use hag_core::experiments::{cmd_compare, Algorithm, RunSettings};
use hag_core::greedy::OptimizerConfig;
use hag_core::ingest::{gen_erdos_renyi, ErConfig};

fn main() -> Result<(), hag_core::Error> {
    let src = gen_erdos_renyi(&ErConfig::new(300, 0.05, 3))?;
    let settings = RunSettings::new(OptimizerConfig::new(50, 2));
    let report = cmd_compare(
        &src,
        &settings,
        &[Algorithm::Full, Algorithm::Degree, Algorithm::Hub],
        3,
    )?;
    for r in report.algorithm_rows() {
        println!("{:<7} value {:>4}", r.algorithm, r.value.unwrap_or(0));
    }
    for algo in [Algorithm::Degree, Algorithm::Hub] {
        let row = report.ratio(algo, Algorithm::Full).expect("both ran");
        println!(
            "{algo}/full value ratio {:.3}",
            row.value_ratio.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
