//! Completes a fixed set of intermediates optimally and walks the
//! correspondence between matchings and HAGs.

use hag_core::matching::{
    build_matching_instance, optimal_completion, phi, phi_inverse, CompletionMode, Matching,
};
use hag_core::{build_computation_graph, DirectedGraph, LayerMode, PartialHag};

fn main() -> Result<(), hag_core::Error> {
    // receiver 4 reads 0..=3, receiver 5 reads 0 and 1, receiver 6 reads 2 and 3
    let src = DirectedGraph::new(
        7,
        [
            (0, 4),
            (1, 4),
            (2, 4),
            (3, 4),
            (0, 5),
            (1, 5),
            (2, 6),
            (3, 6),
        ],
    )?;
    let g = build_computation_graph(&src);
    let mut p = PartialHag::new(7, LayerMode::Single, Some(2));
    let ab = p.add_intermediate(&[0, 1])?;
    let cd = p.add_intermediate(&[2, 3])?;
    let bc = p.add_intermediate(&[1, 2])?;

    let instance = build_matching_instance(&p, &g)?;
    for r in instance.receivers() {
        let sources: Vec<_> = r.edges.iter().map(|e| e.source).collect();
        println!("receiver {} can use {:?}", r.receiver, sources);
    }

    let mut chosen = vec![Vec::new(); 7];
    chosen[4] = vec![bc];
    let m = Matching::new(&instance, chosen)?;
    let hag = phi(&p, &g, &m)?;
    println!("matching value {} -> HAG value {}", m.value(), hag.value());
    assert_eq!(phi_inverse(&hag), m);

    let best = optimal_completion(&p, &g, CompletionMode::default())?;
    println!("optimal completion value {} using {ab}, {cd}", best.value());
    Ok(())
}
