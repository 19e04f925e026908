use super::{build_matching_instance, check_same_leaves, solve_instance, CompletionMode, Matching};
use crate::error::MatchingError;
use crate::graph::{GnnGraph, HagGraph, NodeId, PartialHag};

/// Completes `p` from a matching: receiver `r` takes the selected
/// intermediates plus every requested sender not covered by them.
pub fn phi(p: &PartialHag, g: &GnnGraph, matching: &Matching) -> Result<HagGraph, MatchingError> {
    let instance = build_matching_instance(p, g)?;
    let checked = Matching::new(&instance, matching.per_receiver().to_vec())?;
    Ok(complete(p, g, &checked))
}

pub(crate) fn complete(p: &PartialHag, g: &GnnGraph, matching: &Matching) -> HagGraph {
    let mut hag = HagGraph::from_partial(p.clone());
    for r in 0..g.node_count() as NodeId {
        let selected = matching.selected(r);
        let mut covered: Vec<NodeId> = selected
            .iter()
            .flat_map(|&m| {
                p.intermediate(m)
                    .expect("matched intermediate exists")
                    .cover()
                    .iter()
                    .copied()
            })
            .collect();
        covered.sort_unstable();
        let mut inputs: Vec<NodeId> = g
            .in_neighbors(r)
            .iter()
            .copied()
            .filter(|l| covered.binary_search(l).is_err())
            .collect();
        inputs.extend_from_slice(selected);
        hag.set_receiver_inputs(r, inputs)
            .expect("completion only uses existing nodes");
    }
    hag
}

/// Reads the matching back off a completed HAG: receiver `r` selects the
/// intermediates among its inputs.
pub fn phi_inverse(hag: &HagGraph) -> Matching {
    let mut value = 0;
    let per_receiver = (0..hag.node_count() as NodeId)
        .map(|r| {
            let selected: Vec<NodeId> = hag
                .receiver_inputs(r)
                .iter()
                .copied()
                .filter(|&v| !hag.is_leaf(v))
                .collect();
            value += selected
                .iter()
                .map(|&m| hag.partial().cover_len(m) as u64 - 1)
                .sum::<u64>();
            selected
        })
        .collect();
    Matching::from_parts_unchecked(per_receiver, value)
}

/// The best completion of `p`: `phi` of a per-receiver maximum matching.
pub fn optimal_completion(
    p: &PartialHag,
    g: &GnnGraph,
    mode: CompletionMode,
) -> Result<HagGraph, MatchingError> {
    check_same_leaves(p, g)?;
    let instance = build_matching_instance(p, g)?;
    let matching = solve_instance(&instance, mode)?;
    Ok(complete(p, g, &matching))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_computation_graph, fixtures::*, LayerMode};
    use crate::matching::BruteForceCap;

    fn twin_partial() -> (GnnGraph, PartialHag, NodeId) {
        let g = build_computation_graph(&twin_graph());
        let mut p = PartialHag::new(5, LayerMode::Single, Some(2));
        let m = p.add_intermediate(&[A, B]).unwrap();
        (g, p, m)
    }

    #[test]
    fn empty_matching_gives_residual_graph() {
        let (g, p, _) = twin_partial();
        let instance = build_matching_instance(&p, &g).unwrap();
        let hag = phi(&p, &g, &Matching::empty(&instance)).unwrap();
        assert_eq!(hag.edges_left_to_right().len(), 6);
        assert_eq!(hag.value(), -p.input_cost());
        assert!(hag.verify_equivalence(&twin_graph()).is_ok());
    }

    #[test]
    fn partial_selection() {
        let (g, p, m) = twin_partial();
        let instance = build_matching_instance(&p, &g).unwrap();
        let mut sel = vec![Vec::new(); 5];
        sel[2] = vec![m];
        sel[3] = vec![m];
        let matching = Matching::new(&instance, sel).unwrap();
        assert_eq!(matching.value(), 2);
        let hag = phi(&p, &g, &matching).unwrap();
        assert_eq!(hag.out_receivers(m), vec![2, 3]);
        assert_eq!(hag.receiver_inputs(4), &[A, B]);
        assert_eq!(hag.value(), 1);
        assert_eq!(hag.value(), matching.value() as i64 - p.input_cost());

        sel = vec![Vec::new(); 5];
        for s in &mut sel[2..5] {
            *s = vec![m];
        }
        let matching = Matching::new(&instance, sel).unwrap();
        let hag = phi(&p, &g, &matching).unwrap();
        assert_eq!(matching.value(), 3);
        assert_eq!(hag.value(), 2);
        assert_eq!(phi_inverse(&hag), matching);
        assert_eq!(hag, twin_hag());
    }

    #[test]
    fn phi_rejects_non_matchings() {
        let (g, mut p, m) = twin_partial();
        let m2 = p.add_intermediate(&[A, 2]).unwrap();
        let src = crate::graph::DirectedGraph::new(5, [(0, 3), (1, 3), (2, 3)]).unwrap();
        let g2 = build_computation_graph(&src);
        let instance = build_matching_instance(&p, &g2).unwrap();
        let mut sel = vec![Vec::new(); 5];
        sel[3] = vec![m, m2];
        assert!(Matching::new(&instance, sel.clone()).is_err());
        let bogus = Matching::from_parts_unchecked(sel, 2);
        assert_eq!(
            phi(&p, &g2, &bogus),
            Err(MatchingError::NotAMatching { receiver: 3 })
        );
        let _ = g;
    }

    #[test]
    fn optimal_completion_examples() {
        let g = build_computation_graph(&twin_graph());
        let empty = PartialHag::new(5, LayerMode::Single, Some(2));
        let hag = optimal_completion(&empty, &g, CompletionMode::default()).unwrap();
        assert_eq!(hag.value(), 0);

        let (g, p, _) = twin_partial();
        for mode in [
            CompletionMode::Blossom,
            CompletionMode::BruteForce(BruteForceCap::default()),
            CompletionMode::default(),
        ] {
            assert_eq!(optimal_completion(&p, &g, mode).unwrap(), twin_hag());
        }
    }

    #[test]
    fn blossom_mode_rejects_large_covers() {
        let src = crate::graph::DirectedGraph::new(4, [(0, 3), (1, 3), (2, 3)]).unwrap();
        let g = build_computation_graph(&src);
        let mut p = PartialHag::new(4, LayerMode::Multi, Some(2));
        let m1 = p.add_intermediate(&[0, 1]).unwrap();
        p.add_intermediate(&[m1, 2]).unwrap();
        assert!(matches!(
            optimal_completion(&p, &g, CompletionMode::Blossom),
            Err(MatchingError::HyperedgeTooLarge { .. })
        ));
        let hag = optimal_completion(&p, &g, CompletionMode::default()).unwrap();
        assert_eq!(hag.value(), 0);
        assert!(hag.verify_equivalence(&src).is_ok());
    }
}
