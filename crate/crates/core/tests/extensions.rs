//! Order operations against brute-force oracles on random DAGs.

mod oracles;

use std::collections::BTreeSet;

use acsan_core::gen::random_order;
use acsan_core::scenario::{
    count_linear_extensions, linear_extensions, peel_layers, predecessors, transitive_closure,
    transitive_reduction, CausalityRelation,
};
use acsan_core::terms::Term;
use acsan_core::{cro, Event};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn events(n: usize) -> Vec<Event> {
    (0..n)
        .map(|i| {
            Event::new(
                format!("e{i}"),
                Term::principal("A"),
                Term::a2i(Term::principal("A"), Term::attribute("k")).unwrap(),
                Term::principal("A"),
            )
            .unwrap()
        })
        .collect()
}

fn relation(seed: u64, n: usize, density: f64) -> (CausalityRelation, Vec<(usize, usize)>) {
    let edges = random_order(&mut ChaCha8Rng::seed_from_u64(seed), n, density);
    (CausalityRelation::new(events(n), edges.clone()).unwrap(), edges)
}

#[test]
fn cro_count_is_the_multinomial() {
    let rel = CausalityRelation::new(cro::events(), cro::order()).unwrap();
    let oracle = oracles::permutation_filter(6, &cro::order());
    assert_eq!(oracle.len(), 720 / 8);
    assert_eq!(count_linear_extensions(&rel).unwrap(), 90);
    assert_eq!(linear_extensions(&rel).collect::<BTreeSet<_>>(), oracle);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn enumeration_matches_permutation_filter(seed in any::<u64>(), n in 0usize..=7, density in 0.0f64..0.8) {
        let (rel, edges) = relation(seed, n, density);
        let streamed: Vec<Vec<usize>> = linear_extensions(&rel).collect();
        let unique: BTreeSet<Vec<usize>> = streamed.iter().cloned().collect();
        prop_assert_eq!(unique.len(), streamed.len(), "duplicates in the stream");
        let mut sorted = streamed.clone();
        sorted.sort();
        prop_assert_eq!(&sorted, &streamed, "not lexicographic");
        prop_assert_eq!(unique, oracles::permutation_filter(n, &edges));
        prop_assert_eq!(count_linear_extensions(&rel).unwrap(), streamed.len() as u64);
    }

    #[test]
    fn reduction_preserves_closure_minimally(seed in any::<u64>(), n in 0usize..=8, density in 0.0f64..0.8) {
        let (rel, _) = relation(seed, n, density);
        let closure = transitive_closure(&rel);
        let cg = transitive_reduction(&rel);
        prop_assert!(cg.arcs.is_subset(&closure));
        let arcs: Vec<(usize, usize)> = cg.arcs.iter().copied().collect();
        let reclosed = transitive_closure(&CausalityRelation::new(events(n), arcs.clone()).unwrap());
        prop_assert_eq!(&reclosed, &closure);
        for skip in 0..arcs.len() {
            let fewer: Vec<_> = arcs.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &a)| a).collect();
            let c = transitive_closure(&CausalityRelation::new(events(n), fewer).unwrap());
            prop_assert_ne!(&c, &closure);
        }
    }

    #[test]
    fn layers_partition_and_respect_predecessors(seed in any::<u64>(), n in 0usize..=8, density in 0.0f64..0.8) {
        let (rel, _) = relation(seed, n, density);
        let layers = peel_layers(&transitive_reduction(&rel));
        let mut seen = BTreeSet::new();
        for layer in &layers {
            for &l in layer {
                let pre = predecessors(&rel, &rel.events()[l].name).unwrap();
                prop_assert!(pre.iter().all(|p| seen.contains(p)));
            }
            for &l in layer {
                prop_assert!(seen.insert(l));
            }
        }
        prop_assert_eq!(seen.len(), n);
        // Layer by layer, in any within-layer order, is a linear extension.
        let concat: Vec<usize> = layers.concat();
        let all: BTreeSet<Vec<usize>> = linear_extensions(&rel).collect();
        prop_assert!(all.contains(&concat));
        let reversed_within: Vec<usize> = layers.iter().flat_map(|l| l.iter().rev().copied()).collect();
        prop_assert!(all.contains(&reversed_within));
    }
}
