mod common;

use adhoc_kitchen::agents::Specialty;
use adhoc_kitchen::metrics::{
    assortativity, component_stats, gini, greedy_modularity, modularity, CollaborationNetwork, MetricError,
};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn labels_of(partition: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut label = vec![usize::MAX; n];
    for (c, members) in partition.iter().enumerate() {
        for &v in members {
            label[v] = c;
        }
    }
    label
}

proptest! {
    #[test]
    fn metrics_agree_with_brute_force(seed in any::<u64>()) {
        let net = random_network(&mut ChaCha8Rng::seed_from_u64(seed));
        match (assortativity(&net), mixing_assortativity(&net)) {
            (Ok(r), Some(want)) => {
                prop_assert!((r - want).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&r));
            }
            (Err(MetricError::Undefined(_)), None) => {}
            (got, want) => prop_assert!(false, "{:?} vs {:?}", got, want),
        }
        let (n, largest, aspl) = floyd_components(&net);
        let c = component_stats(&net);
        prop_assert_eq!(c.n_components, n);
        prop_assert_eq!(c.largest_fraction, largest);
        prop_assert_eq!(c.aspl, aspl);
        if net.edge_count() > 0 {
            let (partition, q) = greedy_modularity(&net).unwrap();
            let mut seen: Vec<usize> = partition.iter().flatten().copied().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..net.n()).collect::<Vec<_>>());
            let direct = modularity_of_labels(&net, &labels_of(&partition, net.n()));
            prop_assert!((q - direct).abs() < 1e-12);
            prop_assert!((q - modularity(&net, &partition)).abs() < 1e-12);
            prop_assert!(q <= exhaustive_max_modularity(&net) + 1e-12);
            prop_assert!((-0.5..=1.0).contains(&q));
        } else {
            prop_assert!(greedy_modularity(&net).is_err());
        }
    }

    #[test]
    fn gini_matches_mean_difference(xs in proptest::collection::vec(0u32..500, 1..12)) {
        let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
        let g = gini(&xs);
        prop_assert!((g - gini_md(&xs)).abs() < 1e-12);
        prop_assert!(g >= 0.0 && g <= 1.0 - 1.0 / xs.len() as f64 + 1e-12);
    }
}

#[test]
fn barbell_split_is_optimal() {
    let net = barbell();
    let (partition, q) = greedy_modularity(&net).unwrap();
    assert_eq!(partition, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    assert!((q - 5.0 / 14.0).abs() < 1e-12);
    assert!((exhaustive_max_modularity(&net) - 5.0 / 14.0).abs() < 1e-12);
}

#[test]
fn small_partitions() {
    let mut pair = CollaborationNetwork::new(vec![Specialty::Fetch, Specialty::Chop]);
    pair.add_edge(0, 1, 1);
    let (p, q) = greedy_modularity(&pair).unwrap();
    assert_eq!(p, vec![vec![0, 1]]);
    assert_eq!(q, 0.0);
    assert_eq!(exhaustive_max_modularity(&pair), 0.0);

    let mut two = CollaborationNetwork::new(vec![Specialty::Fetch; 4]);
    two.add_edge(0, 1, 1);
    two.add_edge(2, 3, 1);
    let (p, q) = greedy_modularity(&two).unwrap();
    assert_eq!(p, vec![vec![0, 1], vec![2, 3]]);
    assert!((q - exhaustive_max_modularity(&two)).abs() < 1e-12);
}

#[test]
fn gini_closed_forms() {
    assert!((gini(&[0.0, 7.0]) - 0.5).abs() < 1e-12);
    assert_eq!(gini(&[3.0; 5]), 0.0);
    assert!((gini(&[1.0, 2.0, 3.0, 4.0]) - 0.25).abs() < 1e-12);
    assert!((gini_md(&[1.0, 2.0, 3.0, 4.0]) - 0.25).abs() < 1e-12);
}
