use liftc::autodiff::{aggregate, forward};
use liftc::functions::Aggregation;
use liftc::graph::{build_graph, prune};
use liftc::ground::{ground_for_query, GroundConfig};
use liftc::logic::{Atom, Example, Query, Term, WeightedFact};
use liftc::parser::{format_number, parse_examples, serialize_examples};
use liftc::tensor::{Shape, Tensor};
use liftc::train::{init_params, TrainConfig};
use liftc::zoo::{instantiate, sample_example, ZooName, ZooSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn numbers_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::ZERO | proptest::num::f64::SUBNORMAL) {
        let s = format_number(x);
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn aggregating_copies(values in proptest::collection::vec(-1e3..1e3f64, 1..5), k in 1usize..6) {
        let v = Tensor::vector(values.clone());
        let copies = vec![v.clone(); k];
        let ids: Vec<usize> = (0..k).collect();
        let shape = Shape::vector(values.len());
        let (s, _, _) = aggregate(Aggregation::Sum, &copies, &ids, shape);
        let (a, _, _) = aggregate(Aggregation::Avg, &copies, &ids, shape);
        let (m, winners, _) = aggregate(Aggregation::Max, &copies, &ids, shape);
        for i in 0..values.len() {
            prop_assert!((s.data()[i] - k as f64 * values[i]).abs() <= 1e-9 * values[i].abs().max(1.0));
            prop_assert!((a.data()[i] - values[i]).abs() <= 1e-9 * values[i].abs().max(1.0));
            prop_assert_eq!(m.data()[i], values[i]);
        }
        prop_assert!(winners.unwrap().iter().all(|&w| w == 0));
    }

    #[test]
    fn examples_round_trip(
        facts in proptest::collection::vec((0usize..3, 0usize..4, proptest::collection::vec(-5.0..5.0f64, 1..4)), 1..8),
        target in 0.0..1.0f64,
    ) {
        let facts: Vec<WeightedFact> = facts
            .into_iter()
            .map(|(p, c, v)| WeightedFact::new(Tensor::vector(v), Atom::new(&format!("p{p}"), vec![Term::constant(&format!("c{c}"))])))
            .collect();
        let ex = Example::new(facts, vec![Query { target: Tensor::scalar(target), atom: Atom::new("q", vec![]) }]);
        let text = serialize_examples(std::slice::from_ref(&ex));
        prop_assert_eq!(parse_examples(&text).unwrap(), vec![ex]);
    }

    #[test]
    fn forward_is_pure_and_prune_preserves_output(model in 0usize..10, seed in 0u64..1000) {
        let name = ZooName::ALL[model];
        let spec = ZooSpec::new(name).with_layers(2).with_dim(3).with_input_dim(2);
        let t = instantiate(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ex = sample_example(&spec, 5, &mut rng);
        let q = &ex.queries[0].atom;
        let p = ground_for_query(&t, &ex, q, &GroundConfig::default()).unwrap();
        let g = build_graph(&t, &ex, p.program().unwrap(), q).unwrap();
        let params = init_params(&t, &TrainConfig { seed, ..Default::default() });
        let a = forward(&g, &params).unwrap().0;
        let b = forward(&g, &params).unwrap().0;
        prop_assert_eq!(a.data()[0].to_bits(), b.data()[0].to_bits());
        let pruned = prune(&g);
        prop_assert!(pruned.len() <= g.len());
        prop_assert_eq!(forward(&pruned, &params).unwrap().0, a);
    }
}
