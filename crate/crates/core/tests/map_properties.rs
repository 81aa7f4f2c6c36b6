use ims_core::{
    apply_permutation, canonicalize, check_ims_attractive, check_map_attractive, classify_pair, InteractionClass,
    InteractionMap, ModelSpec, Particle, Permutation, RateTable,
};
use proptest::prelude::*;

fn map_strategy() -> impl Strategy<Value = InteractionMap> {
    (1u8..=3).prop_flat_map(|n| {
        let k = (n as usize + 1).pow(2);
        prop::collection::vec(0..=n, k).prop_map(move |v| {
            InteractionMap::from_fn(n, |a, b| v[a as usize * (n as usize + 1) + b as usize]).unwrap()
        })
    })
}

fn model_strategy() -> impl Strategy<Value = ModelSpec> {
    map_strategy().prop_flat_map(|m| {
        let k = m.num_types().pow(2);
        let n = m.n();
        prop::collection::vec(0.1f64..5.0, k).prop_map(move |r| {
            let rates = RateTable::from_fn(n, |a, b| r[a as usize * (n as usize + 1) + b as usize]).unwrap();
            ModelSpec::single(m.clone(), rates).unwrap()
        })
    })
}

fn perm_strategy(n: Particle) -> impl Strategy<Value = Permutation> {
    Just((0..=n).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::new(v).unwrap())
}

fn all_n2_maps() -> impl Iterator<Item = InteractionMap> {
    (0..3u32.pow(9)).map(|code| {
        InteractionMap::from_fn(2, |a, b| ((code / 3u32.pow((a * 3 + b) as u32)) % 3) as u8).unwrap()
    })
}

#[test]
fn accepted_maps_have_the_monotone_shape() {
    let mut accepted = 0;
    for m in all_n2_maps().filter(|m| check_map_attractive(m).attractive) {
        accepted += 1;
        for a in 0..=2u8 {
            for b in 0..2u8 {
                assert!(m.get(a, b) <= m.get(a, b + 1), "{m:?} not nondecreasing in b at ({a},{b})");
            }
        }
        for b in 0..=2u8 {
            for a in 0..2u8 {
                if m.get(a, b) <= m.get(a + 1, b) {
                    continue;
                }
                let swap = m.class(a, b) == InteractionClass::Up
                    && m.class(a + 1, b) == InteractionClass::Down
                    && m.get(a, b) == a + 1
                    && m.get(a + 1, b) == a;
                assert!(swap, "{m:?} decreases in a at ({a},{b}) without a swap");
            }
        }
    }
    assert!(accepted > 0);
}

#[test]
fn all_null_map_admits_every_ordering() {
    for n in 1..=3u8 {
        let m = ModelSpec::single(InteractionMap::null(n).unwrap(), RateTable::constant(n, 1.0).unwrap()).unwrap();
        let found = ims_core::search_orderings(&m).unwrap();
        assert_eq!(found.len(), (1..=n as usize + 1).product::<usize>());
    }
}

proptest! {
    #[test]
    fn classes_partition_pairs(m in map_strategy()) {
        let n = m.n();
        let mut counts = [0usize; 3];
        for a in 0..=n {
            for b in 0..=n {
                let c = classify_pair(&m, a, b).unwrap();
                let j = m.get(a, b);
                let expected = match j.cmp(&a) {
                    std::cmp::Ordering::Greater => InteractionClass::Up,
                    std::cmp::Ordering::Equal => InteractionClass::Null,
                    std::cmp::Ordering::Less => InteractionClass::Down,
                };
                prop_assert_eq!(c, expected);
                counts[c as usize] += 1;
            }
        }
        prop_assert_eq!(counts.iter().sum::<usize>(), (n as usize + 1).pow(2));
        prop_assert!(classify_pair(&m, n + 1, 0).is_err());
    }

    #[test]
    fn permutations_act_as_a_group(
        (m, pi, sigma) in model_strategy().prop_flat_map(|m| {
            let n = m.n();
            (Just(m), perm_strategy(n), perm_strategy(n))
        })
    ) {
        let n = m.n();
        let twice = apply_permutation(&apply_permutation(&m, &pi).unwrap(), &sigma).unwrap();
        let composed = apply_permutation(&m, &sigma.compose(&pi).unwrap()).unwrap();
        prop_assert_eq!(twice, composed);
        prop_assert_eq!(apply_permutation(&m, &Permutation::identity(n)).unwrap(), m.clone());
        prop_assert!(pi.compose(&pi.inverse()).unwrap().is_identity());
    }

    #[test]
    fn verdict_matches_its_violations(m in model_strategy()) {
        let v = check_ims_attractive(&m);
        prop_assert_eq!(v.attractive, v.violations.is_empty());
        for viol in &v.violations {
            let layer = &m.layers()[viol.layer.unwrap_or(0)];
            prop_assert!(viol.confirms(&layer.map, Some(&layer.rates)), "{}", viol);
        }
        let mv = check_map_attractive(&m.layers()[0].map);
        prop_assert_eq!(mv.attractive, mv.violations.is_empty());
        for viol in &mv.violations {
            prop_assert!(viol.confirms(&m.layers()[0].map, None), "{}", viol);
        }
    }

    #[test]
    fn canonicalize_keeps_positive_rate_models(m in model_strategy()) {
        let c = canonicalize(&m);
        let map = &m.layers()[0].map;
        prop_assert_eq!(&c.layers()[0].map, map);
        prop_assert_eq!(check_map_attractive(&c.layers()[0].map), check_map_attractive(map));
        prop_assert_eq!(check_ims_attractive(&c).attractive, check_ims_attractive(&m).attractive);
    }

    #[test]
    fn zero_rates_become_null(m in model_strategy(), a in 0u8..=3, b in 0u8..=3) {
        let n = m.n();
        let (a, b) = (a.min(n), b.min(n));
        let layer = &m.layers()[0];
        let rates = RateTable::from_fn(n, |x, y| if (x, y) == (a, b) { 0.0 } else { layer.rates.get(x, y) }).unwrap();
        let zeroed = ModelSpec::single(layer.map.clone(), rates).unwrap();
        let c = canonicalize(&zeroed);
        prop_assert_eq!(c.layers()[0].map.get(a, b), a);
        for (x, y) in c.layers()[0].map.pairs() {
            if c.layers()[0].map.class(x, y) == InteractionClass::Null {
                prop_assert_eq!(c.layers()[0].rate(x, y), 0.0);
            }
        }
    }
}
