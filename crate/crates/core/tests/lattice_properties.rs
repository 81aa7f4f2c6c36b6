use ims_core::catalog::{builtin_with_defaults, Params, BUILTIN_MODELS};
use ims_core::lattice::{pair_rates, rate_bound, site_exit_rate};
use ims_core::{compare_configs, Boundary, Configuration, Kernel, Lattice, OrderRelation};
use proptest::prelude::*;

fn config(sites: usize, n: u8) -> impl Strategy<Value = Configuration> {
    prop::collection::vec(0..=n, sites).prop_map(Configuration::new)
}

fn lattice_strategy() -> impl Strategy<Value = Lattice> {
    prop_oneof![
        (3usize..8).prop_map(|l| Lattice::ring(l).unwrap()),
        (2usize..6).prop_map(|l| Lattice::new(&[l], Boundary::Free, Kernel::NearestNeighbor).unwrap()),
        (3usize..5, 3usize..5)
            .prop_map(|(a, b)| Lattice::new(&[a, b], Boundary::Periodic, Kernel::NearestNeighbor).unwrap()),
        (5usize..8).prop_map(|l| Lattice::new(&[l], Boundary::Periodic, Kernel::Box { range: 2 }).unwrap()),
    ]
}

fn model_and_config() -> impl Strategy<Value = (String, Lattice, Configuration)> {
    (prop::sample::select(BUILTIN_MODELS.to_vec()), lattice_strategy()).prop_flat_map(|(name, lat)| {
        let m = builtin_with_defaults(name, &Params::new(), lat.max_mass()).unwrap();
        let sites = lat.num_sites();
        (Just(name.to_string()), Just(lat), config(sites, m.n()))
    })
}

fn model(name: &str, lat: &Lattice) -> ims_core::ModelSpec {
    builtin_with_defaults(name, &Params::new(), lat.max_mass()).unwrap()
}

#[test]
fn gbt_pair_rates_split_by_layer() {
    let lat = Lattice::ring(4).unwrap();
    let m = model("gbt", &lat);
    // grass at 0 next to trees at 1
    let eta = Configuration::new(vec![1, 2, 1, 1]);
    let r = pair_rates(&m, &lat, &eta, 0, 1);
    assert_eq!(r, vec![(0.0, 0.0), (3.0, 0.0)]);
    assert_eq!(pair_rates(&m, &lat, &eta, 0, 2), vec![(0.0, 0.0); 2]);
}

#[test]
fn contact_site_exit_rates() {
    let lat = Lattice::ring(5).unwrap();
    let m = model("contact", &lat);
    let eta = Configuration::new(vec![1, 0, 0, 1, 1]);
    // occupied sites die at rate 1, empty ones are infected at 2 per occupied neighbour
    assert!((site_exit_rate(&m, &lat, &eta, 0) - 1.0).abs() < 1e-12);
    assert!((site_exit_rate(&m, &lat, &eta, 1) - 2.0).abs() < 1e-12);
    assert!((site_exit_rate(&m, &lat, &eta, 2) - 2.0).abs() < 1e-12);
    let empty = Configuration::constant(5, 0);
    assert_eq!(site_exit_rate(&m, &lat, &empty, 3), 0.0);
}

proptest! {
    #[test]
    fn order_is_a_partial_order(
        (a, b, c) in (1u8..=3, 1usize..6).prop_flat_map(|(n, s)| (config(s, n), config(s, n), config(s, n)))
    ) {
        prop_assert_eq!(compare_configs(&a, &a).unwrap(), OrderRelation::Equal);
        let ab = compare_configs(&a, &b).unwrap();
        let ba = compare_configs(&b, &a).unwrap();
        if ab.is_le() && ba.is_le() {
            prop_assert_eq!(&a, &b);
        }
        let flipped = match ab {
            OrderRelation::LessOrEqual => OrderRelation::GreaterOrEqual,
            OrderRelation::GreaterOrEqual => OrderRelation::LessOrEqual,
            other => other,
        };
        prop_assert_eq!(ba, flipped);
        if a.le(&b) && b.le(&c) {
            prop_assert!(a.le(&c));
        }
        prop_assert_eq!(ab.is_le(), a.le(&b));
    }

    #[test]
    fn pair_rates_respect_kernel_and_bound((name, lat, eta) in model_and_config()) {
        let m = model(&name, &lat);
        let c = rate_bound(&m, &lat);
        for x in 0..lat.num_sites() {
            for y in 0..lat.num_sites() {
                let rates = pair_rates(&m, &lat, &eta, x, y);
                prop_assert_eq!(rates.len(), m.layers().len());
                for &(up, down) in &rates {
                    if lat.weight(x, y) == 0.0 {
                        prop_assert_eq!((up, down), (0.0, 0.0));
                    }
                    prop_assert_eq!(up * down, 0.0);
                    prop_assert!(up >= 0.0 && down >= 0.0);
                    prop_assert!(up <= c + 1e-12 && down <= c + 1e-12);
                }
            }
        }
    }

    #[test]
    fn pair_rates_commute_with_translation(
        (name, lat, eta) in model_and_config().prop_filter("periodic", |(_, l, _)| l.boundary() == Boundary::Periodic),
        s0 in -4i64..4,
        s1 in -4i64..4,
    ) {
        let m = model(&name, &lat);
        let shift: Vec<i64> = [s0, s1][..lat.dims().len()].to_vec();
        let moved = lat.translate(&eta, &shift).unwrap();
        let labels = Configuration::new((0..lat.num_sites() as u8).collect());
        let where_from = lat.translate(&labels, &shift).unwrap();
        let mut image = vec![0; lat.num_sites()];
        for (to, &from) in where_from.values().iter().enumerate() {
            image[from as usize] = to;
        }
        for x in 0..lat.num_sites() {
            for y in 0..lat.num_sites() {
                prop_assert_eq!(
                    pair_rates(&m, &lat, &eta, x, y),
                    pair_rates(&m, &lat, &moved, image[x], image[y])
                );
            }
        }
    }
}
