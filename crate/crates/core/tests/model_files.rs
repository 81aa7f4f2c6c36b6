use std::path::Path;

use ims_core::catalog::{builtin_with_defaults, Params, BUILTIN_MODELS};
use ims_core::model_file::{parse_model_file, serialize_model, LatticeSpec};
use ims_core::{Boundary, InteractionMap, Kernel, Layer, ModelSpec, RateTable};
use proptest::prelude::*;

fn bundled(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("models").join(format!("{name}.json"));
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn bundled_files_match_the_catalog() {
    for name in BUILTIN_MODELS {
        let from_file = parse_model_file(&bundled(name)).unwrap();
        // 32-site ring, nearest neighbours
        let builtin = builtin_with_defaults(name, &Params::new(), 2.0).unwrap();
        assert_eq!(from_file, builtin, "{name}");
    }
}

#[test]
fn serialized_catalog_models_reparse() {
    let spec = LatticeSpec {
        dims: vec![4, 4],
        boundary: Boundary::Periodic,
        kernel: Kernel::NearestNeighbor,
    };
    for name in BUILTIN_MODELS {
        let m = builtin_with_defaults(name, &Params::new(), 4.0).unwrap();
        let text = serialize_model(&m, Some(spec.clone()));
        assert_eq!(parse_model_file(&text).unwrap(), m, "{name}");
        assert_eq!(serialize_model(&parse_model_file(&text).unwrap(), Some(spec.clone())), text);
    }
}

fn layer_strategy(n: u8) -> impl Strategy<Value = Layer> {
    let k = (n as usize + 1).pow(2);
    (prop::collection::vec(0..=n, k), prop::collection::vec(0.0f64..10.0, k)).prop_map(move |(j, r)| {
        let idx = |a: u8, b: u8| a as usize * (n as usize + 1) + b as usize;
        let map = InteractionMap::from_fn(n, |a, b| j[idx(a, b)]).unwrap();
        let rates = RateTable::from_fn(n, |a, b| if map.get(a, b) == a { 0.0 } else { r[idx(a, b)] }).unwrap();
        Layer::new(map, rates).unwrap()
    })
}

proptest! {
    #[test]
    fn round_trip_preserves_models(
        layers in (1u8..=3).prop_flat_map(|n| prop::collection::vec(layer_strategy(n), 1..4)),
        labelled in any::<bool>(),
    ) {
        let n = layers[0].map.n();
        let labels = labelled.then(|| (0..=n).map(|a| format!("type{a}")).collect());
        let m = ModelSpec::new(layers, labels).unwrap();
        let text = serialize_model(&m, None);
        let back = parse_model_file(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(serialize_model(&back, None), text);
    }
}
