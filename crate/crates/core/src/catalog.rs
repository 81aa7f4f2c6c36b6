//! Built-in models.
//!
//! Neighbour-independent transitions at constant rate `rho` are written as a
//! full row `J(a, b) = a'` for every `b` with `lambda_ab = rho / W`, where `W`
//! is the per-site kernel mass of the lattice the model will run on.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::map::{InteractionMap, Layer, ModelSpec, Particle, RateTable};

pub type Params = BTreeMap<String, f64>;

pub const BUILTIN_MODELS: &[&str] = &[
    "contact",
    "voter",
    "two_type",
    "two_type_reordered",
    "two_stage",
    "gbt",
    "noisy_contact",
];

/// Parameter names and default values for a built-in model.
pub fn default_params(name: &str) -> Result<Params> {
    let pairs: &[(&str, f64)] = match name {
        "contact" => &[("lambda", 2.0), ("death", 1.0)],
        "voter" => &[("rate", 1.0)],
        "two_type" | "two_type_reordered" => {
            &[("lambda1", 2.0), ("lambda2", 3.0), ("delta1", 1.0), ("delta2", 1.0)]
        }
        "two_stage" => &[("lambda", 4.0), ("gamma", 1.0), ("delta", 0.5)],
        "gbt" => &[("beta1", 2.0), ("beta2", 3.0), ("delta1", 1.0), ("delta2", 1.0)],
        "noisy_contact" => &[("lambda", 1.5), ("death", 1.0), ("epsilon", 0.2)],
        _ => return Err(unknown(name)),
    };
    Ok(pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect())
}

fn unknown(name: &str) -> Error {
    Error::Domain(format!(
        "unknown model '{name}'; built-in models are {}",
        BUILTIN_MODELS.join(", ")
    ))
}

/// Rows indexed by neighbour `b`, columns by affected type `a`; the rate is
/// forced to zero on null pairs.
fn layer(rows: &[&[Particle]], rate: impl Fn(Particle, Particle) -> f64) -> Result<Layer> {
    let map = InteractionMap::from_neighbor_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())?;
    let rates = RateTable::from_fn(map.n(), |a, b| if map.get(a, b) == a { 0.0 } else { rate(a, b) })?;
    Layer::new(map, rates)
}

fn labels(names: &[&str]) -> Option<Vec<String>> {
    Some(names.iter().map(|s| s.to_string()).collect())
}

/// Builds a catalog model. Every parameter of the model must be supplied and
/// no others; `w` is the kernel mass used for constant-rate rows.
pub fn builtin_model(name: &str, params: &Params, w: f64) -> Result<ModelSpec> {
    let expected = default_params(name)?;
    if let Some(k) = params.keys().find(|k| !expected.contains_key(*k)) {
        return Err(Error::Domain(format!("model '{name}' has no parameter '{k}'")));
    }
    if let Some(k) = expected.keys().find(|k| !params.contains_key(*k)) {
        return Err(Error::Domain(format!("model '{name}' is missing parameter '{k}'")));
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::Domain(format!("kernel mass W must be positive, got {w}")));
    }
    let p = |k: &str| params[k];
    match name {
        "contact" => {
            let (lambda, death) = (p("lambda"), p("death"));
            let l = layer(&[&[0, 0], &[1, 0]], |a, _| if a == 0 { lambda } else { death / w })?;
            ModelSpec::new(vec![l], labels(&["empty", "occupied"]))
        }
        "voter" => {
            let r = p("rate");
            ModelSpec::new(vec![layer(&[&[0, 0], &[1, 1]], |_, _| r)?], None)
        }
        "two_type" => {
            let (l1, l2, d1, d2) = (p("lambda1"), p("lambda2"), p("delta1"), p("delta2"));
            let l = layer(&[&[0, 0, 0], &[1, 0, 0], &[2, 0, 0]], |a, b| match (a, b) {
                (0, 1) => l1,
                (0, 2) => l2,
                (1, _) => d1 / w,
                _ => d2 / w,
            })?;
            ModelSpec::new(vec![l], labels(&["empty", "A", "B"]))
        }
        "two_type_reordered" => {
            // type 0 is the first species, type 1 the empty site
            let (b0, b2, d0, d2) = (p("lambda1"), p("lambda2"), p("delta1"), p("delta2"));
            let l = layer(&[&[1, 0, 1], &[1, 1, 1], &[1, 2, 1]], |a, b| match (a, b) {
                (0, _) => d0 / w,
                (1, 0) => b0,
                (1, 2) => b2,
                _ => d2 / w,
            })?;
            ModelSpec::new(vec![l], labels(&["A", "empty", "B"]))
        }
        "two_stage" => {
            // 0 empty, 1 young, 2 mature: 0 -> 1 at lambda per mature neighbour,
            // 1 -> 2 at gamma, 1 -> 0 at 1 + delta, 2 -> 0 at 1
            let (lambda, gamma, delta) = (p("lambda"), p("gamma"), p("delta"));
            let births = layer(&[&[0, 0, 0], &[0, 0, 0], &[1, 0, 0]], |a, _| match a {
                0 => lambda,
                1 => (1.0 + delta) / w,
                _ => 1.0 / w,
            })?;
            let maturation = layer(&[&[0, 2, 2], &[0, 2, 2], &[0, 2, 2]], |_, _| gamma / w)?;
            ModelSpec::new(vec![births, maturation], labels(&["empty", "young", "mature"]))
        }
        "gbt" => {
            let (b1, b2, d1, d2) = (p("beta1"), p("beta2"), p("delta1"), p("delta2"));
            let j1 = layer(&[&[1, 0, 1], &[1, 1, 1], &[1, 1, 1]], |a, _| match a {
                0 => d1 / w,
                1 => b1,
                _ => d2 / w,
            })?;
            let j2 = layer(&[&[0, 1, 2], &[0, 1, 2], &[2, 2, 2]], |_, _| b2)?;
            ModelSpec::new(vec![j1, j2], labels(&["bushes", "grass", "trees"]))
        }
        "noisy_contact" => {
            let (lambda, death, eps) = (p("lambda"), p("death"), p("epsilon"));
            let contact = layer(&[&[0, 0], &[1, 0]], |a, _| if a == 0 { lambda } else { death / w })?;
            let noise = layer(&[&[1, 1], &[1, 1]], |_, _| eps / w)?;
            ModelSpec::new(vec![contact, noise], labels(&["empty", "occupied"]))
        }
        _ => Err(unknown(name)),
    }
}

/// [`builtin_model`] with defaults overridden by `overrides`.
pub fn builtin_with_defaults(name: &str, overrides: &Params, w: f64) -> Result<ModelSpec> {
    let mut params = default_params(name)?;
    for (k, v) in overrides {
        if !params.contains_key(k) {
            return Err(Error::Domain(format!("model '{name}' has no parameter '{k}'")));
        }
        params.insert(k.clone(), *v);
    }
    builtin_model(name, &params, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attractive::check_ims_attractive;
    use crate::permutation::{apply_permutation, Permutation};

    fn default(name: &str) -> ModelSpec {
        builtin_with_defaults(name, &Params::new(), 2.0).unwrap()
    }

    #[test]
    fn reordered_two_type_is_the_swap() {
        let mut p = Params::new();
        for (k, v) in [("lambda1", 1.7), ("lambda2", 2.9), ("delta1", 0.6), ("delta2", 1.3)] {
            p.insert(k.into(), v);
        }
        let a = builtin_model("two_type", &p, 2.0).unwrap();
        let b = builtin_model("two_type_reordered", &p, 2.0).unwrap();
        let swapped = apply_permutation(&a, &Permutation::swap(2, 0, 1).unwrap()).unwrap();
        assert_eq!(swapped, b);
    }

    #[test]
    fn attractive_catalog_entries() {
        for name in ["contact", "voter", "two_type_reordered", "two_stage", "gbt", "noisy_contact"] {
            let v = check_ims_attractive(&default(name));
            assert!(v.attractive, "{name}: {:?}", v.violations);
        }
        assert!(!check_ims_attractive(&default("two_type")).attractive);
    }

    #[test]
    fn contact_rates() {
        let m = default("contact");
        let l = &m.layers()[0];
        assert_eq!(l.rate(0, 1), 2.0);
        assert_eq!(l.rate(1, 0), 0.5);
        assert_eq!(l.rate(1, 1), 0.5);
        assert_eq!(l.rate(0, 0), 0.0);
    }

    #[test]
    fn parameter_errors() {
        assert!(builtin_model("contact", &Params::new(), 2.0).is_err());
        let mut p = default_params("contact").unwrap();
        p.insert("bogus".into(), 1.0);
        assert!(builtin_model("contact", &p, 2.0).is_err());
        assert!(builtin_with_defaults("nope", &Params::new(), 2.0).is_err());
        assert!(builtin_with_defaults("contact", &Params::new(), 0.0).is_err());
    }
}
