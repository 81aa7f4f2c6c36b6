//! Interaction-map systems on finite lattices.
//!
//! A model is a list of layers, each an interaction map `J(a, b)` with a rate
//! table `lambda_ab`; a site of type `a` next to a site of type `b` becomes
//! `J(a, b)` at rate `lambda_ab * phi(x, y)`.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractive;
pub mod catalog;
pub mod cftp;
#[cfg(feature = "cli")]
pub mod cli;
pub mod equivalence;
pub mod error;
pub mod lattice;
pub mod map;
pub mod model_file;
pub mod oracle;
pub mod permutation;
pub mod sim;

pub use attractive::{
    check_ims_attractive, check_map_attractive, check_rate_restrictions, AttractivenessVerdict,
    Condition, Violation,
};
pub use error::{Error, Result};
pub use lattice::{
    build_lattice, compare_configs, extremal, random_ordered_pair, Boundary, Configuration, Kernel, Lattice, Offset,
    OrderRelation,
};
pub use map::{canonicalize, classify_pair, InteractionClass, InteractionMap, Layer, ModelSpec, Particle, RateTable};
pub use permutation::{apply_permutation, search_orderings, Permutation};
