//! Relabelling particle types and searching for attractive orderings.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::attractive::check_ims_attractive;
use crate::error::{Error, Result};
use crate::map::{InteractionMap, Layer, ModelSpec, Particle, RateTable};

/// Largest `n` accepted by [`search_orderings`]; `(n+1)!` orderings are tried.
pub const MAX_SEARCH_N: Particle = 7;

/// A bijection on `0..=n`, stored as its image vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Permutation {
    image: Vec<Particle>,
}

impl Permutation {
    pub fn new(image: Vec<Particle>) -> Result<Self> {
        let k = image.len();
        if k == 0 || k > u8::MAX as usize {
            return Err(Error::Domain(format!("permutation of size {k} not supported")));
        }
        let mut seen = vec![false; k];
        for &v in &image {
            let slot = seen
                .get_mut(v as usize)
                .ok_or_else(|| Error::Domain(format!("{v} is outside 0..{k}")))?;
            if *slot {
                return Err(Error::Domain(format!("{v} appears twice; not a bijection")));
            }
            *slot = true;
        }
        Ok(Self { image })
    }

    pub fn identity(n: Particle) -> Self {
        Self {
            image: (0..=n).collect(),
        }
    }

    /// Exchanges `i` and `j`.
    pub fn swap(n: Particle, i: Particle, j: Particle) -> Result<Self> {
        if i > n || j > n {
            return Err(Error::Domain(format!("swap ({i},{j}) outside 0..={n}")));
        }
        let mut image: Vec<Particle> = (0..=n).collect();
        image.swap(i as usize, j as usize);
        Ok(Self { image })
    }

    pub fn n(&self) -> Particle {
        (self.image.len() - 1) as Particle
    }

    #[inline]
    pub fn apply(&self, a: Particle) -> Particle {
        self.image[a as usize]
    }

    pub fn image(&self) -> &[Particle] {
        &self.image
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.image.len()];
        for (a, &pa) in self.image.iter().enumerate() {
            inv[pa as usize] = a as Particle;
        }
        Self { image: inv }
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        if self.image.len() != other.image.len() {
            return Err(Error::Domain("composing permutations of different sizes".into()));
        }
        Ok(Self {
            image: other.image.iter().map(|&a| self.apply(a)).collect(),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(a, &v)| a == v as usize)
    }
}

impl std::fmt::Display for Permutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts = self
            .image
            .iter()
            .enumerate()
            .map(|(a, v)| format!("{a}->{v}"))
            .join(", ");
        write!(f, "({parts})")
    }
}

/// Relabels every type `a` as `pi(a)`.
///
/// Maps become `J'(a,b) = pi(J(pi^-1(a), pi^-1(b)))`, rates
/// `lambda'_ab = lambda_{pi^-1(a), pi^-1(b)}`, and labels move with their types.
pub fn apply_permutation(model: &ModelSpec, pi: &Permutation) -> Result<ModelSpec> {
    if pi.n() != model.n() {
        return Err(Error::Domain(format!(
            "permutation acts on 0..={} but model has n={}",
            pi.n(),
            model.n()
        )));
    }
    let inv = pi.inverse();
    let n = model.n();
    let layers = model
        .layers()
        .iter()
        .map(|layer| {
            let map = InteractionMap::from_fn(n, |a, b| {
                pi.apply(layer.map.get(inv.apply(a), inv.apply(b)))
            })?;
            let rates = RateTable::from_fn(n, |a, b| layer.rates.get(inv.apply(a), inv.apply(b)))?;
            Layer::new(map, rates)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = model
        .labels()
        .map(|labels| (0..=n).map(|a| labels[inv.apply(a) as usize].clone()).collect());
    ModelSpec::new(layers, labels)
}

/// Every ordering under which the model is attractive, in lexicographic
/// order of the image vectors.
pub fn search_orderings(model: &ModelSpec) -> Result<Vec<Permutation>> {
    let n = model.n();
    if n > MAX_SEARCH_N {
        return Err(Error::Capacity {
            what: "orderings search n",
            got: n as u128,
            limit: MAX_SEARCH_N as u128,
        });
    }
    let mut found = Vec::new();
    for image in (0..=n).permutations(n as usize + 1) {
        let pi = Permutation { image };
        if check_ims_attractive(&apply_permutation(model, &pi)?).attractive {
            found.push(pi);
        }
    }
    Ok(found)
}
