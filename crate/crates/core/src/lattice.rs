//! Finite lattices, neighbourhood kernels, configurations and pointwise rates.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{InteractionClass, ModelSpec, Particle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offset {
    pub delta: Vec<i64>,
    pub weight: f64,
}

/// The neighbourhood function `phi(x, y)`, given as translation-invariant
/// offsets (or the complete graph).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// `+-e_i` along every axis, weight 1.
    #[default]
    NearestNeighbor,
    /// Every offset with max-norm in `1..=range`, weight 1.
    Box { range: usize },
    /// Every other site, weight 1.
    Complete,
    Offsets { offsets: Vec<Offset> },
}

impl Kernel {
    fn offsets(&self, dim: usize) -> Result<Vec<Offset>> {
        match self {
            Kernel::NearestNeighbor => Ok((0..dim)
                .flat_map(|axis| {
                    [-1i64, 1].into_iter().map(move |s| {
                        let mut delta = vec![0; dim];
                        delta[axis] = s;
                        Offset { delta, weight: 1.0 }
                    })
                })
                .collect()),
            Kernel::Box { range } => {
                if *range == 0 {
                    return Err(Error::Domain("box kernel needs range >= 1".into()));
                }
                let r = *range as i64;
                let mut out = Vec::new();
                let mut delta = vec![-r; dim];
                loop {
                    if delta.iter().any(|&d| d != 0) {
                        out.push(Offset {
                            delta: delta.clone(),
                            weight: 1.0,
                        });
                    }
                    // odometer over [-r, r]^dim
                    let mut i = dim;
                    loop {
                        if i == 0 {
                            return Ok(out);
                        }
                        i -= 1;
                        if delta[i] < r {
                            delta[i] += 1;
                            break;
                        }
                        delta[i] = -r;
                    }
                }
            }
            Kernel::Offsets { offsets } => {
                for o in offsets {
                    if o.delta.len() != dim {
                        return Err(Error::Domain(format!(
                            "kernel offset {:?} has {} components, lattice has dimension {dim}",
                            o.delta,
                            o.delta.len()
                        )));
                    }
                    if o.delta.iter().all(|&d| d == 0) {
                        return Err(Error::Domain("kernel offset 0 would give phi(x,x) > 0".into()));
                    }
                    if !(o.weight >= 0.0) || !o.weight.is_finite() {
                        return Err(Error::Domain(format!("kernel weight {} must be finite and >= 0", o.weight)));
                    }
                }
                Ok(offsets.clone())
            }
            Kernel::Complete => unreachable!("complete graph has no offsets"),
        }
    }
}

/// A finite lattice in one or two dimensions with precomputed neighbour lists.
///
/// Sites are indexed row-major (last coordinate fastest). On periodic
/// lattices offsets that wrap onto the same site have their weights summed and
/// offsets that wrap onto the site itself are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    dims: Vec<usize>,
    boundary: Boundary,
    kernel: Kernel,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Lattice {
    pub fn new(dims: &[usize], boundary: Boundary, kernel: Kernel) -> Result<Self> {
        if dims.is_empty() || dims.len() > 2 {
            return Err(Error::Domain(format!(
                "lattice dimension must be 1 or 2, got {}",
                dims.len()
            )));
        }
        if let Some(i) = dims.iter().position(|&l| l == 0) {
            return Err(Error::Domain(format!("side length {i} is zero")));
        }
        let sites: usize = dims.iter().product();
        let neighbors = if kernel == Kernel::Complete {
            (0..sites)
                .map(|x| (0..sites).filter(|&y| y != x).map(|y| (y, 1.0)).collect())
                .collect()
        } else {
            let offsets = kernel.offsets(dims.len())?;
            (0..sites)
                .map(|x| {
                    let coords = coords_of(dims, x);
                    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                    for o in &offsets {
                        if o.weight == 0.0 {
                            continue;
                        }
                        if let Some(y) = shifted(dims, boundary, &coords, &o.delta) {
                            if y != x {
                                *acc.entry(y).or_insert(0.0) += o.weight;
                            }
                        }
                    }
                    acc.into_iter().collect()
                })
                .collect()
        };
        Ok(Self {
            dims: dims.to_vec(),
            boundary,
            kernel,
            neighbors,
        })
    }

    /// One-dimensional periodic nearest-neighbour ring.
    pub fn ring(len: usize) -> Result<Self> {
        Self::new(&[len], Boundary::Periodic, Kernel::NearestNeighbor)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn num_sites(&self) -> usize {
        self.neighbors.len()
    }

    /// `(y, phi(x, y))` for every `y` with `phi(x, y) > 0`, sorted by `y`.
    #[inline]
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.neighbors[x]
    }

    /// `phi(x, y)`, zero outside the neighbourhood.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        let nb = &self.neighbors[x];
        nb.binary_search_by_key(&y, |&(s, _)| s)
            .map(|i| nb[i].1)
            .unwrap_or(0.0)
    }

    /// Total kernel mass `sum_y phi(x, y)` at `x`.
    pub fn mass(&self, x: usize) -> f64 {
        self.neighbors[x].iter().map(|&(_, w)| w).sum()
    }

    pub fn max_mass(&self) -> f64 {
        (0..self.num_sites()).map(|x| self.mass(x)).fold(0.0, f64::max)
    }

    /// The common kernel mass if every site has the same one.
    pub fn uniform_mass(&self) -> Option<f64> {
        let m0 = self.mass(0);
        (0..self.num_sites())
            .all(|x| self.mass(x) == m0)
            .then_some(m0)
    }

    pub fn max_weight(&self) -> f64 {
        self.neighbors
            .iter()
            .flatten()
            .map(|&(_, w)| w)
            .fold(0.0, f64::max)
    }

    /// Number of ordered pairs `(x, y)` with `phi(x, y) > 0`.
    pub fn num_ordered_pairs(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// Shifts a configuration: the value at `x` moves to `x + shift`.
    /// Only meaningful on periodic lattices.
    pub fn translate(&self, eta: &Configuration, shift: &[i64]) -> Result<Configuration> {
        if self.boundary != Boundary::Periodic || shift.len() != self.dims.len() {
            return Err(Error::Domain("translation needs a periodic lattice and a matching shift".into()));
        }
        let mut out = vec![0; self.num_sites()];
        for (x, &v) in eta.values().iter().enumerate() {
            let y = shifted(&self.dims, Boundary::Periodic, &coords_of(&self.dims, x), shift)
                .expect("periodic shift always lands");
            out[y] = v;
        }
        Ok(Configuration::new(out))
    }
}

fn coords_of(dims: &[usize], mut x: usize) -> Vec<usize> {
    let mut c = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        c[i] = x % dims[i];
        x /= dims[i];
    }
    c
}

fn shifted(dims: &[usize], boundary: Boundary, coords: &[usize], delta: &[i64]) -> Option<usize> {
    let mut site = 0usize;
    for i in 0..dims.len() {
        let l = dims[i] as i64;
        let mut c = coords[i] as i64 + delta[i];
        match boundary {
            Boundary::Periodic => c = c.rem_euclid(l),
            Boundary::Free if c < 0 || c >= l => return None,
            Boundary::Free => {}
        }
        site = site * dims[i] + c as usize;
    }
    Some(site)
}

/// Free-function constructor mirroring [`Lattice::new`].
pub fn build_lattice(dims: &[usize], boundary: Boundary, kernel: Kernel) -> Result<Lattice> {
    Lattice::new(dims, boundary, kernel)
}

/// An assignment of a particle type to every site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration(Vec<Particle>);

impl Configuration {
    pub fn new(values: Vec<Particle>) -> Self {
        Self(values)
    }

    pub fn constant(sites: usize, value: Particle) -> Self {
        Self(vec![value; sites])
    }

    pub fn values(&self) -> &[Particle] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [Particle] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize) -> Particle {
        self.0[x]
    }

    /// Checks the configuration against a lattice and type count.
    pub fn validate(&self, sites: usize, n: Particle) -> Result<()> {
        if self.0.len() != sites {
            return Err(Error::Domain(format!(
                "configuration has {} sites, lattice has {sites}",
                self.0.len()
            )));
        }
        if let Some(x) = self.0.iter().position(|&v| v > n) {
            return Err(Error::Domain(format!(
                "site {x} holds type {} > n = {n}",
                self.0[x]
            )));
        }
        Ok(())
    }

    /// Number of sites holding each type `0..=n`.
    pub fn counts(&self, n: Particle) -> Vec<usize> {
        let mut c = vec![0; n as usize + 1];
        for &v in &self.0 {
            c[v as usize] += 1;
        }
        c
    }

    /// Sitewise `self <= other`; lengths must agree.
    pub fn le(&self, other: &Configuration) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for Configuration {
    /// Space-separated types in site order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split_whitespace()
            .map(|t| {
                t.parse::<Particle>()
                    .map_err(|_| Error::Domain(format!("bad particle type {t:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Configuration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderRelation {
    LessOrEqual,
    GreaterOrEqual,
    Equal,
    Incomparable,
}

impl OrderRelation {
    /// True for `LessOrEqual` and `Equal`.
    pub fn is_le(self) -> bool {
        matches!(self, OrderRelation::LessOrEqual | OrderRelation::Equal)
    }
}

pub fn compare_configs(eta: &Configuration, xi: &Configuration) -> Result<OrderRelation> {
    if eta.len() != xi.len() {
        return Err(Error::Domain(format!(
            "comparing configurations of {} and {} sites",
            eta.len(),
            xi.len()
        )));
    }
    let (mut le, mut ge) = (true, true);
    for (a, b) in eta.values().iter().zip(xi.values()) {
        le &= a <= b;
        ge &= a >= b;
    }
    Ok(match (le, ge) {
        (true, true) => OrderRelation::Equal,
        (true, false) => OrderRelation::LessOrEqual,
        (false, true) => OrderRelation::GreaterOrEqual,
        (false, false) => OrderRelation::Incomparable,
    })
}

/// The all-`0` and all-`n` configurations.
pub fn extremal(model: &ModelSpec, lattice: &Lattice) -> (Configuration, Configuration) {
    let sites = lattice.num_sites();
    (
        Configuration::constant(sites, 0),
        Configuration::constant(sites, model.n()),
    )
}

/// A uniformly random `eta` and a `xi >= eta` with each `xi(x)` uniform on
/// `eta(x)..=n`.
pub fn random_ordered_pair<R: rand::Rng + ?Sized>(
    sites: usize,
    n: Particle,
    rng: &mut R,
) -> (Configuration, Configuration) {
    let lower: Vec<Particle> = (0..sites).map(|_| rng.random_range(0..=n)).collect();
    let upper = lower.iter().map(|&a| rng.random_range(a..=n)).collect();
    (Configuration::new(lower), Configuration::new(upper))
}

/// Up and down rates at which `y` influences `x`, one entry per layer.
pub fn pair_rates(
    model: &ModelSpec,
    lattice: &Lattice,
    eta: &Configuration,
    x: usize,
    y: usize,
) -> Vec<(f64, f64)> {
    let phi = lattice.weight(x, y);
    let (a, b) = (eta.get(x), eta.get(y));
    model
        .layers()
        .iter()
        .map(|layer| {
            if phi == 0.0 {
                return (0.0, 0.0);
            }
            let r = layer.rates.get(a, b) * phi;
            match layer.map.class(a, b) {
                InteractionClass::Up => (r, 0.0),
                InteractionClass::Down => (0.0, r),
                InteractionClass::Null => (0.0, 0.0),
            }
        })
        .collect()
}

/// Total rate at which site `x` changes.
pub fn site_exit_rate(model: &ModelSpec, lattice: &Lattice, eta: &Configuration, x: usize) -> f64 {
    let a = eta.get(x);
    lattice
        .neighbors(x)
        .iter()
        .map(|&(y, phi)| {
            let b = eta.get(y);
            model
                .layers()
                .iter()
                .map(|layer| layer.rate(a, b) * phi)
                .sum::<f64>()
        })
        .sum()
}

/// Global upper bound `c` on every pair rate: max rate times max weight.
pub fn rate_bound(model: &ModelSpec, lattice: &Lattice) -> f64 {
    model.max_rate() * lattice.max_weight()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_of_four_has_two_unit_neighbors() {
        let lat = Lattice::ring(4).unwrap();
        for x in 0..4 {
            assert_eq!(lat.neighbors(x).len(), 2);
            assert!(lat.neighbors(x).iter().all(|&(_, w)| w == 1.0));
        }
        assert_eq!(lat.neighbors(0), &[(1, 1.0), (3, 1.0)]);
    }

    #[test]
    fn ring_of_two_aliases_into_one_neighbor_of_weight_two() {
        let lat = Lattice::ring(2).unwrap();
        assert_eq!(lat.neighbors(0), &[(1, 2.0)]);
        assert_eq!(lat.neighbors(1), &[(0, 2.0)]);
    }

    #[test]
    fn ring_of_one_has_no_neighbors() {
        let lat = Lattice::ring(1).unwrap();
        assert!(lat.neighbors(0).is_empty());
    }

    #[test]
    fn free_square_corners_have_two_neighbors() {
        let lat = Lattice::new(&[3, 3], Boundary::Free, Kernel::NearestNeighbor).unwrap();
        for corner in [0, 2, 6, 8] {
            assert_eq!(lat.neighbors(corner).len(), 2);
        }
        assert_eq!(lat.neighbors(4).len(), 4);
        assert_eq!(lat.neighbors(1).len(), 3);
        assert_eq!(lat.neighbors(0), &[(1, 1.0), (3, 1.0)]);
    }

    #[test]
    fn zero_side_rejected() {
        assert!(matches!(
            Lattice::new(&[3, 0], Boundary::Free, Kernel::NearestNeighbor),
            Err(Error::Domain(_))
        ));
        assert!(Lattice::new(&[2, 2, 2], Boundary::Free, Kernel::NearestNeighbor).is_err());
    }

    #[test]
    fn box_kernel_counts() {
        let lat = Lattice::new(&[9], Boundary::Periodic, Kernel::Box { range: 2 }).unwrap();
        assert_eq!(lat.neighbors(0).len(), 4);
        let lat = Lattice::new(&[5, 5], Boundary::Periodic, Kernel::Box { range: 1 }).unwrap();
        assert_eq!(lat.neighbors(12).len(), 8);
        assert_eq!(lat.uniform_mass(), Some(8.0));
    }

    #[test]
    fn complete_graph() {
        let lat = Lattice::new(&[4], Boundary::Free, Kernel::Complete).unwrap();
        assert_eq!(lat.neighbors(2), &[(0, 1.0), (1, 1.0), (3, 1.0)]);
    }

    #[test]
    fn bad_offsets_rejected() {
        let zero = Kernel::Offsets {
            offsets: vec![Offset { delta: vec![0], weight: 1.0 }],
        };
        assert!(Lattice::new(&[4], Boundary::Free, zero).is_err());
        let neg = Kernel::Offsets {
            offsets: vec![Offset { delta: vec![1], weight: -1.0 }],
        };
        assert!(Lattice::new(&[4], Boundary::Free, neg).is_err());
    }

    #[test]
    fn compare_examples() {
        let c = |s: &str| s.parse::<Configuration>().unwrap();
        assert_eq!(compare_configs(&c("0 0"), &c("1 2")).unwrap(), OrderRelation::LessOrEqual);
        assert_eq!(compare_configs(&c("0 2"), &c("1 0")).unwrap(), OrderRelation::Incomparable);
        assert_eq!(compare_configs(&c("1 2"), &c("1 2")).unwrap(), OrderRelation::Equal);
        assert_eq!(compare_configs(&c("2 2"), &c("1 2")).unwrap(), OrderRelation::GreaterOrEqual);
        assert!(compare_configs(&c("0"), &c("1 2")).is_err());
    }

    #[test]
    fn configuration_line_round_trip() {
        let c: Configuration = "0 2 1 0".parse().unwrap();
        assert_eq!(c.to_string(), "0 2 1 0");
        assert!("0 x".parse::<Configuration>().is_err());
        assert!(c.validate(4, 2).is_ok());
        assert!(c.validate(4, 1).is_err());
        assert!(c.validate(3, 2).is_err());
    }
}
