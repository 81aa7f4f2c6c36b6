//! Brute-force verification on tiny lattices.
//!
//! Everything here works on the full configuration space `S^Lambda`, so it is
//! only usable for a handful of sites. These routines share no code path with
//! the simulator beyond the model and lattice types.

mod coupled;
mod monotone;
mod stationary;
mod upsets;

pub use coupled::{
    build_coupled_generator, coupled_order_preserved, CoupledGenerator, CoupledOrderReport,
    CoupledTransition, CoupledTransitionKind, OrderEscape,
};
pub use monotone::{
    generator_monotone, generator_monotone_with, semigroup_monotone, semigroup_monotone_with,
    transition_matrix, MonotoneCounterexample, MonotonicityReport,
};
pub use stationary::{stationary, Stationary};
pub use upsets::{enumerate_upsets, UpSet, MAX_UPSETS, MAX_UPSET_STATES};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::{Configuration, Lattice};
use crate::map::{ModelSpec, Particle};

/// Largest state count for which a generator is built.
pub const MAX_STATES: usize = 10_000;

/// Bijection between configurations and `0..(n+1)^sites`.
///
/// Base-`(n+1)` positional encoding with site 0 as the most significant
/// digit, so index order is lexicographic order of configuration lines.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    sites: usize,
    n: Particle,
    states: Vec<Configuration>,
}

impl StateSpace {
    pub fn new(sites: usize, n: Particle, limit: usize) -> Result<Self> {
        let base = n as u128 + 1;
        let count = (0..sites).try_fold(1u128, |acc, _| acc.checked_mul(base));
        let count = match count {
            Some(c) if c <= limit as u128 => c as usize,
            other => {
                return Err(Error::Capacity {
                    what: "state count",
                    got: other.unwrap_or(u128::MAX),
                    limit: limit as u128,
                })
            }
        };
        let mut space = Self {
            sites,
            n,
            states: Vec::with_capacity(count),
        };
        for i in 0..count {
            let c = space.decode(i);
            space.states.push(c);
        }
        Ok(space)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn n(&self) -> Particle {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &Configuration {
        &self.states[i]
    }

    pub fn states(&self) -> &[Configuration] {
        &self.states
    }

    pub fn encode(&self, c: &Configuration) -> usize {
        let base = self.n as usize + 1;
        c.values().iter().fold(0, |acc, &v| acc * base + v as usize)
    }

    pub fn decode(&self, mut i: usize) -> Configuration {
        let base = self.n as usize + 1;
        let mut v = vec![0; self.sites];
        for x in (0..self.sites).rev() {
            v[x] = (i % base) as Particle;
            i /= base;
        }
        Configuration::new(v)
    }

    /// Every `(i, j)` with `i != j` and `state(i) <= state(j)`.
    pub fn ordered_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, a) in self.states.iter().enumerate() {
            for (j, b) in self.states.iter().enumerate() {
                if i != j && a.le(b) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Dense generator `Q` over a [`StateSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub space: StateSpace,
    pub q: DMatrix<f64>,
}

impl GeneratorMatrix {
    /// Builds a generator from off-diagonal rates; the diagonal is set to the
    /// negative row sum.
    pub fn from_offdiagonal(space: StateSpace, mut q: DMatrix<f64>) -> Result<Self> {
        let k = space.len();
        if q.nrows() != k || q.ncols() != k {
            return Err(Error::Domain(format!(
                "generator is {}x{}, state space has {k} states",
                q.nrows(),
                q.ncols()
            )));
        }
        for i in 0..k {
            q[(i, i)] = 0.0;
            if let Some(j) = (0..k).find(|&j| !(q[(i, j)] >= 0.0)) {
                return Err(Error::Domain(format!("negative off-diagonal rate at ({i},{j})")));
            }
            let s: f64 = q.row(i).sum();
            q[(i, i)] = -s;
        }
        Ok(Self { space, q })
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.q[(from, to)]
    }

    /// Largest `|Q_ii|`.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.len()).map(|i| -self.q[(i, i)]).fold(0.0, f64::max)
    }
}

/// `Q[eta][eta^{xy}] += r(eta, x, y)` over every layer and ordered pair.
pub fn build_generator(model: &ModelSpec, lattice: &Lattice) -> Result<GeneratorMatrix> {
    let space = StateSpace::new(lattice.num_sites(), model.n(), MAX_STATES)?;
    let k = space.len();
    let mut q = DMatrix::zeros(k, k);
    for i in 0..k {
        let eta = space.state(i);
        for layer in model.layers() {
            for x in 0..lattice.num_sites() {
                let a = eta.get(x);
                for &(y, phi) in lattice.neighbors(x) {
                    let b = eta.get(y);
                    let to_type = layer.map.get(a, b);
                    let r = layer.rate(a, b) * phi;
                    if to_type == a || r == 0.0 {
                        continue;
                    }
                    let mut next = eta.clone();
                    next.values_mut()[x] = to_type;
                    q[(i, space.encode(&next))] += r;
                }
            }
        }
    }
    GeneratorMatrix::from_offdiagonal(space, q)
}
