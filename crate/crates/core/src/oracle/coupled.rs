//! Basic coupling of two copies on a finite lattice.
//!
//! For every layer and ordered pair `(x, y)`, the up rates of the two copies
//! are matched by their minimum, and the same for down rates. With
//! `r~ = min(r1u, r2u) + min(r1d, r2d)` the pair moves jointly at rate `r~`,
//! the upper copy alone at `r2 - r~`, the lower copy alone at `r1 - r~`.

use serde::{Deserialize, Serialize};

use super::{StateSpace, MAX_STATES};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, Lattice};
use crate::map::{InteractionClass, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoupledTransitionKind {
    Joint,
    LowerOnly,
    UpperOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledTransition {
    /// State indices of `(eta', xi')`.
    pub to: (usize, usize),
    pub rate: f64,
    pub kind: CoupledTransitionKind,
}

/// Sparse `Q~` over all pairs of states; row `i * k + j` is `(state i, state j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledGenerator {
    pub space: StateSpace,
    pub rows: Vec<Vec<CoupledTransition>>,
    pub diag: Vec<f64>,
}

impl CoupledGenerator {
    pub fn pair_index(&self, eta: usize, xi: usize) -> usize {
        eta * self.space.len() + xi
    }

    pub fn transitions(&self, eta: usize, xi: usize) -> &[CoupledTransition] {
        &self.rows[self.pair_index(eta, xi)]
    }

    /// Total rate from `(eta, xi)` to each lower-copy target, summed over the
    /// upper coordinate. Indexed by state.
    pub fn lower_marginal(&self, eta: usize, xi: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.space.len()];
        for t in self.transitions(eta, xi) {
            if t.to.0 != eta {
                out[t.to.0] += t.rate;
            }
        }
        out
    }

    pub fn upper_marginal(&self, eta: usize, xi: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.space.len()];
        for t in self.transitions(eta, xi) {
            if t.to.1 != xi {
                out[t.to.1] += t.rate;
            }
        }
        out
    }
}

fn up_down(model: &ModelSpec, layer: usize, c: &Configuration, x: usize, y: usize, phi: f64) -> (u8, f64, f64) {
    let l = &model.layers()[layer];
    let (a, b) = (c.get(x), c.get(y));
    let r = l.rate(a, b) * phi;
    match l.map.class(a, b) {
        InteractionClass::Up => (l.map.get(a, b), r, 0.0),
        InteractionClass::Down => (l.map.get(a, b), 0.0, r),
        InteractionClass::Null => (a, 0.0, 0.0),
    }
}

fn with_site(c: &Configuration, x: usize, v: u8) -> Configuration {
    let mut next = c.clone();
    next.values_mut()[x] = v;
    next
}

/// `m1` drives the lower coordinate, `m2` the upper.
pub fn build_coupled_generator(m1: &ModelSpec, m2: &ModelSpec, lattice: &Lattice) -> Result<CoupledGenerator> {
    if m1.n() != m2.n() {
        return Err(Error::Domain(format!("models have n={} and n={}", m1.n(), m2.n())));
    }
    if m1.layers().len() != m2.layers().len() {
        return Err(Error::Domain("models have different numbers of layers".into()));
    }
    let space = StateSpace::new(lattice.num_sites(), m1.n(), MAX_STATES)?;
    let k = space.len();
    let pairs = (k as u128) * (k as u128);
    if pairs > MAX_STATES as u128 {
        return Err(Error::Capacity {
            what: "state-pair count",
            got: pairs,
            limit: MAX_STATES as u128,
        });
    }
    let mut rows = Vec::with_capacity(k * k);
    let mut diag = Vec::with_capacity(k * k);
    for i in 0..k {
        let eta = space.state(i);
        for j in 0..k {
            let xi = space.state(j);
            let mut row: Vec<CoupledTransition> = Vec::new();
            let mut push = |to: (usize, usize), rate: f64, kind| {
                if rate <= 0.0 {
                    return;
                }
                match row.iter_mut().find(|t| t.to == to && t.kind == kind) {
                    Some(t) => t.rate += rate,
                    None => row.push(CoupledTransition { to, rate, kind }),
                }
            };
            for layer in 0..m1.layers().len() {
                for x in 0..lattice.num_sites() {
                    for &(y, phi) in lattice.neighbors(x) {
                        let (t1, r1u, r1d) = up_down(m1, layer, eta, x, y, phi);
                        let (t2, r2u, r2d) = up_down(m2, layer, xi, x, y, phi);
                        let joint = r1u.min(r2u) + r1d.min(r2d);
                        let e1 = space.encode(&with_site(eta, x, t1));
                        let e2 = space.encode(&with_site(xi, x, t2));
                        push((e1, e2), joint, CoupledTransitionKind::Joint);
                        push((i, e2), r2u + r2d - joint, CoupledTransitionKind::UpperOnly);
                        push((e1, j), r1u + r1d - joint, CoupledTransitionKind::LowerOnly);
                    }
                }
            }
            diag.push(-row.iter().map(|t| t.rate).sum::<f64>());
            rows.push(row);
        }
    }
    Ok(CoupledGenerator { space, rows, diag })
}

/// A positive-rate move from an ordered pair to an unordered one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEscape {
    pub eta: Configuration,
    pub xi: Configuration,
    pub eta_next: Configuration,
    pub xi_next: Configuration,
    pub rate: f64,
    pub kind: CoupledTransitionKind,
}

impl std::fmt::Display for OrderEscape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "([{}], [{}]) -> ([{}], [{}]) at rate {} ({:?})",
            self.eta, self.xi, self.eta_next, self.xi_next, self.rate, self.kind
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledOrderReport {
    pub preserved: bool,
    pub counterexample: Option<OrderEscape>,
    /// Every escape, in order of the source pair index.
    pub escapes: Vec<OrderEscape>,
}

/// The ordered region `{eta <= xi}` is closed under `Q~` exactly when no
/// positive-rate transition leaves it.
pub fn coupled_order_preserved(q: &CoupledGenerator) -> CoupledOrderReport {
    let s = &q.space;
    let mut escapes = Vec::new();
    for i in 0..s.len() {
        for j in 0..s.len() {
            if !s.state(i).le(s.state(j)) {
                continue;
            }
            for t in q.transitions(i, j) {
                let (a, b) = (s.state(t.to.0), s.state(t.to.1));
                if !a.le(b) {
                    escapes.push(OrderEscape {
                        eta: s.state(i).clone(),
                        xi: s.state(j).clone(),
                        eta_next: a.clone(),
                        xi_next: b.clone(),
                        rate: t.rate,
                        kind: t.kind,
                    });
                }
            }
        }
    }
    CoupledOrderReport {
        preserved: escapes.is_empty(),
        counterexample: escapes.first().cloned(),
        escapes,
    }
}
