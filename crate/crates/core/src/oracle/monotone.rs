//! Stochastic monotonicity of a finite generator, checked two ways: through
//! the generator's rates into and out of up-sets, and through the transition
//! matrices `P(t)` computed by uniformization.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::upsets::{enumerate_upsets, UpSet};
use super::GeneratorMatrix;
use crate::error::{Error, Result};
use crate::lattice::Configuration;

/// A pair `lower <= upper` and an up-set on which the ordering of rates or
/// probabilities fails. `lhs` belongs to `lower`, `rhs` to `upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCounterexample {
    pub lower: Configuration,
    pub upper: Configuration,
    pub upset: Vec<Configuration>,
    /// Human-readable form of the inequality that failed.
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub monotone: bool,
    pub counterexample: Option<MonotoneCounterexample>,
}

impl MonotonicityReport {
    fn ok() -> Self {
        Self {
            monotone: true,
            counterexample: None,
        }
    }
}

impl std::fmt::Display for MonotonicityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.counterexample {
            None => write!(f, "monotone"),
            Some(c) => {
                writeln!(f, "NOT monotone")?;
                writeln!(f, "  lower: {}", c.lower)?;
                writeln!(f, "  upper: {}", c.upper)?;
                if let Some(t) = c.time {
                    writeln!(f, "  t: {t}")?;
                }
                let members: Vec<String> = c.upset.iter().map(|s| format!("[{s}]")).collect();
                writeln!(f, "  up-set: {{{}}}", members.join(", "))?;
                write!(f, "  violated: {}  ({} vs {})", c.inequality, c.lhs, c.rhs)
            }
        }
    }
}

fn members(q: &GeneratorMatrix, g: &UpSet) -> Vec<Configuration> {
    (0..q.len())
        .filter(|&i| g.contains(i))
        .map(|i| q.space.state(i).clone())
        .collect()
}

/// Generator criterion, with up-sets supplied by the caller.
///
/// For every `eta <= xi` and up-set `G`: if neither is in `G`, the rate from
/// `eta` into `G` is at most the rate from `xi`; if both are in `G`, the rate
/// from `eta` out of `G` is at least the rate from `xi`.
pub fn generator_monotone_with(q: &GeneratorMatrix, upsets: &[UpSet]) -> MonotonicityReport {
    let k = q.len();
    let scale = q.q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = 1e-12 * (1.0 + scale);
    let pairs = q.space.ordered_pairs();
    let mut flow = vec![0.0; k];
    for g in upsets {
        // into G for states outside, out of G for states inside
        for (i, f) in flow.iter_mut().enumerate() {
            let inside = g.contains(i);
            *f = (0..k)
                .filter(|&j| j != i && g.contains(j) != inside)
                .map(|j| q.q[(i, j)])
                .sum();
        }
        for &(lo, hi) in &pairs {
            let (lin, hin) = (g.contains(lo), g.contains(hi));
            let broken = match (lin, hin) {
                (false, false) => flow[lo] > flow[hi] + eps,
                (true, true) => flow[lo] + eps < flow[hi],
                _ => false,
            };
            if broken {
                let inequality = if lin {
                    "rate(lower -> out of G) >= rate(upper -> out of G)"
                } else {
                    "rate(lower -> G) <= rate(upper -> G)"
                };
                return MonotonicityReport {
                    monotone: false,
                    counterexample: Some(MonotoneCounterexample {
                        lower: q.space.state(lo).clone(),
                        upper: q.space.state(hi).clone(),
                        upset: members(q, g),
                        inequality: inequality.into(),
                        lhs: flow[lo],
                        rhs: flow[hi],
                        time: None,
                    }),
                };
            }
        }
    }
    MonotonicityReport::ok()
}

/// Generator criterion over every up-set of the state space.
pub fn generator_monotone(q: &GeneratorMatrix) -> Result<MonotonicityReport> {
    let upsets = enumerate_upsets(&q.space)?;
    Ok(generator_monotone_with(q, &upsets))
}

/// `exp(tQ)` by uniformization: `sum_k Pois(k; c t) (I + Q/c)^k` with
/// `c = max |Q_ii|`, truncated once the Poisson tail is below `tol / 10`.
pub fn transition_matrix(q: &GeneratorMatrix, t: f64, tol: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let k = q.len();
    let c = q.max_exit_rate();
    if c == 0.0 || t == 0.0 {
        return Ok(DMatrix::identity(k, k));
    }
    let step = DMatrix::identity(k, k) + &q.q / c;
    let mean = c * t;
    let ln_mean = mean.ln();
    let cutoff = tol / 10.0;
    let mut power = DMatrix::identity(k, k);
    let mut acc = DMatrix::zeros(k, k);
    let mut log_w = -mean;
    let mut j: u64 = 0;
    loop {
        let w = log_w.exp();
        if w > 0.0 {
            acc += &power * w;
        }
        // geometric bound on the remaining Poisson mass once past the mode
        let next = (j + 1) as f64;
        if next > mean {
            let next_w = (log_w + ln_mean - next.ln()).exp();
            let tail = next_w / (1.0 - mean / (next + 1.0));
            if tail < cutoff {
                break;
            }
        }
        if j > 10_000_000 {
            return Err(Error::Capacity {
                what: "uniformization terms",
                got: j as u128,
                limit: 10_000_000,
            });
        }
        power = &power * &step;
        j += 1;
        log_w += ln_mean - (j as f64).ln();
    }
    Ok(acc)
}

/// Semigroup criterion with caller-supplied up-sets: for every time, every
/// up-set `G` and every `eta <= xi`, `P_t(eta, G) <= P_t(xi, G) + tol`.
pub fn semigroup_monotone_with(
    q: &GeneratorMatrix,
    upsets: &[UpSet],
    times: &[f64],
    tol: f64,
) -> Result<MonotonicityReport> {
    let pairs = q.space.ordered_pairs();
    let k = q.len();
    for &t in times {
        let p = transition_matrix(q, t, tol)?;
        for g in upsets {
            let mass: Vec<f64> = (0..k)
                .map(|i| (0..k).filter(|&j| g.contains(j)).map(|j| p[(i, j)]).sum())
                .collect();
            if let Some(&(lo, hi)) = pairs.iter().find(|&&(lo, hi)| mass[lo] > mass[hi] + tol) {
                return Ok(MonotonicityReport {
                    monotone: false,
                    counterexample: Some(MonotoneCounterexample {
                        lower: q.space.state(lo).clone(),
                        upper: q.space.state(hi).clone(),
                        upset: members(q, g),
                        inequality: "P_t(lower, G) <= P_t(upper, G) + tol".into(),
                        lhs: mass[lo],
                        rhs: mass[hi],
                        time: Some(t),
                    }),
                });
            }
        }
    }
    Ok(MonotonicityReport::ok())
}

pub fn semigroup_monotone(q: &GeneratorMatrix, times: &[f64], tol: f64) -> Result<MonotonicityReport> {
    let upsets = enumerate_upsets(&q.space)?;
    semigroup_monotone_with(q, &upsets, times, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::StateSpace;

    fn two_state(up: f64, down: f64) -> GeneratorMatrix {
        let space = StateSpace::new(1, 1, 10).unwrap();
        let q = DMatrix::from_row_slice(2, 2, &[0.0, up, down, 0.0]);
        GeneratorMatrix::from_offdiagonal(space, q).unwrap()
    }

    #[test]
    fn uniformization_matches_closed_form() {
        // two-state chain: P_t(0,1) = up/(up+down) (1 - e^{-(up+down) t})
        let (up, down) = (1.3, 0.4);
        let g = two_state(up, down);
        for t in [0.0, 0.1, 1.0, 10.0, 50.0] {
            let p = transition_matrix(&g, t, 1e-12).unwrap();
            let s = up + down;
            let want = up / s * (1.0 - (-s * t).exp());
            assert!((p[(0, 1)] - want).abs() < 1e-10, "t={t}: {} vs {want}", p[(0, 1)]);
            assert!((p.row(0).sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_generator_is_identity_and_monotone() {
        let g = two_state(0.0, 0.0);
        let p = transition_matrix(&g, 3.0, 1e-9).unwrap();
        assert_eq!(p, DMatrix::identity(2, 2));
        assert!(generator_monotone(&g).unwrap().monotone);
        assert!(semigroup_monotone(&g, &[0.1, 1.0], 1e-9).unwrap().monotone);
    }

    #[test]
    fn bad_arguments() {
        let g = two_state(1.0, 1.0);
        assert!(transition_matrix(&g, -1.0, 1e-9).is_err());
        assert!(transition_matrix(&g, 1.0, 0.0).is_err());
    }
}
