//! Stationary law of a finite generator.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::GeneratorMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stationary {
    /// Indexed like the state space. Supported on one closed class.
    pub distribution: Vec<f64>,
    /// True when there is exactly one closed communicating class.
    pub unique: bool,
    /// Every closed class, each sorted, listed by smallest member.
    pub closed_classes: Vec<Vec<usize>>,
}

/// Solves `pi Q = 0`, `sum pi = 1` on the closed class holding the lowest
/// state index. When several closed classes exist, `unique` is false.
pub fn stationary(q: &GeneratorMatrix) -> Result<Stationary> {
    let k = q.len();
    let mut graph = DiGraph::<(), ()>::with_capacity(k, 0);
    let nodes: Vec<_> = (0..k).map(|_| graph.add_node(())).collect();
    for i in 0..k {
        for j in 0..k {
            if i != j && q.q[(i, j)] > 0.0 {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut comp = vec![0usize; k];
    let sccs = tarjan_scc(&graph);
    for (c, members) in sccs.iter().enumerate() {
        for v in members {
            comp[v.index()] = c;
        }
    }
    let mut closed: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, members)| {
            members.iter().all(|v| {
                graph
                    .neighbors(*v)
                    .all(|w| comp[w.index()] == *c)
            })
        })
        .map(|(_, members)| {
            let mut m: Vec<usize> = members.iter().map(|v| v.index()).collect();
            m.sort_unstable();
            m
        })
        .collect();
    closed.sort();
    let class = closed
        .first()
        .ok_or_else(|| Error::Domain("generator has no closed class".into()))?;
    let m = class.len();
    // transpose of Q restricted to the class, last row replaced by normalization
    let mut a = DMatrix::zeros(m, m);
    for (r, &i) in class.iter().enumerate() {
        for (c, &j) in class.iter().enumerate() {
            a[(c, r)] = q.q[(i, j)];
        }
    }
    let mut rhs = DVector::zeros(m);
    for c in 0..m {
        a[(m - 1, c)] = 1.0;
    }
    rhs[m - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Domain("singular stationary system".into()))?;
    let mut distribution = vec![0.0; k];
    for (r, &i) in class.iter().enumerate() {
        distribution[i] = sol[r].max(0.0);
    }
    let total: f64 = distribution.iter().sum();
    distribution.iter_mut().for_each(|p| *p /= total);
    Ok(Stationary {
        distribution,
        unique: closed.len() == 1,
        closed_classes: closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::StateSpace;

    #[test]
    fn two_state_chain() {
        let space = StateSpace::new(1, 1, 10).unwrap();
        let q = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 1.0, 0.0]);
        let g = GeneratorMatrix::from_offdiagonal(space, q).unwrap();
        let s = stationary(&g).unwrap();
        assert!(s.unique);
        assert!((s.distribution[0] - 0.25).abs() < 1e-12);
        assert!((s.distribution[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn absorbing_state() {
        let space = StateSpace::new(1, 1, 10).unwrap();
        let q = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let g = GeneratorMatrix::from_offdiagonal(space, q).unwrap();
        let s = stationary(&g).unwrap();
        assert!(s.unique);
        assert_eq!(s.distribution, vec![1.0, 0.0]);
    }

    #[test]
    fn two_absorbing_states_not_unique() {
        let space = StateSpace::new(1, 2, 10).unwrap();
        let q = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let g = GeneratorMatrix::from_offdiagonal(space, q).unwrap();
        let s = stationary(&g).unwrap();
        assert!(!s.unique);
        assert_eq!(s.closed_classes, vec![vec![0], vec![2]]);
        assert_eq!(s.distribution, vec![1.0, 0.0, 0.0]);
    }
}
