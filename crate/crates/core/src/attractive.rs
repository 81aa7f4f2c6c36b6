//! Attractiveness certification for maps and for whole models.
//!
//! The map conditions compare every pair of type pairs `(a1,b1) <= (a2,b2)`
//! (componentwise):
//!
//! * (a) both up: `J(a1,b1) <= J(a2,b2)`
//! * (b) both down: `J(a1,b1) <= J(a2,b2)`
//! * (c) first up, second down or null: `J(a1,b1) <= a2`
//! * (d) first up or null, second down: `a1 <= J(a2,b2)`
//!
//! With pair rates of the form `lambda_{eta(x),eta(y)} phi(x,y)`, the
//! configuration-level rate conditions only bite on up/up pairs that can jump
//! over `a2` and down/down pairs that can jump under `a1`, so they reduce to
//! finitely many comparisons of table entries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{InteractionClass, InteractionMap, Layer, ModelSpec, Particle, RateTable};

use InteractionClass::{Down, Null, Up};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    A,
    B,
    C,
    D,
    RateUp,
    RateDown,
}

impl Condition {
    pub fn tag(self) -> &'static str {
        match self {
            Condition::A => "a",
            Condition::B => "b",
            Condition::C => "c",
            Condition::D => "d",
            Condition::RateUp => "rate-up",
            Condition::RateDown => "rate-down",
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// One offending ordered pair of type pairs, `first <= second`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub layer: Option<usize>,
    pub condition: Condition,
    pub first: (Particle, Particle),
    pub second: (Particle, Particle),
    pub detail: String,
}

impl Violation {
    /// Re-evaluates the named condition on `first <= second` alone.
    ///
    /// Returns true when the condition is indeed broken there.
    pub fn confirms(&self, map: &InteractionMap, rates: Option<&RateTable>) -> bool {
        let (a1, b1) = self.first;
        let (a2, b2) = self.second;
        if a1 > a2 || b1 > b2 {
            return false;
        }
        let (c1, c2) = (map.class(a1, b1), map.class(a2, b2));
        let (j1, j2) = (map.get(a1, b1), map.get(a2, b2));
        match self.condition {
            Condition::A => c1 == Up && c2 == Up && j1 > j2,
            Condition::B => c1 == Down && c2 == Down && j1 > j2,
            Condition::C => c1 == Up && c2 != Up && j1 > a2,
            Condition::D => c1 != Down && c2 == Down && a1 > j2,
            Condition::RateUp => rates.is_some_and(|r| {
                c1 == Up && c2 == Up && j1 > a2 && r.get(a1, b1) > r.get(a2, b2)
            }),
            Condition::RateDown => rates.is_some_and(|r| {
                c1 == Down && c2 == Down && j2 < a1 && r.get(a1, b1) < r.get(a2, b2)
            }),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(layer) = self.layer {
            write!(f, "layer {layer}: ")?;
        }
        write!(
            f,
            "({}) ({},{}) <= ({},{}): {}",
            self.condition, self.first.0, self.first.1, self.second.0, self.second.1, self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractivenessVerdict {
    pub attractive: bool,
    pub violations: Vec<Violation>,
}

impl AttractivenessVerdict {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            attractive: violations.is_empty(),
            violations,
        }
    }

    pub fn has(&self, condition: Condition, first: (Particle, Particle), second: (Particle, Particle)) -> bool {
        self.violations
            .iter()
            .any(|v| v.condition == condition && v.first == first && v.second == second)
    }
}

/// Every `(p1, p2)` with `p1 <= p2` componentwise.
fn ordered_pair_pairs(
    n: Particle,
) -> impl Iterator<Item = ((Particle, Particle), (Particle, Particle))> {
    (0..=n).flat_map(move |a1| {
        (0..=n).flat_map(move |b1| {
            (a1..=n).flat_map(move |a2| (b1..=n).map(move |b2| ((a1, b1), (a2, b2))))
        })
    })
}

/// Checks conditions (a)-(d) exhaustively and lists every violation.
pub fn check_map_attractive(map: &InteractionMap) -> AttractivenessVerdict {
    let mut out = Vec::new();
    for ((a1, b1), (a2, b2)) in ordered_pair_pairs(map.n()) {
        let (c1, c2) = (map.class(a1, b1), map.class(a2, b2));
        let (j1, j2) = (map.get(a1, b1), map.get(a2, b2));
        let mut push = |condition, detail: String| {
            out.push(Violation {
                layer: None,
                condition,
                first: (a1, b1),
                second: (a2, b2),
                detail,
            })
        };
        match (c1, c2) {
            (Up, Up) if j1 > j2 => push(Condition::A, format!("J({a1},{b1})={j1} > J({a2},{b2})={j2}")),
            (Down, Down) if j1 > j2 => push(Condition::B, format!("J({a1},{b1})={j1} > J({a2},{b2})={j2}")),
            _ => {}
        }
        if c1 == Up && matches!(c2, Down | Null) && j1 > a2 {
            push(Condition::C, format!("J({a1},{b1})={j1} > a2={a2}"));
        }
        if matches!(c1, Up | Null) && c2 == Down && a1 > j2 {
            push(Condition::D, format!("a1={a1} > J({a2},{b2})={j2}"));
        }
    }
    AttractivenessVerdict::from_violations(out)
}

/// Checks the pairwise rate restrictions for an attractive map.
///
/// Fails with a precondition error when the map itself is not attractive,
/// since the pairwise reduction is only valid for attractive maps.
pub fn check_rate_restrictions(map: &InteractionMap, rates: &RateTable) -> Result<AttractivenessVerdict> {
    if map.n() != rates.n() {
        return Err(Error::Domain(format!(
            "map has n={} but rate table has n={}",
            map.n(),
            rates.n()
        )));
    }
    let map_verdict = check_map_attractive(map);
    if let Some(v) = map_verdict.violations.first() {
        return Err(Error::Precondition(format!("map is not attractive: {v}")));
    }
    let mut out = Vec::new();
    for ((a1, b1), (a2, b2)) in ordered_pair_pairs(map.n()) {
        let (c1, c2) = (map.class(a1, b1), map.class(a2, b2));
        let (l1, l2) = (rates.get(a1, b1), rates.get(a2, b2));
        if c1 == Up && c2 == Up && map.get(a1, b1) > a2 && l1 > l2 {
            out.push(Violation {
                layer: None,
                condition: Condition::RateUp,
                first: (a1, b1),
                second: (a2, b2),
                detail: format!(
                    "J({a1},{b1})={} jumps over a2={a2} but lambda_{a1}{b1}={l1} > lambda_{a2}{b2}={l2}",
                    map.get(a1, b1)
                ),
            });
        }
        if c1 == Down && c2 == Down && map.get(a2, b2) < a1 && l1 < l2 {
            out.push(Violation {
                layer: None,
                condition: Condition::RateDown,
                first: (a1, b1),
                second: (a2, b2),
                detail: format!(
                    "J({a2},{b2})={} jumps under a1={a1} but lambda_{a1}{b1}={l1} < lambda_{a2}{b2}={l2}",
                    map.get(a2, b2)
                ),
            });
        }
    }
    Ok(AttractivenessVerdict::from_violations(out))
}

fn check_layer(layer: &Layer) -> Vec<Violation> {
    let map_verdict = check_map_attractive(&layer.map);
    if !map_verdict.attractive {
        return map_verdict.violations;
    }
    check_rate_restrictions(&layer.map, &layer.rates)
        .expect("map already certified attractive")
        .violations
}

/// Checks every layer of the canonical form of `model`.
pub fn check_ims_attractive(model: &ModelSpec) -> AttractivenessVerdict {
    let canonical = model.canonicalize();
    let violations = canonical
        .layers()
        .iter()
        .enumerate()
        .flat_map(|(i, layer)| {
            check_layer(layer).into_iter().map(move |mut v| {
                v.layer = Some(i);
                v
            })
        })
        .collect();
    AttractivenessVerdict::from_violations(violations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(rows: &[&[u8]]) -> InteractionMap {
        InteractionMap::from_neighbor_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
            .unwrap()
    }

    #[test]
    fn two_type_contact_fails_condition_c() {
        let j = map(&[&[0, 0, 0], &[1, 0, 0], &[2, 0, 0]]);
        let v = check_map_attractive(&j);
        assert!(!v.attractive);
        assert!(v.has(Condition::C, (0, 2), (1, 2)));
        for viol in &v.violations {
            assert!(viol.confirms(&j, None), "{viol}");
        }
    }

    #[test]
    fn voter_map_attractive() {
        let j = map(&[&[0, 0], &[1, 1]]);
        assert!(check_map_attractive(&j).attractive);
    }

    #[test]
    fn rate_check_needs_attractive_map() {
        let j = map(&[&[0, 0, 0], &[1, 0, 0], &[2, 0, 0]]);
        let r = RateTable::constant(2, 1.0).unwrap();
        assert!(matches!(check_rate_restrictions(&j, &r), Err(Error::Precondition(_))));
    }

    #[test]
    fn jump_over_pair_needs_ordered_rates() {
        // Fig. 3b-style map: (0,2) -> 2 jumps over a2 = 1, and (1,2) -> 2 is also up.
        let j = map(&[&[0, 0, 0], &[1, 0, 0], &[2, 2, 1]]);
        assert!(check_map_attractive(&j).attractive);
        // (0,1) -> 1 also jumps over a2 = 0 against (0,2), so lambda_01 <= lambda_02 <= lambda_12.
        let ok = RateTable::from_fn(2, |a, b| if (a, b) == (0, 1) { 1.0 } else { 2.0 }).unwrap();
        assert!(check_rate_restrictions(&j, &ok).unwrap().attractive);
        let bad = RateTable::from_fn(2, |a, b| if (a, b) == (0, 2) { 3.0 } else { 2.0 }).unwrap();
        let v = check_rate_restrictions(&j, &bad).unwrap();
        assert!(!v.attractive);
        assert!(v.has(Condition::RateUp, (0, 2), (1, 2)));
        for viol in &v.violations {
            assert!(viol.confirms(&j, Some(&bad)));
        }
    }

    #[test]
    fn equal_rates_always_pass() {
        let j = map(&[&[1, 0, 1], &[1, 1, 1], &[1, 2, 1]]);
        let r = RateTable::constant(2, 0.7).unwrap();
        assert!(check_rate_restrictions(&j, &r).unwrap().attractive);
    }

    #[test]
    fn all_null_map_is_attractive() {
        for n in 1..5 {
            assert!(check_map_attractive(&InteractionMap::null(n).unwrap()).attractive);
        }
    }

    #[test]
    fn zero_rate_channel_cannot_break_attractiveness() {
        // (1,0) null <= (1,1) down to 0 breaks (d); with lambda_11 = 0 the
        // down channel never fires and the canonical model is attractive.
        let j = map(&[&[0, 1], &[1, 0]]);
        assert!(!check_map_attractive(&j).attractive);
        let r = RateTable::from_fn(1, |a, b| if (a, b) == (1, 1) { 0.0 } else { 1.0 }).unwrap();
        let m = ModelSpec::single(j, r).unwrap();
        assert!(check_ims_attractive(&m).attractive);
    }
}
