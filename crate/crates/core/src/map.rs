//! Interaction maps, rate tables and the models built from them.
//!
//! A map `J` on the ordered types `0..=n` says which type replaces `a` after
//! an interaction with a neighbour of type `b`. Every pair `(a, b)` is
//! classified as an up, null or down interaction by comparing `J(a, b)`
//! with `a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A particle type. Types are totally ordered by their integer value.
pub type Particle = u8;

/// Largest supported `n` (so that `n + 1` types fit in a `u8`).
pub const MAX_N: Particle = 254;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InteractionClass {
    Up,
    Null,
    Down,
}

/// The table `J(a, b)` over `{0..=n} x {0..=n}`.
///
/// Stored row-major by the affected type `a`. The figures in the literature
/// print these tables the other way round (rows indexed by the neighbour `b`),
/// see [`InteractionMap::from_neighbor_rows`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InteractionMap {
    n: Particle,
    table: Vec<Particle>,
}

impl InteractionMap {
    /// Builds a map from `f(a, b)`, validating every entry.
    pub fn from_fn(n: Particle, mut f: impl FnMut(Particle, Particle) -> Particle) -> Result<Self> {
        check_n(n)?;
        let k = n as usize + 1;
        let mut table = Vec::with_capacity(k * k);
        for a in 0..=n {
            for b in 0..=n {
                let v = f(a, b);
                if v > n {
                    return Err(Error::Domain(format!(
                        "J({a},{b}) = {v} is outside 0..={n}"
                    )));
                }
                table.push(v);
            }
        }
        Ok(Self { n, table })
    }

    /// Builds a map from rows indexed by the neighbour `b`, columns by the
    /// affected type `a`: `rows[b][a] = J(a, b)`.
    pub fn from_neighbor_rows(rows: &[Vec<Particle>]) -> Result<Self> {
        let k = rows.len();
        if k < 2 || k > MAX_N as usize + 1 {
            return Err(Error::Domain(format!("map needs 2..={} rows, got {k}", MAX_N as usize + 1)));
        }
        for (b, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Domain(format!(
                    "map row b={b} has {} entries, expected {k}",
                    row.len()
                )));
            }
        }
        Self::from_fn((k - 1) as Particle, |a, b| rows[b as usize][a as usize])
    }

    /// The map with `J(a, b) = a` everywhere.
    pub fn null(n: Particle) -> Result<Self> {
        Self::from_fn(n, |a, _| a)
    }

    pub fn n(&self) -> Particle {
        self.n
    }

    pub fn num_types(&self) -> usize {
        self.n as usize + 1
    }

    /// `J(a, b)`. Panics if `a` or `b` exceeds `n`.
    #[inline]
    pub fn get(&self, a: Particle, b: Particle) -> Particle {
        self.table[a as usize * self.num_types() + b as usize]
    }

    pub(crate) fn set(&mut self, a: Particle, b: Particle, v: Particle) {
        let k = self.num_types();
        self.table[a as usize * k + b as usize] = v;
    }

    #[inline]
    pub fn class(&self, a: Particle, b: Particle) -> InteractionClass {
        let j = self.get(a, b);
        match j.cmp(&a) {
            std::cmp::Ordering::Greater => InteractionClass::Up,
            std::cmp::Ordering::Equal => InteractionClass::Null,
            std::cmp::Ordering::Less => InteractionClass::Down,
        }
    }

    /// Classifies `(a, b)`, rejecting out-of-range types.
    pub fn classify_pair(&self, a: Particle, b: Particle) -> Result<InteractionClass> {
        if a > self.n || b > self.n {
            return Err(Error::Domain(format!(
                "pair ({a},{b}) outside 0..={}",
                self.n
            )));
        }
        Ok(self.class(a, b))
    }

    /// `rows[b][a] = J(a, b)`, the printed orientation.
    pub fn neighbor_rows(&self) -> Vec<Vec<Particle>> {
        (0..=self.n)
            .map(|b| (0..=self.n).map(|a| self.get(a, b)).collect())
            .collect()
    }

    /// All pairs `(a, b)` in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (Particle, Particle)> {
        let n = self.n;
        (0..=n).flat_map(move |a| (0..=n).map(move |b| (a, b)))
    }
}

impl std::fmt::Display for InteractionMap {
    /// Printed with rows indexed by the neighbour `b`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "b\\a |")?;
        for a in 0..=self.n {
            write!(f, " {a}")?;
        }
        writeln!(f)?;
        for b in 0..=self.n {
            write!(f, "{b:>3} |")?;
            for a in 0..=self.n {
                write!(f, " {}", self.get(a, b))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn check_n(n: Particle) -> Result<()> {
    if n == 0 || n > MAX_N {
        return Err(Error::Domain(format!("n must be in 1..={MAX_N}, got {n}")));
    }
    Ok(())
}

/// Per-pair interaction rates `lambda_ab`, stored row-major by `a`.
///
/// Entries at null pairs of the accompanying map carry no meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    n: Particle,
    table: Vec<f64>,
}

impl RateTable {
    pub fn from_fn(n: Particle, mut f: impl FnMut(Particle, Particle) -> f64) -> Result<Self> {
        check_n(n)?;
        let k = n as usize + 1;
        let mut table = Vec::with_capacity(k * k);
        for a in 0..=n {
            for b in 0..=n {
                let v = f(a, b);
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "rate lambda_{a}{b} = {v} must be finite and >= 0"
                    )));
                }
                table.push(v);
            }
        }
        Ok(Self { n, table })
    }

    /// `rows[b][a] = lambda_ab`.
    pub fn from_neighbor_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k < 2 {
            return Err(Error::Domain("rate table needs at least 2 rows".into()));
        }
        for (b, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Domain(format!(
                    "rate row b={b} has {} entries, expected {k}",
                    row.len()
                )));
            }
        }
        Self::from_fn((k - 1) as Particle, |a, b| rows[b as usize][a as usize])
    }

    pub fn constant(n: Particle, rate: f64) -> Result<Self> {
        Self::from_fn(n, |_, _| rate)
    }

    pub fn n(&self) -> Particle {
        self.n
    }

    #[inline]
    pub fn get(&self, a: Particle, b: Particle) -> f64 {
        self.table[a as usize * (self.n as usize + 1) + b as usize]
    }

    pub(crate) fn set(&mut self, a: Particle, b: Particle, v: f64) {
        let k = self.n as usize + 1;
        self.table[a as usize * k + b as usize] = v;
    }

    pub fn neighbor_rows(&self) -> Vec<Vec<f64>> {
        (0..=self.n)
            .map(|b| (0..=self.n).map(|a| self.get(a, b)).collect())
            .collect()
    }

    pub fn max(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }
}

/// One interaction map together with its rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub map: InteractionMap,
    pub rates: RateTable,
}

impl Layer {
    pub fn new(map: InteractionMap, rates: RateTable) -> Result<Self> {
        if map.n() != rates.n() {
            return Err(Error::Domain(format!(
                "map has n={} but rate table has n={}",
                map.n(),
                rates.n()
            )));
        }
        Ok(Self { map, rates })
    }

    /// Rate of the interaction at `(a, b)`, zero for null pairs.
    #[inline]
    pub fn rate(&self, a: Particle, b: Particle) -> f64 {
        if self.map.get(a, b) == a {
            0.0
        } else {
            self.rates.get(a, b)
        }
    }

    /// Largest rate over non-null pairs.
    pub fn max_rate(&self) -> f64 {
        self.map
            .pairs()
            .map(|(a, b)| self.rate(a, b))
            .fold(0.0, f64::max)
    }
}

/// An interacting particle system given by one or more interaction maps.
///
/// Each layer carries its own independent up/down channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    n: Particle,
    layers: Vec<Layer>,
    labels: Option<Vec<String>>,
}

impl ModelSpec {
    pub fn new(layers: Vec<Layer>, labels: Option<Vec<String>>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Domain("a model needs at least one layer".into()))?;
        let n = first.map.n();
        if let Some(i) = layers.iter().position(|l| l.map.n() != n) {
            return Err(Error::Domain(format!(
                "layer {i} has n={} but layer 0 has n={n}",
                layers[i].map.n()
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != n as usize + 1 {
                return Err(Error::Domain(format!(
                    "{} labels given for {} types",
                    labels.len(),
                    n as usize + 1
                )));
            }
        }
        Ok(Self { n, layers, labels })
    }

    /// Convenience for a single-map model.
    pub fn single(map: InteractionMap, rates: RateTable) -> Result<Self> {
        Self::new(vec![Layer::new(map, rates)?], None)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n as usize + 1 {
            return Err(Error::Domain(format!(
                "{} labels given for {} types",
                labels.len(),
                self.n as usize + 1
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> Particle {
        self.n
    }

    pub fn num_types(&self) -> usize {
        self.n as usize + 1
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Largest rate over all layers and non-null pairs.
    pub fn max_rate(&self) -> f64 {
        self.layers.iter().map(Layer::max_rate).fold(0.0, f64::max)
    }

    /// Canonical form: zero-rate channels become null and rates at null pairs
    /// are zeroed. Behaviour is unchanged.
    pub fn canonicalize(&self) -> ModelSpec {
        let layers = self
            .layers
            .iter()
            .map(|layer| {
                let mut map = layer.map.clone();
                let mut rates = layer.rates.clone();
                for (a, b) in layer.map.pairs() {
                    if map.get(a, b) == a || rates.get(a, b) == 0.0 {
                        map.set(a, b, a);
                        rates.set(a, b, 0.0);
                    }
                }
                Layer { map, rates }
            })
            .collect();
        ModelSpec {
            n: self.n,
            layers,
            labels: self.labels.clone(),
        }
    }
}

/// Free-function form of [`ModelSpec::canonicalize`].
pub fn canonicalize(model: &ModelSpec) -> ModelSpec {
    model.canonicalize()
}

/// Free-function form of [`InteractionMap::classify_pair`].
pub fn classify_pair(map: &InteractionMap, a: Particle, b: Particle) -> Result<InteractionClass> {
    map.classify_pair(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contact_map() -> InteractionMap {
        InteractionMap::from_neighbor_rows(&[vec![0, 0], vec![1, 0]]).unwrap()
    }

    #[test]
    fn contact_pairs_classify() {
        let j = contact_map();
        assert_eq!(j.classify_pair(0, 1).unwrap(), InteractionClass::Up);
        assert_eq!(j.classify_pair(0, 0).unwrap(), InteractionClass::Null);
        assert_eq!(j.classify_pair(1, 1).unwrap(), InteractionClass::Down);
        assert_eq!(j.classify_pair(1, 0).unwrap(), InteractionClass::Down);
    }

    #[test]
    fn out_of_range_pair_is_domain_error() {
        let j = contact_map();
        assert!(matches!(j.classify_pair(2, 0), Err(Error::Domain(_))));
        assert!(matches!(j.classify_pair(0, 7), Err(Error::Domain(_))));
    }

    #[test]
    fn map_entry_above_n_rejected() {
        let err = InteractionMap::from_neighbor_rows(&[vec![0, 2], vec![1, 0]]);
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn neighbor_rows_round_trip() {
        let rows = vec![vec![0, 0, 0], vec![1, 0, 0], vec![2, 0, 0]];
        let j = InteractionMap::from_neighbor_rows(&rows).unwrap();
        assert_eq!(j.get(0, 2), 2);
        assert_eq!(j.get(2, 0), 0);
        assert_eq!(j.neighbor_rows(), rows);
    }

    #[test]
    fn negative_rate_rejected() {
        assert!(RateTable::from_fn(1, |a, _| if a == 1 { -1.0 } else { 1.0 }).is_err());
        assert!(RateTable::constant(1, f64::NAN).is_err());
    }

    #[test]
    fn canonicalize_nulls_zero_rate_channels() {
        let j = contact_map();
        let rates = RateTable::from_fn(1, |a, _| if a == 0 { 0.0 } else { 1.0 }).unwrap();
        let m = ModelSpec::single(j, rates).unwrap().canonicalize();
        assert_eq!(m.layers()[0].map.get(0, 1), 0);
        assert_eq!(m.layers()[0].map.get(1, 0), 0);
        assert_eq!(m.layers()[0].rates.get(0, 1), 0.0);
    }

    #[test]
    fn canonicalize_is_idempotent_on_contact() {
        let j = contact_map();
        let rates = RateTable::from_fn(1, |a, b| match (a, b) {
            (0, 1) => 2.0,
            (1, _) => 0.5,
            _ => 0.0,
        })
        .unwrap();
        let m = ModelSpec::single(j, rates).unwrap();
        assert_eq!(m.canonicalize(), m);
        assert_eq!(m.canonicalize().canonicalize(), m.canonicalize());
    }

    #[test]
    fn layers_must_share_n() {
        let l1 = Layer::new(contact_map(), RateTable::constant(1, 1.0).unwrap()).unwrap();
        let l2 = Layer::new(
            InteractionMap::null(2).unwrap(),
            RateTable::constant(2, 1.0).unwrap(),
        )
        .unwrap();
        assert!(ModelSpec::new(vec![l1, l2], None).is_err());
        assert!(ModelSpec::new(vec![], None).is_err());
    }
}
