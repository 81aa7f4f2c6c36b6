//! Monotone coupling from the past between the extremal configurations.
//!
//! Epoch `k` runs the bottom and top configurations through the events of
//! `(-2^k T0, 0]`. Events are regenerated from the block-keyed substreams of
//! [`EventSource`], so later epochs see exactly the same points on the part
//! of the axis that earlier epochs already covered.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::attractive::check_ims_attractive;
use crate::error::{Error, Result};
use crate::lattice::{extremal, Configuration, Lattice};
use crate::map::ModelSpec;
use crate::oracle::MAX_STATES;
use crate::sim::{step, EventSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CftpResult {
    pub sample: Configuration,
    /// The final lookback was `2^epochs_used * T0`.
    pub epochs_used: u32,
    /// Events processed over all epochs, both chains counted once.
    pub events_consumed: u64,
}

/// Default base window: one expected point per channel site, `sites / c`.
pub fn default_t0(source: &EventSource, lattice: &Lattice) -> f64 {
    lattice.num_sites() as f64 / source.bound()
}

pub fn cftp_sample(
    model: &ModelSpec,
    lattice: &Lattice,
    seed: u64,
    t0: Option<f64>,
    max_epochs: u32,
) -> Result<CftpResult> {
    let verdict = check_ims_attractive(model);
    if let Some(v) = verdict.violations.first() {
        return Err(Error::Precondition(format!("model is not attractive: {v}")));
    }
    if max_epochs == 0 {
        return Err(Error::Domain("max_epochs must be at least 1".into()));
    }
    let source = EventSource::new(model, lattice, seed)?;
    let t0 = t0.unwrap_or_else(|| default_t0(&source, lattice));
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(Error::Domain(format!("T0 must be positive, got {t0}")));
    }
    let (bottom, top) = extremal(model, lattice);
    let mut consumed = 0u64;
    let mut last = (bottom.clone(), top.clone());
    for k in 0..max_epochs {
        let start = -(2f64.powi(k as i32)) * t0;
        let mut lo = bottom.clone();
        let mut hi = top.clone();
        for e in source.window(start, 0.0)?.iter() {
            consumed += 1;
            step(lo.values_mut(), &e, model, lattice);
            step(hi.values_mut(), &e, model, lattice);
            debug_assert!(lo.le(&hi), "sandwich broken at t={}", e.t);
        }
        if lo == hi {
            return Ok(CftpResult {
                sample: lo,
                epochs_used: k,
                events_consumed: consumed,
            });
        }
        last = (lo, hi);
    }
    Err(Error::NoCoalescence {
        epochs: max_epochs,
        lower: last.0,
        upper: last.1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HistogramKey {
    /// Keys are configuration lines.
    Configuration,
    /// Keys are per-type counts, `count_0 count_1 ...`.
    TypeCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CftpBatch {
    pub results: Vec<CftpResult>,
    pub key: HistogramKey,
    pub histogram: BTreeMap<String, usize>,
}

impl CftpBatch {
    pub fn write_samples<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.results {
            writeln!(w, "{}", r.sample)?;
        }
        Ok(())
    }

    pub fn write_histogram_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let head = match self.key {
            HistogramKey::Configuration => "configuration",
            HistogramKey::TypeCounts => "counts",
        };
        writeln!(w, "{head},frequency")?;
        for (k, v) in &self.histogram {
            writeln!(w, "{k},{v}")?;
        }
        Ok(())
    }
}

/// `k` samples with seeds `base_seed + i`.
pub fn cftp_batch(
    model: &ModelSpec,
    lattice: &Lattice,
    base_seed: u64,
    k: usize,
    t0: Option<f64>,
    max_epochs: u32,
) -> Result<CftpBatch> {
    let run = |i: usize| cftp_sample(model, lattice, base_seed.wrapping_add(i as u64), t0, max_epochs);
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<CftpResult>> = {
        use rayon::prelude::*;
        (0..k).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<CftpResult>> = (0..k).map(run).collect();

    let mut results = Vec::with_capacity(k);
    for (index, r) in outcomes.into_iter().enumerate() {
        results.push(r.map_err(|e| Error::Batch {
            index,
            source: Box::new(e),
        })?);
    }
    let states = (model.n() as f64 + 1.0).powi(lattice.num_sites() as i32);
    let key = if states <= MAX_STATES as f64 {
        HistogramKey::Configuration
    } else {
        HistogramKey::TypeCounts
    };
    let mut histogram = BTreeMap::new();
    for r in &results {
        let name = match key {
            HistogramKey::Configuration => r.sample.to_string(),
            HistogramKey::TypeCounts => r
                .sample
                .counts(model.n())
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        };
        *histogram.entry(name).or_insert(0) += 1;
    }
    Ok(CftpBatch {
        results,
        key,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{InteractionMap, RateTable};

    fn contact(lambda: f64) -> ModelSpec {
        let map = InteractionMap::from_neighbor_rows(&[vec![0, 0], vec![1, 0]]).unwrap();
        let rates = RateTable::from_fn(1, |a, b| match (a, b) {
            (0, 1) => lambda,
            (1, _) => 0.5,
            _ => 0.0,
        })
        .unwrap();
        ModelSpec::single(map, rates).unwrap()
    }

    fn voter() -> ModelSpec {
        let map = InteractionMap::from_neighbor_rows(&[vec![0, 0], vec![1, 1]]).unwrap();
        ModelSpec::single(map, RateTable::constant(1, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn contact_coalesces_to_empty() {
        let lat = Lattice::ring(6).unwrap();
        for seed in 0..5 {
            let r = cftp_sample(&contact(1.0), &lat, seed, None, 30).unwrap();
            assert_eq!(r.sample, Configuration::constant(6, 0));
        }
    }

    #[test]
    fn voter_does_not_coalesce() {
        let lat = Lattice::ring(4).unwrap();
        match cftp_sample(&voter(), &lat, 1, None, 8) {
            Err(Error::NoCoalescence { lower, upper, .. }) => {
                assert_eq!(lower, Configuration::constant(4, 0));
                assert_eq!(upper, Configuration::constant(4, 1));
            }
            other => panic!("expected NoCoalescence, got {other:?}"),
        }
    }

    #[test]
    fn non_attractive_is_precondition_error() {
        let map = InteractionMap::from_neighbor_rows(&[vec![0, 0, 0], vec![1, 0, 0], vec![2, 0, 0]]).unwrap();
        let m = ModelSpec::single(map, RateTable::constant(2, 1.0).unwrap()).unwrap();
        let lat = Lattice::ring(3).unwrap();
        assert!(matches!(cftp_sample(&m, &lat, 0, None, 4), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_epochs_rejected() {
        let lat = Lattice::ring(3).unwrap();
        assert!(matches!(cftp_sample(&contact(1.0), &lat, 0, None, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn batch_is_deterministic_and_empty_for_zero() {
        let lat = Lattice::ring(4).unwrap();
        let m = contact(1.0);
        assert!(cftp_batch(&m, &lat, 9, 0, None, 20).unwrap().results.is_empty());
        let a = cftp_batch(&m, &lat, 9, 6, None, 20).unwrap();
        let b = cftp_batch(&m, &lat, 9, 6, None, 20).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.histogram.get("0 0 0 0"), Some(&6));
    }

    #[test]
    fn batch_reports_failing_index() {
        let lat = Lattice::ring(4).unwrap();
        match cftp_batch(&voter(), &lat, 0, 3, None, 3) {
            Err(Error::Batch { index, .. }) => assert_eq!(index, 0),
            other => panic!("{other:?}"),
        }
    }
}
