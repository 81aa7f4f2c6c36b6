//! Randomized agreement between the attractiveness checker and the
//! brute-force monotonicity oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attractive::check_ims_attractive;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Kernel, Lattice};
use crate::map::{InteractionMap, ModelSpec, Particle, RateTable};
use crate::oracle::{build_generator, enumerate_upsets, generator_monotone_with, semigroup_monotone_with};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceConfig {
    pub trials: usize,
    pub seed: u64,
    pub sites: usize,
    pub n: Particle,
    pub boundary: Boundary,
    /// Rates are uniform on this interval.
    pub rate_range: (f64, f64),
    /// Probability that a rate entry is set to zero instead.
    pub zero_prob: f64,
    pub times: Vec<f64>,
    pub tol: f64,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 0,
            sites: 2,
            n: 2,
            boundary: Boundary::Free,
            rate_range: (0.5, 2.0),
            zero_prob: 0.0,
            times: vec![0.1, 1.0, 10.0],
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub index: usize,
    pub model: ModelSpec,
    pub checker: bool,
    pub generator: bool,
    pub semigroup: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub config: EquivalenceConfig,
    pub outcomes: Vec<TrialOutcome>,
}

impl EquivalenceReport {
    pub fn attractive_count(&self) -> usize {
        self.outcomes.iter().filter(|o| o.checker).count()
    }

    pub fn checker_disagreements(&self) -> Vec<&TrialOutcome> {
        self.outcomes.iter().filter(|o| o.checker != o.generator).collect()
    }

    pub fn semigroup_disagreements(&self) -> Vec<&TrialOutcome> {
        self.outcomes.iter().filter(|o| o.semigroup != o.generator).collect()
    }

    pub fn all_agree(&self) -> bool {
        self.checker_disagreements().is_empty() && self.semigroup_disagreements().is_empty()
    }
}

impl std::fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = &self.config;
        writeln!(
            f,
            "trials: {}  sites: {}  n: {}  boundary: {:?}  rates: U[{}, {}]  zero_prob: {}  seed: {}",
            c.trials, c.sites, c.n, c.boundary, c.rate_range.0, c.rate_range.1, c.zero_prob, c.seed
        )?;
        writeln!(f, "attractive (checker): {}", self.attractive_count())?;
        let cd = self.checker_disagreements();
        let sd = self.semigroup_disagreements();
        writeln!(f, "checker vs generator: {}/{} agree", c.trials - cd.len(), c.trials)?;
        writeln!(f, "semigroup vs generator: {}/{} agree", c.trials - sd.len(), c.trials)?;
        for o in cd.iter().chain(sd.iter()) {
            writeln!(
                f,
                "  trial {}: checker={} generator={} semigroup={}",
                o.index, o.checker, o.generator, o.semigroup
            )?;
            for (b, row) in o.model.layers()[0].map.neighbor_rows().iter().enumerate() {
                writeln!(f, "    b={b}: {row:?}")?;
            }
        }
        Ok(())
    }
}

/// The `index`-th random model of the suite: i.i.d. map entries, i.i.d. rates.
pub fn random_model(cfg: &EquivalenceConfig, index: usize) -> Result<ModelSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let n = cfg.n;
    let map = InteractionMap::from_fn(n, |_, _| rng.random_range(0..=n))?;
    let (lo, hi) = cfg.rate_range;
    let rates = RateTable::from_fn(n, |_, _| {
        if cfg.zero_prob > 0.0 && rng.random_bool(cfg.zero_prob) {
            0.0
        } else {
            rng.random_range(lo..=hi)
        }
    })?;
    ModelSpec::single(map, rates)
}

pub fn run_equivalence(cfg: &EquivalenceConfig) -> Result<EquivalenceReport> {
    let (lo, hi) = cfg.rate_range;
    if !(lo > 0.0 && hi >= lo) && cfg.zero_prob == 0.0 {
        return Err(Error::Domain(format!("rate range [{lo}, {hi}] must be positive")));
    }
    if !(0.0..=1.0).contains(&cfg.zero_prob) {
        return Err(Error::Domain(format!("zero_prob {} outside [0, 1]", cfg.zero_prob)));
    }
    let lattice = Lattice::new(&[cfg.sites], cfg.boundary, Kernel::NearestNeighbor)?;
    let probe = build_generator(&random_model(cfg, 0)?, &lattice)?;
    let upsets = enumerate_upsets(&probe.space)?;
    let trial = |index: usize| -> Result<TrialOutcome> {
        let model = random_model(cfg, index)?;
        let q = build_generator(&model, &lattice)?;
        Ok(TrialOutcome {
            index,
            checker: check_ims_attractive(&model).attractive,
            generator: generator_monotone_with(&q, &upsets).monotone,
            semigroup: semigroup_monotone_with(&q, &upsets, &cfg.times, cfg.tol)?.monotone,
            model,
        })
    };
    #[cfg(feature = "parallel")]
    let outcomes = {
        use rayon::prelude::*;
        (0..cfg.trials).into_par_iter().map(trial).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes = (0..cfg.trials).map(trial).collect::<Result<Vec<_>>>()?;
    Ok(EquivalenceReport {
        config: cfg.clone(),
        outcomes,
    })
}
