//! Graphical-representation simulation.
//!
//! Every channel `(layer, x, y, dir)` with `phi(x, y) > 0` carries a Poisson
//! process of intensity `c` (the global rate bound) whose points carry a
//! uniform mark `u` in `(0, c)`. An up point at `(x, y)` replaces `eta(x)` by
//! `J(eta(x), eta(y))` when that is an up interaction and `u <= r_u`; down
//! points work the same way with `r_d`. Feeding the same points to several
//! configurations gives the shared-event coupling.
//!
//! Randomness is split into blocks of length `1 / c` on the absolute time
//! axis. Each `(channel, block)` gets its own generator seeded from a hash of
//! `(seed, layer, x, y, dir, block)`, so any time window can be regenerated
//! without storing events and windows that overlap see identical points.

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Open01};
use serde::{Deserialize, Serialize};

use crate::attractive::check_ims_attractive;
use crate::error::{Error, Result};
use crate::lattice::{rate_bound, Configuration, Lattice};
use crate::map::{InteractionClass, ModelSpec, Particle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

/// One point of the graphical representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: usize,
    pub y: usize,
    pub layer: usize,
    pub dir: Direction,
    pub u: f64,
}

impl Event {
    fn sort_key_cmp(&self, other: &Event) -> std::cmp::Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.layer.cmp(&other.layer))
            .then(self.x.cmp(&other.x))
            .then(self.y.cmp(&other.y))
            .then(self.dir.cmp(&other.dir))
    }
}

#[derive(Debug, Clone, Copy)]
struct Channel {
    layer: usize,
    x: usize,
    y: usize,
    dir: Direction,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn substream_key(seed: u64, ch: &Channel, block: i64) -> u64 {
    let mut h = splitmix64(seed);
    for word in [
        ch.layer as u64,
        ch.x as u64,
        ch.y as u64,
        ch.dir as u64,
        block as u64,
    ] {
        h = splitmix64(h ^ word);
    }
    h
}

/// Deterministic generator of the graphical representation for one
/// `(model, lattice, seed)`.
#[derive(Debug, Clone)]
pub struct EventSource {
    channels: Vec<Channel>,
    bound: f64,
    block_len: f64,
    seed: u64,
}

impl EventSource {
    /// Uses the model's own rate bound `c`.
    pub fn new(model: &ModelSpec, lattice: &Lattice, seed: u64) -> Result<Self> {
        Self::with_bound(model, lattice, rate_bound(model, lattice), seed)
    }

    /// Uses a caller-chosen bound, which must dominate every pair rate.
    pub fn with_bound(model: &ModelSpec, lattice: &Lattice, bound: f64, seed: u64) -> Result<Self> {
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::Domain(format!(
                "rate bound c = {bound}; the model needs at least one positive rate"
            )));
        }
        let needed = rate_bound(model, lattice);
        if needed > bound {
            return Err(Error::Domain(format!(
                "rate bound {bound} is below the model's largest pair rate {needed}"
            )));
        }
        let mut channels = Vec::new();
        for layer in 0..model.layers().len() {
            for x in 0..lattice.num_sites() {
                for &(y, _) in lattice.neighbors(x) {
                    for dir in [Direction::Up, Direction::Down] {
                        channels.push(Channel { layer, x, y, dir });
                    }
                }
            }
        }
        Ok(Self {
            channels,
            bound,
            block_len: 1.0 / bound,
            seed,
        })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Events with `t` in block `[j / c, (j + 1) / c)`, sorted.
    pub fn block(&self, j: i64) -> Vec<Event> {
        let exp = Exp::new(self.bound).expect("bound is positive");
        let t0 = j as f64 * self.block_len;
        let mut out = Vec::new();
        for ch in &self.channels {
            let mut rng = ChaCha8Rng::seed_from_u64(substream_key(self.seed, ch, j));
            let mut s = 0.0;
            loop {
                s += rng.sample(exp);
                if s >= self.block_len {
                    break;
                }
                let u: f64 = rng.sample(Open01);
                out.push(Event {
                    t: t0 + s,
                    x: ch.x,
                    y: ch.y,
                    layer: ch.layer,
                    dir: ch.dir,
                    u: u * self.bound,
                });
            }
        }
        out.sort_by(Event::sort_key_cmp);
        out
    }

    fn block_of(&self, t: f64) -> i64 {
        (t / self.block_len).floor() as i64
    }

    /// Lazy stream over the window `(start, end]`.
    pub fn window(&self, start: f64, end: f64) -> Result<EventStream> {
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::Domain(format!("empty or invalid window ({start}, {end}]")));
        }
        Ok(EventStream {
            source: self.clone(),
            start,
            end,
        })
    }

    /// Materialises every event in `(start, end]`.
    pub fn events_in(&self, start: f64, end: f64) -> Vec<Event> {
        if !(end > start) {
            return Vec::new();
        }
        (self.block_of(start)..=self.block_of(end))
            .flat_map(|j| self.block(j))
            .filter(|e| e.t > start && e.t <= end)
            .collect()
    }
}

/// The events of one [`EventSource`] inside a time window, produced lazily
/// block by block.
#[derive(Debug, Clone)]
pub struct EventStream {
    source: EventSource,
    start: f64,
    end: f64,
}

impl EventStream {
    pub fn source(&self) -> &EventSource {
        &self.source
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn bound(&self) -> f64 {
        self.source.bound
    }

    pub fn seed(&self) -> u64 {
        self.source.seed
    }

    pub fn iter(&self) -> EventIter<'_> {
        EventIter {
            stream: self,
            next_block: self.source.block_of(self.start),
            last_block: self.source.block_of(self.end),
            buf: VecDeque::new(),
        }
    }

    pub fn events(&self) -> Vec<Event> {
        self.iter().collect()
    }
}

pub struct EventIter<'a> {
    stream: &'a EventStream,
    next_block: i64,
    last_block: i64,
    buf: VecDeque<Event>,
}

impl Iterator for EventIter<'_> {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        loop {
            if let Some(e) = self.buf.pop_front() {
                if e.t > self.stream.start && e.t <= self.stream.end {
                    return Some(e);
                }
                continue;
            }
            if self.next_block > self.last_block {
                return None;
            }
            self.buf.extend(self.stream.source.block(self.next_block));
            self.next_block += 1;
        }
    }
}

/// Event stream on `(0, horizon]`.
pub fn build_event_stream(
    model: &ModelSpec,
    lattice: &Lattice,
    horizon: f64,
    seed: u64,
) -> Result<EventStream> {
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    EventSource::new(model, lattice, seed)?.window(0.0, horizon)
}

/// Applies one event in place. Returns `(old, new)` when the site changed.
#[inline]
pub(crate) fn step(
    values: &mut [Particle],
    e: &Event,
    model: &ModelSpec,
    lattice: &Lattice,
) -> Option<(Particle, Particle)> {
    let layer = &model.layers()[e.layer];
    let (a, b) = (values[e.x], values[e.y]);
    let class = layer.map.class(a, b);
    let fires = match (e.dir, class) {
        (Direction::Up, InteractionClass::Up) | (Direction::Down, InteractionClass::Down) => {
            e.u <= layer.rates.get(a, b) * lattice.weight(e.x, e.y)
        }
        _ => false,
    };
    if fires {
        let new = layer.map.get(a, b);
        values[e.x] = new;
        Some((a, new))
    } else {
        None
    }
}

/// The configuration after one event.
pub fn apply_event(eta: &Configuration, e: &Event, model: &ModelSpec, lattice: &Lattice) -> Configuration {
    let mut next = eta.clone();
    step(next.values_mut(), e, model, lattice);
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub t: f64,
    pub event_index: usize,
    pub site: usize,
    pub old: Particle,
    pub new: Particle,
}

/// A path on `[start, end]`, recorded as its state-changing events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: Configuration,
    pub transitions: Vec<Transition>,
    pub final_config: Configuration,
    pub start: f64,
    pub end: f64,
}

impl Trajectory {
    /// Configuration just before time `t`.
    pub fn at_before(&self, t: f64) -> Configuration {
        let mut c = self.initial.clone();
        for tr in self.transitions.iter().take_while(|tr| tr.t < t) {
            c.values_mut()[tr.site] = tr.new;
        }
        c
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,site,old,new")?;
        for tr in &self.transitions {
            writeln!(w, "{},{},{},{}", tr.t, tr.site, tr.old, tr.new)?;
        }
        Ok(())
    }
}

pub fn write_events_csv<W: Write>(events: impl IntoIterator<Item = Event>, mut w: W) -> io::Result<()> {
    writeln!(w, "t,layer,x,y,dir,u")?;
    for e in events {
        writeln!(w, "{},{},{},{},{},{}", e.t, e.layer, e.x, e.y, e.dir.as_str(), e.u)?;
    }
    Ok(())
}

/// Folds the stream over `eta0`.
pub fn evolve(eta0: &Configuration, stream: &EventStream, model: &ModelSpec, lattice: &Lattice) -> Trajectory {
    let mut values = eta0.clone();
    let mut transitions = Vec::new();
    for (i, e) in stream.iter().enumerate() {
        if let Some((old, new)) = step(values.values_mut(), &e, model, lattice) {
            transitions.push(Transition {
                t: e.t,
                event_index: i,
                site: e.x,
                old,
                new,
            });
        }
    }
    Trajectory {
        initial: eta0.clone(),
        transitions,
        final_config: values,
        start: stream.start(),
        end: stream.end(),
    }
}

/// First event after which an initially ordered pair stopped being ordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderViolation {
    pub event_index: usize,
    pub event: Event,
    /// Index of the configuration that started below.
    pub lower: usize,
    pub upper: usize,
    pub site: usize,
}

impl OrderViolation {
    fn into_error(self) -> Error {
        Error::OrderViolation {
            event_index: self.event_index,
            time: self.event.t,
            lower: self.lower,
            upper: self.upper,
            site: self.site,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun {
    pub trajectories: Vec<Trajectory>,
    /// At most one entry per initially ordered pair.
    pub violations: Vec<OrderViolation>,
}

/// Evolves each `inits[i]` under `models[i]` against the same events, and
/// watches every initially ordered pair after each event.
fn run_shared(
    inits: &[Configuration],
    models: &[&ModelSpec],
    stream: &EventStream,
    lattice: &Lattice,
) -> CoupledRun {
    let mut states: Vec<Configuration> = inits.to_vec();
    let mut transitions: Vec<Vec<Transition>> = vec![Vec::new(); inits.len()];
    let mut watched: Vec<(usize, usize)> = Vec::new();
    for i in 0..inits.len() {
        for j in 0..inits.len() {
            if i != j && inits[i].le(&inits[j]) {
                watched.push((i, j));
            }
        }
    }
    let mut violations = Vec::new();
    let mut changed = Vec::with_capacity(inits.len());
    for (k, e) in stream.iter().enumerate() {
        changed.clear();
        for (i, state) in states.iter_mut().enumerate() {
            if let Some((old, new)) = step(state.values_mut(), &e, models[i], lattice) {
                transitions[i].push(Transition {
                    t: e.t,
                    event_index: k,
                    site: e.x,
                    old,
                    new,
                });
                changed.push(i);
            }
        }
        if changed.is_empty() {
            continue;
        }
        watched.retain(|&(lo, hi)| {
            if (changed.contains(&lo) || changed.contains(&hi)) && states[lo].get(e.x) > states[hi].get(e.x) {
                violations.push(OrderViolation {
                    event_index: k,
                    event: e,
                    lower: lo,
                    upper: hi,
                    site: e.x,
                });
                false
            } else {
                true
            }
        });
    }
    let trajectories = inits
        .iter()
        .zip(states)
        .zip(transitions)
        .map(|((init, fin), transitions)| Trajectory {
            initial: init.clone(),
            transitions,
            final_config: fin,
            start: stream.start(),
            end: stream.end(),
        })
        .collect();
    CoupledRun {
        trajectories,
        violations,
    }
}

/// Evolves every configuration against the same stream.
///
/// For an attractive model an order violation is a bug and is returned as
/// [`Error::OrderViolation`]; for other models violations are reported in the
/// result.
pub fn coupled_evolve(
    configs: &[Configuration],
    stream: &EventStream,
    model: &ModelSpec,
    lattice: &Lattice,
) -> Result<CoupledRun> {
    for c in configs {
        c.validate(lattice.num_sites(), model.n())?;
    }
    let models = vec![model; configs.len()];
    let run = run_shared(configs, &models, stream, lattice);
    if let Some(v) = run.violations.first() {
        if check_ims_attractive(model).attractive {
            return Err(v.clone().into_error());
        }
    }
    Ok(run)
}

/// Lists `(layer, a, b)` where the parameters are not ordered as
/// up-rates `m1 <= m2`, down-rates `m1 >= m2`. Maps must coincide.
pub fn parameter_order_violations(m1: &ModelSpec, m2: &ModelSpec) -> Result<Vec<(usize, Particle, Particle)>> {
    if m1.n() != m2.n() || m1.layers().len() != m2.layers().len() {
        return Err(Error::Precondition("models differ in n or layer count".into()));
    }
    let mut out = Vec::new();
    for (i, (l1, l2)) in m1.layers().iter().zip(m2.layers()).enumerate() {
        if l1.map != l2.map {
            return Err(Error::Precondition(format!("layer {i}: interaction maps differ")));
        }
        for (a, b) in l1.map.pairs() {
            let (r1, r2) = (l1.rates.get(a, b), l2.rates.get(a, b));
            let bad = match l1.map.class(a, b) {
                InteractionClass::Up => r1 > r2,
                InteractionClass::Down => r1 < r2,
                InteractionClass::Null => false,
            };
            if bad {
                out.push((i, a, b));
            }
        }
    }
    Ok(out)
}

/// Runs `eta0` under `m1` and `xi0` under `m2` on one event stream whose
/// bound covers both models.
pub fn param_coupled_evolve(
    eta0: &Configuration,
    xi0: &Configuration,
    m1: &ModelSpec,
    m2: &ModelSpec,
    lattice: &Lattice,
    horizon: f64,
    seed: u64,
) -> Result<(Trajectory, Trajectory)> {
    eta0.validate(lattice.num_sites(), m1.n())?;
    xi0.validate(lattice.num_sites(), m2.n())?;
    let bad = parameter_order_violations(m1, m2)?;
    if !bad.is_empty() {
        let list: Vec<String> = bad
            .iter()
            .map(|(l, a, b)| format!("(layer {l}, {a}, {b})"))
            .collect();
        return Err(Error::Precondition(format!(
            "parameters not ordered at {}",
            list.join(", ")
        )));
    }
    if !eta0.le(xi0) {
        return Err(Error::Precondition("initial configurations are not ordered".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let bound = rate_bound(m1, lattice).max(rate_bound(m2, lattice));
    let stream = EventSource::with_bound(m1, lattice, bound, seed)?.window(0.0, horizon)?;
    let run = run_shared(&[eta0.clone(), xi0.clone()], &[m1, m2], &stream, lattice);
    if let Some(v) = run.violations.first() {
        if check_ims_attractive(m1).attractive && check_ims_attractive(m2).attractive {
            return Err(v.clone().into_error());
        }
    }
    let mut it = run.trajectories.into_iter();
    Ok((it.next().expect("two runs"), it.next().expect("two runs")))
}

/// Type counts per grid time (configuration just before each time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub times: Vec<f64>,
    pub counts: Vec<Vec<usize>>,
    pub sites: usize,
}

impl DensityTable {
    pub fn fractions(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / self.sites as f64).collect())
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let k = self.counts.first().map_or(0, Vec::len);
        write!(w, "t")?;
        for a in 0..k {
            write!(w, ",count_{a}")?;
        }
        writeln!(w)?;
        for (t, row) in self.times.iter().zip(&self.counts) {
            write!(w, "{t}")?;
            for c in row {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Counts of each type at the grid times, which must be nondecreasing and
/// inside the trajectory's window.
pub fn density_series(traj: &Trajectory, grid: &[f64], n: Particle) -> Result<DensityTable> {
    if let Some(&t) = grid.iter().find(|&&t| !(t >= traj.start && t <= traj.end)) {
        return Err(Error::Domain(format!(
            "grid time {t} outside [{}, {}]",
            traj.start, traj.end
        )));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("grid times must be nondecreasing".into()));
    }
    let mut current = traj.initial.clone();
    let mut next = 0;
    let mut counts = Vec::with_capacity(grid.len());
    for &t in grid {
        while next < traj.transitions.len() && traj.transitions[next].t < t {
            let tr = &traj.transitions[next];
            current.values_mut()[tr.site] = tr.new;
            next += 1;
        }
        counts.push(current.counts(n));
    }
    Ok(DensityTable {
        times: grid.to_vec(),
        counts,
        sites: traj.initial.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{InteractionMap, RateTable};

    fn contact(lambda: f64, death: f64, mass: f64) -> ModelSpec {
        let map = InteractionMap::from_neighbor_rows(&[vec![0, 0], vec![1, 0]]).unwrap();
        let rates = RateTable::from_fn(1, |a, b| match (a, b) {
            (0, 1) => lambda,
            (1, _) => death / mass,
            _ => 0.0,
        })
        .unwrap();
        ModelSpec::single(map, rates).unwrap()
    }

    #[test]
    fn up_event_fires_below_rate() {
        let lat = Lattice::new(&[2], crate::lattice::Boundary::Free, Default::default()).unwrap();
        let m = contact(2.0, 1.0, 1.0);
        let eta: Configuration = "1 0".parse().unwrap();
        let mut e = Event { t: 0.5, x: 1, y: 0, layer: 0, dir: Direction::Up, u: 1.5 };
        assert_eq!(apply_event(&eta, &e, &m, &lat).to_string(), "1 1");
        e.u = 2.5;
        assert_eq!(apply_event(&eta, &e, &m, &lat), eta);
    }

    #[test]
    fn down_event_on_empty_site_is_noop() {
        let lat = Lattice::new(&[2], crate::lattice::Boundary::Free, Default::default()).unwrap();
        let m = contact(2.0, 1.0, 1.0);
        let eta: Configuration = "1 0".parse().unwrap();
        let e = Event { t: 0.5, x: 1, y: 0, layer: 0, dir: Direction::Down, u: 0.01 };
        assert_eq!(apply_event(&eta, &e, &m, &lat), eta);
    }

    #[test]
    fn stream_is_deterministic_and_sorted() {
        let lat = Lattice::ring(4).unwrap();
        let m = contact(2.0, 1.0, 2.0);
        let a = build_event_stream(&m, &lat, 10.0, 7).unwrap().events();
        let b = build_event_stream(&m, &lat, 10.0, 7).unwrap().events();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].sort_key_cmp(&w[1]).is_lt()));
        assert!(a.iter().all(|e| e.t > 0.0 && e.t <= 10.0 && e.u > 0.0 && e.u < 2.0));
        let c = build_event_stream(&m, &lat, 10.0, 8).unwrap().events();
        assert_ne!(a, c);
    }

    #[test]
    fn bad_horizon_or_bound() {
        let lat = Lattice::ring(4).unwrap();
        let m = contact(2.0, 1.0, 2.0);
        assert!(build_event_stream(&m, &lat, 0.0, 1).is_err());
        assert!(build_event_stream(&m, &lat, -1.0, 1).is_err());
        let silent = contact(0.0, 0.0, 2.0);
        assert!(matches!(build_event_stream(&silent, &lat, 1.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn overlapping_windows_share_events() {
        let lat = Lattice::ring(5).unwrap();
        let m = contact(1.5, 1.0, 2.0);
        let src = EventSource::new(&m, &lat, 99).unwrap();
        let wide = src.events_in(-8.0, 0.0);
        let narrow = src.events_in(-3.3, 0.0);
        let tail: Vec<Event> = wide.iter().copied().filter(|e| e.t > -3.3).collect();
        assert_eq!(tail, narrow);
    }

    #[test]
    fn empty_stream_keeps_initial() {
        let lat = Lattice::ring(4).unwrap();
        let m = contact(2.0, 1.0, 2.0);
        let stream = build_event_stream(&m, &lat, 1e-12, 3).unwrap();
        let eta: Configuration = "1 0 1 0".parse().unwrap();
        let tr = evolve(&eta, &stream, &m, &lat);
        assert_eq!(tr.final_config, eta);
    }

    #[test]
    fn param_coupling_rejects_unordered_deaths() {
        let lat = Lattice::ring(6).unwrap();
        let m1 = contact(1.0, 1.0, 2.0);
        let m2 = contact(2.0, 2.0, 2.0);
        let eta = Configuration::constant(6, 0);
        let err = param_coupled_evolve(&eta, &eta, &m1, &m2, &lat, 1.0, 1).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn density_rows_sum_to_sites() {
        let lat = Lattice::ring(8).unwrap();
        let m = contact(2.0, 1.0, 2.0);
        let stream = build_event_stream(&m, &lat, 5.0, 11).unwrap();
        let tr = evolve(&Configuration::constant(8, 1), &stream, &m, &lat);
        let d = density_series(&tr, &[0.0, 1.0, 2.5, 5.0], 1).unwrap();
        assert_eq!(d.counts[0], vec![0, 8]);
        assert!(d.counts.iter().all(|r| r.iter().sum::<usize>() == 8));
        assert!(density_series(&tr, &[6.0], 1).is_err());
        assert!(density_series(&tr, &[2.0, 1.0], 1).is_err());
    }
}
