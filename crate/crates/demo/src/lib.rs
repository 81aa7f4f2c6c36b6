//! Browser bindings: map checker, spacetime simulation and shared-event
//! coupling on a ring.
//!
//! Every export returns a JSON string; the `*_json` functions hold the logic
//! so native tests can call them without a JS host.

use ims_core::catalog::{builtin_with_defaults, Params, BUILTIN_MODELS};
use ims_core::sim::{coupled_evolve, evolve, EventSource, Trajectory};
use ims_core::{
    check_map_attractive, random_ordered_pair, search_orderings, Configuration, InteractionMap, Lattice, ModelSpec,
    RateTable,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Frames per run are capped so the page stays responsive.
const MAX_FRAMES: usize = 2000;
const MAX_SITES: usize = 1000;

#[derive(Serialize)]
struct CheckOut {
    attractive: bool,
    violations: Vec<String>,
    orderings: Vec<Vec<u8>>,
}

#[derive(Serialize)]
struct Spacetime {
    n: u8,
    labels: Option<Vec<String>>,
    times: Vec<f64>,
    frames: Vec<Vec<u8>>,
    transitions: usize,
}

#[derive(Serialize)]
struct CoupleOut {
    attractive: bool,
    lower: Spacetime,
    upper: Spacetime,
    /// Time and site of the first event after which lower <= upper failed.
    violation: Option<(f64, usize)>,
}

/// Parses a map written one row per neighbour type `b`, entries by `a`.
fn parse_map(text: &str) -> Result<InteractionMap, String> {
    let rows = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<u8>().map_err(|_| format!("'{s}' is not a type")))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    InteractionMap::from_neighbor_rows(&rows).map_err(|e| e.to_string())
}

pub fn check_map_json(text: &str) -> Result<String, String> {
    let map = parse_map(text)?;
    let verdict = check_map_attractive(&map);
    let rates = RateTable::constant(map.n(), 1.0).map_err(|e| e.to_string())?;
    let model = ModelSpec::single(map, rates).map_err(|e| e.to_string())?;
    let orderings = if model.n() <= 5 {
        search_orderings(&model)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|p| p.image().to_vec())
            .collect()
    } else {
        Vec::new()
    };
    let out = CheckOut {
        attractive: verdict.attractive,
        violations: verdict.violations.iter().map(|v| v.to_string()).collect(),
        orderings,
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

fn setup(model: &str, sites: usize) -> Result<(ModelSpec, Lattice), String> {
    if !(3..=MAX_SITES).contains(&sites) {
        return Err(format!("sites must be in 3..={MAX_SITES}"));
    }
    let lat = Lattice::ring(sites).map_err(|e| e.to_string())?;
    let m = builtin_with_defaults(model, &Params::new(), lat.max_mass()).map_err(|e| e.to_string())?;
    Ok((m, lat))
}

fn initial(spec: &str, m: &ModelSpec, sites: usize, seed: u64) -> Result<Configuration, String> {
    let n = m.n();
    Ok(match spec {
        "bottom" => Configuration::constant(sites, 0),
        "top" => Configuration::constant(sites, n),
        "single" => {
            let mut c = Configuration::constant(sites, 0);
            c.values_mut()[sites / 2] = n;
            c
        }
        "random" => random_ordered_pair(sites, n, &mut ChaCha8Rng::seed_from_u64(seed)).1,
        other => return Err(format!("unknown initial state '{other}'")),
    })
}

fn frames(traj: &Trajectory, m: &ModelSpec, horizon: f64, count: usize) -> Spacetime {
    let count = count.clamp(2, MAX_FRAMES);
    let times: Vec<f64> = (0..count).map(|i| horizon * i as f64 / (count - 1) as f64).collect();
    let mut state = traj.initial.clone();
    let mut next = traj.transitions.iter().peekable();
    let frames = times
        .iter()
        .map(|&t| {
            while let Some(tr) = next.next_if(|tr| tr.t <= t) {
                state.values_mut()[tr.site] = tr.new;
            }
            state.values().to_vec()
        })
        .collect();
    Spacetime {
        n: m.n(),
        labels: m.labels().map(|l| l.to_vec()),
        times,
        frames,
        transitions: traj.transitions.len(),
    }
}

fn check_horizon(horizon: f64) -> Result<(), String> {
    if horizon > 0.0 && horizon <= 1e4 {
        Ok(())
    } else {
        Err("horizon must be in (0, 10000]".into())
    }
}

pub fn simulate_json(
    model: &str,
    sites: usize,
    horizon: f64,
    seed: u64,
    init: &str,
    count: usize,
) -> Result<String, String> {
    check_horizon(horizon)?;
    let (m, lat) = setup(model, sites)?;
    let eta0 = initial(init, &m, sites, seed)?;
    let stream = EventSource::new(&m, &lat, seed)
        .and_then(|s| s.window(0.0, horizon))
        .map_err(|e| e.to_string())?;
    let traj = evolve(&eta0, &stream, &m, &lat);
    Ok(serde_json::to_string(&frames(&traj, &m, horizon, count)).expect("serializable"))
}

/// Runs a random ordered pair against one event stream.
pub fn couple_json(model: &str, sites: usize, horizon: f64, seed: u64, count: usize) -> Result<String, String> {
    check_horizon(horizon)?;
    let (m, lat) = setup(model, sites)?;
    let (lo, hi) = random_ordered_pair(sites, m.n(), &mut ChaCha8Rng::seed_from_u64(seed));
    let stream = EventSource::new(&m, &lat, seed)
        .and_then(|s| s.window(0.0, horizon))
        .map_err(|e| e.to_string())?;
    let run = coupled_evolve(&[lo, hi], &stream, &m, &lat).map_err(|e| e.to_string())?;
    let out = CoupleOut {
        attractive: ims_core::check_ims_attractive(&m).attractive,
        lower: frames(&run.trajectories[0], &m, horizon, count),
        upper: frames(&run.trajectories[1], &m, horizon, count),
        violation: run.violations.first().map(|v| (v.event.t, v.site)),
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn models() -> String {
    serde_json::to_string(BUILTIN_MODELS).expect("serializable")
}

#[wasm_bindgen]
pub fn check_map(text: &str) -> Result<String, JsError> {
    js(check_map_json(text))
}

#[wasm_bindgen]
pub fn simulate(model: &str, sites: usize, horizon: f64, seed: u64, init: &str, frames: usize) -> Result<String, JsError> {
    js(simulate_json(model, sites, horizon, seed, init, frames))
}

#[wasm_bindgen]
pub fn couple(model: &str, sites: usize, horizon: f64, seed: u64, frames: usize) -> Result<String, JsError> {
    js(couple_json(model, sites, horizon, seed, frames))
}
