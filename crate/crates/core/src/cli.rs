//! The `ims` command-line tool.
//!
//! Every subcommand that is given `--out DIR` writes its outputs there
//! together with `manifest.json`, which `ims rerun` replays.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attractive::check_ims_attractive;
use crate::catalog::{builtin_with_defaults, default_params, Params, BUILTIN_MODELS};
use crate::cftp::cftp_batch;
use crate::equivalence::{run_equivalence, EquivalenceConfig};
use crate::error::{Error, Result};
use crate::lattice::{random_ordered_pair, Boundary, Configuration, Kernel, Lattice};
use crate::map::{ModelSpec, Particle};
use crate::model_file::{serialize_model, LatticeSpec, ModelFile};
use crate::oracle::{
    build_coupled_generator, build_generator, coupled_order_preserved, enumerate_upsets,
    generator_monotone_with, semigroup_monotone_with, stationary,
};
use crate::permutation::{search_orderings, MAX_SEARCH_N};
use crate::sim::{coupled_evolve, density_series, evolve, write_events_csv, EventSource};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "ims", version, about = "Interaction-map particle systems: attractiveness, simulation, oracle, exact sampling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Attractiveness report and search for attractive relabellings.
    Check(CheckArgs),
    /// Simulate one trajectory from the graphical representation.
    Simulate(SimulateArgs),
    /// Shared-event runs from ordered initial pairs; reports order violations.
    Couple(CoupleArgs),
    /// Exact stationary samples by coupling from the past.
    Cftp(CftpArgs),
    /// Brute-force generator, monotonicity, stationary law and coupled generator.
    Oracle(OracleArgs),
    /// Random models: checker verdict against the monotonicity oracle.
    Equivalence(EquivalenceArgs),
    /// Replay a run from its manifest.
    Rerun(RerunArgs),
    /// List the built-in models and their default parameters.
    Models,
    /// Print a model as a numeric JSON model file.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Periodic,
    Free,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Periodic => Boundary::Periodic,
            BoundaryArg::Free => Boundary::Free,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelOpts {
    /// Built-in model name or path to a JSON model file.
    pub model: String,
    /// Parameter override, `name=value`. Repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Side lengths, e.g. `32` or `4x4`.
    #[arg(long)]
    pub lattice: Option<String>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
    /// `nn`, `box:R` or `complete`.
    #[arg(long)]
    pub kernel: Option<String>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `bottom`, `top`, `single:SITE:TYPE` or a configuration line.
    #[arg(long, default_value = "top")]
    pub init: String,
    /// Spacing of the density grid.
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    /// Also write the full event log.
    #[arg(long)]
    pub events: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoupleArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    /// Number of seeds, used as `seed, seed+1, ...`.
    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random ordered pairs per seed.
    #[arg(long, default_value_t = 10)]
    pub pairs: usize,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    /// Fixed lower configuration (replaces the random pairs; needs --upper).
    #[arg(long, requires = "upper")]
    pub lower: Option<String>,
    #[arg(long, requires = "lower")]
    pub upper: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CftpArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base window; defaults to sites / c.
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long, default_value_t = 30)]
    pub max_epochs: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    /// Times for the semigroup check.
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
    pub times: Vec<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EquivalenceArgs {
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub sites: usize,
    #[arg(long, default_value_t = 2)]
    pub n: Particle,
    #[arg(long, value_enum, default_value = "free")]
    pub boundary: BoundaryArg,
    /// Probability that a rate is zero (structured zeros are reported only).
    #[arg(long, default_value_t = 0.0)]
    pub zero_prob: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
    pub times: Vec<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub model: ModelOpts,
}

/// Everything needed to replay a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Command-line arguments without the program name and without `--out`.
    pub args: Vec<String>,
    pub model: Option<String>,
    pub model_sha256: Option<String>,
    pub lattice: Option<LatticeSpec>,
    pub seeds: Vec<u64>,
    pub horizon: Option<f64>,
    pub outputs: Vec<String>,
}

/// Outcome of a subcommand: negative verdicts exit with 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Positive,
    Negative,
}

struct Resolved {
    name: String,
    model: ModelSpec,
    lattice: Lattice,
    lattice_spec: LatticeSpec,
    hash: String,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X'])
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad lattice '{s}': expected e.g. 32 or 4x4")))
        })
        .collect()
}

pub fn parse_kernel(s: &str) -> Result<Kernel> {
    match s {
        "nn" | "nearest" | "nearest_neighbor" => Ok(Kernel::NearestNeighbor),
        "complete" => Ok(Kernel::Complete),
        _ => match s.strip_prefix("box:") {
            Some(r) => Ok(Kernel::Box {
                range: r.parse().map_err(|_| usage(format!("bad box range in '{s}'")))?,
            }),
            None => Err(usage(format!("unknown kernel '{s}': use nn, box:R or complete"))),
        },
    }
}

fn parse_params(raw: &[String]) -> Result<Params> {
    let mut out = Params::new();
    for p in raw {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| usage(format!("--param '{p}' is not NAME=VALUE")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| usage(format!("--param '{p}': '{v}' is not a number")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// `bottom`, `top`, `single:SITE:TYPE` (type `n` if omitted) or a line of
/// space-separated types.
pub fn parse_init(spec: &str, model: &ModelSpec, lattice: &Lattice) -> Result<Configuration> {
    let sites = lattice.num_sites();
    let c = match spec {
        "bottom" => Configuration::constant(sites, 0),
        "top" => Configuration::constant(sites, model.n()),
        _ => {
            if let Some(rest) = spec.strip_prefix("single:") {
                let mut it = rest.split(':');
                let site: usize = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| usage(format!("bad --init '{spec}'")))?;
                let ty: Particle = match it.next() {
                    Some(t) => t.parse().map_err(|_| usage(format!("bad --init '{spec}'")))?,
                    None => model.n(),
                };
                if site >= sites {
                    return Err(usage(format!("--init site {site} outside 0..{sites}")));
                }
                let mut c = Configuration::constant(sites, 0);
                c.values_mut()[site] = ty;
                c
            } else {
                spec.parse()?
            }
        }
    };
    c.validate(sites, model.n())?;
    Ok(c)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn resolve(opts: &ModelOpts, default_dims: &[usize], default_boundary: Boundary) -> Result<Resolved> {
    let params = parse_params(&opts.params)?;
    let path = Path::new(&opts.model);
    let file = if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
        Some((ModelFile::from_json(&text)?, text))
    } else {
        None
    };
    let base = file.as_ref().and_then(|(f, _)| f.lattice.clone());
    let dims = match &opts.lattice {
        Some(s) => parse_dims(s)?,
        None => base.as_ref().map_or(default_dims.to_vec(), |b| b.dims.clone()),
    };
    let boundary = match opts.boundary {
        Some(b) => b.into(),
        None if opts.lattice.is_none() => base.as_ref().map_or(default_boundary, |b| b.boundary),
        None => default_boundary,
    };
    let kernel = match &opts.kernel {
        Some(k) => parse_kernel(k)?,
        None => base.as_ref().map_or(Kernel::NearestNeighbor, |b| b.kernel.clone()),
    };
    let lattice_spec = LatticeSpec { dims, boundary, kernel };
    let lattice = lattice_spec.build()?;
    let w = lattice.max_mass();
    match file {
        Some((mut f, text)) => {
            for (k, v) in &params {
                if !f.parameters.contains_key(k) {
                    return Err(usage(format!("model file has no parameter '{k}'")));
                }
                f.parameters.insert(k.clone(), *v);
            }
            if w == 0.0 {
                return Err(usage("lattice has no neighbours (kernel mass 0)"));
            }
            Ok(Resolved {
                name: opts.model.clone(),
                model: f.to_model(Some(w))?,
                lattice,
                lattice_spec,
                hash: sha256_hex(text.as_bytes()),
            })
        }
        None => {
            if !BUILTIN_MODELS.contains(&opts.model.as_str()) {
                return Err(usage(format!(
                    "'{}' is neither a file nor a built-in model ({})",
                    opts.model,
                    BUILTIN_MODELS.join(", ")
                )));
            }
            let model = builtin_with_defaults(&opts.model, &params, w)?;
            let json = serialize_model(&model, Some(lattice_spec.clone()));
            Ok(Resolved {
                name: opts.model.clone(),
                model,
                lattice,
                lattice_spec,
                hash: sha256_hex(json.as_bytes()),
            })
        }
    }
}

/// Collects output files and writes them with the manifest.
struct Outputs {
    dir: Option<PathBuf>,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: Option<PathBuf>) -> Self {
        Self { dir, files: Vec::new() }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn finish(self, mut manifest: RunManifest) -> Result<()> {
        let Some(dir) = self.dir else { return Ok(()) };
        let io = |e: std::io::Error| usage(format!("writing to {}: {e}", dir.display()));
        fs::create_dir_all(&dir).map_err(io)?;
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes).map_err(io)?;
        }
        manifest.outputs = self.files.iter().map(|(n, _)| n.clone()).collect();
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(dir.join(MANIFEST_FILE), text + "\n").map_err(io)?;
        Ok(())
    }
}

struct Ctx {
    args: Vec<String>,
    expected_hash: Option<String>,
}

impl Ctx {
    fn manifest(&self, sub: &str, r: Option<&Resolved>, seeds: Vec<u64>, horizon: Option<f64>) -> RunManifest {
        let mut args = self.args.clone();
        let mut model = None;
        if let Some(r) = r {
            let p = Path::new(&r.name);
            let shown = if p.is_file() {
                fs::canonicalize(p).map_or(r.name.clone(), |p| p.display().to_string())
            } else {
                r.name.clone()
            };
            if let Some(a) = args.iter_mut().find(|a| **a == r.name) {
                *a = shown.clone();
            }
            model = Some(shown);
        }
        RunManifest {
            tool: "ims".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: sub.into(),
            args,
            model,
            model_sha256: r.map(|r| r.hash.clone()),
            lattice: r.map(|r| r.lattice_spec.clone()),
            seeds,
            horizon,
            outputs: Vec::new(),
        }
    }

    fn check_hash(&self, r: &Resolved) -> Result<()> {
        match &self.expected_hash {
            Some(h) if *h != r.hash => Err(usage(format!(
                "model '{}' changed since the manifest was written (sha256 {} != {h})",
                r.name, r.hash
            ))),
            _ => Ok(()),
        }
    }
}

fn type_legend(m: &ModelSpec) -> String {
    match m.labels() {
        Some(l) => l
            .iter()
            .enumerate()
            .map(|(a, s)| format!("{a}={s}"))
            .collect::<Vec<_>>()
            .join(" "),
        None => format!("0..={}", m.n()),
    }
}

fn header(r: &Resolved) -> String {
    format!(
        "model: {}\ntypes: {}\nlayers: {}\nlattice: {:?} {:?} {:?} ({} sites, kernel mass {})\n",
        r.name,
        type_legend(&r.model),
        r.model.layers().len(),
        r.lattice_spec.dims,
        r.lattice_spec.boundary,
        r.lattice_spec.kernel,
        r.lattice.num_sites(),
        r.lattice.max_mass()
    )
}

fn cmd_check(a: &CheckArgs, ctx: &Ctx) -> Result<Verdict> {
    let r = resolve(&a.model, &[32], Boundary::Periodic)?;
    ctx.check_hash(&r)?;
    let v = check_ims_attractive(&r.model);
    let mut rep = header(&r);
    let _ = writeln!(rep, "verdict: {}", if v.attractive { "attractive" } else { "NOT attractive" });
    if !v.attractive {
        let _ = writeln!(rep, "violations ({}):", v.violations.len());
        for viol in &v.violations {
            let _ = writeln!(rep, "  {viol}");
        }
    }
    if r.model.n() <= MAX_SEARCH_N {
        let found = search_orderings(&r.model)?;
        let _ = writeln!(rep, "attractive relabellings: {}", found.len());
        for p in &found {
            let _ = writeln!(rep, "  {p}");
        }
    } else {
        let _ = writeln!(rep, "attractive relabellings: not searched (n > {MAX_SEARCH_N})");
    }
    print!("{rep}");
    let mut out = Outputs::new(a.out.clone());
    out.add("report.txt", rep.into_bytes());
    out.finish(ctx.manifest("check", Some(&r), vec![], None))?;
    Ok(if v.attractive { Verdict::Positive } else { Verdict::Negative })
}

fn cmd_simulate(a: &SimulateArgs, ctx: &Ctx) -> Result<Verdict> {
    let r = resolve(&a.model, &[32], Boundary::Periodic)?;
    ctx.check_hash(&r)?;
    if !(a.horizon > 0.0) || !a.horizon.is_finite() {
        return Err(usage(format!("--horizon must be positive, got {}", a.horizon)));
    }
    if !(a.dt > 0.0) {
        return Err(usage(format!("--dt must be positive, got {}", a.dt)));
    }
    let init = parse_init(&a.init, &r.model, &r.lattice)?;
    let stream = EventSource::new(&r.model, &r.lattice, a.seed)?.window(0.0, a.horizon)?;
    let traj = evolve(&init, &stream, &r.model, &r.lattice);
    let steps = (a.horizon / a.dt).floor() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|k| ((k as f64 * a.dt * 1e9).round() / 1e9).min(a.horizon))
        .collect();
    let density = density_series(&traj, &grid, r.model.n())?;
    let mut out = Outputs::new(a.out.clone());
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).expect("in-memory write");
    out.add("trajectory.csv", buf);
    let mut buf = Vec::new();
    density.write_csv(&mut buf).expect("in-memory write");
    out.add("density.csv", buf);
    out.add("final.txt", format!("{}\n", traj.final_config).into_bytes());
    if a.events {
        let mut buf = Vec::new();
        write_events_csv(stream.iter(), &mut buf).expect("in-memory write");
        out.add("events.csv", buf);
    }
    print!("{}", header(&r));
    println!("transitions: {}", traj.transitions.len());
    println!("final counts: {:?}", traj.final_config.counts(r.model.n()));
    out.finish(ctx.manifest("simulate", Some(&r), vec![a.seed], Some(a.horizon)))?;
    Ok(Verdict::Positive)
}

fn cmd_couple(a: &CoupleArgs, ctx: &Ctx) -> Result<Verdict> {
    let r = resolve(&a.model, &[32], Boundary::Periodic)?;
    ctx.check_hash(&r)?;
    if !(a.horizon > 0.0) {
        return Err(usage(format!("--horizon must be positive, got {}", a.horizon)));
    }
    let fixed = match (&a.lower, &a.upper) {
        (Some(l), Some(u)) => {
            let (l, u) = (parse_init(l, &r.model, &r.lattice)?, parse_init(u, &r.model, &r.lattice)?);
            if !l.le(&u) {
                return Err(usage("--lower must be <= --upper sitewise"));
            }
            Some((l, u))
        }
        _ => None,
    };
    let attractive = check_ims_attractive(&r.model).attractive;
    let seeds: Vec<u64> = (0..a.seeds).map(|i| a.seed.wrapping_add(i)).collect();
    let run_seed = |seed: u64| -> Result<Vec<String>> {
        let configs: Vec<Configuration> = match &fixed {
            Some((l, u)) => vec![l.clone(), u.clone()],
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..a.pairs)
                    .flat_map(|_| {
                        let (l, u) = random_ordered_pair(r.lattice.num_sites(), r.model.n(), &mut rng);
                        [l, u]
                    })
                    .collect()
            }
        };
        let stream = EventSource::new(&r.model, &r.lattice, seed)?.window(0.0, a.horizon)?;
        let mut rows = Vec::new();
        match coupled_evolve(&configs, &stream, &r.model, &r.lattice) {
            Ok(run) => {
                for v in run.violations {
                    rows.push(format!(
                        "{seed},{},{},{},{},{}",
                        v.lower, v.upper, v.event_index, v.event.t, v.site
                    ));
                }
            }
            Err(Error::OrderViolation { event_index, time, lower, upper, site }) => {
                rows.push(format!("{seed},{lower},{upper},{event_index},{time},{site}"));
            }
            Err(e) => return Err(e),
        }
        Ok(rows)
    };
    #[cfg(feature = "parallel")]
    let per_seed: Vec<Vec<String>> = {
        use rayon::prelude::*;
        seeds.par_iter().map(|&s| run_seed(s)).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let per_seed: Vec<Vec<String>> = seeds.iter().map(|&s| run_seed(s)).collect::<Result<_>>()?;

    let total: usize = per_seed.iter().map(Vec::len).sum();
    let seeds_hit = per_seed.iter().filter(|v| !v.is_empty()).count();
    let mut csv = String::from("seed,lower,upper,event_index,t,site\n");
    for row in per_seed.iter().flatten() {
        csv.push_str(row);
        csv.push('\n');
    }
    let mut rep = header(&r);
    let _ = writeln!(rep, "attractive: {attractive}");
    let _ = writeln!(
        rep,
        "seeds: {}  pairs per seed: {}  horizon: {}",
        a.seeds,
        if fixed.is_some() { 1 } else { a.pairs },
        a.horizon
    );
    let _ = writeln!(rep, "order violations: {total} (in {seeds_hit} seeds)");
    print!("{rep}");
    let mut out = Outputs::new(a.out.clone());
    out.add("report.txt", rep.into_bytes());
    out.add("violations.csv", csv.into_bytes());
    out.finish(ctx.manifest("couple", Some(&r), seeds, Some(a.horizon)))?;
    Ok(if total == 0 { Verdict::Positive } else { Verdict::Negative })
}

fn cmd_cftp(a: &CftpArgs, ctx: &Ctx) -> Result<Verdict> {
    let r = resolve(&a.model, &[8], Boundary::Periodic)?;
    ctx.check_hash(&r)?;
    let seeds: Vec<u64> = (0..a.samples as u64).map(|i| a.seed.wrapping_add(i)).collect();
    let batch = match cftp_batch(&r.model, &r.lattice, a.seed, a.samples, a.t0, a.max_epochs) {
        Ok(b) => b,
        Err(Error::Batch { index, source }) if matches!(*source, Error::NoCoalescence { .. }) => {
            println!("{}sample {index}: {source}", header(&r));
            return Ok(Verdict::Negative);
        }
        Err(e) => return Err(e),
    };
    let mut samples = Vec::new();
    batch.write_samples(&mut samples).expect("in-memory write");
    let mut hist = Vec::new();
    batch.write_histogram_csv(&mut hist).expect("in-memory write");
    let mut rep = header(&r);
    let max_epoch = batch.results.iter().map(|x| x.epochs_used).max().unwrap_or(0);
    let events: u64 = batch.results.iter().map(|x| x.events_consumed).sum();
    let _ = writeln!(rep, "samples: {}  max epochs used: {max_epoch}  events: {events}", a.samples);
    let _ = writeln!(rep, "distinct outcomes: {}", batch.histogram.len());
    print!("{rep}");
    let mut out = Outputs::new(a.out.clone());
    out.add("samples.txt", samples);
    out.add("histogram.csv", hist);
    out.add("report.txt", rep.into_bytes());
    out.finish(ctx.manifest("cftp", Some(&r), seeds, None))?;
    Ok(Verdict::Positive)
}

fn cmd_oracle(a: &OracleArgs, ctx: &Ctx) -> Result<Verdict> {
    let r = resolve(&a.model, &[2], Boundary::Free)?;
    ctx.check_hash(&r)?;
    let q = build_generator(&r.model, &r.lattice)?;
    let mut rep = header(&r);
    let _ = writeln!(rep, "states: {}", q.len());
    let checker = check_ims_attractive(&r.model).attractive;
    let _ = writeln!(rep, "checker: {}", if checker { "attractive" } else { "NOT attractive" });
    let mut negative = false;
    match enumerate_upsets(&q.space) {
        Ok(upsets) => {
            let _ = writeln!(rep, "up-sets: {}", upsets.len());
            let g = generator_monotone_with(&q, &upsets);
            negative |= !g.monotone;
            let _ = writeln!(rep, "generator: {g}");
            let s = semigroup_monotone_with(&q, &upsets, &a.times, a.tol)?;
            let _ = writeln!(rep, "semigroup (t = {:?}, tol {}): {s}", a.times, a.tol);
        }
        Err(e) => {
            let _ = writeln!(rep, "monotonicity: skipped ({e})");
        }
    }
    let st = stationary(&q)?;
    let _ = writeln!(
        rep,
        "stationary: {} ({} closed class{})",
        if st.unique { "unique" } else { "NOT unique" },
        st.closed_classes.len(),
        if st.closed_classes.len() == 1 { "" } else { "es" }
    );
    let mut csv = String::from("configuration,probability\n");
    for (i, p) in st.distribution.iter().enumerate() {
        let _ = writeln!(csv, "{},{p}", q.space.state(i));
    }
    match build_coupled_generator(&r.model, &r.model, &r.lattice) {
        Ok(cq) => {
            let rep_c = coupled_order_preserved(&cq);
            negative |= !rep_c.preserved;
            match &rep_c.counterexample {
                None => {
                    let _ = writeln!(rep, "coupled generator: ordered region closed");
                }
                Some(c) => {
                    let _ = writeln!(
                        rep,
                        "coupled generator: order NOT preserved ({} escapes), first: {c}",
                        rep_c.escapes.len()
                    );
                }
            }
        }
        Err(e) => {
            let _ = writeln!(rep, "coupled generator: skipped ({e})");
        }
    }
    print!("{rep}");
    let mut out = Outputs::new(a.out.clone());
    out.add("report.txt", rep.into_bytes());
    out.add("stationary.csv", csv.into_bytes());
    out.finish(ctx.manifest("oracle", Some(&r), vec![], None))?;
    Ok(if negative { Verdict::Negative } else { Verdict::Positive })
}

fn cmd_equivalence(a: &EquivalenceArgs, ctx: &Ctx) -> Result<Verdict> {
    let cfg = EquivalenceConfig {
        trials: a.trials,
        seed: a.seed,
        sites: a.sites,
        n: a.n,
        boundary: a.boundary.into(),
        zero_prob: a.zero_prob,
        times: a.times.clone(),
        tol: a.tol,
        ..Default::default()
    };
    let report = run_equivalence(&cfg)?;
    let rep = report.to_string();
    let mut csv = String::from("trial,checker,generator,semigroup\n");
    for o in &report.outcomes {
        let _ = writeln!(csv, "{},{},{},{}", o.index, o.checker, o.generator, o.semigroup);
    }
    print!("{rep}");
    let mut out = Outputs::new(a.out.clone());
    out.add("report.txt", rep.into_bytes());
    out.add("trials.csv", csv.into_bytes());
    out.finish(ctx.manifest("equivalence", None, vec![a.seed], None))?;
    // with structured zeros disagreement is reported, not a failure
    Ok(if report.all_agree() || a.zero_prob > 0.0 {
        Verdict::Positive
    } else {
        Verdict::Negative
    })
}

fn cmd_models() -> Result<Verdict> {
    for name in BUILTIN_MODELS {
        let p: BTreeMap<String, f64> = default_params(name)?;
        let list: Vec<String> = p.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("{name:20} {}", list.join(" "));
    }
    Ok(Verdict::Positive)
}

fn cmd_export(a: &ExportArgs) -> Result<Verdict> {
    let r = resolve(&a.model, &[32], Boundary::Periodic)?;
    println!("{}", serialize_model(&r.model, Some(r.lattice_spec)));
    Ok(Verdict::Positive)
}

/// Strips `--out X` / `--out=X` from an argument list.
fn strip_out(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

fn cmd_rerun(a: &RerunArgs) -> Result<Verdict> {
    let text = fs::read_to_string(&a.manifest)
        .map_err(|e| usage(format!("reading {}: {e}", a.manifest.display())))?;
    let m: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("bad manifest: {e}")))?;
    if m.subcommand == "rerun" {
        return Err(usage("manifest records a rerun"));
    }
    let mut argv = vec!["ims".to_string()];
    argv.extend(m.args.iter().cloned());
    argv.push("--out".into());
    argv.push(a.out.display().to_string());
    let cli = Cli::try_parse_from(&argv).map_err(|e| usage(format!("manifest arguments: {e}")))?;
    let ctx = Ctx {
        args: m.args.clone(),
        expected_hash: m.model_sha256.clone(),
    };
    dispatch(&cli.command, &ctx)
}

fn dispatch(cmd: &Command, ctx: &Ctx) -> Result<Verdict> {
    match cmd {
        Command::Check(a) => cmd_check(a, ctx),
        Command::Simulate(a) => cmd_simulate(a, ctx),
        Command::Couple(a) => cmd_couple(a, ctx),
        Command::Cftp(a) => cmd_cftp(a, ctx),
        Command::Oracle(a) => cmd_oracle(a, ctx),
        Command::Equivalence(a) => cmd_equivalence(a, ctx),
        Command::Rerun(a) => cmd_rerun(a),
        Command::Models => cmd_models(),
        Command::Export(a) => cmd_export(a),
    }
}

/// Runs the tool on `argv` (including the program name) and returns the
/// process exit code: 0 success, 1 negative verdict, 2 usage or validation
/// error.
pub fn run(argv: &[String]) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let ctx = Ctx {
        args: strip_out(&argv[1.min(argv.len())..]),
        expected_hash: None,
    };
    match dispatch(&cli.command, &ctx) {
        Ok(Verdict::Positive) => 0,
        Ok(Verdict::Negative) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    ExitCode::from(run(&argv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_and_kernels() {
        assert_eq!(parse_dims("32").unwrap(), vec![32]);
        assert_eq!(parse_dims("4x5").unwrap(), vec![4, 5]);
        assert!(parse_dims("4by5").is_err());
        assert_eq!(parse_kernel("box:2").unwrap(), Kernel::Box { range: 2 });
        assert!(parse_kernel("ring").is_err());
    }

    #[test]
    fn init_forms() {
        let m = builtin_with_defaults("two_type", &Params::new(), 2.0).unwrap();
        let lat = Lattice::ring(4).unwrap();
        assert_eq!(parse_init("bottom", &m, &lat).unwrap().to_string(), "0 0 0 0");
        assert_eq!(parse_init("top", &m, &lat).unwrap().to_string(), "2 2 2 2");
        assert_eq!(parse_init("single:1:1", &m, &lat).unwrap().to_string(), "0 1 0 0");
        assert_eq!(parse_init("single:3", &m, &lat).unwrap().to_string(), "0 0 0 2");
        assert_eq!(parse_init("0 1 2 0", &m, &lat).unwrap().to_string(), "0 1 2 0");
        assert!(parse_init("single:4:1", &m, &lat).is_err());
        assert!(parse_init("0 3 0 0", &m, &lat).is_err());
        assert!(parse_init("0 1", &m, &lat).is_err());
    }

    #[test]
    fn out_flag_is_stripped() {
        let a: Vec<String> = ["check", "contact", "--out", "x", "--out=y", "--lattice", "4"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(strip_out(&a), vec!["check", "contact", "--lattice", "4"]);
    }

    #[test]
    fn exit_codes() {
        let argv = |s: &str| -> Vec<String> { s.split_whitespace().map(String::from).collect() };
        assert_eq!(run(&argv("ims check contact")), 0);
        assert_eq!(run(&argv("ims check two_type")), 1);
        assert_eq!(run(&argv("ims check nosuchmodel")), 2);
        assert_eq!(run(&argv("ims simulate contact --horizon -1")), 2);
        assert_eq!(run(&argv("ims frobnicate")), 2);
    }
}
