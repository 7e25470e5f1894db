use polymer_core::lattice_walk::{simulate_walk, WalkConfig};
use polymer_core::numerics::rng::derive_seed;
use polymer_core::polymer_energy::{build_sample, energy};
use rayon::prelude::*;
use serde::Serialize;

use super::{keys, require_seed, resolve_dist, DEFAULT_DIMENSION};
use crate::args::SimulateArgs;
use crate::config::Settings;
use crate::error::{usage, CliResult};
use crate::output::Sink;

pub fn schema() -> Vec<&'static str> {
    keys(&["dimension", "n", "samples", "seed"], true)
}

#[derive(Serialize)]
struct SampleRecord {
    index: u64,
    dimension: usize,
    n: usize,
    walk_seed: u64,
    charge_seed: u64,
    /// Distinct sites visited.
    sites: usize,
    max_local_time: u32,
    h: f64,
    x_check: f64,
    y: f64,
}

pub fn run(args: &SimulateArgs, settings: &Settings, sink: &mut Sink) -> CliResult<()> {
    let d = settings.pick(args.dimension, "dimension")?.unwrap_or(DEFAULT_DIMENSION);
    let n = settings.pick(args.n, "n")?.ok_or_else(|| usage("simulate needs -n"))?;
    let samples = settings.pick(args.samples, "samples")?.unwrap_or(1);
    let seed = require_seed(settings.pick(args.seed, "seed")?, "simulate")?;
    let (_, dist) = resolve_dist(settings, &args.dist, "gaussian")?;
    let records = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (walk_seed, charge_seed) = (derive_seed(seed, 2 * i), derive_seed(seed, 2 * i + 1));
            let traj = simulate_walk(&WalkConfig { dimension: d, steps: n, seed: walk_seed })?;
            let sample = build_sample(&traj, &dist, charge_seed)?;
            let e = energy(&sample);
            Ok(SampleRecord {
                index: i,
                dimension: d,
                n,
                walk_seed,
                charge_seed,
                sites: sample.sites().len(),
                max_local_time: sample.sites().values().map(|s| s.local_time).max().unwrap_or(0),
                h: e.h,
                x_check: e.x_check,
                y: e.y,
            })
        })
        .collect::<polymer_core::Result<Vec<_>>>()?;
    for r in &records {
        sink.push("sample", r)?;
    }
    Ok(())
}
