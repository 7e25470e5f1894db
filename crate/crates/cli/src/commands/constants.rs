use polymer_core::lattice_walk::{green_constants, return_probability_mc};
use polymer_core::rate_function::DEFAULT_TOL;
use serde::Serialize;

use super::{require_seed, DEFAULT_DIMENSION};
use crate::args::ConstantsArgs;
use crate::config::Settings;
use crate::error::CliResult;
use crate::output::Sink;

pub fn schema() -> Vec<&'static str> {
    vec!["dimension", "tol", "mc_check", "samples", "horizon", "seed"]
}

#[derive(Serialize)]
struct ConstantsRecord {
    dimension: usize,
    #[serde(rename = "G")]
    green: f64,
    c_d: f64,
    return_probability: f64,
    chi_d: f64,
    tolerance: f64,
    error_estimate: f64,
    order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc: Option<McRecord>,
}

#[derive(Serialize)]
struct McRecord {
    samples: u64,
    horizon: u32,
    seed: u64,
    estimate: f64,
    std_error: f64,
    truncation_allowance: f64,
    /// `|1 - 1/G - estimate| <= 3 SE + truncation_allowance`.
    agrees: bool,
}

pub fn run(args: &ConstantsArgs, settings: &Settings, sink: &mut Sink) -> CliResult<()> {
    let d = settings.pick(args.dimension, "dimension")?.unwrap_or(DEFAULT_DIMENSION);
    let tol = settings.pick(args.tol, "tol")?.unwrap_or(DEFAULT_TOL);
    let c = green_constants(d, tol)?;
    let mc = if settings.pick_switch(args.mc_check, "mc_check")? {
        let seed = require_seed(settings.pick(args.seed, "seed")?, "--mc-check")?;
        let samples = settings.pick(args.samples, "samples")?.unwrap_or(100_000);
        let horizon = settings.pick(args.horizon, "horizon")?.unwrap_or(10_000);
        let e = return_probability_mc(d, horizon, samples, seed)?;
        let gap = (c.return_probability - e.estimate).abs();
        Some(McRecord {
            samples,
            horizon,
            seed,
            estimate: e.estimate,
            std_error: e.std_error,
            truncation_allowance: e.truncation_allowance,
            agrees: gap <= 3.0 * e.std_error + e.truncation_allowance,
        })
    } else {
        None
    };
    sink.push(
        "constants",
        &ConstantsRecord {
            dimension: d,
            green: c.green_at_origin,
            c_d: c.c_d,
            return_probability: c.return_probability,
            chi_d: c.chi_d,
            tolerance: c.tolerance,
            error_estimate: c.error_estimate,
            order: c.order,
            mc,
        },
    )
}
