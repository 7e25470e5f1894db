pub mod constants;
pub mod rate;
pub mod simulate;
pub mod tails;
pub mod verify;

use polymer_core::charge_models::{ChargeDistribution, DistSpec};

use crate::args::DistArgs;
use crate::config::Settings;
use crate::error::{usage, CliResult};

pub const DIST_KEYS: &[&str] = &["dist", "sigma", "standardize", "a", "beta"];

pub const DEFAULT_DIMENSION: usize = 3;

/// Keys of a subcommand: its own plus, when it takes a charge law, [`DIST_KEYS`].
pub fn keys(own: &[&'static str], with_dist: bool) -> Vec<&'static str> {
    let mut k = own.to_vec();
    if with_dist {
        k.extend_from_slice(DIST_KEYS);
    }
    k
}

pub fn resolve_dist(settings: &Settings, args: &DistArgs, default: &str) -> CliResult<(DistSpec, ChargeDistribution)> {
    let name = settings.pick(args.dist.clone(), "dist")?.unwrap_or_else(|| default.to_string());
    let sigma = settings.pick(args.sigma, "sigma")?;
    let standardize = settings.pick_switch(args.standardize, "standardize")?;
    let a = settings.pick(args.a, "a")?;
    let beta = settings.pick(args.beta, "beta")?;
    let spec = match name.as_str() {
        "gaussian" => DistSpec::Gaussian { sigma: sigma.unwrap_or(1.0), standardize },
        "rademacher" => DistSpec::Rademacher,
        "example_family" => DistSpec::ExampleFamily {
            a: a.ok_or_else(|| usage("example_family needs --a"))?,
            beta: beta.ok_or_else(|| usage("example_family needs --beta"))?,
        },
        other => return Err(usage(format!("unknown distribution `{other}` (gaussian, rademacher, example_family)"))),
    };
    if !matches!(spec, DistSpec::Gaussian { .. }) && (sigma.is_some() || standardize) {
        return Err(usage("--sigma and --standardize apply to gaussian charges only"));
    }
    if !matches!(spec, DistSpec::ExampleFamily { .. }) && (a.is_some() || beta.is_some()) {
        return Err(usage("--a and --beta apply to example_family charges only"));
    }
    let dist = spec.build()?;
    Ok((spec, dist))
}

pub fn require_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| usage(format!("{what} is stochastic: --seed is required")))
}
