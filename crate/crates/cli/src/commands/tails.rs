use polymer_core::charge_models::ChargeDistribution;
use polymer_core::lattice_walk::green_constants;
use polymer_core::rate_function::DEFAULT_TOL;
use polymer_core::tail_lab::{
    exact_tail, naive_tail_grid, rate_curve, tilted_tail_grid, TailEstimate, TailMethod, TiltPlan,
};
use polymer_core::Error;
use serde::Serialize;

use super::{keys, require_seed, resolve_dist, DEFAULT_DIMENSION};
use crate::args::TailsArgs;
use crate::config::Settings;
use crate::error::{usage, CliResult};
use crate::output::Sink;

pub fn schema() -> Vec<&'static str> {
    keys(
        &["method", "dimension", "n", "xi", "samples", "seed", "plan", "theta", "rate_curve", "n_list", "xi_power"],
        true,
    )
}

const DEFAULT_SAMPLES: u64 = 100_000;

/// Every column is always present so CSV headers do not depend on the method.
#[derive(Serialize)]
struct TailRecord {
    distribution: String,
    method: TailMethod,
    plan: Option<&'static str>,
    dimension: usize,
    n: usize,
    xi: f64,
    probability: f64,
    log_probability: f64,
    std_error: f64,
    samples: u64,
    effective_sample_size: f64,
    theta: Option<f64>,
    exact_numerator: Option<String>,
    exact_denominator: Option<String>,
}

impl TailRecord {
    fn new(dist: &ChargeDistribution, plan: Option<&'static str>, e: TailEstimate) -> Self {
        Self {
            distribution: dist.name().to_string(),
            method: e.method,
            plan,
            dimension: e.dimension,
            n: e.n,
            xi: e.xi,
            probability: e.probability,
            log_probability: e.log_probability,
            std_error: e.std_error,
            samples: e.samples,
            effective_sample_size: e.effective_sample_size,
            theta: e.theta,
            exact_numerator: e.exact_numerator.map(|v| v.to_string()),
            exact_denominator: e.exact_denominator.map(|v| v.to_string()),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Methods {
    Exact,
    Naive,
    Tilted,
    All,
}

fn parse_plan(name: Option<String>, theta: Option<f64>) -> CliResult<(&'static str, TiltPlan)> {
    let name = name.unwrap_or_else(|| if theta.is_some() { "fixed".into() } else { "centered".into() });
    match (name.as_str(), theta) {
        ("centered", None) => Ok(("centered", TiltPlan::centered())),
        ("collective", None) => Ok(("collective", TiltPlan::collective())),
        ("fixed", Some(t)) => Ok(("fixed", TiltPlan::fixed(t))),
        ("fixed", None) => Err(usage("the fixed plan needs --theta")),
        ("centered" | "collective", Some(_)) => Err(usage("--theta applies to the fixed plan only")),
        (other, _) => Err(usage(format!("unknown plan `{other}` (centered, collective, fixed)"))),
    }
}

pub fn run(args: &TailsArgs, settings: &Settings, sink: &mut Sink) -> CliResult<()> {
    let methods = match settings.pick(args.method.clone(), "method")?.as_deref().unwrap_or("all") {
        "exact" => Methods::Exact,
        "naive" => Methods::Naive,
        "tilted" => Methods::Tilted,
        "all" => Methods::All,
        other => return Err(usage(format!("unknown method `{other}` (exact, naive, tilted, all)"))),
    };
    let d = settings.pick(args.dimension, "dimension")?.unwrap_or(DEFAULT_DIMENSION);
    let n = settings.pick(args.n, "n")?;
    let xis = settings.pick_list(args.xi.clone(), "xi")?;
    let samples = settings.pick(args.samples, "samples")?.unwrap_or(DEFAULT_SAMPLES);
    let seed = settings.pick(args.seed, "seed")?;
    let (_, dist) = resolve_dist(settings, &args.dist, "rademacher")?;
    let (plan_name, plan) = parse_plan(settings.pick(args.plan.clone(), "plan")?, settings.pick(args.theta, "theta")?)?;
    let with_curve = settings.pick_switch(args.rate_curve, "rate_curve")?;
    let n_list = settings.pick_list(args.n_list.clone(), "n_list")?;
    let xi_power = settings.pick(args.xi_power, "xi_power")?;

    if !with_curve && (n_list.is_some() || xi_power.is_some()) {
        return Err(usage("--n-list and --xi-power need --rate-curve"));
    }
    let point = match (n, xis) {
        (Some(n), Some(xis)) => Some((n, xis)),
        (None, None) if with_curve => None,
        _ => return Err(usage("tails needs both -n and --xi")),
    };

    if let Some((n, xis)) = point {
        if methods == Methods::Exact && !dist.is_spin() {
            return Err(usage("exact enumeration needs rademacher charges"));
        }
        if matches!(methods, Methods::Exact | Methods::All) && dist.is_spin() {
            for &xi in &xis {
                match exact_tail(d, n, xi) {
                    Ok(e) => sink.push("tail_estimate", &TailRecord::new(&dist, None, e))?,
                    Err(Error::TooLarge { .. }) if methods == Methods::All => break,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        if matches!(methods, Methods::Naive | Methods::All) {
            let seed = require_seed(seed, "naive sampling")?;
            for e in naive_tail_grid(d, n, &xis, &dist, samples, seed)? {
                sink.push("tail_estimate", &TailRecord::new(&dist, None, e))?;
            }
        }
        if matches!(methods, Methods::Tilted | Methods::All) {
            let seed = require_seed(seed, "tilted sampling")?;
            // A centred tilt is tuned to one threshold, so each one gets its own run.
            for &xi in &xis {
                for e in tilted_tail_grid(d, n, &[xi], &dist, &plan, samples, seed)? {
                    sink.push("tail_estimate", &TailRecord::new(&dist, Some(plan_name), e))?;
                }
            }
        }
    }

    if with_curve {
        let n_list = n_list.ok_or_else(|| usage("--rate-curve needs --n-list"))?;
        let seed = require_seed(seed, "--rate-curve")?;
        let chi = green_constants(d, DEFAULT_TOL)?.chi_d;
        let curve = rate_curve(d, &dist, &n_list, xi_power.unwrap_or(1.0), &plan, samples, seed, chi)?;
        for row in &curve.rows {
            let extra = vec![
                ("distribution", dist.name().into()),
                ("plan", plan_name.into()),
                ("dimension", curve.dimension.into()),
                ("xi_power", curve.xi_power.into()),
            ];
            sink.push_with("rate_row", extra, row)?;
        }
    }
    Ok(())
}
