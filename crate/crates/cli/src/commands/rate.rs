use polymer_core::charge_models::DistSpec;
use polymer_core::lattice_walk::green_constants;
use polymer_core::rate_function::{
    check_duality_identity, rate_constant_with_chi, LegendrePair, LogGrid, ShapeCertificate, DEFAULT_TOL,
};
use serde::Serialize;

use super::{keys, resolve_dist, DEFAULT_DIMENSION};
use crate::args::RateArgs;
use crate::config::Settings;
use crate::error::{usage, CliResult};
use crate::output::Sink;

pub fn schema() -> Vec<&'static str> {
    keys(&["dimension", "identity_check", "points", "x_max"], true)
}

#[derive(Serialize)]
struct RateRecord {
    dimension: usize,
    distribution: DistSpec,
    chi_d: f64,
    /// `Γ⁻¹(χ_d)`.
    rate_constant: f64,
    /// `√(2 χ_d / σ)` for Gaussian charges of variance `σ`.
    gaussian_reference: Option<f64>,
    certificate: ShapeCertificate,
    identity_residual: Option<f64>,
}

#[derive(Serialize)]
struct RateTableRow {
    x: f64,
    rate: f64,
    rate_prime: f64,
}

pub fn run(args: &RateArgs, settings: &Settings, sink: &mut Sink) -> CliResult<()> {
    let d = settings.pick(args.dimension, "dimension")?.unwrap_or(DEFAULT_DIMENSION);
    let (spec, dist) = resolve_dist(settings, &args.dist, "gaussian")?;
    let points = settings.pick(args.points, "points")?.unwrap_or(16);
    let x_top = settings.pick(args.x_max, "x_max")?.unwrap_or(4.0);
    if points == 0 || x_top <= 0.0 || !x_top.is_finite() {
        return Err(usage("need --points >= 1 and a finite --x-max > 0"));
    }
    let constants = green_constants(d, DEFAULT_TOL)?;
    let gaussian_reference =
        matches!(spec, DistSpec::Gaussian { .. }).then(|| (2.0 * constants.chi_d / dist.variance()).sqrt());
    let pair = LegendrePair::new(dist);
    let rc = rate_constant_with_chi(&pair, d, constants.chi_d)?;
    let identity_residual = if settings.pick_switch(args.identity_check, "identity_check")? {
        let grid: Vec<f64> = LogGrid::default().values().into_iter().filter(|x| *x < pair.x_max()).collect();
        Some(check_duality_identity(&pair, &grid)?)
    } else {
        None
    };
    sink.push(
        "rate",
        &RateRecord {
            dimension: d,
            distribution: spec,
            chi_d: constants.chi_d,
            rate_constant: rc.value,
            gaussian_reference,
            certificate: rc.certificate,
            identity_residual,
        },
    )?;
    for k in 1..=points {
        let x = x_top * k as f64 / points as f64;
        if x >= pair.x_max() {
            break;
        }
        sink.push("rate_table", &RateTableRow { x, rate: pair.rate(x)?, rate_prime: pair.rate_prime(x)? })?;
    }
    Ok(())
}
