use rand::Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::charge_models::{ChargeDistribution, TiltedSampler};
use crate::error::{invalid, Error, Result};
use crate::lattice_walk::{check_dimension, CHUNK};
use crate::numerics::rng::{derive_seed, task_rng};
use crate::numerics::stats::LogSumExp;
use crate::polymer_energy::{EnergyWorkspace, HoldBias};
use crate::rate_function::{rate_constant_with_chi, LegendrePair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Exact,
    Naive,
    Tilted,
}

/// An estimate of `P(X̌_n >= xi)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailEstimate {
    pub method: TailMethod,
    pub dimension: usize,
    pub n: usize,
    pub xi: f64,
    pub probability: f64,
    /// `log p̂`, kept accurate when `p̂` underflows.
    pub log_probability: f64,
    pub std_error: f64,
    pub samples: u64,
    /// `(Σw)² / Σw²` over all samples; equals `samples` for unweighted methods.
    pub effective_sample_size: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_numerator: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_denominator: Option<u128>,
}

/// Which sites receive tilted charges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRule {
    MostVisited,
    Origin,
    /// Every visited site, each with its own tilt direction.
    AllSites,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaRule {
    Fixed(f64),
    /// `θ = I'(m)` with `m` the per-charge mean that moves `X̌_n` to `ξ`:
    /// `m = √ξ / l` for one target with local time `l`, and
    /// `m = √(ξ / Σ_z l_z²)` when every site is tilted.
    Centered,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TiltPlan {
    pub target: TargetRule,
    pub theta: ThetaRule,
    pub bias: Option<HoldBias>,
    /// Tilt each target site by `+θ` or `-θ` with probability 1/2, weighting by
    /// the mixture ratio `exp(lΓ(θ)) / cosh(θq)`; otherwise always by `+θ`.
    pub two_sided: bool,
}

impl TiltPlan {
    pub fn centered() -> Self {
        Self { target: TargetRule::MostVisited, theta: ThetaRule::Centered, bias: None, two_sided: false }
    }

    pub fn fixed(theta: f64) -> Self {
        Self { target: TargetRule::MostVisited, theta: ThetaRule::Fixed(theta), bias: None, two_sided: false }
    }

    /// Two-sided centred tilt on every visited site.
    pub fn collective() -> Self {
        Self { target: TargetRule::AllSites, theta: ThetaRule::Centered, bias: None, two_sided: true }
    }

    fn validate(&self) -> Result<()> {
        if let ThetaRule::Fixed(t) = self.theta {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(invalid(format!("tilt parameter must be finite and >= 0, got {t}")));
            }
        }
        if let Some(b) = self.bias {
            if !(0.0..1.0).contains(&b.hold) {
                return Err(invalid(format!("hold bias must lie in [0, 1), got {}", b.hold)));
            }
        }
        Ok(())
    }
}

fn check_common(d: usize, n: usize, xis: &[f64], samples: u64) -> Result<()> {
    check_dimension(d)?;
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if samples == 0 {
        return Err(invalid("at least one sample is required"));
    }
    if xis.is_empty() || xis.iter().any(|x| x.is_nan()) {
        return Err(invalid("xi grid must be nonempty and free of NaN"));
    }
    Ok(())
}

fn chunk_bounds(samples: u64) -> impl ParallelIterator<Item = (u64, u64)> {
    (0..samples.div_ceil(CHUNK)).into_par_iter().map(move |c| (c * CHUNK, ((c + 1) * CHUNK).min(samples)))
}

/// Plain Monte Carlo for several thresholds from one set of samples.
pub fn naive_tail_grid(
    d: usize,
    n: usize,
    xis: &[f64],
    dist: &ChargeDistribution,
    samples: u64,
    seed: u64,
) -> Result<Vec<TailEstimate>> {
    check_common(d, n, xis, samples)?;
    let partial: Vec<Vec<u64>> = chunk_bounds(samples)
        .map(|(lo, hi)| {
            let mut ws = EnergyWorkspace::new(d);
            let mut hits = vec![0u64; xis.len()];
            for i in lo..hi {
                let mut rng = task_rng(seed, i);
                ws.walk(n, &mut rng, None);
                ws.charge_path(|_, _| dist.sample(&mut rng));
                let x = ws.x_check();
                for (h, xi) in hits.iter_mut().zip(xis) {
                    *h += (x >= *xi) as u64;
                }
            }
            hits
        })
        .collect();
    let mut hits = vec![0u64; xis.len()];
    for p in partial {
        for (a, b) in hits.iter_mut().zip(p) {
            *a += b;
        }
    }
    Ok(xis
        .iter()
        .zip(hits)
        .map(|(xi, h)| {
            let p = h as f64 / samples as f64;
            TailEstimate {
                method: TailMethod::Naive,
                dimension: d,
                n,
                xi: *xi,
                probability: p,
                log_probability: p.ln(),
                std_error: (p * (1.0 - p) / samples as f64).sqrt(),
                samples,
                effective_sample_size: samples as f64,
                theta: None,
                exact_numerator: None,
                exact_denominator: None,
            }
        })
        .collect())
}

pub fn naive_tail(
    d: usize,
    n: usize,
    xi: f64,
    dist: &ChargeDistribution,
    samples: u64,
    seed: u64,
) -> Result<TailEstimate> {
    Ok(naive_tail_grid(d, n, &[xi], dist, samples, seed)?.remove(0))
}

/// Fraction of `sup Γ'` used when clamping a centred tilt for bounded laws.
const SLOPE_CLAMP: f64 = 0.95;

/// Resolution of the per-charge mean used to key cached samplers.
const MEAN_STEPS: f64 = 1024.0;

/// Per-thread cache of tilted samplers keyed by the quantized per-charge mean.
///
/// The tilt depends on the walk only, so quantizing it keeps the weights exact.
struct TiltCache<'a> {
    pair: &'a LegendrePair<ChargeDistribution>,
    rule: ThetaRule,
    by_key: FxHashMap<u64, Option<TiltedSampler>>,
}

impl TiltCache<'_> {
    fn theta_for(&self, mean: f64) -> Result<f64> {
        match self.rule {
            ThetaRule::Fixed(t) => Ok(t),
            ThetaRule::Centered => {
                let x = (mean.max(0.0).min(SLOPE_CLAMP * self.pair.x_max()) * MEAN_STEPS).round() / MEAN_STEPS;
                self.pair.rate_prime(x)
            }
        }
    }

    /// `None` means a null tilt: draw from the base law with unit weights.
    fn get(&mut self, mean: f64) -> Result<Option<&TiltedSampler>> {
        let key = match self.rule {
            ThetaRule::Fixed(_) => 0,
            ThetaRule::Centered => (mean.clamp(0.0, 1e12) * MEAN_STEPS).round() as u64,
        };
        if !self.by_key.contains_key(&key) {
            let theta = self.theta_for(mean)?;
            let sampler = if theta == 0.0 { None } else { Some(self.pair.law().tilted(theta)?) };
            self.by_key.insert(key, sampler);
        }
        Ok(self.by_key.get(&key).and_then(|s| s.as_ref()))
    }
}

#[derive(Clone, Default)]
struct TiltAccumulator {
    /// Per threshold: `log Σ w 1{hit}` and `log Σ w² 1{hit}`.
    hit: Vec<(LogSumExp, LogSumExp)>,
    all: (LogSumExp, LogSumExp),
    theta_sum: f64,
}

/// Largest log-weight accepted; larger values signal a proposal that misses the target mass.
const MAX_LOG_WEIGHT: f64 = 600.0;

fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Importance sampling with exponentially tilted charges at the target sites.
///
/// The walk is drawn first (optionally with extra holding at the origin), the
/// targets and tilt are chosen from it, then charges are drawn in path order.
/// A centred tilt is computed from the first grid value of `xis`.
pub fn tilted_tail_grid(
    d: usize,
    n: usize,
    xis: &[f64],
    dist: &ChargeDistribution,
    plan: &TiltPlan,
    samples: u64,
    seed: u64,
) -> Result<Vec<TailEstimate>> {
    check_common(d, n, xis, samples)?;
    plan.validate()?;
    let pair = LegendrePair::new(dist.clone());
    let xi_ref = xis[0].max(0.0);
    let partial: Vec<Result<TiltAccumulator>> = chunk_bounds(samples)
        .map(|(lo, hi)| {
            let mut cache = TiltCache { pair: &pair, rule: plan.theta, by_key: FxHashMap::default() };
            let mut ws = EnergyWorkspace::new(d);
            let mut signs: Vec<f64> = Vec::new();
            let mut acc = TiltAccumulator { hit: vec![Default::default(); xis.len()], ..Default::default() };
            for i in lo..hi {
                let mut rng = task_rng(seed, i);
                let mut log_w = ws.walk(n, &mut rng, plan.bias);
                let single = match plan.target {
                    TargetRule::MostVisited => Some(ws.most_visited()),
                    TargetRule::Origin => Some(0),
                    TargetRule::AllSites => None,
                };
                let mean = match single {
                    Some(t) => xi_ref.sqrt() / ws.local_times()[t] as f64,
                    None => {
                        let s2: f64 = ws.local_times().iter().map(|l| (*l as f64).powi(2)).sum();
                        (xi_ref / s2).sqrt()
                    }
                };
                let is_target = |site: usize| single.is_none_or(|t| t == site);
                match cache.get(mean)? {
                    Some(s) => {
                        acc.theta_sum += s.theta();
                        signs.clear();
                        signs.resize(ws.sites().len(), 0.0);
                        ws.charge_path(|_, site| {
                            if !is_target(site) {
                                return dist.sample(&mut rng);
                            }
                            if signs[site] == 0.0 {
                                signs[site] = if !plan.two_sided || rng.random::<bool>() { 1.0 } else { -1.0 };
                            }
                            signs[site] * s.sample(&mut rng)
                        });
                        let (theta, gamma) = (s.theta(), s.log_mgf());
                        for (site, &l) in ws.local_times().iter().enumerate() {
                            if is_target(site) {
                                let q = ws.charge(site);
                                let tilt = if plan.two_sided { log_cosh(theta * q) } else { theta * q };
                                log_w += l as f64 * gamma - tilt;
                            }
                        }
                    }
                    None => ws.charge_path(|_, _| dist.sample(&mut rng)),
                }
                if !log_w.is_finite() || log_w > MAX_LOG_WEIGHT {
                    let theta = cache.theta_for(mean).unwrap_or(f64::INFINITY);
                    let scale = if log_w.is_finite() { (MAX_LOG_WEIGHT / log_w).sqrt() } else { 0.5 };
                    return Err(Error::WeightOverflow { theta, suggested_max: theta * scale });
                }
                acc.all.0.add(log_w);
                acc.all.1.add(2.0 * log_w);
                let x = ws.x_check();
                for (h, xi) in acc.hit.iter_mut().zip(xis) {
                    if x >= *xi {
                        h.0.add(log_w);
                        h.1.add(2.0 * log_w);
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = TiltAccumulator { hit: vec![Default::default(); xis.len()], ..Default::default() };
    for p in partial {
        let p = p?;
        for (a, b) in total.hit.iter_mut().zip(&p.hit) {
            a.0.merge(&b.0);
            a.1.merge(&b.1);
        }
        total.all.0.merge(&p.all.0);
        total.all.1.merge(&p.all.1);
        total.theta_sum += p.theta_sum;
    }
    let ln_n = (samples as f64).ln();
    let ess = (2.0 * total.all.0.value() - total.all.1.value()).exp();
    let mean_theta = total.theta_sum / samples as f64;
    Ok(xis
        .iter()
        .zip(&total.hit)
        .map(|(xi, (s1, s2))| {
            let log_p = s1.value() - ln_n;
            let p = log_p.exp();
            let second = (s2.value() - ln_n).exp();
            let var = (second - p * p).max(0.0) / (samples as f64 - 1.0).max(1.0);
            TailEstimate {
                method: TailMethod::Tilted,
                dimension: d,
                n,
                xi: *xi,
                probability: p,
                log_probability: log_p,
                std_error: var.sqrt(),
                samples,
                effective_sample_size: ess.min(samples as f64),
                theta: Some(mean_theta),
                exact_numerator: None,
                exact_denominator: None,
            }
        })
        .collect())
}

pub fn tilted_tail(
    d: usize,
    n: usize,
    xi: f64,
    dist: &ChargeDistribution,
    plan: &TiltPlan,
    samples: u64,
    seed: u64,
) -> Result<TailEstimate> {
    Ok(tilted_tail_grid(d, n, &[xi], dist, plan, samples, seed)?.remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub xi: f64,
    pub probability: f64,
    pub log_probability: f64,
    pub std_error: f64,
    /// `-log p̂ / √ξ`.
    pub normalized: f64,
    /// 95% interval for `normalized` by the delta method.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub effective_sample_size: f64,
    pub predicted: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateCurve {
    pub dimension: usize,
    pub xi_power: f64,
    /// `Γ⁻¹(χ_d)` when the law passes the shape certificate.
    pub predicted: Option<f64>,
    pub rows: Vec<RateRow>,
}

/// `-log P(X̌_n >= n^p) / n^{p/2}` along a list of `n`, by the centred tilted estimator.
#[allow(clippy::too_many_arguments)]
pub fn rate_curve(
    d: usize,
    dist: &ChargeDistribution,
    n_list: &[usize],
    xi_power: f64,
    plan: &TiltPlan,
    samples: u64,
    seed: u64,
    chi_d: f64,
) -> Result<RateCurve> {
    if !(xi_power > 2.0 / 3.0 && xi_power < 2.0) {
        return Err(invalid(format!("xi power must lie in (2/3, 2), got {xi_power}")));
    }
    let pair = LegendrePair::new(dist.clone());
    let predicted = rate_constant_with_chi(&pair, d, chi_d).ok().map(|r| r.value);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let xi = (n as f64).powf(xi_power);
        let est = tilted_tail(d, n, xi, dist, plan, samples, derive_seed(seed, n as u64))?;
        let root = xi.sqrt();
        let rel = if est.probability > 0.0 { est.std_error / est.probability } else { f64::INFINITY };
        let normalized = -est.log_probability / root;
        rows.push(RateRow {
            n,
            xi,
            probability: est.probability,
            log_probability: est.log_probability,
            std_error: est.std_error,
            normalized,
            ci_lo: normalized - 1.96 * rel / root,
            ci_hi: normalized + 1.96 * rel / root,
            effective_sample_size: est.effective_sample_size,
            predicted,
        });
    }
    Ok(RateCurve { dimension: d, xi_power, predicted, rows })
}
