//! Symmetric charge laws: samplers, log-Laplace transforms `Γ(y) = log E[e^{yη}]`
//! and tail classes.
//!
//! Three families are provided: centred Gaussians, Rademacher (±1) charges, and
//! a Gaussian scale mixture whose density is
//! `g(x) ∝ ∫_0^1 exp(-a/u^β - u x²) du` with `β > 1`. The mixture has
//! stretched-exponential tails with exponent `α = 2β/(1+β)`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::numerics::quad::{adaptive, GaussRule};
use crate::numerics::roots::golden_section;

/// Access to a log-Laplace transform and, when known, its convex conjugate.
pub trait LogLaplace: Send + Sync {
    /// `Γ(y)`.
    fn gamma(&self, y: f64) -> f64;

    /// `Γ'(y)`, by central differences unless overridden.
    fn gamma_prime(&self, y: f64) -> f64 {
        let h = f64::EPSILON.cbrt() * y.abs().max(1.0);
        (self.gamma(y + h) - self.gamma(y - h)) / (2.0 * h)
    }

    /// `Γ''(y)`, by central differences unless overridden.
    fn gamma_second(&self, y: f64) -> f64 {
        let h = f64::EPSILON.powf(0.25) * y.abs().max(1.0);
        (self.gamma(y + h) - 2.0 * self.gamma(y) + self.gamma(y - h)) / (h * h)
    }

    /// `sup_{y>0} Γ'(y)`: the right end of the domain of the conjugate.
    fn slope_limit(&self) -> f64 {
        f64::INFINITY
    }

    /// Closed-form conjugate `I(x)`, if available.
    fn conjugate(&self, _x: f64) -> Option<f64> {
        None
    }

    /// Closed-form `I'(x)`, if available.
    fn conjugate_prime(&self, _x: f64) -> Option<f64> {
        None
    }
}

/// A log-Laplace transform given by a closure, for synthetic test cases.
pub struct FnLogLaplace<F> {
    f: F,
    slope_limit: f64,
}

impl<F: Fn(f64) -> f64 + Send + Sync> FnLogLaplace<F> {
    pub fn new(f: F) -> Self {
        Self { f, slope_limit: f64::INFINITY }
    }

    pub fn with_slope_limit(f: F, slope_limit: f64) -> Self {
        Self { f, slope_limit }
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> LogLaplace for FnLogLaplace<F> {
    fn gamma(&self, y: f64) -> f64 {
        (self.f)(y)
    }

    fn slope_limit(&self) -> f64 {
        self.slope_limit
    }
}

/// Tail class: `|η|^α` satisfies Cramér's condition. Bounded laws sit in every class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TailClass {
    Bounded,
    Alpha(f64),
}

impl TailClass {
    /// Largest exponent in `(0, 2]` reported for the law; bounded laws report 2.
    pub fn alpha(&self) -> f64 {
        match self {
            TailClass::Bounded => 2.0,
            TailClass::Alpha(a) => *a,
        }
    }
}

/// Parameters of the Gaussian scale-mixture family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleFamilyParams {
    pub a: f64,
    pub beta: f64,
    /// Relative tolerance of the mixture quadratures.
    pub tol: f64,
}

impl ExampleFamilyParams {
    pub fn new(a: f64, beta: f64) -> Self {
        Self { a, beta, tol: 1e-13 }
    }
}

#[derive(Clone, Debug)]
enum Law {
    /// Centred normal law with the given variance.
    Gaussian {
        variance: f64,
    },
    Rademacher,
    Mixture(Arc<MixtureFamily>),
}

/// A symmetric charge law `η = scale · R` where `R` follows one of the base laws.
#[derive(Clone, Debug)]
pub struct ChargeDistribution {
    name: String,
    law: Law,
    scale: f64,
}

impl ChargeDistribution {
    /// Centred Gaussian with variance `sigma`: `Γ(y) = σ y² / 2`. Not standardized.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("gaussian variance must be positive, got {sigma}")));
        }
        Ok(Self { name: "gaussian".into(), law: Law::Gaussian { variance: sigma }, scale: 1.0 })
    }

    /// Fair ±1 charges: `Γ(y) = log cosh y`.
    pub fn rademacher() -> Self {
        Self { name: "rademacher".into(), law: Law::Rademacher, scale: 1.0 }
    }

    /// The scale-mixture family, standardized to unit variance.
    pub fn example_family(params: &ExampleFamilyParams) -> Result<Self> {
        let family = MixtureFamily::new(params)?;
        Self { name: "example_family".into(), law: Law::Mixture(Arc::new(family)), scale: 1.0 }.standardize()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variance(&self) -> f64 {
        let base = match &self.law {
            Law::Gaussian { variance } => *variance,
            Law::Rademacher => 1.0,
            Law::Mixture(m) => m.raw_variance,
        };
        base * self.scale * self.scale
    }

    /// Rescales to unit variance: samples are divided by `sqrt(v)` and `Γ_out(y) = Γ_in(y / sqrt(v))`.
    pub fn standardize(&self) -> Result<Self> {
        let v = self.variance();
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(format!("variance {v} cannot be standardized")));
        }
        let mut out = self.clone();
        out.scale = self.scale / v.sqrt();
        if (out.scale - 1.0).abs() < 1e-15 {
            out.scale = 1.0;
        }
        Ok(out)
    }

    pub fn tail_class(&self) -> TailClass {
        match &self.law {
            Law::Gaussian { .. } => TailClass::Alpha(2.0),
            Law::Rademacher => TailClass::Bounded,
            Law::Mixture(m) => TailClass::Alpha(2.0 * m.beta / (1.0 + m.beta)),
        }
    }

    /// Charges are exactly ±1, allowing integer arithmetic downstream.
    pub fn is_spin(&self) -> bool {
        matches!(self.law, Law::Rademacher) && self.scale == 1.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let raw = match &self.law {
            Law::Gaussian { variance } => variance.sqrt() * rng.sample::<f64, _>(StandardNormal),
            Law::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Law::Mixture(m) => {
                let u = m.base_grid.sample(rng.random::<f64>());
                rng.sample::<f64, _>(StandardNormal) * (0.5 / u).sqrt()
            }
        };
        self.scale * raw
    }

    /// A ±1 draw; only meaningful when [`is_spin`](Self::is_spin) holds.
    pub fn sample_spin<R: Rng + ?Sized>(&self, rng: &mut R) -> i8 {
        if rng.random::<bool>() {
            1
        } else {
            -1
        }
    }

    /// Sampler for the exponentially tilted law `dQ_θ/dQ = exp(θη - Γ(θ))`.
    pub fn tilted(&self, theta: f64) -> Result<TiltedSampler> {
        let log_mgf = self.gamma(theta);
        if !log_mgf.is_finite() {
            return Err(Error::WeightOverflow { theta, suggested_max: 0.5 * theta.abs() });
        }
        let kind = match &self.law {
            Law::Gaussian { variance } => {
                let v = variance * self.scale * self.scale;
                TiltKind::Normal { mean: theta * v, sd: v.sqrt() }
            }
            Law::Rademacher => {
                let t = theta * self.scale;
                TiltKind::Spin { p_plus: 1.0 / (1.0 + (-2.0 * t).exp()), scale: self.scale }
            }
            Law::Mixture(m) => {
                let theta_raw = theta * self.scale;
                TiltKind::Mixture { grid: Arc::new(m.cdf_grid(theta_raw)?), theta_raw, scale: self.scale }
            }
        };
        Ok(TiltedSampler { theta, log_mgf, kind })
    }

    /// Log-density at `x`, for laws with a density.
    pub fn log_density(&self, x: f64) -> Option<f64> {
        match &self.law {
            Law::Gaussian { variance } => {
                let v = variance * self.scale * self.scale;
                Some(-0.5 * x * x / v - 0.5 * (2.0 * std::f64::consts::PI * v).ln())
            }
            Law::Rademacher => None,
            Law::Mixture(m) => m.log_density(x / self.scale).map(|l| l - self.scale.ln()),
        }
    }

    /// `P(|η| > x)` for laws with a density.
    pub fn abs_tail(&self, x: f64) -> Option<f64> {
        match &self.law {
            Law::Gaussian { variance } => {
                let sd = (variance * self.scale * self.scale).sqrt();
                Some(erfc(x / (sd * std::f64::consts::SQRT_2)))
            }
            Law::Rademacher => Some(if x < self.scale { 1.0 } else { 0.0 }),
            Law::Mixture(m) => m.abs_tail(x / self.scale),
        }
    }
}

impl LogLaplace for ChargeDistribution {
    fn gamma(&self, y: f64) -> f64 {
        let t = self.scale * y;
        match &self.law {
            Law::Gaussian { variance } => 0.5 * variance * t * t,
            Law::Rademacher => log_cosh(t),
            Law::Mixture(m) => m.moments(t).map(|mo| mo.log_mgf).unwrap_or(f64::NAN),
        }
    }

    fn gamma_prime(&self, y: f64) -> f64 {
        let t = self.scale * y;
        let raw = match &self.law {
            Law::Gaussian { variance } => variance * t,
            Law::Rademacher => t.tanh(),
            Law::Mixture(m) => m.moments(t).map(|mo| 0.5 * t * mo.mean_inv_u).unwrap_or(f64::NAN),
        };
        self.scale * raw
    }

    fn gamma_second(&self, y: f64) -> f64 {
        let t = self.scale * y;
        let raw = match &self.law {
            Law::Gaussian { variance } => *variance,
            Law::Rademacher => 1.0 - t.tanh().powi(2),
            Law::Mixture(m) => m
                .moments(t)
                .map(|mo| 0.5 * mo.mean_inv_u + 0.25 * t * t * (mo.mean_inv_u2 - mo.mean_inv_u.powi(2)))
                .unwrap_or(f64::NAN),
        };
        self.scale * self.scale * raw
    }

    fn slope_limit(&self) -> f64 {
        match self.law {
            Law::Rademacher => self.scale,
            _ => f64::INFINITY,
        }
    }

    fn conjugate(&self, x: f64) -> Option<f64> {
        let x = x.abs();
        match &self.law {
            Law::Gaussian { variance } => Some(x * x / (2.0 * variance * self.scale * self.scale)),
            Law::Rademacher => {
                let m = x / self.scale;
                Some(if m < 1.0 {
                    0.5 * (1.0 + m) * (1.0 + m).ln() + 0.5 * (1.0 - m) * (1.0 - m).ln()
                } else if m == 1.0 {
                    std::f64::consts::LN_2
                } else {
                    f64::INFINITY
                })
            }
            Law::Mixture(_) => None,
        }
    }

    fn conjugate_prime(&self, x: f64) -> Option<f64> {
        match &self.law {
            Law::Gaussian { variance } => Some(x / (variance * self.scale * self.scale)),
            Law::Rademacher => {
                let m = x / self.scale;
                Some(if m.abs() < 1.0 { m.atanh() / self.scale } else { f64::INFINITY.copysign(m) })
            }
            Law::Mixture(_) => None,
        }
    }
}

fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Draws from an exponentially tilted charge law.
#[derive(Clone, Debug)]
pub struct TiltedSampler {
    theta: f64,
    log_mgf: f64,
    kind: TiltKind,
}

#[derive(Clone, Debug)]
enum TiltKind {
    Normal { mean: f64, sd: f64 },
    Spin { p_plus: f64, scale: f64 },
    Mixture { grid: Arc<CdfGrid>, theta_raw: f64, scale: f64 },
}

impl TiltedSampler {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `Γ(θ)`.
    pub fn log_mgf(&self) -> f64 {
        self.log_mgf
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            TiltKind::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            TiltKind::Spin { p_plus, scale } => {
                if rng.random::<f64>() < *p_plus {
                    *scale
                } else {
                    -*scale
                }
            }
            TiltKind::Mixture { grid, theta_raw, scale } => {
                let u = grid.sample(rng.random::<f64>());
                let z: f64 = rng.sample(StandardNormal);
                scale * (theta_raw / (2.0 * u) + z * (0.5 / u).sqrt())
            }
        }
    }

    pub fn sample_spin<R: Rng + ?Sized>(&self, rng: &mut R) -> i8 {
        match &self.kind {
            TiltKind::Spin { p_plus, .. } => {
                if rng.random::<f64>() < *p_plus {
                    1
                } else {
                    -1
                }
            }
            _ => panic!("spin draw requested from a continuous tilted law"),
        }
    }

    /// `log dQ/dQ_θ (η) = -θη + Γ(θ)`.
    #[inline]
    pub fn log_likelihood_ratio(&self, eta: f64) -> f64 {
        -self.theta * eta + self.log_mgf
    }
}

/// Inverse-CDF table for the mixing variable `u` on geometric knots.
#[derive(Clone, Debug)]
pub struct CdfGrid {
    knots: Vec<f64>,
    cdf: Vec<f64>,
}

/// Number of geometric knots in a mixing-variable table.
pub const CDF_KNOTS: usize = 4096;

impl CdfGrid {
    pub fn sample(&self, uniform: f64) -> f64 {
        let j = self.cdf.partition_point(|c| *c <= uniform).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[j - 1], self.cdf[j]);
        let frac = if c1 > c0 { (uniform - c0) / (c1 - c0) } else { 0.5 };
        self.knots[j - 1] + frac * (self.knots[j] - self.knots[j - 1])
    }
}

struct MixtureMoments {
    log_mgf: f64,
    mean_inv_u: f64,
    mean_inv_u2: f64,
}

/// Raw (unstandardized) Gaussian scale mixture with mixing weight
/// `w(u) ∝ exp(-a u^{-β}) u^{-1/2}` on `(0, 1]` and conditional variance `1/(2u)`.
///
/// Integrals over `u` are taken in `t = ln u` with the peak factored out.
#[derive(Debug)]
struct MixtureFamily {
    a: f64,
    beta: f64,
    tol: f64,
    log_norm: f64,
    raw_variance: f64,
    base_grid: CdfGrid,
}

impl MixtureFamily {
    fn new(p: &ExampleFamilyParams) -> Result<Self> {
        if !(p.beta > 1.0) {
            return Err(invalid(format!("mixture family needs beta > 1, got {}", p.beta)));
        }
        if !(p.a > 0.0) {
            return Err(invalid(format!("mixture family needs a > 0, got {}", p.a)));
        }
        if !(p.tol > 0.0) {
            return Err(invalid("mixture quadrature tolerance must be positive"));
        }
        let mut fam = Self {
            a: p.a,
            beta: p.beta,
            tol: p.tol,
            log_norm: 0.0,
            raw_variance: 0.0,
            base_grid: CdfGrid { knots: vec![], cdf: vec![] },
        };
        let (log_norm, ratios) = fam.log_integral(|t| fam.log_weight(t) + t, |t| [1.0, (-t).exp(), 0.0])?;
        fam.log_norm = log_norm;
        fam.raw_variance = 0.5 * ratios[1];
        fam.base_grid = fam.cdf_grid(0.0)?;
        Ok(fam)
    }

    /// `ln w(u)` (unnormalized) at `u = e^t`.
    fn log_weight(&self, t: f64) -> f64 {
        -self.a * (-self.beta * t).exp() - 0.5 * t
    }

    /// `log ∫ exp(logf(t)) dt` over `t <= 0`, and `∫ e^{logf} m_k / ∫ e^{logf}`.
    fn log_integral(&self, logf: impl Fn(f64) -> f64, mult: impl Fn(f64) -> [f64; 3]) -> Result<(f64, [f64; 3])> {
        let (lo, peak, fmax) = locate_peak(&logf);
        let integrand = |t: f64| {
            let e = (logf(t) - fmax).exp();
            let m = mult(t);
            [e * m[0], e * m[1], e * m[2]]
        };
        let mut acc = [0.0; 3];
        let panels = 16;
        for (a, b) in [(lo, peak), (peak, 0.0)] {
            if b - a <= 0.0 {
                continue;
            }
            for k in 0..panels {
                let x0 = a + (b - a) * k as f64 / panels as f64;
                let x1 = a + (b - a) * (k + 1) as f64 / panels as f64;
                let part = adaptive(integrand, x0, x1, self.tol, 0.0)?;
                for i in 0..3 {
                    acc[i] += part[i];
                }
            }
        }
        if !(acc[0] > 0.0) {
            return Err(Error::NonConvergence { estimate: acc[0], error: f64::NAN, tol: self.tol });
        }
        Ok((fmax + acc[0].ln(), [1.0, acc[1] / acc[0], acc[2] / acc[0]]))
    }

    fn moments(&self, y: f64) -> Result<MixtureMoments> {
        let c = 0.25 * y * y;
        let (log_m0, r) =
            self.log_integral(|t| self.log_weight(t) + t + c * (-t).exp(), |t| [1.0, (-t).exp(), (-2.0 * t).exp()])?;
        Ok(MixtureMoments { log_mgf: log_m0 - self.log_norm, mean_inv_u: r[1], mean_inv_u2: r[2] })
    }

    fn log_density(&self, x: f64) -> Option<f64> {
        // g(x) = E_w[ sqrt(u/π) exp(-u x²) ]
        let x2 = x * x;
        let (l, _) = self.log_integral(|t| self.log_weight(t) + 1.5 * t - x2 * t.exp(), |_| [1.0, 0.0, 0.0]).ok()?;
        Some(l - self.log_norm - 0.5 * std::f64::consts::PI.ln())
    }

    fn abs_tail(&self, x: f64) -> Option<f64> {
        let (_, r) = self.log_integral(|t| self.log_weight(t) + t, |t| [1.0, erfc(x * (0.5 * t).exp()), 0.0]).ok()?;
        Some(r[1])
    }

    /// Inverse-CDF table of the mixing variable tilted by `exp(θ²/(4u))`.
    fn cdf_grid(&self, theta_raw: f64) -> Result<CdfGrid> {
        let c = 0.25 * theta_raw * theta_raw;
        let logf = |t: f64| self.log_weight(t) + t + c * (-t).exp();
        let (lo, _, fmax) = locate_peak(&logf);
        let rule = GaussRule::new(8);
        let knots_t: Vec<f64> = (0..=CDF_KNOTS).map(|j| lo * (1.0 - j as f64 / CDF_KNOTS as f64)).collect();
        let mut cdf = Vec::with_capacity(knots_t.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in knots_t.windows(2) {
            acc += rule.integrate(w[0], w[1], &mut |t| [(logf(t) - fmax).exp()])[0];
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::NonConvergence { estimate: acc, error: f64::NAN, tol: self.tol });
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Ok(CdfGrid { knots: knots_t.iter().map(|t| t.exp()).collect(), cdf })
    }
}

/// Lower cutoff, peak location and peak value of a log-integrand on `t <= 0`
/// that tends to `-inf` as `t -> -inf`.
fn locate_peak(logf: &impl Fn(f64) -> f64) -> (f64, f64, f64) {
    let mut best = logf(0.0);
    let mut s = 0.5;
    loop {
        let v = logf(-s);
        best = best.max(v);
        if (v < best - 80.0 && logf(-s - 0.5) < v) || s > 700.0 {
            break;
        }
        s += 0.5;
    }
    let lo = -s;
    let n = 512;
    let mut arg = 0;
    let mut fmax = f64::NEG_INFINITY;
    for k in 0..=n {
        let t = lo * (1.0 - k as f64 / n as f64);
        let v = logf(t);
        if v > fmax {
            fmax = v;
            arg = k;
        }
    }
    let step = -lo / n as f64;
    let t_arg = lo + step * arg as f64;
    let a = (t_arg - step).max(lo);
    let b = (t_arg + step).min(0.0);
    let (tp, fp) = golden_section(|t| -logf(t), a, b, 1e-10);
    let (peak, fmax) = if -fp > fmax { (tp, -fp) } else { (t_arg, fmax) };
    (lo, peak, fmax)
}

/// JSON description of a charge law: `{"name": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum DistSpec {
    /// Variance `sigma`; kept raw unless `standardize` is set.
    Gaussian {
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        standardize: bool,
    },
    Rademacher,
    ExampleFamily {
        a: f64,
        beta: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl DistSpec {
    pub fn build(&self) -> Result<ChargeDistribution> {
        match *self {
            DistSpec::Gaussian { sigma, standardize } => {
                let g = ChargeDistribution::gaussian(sigma)?;
                if standardize {
                    g.standardize()
                } else {
                    Ok(g)
                }
            }
            DistSpec::Rademacher => Ok(ChargeDistribution::rademacher()),
            DistSpec::ExampleFamily { a, beta } => {
                ChargeDistribution::example_family(&ExampleFamilyParams::new(a, beta))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::seeded;

    fn family() -> ChargeDistribution {
        ChargeDistribution::example_family(&ExampleFamilyParams::new(1.0, 3.0)).unwrap()
    }

    #[test]
    fn gaussian_closed_forms() {
        let g = ChargeDistribution::gaussian(1.0).unwrap();
        assert_eq!(g.gamma(1.0), 0.5);
        assert_eq!(g.gamma(0.0), 0.0);
        let g2 = ChargeDistribution::gaussian(2.0).unwrap();
        assert_eq!(g2.gamma(1.0), 1.0);
        assert!(ChargeDistribution::gaussian(0.0).is_err());
        assert!(ChargeDistribution::gaussian(-1.0).is_err());
    }

    #[test]
    fn standardizing_gaussians() {
        let g = ChargeDistribution::gaussian(4.0).unwrap().standardize().unwrap();
        assert!((g.variance() - 1.0).abs() < 1e-15);
        assert!((g.gamma(3.0) - 4.5).abs() < 1e-14);
        let g = ChargeDistribution::gaussian(2.0).unwrap().standardize().unwrap();
        assert!((g.gamma(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rademacher_is_already_standard() {
        let r = ChargeDistribution::rademacher();
        let s = r.standardize().unwrap();
        assert!(s.is_spin());
        assert_eq!(s.gamma(0.7), r.gamma(0.7));
        assert_eq!(r.gamma(0.0), 0.0);
        assert!((r.gamma(30.0) - (30.0 - std::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(r.tail_class().alpha(), 2.0);
    }

    #[test]
    fn rademacher_sample_mean_is_small() {
        let r = ChargeDistribution::rademacher();
        let mut rng = seeded(1);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| r.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 3e-3, "{mean}");
    }

    #[test]
    fn mixture_rejects_light_mixing() {
        assert!(ChargeDistribution::example_family(&ExampleFamilyParams::new(1.0, 1.0)).is_err());
        assert!(ChargeDistribution::example_family(&ExampleFamilyParams::new(1.0, 0.5)).is_err());
        assert!(ChargeDistribution::example_family(&ExampleFamilyParams::new(0.0, 3.0)).is_err());
    }

    #[test]
    fn mixture_tail_class() {
        assert_eq!(family().tail_class(), TailClass::Alpha(1.5));
        let f = ChargeDistribution::example_family(&ExampleFamilyParams::new(1.0, 1.0001)).unwrap();
        let a = f.tail_class().alpha();
        assert!(a > 1.0 && a < 1.0001, "{a}");
    }

    #[test]
    fn mixture_raw_variance_matches_independent_quadrature() {
        // E_w[1/(2u)] for a = 1, beta = 3, from an independent adaptive quadrature in u
        let fam = MixtureFamily::new(&ExampleFamilyParams::new(1.0, 3.0)).unwrap();
        assert!((fam.raw_variance - 0.5801823990682998).abs() < 1e-10, "{}", fam.raw_variance);
    }

    #[test]
    fn mixture_is_standardized() {
        let f = family();
        assert_eq!(f.gamma(0.0), 0.0);
        assert!((f.variance() - 1.0).abs() < 1e-12);
        let h = 1e-3;
        let fd = (f.gamma(h) - 2.0 * f.gamma(0.0) + f.gamma(-h)) / (h * h);
        assert!((fd - 1.0).abs() < 1e-3, "{fd}");
        assert!((f.gamma_second(0.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mixture_derivatives_match_finite_differences() {
        let f = family();
        for y in [0.3, 1.0, 2.5, 6.0] {
            let h = 1e-4;
            let d1 = (f.gamma(y + h) - f.gamma(y - h)) / (2.0 * h);
            let d2 = (f.gamma_prime(y + h) - f.gamma_prime(y - h)) / (2.0 * h);
            assert!((d1 / f.gamma_prime(y) - 1.0).abs() < 1e-6, "y={y}");
            assert!((d2 / f.gamma_second(y) - 1.0).abs() < 1e-6, "y={y}");
        }
    }

    #[test]
    fn log_laplace_is_even_nonnegative_convex() {
        let laws = [ChargeDistribution::gaussian(1.0).unwrap(), ChargeDistribution::rademacher(), family()];
        for law in &laws {
            let ys: Vec<f64> = (0..=40).map(|k| -4.0 + 0.2 * k as f64).collect();
            for y in &ys {
                let g = law.gamma(*y);
                assert!(g >= 0.0);
                assert!((g - law.gamma(-y)).abs() <= 1e-12 * g.max(1.0), "{} at {y}", law.name());
            }
            for w in ys.windows(3) {
                let second = law.gamma(w[0]) - 2.0 * law.gamma(w[1]) + law.gamma(w[2]);
                assert!(second >= -1e-12, "{} not convex near {}", law.name(), w[1]);
            }
        }
    }

    #[test]
    fn empirical_moments_match_unit_variance() {
        let laws = [ChargeDistribution::gaussian(1.0).unwrap(), ChargeDistribution::rademacher(), family()];
        for law in &laws {
            let mut rng = seeded(21);
            let n = 1_000_000;
            let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
            for _ in 0..n {
                let x = law.sample(&mut rng);
                s1 += x;
                s2 += x * x;
                s3 += x * x * x;
            }
            let nf = n as f64;
            assert!((s1 / nf).abs() < 3.0 / nf.sqrt(), "{} mean {}", law.name(), s1 / nf);
            assert!((s2 / nf - 1.0).abs() < 0.01, "{} var {}", law.name(), s2 / nf);
            assert!((s3 / nf).abs() < 0.05, "{} third {}", law.name(), s3 / nf);
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let f = family();
        let a: Vec<f64> = (0..10).scan(seeded(3), |r, _| Some(f.sample(r))).collect();
        let b: Vec<f64> = (0..10).scan(seeded(3), |r, _| Some(f.sample(r))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn tilted_means_match_gamma_prime() {
        let laws = [ChargeDistribution::gaussian(2.0).unwrap(), ChargeDistribution::rademacher(), family()];
        for law in &laws {
            let theta = 0.8;
            let tilt = law.tilted(theta).unwrap();
            let mut rng = seeded(8);
            let n = 400_000;
            let mean = (0..n).map(|_| tilt.sample(&mut rng)).sum::<f64>() / n as f64;
            let sd = law.gamma_second(theta).sqrt();
            assert!((mean - law.gamma_prime(theta)).abs() < 4.0 * sd / (n as f64).sqrt(), "{}", law.name());
        }
    }

    #[test]
    fn mixture_tail_agrees_with_sampler() {
        let f = family();
        let mut rng = seeded(99);
        let n = 2_000_000u64;
        let xs = [1.0, 2.0, 3.0];
        let mut hits = [0u64; 3];
        for _ in 0..n {
            let v = f.sample(&mut rng).abs();
            for (h, x) in hits.iter_mut().zip(xs) {
                if v > x {
                    *h += 1;
                }
            }
        }
        for (h, x) in hits.iter().zip(xs) {
            let p = f.abs_tail(x).unwrap();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*h as f64 / n as f64 - p).abs() < 4.0 * se, "x={x} p={p} emp={}", *h as f64 / n as f64);
        }
    }

    #[test]
    fn mixture_log_density_exponent_approaches_alpha() {
        // local slope of log(-log g) against log x at large |x|
        let f = family();
        let (x1, x2) = (20.0, 40.0);
        let g1 = -f.log_density(x1).unwrap();
        let g2 = -f.log_density(x2).unwrap();
        let slope = (g2 / g1).ln() / (x2 / x1).ln();
        assert!((slope - 1.5).abs() < 0.1, "{slope}");
    }

    #[test]
    fn dist_spec_round_trip() {
        let spec: DistSpec = serde_json::from_str(r#"{"name":"rademacher"}"#).unwrap();
        assert_eq!(spec, DistSpec::Rademacher);
        let spec: DistSpec = serde_json::from_str(r#"{"name":"example_family","params":{"a":1,"beta":3}}"#).unwrap();
        assert_eq!(spec, DistSpec::ExampleFamily { a: 1.0, beta: 3.0 });
        let spec: DistSpec = serde_json::from_str(r#"{"name":"gaussian","params":{"sigma":2}}"#).unwrap();
        assert!((spec.build().unwrap().variance() - 2.0).abs() < 1e-15);
    }
}
