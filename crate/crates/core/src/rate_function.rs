//! Legendre transforms of log-Laplace functions and the variational problems
//! built on them.
//!
//! For a convex, even `Γ` with `Γ(0) = 0` the conjugate is
//! `I(x) = sup_y [xy - Γ(y)]`. The supremum is found by solving `Γ'(y) = x`.
//! The headline rate of the self-intersection tail is `Γ⁻¹(χ_d)`, which is only
//! returned once `x ↦ Γ(√x)` has been checked to be convex.

use std::sync::OnceLock;

use serde::Serialize;

use crate::charge_models::{ChargeDistribution, LogLaplace};
use crate::error::{invalid, Error, Result};
use crate::lattice_walk::{green_constants, LatticeConstants};
use crate::numerics::roots::{golden_section, solve_increasing};

/// Default tolerance for root finding and certification.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative allowance for rounding noise in second divided differences.
const SHAPE_NOISE: f64 = 1e-7;

/// How the supremum defining `I(x)` is attained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Attainment {
    /// At the finite `y*` solving `Γ'(y*) = x`.
    Interior,
    /// Only as `y -> inf`; `x` equals `sup Γ'`.
    Boundary,
    /// `x > sup Γ'`, so `I(x) = +inf`.
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LegendreValue {
    pub value: f64,
    /// Maximizer `y*`, which equals `I'(x)`; infinite unless attained.
    pub argmax: f64,
    pub attainment: Attainment,
}

/// Numerical conjugate `I(x)` of `Γ`, ignoring any closed form `Γ` may carry.
pub fn legendre(gamma: &dyn LogLaplace, x: f64, tol: f64) -> Result<LegendreValue> {
    if x.is_nan() {
        return Err(invalid("legendre transform at NaN"));
    }
    let x = x.abs();
    if x == 0.0 {
        return Ok(LegendreValue { value: 0.0, argmax: 0.0, attainment: Attainment::Interior });
    }
    let sup = gamma.slope_limit();
    if x > sup {
        return Ok(LegendreValue { value: f64::INFINITY, argmax: f64::INFINITY, attainment: Attainment::Infinite });
    }
    if x == sup {
        let mut y = 1.0;
        let mut prev = x * y - gamma.gamma(y);
        for _ in 0..64 {
            y *= 2.0;
            let v = x * y - gamma.gamma(y);
            if !v.is_finite() {
                break;
            }
            if (v - prev).abs() <= tol * v.abs().max(1.0) {
                return Ok(LegendreValue { value: v, argmax: f64::INFINITY, attainment: Attainment::Boundary });
            }
            prev = v;
        }
        return Ok(LegendreValue { value: prev, argmax: f64::INFINITY, attainment: Attainment::Boundary });
    }
    let dgamma = |y: f64| gamma.gamma_second(y);
    let y = solve_increasing(|y| gamma.gamma_prime(y), Some(&dgamma), x, 0.0, 1.0, tol)?;
    Ok(LegendreValue { value: x * y - gamma.gamma(y), argmax: y, attainment: Attainment::Interior })
}

/// The unique `y >= 0` with `Γ(y) = chi`.
pub fn gamma_inverse(gamma: &dyn LogLaplace, chi: f64, tol: f64) -> Result<f64> {
    if !(chi >= 0.0) || !chi.is_finite() {
        return Err(invalid(format!("gamma_inverse needs a finite chi >= 0, got {chi}")));
    }
    if chi == 0.0 {
        return Ok(0.0);
    }
    let dgamma = |y: f64| gamma.gamma_prime(y);
    solve_increasing(|y| gamma.gamma(y), Some(&dgamma), chi, 0.0, 1.0, tol)
}

/// Second-difference signs of `x ↦ Γ(√x)` and `x ↦ I(√x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShapeCertificate {
    pub gamma_sqrt_convex: bool,
    #[serde(rename = "I_sqrt_concave")]
    pub i_sqrt_concave: bool,
    /// Most negative normalized second difference of `Γ(√x)`.
    pub worst_gamma_curvature: f64,
    /// Most positive normalized second difference of `I(√x)`.
    pub worst_i_curvature: f64,
    pub points: usize,
}

/// Log-spaced grid of positive abscissae.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for LogGrid {
    fn default() -> Self {
        Self { lo: 1e-2, hi: 16.0, points: 256 }
    }
}

impl LogGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && points >= 3) {
            return Err(invalid(format!("log grid needs 0 < lo < hi and >= 3 points, got [{lo}, {hi}] x {points}")));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn values(&self) -> Vec<f64> {
        let r = (self.hi / self.lo).ln();
        (0..self.points).map(|k| self.lo * (r * k as f64 / (self.points - 1) as f64).exp()).collect()
    }
}

/// A log-Laplace function together with its conjugate.
///
/// Closed forms are used where the law provides them; otherwise `I` comes from
/// [`legendre`] and `I'` is the maximizer `y*`.
pub struct LegendrePair<L> {
    law: L,
    tol: f64,
    certificate: OnceLock<ShapeCertificate>,
}

impl<L: LogLaplace> LegendrePair<L> {
    pub fn new(law: L) -> Self {
        Self::with_tol(law, DEFAULT_TOL)
    }

    pub fn with_tol(law: L, tol: f64) -> Self {
        Self { law, tol, certificate: OnceLock::new() }
    }

    pub fn law(&self) -> &L {
        &self.law
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn gamma(&self, y: f64) -> f64 {
        self.law.gamma(y)
    }

    pub fn gamma_prime(&self, y: f64) -> f64 {
        self.law.gamma_prime(y)
    }

    /// Right end of the domain of `I` (inclusive when `I` is finite there).
    pub fn x_max(&self) -> f64 {
        self.law.slope_limit()
    }

    pub fn rate(&self, x: f64) -> Result<f64> {
        match self.law.conjugate(x) {
            Some(v) => Ok(v),
            None => legendre(&self.law, x, self.tol).map(|v| v.value),
        }
    }

    pub fn rate_prime(&self, x: f64) -> Result<f64> {
        match self.law.conjugate_prime(x) {
            Some(v) => Ok(v),
            None => legendre(&self.law, x, self.tol).map(|v| v.argmax.copysign(x)),
        }
    }

    pub fn gamma_inverse(&self, chi: f64) -> Result<f64> {
        gamma_inverse(&self.law, chi, self.tol)
    }

    /// Shape certificate on the default grid, computed once.
    pub fn certificate(&self) -> Result<ShapeCertificate> {
        if let Some(c) = self.certificate.get() {
            return Ok(*c);
        }
        let c = certify_sqrt_shapes(self, &LogGrid::default())?;
        Ok(*self.certificate.get_or_init(|| c))
    }

    fn require_hyp(&self) -> Result<ShapeCertificate> {
        let c = self.certificate()?;
        if !c.gamma_sqrt_convex {
            return Err(Error::HypothesisNotCertified(format!(
                "Γ(√x) has a negative second difference ({:.3e})",
                c.worst_gamma_curvature
            )));
        }
        Ok(c)
    }
}

/// Largest `|−I(x) + x I'(x) − Γ(I'(x))|` over the grid.
///
/// `I'` comes from the closed form when available, otherwise from a central
/// difference of the numerical conjugate, so the check is not circular.
pub fn check_duality_identity<L: LogLaplace>(pair: &LegendrePair<L>, grid: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &x in grid {
        if !(x > 0.0) || x >= pair.x_max() {
            return Err(invalid(format!("duality grid point {x} outside (0, {}) ", pair.x_max())));
        }
        let i = pair.rate(x)?;
        let di = match pair.law.conjugate_prime(x) {
            Some(v) => v,
            None => {
                let h = (pair.tol.cbrt() * x.abs().max(1.0)).min(0.5 * x).min(0.5 * (pair.x_max() - x));
                (pair.rate(x + h)? - pair.rate(x - h)?) / (2.0 * h)
            }
        };
        let residual = (-i + x * di - pair.gamma(di)).abs();
        worst = worst.max(residual);
    }
    Ok(worst)
}

fn second_divided(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    xs.windows(3)
        .zip(fs.windows(3))
        .map(|(x, f)| {
            let d = 2.0 * ((f[2] - f[1]) / (x[2] - x[1]) - (f[1] - f[0]) / (x[1] - x[0])) / (x[2] - x[0]);
            let noise = (f[0].abs() + f[1].abs() + f[2].abs()) / (x[2] - x[0]).powi(2);
            if noise > 0.0 {
                d / noise
            } else {
                d
            }
        })
        .collect()
}

/// Checks convexity of `Γ(√x)` and concavity of `I(√x)` by second differences.
///
/// Points where `√x` leaves the domain of `I` are skipped for the second test.
pub fn certify_sqrt_shapes<L: LogLaplace>(pair: &LegendrePair<L>, grid: &LogGrid) -> Result<ShapeCertificate> {
    let xs = grid.values();
    let gs: Vec<f64> = xs.iter().map(|x| pair.gamma(x.sqrt())).collect();
    let worst_gamma = second_divided(&xs, &gs).into_iter().fold(f64::INFINITY, f64::min);

    let xi: Vec<f64> = xs.iter().copied().filter(|x| x.sqrt() < pair.x_max()).collect();
    let is = xi.iter().map(|x| pair.rate(x.sqrt())).collect::<Result<Vec<f64>>>()?;
    let worst_i = if xi.len() >= 3 {
        second_divided(&xi, &is).into_iter().fold(f64::NEG_INFINITY, f64::max)
    } else {
        f64::NEG_INFINITY
    };
    Ok(ShapeCertificate {
        gamma_sqrt_convex: worst_gamma >= -SHAPE_NOISE,
        i_sqrt_concave: worst_i <= SHAPE_NOISE,
        worst_gamma_curvature: worst_gamma,
        worst_i_curvature: worst_i,
        points: xs.len(),
    })
}

/// Minimize `Σ λ(z) I(κ(z))` subject to `Σ λ(z)² κ(z)² ≥ γ²`, `κ ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PileProblem {
    weights: Vec<f64>,
    target: f64,
}

impl PileProblem {
    pub fn new(weights: Vec<f64>, target: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("pile problem needs at least one site"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(invalid(format!("pile weights must be positive, got {w}")));
        }
        if !(target >= 0.0) || !target.is_finite() {
            return Err(invalid(format!("pile target must be >= 0, got {target}")));
        }
        Ok(Self { weights, target })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    fn heaviest(&self) -> (usize, f64) {
        self.weights
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, w)| if w > best.1 { (i, w) } else { best })
    }

    fn objective<L: LogLaplace>(&self, pair: &LegendrePair<L>, kappa: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (w, k) in self.weights.iter().zip(kappa) {
            if *k > 0.0 {
                total += w * pair.rate(*k)?;
            }
        }
        Ok(total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PileSolution {
    pub value: f64,
    pub kappa: Vec<f64>,
    /// Index of the site carrying the whole load.
    pub site: usize,
}

/// Closed-form minimum `(max λ) I(γ / max λ)`, with all load on one heaviest site.
pub fn solve_pile<L: LogLaplace>(p: &PileProblem, pair: &LegendrePair<L>) -> Result<PileSolution> {
    let (site, w) = p.heaviest();
    let mut kappa = vec![0.0; p.weights.len()];
    if p.target == 0.0 {
        return Ok(PileSolution { value: 0.0, kappa, site });
    }
    let c = pair.certificate()?;
    if !c.i_sqrt_concave {
        return Err(Error::HypothesisNotCertified(format!(
            "I(√x) has a positive second difference ({:.3e})",
            c.worst_i_curvature
        )));
    }
    kappa[site] = p.target / w;
    Ok(PileSolution { value: w * pair.rate(p.target / w)?, kappa, site })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForcePile {
    pub value: f64,
    pub kappa: Vec<f64>,
    /// Grid spacing on each free coordinate.
    pub spacing: Vec<f64>,
    /// Objective evaluations.
    pub evaluations: u64,
}

/// Largest site count accepted by [`solve_pile_bruteforce`].
pub const BRUTE_FORCE_MAX_SITES: usize = 4;

/// Grid search over the constraint surface `Σ λ² κ² = γ²`.
///
/// The first `k-1` loads run over a uniform grid on `[0, γ/λ_i]`; the last is
/// solved from the constraint. `I` is tabulated on a fine grid for the last
/// coordinate and interpolated linearly, independently of [`solve_pile`].
pub fn solve_pile_bruteforce<L: LogLaplace>(
    p: &PileProblem,
    pair: &LegendrePair<L>,
    resolution: usize,
) -> Result<BruteForcePile> {
    let k = p.weights.len();
    if k > BRUTE_FORCE_MAX_SITES {
        return Err(invalid(format!("brute-force pile search handles at most {BRUTE_FORCE_MAX_SITES} sites, got {k}")));
    }
    if resolution < 4 {
        return Err(invalid(format!("grid resolution {resolution} too coarse; need at least 4 points per axis")));
    }
    let gamma = p.target;
    if gamma == 0.0 {
        return Ok(BruteForcePile { value: 0.0, kappa: vec![0.0; k], spacing: vec![0.0; k - 1], evaluations: 0 });
    }
    let axes: Vec<Vec<(f64, f64)>> = p.weights[..k - 1]
        .iter()
        .map(|w| {
            let top = gamma / w;
            (0..resolution)
                .map(|j| {
                    let kap = top * j as f64 / (resolution - 1) as f64;
                    Ok((kap, if kap > 0.0 { w * pair.rate(kap)? } else { 0.0 }))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let w_last = p.weights[k - 1];
    let top_last = gamma / w_last;
    let table_len = 16 * resolution.max(256);
    let table = (0..=table_len)
        .map(|j| {
            let kap = top_last * j as f64 / table_len as f64;
            if kap > 0.0 {
                pair.rate(kap).map(|v| w_last * v)
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let last_cost = |kap: f64| {
        let pos = (kap / top_last * table_len as f64).clamp(0.0, table_len as f64);
        let j = (pos.floor() as usize).min(table_len - 1);
        let frac = pos - j as f64;
        table[j] + frac * (table[j + 1] - table[j])
    };

    let mut best = f64::INFINITY;
    let mut best_kappa = vec![0.0; k];
    let mut idx = vec![0usize; k - 1];
    let mut evaluations = 0u64;
    loop {
        let mut used = 0.0;
        let mut cost = 0.0;
        for (axis, &j) in axes.iter().zip(&idx) {
            cost += axis[j].1;
        }
        for (i, &j) in idx.iter().enumerate() {
            used += (p.weights[i] * axes[i][j].0).powi(2);
        }
        let rest = (gamma * gamma - used).max(0.0);
        let kap_last = rest.sqrt() / w_last;
        cost += last_cost(kap_last);
        evaluations += 1;
        if cost < best {
            best = cost;
            for (i, &j) in idx.iter().enumerate() {
                best_kappa[i] = axes[i][j].0;
            }
            best_kappa[k - 1] = kap_last;
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                let spacing = p.weights[..k - 1].iter().map(|w| gamma / w / (resolution - 1) as f64).collect();
                let value = p.objective(pair, &best_kappa)?;
                return Ok(BruteForcePile { value, kappa: best_kappa, spacing, evaluations });
            }
            idx[pos] += 1;
            if idx[pos] < resolution {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Minimize `αλ + λ I(β/λ)` over `λ > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinProblem {
    pub alpha: f64,
    pub beta: f64,
}

impl PinProblem {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(invalid(format!("pin problem needs alpha, beta > 0, got ({alpha}, {beta})")));
        }
        Ok(Self { alpha, beta })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PinSolution {
    /// `β Γ⁻¹(α)`.
    pub value: f64,
    /// The minimizing `λ* = β / Γ'(Γ⁻¹(α))`.
    pub lambda_star: f64,
    /// `β / λ*`, the argument of `I` at the optimum.
    pub x_star: f64,
    /// Independent golden-section minimum of the objective.
    pub golden_value: f64,
    pub golden_lambda: f64,
}

pub fn pin_objective<L: LogLaplace>(p: &PinProblem, pair: &LegendrePair<L>, lambda: f64) -> f64 {
    let x = p.beta / lambda;
    if x > pair.x_max() {
        return f64::INFINITY;
    }
    pair.rate(x).map(|i| p.alpha * lambda + lambda * i).unwrap_or(f64::INFINITY)
}

pub fn solve_pin<L: LogLaplace>(p: &PinProblem, pair: &LegendrePair<L>) -> Result<PinSolution> {
    let y = pair.gamma_inverse(p.alpha)?;
    let x_star = pair.gamma_prime(y);
    let lambda_star = p.beta / x_star;

    // bracket in log λ without using the closed form
    let f = |t: f64| pin_objective(p, pair, t.exp());
    let mut lo = if pair.x_max().is_finite() { (p.beta / pair.x_max()).ln() } else { (p.beta * 1e-6).ln() };
    let mut hi = p.beta.ln();
    let mut expansions = 0;
    while f(hi + 1.0) < f(hi) && expansions < 200 {
        lo = hi;
        hi += 1.0;
        expansions += 1;
    }
    hi += 1.0;
    while !pair.x_max().is_finite() && f(lo) < f(lo + 1.0) && expansions < 400 {
        lo -= 1.0;
        expansions += 1;
    }
    let (t, golden_value) = golden_section(f, lo, hi, 1e-12);
    Ok(PinSolution { value: p.beta * y, lambda_star, x_star, golden_value, golden_lambda: t.exp() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateConstant {
    pub dimension: usize,
    pub chi: f64,
    /// `Γ⁻¹(χ_d)`.
    pub value: f64,
    pub certificate: ShapeCertificate,
}

/// `Γ⁻¹(χ)` for a supplied `χ`, after certifying that `Γ(√x)` is convex.
pub fn rate_constant_with_chi<L: LogLaplace>(
    pair: &LegendrePair<L>,
    dimension: usize,
    chi: f64,
) -> Result<RateConstant> {
    let certificate = pair.require_hyp()?;
    Ok(RateConstant { dimension, chi, value: pair.gamma_inverse(chi)?, certificate })
}

/// `Γ⁻¹(χ_d)` with `χ_d` from the Green-function quadrature.
pub fn rate_constant(dist: &ChargeDistribution, d: usize) -> Result<(RateConstant, LatticeConstants)> {
    let constants = green_constants(d, DEFAULT_TOL)?;
    let pair = LegendrePair::new(dist.clone());
    Ok((rate_constant_with_chi(&pair, d, constants.chi_d)?, constants))
}
