//! The lazy nearest-neighbour walk on `Z^d`, its local times, and the lattice
//! constants `c_d` (expected number of returns) and `chi_d` (minus the log of
//! the return probability).
//!
//! Each step is uniform over the `2d + 1` moves `{0, ±e_1, …, ±e_d}`.

use indexmap::IndexMap;
use rayon::prelude::*;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::quad::GaussRule;
use crate::numerics::rng::{seeded, task_rng, DigitStream};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 8;

/// Walk samples per parallel task in Monte Carlo drivers.
pub(crate) const CHUNK: u64 = 1 << 13;

/// A lattice site. Lanes beyond the walk dimension are always zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Site([i32; MAX_DIM]);

impl Site {
    pub const ORIGIN: Site = Site([0; MAX_DIM]);

    pub fn from_coords(coords: &[i32]) -> Result<Self> {
        if coords.len() > MAX_DIM {
            return Err(Error::Dimension(coords.len()));
        }
        let mut lanes = [0; MAX_DIM];
        lanes[..coords.len()].copy_from_slice(coords);
        Ok(Site(lanes))
    }

    /// Unit vector `sign * e_axis`.
    pub fn unit(axis: usize, sign: i32) -> Self {
        let mut lanes = [0; MAX_DIM];
        lanes[axis] = sign;
        Site(lanes)
    }

    pub fn coords(&self, dimension: usize) -> &[i32] {
        &self.0[..dimension]
    }

    pub fn l1_norm(&self) -> i64 {
        self.0.iter().map(|c| (*c as i64).abs()).sum()
    }

    pub fn is_origin(&self) -> bool {
        self.0 == [0; MAX_DIM]
    }

    pub fn offset(&self, other: &Site) -> Site {
        let mut lanes = self.0;
        for (l, o) in lanes.iter_mut().zip(other.0) {
            *l += o;
        }
        Site(lanes)
    }

    /// Applies move `digit` of the lazy step law: `0` holds, `2a + 1` and
    /// `2a + 2` move by `+e_a` and `-e_a`.
    #[inline]
    pub(crate) fn apply_move(&mut self, digit: u32) {
        if digit != 0 {
            let k = (digit - 1) as usize;
            self.0[k / 2] += if k.is_multiple_of(2) { 1 } else { -1 };
        }
    }
}

/// Parameters of a single simulated walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub dimension: usize,
    /// Number of sites `S(0), …, S(n-1)` in the trajectory.
    pub steps: usize,
    pub seed: u64,
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        check_dimension(self.dimension)?;
        if self.steps == 0 {
            return Err(invalid("a trajectory needs at least one site (n >= 1)"));
        }
        if self.steps > i32::MAX as usize {
            return Err(invalid("trajectory length exceeds the coordinate width"));
        }
        Ok(())
    }
}

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    if !(3..=MAX_DIM).contains(&d) {
        return Err(Error::Dimension(d));
    }
    Ok(())
}

/// A lattice path `S(0) = 0, S(1), …, S(n-1)` with lazy nearest-neighbour increments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    dimension: usize,
    sites: Vec<Site>,
}

impl Trajectory {
    /// Builds a trajectory from explicit sites, checking the start and every increment.
    pub fn new(dimension: usize, sites: Vec<Site>) -> Result<Self> {
        check_dimension(dimension)?;
        if sites.is_empty() {
            return Err(invalid("empty trajectory"));
        }
        if !sites[0].is_origin() {
            return Err(invalid("trajectory must start at the origin"));
        }
        for (k, w) in sites.windows(2).enumerate() {
            let mut jump = 0i64;
            for (a, b) in w[0].0.iter().zip(&w[1].0).skip(dimension) {
                if a != b {
                    return Err(invalid(format!("step {k} leaves the first {dimension} coordinates")));
                }
            }
            for (a, b) in w[0].0.iter().zip(&w[1].0) {
                jump += (*b as i64 - *a as i64).abs();
            }
            if jump > 1 {
                return Err(invalid(format!("step {k} is not a lazy nearest-neighbour move")));
            }
        }
        Ok(Self { dimension, sites })
    }

    /// Trajectory from integer coordinate rows.
    pub fn from_coords(dimension: usize, rows: &[Vec<i32>]) -> Result<Self> {
        let sites = rows.iter().map(|r| Site::from_coords(r)).collect::<Result<Vec<_>>>()?;
        Self::new(dimension, sites)
    }

    pub(crate) fn from_parts_unchecked(dimension: usize, sites: Vec<Site>) -> Self {
        Self { dimension, sites }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }
}

/// Fills `out` with a lazy walk of `n` sites driven by `rng`.
pub(crate) fn walk_into<R: rand::RngCore + ?Sized>(d: usize, n: usize, rng: &mut R, out: &mut Vec<Site>) {
    let mut digits = DigitStream::new(2 * d as u32 + 1);
    out.clear();
    let mut pos = Site::ORIGIN;
    out.push(pos);
    for _ in 1..n {
        pos.apply_move(digits.next(rng));
        out.push(pos);
    }
}

pub fn simulate_walk(cfg: &WalkConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut rng = seeded(cfg.seed);
    let mut sites = Vec::with_capacity(cfg.steps);
    walk_into(cfg.dimension, cfg.steps, &mut rng, &mut sites);
    Ok(Trajectory::from_parts_unchecked(cfg.dimension, sites))
}

pub type SiteMap<V> = IndexMap<Site, V, FxBuildHasher>;

/// Visit counts `l_n(z)` in first-visit order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalTimeField {
    counts: SiteMap<u32>,
    total: usize,
}

impl LocalTimeField {
    pub fn get(&self, site: &Site) -> u32 {
        self.counts.get(site).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, u32)> {
        self.counts.iter().map(|(s, c)| (s, *c))
    }

    /// Number of distinct visited sites.
    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    /// Trajectory length `n`, equal to the sum of all counts.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn max_local_time(&self) -> u32 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    /// Time spent in a set of sites.
    pub fn occupation(&self, sites: &[Site]) -> u64 {
        sites.iter().map(|s| self.get(s) as u64).sum()
    }
}

pub fn local_times(traj: &Trajectory) -> LocalTimeField {
    let mut counts = SiteMap::default();
    for s in traj.sites() {
        *counts.entry(*s).or_insert(0) += 1;
    }
    LocalTimeField { counts, total: traj.len() }
}

/// Green function at the origin and the derived lattice constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeConstants {
    pub dimension: usize,
    /// `G = sum_{n >= 0} P_0(S(n) = 0)`.
    pub green_at_origin: f64,
    /// `c_d = G - 1`.
    pub c_d: f64,
    /// `r = 1 - 1/G`.
    pub return_probability: f64,
    /// `chi_d = -log r`.
    pub chi_d: f64,
    pub tolerance: f64,
    /// Gap between the last two refinement levels.
    pub error_estimate: f64,
    /// Gauss-Legendre order of the accepted level.
    pub order: usize,
}

impl LatticeConstants {
    pub fn from_green(dimension: usize, green: f64, tolerance: f64, error_estimate: f64, order: usize) -> Self {
        let c_d = green - 1.0;
        let return_probability = 1.0 - 1.0 / (c_d + 1.0);
        Self {
            dimension,
            green_at_origin: green,
            c_d,
            return_probability,
            chi_d: -return_probability.ln(),
            tolerance,
            error_estimate,
            order,
        }
    }
}

/// Number of halvings of the corner cube in [`green_integral`].
pub const GREEN_DEPTH: usize = 18;

/// `G = (2π)^{-d} ∫_{[-π,π]^d} dk / (1 - φ(k))`, `φ(k) = (1 + 2 Σ cos k_i) / (2d + 1)`,
/// on a product Gauss-Legendre grid of `order` points per axis and panel.
///
/// The integrand is even in every coordinate, so the integral is taken over
/// `[0, π]^d`. That cube is split into `2^d` half-size cubes; every sub-cube
/// away from the singular corner at `k = 0` is integrated directly and the
/// corner cube is split again, `depth` times. Near `k = 0` the integrand is
/// homogeneous of degree `-2`, so the last corner contributes
/// `S / (2^{d-2} - 1)` where `S` is the last shell integral.
pub fn green_integral(d: usize, order: usize, depth: usize) -> f64 {
    let rule = GaussRule::new(order);
    let scale = 2.0 / (2 * d + 1) as f64;
    let binom = |n: usize, k: usize| -> f64 { (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
    let mut total = 0.0;
    let mut last_shell = 0.0;
    let mut h = std::f64::consts::PI;
    for _ in 0..depth {
        let (xl, wl) = rule.mapped(0.0, 0.5 * h);
        let (xu, wu) = rule.mapped(0.5 * h, h);
        // 1 - cos x = 2 sin^2(x/2), accurate for small x
        let cl: Vec<f64> = xl.iter().map(|x| scale * 2.0 * (0.5 * x).sin().powi(2)).collect();
        let cu: Vec<f64> = xu.iter().map(|x| scale * 2.0 * (0.5 * x).sin().powi(2)).collect();
        let mut shell = 0.0;
        for upper in 1..=d {
            let mut axes: Vec<(&[f64], &[f64])> = Vec::with_capacity(d);
            for i in 0..d {
                if i < upper {
                    axes.push((&cu, &wu));
                } else {
                    axes.push((&cl, &wl));
                }
            }
            shell += binom(d, upper) * product_sum(&axes, 0.0, 1.0);
        }
        total += shell;
        last_shell = shell;
        h *= 0.5;
    }
    total += last_shell / (2f64.powi(d as i32 - 2) - 1.0);
    total / std::f64::consts::PI.powi(d as i32)
}

fn product_sum(axes: &[(&[f64], &[f64])], partial_c: f64, partial_w: f64) -> f64 {
    let (c, w) = axes[0];
    if axes.len() == 1 {
        let mut acc = 0.0;
        for (ci, wi) in c.iter().zip(w) {
            acc += wi / (partial_c + ci);
        }
        return acc * partial_w;
    }
    let mut acc = 0.0;
    for (ci, wi) in c.iter().zip(w) {
        acc += product_sum(&axes[1..], partial_c + ci, partial_w * wi);
    }
    acc
}

/// Computes the lattice constants, raising the quadrature order until two
/// consecutive levels agree on `G` within `tol`.
pub fn green_constants(d: usize, tol: f64) -> Result<LatticeConstants> {
    check_dimension(d)?;
    if !(tol > 0.0) {
        return Err(invalid("quadrature tolerance must be positive"));
    }
    const WORK_LIMIT: f64 = 4e7;
    let orders: Vec<usize> = (2..=12).map(|k| 4 * k).filter(|m| (*m as f64).powi(d as i32) <= WORK_LIMIT).collect();
    if orders.len() < 2 {
        return Err(invalid(format!("dimension {d} is too large for the product quadrature")));
    }
    let mut previous = green_integral(d, orders[0], GREEN_DEPTH);
    let mut gap = f64::INFINITY;
    for &m in &orders[1..] {
        let current = green_integral(d, m, GREEN_DEPTH);
        gap = (current - previous).abs();
        if gap <= tol {
            return Ok(LatticeConstants::from_green(d, current, tol, gap, m));
        }
        previous = current;
    }
    Err(Error::NonConvergence { estimate: previous, error: gap, tol })
}

/// Histogram of first return times to the origin within a horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnTimes {
    pub dimension: usize,
    pub horizon: u32,
    pub samples: u64,
    /// `counts[t]` walks first came back at time `t` (`counts[0] = 0`).
    pub counts: Vec<u64>,
}

impl ReturnTimes {
    pub fn returns(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Empirical `P(tau <= t)`.
    pub fn cdf(&self, t: u32) -> f64 {
        let t = (t.min(self.horizon)) as usize;
        self.counts[..=t].iter().sum::<u64>() as f64 / self.samples as f64
    }
}

/// Simulates `samples` independent walks, each until its first return or the horizon.
pub fn first_return_times(d: usize, horizon: u32, samples: u64, seed: u64) -> Result<ReturnTimes> {
    check_dimension(d)?;
    if samples == 0 {
        return Err(invalid("at least one sample is required"));
    }
    if horizon == 0 {
        return Err(invalid("horizon must be at least one step"));
    }
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; horizon as usize + 1];
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            for i in lo..hi {
                if let Some(t) = first_return(d, horizon, &mut task_rng(seed, i)) {
                    counts[t as usize] += 1;
                }
            }
            counts
        })
        .collect();
    let mut counts = vec![0u64; horizon as usize + 1];
    for p in partial {
        for (a, b) in counts.iter_mut().zip(p) {
            *a += b;
        }
    }
    Ok(ReturnTimes { dimension: d, horizon, samples, counts })
}

fn first_return<R: rand::RngCore>(d: usize, horizon: u32, rng: &mut R) -> Option<u32> {
    let mut digits = DigitStream::new(2 * d as u32 + 1);
    let mut pos = [0i32; MAX_DIM];
    let mut nonzero = 0u32;
    for t in 1..=horizon {
        let digit = digits.next(rng);
        if digit == 0 {
            if nonzero == 0 {
                return Some(t);
            }
            continue;
        }
        let k = (digit - 1) as usize;
        let axis = k / 2;
        let before = pos[axis];
        pos[axis] += if k.is_multiple_of(2) { 1 } else { -1 };
        if before == 0 {
            nonzero += 1;
        } else if pos[axis] == 0 {
            nonzero -= 1;
        }
        if nonzero == 0 {
            return Some(t);
        }
    }
    None
}

/// Monte Carlo estimate of the probability of returning to the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnEstimate {
    pub dimension: usize,
    /// Fraction of walks back at the origin within `horizon` steps.
    /// Truncation makes this an underestimate of the return probability.
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub returns: u64,
    pub horizon: u32,
    /// Local-limit estimate of `sum_{t > horizon} P(S(t) = 0)`, an upper bound on
    /// the missing mass `P(horizon < tau < inf)` up to lattice corrections.
    pub truncation_allowance: f64,
}

pub fn return_probability_mc(d: usize, horizon: u32, samples: u64, seed: u64) -> Result<ReturnEstimate> {
    let times = first_return_times(d, horizon, samples, seed)?;
    let returns = times.returns();
    let p = returns as f64 / samples as f64;
    Ok(ReturnEstimate {
        dimension: d,
        estimate: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        returns,
        horizon,
        truncation_allowance: return_tail_allowance(d, horizon),
    })
}

/// `∫_H^∞ (2π σ² t)^{-d/2} dt` with per-coordinate step variance `σ² = 2/(2d+1)`.
pub fn return_tail_allowance(d: usize, horizon: u32) -> f64 {
    let sigma2 = 2.0 / (2 * d + 1) as f64;
    let half_d = d as f64 / 2.0;
    (2.0 * std::f64::consts::PI * sigma2).powf(-half_d) * (horizon as f64).powf(1.0 - half_d) / (half_d - 1.0)
}
