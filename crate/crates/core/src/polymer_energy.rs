//! Polymer observables: the energy `H_n = Σ_{i≠j} η(i)η(j) 1{S(i)=S(j)}`, its
//! split `H_n = X̌_n + Y_n`, the resampled local charges and the level sets of
//! the local-time field.

use rand::Rng;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::charge_models::ChargeDistribution;
use crate::error::{invalid, Result};
use crate::lattice_walk::{LocalTimeField, Site, SiteMap, Trajectory};
use crate::numerics::rng::{seeded, DigitStream};

/// Charges along a path. Spins are kept as integers so energies are exact.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Charges {
    Real(Vec<f64>),
    Spin(Vec<i8>),
}

impl Charges {
    pub fn len(&self) -> usize {
        match self {
            Charges::Real(v) => v.len(),
            Charges::Spin(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, k: usize) -> f64 {
        match self {
            Charges::Real(v) => v[k],
            Charges::Spin(v) => v[k] as f64,
        }
    }

    pub fn sum(&self) -> f64 {
        match self {
            Charges::Real(v) => v.iter().sum(),
            Charges::Spin(v) => v.iter().map(|s| *s as i64).sum::<i64>() as f64,
        }
    }
}

/// Per-site accumulation of local time, local charge and squared charges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SiteCharge {
    pub local_time: u32,
    /// `q̌_n(z)`.
    pub charge: f64,
    /// `Σ_{k: S(k)=z} η(k)²`.
    pub charge_sq: f64,
}

/// A walk together with one charge per visit.
#[derive(Clone, Debug)]
pub struct PolymerSample {
    trajectory: Trajectory,
    charges: Charges,
    sites: SiteMap<SiteCharge>,
}

impl PolymerSample {
    /// Pairs a trajectory with explicit charges.
    pub fn new(trajectory: Trajectory, charges: Charges) -> Result<Self> {
        if trajectory.len() != charges.len() {
            return Err(invalid(format!("{} charges for a trajectory of {} sites", charges.len(), trajectory.len())));
        }
        if let Charges::Real(v) = &charges {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid("charges must be finite"));
            }
        }
        if let Charges::Spin(v) = &charges {
            if v.iter().any(|s| s.abs() != 1) {
                return Err(invalid("spin charges must be ±1"));
            }
        }
        let mut sites: SiteMap<SiteCharge> = SiteMap::default();
        match &charges {
            Charges::Real(v) => {
                for (s, eta) in trajectory.sites().iter().zip(v) {
                    let e = sites.entry(*s).or_default();
                    e.local_time += 1;
                    e.charge += eta;
                    e.charge_sq += eta * eta;
                }
            }
            Charges::Spin(v) => {
                let mut q: SiteMap<(u32, i64)> = SiteMap::default();
                for (s, eta) in trajectory.sites().iter().zip(v) {
                    let e = q.entry(*s).or_default();
                    e.0 += 1;
                    e.1 += *eta as i64;
                }
                sites = q
                    .into_iter()
                    .map(|(s, (l, c))| (s, SiteCharge { local_time: l, charge: c as f64, charge_sq: l as f64 }))
                    .collect();
            }
        }
        Ok(Self { trajectory, charges, sites })
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn charges(&self) -> &Charges {
        &self.charges
    }

    pub fn len(&self) -> usize {
        self.trajectory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectory.is_empty()
    }

    /// Per-site fields in first-visit order.
    pub fn sites(&self) -> &SiteMap<SiteCharge> {
        &self.sites
    }

    pub fn local_charge(&self, site: &Site) -> f64 {
        self.sites.get(site).map_or(0.0, |s| s.charge)
    }

    pub fn local_time(&self, site: &Site) -> u32 {
        self.sites.get(site).map_or(0, |s| s.local_time)
    }
}

/// Draws `n` i.i.d. charges for the trajectory in path order.
pub fn build_sample(traj: &Trajectory, dist: &ChargeDistribution, seed: u64) -> Result<PolymerSample> {
    let mut rng = seeded(seed);
    let n = traj.len();
    let charges = if dist.is_spin() {
        Charges::Spin((0..n).map(|_| dist.sample_spin(&mut rng)).collect())
    } else {
        Charges::Real((0..n).map(|_| dist.sample(&mut rng)).collect())
    };
    PolymerSample::new(traj.clone(), charges)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// `H_n`.
    pub h: f64,
    /// `X̌_n = Σ_z (q̌_n(z)² - l_n(z))`.
    pub x_check: f64,
    /// `Y_n = Σ_k (1 - η(k)²)`.
    pub y: f64,
    /// Per-site `(z, H_n(z), X̌_n(z))` in first-visit order.
    #[serde(skip)]
    pub per_site: Vec<(Site, f64, f64)>,
}

/// Grouped evaluation `H_n(z) = q̌_n(z)² - Σ_{k at z} η(k)²`.
pub fn energy(sample: &PolymerSample) -> EnergyBreakdown {
    let mut per_site = Vec::with_capacity(sample.sites.len());
    if let Charges::Spin(_) = sample.charges {
        let (mut h, mut x) = (0i64, 0i64);
        for (s, f) in &sample.sites {
            let q = f.charge as i64;
            let hz = q * q - f.local_time as i64;
            h += hz;
            x += hz;
            per_site.push((*s, hz as f64, hz as f64));
        }
        return EnergyBreakdown { h: h as f64, x_check: x as f64, y: 0.0, per_site };
    }
    let (mut h, mut x, mut y) = (0.0, 0.0, 0.0);
    for (s, f) in &sample.sites {
        let q2 = f.charge * f.charge;
        let hz = q2 - f.charge_sq;
        let xz = q2 - f.local_time as f64;
        h += hz;
        x += xz;
        y += f.local_time as f64 - f.charge_sq;
        per_site.push((*s, hz, xz));
    }
    EnergyBreakdown { h, x_check: x, y, per_site }
}

/// `Σ_{i≠j} η(i)η(j) 1{S(i)=S(j)}` evaluated literally in `O(n²)`.
pub fn energy_double_sum(sample: &PolymerSample) -> f64 {
    let sites = sample.trajectory.sites();
    let n = sites.len();
    match &sample.charges {
        Charges::Spin(v) => {
            let mut h = 0i64;
            for i in 0..n {
                for j in 0..n {
                    if i != j && sites[i] == sites[j] {
                        h += v[i] as i64 * v[j] as i64;
                    }
                }
            }
            h as f64
        }
        Charges::Real(v) => {
            let mut h = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j && sites[i] == sites[j] {
                        h += v[i] * v[j];
                    }
                }
            }
            h
        }
    }
}

/// Fresh charges `q_n(z) = Σ_{i ≤ l_n(z)} η_z(i)` for a fixed walk.
#[derive(Clone, Debug, PartialEq)]
pub struct ResampledField {
    field: SiteMap<(u32, f64)>,
}

impl ResampledField {
    pub fn get(&self, site: &Site) -> Option<f64> {
        self.field.get(site).map(|(_, q)| *q)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, u32, f64)> {
        self.field.iter().map(|(s, (l, q))| (s, *l, *q))
    }

    pub fn len(&self) -> usize {
        self.field.len()
    }

    pub fn is_empty(&self) -> bool {
        self.field.is_empty()
    }

    /// `X_n = Σ_z (q_n(z)² - l_n(z))`.
    pub fn x_n(&self) -> f64 {
        self.field.values().map(|(l, q)| q * q - *l as f64).sum()
    }
}

pub fn resampled_field(local_times: &LocalTimeField, dist: &ChargeDistribution, seed: u64) -> ResampledField {
    let mut rng = seeded(seed);
    let field =
        local_times.iter().filter(|(_, l)| *l > 0).map(|(s, l)| (*s, (l, local_sum(dist, l, &mut rng)))).collect();
    ResampledField { field }
}

fn local_sum<R: Rng + ?Sized>(dist: &ChargeDistribution, l: u32, rng: &mut R) -> f64 {
    if dist.is_spin() {
        (0..l).map(|_| dist.sample_spin(rng) as i64).sum::<i64>() as f64
    } else {
        (0..l).map(|_| dist.sample(rng)).sum()
    }
}

/// `ζ(n) = (n^{-1/2} Σ_{i ≤ n} η(i))²` from the given generator.
pub fn zeta_draw<R: Rng + ?Sized>(dist: &ChargeDistribution, n: u32, rng: &mut R) -> f64 {
    let s = local_sum(dist, n, rng);
    s * s / n as f64
}

/// One seeded draw of `ζ(n)`.
pub fn zeta_sample(dist: &ChargeDistribution, n: u32, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("zeta needs n >= 1"));
    }
    Ok(zeta_draw(dist, n, &mut seeded(seed)))
}

/// One dyadic level `b_i <= l_n(z) < b_{i+1}` with `b_i = 2^i / A`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DyadicLevel {
    pub index: i32,
    pub lower: f64,
    pub upper: f64,
    pub sites: Vec<Site>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSets {
    pub a: f64,
    pub xi: f64,
    /// `{z : A√ξ > l_n(z) > √ξ/A}` with strict inequalities.
    pub core: Vec<Site>,
    /// `i_0`: largest `i` with `b_i <= 1`.
    pub i0: i32,
    /// `N`: largest `i` with `b_i <= √ξ/A`.
    pub top: i32,
    /// Levels `i_0..=N`.
    pub levels: Vec<DyadicLevel>,
}

impl LevelSets {
    /// Sites with `b_{i_0} <= l_n(z) < b_{N+1}`.
    pub fn covered(&self, local_times: &LocalTimeField) -> usize {
        let lo = level_bound(self.a, self.i0);
        let hi = level_bound(self.a, self.top + 1);
        local_times.iter().filter(|(_, l)| (*l as f64) >= lo && (*l as f64) < hi).count()
    }
}

fn level_bound(a: f64, i: i32) -> f64 {
    2f64.powi(i) / a
}

pub fn level_sets(local_times: &LocalTimeField, a: f64, xi: f64) -> Result<LevelSets> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(invalid(format!("level sets need A > 1, got {a}")));
    }
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(invalid(format!("level sets need xi > 0, got {xi}")));
    }
    let root = xi.sqrt();
    let core = local_times
        .iter()
        .filter(|(_, l)| {
            let l = *l as f64;
            a * root > l && l > root / a
        })
        .map(|(s, _)| *s)
        .collect();
    let mut i0 = 0;
    while level_bound(a, i0 + 1) <= 1.0 {
        i0 += 1;
    }
    let mut top = i0 - 1;
    while level_bound(a, top + 1) <= root / a {
        top += 1;
    }
    let levels = (i0..=top)
        .map(|i| {
            let (lower, upper) = (level_bound(a, i), level_bound(a, i + 1));
            let sites = local_times
                .iter()
                .filter(|(_, l)| (*l as f64) >= lower && (*l as f64) < upper)
                .map(|(s, _)| *s)
                .collect();
            DyadicLevel { index: i, lower, upper, sites }
        })
        .collect();
    Ok(LevelSets { a, xi, core, i0, top, levels })
}

/// Reusable buffers for Monte Carlo evaluation of `X̌_n` over many walks.
///
/// Sites are interned to dense indices so charges accumulate in flat arrays.
pub struct EnergyWorkspace {
    dimension: usize,
    index: FxHashMap<Site, u32>,
    visits: Vec<u32>,
    local_time: Vec<u32>,
    sites: Vec<Site>,
    charge: Vec<f64>,
}

/// Extra holding at the origin during the first steps of a walk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HoldBias {
    /// Extra probability of a forced hold while at the origin.
    pub hold: f64,
    /// Number of initial steps subject to the bias.
    pub steps: usize,
}

impl EnergyWorkspace {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            index: FxHashMap::default(),
            visits: Vec::new(),
            local_time: Vec::new(),
            sites: Vec::new(),
            charge: Vec::new(),
        }
    }

    fn intern(&mut self, s: Site) -> u32 {
        let next = self.sites.len() as u32;
        let id = *self.index.entry(s).or_insert(next);
        if id == next {
            self.sites.push(s);
            self.local_time.push(0);
        }
        self.local_time[id as usize] += 1;
        id
    }

    /// Runs a walk of `n` sites. With a bias, returns `log dP/dP_bias` of the path.
    pub fn walk<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R, bias: Option<HoldBias>) -> f64 {
        self.index.clear();
        self.visits.clear();
        self.local_time.clear();
        self.sites.clear();
        let base = 2 * self.dimension as u32 + 1;
        let mut digits = DigitStream::new(base);
        let mut pos = Site::ORIGIN;
        let first = self.intern(pos);
        self.visits.push(first);
        let mut log_lr = 0.0;
        let (hold_lr, move_lr) = match bias {
            Some(b) => {
                let p0 = 1.0 / base as f64;
                ((p0 / (b.hold + (1.0 - b.hold) * p0)).ln(), -(1.0 - b.hold).ln())
            }
            None => (0.0, 0.0),
        };
        for t in 1..n {
            let biased = bias.is_some_and(|b| t <= b.steps && pos.is_origin());
            if biased {
                let b = bias.unwrap_or(HoldBias { hold: 0.0, steps: 0 });
                let digit = if rng.random::<f64>() < b.hold { 0 } else { digits.next(rng) };
                if digit == 0 {
                    log_lr += hold_lr;
                } else {
                    log_lr += move_lr;
                    pos.apply_move(digit);
                }
            } else {
                pos.apply_move(digits.next(rng));
            }
            let id = self.intern(pos);
            self.visits.push(id);
        }
        log_lr
    }

    /// Distinct sites of the last walk, in first-visit order.
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn local_times(&self) -> &[u32] {
        &self.local_time
    }

    /// Dense index of the visit at time `k`.
    pub fn visits(&self) -> &[u32] {
        &self.visits
    }

    /// Dense index of a most-visited site (earliest on ties).
    pub fn most_visited(&self) -> usize {
        let mut best = 0;
        for (i, l) in self.local_time.iter().enumerate() {
            if *l > self.local_time[best] {
                best = i;
            }
        }
        best
    }

    /// Assigns charges along the path; `draw(k, site)` returns `η(k)`.
    pub fn charge_path(&mut self, mut draw: impl FnMut(usize, usize) -> f64) {
        self.charge.clear();
        self.charge.resize(self.sites.len(), 0.0);
        for (k, &id) in self.visits.iter().enumerate() {
            self.charge[id as usize] += draw(k, id as usize);
        }
    }

    /// Assigns each site the sum of `l_n(z)` fresh charges; `draw(site, l)` returns the sum.
    pub fn charge_sites(&mut self, mut draw: impl FnMut(usize, u32) -> f64) {
        self.charge.clear();
        for (i, &l) in self.local_time.iter().enumerate() {
            self.charge.push(draw(i, l));
        }
    }

    pub fn charge(&self, site: usize) -> f64 {
        self.charge[site]
    }

    /// `X̌_n` of the current walk and charges.
    pub fn x_check(&self) -> f64 {
        self.charge.iter().zip(&self.local_time).map(|(q, l)| q * q - *l as f64).sum()
    }
}
