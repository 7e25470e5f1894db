use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use super::estimators::{TailEstimate, TailMethod};
use crate::error::{invalid, Error, Result};
use crate::lattice_walk::{check_dimension, Site};

/// Largest number of (walk, charge) outcomes enumerated exactly.
pub const EXACT_TERM_LIMIT: u128 = 100_000_000;

/// Exact law of `X̌_n` under ±1 charges, as integer outcome counts.
///
/// Every one of the `(2d+1)^{n-1}` walks and `2^n` sign vectors is one outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    pub dimension: usize,
    pub n: usize,
    /// Outcome count for each value of `X̌_n`.
    pub counts: BTreeMap<i64, u128>,
    pub total: u128,
}

impl ExactDistribution {
    /// Number of outcomes with `X̌_n >= xi`.
    pub fn count_at_least(&self, xi: f64) -> u128 {
        self.counts.iter().filter(|(v, _)| **v as f64 >= xi).map(|(_, c)| *c).sum()
    }

    pub fn tail(&self, xi: f64) -> f64 {
        self.count_at_least(xi) as f64 / self.total as f64
    }
}

fn terms(d: usize, n: usize) -> Option<u128> {
    let walks = ((2 * d + 1) as u128).checked_pow(n.saturating_sub(1) as u32)?;
    walks.checked_mul(1u128.checked_shl(n as u32)?)
}

/// Counts of `q² - l` over the `2^l` sign vectors of a site visited `l` times.
fn site_law(l: u32) -> Vec<(i64, u128)> {
    let mut binom = 1u128;
    let mut out = Vec::with_capacity(l as usize + 1);
    for k in 0..=l {
        let q = l as i64 - 2 * k as i64;
        out.push((q * q - l as i64, binom));
        binom = binom * (l - k) as u128 / (k + 1) as u128;
    }
    out
}

fn profile_law(profile: &[u32]) -> BTreeMap<i64, u128> {
    let mut law = BTreeMap::from([(0i64, 1u128)]);
    for &l in profile {
        let site = site_law(l);
        let mut next = BTreeMap::new();
        for (v, c) in &law {
            for (w, m) in &site {
                *next.entry(v + w).or_insert(0) += c * m;
            }
        }
        law = next;
    }
    law
}

/// Enumerates all walks, grouping them by their multiset of local times; the
/// sign vectors of each group are counted by convolving per-site laws.
pub fn exact_distribution(d: usize, n: usize) -> Result<ExactDistribution> {
    check_dimension(d)?;
    if n == 0 {
        return Err(invalid("exact enumeration needs n >= 1"));
    }
    let total = terms(d, n)
        .filter(|t| *t <= EXACT_TERM_LIMIT)
        .ok_or(Error::TooLarge { terms: terms(d, n).unwrap_or(u128::MAX), limit: EXACT_TERM_LIMIT })?;

    let mut profiles: FxHashMap<Vec<u32>, u128> = FxHashMap::default();
    let mut visited: Vec<(Site, u32)> = vec![(Site::ORIGIN, 1)];
    let mut path = vec![Site::ORIGIN];
    enumerate(d, n, &mut path, &mut visited, &mut profiles);

    let mut counts = BTreeMap::new();
    for (profile, walks) in profiles {
        for (v, c) in profile_law(&profile) {
            *counts.entry(v).or_insert(0) += c * walks;
        }
    }
    debug_assert_eq!(counts.values().sum::<u128>(), total);
    Ok(ExactDistribution { dimension: d, n, counts, total })
}

fn enumerate(
    d: usize,
    n: usize,
    path: &mut Vec<Site>,
    visited: &mut Vec<(Site, u32)>,
    profiles: &mut FxHashMap<Vec<u32>, u128>,
) {
    if path.len() == n {
        let mut profile: Vec<u32> = visited.iter().map(|(_, l)| *l).collect();
        profile.sort_unstable();
        *profiles.entry(profile).or_insert(0) += 1;
        return;
    }
    let here = *path.last().unwrap_or(&Site::ORIGIN);
    for digit in 0..(2 * d as u32 + 1) {
        let mut next = here;
        next.apply_move(digit);
        let slot = visited.iter().position(|(s, _)| *s == next);
        match slot {
            Some(i) => visited[i].1 += 1,
            None => visited.push((next, 1)),
        }
        path.push(next);
        enumerate(d, n, path, visited, profiles);
        path.pop();
        match slot {
            Some(i) => visited[i].1 -= 1,
            None => {
                visited.pop();
            }
        }
    }
}

/// Exact `P(X̌_n >= xi)` for ±1 charges.
pub fn exact_tail(d: usize, n: usize, xi: f64) -> Result<TailEstimate> {
    if xi.is_nan() {
        return Err(invalid("xi is NaN"));
    }
    let dist = exact_distribution(d, n)?;
    let hits = dist.count_at_least(xi);
    let p = hits as f64 / dist.total as f64;
    Ok(TailEstimate {
        method: TailMethod::Exact,
        dimension: d,
        n,
        xi,
        probability: p,
        log_probability: p.ln(),
        std_error: 0.0,
        samples: dist.total as u64,
        effective_sample_size: dist.total as f64,
        theta: None,
        exact_numerator: Some(hits),
        exact_denominator: Some(dist.total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_never_exceeds_zero() {
        let t = exact_tail(3, 1, 1.0).unwrap();
        assert_eq!(t.probability, 0.0);
        assert_eq!(exact_tail(3, 1, 0.0).unwrap().probability, 1.0);
    }

    #[test]
    fn two_sites() {
        let t = exact_tail(3, 2, 2.0).unwrap();
        assert_eq!((t.exact_numerator, t.exact_denominator), (Some(2), Some(28)));
        assert!((exact_tail(3, 2, 0.0).unwrap().probability - 13.0 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn site_law_counts_sign_vectors() {
        for l in 1..10 {
            let total: u128 = site_law(l).iter().map(|(_, c)| c).sum();
            assert_eq!(total, 1u128 << l);
        }
        assert_eq!(site_law(2), vec![(2, 1), (-2, 2), (2, 1)]);
    }

    #[test]
    fn guard_rejects_large_instances() {
        assert!(matches!(exact_distribution(3, 12), Err(Error::TooLarge { .. })));
        assert!(exact_distribution(2, 3).is_err());
    }
}
