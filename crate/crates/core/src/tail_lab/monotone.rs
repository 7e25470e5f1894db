use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// A symmetric law on the integers with integer weights, for exact arithmetic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteLaw {
    pub name: String,
    pub atoms: Vec<(i64, u64)>,
}

impl DiscreteLaw {
    pub fn new(name: &str, atoms: Vec<(i64, u64)>) -> Result<Self> {
        if atoms.is_empty() || atoms.iter().any(|(_, w)| *w == 0) {
            return Err(invalid("discrete law needs atoms with positive weights"));
        }
        let mut sym: BTreeMap<i64, i128> = BTreeMap::new();
        for (v, w) in &atoms {
            *sym.entry(*v).or_insert(0) += *w as i128;
            *sym.entry(-*v).or_insert(0) -= *w as i128;
        }
        if sym.values().any(|c| *c != 0) {
            return Err(invalid(format!("discrete law '{name}' is not symmetric")));
        }
        Ok(Self { name: name.into(), atoms })
    }

    /// Fair ±1.
    pub fn rademacher() -> Self {
        Self { name: "rademacher".into(), atoms: vec![(-1, 1), (1, 1)] }
    }

    /// Uniform on `{-1, 0, 1}`.
    pub fn uniform_three() -> Self {
        Self { name: "uniform{-1,0,1}".into(), atoms: vec![(-1, 1), (0, 1), (1, 1)] }
    }

    fn total_weight(&self) -> u128 {
        self.atoms.iter().map(|(_, w)| *w as u128).sum()
    }

    /// Counts of `Σ_{i≤m} η(i)` over the weighted product space.
    fn sum_law(&self, m: usize) -> Result<BTreeMap<i64, u128>> {
        let mut law = BTreeMap::from([(0i64, 1u128)]);
        for _ in 0..m {
            let mut next = BTreeMap::new();
            for (s, c) in &law {
                for (v, w) in &self.atoms {
                    let add = c.checked_mul(*w as u128).ok_or(overflow())?;
                    *next.entry(s + v).or_insert(0) += add;
                }
            }
            law = next;
        }
        Ok(law)
    }

    /// Counts of `Σ_j (Σ_{i≤n_j} η_j(i))²` and the total weight.
    fn energy_law(&self, counts: &[usize]) -> Result<(BTreeMap<i64, u128>, u128)> {
        let mut law = BTreeMap::from([(0i64, 1u128)]);
        for &m in counts {
            let site = self.sum_law(m)?;
            let mut next = BTreeMap::new();
            for (e, c) in &law {
                for (s, w) in &site {
                    *next.entry(e + s * s).or_insert(0) += c.checked_mul(*w).ok_or(overflow())?;
                }
            }
            law = next;
        }
        let total = (0..counts.iter().sum::<usize>())
            .try_fold(1u128, |t, _| t.checked_mul(self.total_weight()))
            .ok_or(overflow())?;
        Ok((law, total))
    }
}

fn overflow() -> Error {
    Error::TooLarge { terms: u128::MAX, limit: u128::MAX }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub counts: Vec<usize>,
    pub coordinate: usize,
    pub xi: f64,
    /// `P(Σ_j S_j² > ξ)` before and after adding one charge at `coordinate`.
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub law: String,
    pub max_n: usize,
    pub sites: usize,
    pub xi_grid: Vec<f64>,
    pub comparisons: u64,
    pub violations: Vec<Violation>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exact check that `P(Σ_j (Σ_{i≤n_j} η_j(i))² > ξ)` is nondecreasing in each `n_j`.
///
/// Covers every tuple over `1..=sites` sites with entries in `0..=max_n`;
/// comparisons are made by exact cross-multiplication.
pub fn check_monotonicity(
    law: &DiscreteLaw,
    max_n: usize,
    sites: usize,
    xi_grid: &[f64],
) -> Result<MonotonicityReport> {
    if sites == 0 {
        return Err(invalid("monotonicity check needs at least one site"));
    }
    let mut violations = Vec::new();
    let mut comparisons = 0u64;
    for k in 1..=sites {
        let mut tuple = vec![0usize; k];
        loop {
            let (law_a, total_a) = law.energy_law(&tuple)?;
            for j in 0..k {
                if tuple[j] == max_n {
                    continue;
                }
                let mut bigger = tuple.clone();
                bigger[j] += 1;
                let (law_b, total_b) = law.energy_law(&bigger)?;
                for &xi in xi_grid {
                    comparisons += 1;
                    let a: u128 = law_a.iter().filter(|(e, _)| **e as f64 > xi).map(|(_, c)| *c).sum();
                    let b: u128 = law_b.iter().filter(|(e, _)| **e as f64 > xi).map(|(_, c)| *c).sum();
                    let lhs = a.checked_mul(total_b).ok_or(overflow())?;
                    let rhs = b.checked_mul(total_a).ok_or(overflow())?;
                    if lhs > rhs {
                        violations.push(Violation {
                            counts: tuple.clone(),
                            coordinate: j,
                            xi,
                            before: a as f64 / total_a as f64,
                            after: b as f64 / total_b as f64,
                        });
                    }
                }
            }
            let mut pos = 0;
            while pos < k && tuple[pos] == max_n {
                tuple[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
            tuple[pos] += 1;
        }
    }
    Ok(MonotonicityReport { law: law.name.clone(), max_n, sites, xi_grid: xi_grid.to_vec(), comparisons, violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric_laws() {
        assert!(DiscreteLaw::new("skew", vec![(1, 1), (-1, 2)]).is_err());
        assert!(DiscreteLaw::new("ok", vec![(2, 3), (0, 5), (-2, 3)]).is_ok());
    }

    #[test]
    fn comparison_count() {
        let grid: Vec<f64> = (0..20).map(|k| 0.5 + 2.5 * k as f64).collect();
        let r = check_monotonicity(&DiscreteLaw::uniform_three(), 4, 3, &grid).unwrap();
        assert_eq!(r.comparisons, (4 + 40 + 300) * 20);
    }

    #[test]
    fn trivial_thresholds() {
        let r = check_monotonicity(&DiscreteLaw::rademacher(), 4, 2, &[-1.0, 100.0]).unwrap();
        assert!(r.passed());
    }
}
