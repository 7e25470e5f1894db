//! Gauss-Legendre rules and a small adaptive integrator for smooth positive
//! integrands.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(points: usize) -> Self {
        let points = NonZeroUsize::new(points).expect("a quadrature rule needs at least one node");
        let rule = GaussLegendre::new(points);
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let xs = self.nodes.iter().map(|t| mid + half * t).collect();
        let ws = self.weights.iter().map(|w| half * w).collect();
        (xs, ws)
    }

    pub fn integrate<const K: usize>(&self, a: f64, b: f64, f: &mut impl FnMut(f64) -> [f64; K]) -> [f64; K] {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = [0.0; K];
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * t);
            for k in 0..K {
                acc[k] += w * v[k];
            }
        }
        for a in acc.iter_mut() {
            *a *= half;
        }
        acc
    }
}

fn coarse_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(7))
}

fn fine_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(15))
}

/// Adaptive bisection driven by the gap between a 7- and a 15-point rule.
///
/// Intended for nonnegative vector integrands: an interval is accepted when every
/// component satisfies `|fine - coarse| <= rel_tol * |fine| + abs_tol * width / total_width`.
pub fn adaptive<const K: usize>(
    mut f: impl FnMut(f64) -> [f64; K],
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<[f64; K]> {
    const MAX_INTERVALS: usize = 20_000;
    let total_width = b - a;
    let mut stack = vec![(a, b)];
    let mut result = [0.0; K];
    let mut worst = 0.0f64;
    let mut processed = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        processed += 1;
        let fine = fine_rule().integrate(lo, hi, &mut f);
        let coarse = coarse_rule().integrate(lo, hi, &mut f);
        let share = abs_tol * (hi - lo) / total_width;
        let ok = (0..K).all(|k| (fine[k] - coarse[k]).abs() <= rel_tol * fine[k].abs() + share);
        if ok || processed > MAX_INTERVALS || hi - lo <= 1e-13 * total_width.abs() {
            if !ok {
                worst = (0..K).map(|k| (fine[k] - coarse[k]).abs()).fold(worst, f64::max);
            }
            for k in 0..K {
                result[k] += fine[k];
            }
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    if worst > 0.0 && worst > 1e3 * (rel_tol * result[0].abs() + abs_tol) {
        return Err(Error::NonConvergence { estimate: result[0], error: worst, tol: rel_tol });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let rule = GaussRule::new(5);
        let v = rule.integrate(0.0, 2.0, &mut |x| [x.powi(9)]);
        assert!((v[0] - 2f64.powi(10) / 10.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        // integral of exp(-x^2 / (2 s^2)) over the real line is s sqrt(2 pi)
        let s = 1e-3;
        let v = adaptive(|x| [(-(x * x) / (2.0 * s * s)).exp()], -1.0, 1.0, 1e-13, 0.0).unwrap();
        let exact = s * (2.0 * std::f64::consts::PI).sqrt();
        assert!((v[0] / exact - 1.0).abs() < 1e-11, "{}", v[0]);
    }
}
