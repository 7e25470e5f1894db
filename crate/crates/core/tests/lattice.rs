use polymer_core::lattice_walk::{
    green_constants, local_times, return_probability_mc, simulate_walk, Site, Trajectory, WalkConfig,
};
use polymer_core::numerics::quad::GaussRule;
use proptest::prelude::*;

/// Watson's integral for the simple cubic lattice.
const WATSON_SIMPLE_CUBIC: f64 = 1.516_386_059_151_978;

/// `e^{-s} I_0(s)`: integral form below 50, asymptotic series above.
fn scaled_i0(s: f64, rule: &GaussRule) -> f64 {
    if s >= 50.0 {
        return (2.0 * std::f64::consts::PI * s).powf(-0.5) * asymptotic(1.0 / s, 1).iter().sum::<f64>();
    }
    let mut acc = 0.0;
    for (a, b) in [(0.0, 0.25), (0.25, 1.0), (1.0, std::f64::consts::PI)] {
        let (x, w) = rule.mapped(a, b);
        acc += x.iter().zip(&w).map(|(t, w)| w * (s * (t.cos() - 1.0)).exp()).sum::<f64>();
    }
    acc / std::f64::consts::PI
}

/// Terms of `(Σ_k a_k u^k)^d` up to `u^5`, where `a_k = ((2k-1)!!)² / (k! 8^k)`.
fn asymptotic(u: f64, d: usize) -> Vec<f64> {
    let a = [1.0, 1.0 / 8.0, 9.0 / 128.0, 225.0 / 3072.0, 11025.0 / 98304.0, 893025.0 / 3932160.0];
    let mut poly = vec![1.0];
    for _ in 0..d {
        let mut next = vec![0.0; a.len()];
        for (i, p) in poly.iter().enumerate() {
            for (j, c) in a.iter().enumerate() {
                if i + j < a.len() {
                    next[i + j] += p * c;
                }
            }
        }
        poly = next;
    }
    poly.iter().enumerate().map(|(k, c)| c * u.powi(k as i32)).collect()
}

/// `G = (2d+1)/2 ∫_0^∞ (e^{-s} I_0(s))^d ds`.
fn green_bessel(d: usize) -> f64 {
    let inner = GaussRule::new(48);
    let outer = GaussRule::new(24);
    let cut = 50.0;
    let mut body = 0.0;
    let edges: Vec<f64> = (0..=200).map(|k| cut * (k as f64 / 200.0).powi(2)).collect();
    for win in edges.windows(2) {
        let (x, w) = outer.mapped(win[0], win[1]);
        body += x.iter().zip(&w).map(|(s, w)| w * scaled_i0(*s, &inner).powi(d as i32)).sum::<f64>();
    }
    let half_d = d as f64 / 2.0;
    let tail: f64 = asymptotic(1.0, d)
        .iter()
        .enumerate()
        .map(|(k, c)| c * cut.powf(1.0 - half_d - k as f64) / (half_d + k as f64 - 1.0))
        .sum::<f64>()
        * (2.0 * std::f64::consts::PI).powf(-half_d);
    (2 * d + 1) as f64 / 2.0 * (body + tail)
}

#[test]
fn green_matches_watson_integral() {
    let c = green_constants(3, 1e-10).unwrap();
    let lazy = 7.0 / 6.0 * WATSON_SIMPLE_CUBIC;
    assert!((c.green_at_origin - lazy).abs() < 1e-9, "{} vs {lazy}", c.green_at_origin);
}

#[test]
fn green_matches_bessel_integral() {
    for d in 3..=5 {
        let c = green_constants(d, 1e-9).unwrap();
        let oracle = green_bessel(d);
        assert!((c.green_at_origin - oracle).abs() < 1e-7, "d={d}: {} vs {oracle}", c.green_at_origin);
    }
}

#[test]
fn return_probability_decreases_with_dimension() {
    let r: Vec<f64> = (3..=5).map(|d| green_constants(d, 1e-8).unwrap().return_probability).collect();
    assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
}

#[test]
fn mc_return_frequency_is_consistent() {
    let c = green_constants(3, 1e-10).unwrap();
    let est = return_probability_mc(3, 2000, 200_000, 11).unwrap();
    let gap = c.return_probability - est.estimate;
    assert!(gap.abs() <= 3.0 * est.std_error + est.truncation_allowance, "{est:?} vs {}", c.return_probability);
}

#[test]
fn trajectory_round_trips_through_json() {
    let t = simulate_walk(&WalkConfig { dimension: 3, steps: 40, seed: 8 }).unwrap();
    let back: Trajectory = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
    assert_eq!(t, back);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_times_conserve_length(d in 3usize..=6, n in 1usize..400, seed in any::<u64>()) {
        let t = simulate_walk(&WalkConfig { dimension: d, steps: n, seed }).unwrap();
        let lt = local_times(&t);
        prop_assert_eq!(lt.total(), n);
        prop_assert_eq!(lt.iter().map(|(_, l)| l as usize).sum::<usize>(), n);
        prop_assert!(lt.get(&Site::ORIGIN) >= 1);
    }

    #[test]
    fn walks_are_deterministic(d in 3usize..=5, n in 1usize..300, seed in any::<u64>()) {
        let cfg = WalkConfig { dimension: d, steps: n, seed };
        prop_assert_eq!(simulate_walk(&cfg).unwrap(), simulate_walk(&cfg).unwrap());
    }

    #[test]
    fn walks_stay_in_the_box(n in 1usize..300, seed in any::<u64>()) {
        let t = simulate_walk(&WalkConfig { dimension: 3, steps: n, seed }).unwrap();
        for s in t.sites() {
            prop_assert!(s.l1_norm() < n as i64);
        }
    }
}
