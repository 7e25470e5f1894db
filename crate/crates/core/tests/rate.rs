use polymer_core::charge_models::{ChargeDistribution, ExampleFamilyParams, FnLogLaplace};
use polymer_core::error::Error;
use polymer_core::lattice_walk::green_constants;
use polymer_core::rate_function::{
    certify_sqrt_shapes, check_duality_identity, legendre, rate_constant, rate_constant_with_chi, solve_pile,
    solve_pile_bruteforce, solve_pin, Attainment, LegendrePair, LogGrid, PileProblem, PinProblem,
};
use proptest::prelude::*;
use std::sync::OnceLock;

fn pairs() -> &'static [LegendrePair<ChargeDistribution>] {
    static PAIRS: OnceLock<Vec<LegendrePair<ChargeDistribution>>> = OnceLock::new();
    PAIRS.get_or_init(|| {
        vec![
            LegendrePair::new(ChargeDistribution::gaussian(1.0).unwrap()),
            LegendrePair::new(ChargeDistribution::example_family(&ExampleFamilyParams::new(1.0, 3.0)).unwrap()),
            LegendrePair::new(ChargeDistribution::rademacher()),
        ]
    })
}

fn certified() -> &'static [LegendrePair<ChargeDistribution>] {
    &pairs()[..2]
}

#[test]
fn gaussian_rate_constant_closed_form() {
    for d in 3..=5 {
        let chi = green_constants(d, 1e-10).unwrap().chi_d;
        for sigma in [0.5, 1.0, 2.0] {
            let (rc, lc) = rate_constant(&ChargeDistribution::gaussian(sigma).unwrap(), d).unwrap();
            assert_eq!(lc.chi_d, chi);
            let expected = (2.0 * chi / sigma).sqrt();
            assert!((rc.value - expected).abs() <= 1e-9, "d={d} σ={sigma}: {} vs {expected}", rc.value);
        }
    }
}

#[test]
fn duality_residuals() {
    let grid = LogGrid::default().values();
    assert!(check_duality_identity(&pairs()[0], &grid).unwrap() <= 1e-6);
    assert!(check_duality_identity(&pairs()[1], &grid).unwrap() <= 1e-4);
}

#[test]
fn rademacher_conjugate_boundary() {
    let r = &pairs()[2];
    assert!((r.rate(1.0).unwrap() - 2f64.ln()).abs() < 1e-12);
    assert_eq!(r.rate(1.5).unwrap(), f64::INFINITY);
    let numeric = legendre(r.law(), 0.6, 1e-12).unwrap();
    assert_eq!(numeric.attainment, Attainment::Interior);
    let closed = 0.5 * (1.6 * 1.6f64.ln() + 0.4 * 0.4f64.ln());
    assert!((numeric.value - closed).abs() < 1e-10);
}

#[test]
fn rademacher_is_refused_by_the_gates() {
    let r = &pairs()[2];
    assert!(matches!(rate_constant_with_chi(r, 3, 0.8), Err(Error::HypothesisNotCertified(_))));
    let p = PileProblem::new(vec![1.0, 2.0], 1.5).unwrap();
    assert!(matches!(solve_pile(&p, r), Err(Error::HypothesisNotCertified(_))));
}

#[test]
fn synthetic_laws_are_certified_or_flagged() {
    // Γ(y) = y⁴/12 gives I(x) = (3x)^{4/3}/4
    let quartic = LegendrePair::new(FnLogLaplace::new(|y: f64| y.powi(4) / 12.0));
    let c = certify_sqrt_shapes(&quartic, &LogGrid::default()).unwrap();
    assert!(c.gamma_sqrt_convex && c.i_sqrt_concave);
    assert!((quartic.rate(2.0).unwrap() - 6f64.powf(4.0 / 3.0) / 4.0).abs() < 1e-8);
    let lc = LegendrePair::new(FnLogLaplace::with_slope_limit(|y: f64| y.cosh().ln(), 1.0));
    let c = certify_sqrt_shapes(&lc, &LogGrid::default()).unwrap();
    assert!(!c.gamma_sqrt_convex && !c.i_sqrt_concave);
    assert!(matches!(rate_constant_with_chi(&lc, 3, 0.5), Err(Error::HypothesisNotCertified(_))));
}

#[test]
fn pin_matches_golden_section() {
    for pair in pairs() {
        for (alpha, beta) in [(0.3, 1.0), (0.83, 2.5), (2.0, 0.4)] {
            let p = PinProblem::new(alpha, beta).unwrap();
            let s = solve_pin(&p, pair).unwrap();
            assert!(
                (s.value - s.golden_value).abs() <= 1e-6 * s.value,
                "{} ({alpha}, {beta}): {s:?}",
                pair.law().name()
            );
        }
    }
}

fn pile_strategy() -> impl Strategy<Value = (Vec<f64>, f64, usize)> {
    (prop::collection::vec(0.2f64..3.0, 1..=3), 0.1f64..4.0, 0usize..2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fenchel_young(k in 0usize..3, x in 0.0f64..0.999, y in -8.0f64..8.0) {
        let pair = &pairs()[k];
        let x = if k == 2 { x } else { 8.0 * x };
        let i = pair.rate(x).unwrap();
        prop_assert!(x * y <= i + pair.gamma(y) + 1e-9, "x={} y={} I={} Γ={}", x, y, i, pair.gamma(y));
    }

    #[test]
    fn sqrt_superadditivity(k in 0usize..2, xs in prop::collection::vec(0.01f64..9.0, 2..6)) {
        let pair = &certified()[k];
        let left: f64 = xs.iter().map(|x| pair.rate(x.sqrt()).unwrap()).sum();
        let right = pair.rate(xs.iter().sum::<f64>().sqrt()).unwrap();
        prop_assert!(left >= right - 1e-9 * right.max(1.0), "{} < {}", left, right);
    }

    #[test]
    fn convex_scaling(k in 0usize..3, x in 0.0f64..0.999, p in 0.0f64..=1.0) {
        let pair = &pairs()[k];
        let x = if k == 2 { x } else { 6.0 * x };
        prop_assert!(p * pair.rate(x).unwrap() >= pair.rate(p * x).unwrap() - 1e-10);
    }

    #[test]
    fn pile_is_permutation_invariant((weights, target, k) in pile_strategy(), shift in 0usize..3) {
        let pair = &certified()[k];
        let mut rotated = weights.clone();
        rotated.rotate_left(shift % weights.len());
        let a = solve_pile(&PileProblem::new(weights, target).unwrap(), pair).unwrap();
        let b = solve_pile(&PileProblem::new(rotated, target).unwrap(), pair).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-12 * a.value.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pile_agrees_with_bruteforce((weights, target, k) in pile_strategy()) {
        let pair = &certified()[k];
        let p = PileProblem::new(weights, target).unwrap();
        let closed = solve_pile(&p, pair).unwrap();
        let brute = solve_pile_bruteforce(&p, pair, 120).unwrap();
        prop_assert!(closed.value <= brute.value + 1e-9 * brute.value.max(1.0));
        prop_assert!((closed.value - brute.value).abs() <= 1e-3 * closed.value.max(1.0), "{:?} vs {:?}", closed, brute);
    }
}
