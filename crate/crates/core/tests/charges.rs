use polymer_core::charge_models::{ChargeDistribution, DistSpec, ExampleFamilyParams, LogLaplace, TailClass};
use polymer_core::numerics::quad::GaussRule;
use polymer_core::numerics::rng::seeded;
use polymer_core::numerics::stats::MomentAccumulator;
use polymer_core::rate_function::LegendrePair;
use proptest::prelude::*;
use std::sync::OnceLock;

fn builtins() -> &'static [ChargeDistribution] {
    static LAWS: OnceLock<Vec<ChargeDistribution>> = OnceLock::new();
    LAWS.get_or_init(|| {
        vec![
            ChargeDistribution::gaussian(1.0).unwrap(),
            ChargeDistribution::rademacher(),
            ChargeDistribution::example_family(&ExampleFamilyParams::new(1.0, 3.0)).unwrap(),
            ChargeDistribution::example_family(&ExampleFamilyParams::new(0.5, 2.0)).unwrap(),
        ]
    })
}

#[test]
fn sample_moments_match_unit_variance() {
    for (k, dist) in builtins().iter().enumerate() {
        let mut rng = seeded(100 + k as u64);
        let mut acc = MomentAccumulator::new();
        for _ in 0..1_000_000 {
            acc.add(dist.sample(&mut rng));
        }
        let mean = acc.moment(1);
        assert!(mean.abs() <= 3.0 * acc.moment_std_error(1), "{}: mean {mean}", dist.name());
        let var = acc.moment(2) - mean * mean;
        assert!((var - 1.0).abs() <= 0.01, "{}: variance {var}", dist.name());
    }
}

#[test]
fn family_gamma_matches_density_integral() {
    let dist = &builtins()[2];
    let rule = GaussRule::new(64);
    for y in [0.25, 0.5, 1.0, 2.0] {
        let mut total = 0.0;
        for k in 0..240 {
            let (a, b) = (-60.0 + 0.5 * k as f64, -59.5 + 0.5 * k as f64);
            let (x, w) = rule.mapped(a, b);
            total += x.iter().zip(&w).map(|(x, w)| w * (y * x + dist.log_density(*x).unwrap()).exp()).sum::<f64>();
        }
        let gamma = dist.gamma(y);
        assert!((gamma - total.ln()).abs() < 1e-9, "y={y}: {gamma} vs {}", total.ln());
    }
}

#[test]
fn tilted_means_match_gamma_prime() {
    for dist in &builtins()[..3] {
        for theta in [0.3, 0.8] {
            let tilt = dist.tilted(theta).unwrap();
            let mut rng = seeded(7);
            let mut acc = MomentAccumulator::new();
            for _ in 0..200_000 {
                acc.add(tilt.sample(&mut rng));
            }
            let target = dist.gamma_prime(theta);
            assert!(
                (acc.moment(1) - target).abs() <= 4.0 * acc.moment_std_error(1),
                "{} θ={theta}: {} vs {target}",
                dist.name(),
                acc.moment(1)
            );
        }
    }
}

#[test]
fn hypothesis_certificates() {
    let verdicts: Vec<(bool, bool)> = builtins()
        .iter()
        .map(|d| {
            let c = LegendrePair::new(d.clone()).certificate().unwrap();
            (c.gamma_sqrt_convex, c.i_sqrt_concave)
        })
        .collect();
    assert_eq!(verdicts, vec![(true, true), (false, false), (true, true), (true, true)]);
}

#[test]
fn tail_classes() {
    assert_eq!(builtins()[0].tail_class(), TailClass::Alpha(2.0));
    assert_eq!(builtins()[1].tail_class(), TailClass::Bounded);
    assert!((builtins()[2].tail_class().alpha() - 1.5).abs() < 1e-15);
    assert!((builtins()[3].tail_class().alpha() - 4.0 / 3.0).abs() < 1e-15);
}

#[test]
fn dist_specs_parse_from_json() {
    let spec: DistSpec =
        serde_json::from_str(r#"{"name": "example_family", "params": {"a": 1.0, "beta": 3.0}}"#).unwrap();
    assert_eq!(spec, DistSpec::ExampleFamily { a: 1.0, beta: 3.0 });
    let spec: DistSpec = serde_json::from_str(r#"{"name": "gaussian", "params": {}}"#).unwrap();
    assert_eq!(spec.build().unwrap().variance(), 1.0);
    let spec: DistSpec = serde_json::from_str(r#"{"name": "rademacher"}"#).unwrap();
    assert!(spec.build().unwrap().is_spin());
    assert!(serde_json::from_str::<DistSpec>(r#"{"name": "cauchy"}"#).is_err());
    assert!(DistSpec::ExampleFamily { a: 1.0, beta: 0.5 }.build().is_err());
}

#[test]
fn samplers_are_deterministic() {
    for dist in builtins() {
        let draw = |seed| {
            let mut rng = seeded(seed);
            (0..64).map(|_| dist.sample(&mut rng)).collect::<Vec<f64>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gamma_is_even_and_vanishes_at_zero(k in 0usize..4, y in 0.0f64..6.0) {
        let dist = &builtins()[k];
        prop_assert_eq!(dist.gamma(0.0), 0.0);
        let (a, b) = (dist.gamma(y), dist.gamma(-y));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn gamma_is_convex(k in 0usize..4, y in -6.0f64..6.0, h in 0.01f64..1.0) {
        let dist = &builtins()[k];
        let second = dist.gamma(y + h) - 2.0 * dist.gamma(y) + dist.gamma(y - h);
        prop_assert!(second >= -1e-10 * dist.gamma(y).abs().max(1.0), "second difference {}", second);
    }
}
