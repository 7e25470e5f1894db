use polymer_core::charge_models::{ChargeDistribution, ExampleFamilyParams};
use polymer_core::error::Error;
use polymer_core::lattice_walk::Site;
use polymer_core::tail_lab::{
    check_concentration, check_concentration_contrast, check_nagaev, check_return_tail, check_zeta_regimes, plus_shape,
};

fn units(step: f64) -> Vec<f64> {
    (1..=12).map(|k| step * k as f64).collect()
}

#[test]
fn single_site_scalings_coincide() {
    let gauss = ChargeDistribution::gaussian(1.0).unwrap();
    let r = check_concentration(3, &[Site::ORIGIN], 500, &units(0.5), &units(1.0), &gauss, 40_000, 1).unwrap();
    assert!(r.rows.iter().all(|row| row.scaled_t == row.t));
    assert!(r.passed(), "{:?}", r.comparisons);
}

#[test]
fn concentration_on_a_plus_shape() {
    let gauss = ChargeDistribution::gaussian(1.0).unwrap();
    let set = plus_shape(3);
    let scale = (set.len() as f64).cbrt();
    let charge: Vec<f64> = units(0.5).iter().map(|t| t * scale).collect();
    let occupation: Vec<f64> = units(1.0).iter().map(|t| t * scale * scale).collect();
    let r = check_concentration(3, &set, 1000, &charge, &occupation, &gauss, 60_000, 2).unwrap();
    assert!(r.passed(), "{:?}", r.comparisons);
    assert!(r.fit("charge").unwrap().slope < 0.0 && r.fit("occupation").unwrap().slope < 0.0);
    let csv = r.to_csv().unwrap();
    assert!(csv.starts_with("series,t,scaled_t,hits,trials,frequency,ci_lo,ci_hi,reference\n"));
}

#[test]
fn contrast_between_scalings() {
    let gauss = ChargeDistribution::gaussian(1.0).unwrap();
    let cube: Vec<Site> = (-1..=1)
        .flat_map(|x| (-1..=1).flat_map(move |y| (-1..=1).map(move |z| Site::from_coords(&[x, y, z]).unwrap())))
        .collect();
    let sets = vec![vec![Site::ORIGIN], plus_shape(3), cube];
    let c = check_concentration_contrast(3, &sets, 1000, &units(0.5), &units(1.0), &gauss, 60_000, 3).unwrap();
    assert_eq!(c.sizes, vec![1, 7, 27]);
    assert!(c.passed(), "{c:?}");
}

#[test]
fn zeta_regimes_for_each_law() {
    let grid = [1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 20.0, 24.0, 32.0];
    let laws = [
        ChargeDistribution::gaussian(1.0).unwrap(),
        ChargeDistribution::rademacher(),
        ChargeDistribution::example_family(&ExampleFamilyParams::new(1.0, 3.0)).unwrap(),
    ];
    for dist in &laws {
        let r = check_zeta_regimes(dist, 16, &grid, 300_000, 4).unwrap();
        assert!(r.passed(), "{}: {:?}", dist.name(), r.comparisons);
    }
    let spins = check_zeta_regimes(&laws[1], 16, &grid, 300_000, 4).unwrap();
    assert!(spins.rows.iter().filter(|r| r.t > 16.0).all(|r| r.hits == 0));
}

#[test]
fn nagaev_constant_is_reported() {
    let gauss = ChargeDistribution::gaussian(1.0).unwrap();
    let r = check_nagaev(&gauss, 400, &[0.0, 20.0, 40.0, 60.0, 80.0], 40_000, 5).unwrap();
    assert!(r.passed(), "{:?}", r.comparisons);
    assert!(r.comparisons.iter().any(|c| c.value.is_finite() && c.value > 0.0));
}

#[test]
fn return_tail_exponent_in_three_dimensions() {
    let grid: Vec<f64> = (0..=10).map(|k| 10.0 * 10f64.powf(k as f64 / 5.0)).collect();
    let r = check_return_tail(3, 600_000, 1000, &grid, Some(0.15), 6).unwrap();
    assert!(r.passed(), "{:?} {:?}", r.fits, r.comparisons);
    let slope = r.fit("return").unwrap().slope;
    assert!((-0.65..=-0.35).contains(&slope), "{slope}");
}

#[test]
fn return_tail_needs_enough_events() {
    let grid = [1.0, 2.0, 4.0];
    assert!(matches!(check_return_tail(3, 500, 10, &grid, None, 7), Err(Error::TooFewEvents(_))));
    assert!(check_return_tail(3, 10_000, 10, &[1.0, 20.0], None, 7).is_err());
}
