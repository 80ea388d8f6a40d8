mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crowdbound::{fit_mle, sample, DistributionSpec, Family, FitFamily};

use common::simpson;

/// CDF at `x` by integrating the density in log space (or directly for the
/// normal), starting far enough into the lower tail that the missing mass is
/// below 1e-15.
fn integrated_cdf(spec: &DistributionSpec, x: f64) -> f64 {
    const PANELS: usize = 20_000;
    let in_log = |a: f64, b: f64| simpson(|t| spec.pdf(t.exp()) * t.exp(), a, b, PANELS);
    match spec.family() {
        Family::Normal => simpson(|t| spec.pdf(t), spec.p1() - 12.0 * spec.p2(), x, PANELS),
        Family::LogNormal => in_log(spec.p1() - 12.0 * spec.p2(), x.ln()),
        Family::Pareto => {
            if x <= spec.p1() {
                0.0
            } else {
                in_log(spec.p1().ln(), x.ln())
            }
        }
        Family::LogLaplace => {
            // the log density has a kink at the location
            let (loc, lo) = (spec.p1(), spec.p1() - 40.0 * spec.p2());
            let t = x.ln();
            if t <= loc {
                in_log(lo, t)
            } else {
                in_log(lo, loc) + in_log(loc, t)
            }
        }
    }
}

#[test]
fn density_integrates_to_cdf() {
    let specs = [
        DistributionSpec::normal(3.0, 2.0).unwrap(),
        DistributionSpec::lognormal(0.7, 1.3).unwrap(),
        DistributionSpec::pareto(1.5, 1.7).unwrap(),
        DistributionSpec::log_laplace(0.2, 0.8).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for spec in specs {
        for _ in 0..10 {
            // random points spread over the bulk of the distribution
            let q: f64 = rng.random_range(0.001..0.999);
            let x = sample(&spec, 1, rng.random()).unwrap()[0].max(match spec.family() {
                Family::Pareto => spec.p1() * (1.0 + q),
                _ => f64::MIN,
            });
            let got = integrated_cdf(&spec, x);
            assert!(
                (got - spec.cdf(x)).abs() <= 1e-6,
                "{spec:?} at {x}: quadrature {got} vs cdf {}",
                spec.cdf(x)
            );
        }
    }
}

#[test]
fn lognormal_fit_is_consistent() {
    let spec = DistributionSpec::lognormal(0.5, 1.2).unwrap();
    let fit = fit_mle(FitFamily::LogNormal, &sample(&spec, 10_000, 5).unwrap()).unwrap();
    assert!((fit.spec.p1() - 0.5).abs() < 0.05, "{fit:?}");
    assert!((fit.spec.p2() - 1.2).abs() < 0.05, "{fit:?}");
    assert_eq!(fit.n_obs, 10_000);
}

fn any_spec() -> impl Strategy<Value = DistributionSpec> {
    prop_oneof![
        (-5.0..5.0f64, 0.01..5.0f64).prop_map(|(a, b)| DistributionSpec::normal(a, b).unwrap()),
        (-3.0..3.0f64, 0.01..3.0f64).prop_map(|(a, b)| DistributionSpec::lognormal(a, b).unwrap()),
        (0.01..10.0f64, 0.2..5.0f64).prop_map(|(a, b)| DistributionSpec::pareto(a, b).unwrap()),
        (-3.0..3.0f64, 0.01..3.0f64)
            .prop_map(|(a, b)| DistributionSpec::log_laplace(a, b).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampling_is_a_function_of_the_seed(spec in any_spec(), seed in any::<u64>(), count in 1usize..200) {
        let a = sample(&spec, count, seed).unwrap();
        let b = sample(&spec, count, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let c = sample(&spec, count.max(8), seed.wrapping_add(1)).unwrap();
        prop_assert_ne!(&a[..a.len().min(8)], &c[..a.len().min(8)]);
    }

    #[test]
    fn samples_respect_support(spec in any_spec(), seed in any::<u64>()) {
        for x in sample(&spec, 100, seed).unwrap() {
            prop_assert!(x.is_finite());
            match spec.family() {
                Family::Normal => {}
                Family::Pareto => prop_assert!(x >= spec.p1()),
                _ => prop_assert!(x > 0.0),
            }
        }
    }

    #[test]
    fn cdf_is_monotone(spec in any_spec(), a in -50.0..50.0f64, b in -50.0..50.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (flo, fhi) = (spec.cdf(lo), spec.cdf(hi));
        prop_assert!((0.0..=1.0).contains(&flo) && (0.0..=1.0).contains(&fhi));
        prop_assert!(flo <= fhi);
    }

    #[test]
    fn lognormal_likelihood_changes_variables(seed in any::<u64>(), mu in -2.0..2.0f64, sigma in 0.1..2.0f64) {
        let data = sample(&DistributionSpec::lognormal(mu, sigma).unwrap(), 50, seed).unwrap();
        let logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
        let ln = fit_mle(FitFamily::LogNormal, &data).unwrap();
        let n = fit_mle(FitFamily::Normal, &logs).unwrap();
        let jacobian: f64 = logs.iter().sum();
        prop_assert!((ln.log_likelihood - (n.log_likelihood - jacobian)).abs() <= 1e-9);
    }
}
