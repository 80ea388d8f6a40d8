use proptest::prelude::*;

use crowdbound::context::relative_likelihood;
use crowdbound::{r_score, sample, DistributionSpec};

#[test]
fn score_ignores_units() {
    for seed in 0..20 {
        let spec = if seed % 2 == 0 {
            DistributionSpec::lognormal(1.0, 0.4).unwrap()
        } else {
            DistributionSpec::normal(50.0, 8.0).unwrap()
        };
        let data: Vec<f64> = sample(&spec, 200, seed)
            .unwrap()
            .into_iter()
            .filter(|&x| x > 0.0)
            .collect();
        let base = r_score(&data).unwrap();
        for c in [1e-3, 0.37, 12.0, 4e4] {
            let scaled: Vec<f64> = data.iter().map(|x| x * c).collect();
            let r = r_score(&scaled).unwrap();
            assert!(
                (r.r - base.r).abs() <= 1e-9,
                "seed {seed} c {c}: {} vs {}",
                r.r,
                base.r
            );
        }
    }
}

#[test]
fn median_score_grows_with_dispersion() {
    let medians: Vec<f64> = [0.1, 0.5, 1.0, 2.0]
        .iter()
        .map(|&sigma| {
            let spec = DistributionSpec::lognormal(0.0, sigma).unwrap();
            let mut rs: Vec<f64> = (0..50)
                .map(|seed| r_score(&sample(&spec, 1000, seed).unwrap()).unwrap().r)
                .collect();
            rs.sort_by(f64::total_cmp);
            0.5 * (rs[24] + rs[25])
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] >= w[0]), "{medians:?}");
}

#[test]
fn score_is_the_logistic_of_the_likelihood_gap() {
    let data = sample(&DistributionSpec::lognormal(2.0, 0.05).unwrap(), 40, 3).unwrap();
    let r = r_score(&data).unwrap();
    let expected = 1.0 / (1.0 + (r.ll_normal - r.ll_lognormal).exp());
    assert!((r.r - expected).abs() <= 1e-12);
    assert_eq!(r.n_obs, 40);
}

proptest! {
    #[test]
    fn moderate_gaps_stay_strictly_inside(a in -1e4..1e4f64, gap in -30.0..30.0f64) {
        let r = relative_likelihood(a, a + gap);
        prop_assert!(r > 0.0 && r < 1.0);
        prop_assert!((r + relative_likelihood(a + gap, a) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn score_is_a_probability(seed in any::<u64>(), sigma in 0.01..3.0f64, n in 3usize..300) {
        let data = sample(&DistributionSpec::lognormal(0.0, sigma).unwrap(), n, seed).unwrap();
        let r = r_score(&data).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.r));
        prop_assert!(r.ll_lognormal.is_finite() && r.ll_normal.is_finite());
    }
}
