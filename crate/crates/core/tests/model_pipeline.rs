use proptest::prelude::*;
use supjcir_core::estimation::{fit_series, TimeSeries};
use supjcir_core::io::{parse_series_csv, write_series_csv, ModelFile};
use supjcir_core::orlicz::{normalized_disutility, stationary_log_disutility};
use supjcir_core::{Bound, JumpMeasure, MixingMeasure, OrliczFunction, RiskQuery, SupJcirModel};

fn models() -> Vec<SupJcirModel> {
    vec![
        SupJcirModel::new(
            0.8,
            0.6,
            JumpMeasure::exponential(1.5, 4.0).unwrap(),
            MixingMeasure::gamma(2.5, 0.3).unwrap(),
        )
        .unwrap(),
        SupJcirModel::new(
            0.8,
            0.6,
            JumpMeasure::tempered_stable(0.5, 4.0, 0.4).unwrap(),
            MixingMeasure::gamma(1.8, 0.2).unwrap(),
        )
        .unwrap(),
        SupJcirModel::new(
            1.2,
            0.4,
            JumpMeasure::None,
            MixingMeasure::from_pairs(&[(0.25, 0.1), (0.5, 1.0), (0.25, 5.0)]).unwrap(),
        )
        .unwrap(),
    ]
}

#[test]
fn model_file_round_trip_preserves_risk_reports() {
    for model in models() {
        let text = ModelFile::new(model.clone()).to_text();
        let back = ModelFile::parse(&text).unwrap();
        assert_eq!(back.to_text(), text);
        let q =
            RiskQuery::new(0.3, OrliczFunction::Identity, 0.75, 0.5, 0.5, Bound::Upper).unwrap();
        assert_eq!(
            normalized_disutility(&model, &q).unwrap(),
            normalized_disutility(&back.model, &q).unwrap()
        );
    }
}

#[test]
fn lifted_models_approach_the_gamma_bound() {
    let model = models().remove(0);
    let q = RiskQuery::new(0.3, OrliczFunction::Identity, 0.75, 0.5, 2.0, Bound::Upper).unwrap();
    let exact = stationary_log_disutility(&model, &q).unwrap();
    let errs: Vec<f64> = [10, 100, 1000]
        .iter()
        .map(|&n| {
            (stationary_log_disutility(&model.discretized(n).unwrap(), &q).unwrap() - exact).abs()
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] < 0.01 * exact.abs());
}

#[test]
fn csv_round_trip_then_fit() {
    // superposed AR(1) components at several speeds, as in a discrete lift
    let speeds = [0.5, 0.9, 0.99];
    let mut state = [0.0f64; 3];
    let mut seed = 7u64;
    let values: Vec<f64> = (0..4000)
        .map(|_| {
            let mut total = 0.0;
            for (x, phi) in state.iter_mut().zip(speeds) {
                seed = seed
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let u = (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                *x = phi * *x + (1.0 - phi * phi).sqrt() * u;
                total += *x;
            }
            3.0 + 0.3 * total
        })
        .collect();
    let series = TimeSeries::regular(values, 7.0, "mix").unwrap();
    let parsed = parse_series_csv(&write_series_csv(&series), "mix").unwrap();
    assert_eq!(parsed.values, series.values);
    let (stats, acf, fit) = fit_series(&parsed, 0.95, false, 20).unwrap();
    assert!(acf.theta > 0.0 && acf.omega > 1.0);
    let mo = fit.model.stationary_moments().unwrap();
    assert!(((mo.mean - stats.mean) / stats.mean).abs() < 1e-10);
    assert!(((mo.variance - stats.variance) / stats.variance).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normalized_ratio_respects_its_bound(
        ld in 0.0f64..5.0,
        lj in 0.0f64..5.0,
        p_frac in 0.05f64..0.5,
        upper in any::<bool>(),
    ) {
        let model = models().remove(0);
        let p = p_frac * model.p_max() * 0.25;
        let (q, bound) = if upper { (0.75, Bound::Upper) } else { (1.25, Bound::Lower) };
        let query = RiskQuery::new(p, OrliczFunction::Identity, q, ld, lj, bound).unwrap();
        let r = normalized_disutility(&model, &query).unwrap();
        match bound {
            Bound::Upper => prop_assert!(r.normalized_u >= 1.0),
            Bound::Lower => prop_assert!(r.normalized_u <= 1.0 && r.normalized_u > 0.0),
        }
    }
}
