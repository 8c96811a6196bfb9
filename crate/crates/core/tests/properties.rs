use hypersurf::chart::{ChartId, ChartPoint};
use hypersurf::deform::{curvature_flow_value, round_sphere};
use hypersurf::export::round_json;
use hypersurf::immersion::shape_data;
use hypersurf::interval::CurvatureInterval;
use hypersurf::model::{ModelKind, SpaceFormModel};
use nalgebra::DVector;
use proptest::prelude::*;

fn unit(v: [f64; 3]) -> Option<DVector<f64>> {
    let v = DVector::from_row_slice(&v);
    let n = v.norm();
    (n > 1e-3).then(|| v / n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_is_additive_in_distance(l in -20.0f64..0.99, r1 in 0.0f64..3.0, r2 in 0.0f64..3.0, kappa in 0.3f64..3.0) {
        let lam = l * kappa;
        let once = curvature_flow_value(lam, r1 + r2, kappa).unwrap();
        let twice = curvature_flow_value(curvature_flow_value(lam, r1, kappa).unwrap(), r2, kappa).unwrap();
        prop_assert!((once - twice).abs() < 1e-9 * once.abs().max(1.0));
        // The flow moves curvatures toward -kappa and never past it.
        prop_assert!(once < kappa);
        prop_assert!((once + kappa).abs() <= (lam + kappa).abs() + 1e-12);
    }

    #[test]
    fn round_spheres_have_the_requested_curvature(
        mu_excess in 0.05f64..4.0,
        kappa in 0.5f64..2.5,
        kind in prop::sample::select(vec![ModelKind::HalfSpace, ModelKind::Ball, ModelKind::Hyperboloid]),
        v in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let Some(q) = unit(v) else { return Ok(()) };
        let mu = -kappa - mu_excess;
        let f = round_sphere(&SpaceFormModel::new(kind, 3, kappa).unwrap(), mu).unwrap();
        let chart = if q[2] < 0.0 { ChartId::North } else { ChartId::South };
        for l in shape_data(f.as_ref(), &ChartPoint::in_chart(&q, chart)).unwrap().lambdas {
            prop_assert!((l - mu).abs() < 1e-6 * mu.abs(), "{kind:?}: {l} vs {mu}");
        }
    }

    #[test]
    fn euclidean_round_spheres(mu in prop::sample::select(vec![-3.0, -0.4, 0.5, 2.0]), v in prop::array::uniform3(-1.0f64..1.0)) {
        let Some(q) = unit(v) else { return Ok(()) };
        let f = round_sphere(&SpaceFormModel::euclidean(3).unwrap(), mu).unwrap();
        for l in shape_data(f.as_ref(), &ChartPoint::from_sphere(&q)).unwrap().lambdas {
            prop_assert!((l - mu).abs() < 1e-9 * mu.abs());
        }
    }

    #[test]
    fn json_rounding_is_idempotent(xs in prop::collection::vec(-1e6f64..1e6, 0..8)) {
        let once = round_json(serde_json::json!({ "x": xs }));
        let twice = round_json(once.clone());
        prop_assert_eq!(once.to_string(), twice.to_string());
        for (a, b) in once["x"].as_array().unwrap().iter().zip(&xs) {
            prop_assert!((a.as_f64().unwrap() - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn harmonic_interpolation_stays_between_the_ends(l in -50.0f64..-1e-3, mu in -50.0f64..-1e-3, s in 0.0f64..=1.0) {
        let h = 1.0 / ((1.0 - s) / l + s / mu);
        prop_assert!(h >= l.min(mu) * (1.0 + 1e-12) && h <= l.max(mu) * (1.0 - 1e-12));
    }

    #[test]
    fn negation_mirrors_membership(lo in -5.0f64..5.0, w in 0.1f64..5.0, v in -12.0f64..12.0) {
        let iv = CurvatureInterval::open(lo, lo + w).unwrap();
        prop_assert_eq!(iv.contains_value(v), iv.negate().contains_value(-v));
        prop_assert_eq!(iv.negate().negate(), iv);
    }
}
