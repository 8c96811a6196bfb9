use hypersurf::catalog::{ball_sphere, euclidean_sphere, hyperboloid_sphere, Catalog};
use hypersurf::chart::ChartPoint;
use hypersurf::deform::{
    curvature_flow_value, normal_flow, round_sphere, search_tau, track, DeformationPath, TrackOptions,
};
use hypersurf::gauss::{gauss_value, GaussMapKind};
use hypersurf::immersion::shape_data;
use hypersurf::interval::CurvatureInterval;
use hypersurf::mesh::{random_sphere_points, SphereMesh};
use hypersurf::model::{ModelKind, SpaceFormModel};

fn points(n: usize, count: usize, seed: u64) -> Vec<ChartPoint> {
    random_sphere_points(n, count, seed).iter().map(ChartPoint::from_sphere).collect()
}

#[test]
fn retracting_the_inclusion_onto_its_own_curvature_is_trivial() {
    let f = Catalog::shipped().make("inclusion-2").unwrap();
    let path = DeformationPath::euclidean_retraction(f.clone(), -1.0, CurvatureInterval::below(0.0)).unwrap();
    let r = track(&path, &SphereMesh::icosphere(2), &TrackOptions::default());
    assert!(r.pass);
    let (lo, hi) = r.lambda_range();
    assert!((lo + 1.0).abs() < 1e-9 && (hi + 1.0).abs() < 1e-9);
    for p in points(2, 20, 1) {
        let a = path.stage(0.6).unwrap().eval(&p).unwrap();
        assert!((a - f.eval(&p).unwrap()).norm() < 1e-12);
    }
}

#[test]
fn halfspace_retraction_of_a_bumpy_sphere() {
    let f = Catalog::shipped().make("bumpy-halfspace-2").unwrap();
    let path = DeformationPath::halfspace_retraction(f, -2.0, CurvatureInterval::below(-1.0)).unwrap();
    let opts = TrackOptions {
        steps: 21,
        ..TrackOptions::default()
    };
    let r = track(&path, &SphereMesh::icosphere(3), &opts);
    assert!(r.pass, "{:?}", r.first_failure.map(|i| &r.rows[i]));
    assert_eq!(r.rows.iter().filter(|row| !row.refined).count(), 21);
    assert!(r.max_drift().unwrap() <= 1e-6);
    assert!(r.max_formula_residual().unwrap() <= 1e-5);
    assert!(r.lambda_range().1 < -1.0);
}

/// Harmonic interpolation `1 / ((1 - s) / lambda + s / mu)` at `s = 1/2`,
/// read off the sampled source and compared with the stage's own jets.
#[test]
fn euclidean_retraction_midpoint_is_harmonic() {
    let f = Catalog::shipped().make("ellipsoid-211").unwrap();
    let mu = -1.0;
    let path = DeformationPath::euclidean_retraction(f.clone(), mu, CurvatureInterval::below(0.0)).unwrap();
    let mid = path.stage(0.5).unwrap();
    for p in points(2, 40, 2) {
        let src = shape_data(f.as_ref(), &p).unwrap().lambdas;
        let mut want: Vec<f64> = src.iter().map(|l| 2.0 * l * mu / (l + mu)).collect();
        want.sort_by(f64::total_cmp);
        let got = shape_data(mid.as_ref(), &p).unwrap().lambdas;
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-6, "{got:?} vs {want:?}");
        }
        // The Gauss map does not move.
        let n0 = gauss_value(GaussMapKind::Normal, f.as_ref(), &p).unwrap();
        let n1 = gauss_value(GaussMapKind::Normal, mid.as_ref(), &p).unwrap();
        assert!((n0 - n1).norm() < 1e-7);
    }
}

#[test]
fn normal_flow_leaving_the_regime_fails_at_the_first_step() {
    let cat = Catalog::shipped();
    let e = cat.get("ball-sphere-flipped").unwrap();
    let path = DeformationPath::normal_flow(e.build().unwrap(), 1.0, e.interval).unwrap();
    let r = track(&path, &SphereMesh::icosphere(2), &TrackOptions::default());
    assert!(!r.pass);
    // Curvatures above kappa already break the flow law at s = 0.
    let first = r.first_failure.expect("a failing step");
    assert_eq!(first, 0);
    assert_eq!(r.rows[first].s, 0.0);
    assert!(r.rows[first].error.as_deref().unwrap_or_default().contains("vertex"));
}

/// A geodesic sphere of radius `R` has curvature `-kappa coth(kappa R)`;
/// flowing a distance `r` along its normal gives radius `R + r`.
#[test]
fn normal_flow_of_geodesic_spheres_grows_the_radius() {
    for kappa in [1.0f64, 2.0] {
        for big_r in [0.3f64, 1.0] {
            let mu = -kappa / (kappa * big_r).tanh();
            for f in [ball_sphere(2, mu, kappa).unwrap(), hyperboloid_sphere(2, mu, kappa).unwrap()] {
                for r in [0.25, 1.5] {
                    let want = -kappa / (kappa * (big_r + r)).tanh();
                    assert!((curvature_flow_value(mu, r, kappa).unwrap() - want).abs() < 1e-12);
                    let g = normal_flow(&f, r).unwrap();
                    for p in points(2, 10, 3) {
                        for l in shape_data(g.as_ref(), &p).unwrap().lambdas {
                            assert!((l - want).abs() < 1e-6, "{l} vs {want}");
                        }
                        let v0 = gauss_value(GaussMapKind::Visual, f.as_ref(), &p).unwrap();
                        let v1 = gauss_value(GaussMapKind::Visual, g.as_ref(), &p).unwrap();
                        assert!((v0 - v1).norm() < 1e-8);
                    }
                }
            }
        }
    }
}

#[test]
fn overlap_path_keeps_a_round_sphere_round() {
    let mu = -2.0;
    let f = ball_sphere(2, mu, 1.0).unwrap();
    let path = DeformationPath::overlap(f, mu, 0.75, CurvatureInterval::below(-1.0)).unwrap();
    for s in [0.25, 0.5, 1.0, 1.5, 1.9] {
        let g = path.stage(s).unwrap();
        for p in points(2, 10, 4) {
            let l = shape_data(g.as_ref(), &p).unwrap().lambdas;
            assert!((l[1] - l[0]).abs() < 1e-6 * l[0].abs(), "s={s}: {l:?}");
            assert!(l[1] < -1.0);
        }
    }
    let end = path.stage(2.0).unwrap();
    let sigma = round_sphere(&SpaceFormModel::new(ModelKind::Ball, 3, 1.0).unwrap(), mu).unwrap();
    for p in points(2, 10, 5) {
        let v = gauss_value(GaussMapKind::Visual, path.source.as_ref(), &p).unwrap();
        let target = sigma.eval(&ChartPoint::from_sphere(&v)).unwrap();
        assert!((end.eval(&p).unwrap() - target).norm() < 1e-9);
    }
}

#[test]
fn tau_search_succeeds_on_the_overlap_entry() {
    let cat = Catalog::shipped();
    let e = cat.get("bumpy-ball-overlap").unwrap();
    let opts = TrackOptions {
        steps: 17,
        ..TrackOptions::default()
    };
    let mu = -1.5;
    let found = search_tau(e.build().unwrap(), mu, e.interval, &SphereMesh::icosphere(2), &opts, 6).unwrap();
    let (k, tau) = found.found.expect("some tau works");
    assert!(k >= 1 && tau > 0.5 && tau < 1.0);
    assert!(found.report.pass);
    assert_eq!(found.attempts.last().unwrap(), &(k, tau, true));
}

#[test]
fn constructors_reject_the_wrong_regime() {
    let e = euclidean_sphere(2, -1.0).unwrap();
    assert!(DeformationPath::euclidean_retraction(e.clone(), -1.0, CurvatureInterval::above(0.0)).is_err());
    assert!(DeformationPath::euclidean_retraction(e.clone(), 1.0, CurvatureInterval::below(0.0)).is_err());
    assert!(DeformationPath::normal_flow(e.clone(), 1.0, CurvatureInterval::below(0.0)).is_err());
    assert!(DeformationPath::halfspace_retraction(e, -2.0, CurvatureInterval::below(-1.0)).is_err());
    let b = ball_sphere(2, -2.0, 1.0).unwrap();
    assert!(DeformationPath::overlap(b.clone(), -0.5, 0.75, CurvatureInterval::below(1.0)).is_err());
    assert!(DeformationPath::overlap(b, -2.0, 0.75, CurvatureInterval::below(2.0)).is_err());
}
