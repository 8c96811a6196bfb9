use std::sync::Arc;

use hypersurf::catalog::Catalog;
use hypersurf::chart::{ChartId, ChartPoint};
use hypersurf::immersion::{
    compose_with_diffeo, gaussian_curvature, shape_data, FnImmersion, SharedImmersion, SphereDiffeo,
};
use hypersurf::mesh::random_sphere_points;
use hypersurf::model::{ModelKind, SpaceFormModel};
use nalgebra::DVector;

fn sphere_points(n: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    random_sphere_points(n, count, seed)
        .into_iter()
        .filter(|q| q[n].abs() < 0.8)
        .collect()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn curvatures_do_not_depend_on_the_chart() {
    let cat = Catalog::shipped();
    for id in ["bumpy-2", "ellipsoid-211", "bumpy-halfspace-2", "bumpy-ball-2", "bumpy-hyperboloid-2", "bumpy-3"] {
        let f = cat.make(id).unwrap();
        for q in sphere_points(f.dim(), 40, 1) {
            let a = shape_data(f.as_ref(), &ChartPoint::in_chart(&q, ChartId::North)).unwrap();
            let b = shape_data(f.as_ref(), &ChartPoint::in_chart(&q, ChartId::South)).unwrap();
            assert!(close(&a.lambdas, &b.lambdas, 1e-6), "{id}: {:?} vs {:?}", a.lambdas, b.lambdas);
            assert!((&a.normal - &b.normal).norm() < 1e-6 * a.normal.norm(), "{id}");
            assert!((&a.value - &b.value).norm() < 1e-12 * a.value.norm().max(1.0));
        }
    }
}

#[test]
fn shape_operator_is_self_adjoint() {
    let cat = Catalog::shipped();
    let numeric: SharedImmersion = Arc::new(FnImmersion::new(
        SpaceFormModel::euclidean(3).unwrap(),
        "numeric ellipsoid",
        |q: &DVector<f64>| DVector::from_vec(vec![2.0 * q[0], q[1] + 0.1 * q[0] * q[2], 0.5 * q[2]]),
    ));
    for f in [cat.make("bumpy-2").unwrap(), cat.make("bumpy-ball-2").unwrap(), numeric] {
        for q in sphere_points(2, 30, 2) {
            let sd = shape_data(f.as_ref(), &ChartPoint::from_sphere(&q)).unwrap();
            assert!(sd.self_adjointness_defect() < 1e-7, "{}: {}", f.label(), sd.self_adjointness_defect());
            let gram = sd.directions.transpose() * &sd.g * &sd.directions;
            assert!((gram - nalgebra::DMatrix::identity(2, 2)).amax() < 1e-9);
        }
    }
}

/// The same map read as a Euclidean immersion gives curvatures `lambda_E`
/// and unit normal `N`; the conformal change of metric predicts
/// `lambda_H = kappa (y lambda_E + N_y)` in the half-space.
#[test]
fn halfspace_curvatures_follow_the_conformal_change_of_metric() {
    let cat = Catalog::shipped();
    for id in ["bumpy-halfspace-2", "graph-halfspace-2", "halfspace-sphere-3"] {
        let f = cat.make(id).unwrap();
        let kappa = f.model().kappa();
        let n = f.dim();
        let g = f.clone();
        let flat: SharedImmersion = Arc::new(FnImmersion::new(
            SpaceFormModel::euclidean(n + 1).unwrap(),
            "euclidean reading",
            move |q: &DVector<f64>| g.eval(&ChartPoint::from_sphere(q)).unwrap(),
        ));
        for q in sphere_points(n, 25, 3) {
            let p = ChartPoint::from_sphere(&q);
            let h = shape_data(f.as_ref(), &p).unwrap();
            let e = shape_data(flat.as_ref(), &p).unwrap();
            let y = e.value[n];
            let mut want: Vec<f64> = e.lambdas.iter().map(|l| kappa * (y * l + e.normal[n])).collect();
            want.sort_by(f64::total_cmp);
            assert!(close(&h.lambdas, &want, 1e-5), "{id}: {:?} vs {want:?}", h.lambdas);
        }
    }
}

/// Converting an immersion to another model and taking the numeric jet
/// leaves the principal curvatures unchanged.
#[test]
fn curvatures_are_model_independent() {
    let cat = Catalog::shipped();
    let f = cat.make("bumpy-halfspace-2").unwrap();
    let src = f.model();
    for kind in [ModelKind::Ball, ModelKind::Hyperboloid] {
        let to = src.with_kind(kind).unwrap();
        let g = f.clone();
        let moved: SharedImmersion = Arc::new(FnImmersion::new(to, "converted", move |q: &DVector<f64>| {
            src.convert(&g.eval(&ChartPoint::from_sphere(q)).unwrap(), &to).unwrap()
        }));
        for q in sphere_points(2, 25, 4) {
            let p = ChartPoint::from_sphere(&q);
            let a = shape_data(f.as_ref(), &p).unwrap().lambdas;
            let b = shape_data(moved.as_ref(), &p).unwrap().lambdas;
            assert!(close(&a, &b, 1e-5), "{kind:?}: {a:?} vs {b:?}");
        }
    }
}

/// `<N, c''> / |c'|^2` along chart lines equals `h(u, u) / g(u, u)`.
#[test]
fn normal_section_curvature_of_the_ellipsoid() {
    let f = Catalog::shipped().make("ellipsoid-211").unwrap();
    for q in sphere_points(2, 20, 5) {
        let p = ChartPoint::from_sphere(&q);
        let sd = shape_data(f.as_ref(), &p).unwrap();
        for u in [DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.6, -0.8])] {
            let h = 1e-3;
            let c = |t: f64| f.eval(&ChartPoint::new(p.chart, &p.x + &u * t)).unwrap();
            let d1 = (c(h) - c(-h)) / (2.0 * h);
            let d2 = (c(h) - c(0.0) * 2.0 + c(-h)) / (h * h);
            let kn = sd.normal.dot(&d2) / d1.norm_squared();
            let want = (u.transpose() * &sd.h * &u)[0] / (u.transpose() * &sd.g * &u)[0];
            assert!((kn - want).abs() < 1e-4, "{kn} vs {want}");
            assert!(kn >= sd.min_lambda() - 1e-4 && kn <= sd.max_lambda() + 1e-4);
        }
    }
}

#[test]
fn ellipsoid_closed_form_curvatures() {
    let f = Catalog::shipped().make("ellipsoid-211").unwrap();
    let at = |v: [f64; 3]| shape_data(f.as_ref(), &ChartPoint::from_sphere(&DVector::from_row_slice(&v))).unwrap();
    for tip in [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]] {
        assert!(close(&at(tip).lambdas, &[-2.0, -2.0], 1e-9));
    }
    for side in [[0.0, 1.0, 0.0], [0.0, 0.0, -1.0]] {
        assert!(close(&at(side).lambdas, &[-1.0, -0.25], 1e-9));
    }
    // K = 1 / (a b c)^2 / (x^2/a^4 + y^2/b^4 + z^2/c^4)^2
    for q in sphere_points(2, 30, 6) {
        let sd = at([q[0], q[1], q[2]]);
        let x = &sd.value;
        let s = x[0] * x[0] / 16.0 + x[1] * x[1] + x[2] * x[2];
        let want = 1.0 / (4.0 * s * s);
        assert!((gaussian_curvature(&sd) - want).abs() < 1e-9 * want);
    }
}

#[test]
fn composition_law_for_normals_and_curvatures() {
    let cat = Catalog::shipped();
    for id in ["bumpy-2", "bumpy-ball-2", "bumpy-3"] {
        let f = cat.make(id).unwrap();
        let n = f.dim();
        for g in [SphereDiffeo::rotation(n, 0, 1, 0.7), SphereDiffeo::reflection(n), SphereDiffeo::antipodal(n)] {
            let c = compose_with_diffeo(f.clone(), g.clone()).unwrap();
            let sign = g.degree() as f64;
            for q in sphere_points(n, 15, 7) {
                let p = ChartPoint::from_sphere(&q);
                let a = shape_data(c.immersion.as_ref(), &p).unwrap();
                let b = shape_data(f.as_ref(), &ChartPoint::from_sphere(&g.apply(&q))).unwrap();
                assert!((&a.normal - &b.normal * sign).norm() < 1e-7 * b.normal.norm(), "{id} o {}", g.label());
                assert!(close(&a.lambdas, &c.predicted_lambdas(&p).unwrap(), 1e-7));
            }
        }
    }
}
