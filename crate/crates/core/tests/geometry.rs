use hypersurf::model::{ModelKind, SpaceFormModel};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn halfspace_point(rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_vec(vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.3..3.0)])
}

fn ball_point(rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let p = DVector::from_fn(3, |_, _| rng.gen_range(-0.9..0.9));
        if p.norm() < 0.9 {
            return p;
        }
    }
}

fn vector(rng: &mut ChaCha8Rng, scale: f64) -> DVector<f64> {
    DVector::from_fn(3, |_, _| rng.gen_range(-scale..scale))
}

/// d_k g_ij = g_lj G^l_ki + g_il G^l_kj, with d_k g by central differences.
#[test]
fn connection_is_metric_compatible() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (kind, kappa) in [(ModelKind::HalfSpace, 1.0), (ModelKind::HalfSpace, 0.5), (ModelKind::Ball, 1.5)] {
        let model = SpaceFormModel::new(kind, 3, kappa).unwrap();
        for _ in 0..100 {
            let p = if kind == ModelKind::HalfSpace { halfspace_point(&mut rng) } else { ball_point(&mut rng) * 0.9 };
            let g = model.metric_tensor(&p).unwrap();
            let gamma = model.christoffel(&p).unwrap();
            let scale = g.amax();
            for k in 0..3 {
                let h = 1e-5;
                let mut a = p.clone();
                a[k] += h;
                let mut b = p.clone();
                b[k] -= h;
                let dg = (model.metric_tensor(&a).unwrap() - model.metric_tensor(&b).unwrap()) / (2.0 * h);
                for i in 0..3 {
                    for j in 0..3 {
                        let rhs: f64 = (0..3)
                            .map(|l| g[(l, j)] * gamma.get(l, k, i) + g[(i, l)] * gamma.get(l, k, j))
                            .sum();
                        let err = (dg[(i, j)] - rhs).abs() / scale;
                        assert!(err < 1e-6, "{kind:?} at {p}: {err}");
                    }
                }
            }
        }
    }
}

/// Half-space distance `acosh(1 + |p - q|^2 / (2 p_n q_n)) / kappa`.
fn halfspace_distance(p: &DVector<f64>, q: &DVector<f64>, kappa: f64) -> f64 {
    (1.0 + (p - q).norm_squared() / (2.0 * p[2] * q[2])).acosh() / kappa
}

#[test]
fn conversions_are_isometries() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kappa in [1.0, 2.0] {
        let h = SpaceFormModel::half_space(3, kappa).unwrap();
        let b = h.with_kind(ModelKind::Ball).unwrap();
        let x = h.with_kind(ModelKind::Hyperboloid).unwrap();
        for _ in 0..100 {
            let (p, q) = (halfspace_point(&mut rng), halfspace_point(&mut rng));
            let want = halfspace_distance(&p, &q, kappa);
            assert!((h.distance(&p, &q).unwrap() - want).abs() < 1e-10 * want.max(1.0));
            for to in [&b, &x] {
                let (pp, qq) = (h.convert(&p, to).unwrap(), h.convert(&q, to).unwrap());
                let d = to.distance(&pp, &qq).unwrap();
                assert!((d - want).abs() < 1e-9 * want.max(1.0), "{to}: {d} vs {want}");
                let back = to.convert(&pp, &h).unwrap();
                assert!((back - &p).norm() < 1e-10 * p.norm().max(1.0));
            }
        }
    }
}

#[test]
fn conversion_preserves_tangent_lengths() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = SpaceFormModel::half_space(3, 1.0).unwrap();
    let x = h.with_kind(ModelKind::Hyperboloid).unwrap();
    let b = h.with_kind(ModelKind::Ball).unwrap();
    for _ in 0..50 {
        let p = halfspace_point(&mut rng);
        let v = vector(&mut rng, 1.0);
        for to in [&x, &b] {
            let (q, w) = h.convert_tangent(&p, &v, to).unwrap();
            assert!((to.norm(&q, &w) - h.norm(&p, &v)).abs() < 1e-10 * h.norm(&p, &v));
        }
    }
}

/// Classical RK4 on `x'' = -Gamma(x', x')` for the conformal metric
/// `e^{2 phi} I`, `phi = -log(kappa y)`.
fn rk4_geodesic(p: &DVector<f64>, v: &DVector<f64>, steps: usize) -> DVector<f64> {
    let accel = |x: &DVector<f64>, u: &DVector<f64>| -> DVector<f64> {
        let y = x[2];
        let dphi = DVector::from_vec(vec![0.0, 0.0, -1.0 / y]);
        let ud = u.dot(&dphi);
        // Gamma^k(u, u) = 2 u_k <u, dphi> - |u|^2 dphi_k
        -(u * (2.0 * ud) - &dphi * u.norm_squared())
    };
    let h = 1.0 / steps as f64;
    let (mut x, mut u) = (p.clone(), v.clone());
    for _ in 0..steps {
        let k1x = u.clone();
        let k1u = accel(&x, &u);
        let k2x = &u + &k1u * (h / 2.0);
        let k2u = accel(&(&x + &k1x * (h / 2.0)), &k2x);
        let k3x = &u + &k2u * (h / 2.0);
        let k3u = accel(&(&x + &k2x * (h / 2.0)), &k3x);
        let k4x = &u + &k3u * h;
        let k4u = accel(&(&x + &k3x * h), &k4x);
        x += (k1x + &k2x * 2.0 + &k3x * 2.0 + &k4x) * (h / 6.0);
        u += (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0);
    }
    x
}

#[test]
fn exponential_map_matches_integrated_geodesics() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for kappa in [1.0, 3.0] {
        let h = SpaceFormModel::half_space(3, kappa).unwrap();
        for _ in 0..20 {
            let p = halfspace_point(&mut rng);
            let v = vector(&mut rng, 1.5);
            let want = rk4_geodesic(&p, &v, 4000);
            let got = h.exp_map(&p, &v).unwrap();
            assert!((got - &want).norm() < 1e-8 * want.norm(), "kappa {kappa}");
            assert!((h.distance(&p, &want).unwrap() - h.norm(&p, &v)).abs() < 1e-8);
        }
    }
}

fn geodesic_velocity(m: &SpaceFormModel, p: &DVector<f64>, v: &DVector<f64>, t: f64) -> DVector<f64> {
    let h = 1e-5;
    (m.exp_map(p, &(v * (t + h))).unwrap() - m.exp_map(p, &(v * (t - h))).unwrap()) / (2.0 * h)
}

#[test]
fn exponential_map_composes_along_geodesics() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in [ModelKind::HalfSpace, ModelKind::Ball, ModelKind::Hyperboloid] {
        let h = SpaceFormModel::half_space(3, 1.0).unwrap();
        let m = h.with_kind(kind).unwrap();
        for _ in 0..20 {
            let (p, v) = h.convert_tangent(&halfspace_point(&mut rng), &vector(&mut rng, 1.0), &m).unwrap();
            let (s, t) = (0.4, 0.7);
            let mid = m.exp_map(&p, &(&v * s)).unwrap();
            let w = geodesic_velocity(&m, &p, &v, s);
            let a = m.exp_map(&mid, &(w * t)).unwrap();
            let b = m.exp_map(&p, &(&v * (s + t))).unwrap();
            assert!((a - &b).norm() < 1e-7 * b.norm().max(1.0), "{kind:?}");
        }
    }
}

#[test]
fn ideal_endpoints_are_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = SpaceFormModel::half_space(3, 1.0).unwrap();
    let ball = h.with_kind(ModelKind::Ball).unwrap();
    let hyp = h.with_kind(ModelKind::Hyperboloid).unwrap();
    for _ in 0..50 {
        let p = halfspace_point(&mut rng);
        let u = vector(&mut rng, 1.0);
        let e = h.ideal_endpoint(&p, &u).unwrap().point;
        // along the geodesic
        let q = h.exp_map(&p, &(&u * 0.8)).unwrap();
        let e2 = h.ideal_endpoint(&q, &geodesic_velocity(&h, &p, &u, 0.8)).unwrap().point;
        assert!(e.angle_to(&e2) < 1e-7);
        // across models, and under rescaling of u
        for to in [&ball, &hyp] {
            let (pp, uu) = h.convert_tangent(&p, &(&u * 3.0), to).unwrap();
            assert!(e.angle_to(&to.ideal_endpoint(&pp, &uu).unwrap().point) < 1e-10);
        }
    }
    // Straight up in the half-space ends at the point at infinity; straight
    // down ends at the foot point.
    let p = DVector::from_vec(vec![0.3, -0.2, 1.0]);
    let up = h.ideal_endpoint(&p, &DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap().point;
    assert!(up.to_half_space().is_none());
    let down = h.ideal_endpoint(&p, &DVector::from_vec(vec![0.0, 0.0, -1.0])).unwrap().point;
    let foot = down.to_half_space().unwrap();
    assert!((foot - DVector::from_vec(vec![0.3, -0.2])).norm() < 1e-12);
}
