//! The Gauss map and its modified versions as maps `S^n -> S^n`, their
//! Jacobians, degrees and orientation behaviour.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::ChartPoint;
use crate::error::{GeometryError, Result};
use crate::immersion::{curvature_samples, jet_at, shape_data, unit_normal, CurvatureRange, Immersion};
use crate::interval::{CurvatureInterval, Side};
use crate::linalg::det_with_column;
use crate::mesh::{sphere_volume, SphereMesh};
use crate::model::{BoundaryPoint, ModelKind, SpaceFormModel};

/// Relative chart step for differentiating Gauss maps.
pub const GAUSS_FD_STEP: f64 = 1e-3;
/// `|det J|` below this is not certified as a local diffeomorphism.
pub const DET_TOL: f64 = 1e-8;
/// Largest accepted distance of a quadrature sum from an integer.
pub const DEGREE_RESIDUAL_MAX: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaussMapKind {
    /// Euclidean unit normal.
    Normal,
    /// Half-space normal rescaled to Euclidean length one.
    Flat,
    /// Ideal endpoint of the normal geodesic ray.
    Visual,
    /// Ideal endpoint of the ray along the negative normal.
    Check,
}

impl GaussMapKind {
    pub fn name(self) -> &'static str {
        match self {
            GaussMapKind::Normal => "normal",
            GaussMapKind::Flat => "flat",
            GaussMapKind::Visual => "visual",
            GaussMapKind::Check => "check",
        }
    }

    fn accepts(self, kind: ModelKind) -> bool {
        match self {
            GaussMapKind::Normal => kind == ModelKind::Euclidean,
            GaussMapKind::Flat => kind == ModelKind::HalfSpace,
            GaussMapKind::Visual | GaussMapKind::Check => kind != ModelKind::Euclidean,
        }
    }
}

impl fmt::Display for GaussMapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn require(kind: GaussMapKind, f: &dyn Immersion) -> Result<()> {
    if kind.accepts(f.model().kind()) {
        Ok(())
    } else {
        Err(GeometryError::ModelMismatch(format!(
            "{kind} Gauss map is not defined for {}",
            f.model()
        )))
    }
}

/// `nu / (kappa f_{n+1})`, the half-space normal rescaled to unit Euclidean length.
pub fn flat_gauss(f: &dyn Immersion, p: &ChartPoint) -> Result<DVector<f64>> {
    require(GaussMapKind::Flat, f)?;
    let j = jet_at(f, p)?;
    let nu = unit_normal(&f.model(), &j)?;
    let last = j.value[j.value.len() - 1];
    Ok(nu / (f.model().kappa() * last))
}

fn fd_direction<F>(g: F, p: &ChartPoint, u: &DVector<f64>, step: f64) -> Result<DVector<f64>>
where
    F: Fn(&ChartPoint) -> Result<DVector<f64>>,
{
    let h = step * p.x.amax().max(1.0) / u.norm().max(1e-300);
    let at = |t: f64| g(&ChartPoint::new(p.chart, &p.x + u * t));
    let (p1, m1, p2, m2) = (at(h)?, at(-h)?, at(2.0 * h)?, at(-2.0 * h)?);
    Ok((m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h))
}

/// `|d nubar(u) - ((nubar_{n+1} - lambda/kappa) / f_{n+1}) df(u)|` for a
/// principal pair `(u, lambda)` in chart coordinates, with `d nubar` by
/// central differences.
pub fn flat_gauss_derivative_residual(
    f: &dyn Immersion,
    p: &ChartPoint,
    u: &DVector<f64>,
    lambda: f64,
) -> Result<f64> {
    require(GaussMapKind::Flat, f)?;
    let j = jet_at(f, p)?;
    let nubar = flat_gauss(f, p)?;
    let m = j.value.len();
    let kappa = f.model().kappa();
    let factor = (nubar[m - 1] - lambda / kappa) / j.value[m - 1];
    let dnubar = fd_direction(|q| flat_gauss(f, q), p, u, GAUSS_FD_STEP)?;
    Ok((dnubar - (&j.d1 * u) * factor).norm())
}

/// Ideal endpoint of the geodesic ray leaving `f(p)` along `nu_f(p)`.
pub fn visual_gauss(f: &dyn Immersion, p: &ChartPoint) -> Result<BoundaryPoint> {
    require(GaussMapKind::Visual, f)?;
    let j = jet_at(f, p)?;
    let nu = unit_normal(&f.model(), &j)?;
    Ok(f.model().ideal_endpoint(&j.value, &nu)?.point)
}

/// Ideal endpoint of the geodesic ray leaving `f(p)` along `-nu_f(p)`.
pub fn check_gauss(f: &dyn Immersion, p: &ChartPoint) -> Result<BoundaryPoint> {
    require(GaussMapKind::Check, f)?;
    let j = jet_at(f, p)?;
    let nu = unit_normal(&f.model(), &j)?;
    Ok(f.model().ideal_endpoint(&j.value, &(-nu))?.point)
}

/// The chosen Gauss map at `p` as a unit vector of `R^{n+1}`.
pub fn gauss_value(kind: GaussMapKind, f: &dyn Immersion, p: &ChartPoint) -> Result<DVector<f64>> {
    require(kind, f)?;
    let j = jet_at(f, p)?;
    let nu = unit_normal(&f.model(), &j)?;
    gauss_from_normal(kind, &f.model(), &j.value, &nu)
}

/// Gauss map value from a point and its unit normal.
pub fn gauss_from_normal(
    kind: GaussMapKind,
    model: &SpaceFormModel,
    value: &DVector<f64>,
    nu: &DVector<f64>,
) -> Result<DVector<f64>> {
    if !kind.accepts(model.kind()) {
        return Err(GeometryError::ModelMismatch(format!(
            "{kind} Gauss map is not defined for {model}"
        )));
    }
    match kind {
        GaussMapKind::Normal => Ok(nu.clone()),
        GaussMapKind::Flat => Ok(nu / (model.kappa() * value[value.len() - 1])),
        GaussMapKind::Visual => Ok(model.ideal_endpoint(value, nu)?.point.into_inner()),
        GaussMapKind::Check => Ok(model.ideal_endpoint(value, &(-nu))?.point.into_inner()),
    }
}

#[derive(Debug, Clone)]
pub struct JacobianSample {
    /// Matrix of the differential in positive orthonormal frames of the
    /// round sphere at the source and target points.
    pub matrix: DMatrix<f64>,
    pub det: f64,
    pub certified: bool,
}

/// Positive orthonormal frame of `T_q S^n` spanned by the columns of `a`.
fn tangent_frame(a: &DMatrix<f64>, q: &DVector<f64>) -> DMatrix<f64> {
    let mut u = a.clone().qr().q();
    if det_with_column(&u, q) < 0.0 {
        let last = u.ncols() - 1;
        let col = -u.column(last);
        u.set_column(last, &col);
    }
    u
}

/// Positive orthonormal frame of `T_y S^n`.
fn normal_complement_frame(y: &DVector<f64>) -> DMatrix<f64> {
    let m = y.len();
    let drop = y.iamax();
    let mut basis = DMatrix::zeros(m, m - 1);
    let mut col = 0;
    for k in 0..m {
        if k == drop {
            continue;
        }
        let mut e = DVector::zeros(m);
        e[k] = 1.0;
        basis.set_column(col, &(&e - y * y[k]));
        col += 1;
    }
    tangent_frame(&basis, y)
}

/// Differential of a sphere map `g` at `q` in positive orthonormal frames.
pub fn sphere_map_jacobian<F>(g: F, q: &DVector<f64>) -> Result<JacobianSample>
where
    F: Fn(&ChartPoint) -> Result<DVector<f64>>,
{
    let p = ChartPoint::from_sphere(q);
    let n = p.dim();
    let y = g(&p)?;
    let mut a = DMatrix::zeros(n + 1, n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        a.set_column(i, &fd_direction(&g, &p, &e, GAUSS_FD_STEP)?);
    }
    let dphi = p.sphere_jet().d1;
    let src = tangent_frame(&dphi, q);
    let dst = normal_complement_frame(&y);
    let c = src.transpose() * &dphi;
    let c_inv = c
        .try_inverse()
        .ok_or_else(|| GeometryError::NotInvertible("degenerate chart frame".into()))?;
    let matrix = dst.transpose() * a * c_inv;
    let det = matrix.determinant();
    Ok(JacobianSample {
        matrix,
        det,
        certified: det.abs() > DET_TOL,
    })
}

/// A Gauss map sampled on a mesh.
#[derive(Debug, Clone)]
pub struct SphereMap {
    pub kind: GaussMapKind,
    pub label: String,
    pub mesh_level: u32,
    pub values: Vec<DVector<f64>>,
    pub jacobians: Option<Vec<JacobianSample>>,
}

impl SphereMap {
    pub fn sample(kind: GaussMapKind, f: &dyn Immersion, mesh: &SphereMesh) -> Result<Self> {
        require(kind, f)?;
        let values = mesh
            .vertices()
            .par_iter()
            .map(|q| gauss_value(kind, f, &ChartPoint::from_sphere(q)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SphereMap {
            kind,
            label: format!("{} of {}", kind, f.label()),
            mesh_level: mesh.level(),
            values,
            jacobians: None,
        })
    }

    /// Sample values together with the pointwise Jacobians.
    pub fn with_jacobians(kind: GaussMapKind, f: &dyn Immersion, mesh: &SphereMesh) -> Result<Self> {
        let mut map = SphereMap::sample(kind, f, mesh)?;
        map.jacobians = Some(jacobian_field(kind, f, mesh)?);
        Ok(map)
    }

    pub fn max_unit_defect(&self) -> f64 {
        self.values
            .iter()
            .map(|v| (v.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest and largest sampled `det J`.
    pub fn det_range(&self) -> Option<(f64, f64)> {
        self.jacobians.as_ref().map(|js| {
            js.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), j| {
                (lo.min(j.det), hi.max(j.det))
            })
        })
    }
}

pub fn jacobian_field(kind: GaussMapKind, f: &dyn Immersion, mesh: &SphereMesh) -> Result<Vec<JacobianSample>> {
    require(kind, f)?;
    mesh.vertices()
        .par_iter()
        .map(|q| sphere_map_jacobian(|p| gauss_value(kind, f, p), q))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub map: String,
    pub mesh_level: u32,
    pub raw: f64,
    pub rounded: i64,
    pub residual: f64,
}

/// `(1 / vol S^n) sum_v w_v det J_v`, rounded.
pub fn degree(map: &SphereMap, mesh: &SphereMesh) -> Result<DegreeReport> {
    let js = map
        .jacobians
        .as_ref()
        .ok_or_else(|| GeometryError::Other("sphere map was sampled without Jacobians".into()))?;
    if js.len() != mesh.len() {
        return Err(GeometryError::Dimension {
            expected: mesh.len(),
            got: js.len(),
        });
    }
    let terms: Vec<f64> = js.iter().zip(mesh.weights()).map(|(j, w)| w * j.det).collect();
    let raw = terms.iter().sum::<f64>() / sphere_volume(mesh.dim());
    let rounded = raw.round();
    let residual = (raw - rounded).abs();
    if !(residual < DEGREE_RESIDUAL_MAX) {
        return Err(GeometryError::UnresolvedDegree { raw, residual });
    }
    Ok(DegreeReport {
        map: map.label.clone(),
        mesh_level: mesh.level(),
        raw,
        rounded: rounded as i64,
        residual,
    })
}

/// Sample the Jacobians of a Gauss map and compute its degree.
pub fn gauss_degree(kind: GaussMapKind, f: &dyn Immersion, mesh: &SphereMesh) -> Result<DegreeReport> {
    let map = SphereMap::with_jacobians(kind, f, mesh)?;
    degree(&map, mesh)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Preserving,
    Reversing,
}

impl Orientation {
    pub fn of_sign(s: f64) -> Orientation {
        if s > 0.0 {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Preserving => "preserving",
            Orientation::Reversing => "reversing",
        })
    }
}

/// The Gauss map that is a diffeomorphism for curvatures in `interval` and
/// its predicted orientation behaviour, for hypersurfaces of dimension `n`.
pub fn predicted_orientation(
    kind: ModelKind,
    kappa: f64,
    n: usize,
    interval: &CurvatureInterval,
) -> Result<(GaussMapKind, Orientation)> {
    let odd = n % 2 == 1;
    let side = if kind == ModelKind::Euclidean {
        if interval.lies_below(0.0) {
            Side::Below
        } else if interval.lies_above(0.0) {
            Side::Above
        } else {
            return Err(GeometryError::Regime(format!("{interval} contains 0")));
        }
    } else if interval.lies_below(-kappa) {
        Side::Below
    } else if interval.lies_above(kappa) {
        Side::Above
    } else {
        return Err(GeometryError::Regime(format!(
            "{interval} meets [-{kappa}, {kappa}]"
        )));
    };
    let flip_if_odd = if odd { Orientation::Reversing } else { Orientation::Preserving };
    Ok(match (kind, side) {
        (ModelKind::Euclidean, Side::Below) => (GaussMapKind::Normal, Orientation::Preserving),
        (ModelKind::Euclidean, Side::Above) => (GaussMapKind::Normal, flip_if_odd),
        (ModelKind::HalfSpace, Side::Below) => (GaussMapKind::Flat, Orientation::Preserving),
        (ModelKind::HalfSpace, Side::Above) => (GaussMapKind::Flat, flip_if_odd),
        (_, Side::Below) => (GaussMapKind::Visual, Orientation::Preserving),
        (_, Side::Above) => (GaussMapKind::Check, Orientation::Reversing),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationReport {
    pub map: GaussMapKind,
    pub predicted: Orientation,
    /// `None` when no mesh was supplied.
    pub observed: Option<Orientation>,
    pub det_min: Option<f64>,
    pub det_max: Option<f64>,
    pub uncertified: usize,
}

/// Predicted orientation class of the designated Gauss map, checked against
/// the sampled Jacobian signs when `mesh` is given.
pub fn orientation_class(
    f: &dyn Immersion,
    interval: &CurvatureInterval,
    mesh: Option<&SphereMesh>,
) -> Result<OrientationReport> {
    let model = f.model();
    let (map, predicted) = predicted_orientation(model.kind(), model.kappa(), f.dim(), interval)?;
    let Some(mesh) = mesh else {
        return Ok(OrientationReport {
            map,
            predicted,
            observed: None,
            det_min: None,
            det_max: None,
            uncertified: 0,
        });
    };
    require_in_interval(f, mesh, interval)?;
    let js = jacobian_field(map, f, mesh)?;
    let (lo, hi) = js
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), j| (lo.min(j.det), hi.max(j.det)));
    let uncertified = js.iter().filter(|j| !j.certified).count();
    let observed = if uncertified == 0 && lo > 0.0 {
        Orientation::Preserving
    } else if uncertified == 0 && hi < 0.0 {
        Orientation::Reversing
    } else {
        return Err(GeometryError::OrientationMismatch {
            predicted: predicted.to_string(),
            observed: format!("mixed signs (det in [{lo:.3e}, {hi:.3e}], {uncertified} uncertified)"),
        });
    };
    if observed != predicted {
        return Err(GeometryError::OrientationMismatch {
            predicted: predicted.to_string(),
            observed: observed.to_string(),
        });
    }
    Ok(OrientationReport {
        map,
        predicted,
        observed: Some(observed),
        det_min: Some(lo),
        det_max: Some(hi),
        uncertified,
    })
}

/// Error unless every sampled principal curvature lies in `interval`.
pub fn require_in_interval(f: &dyn Immersion, mesh: &SphereMesh, interval: &CurvatureInterval) -> Result<CurvatureRange> {
    let samples = curvature_samples(f, mesh)?;
    for s in &samples {
        for &l in &s.lambdas {
            let m = interval.membership(l);
            if !m.inside {
                return Err(GeometryError::IntervalViolation {
                    at: s.at.clone(),
                    lambda: l,
                    interval: interval.to_string(),
                    margin: m.margin,
                });
            }
        }
    }
    Ok(CurvatureRange::from_samples(&samples, Some(interval)))
}

/// Result of testing that a curvature field with `|lambda| > kappa` stays
/// on one side of `[-kappa, kappa]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideCheck {
    pub side: Side,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Distance of the sampled range from `[-kappa, kappa]`.
    pub gap: f64,
}

/// Passes iff all sampled principal curvatures are `> kappa` or all are
/// `< -kappa`; anything else, including curvatures inside `[-kappa, kappa]`,
/// is a regime error.
pub fn single_side_check(f: &dyn Immersion, mesh: &SphereMesh, kappa: f64) -> Result<SideCheck> {
    let samples = curvature_samples(f, mesh)?;
    let r = CurvatureRange::from_samples(&samples, None);
    if r.max < -kappa {
        Ok(SideCheck {
            side: Side::Below,
            lambda_min: r.min,
            lambda_max: r.max,
            gap: -kappa - r.max,
        })
    } else if r.min > kappa {
        Ok(SideCheck {
            side: Side::Above,
            lambda_min: r.min,
            lambda_max: r.max,
            gap: r.min - kappa,
        })
    } else {
        Err(GeometryError::Regime(format!(
            "sampled curvatures [{:.6}, {:.6}] are not on one side of [-{kappa}, {kappa}]",
            r.min, r.max
        )))
    }
}

/// Largest sampled value of the derivative-identity residual over the
/// principal pairs at the given points.
pub fn max_flat_derivative_residual(f: &dyn Immersion, points: &[ChartPoint]) -> Result<f64> {
    let res = points
        .par_iter()
        .map(|p| {
            let sd = shape_data(f, p)?;
            let mut worst: f64 = 0.0;
            for (k, &l) in sd.lambdas.iter().enumerate() {
                let u = sd.directions.column(k).into_owned();
                worst = worst.max(flat_gauss_derivative_residual(f, p, &u, l)?);
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(res.into_iter().fold(0.0, f64::max))
}
