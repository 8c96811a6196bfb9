//! Ambient space forms: Euclidean space and three charts of hyperbolic space.
//!
//! Points are plain coordinate vectors in the model's chart. The half-space
//! and ball models live in `R^{n+1}`; the hyperboloid lives in Lorentz space
//! `R^{n+1,1}` with the time coordinate stored last, so a hyperboloid point
//! has `ambient_dim + 1` coordinates and satisfies `<x,x>_L = -1/kappa^2`.
//!
//! The scaled hyperbolic space of curvature `-kappa^2` uses the same
//! coordinates in the half-space and ball models as the unit-curvature one;
//! only the metric carries the `1/kappa^2` factor. The hyperboloid is the
//! sheet of radius `1/kappa`.
//!
//! Conversions are fixed as follows: the ball origin corresponds to the
//! half-space point `(0,...,0,1)` and to the hyperboloid apex `(0,...,0,1/kappa)`.
//! The half-space point at infinity corresponds to the ball boundary point
//! `e_{n+1}`. All conversions preserve the orientation induced by `R^{n+1}`;
//! a frame `(v_1..v_{n+1})` tangent to the hyperboloid at `x` is positive iff
//! `det[v_1..v_{n+1}, x] > 0`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

pub type AmbientPoint = DVector<f64>;

/// Relative tolerance for model-domain membership.
pub const DOMAIN_TOL: f64 = 1e-12;
const TANGENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Euclidean,
    HalfSpace,
    Ball,
    Hyperboloid,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Euclidean => "euclidean",
            ModelKind::HalfSpace => "half-space",
            ModelKind::Ball => "ball",
            ModelKind::Hyperboloid => "hyperboloid",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Serialized form of a model, validated on the way in.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub ambient_dim: usize,
    #[serde(default)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct SpaceFormModel {
    kind: ModelKind,
    ambient_dim: usize,
    kappa: f64,
}

impl TryFrom<ModelSpec> for SpaceFormModel {
    type Error = GeometryError;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        let kappa = match (spec.kind, spec.kappa) {
            (ModelKind::Euclidean, None) => 0.0,
            (_, Some(k)) => k,
            (_, None) => 1.0,
        };
        SpaceFormModel::new(spec.kind, spec.ambient_dim, kappa)
    }
}

impl From<SpaceFormModel> for ModelSpec {
    fn from(m: SpaceFormModel) -> Self {
        ModelSpec {
            kind: m.kind,
            ambient_dim: m.ambient_dim,
            kappa: Some(m.kappa),
        }
    }
}

impl fmt::Display for SpaceFormModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}(kappa={})", self.kind, self.ambient_dim, self.kappa)
    }
}

/// Result of [`SpaceFormModel::ideal_endpoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct IdealEndpoint {
    pub point: BoundaryPoint,
    /// Set when the supplied direction was not of unit length and had to be
    /// rescaled.
    pub renormalized: bool,
}

/// A point of the ideal boundary, stored as a unit vector of the ball-model
/// boundary sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint(DVector<f64>);

impl BoundaryPoint {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(GeometryError::ZeroVector);
        }
        Ok(BoundaryPoint(v / norm))
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    /// Ingest a half-space boundary point: `Some(y)` is `(y, 0)` on the
    /// boundary plane, `None` is the point at infinity.
    pub fn from_half_space(y: Option<&DVector<f64>>, ambient_dim: usize) -> Result<Self> {
        match y {
            None => {
                let mut e = DVector::zeros(ambient_dim);
                e[ambient_dim - 1] = 1.0;
                Ok(BoundaryPoint(e))
            }
            Some(y) => {
                if y.len() + 1 != ambient_dim {
                    return Err(GeometryError::Dimension {
                        expected: ambient_dim - 1,
                        got: y.len(),
                    });
                }
                let q = y.clone().push(0.0);
                let (b, _) = half_space_to_ball(&q);
                BoundaryPoint::new(b)
            }
        }
    }

    /// The half-space boundary representation; `None` is the point at infinity.
    pub fn to_half_space(&self) -> Option<DVector<f64>> {
        let m = self.0.len();
        if (self.0[m - 1] - 1.0).abs() < 1e-14 {
            return None;
        }
        let (q, _) = ball_to_half_space(&self.0);
        Some(q.rows(0, m - 1).into_owned())
    }

    /// Angle between two boundary points.
    pub fn angle_to(&self, other: &BoundaryPoint) -> f64 {
        unit_angle(&self.0, &other.0)
    }
}

/// Angle between two unit vectors, accurate also for nearby vectors.
pub fn unit_angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let diff = (a - b).norm();
    let sum = (a + b).norm();
    2.0 * diff.atan2(sum)
}

/// Christoffel symbols `Gamma^k_{ij}` at a point, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Christoffel {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let d = self.dim;
        self.data[(k * d + i) * d + j] = v;
    }

    /// `w^k = Gamma^k_{ij} u^i v^j`.
    pub fn contract(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        DVector::from_fn(d, |k, _| {
            let mut acc = 0.0;
            for i in 0..d {
                for j in 0..d {
                    acc += self.get(k, i, j) * u[i] * v[j];
                }
            }
            acc
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// For a conformal metric `e^{2 phi} delta`:
    /// `Gamma^k_{ij} = delta_ik d_j phi + delta_jk d_i phi - delta_ij d_k phi`.
    fn conformal(grad_phi: &DVector<f64>) -> Self {
        let d = grad_phi.len();
        let mut c = Christoffel::zeros(d);
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut v = 0.0;
                    if i == k {
                        v += grad_phi[j];
                    }
                    if j == k {
                        v += grad_phi[i];
                    }
                    if i == j {
                        v -= grad_phi[k];
                    }
                    c.set(k, i, j, v);
                }
            }
        }
        c
    }
}

/// Lorentz inner product with the time coordinate last.
pub fn lorentz(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let m = u.len();
    let mut acc = -u[m - 1] * v[m - 1];
    for i in 0..m - 1 {
        acc += u[i] * v[i];
    }
    acc
}

fn lorentz_form(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::identity(m, m);
    j[(m - 1, m - 1)] = -1.0;
    j
}

impl SpaceFormModel {
    pub fn new(kind: ModelKind, ambient_dim: usize, kappa: f64) -> Result<Self> {
        if ambient_dim < 3 {
            return Err(GeometryError::InvalidModel(format!(
                "ambient dimension {ambient_dim} < 3"
            )));
        }
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(GeometryError::InvalidModel(format!("kappa = {kappa}")));
        }
        match kind {
            ModelKind::Euclidean if kappa != 0.0 => Err(GeometryError::InvalidModel(
                "euclidean space requires kappa = 0".into(),
            )),
            ModelKind::Euclidean => Ok(SpaceFormModel {
                kind,
                ambient_dim,
                kappa,
            }),
            _ if kappa == 0.0 => Err(GeometryError::InvalidModel(format!(
                "{kind} model requires kappa > 0"
            ))),
            _ => Ok(SpaceFormModel {
                kind,
                ambient_dim,
                kappa,
            }),
        }
    }

    pub fn euclidean(ambient_dim: usize) -> Result<Self> {
        Self::new(ModelKind::Euclidean, ambient_dim, 0.0)
    }

    pub fn half_space(ambient_dim: usize, kappa: f64) -> Result<Self> {
        Self::new(ModelKind::HalfSpace, ambient_dim, kappa)
    }

    pub fn ball(ambient_dim: usize, kappa: f64) -> Result<Self> {
        Self::new(ModelKind::Ball, ambient_dim, kappa)
    }

    pub fn hyperboloid(ambient_dim: usize, kappa: f64) -> Result<Self> {
        Self::new(ModelKind::Hyperboloid, ambient_dim, kappa)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Dimension `n` of the hypersurfaces this model hosts.
    pub fn hypersurface_dim(&self) -> usize {
        self.ambient_dim - 1
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.kind != ModelKind::Euclidean
    }

    /// Number of stored coordinates of a point.
    pub fn coord_len(&self) -> usize {
        match self.kind {
            ModelKind::Hyperboloid => self.ambient_dim + 1,
            _ => self.ambient_dim,
        }
    }

    /// The same kind of model with a different curvature parameter.
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(self.kind, self.ambient_dim, kappa)
    }

    pub fn with_kind(&self, kind: ModelKind) -> Result<Self> {
        Self::new(kind, self.ambient_dim, self.kappa)
    }

    /// The canonical center: origin of ball/Euclidean space, `e_{n+1}` of the
    /// half-space, apex of the hyperboloid.
    pub fn center(&self) -> AmbientPoint {
        let mut p = DVector::zeros(self.coord_len());
        match self.kind {
            ModelKind::Euclidean | ModelKind::Ball => {}
            ModelKind::HalfSpace => p[self.ambient_dim - 1] = 1.0,
            ModelKind::Hyperboloid => p[self.ambient_dim] = 1.0 / self.kappa,
        }
        p
    }

    fn domain_err(&self, detail: String) -> GeometryError {
        GeometryError::Domain {
            model: self.kind.name(),
            detail,
        }
    }

    pub fn check_point(&self, p: &DVector<f64>) -> Result<()> {
        if p.len() != self.coord_len() {
            return Err(GeometryError::Dimension {
                expected: self.coord_len(),
                got: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(self.domain_err("non-finite coordinate".into()));
        }
        match self.kind {
            ModelKind::Euclidean => Ok(()),
            ModelKind::HalfSpace => {
                let h = p[self.ambient_dim - 1];
                if h > DOMAIN_TOL {
                    Ok(())
                } else {
                    Err(self.domain_err(format!("last coordinate {h} <= 0")))
                }
            }
            ModelKind::Ball => {
                let r2 = p.norm_squared();
                if r2 < 1.0 - DOMAIN_TOL {
                    Ok(())
                } else {
                    Err(self.domain_err(format!("|x|^2 = {r2} >= 1")))
                }
            }
            ModelKind::Hyperboloid => {
                let k2 = self.kappa * self.kappa;
                let q = lorentz(p, p);
                let scale = 1.0 + k2 * p.norm_squared();
                if p[self.ambient_dim] <= 0.0 {
                    return Err(self.domain_err("time coordinate <= 0".into()));
                }
                if (k2 * q + 1.0).abs() <= DOMAIN_TOL * scale {
                    Ok(())
                } else {
                    Err(self.domain_err(format!("kappa^2 <x,x>_L = {}", k2 * q)))
                }
            }
        }
    }

    /// Conformal factor `phi` with metric `phi^2 delta` (half-space, ball).
    fn conformal_factor(&self, p: &DVector<f64>) -> f64 {
        match self.kind {
            ModelKind::HalfSpace => 1.0 / (self.kappa * p[self.ambient_dim - 1]),
            ModelKind::Ball => 2.0 / (self.kappa * (1.0 - p.norm_squared())),
            _ => 1.0,
        }
    }

    /// Riemannian metric in model coordinates. For the hyperboloid this is the
    /// ambient Lorentz form, whose restriction to the tangent space is the
    /// induced metric.
    pub fn metric_tensor(&self, p: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        let m = self.coord_len();
        Ok(match self.kind {
            ModelKind::Euclidean => DMatrix::identity(m, m),
            ModelKind::HalfSpace | ModelKind::Ball => {
                let phi = self.conformal_factor(p);
                DMatrix::identity(m, m) * (phi * phi)
            }
            ModelKind::Hyperboloid => lorentz_form(m),
        })
    }

    /// Inner product of two tangent vectors at `p` (no domain check).
    pub fn inner(&self, p: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        match self.kind {
            ModelKind::Euclidean => u.dot(v),
            ModelKind::HalfSpace | ModelKind::Ball => {
                let phi = self.conformal_factor(p);
                phi * phi * u.dot(v)
            }
            ModelKind::Hyperboloid => lorentz(u, v),
        }
    }

    pub fn norm(&self, p: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.inner(p, v, v).max(0.0).sqrt()
    }

    pub fn christoffel(&self, p: &DVector<f64>) -> Result<Christoffel> {
        self.check_point(p)?;
        let m = self.coord_len();
        Ok(match self.kind {
            ModelKind::Euclidean | ModelKind::Hyperboloid => Christoffel::zeros(m),
            ModelKind::HalfSpace => {
                let mut g = DVector::zeros(m);
                g[m - 1] = -1.0 / p[m - 1];
                Christoffel::conformal(&g)
            }
            ModelKind::Ball => {
                let d = 1.0 - p.norm_squared();
                Christoffel::conformal(&(p * (2.0 / d)))
            }
        })
    }

    fn check_tangent(&self, p: &DVector<f64>, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.coord_len() {
            return Err(GeometryError::Dimension {
                expected: self.coord_len(),
                got: v.len(),
            });
        }
        if self.kind == ModelKind::Hyperboloid {
            let off = lorentz(p, v).abs();
            let scale = self.kappa * p.norm() * v.norm();
            if off > TANGENT_TOL * scale.max(1e-300) && off > 1e-300 {
                return Err(self.domain_err(format!(
                    "vector not tangent to the hyperboloid: <p,v>_L = {off:e}"
                )));
            }
        }
        Ok(())
    }

    /// Riemannian exponential map.
    pub fn exp_map(&self, p: &DVector<f64>, v: &DVector<f64>) -> Result<AmbientPoint> {
        self.check_point(p)?;
        self.check_tangent(p, v)?;
        if v.iter().all(|&x| x == 0.0) {
            return Ok(p.clone());
        }
        match self.kind {
            ModelKind::Euclidean => Ok(p + v),
            ModelKind::Hyperboloid => Ok(hyperboloid_exp(p, v, self.kappa)),
            _ => {
                let hyp = self.with_kind(ModelKind::Hyperboloid)?;
                let (x, jac) = self.conversion_jet(p, &hyp)?;
                let y = hyperboloid_exp(&x, &(jac * v), self.kappa);
                hyp.convert(&y, self)
            }
        }
    }

    /// Geodesic distance.
    pub fn distance(&self, p: &DVector<f64>, q: &DVector<f64>) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(q)?;
        if self.kind == ModelKind::Euclidean {
            return Ok((p - q).norm());
        }
        let hyp = self.with_kind(ModelKind::Hyperboloid)?;
        let x = self.convert(p, &hyp)?;
        let y = self.convert(q, &hyp)?;
        let k2 = self.kappa * self.kappa;
        // arccosh(1 + t) with t = k^2 |x - y|_L^2 / 2 keeps precision near 0.
        let t = 0.5 * k2 * lorentz(&(&x - &y), &(&x - &y)).max(0.0);
        Ok((t + (t * (t + 2.0)).sqrt()).ln_1p() / self.kappa)
    }

    fn check_compatible(&self, to: &SpaceFormModel) -> Result<()> {
        if self.ambient_dim != to.ambient_dim {
            return Err(GeometryError::ModelMismatch(format!(
                "ambient dimensions {} and {}",
                self.ambient_dim, to.ambient_dim
            )));
        }
        if self.is_hyperbolic() != to.is_hyperbolic() {
            return Err(GeometryError::ModelMismatch(format!(
                "cannot convert between {} and {}",
                self.kind, to.kind
            )));
        }
        if (self.kappa - to.kappa).abs() > 1e-15 * self.kappa.max(to.kappa) {
            return Err(GeometryError::ModelMismatch(format!(
                "kappa {} vs {}",
                self.kappa, to.kappa
            )));
        }
        Ok(())
    }

    /// Convert a point to another model of the same space.
    pub fn convert(&self, p: &DVector<f64>, to: &SpaceFormModel) -> Result<AmbientPoint> {
        Ok(self.conversion_jet(p, to)?.0)
    }

    /// Converted point together with the Jacobian of the conversion at `p`.
    pub fn conversion_jet(
        &self,
        p: &DVector<f64>,
        to: &SpaceFormModel,
    ) -> Result<(AmbientPoint, DMatrix<f64>)> {
        self.check_compatible(to)?;
        self.check_point(p)?;
        if self.kind == to.kind {
            let m = self.coord_len();
            return Ok((p.clone(), DMatrix::identity(m, m)));
        }
        let k = self.kappa;
        let (b, j1) = match self.kind {
            ModelKind::Ball => (p.clone(), DMatrix::identity(p.len(), p.len())),
            ModelKind::HalfSpace => half_space_to_ball(p),
            ModelKind::Hyperboloid => hyperboloid_to_ball(p, k),
            ModelKind::Euclidean => unreachable!("checked by check_compatible"),
        };
        let (out, j2) = match to.kind {
            ModelKind::Ball => (b, DMatrix::identity(self.ambient_dim, self.ambient_dim)),
            ModelKind::HalfSpace => ball_to_half_space(&b),
            ModelKind::Hyperboloid => ball_to_hyperboloid(&b, k),
            ModelKind::Euclidean => unreachable!("checked by check_compatible"),
        };
        Ok((out, j2 * j1))
    }

    /// Push a tangent vector through a model conversion.
    pub fn convert_tangent(
        &self,
        p: &DVector<f64>,
        v: &DVector<f64>,
        to: &SpaceFormModel,
    ) -> Result<(AmbientPoint, DVector<f64>)> {
        let (q, jac) = self.conversion_jet(p, to)?;
        Ok((q, jac * v))
    }

    /// Endpoint on the ideal boundary of the geodesic ray from `p` in
    /// direction `u`, in ball-boundary coordinates.
    pub fn ideal_endpoint(&self, p: &DVector<f64>, u: &DVector<f64>) -> Result<IdealEndpoint> {
        if !self.is_hyperbolic() {
            return Err(GeometryError::ModelMismatch(
                "euclidean space has no ideal boundary".into(),
            ));
        }
        self.check_tangent(p, u)?;
        let hyp = self.with_kind(ModelKind::Hyperboloid)?;
        let (x, jac) = self.conversion_jet(p, &hyp)?;
        let v = jac * u;
        let len = lorentz(&v, &v).max(0.0).sqrt();
        if len == 0.0 || !len.is_finite() {
            return Err(GeometryError::ZeroVector);
        }
        let renormalized = (len - 1.0).abs() > TANGENT_TOL;
        Ok(IdealEndpoint {
            point: hyperboloid_ray_endpoint(&x, &(v / len), self.kappa)?,
            renormalized,
        })
    }

    /// Identity coordinates carried to the space of curvature `-to_kappa^2`:
    /// distances scale by `kappa / to_kappa`. Half-space and ball coordinates
    /// are unchanged; the hyperboloid is rescaled radially.
    pub fn rescale_point(&self, p: &DVector<f64>, to_kappa: f64) -> Result<(SpaceFormModel, AmbientPoint)> {
        self.check_point(p)?;
        let to = self.with_kappa(to_kappa)?;
        let q = match self.kind {
            ModelKind::Hyperboloid => p * (self.kappa / to_kappa),
            _ => p.clone(),
        };
        Ok((to, q))
    }
}

pub(crate) fn hyperboloid_exp(x: &DVector<f64>, v: &DVector<f64>, kappa: f64) -> DVector<f64> {
    let len = lorentz(v, v).max(0.0).sqrt();
    if len == 0.0 {
        return x.clone();
    }
    let t = kappa * len;
    x * t.cosh() + v * (t.sinh() / t)
}

/// Ball-boundary endpoint of the ray `cosh(k t) x + sinh(k t) u / k`.
pub(crate) fn hyperboloid_ray_endpoint(
    x: &DVector<f64>,
    u: &DVector<f64>,
    kappa: f64,
) -> Result<BoundaryPoint> {
    let m = x.len();
    let null = x * kappa + u;
    let t = null[m - 1];
    BoundaryPoint::new(null.rows(0, m - 1) / t)
}

/// Inversion in the sphere about `-e_{n+1}` of radius `sqrt 2`, an involution
/// exchanging the upper half-space and the ball with reversed last axis.
fn inversion(x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let m = x.len();
    let mut w = x.clone();
    w[m - 1] += 1.0;
    let w2 = w.norm_squared();
    let mut y = &w * (2.0 / w2);
    y[m - 1] -= 1.0;
    let jac = (DMatrix::identity(m, m) - (&w * w.transpose()) * (2.0 / w2)) * (2.0 / w2);
    (y, jac)
}

fn reflect_last(x: &mut DVector<f64>) {
    let m = x.len();
    x[m - 1] = -x[m - 1];
}

pub(crate) fn half_space_to_ball(q: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (mut b, mut jac) = inversion(q);
    let m = q.len();
    reflect_last(&mut b);
    for j in 0..m {
        jac[(m - 1, j)] = -jac[(m - 1, j)];
    }
    (b, jac)
}

pub(crate) fn ball_to_half_space(b: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let m = b.len();
    let mut rb = b.clone();
    reflect_last(&mut rb);
    let (q, mut jac) = inversion(&rb);
    for i in 0..m {
        jac[(i, m - 1)] = -jac[(i, m - 1)];
    }
    (q, jac)
}

pub(crate) fn ball_to_hyperboloid(b: &DVector<f64>, kappa: f64) -> (DVector<f64>, DMatrix<f64>) {
    let m = b.len();
    let r2 = b.norm_squared();
    let d = 1.0 - r2;
    let mut x = DVector::zeros(m + 1);
    for i in 0..m {
        x[i] = 2.0 * b[i] / (kappa * d);
    }
    x[m] = (1.0 + r2) / (kappa * d);
    let mut jac = DMatrix::zeros(m + 1, m);
    for i in 0..m {
        for j in 0..m {
            let delta = if i == j { 2.0 / (kappa * d) } else { 0.0 };
            jac[(i, j)] = delta + 4.0 * b[i] * b[j] / (kappa * d * d);
        }
    }
    for j in 0..m {
        jac[(m, j)] = 4.0 * b[j] / (kappa * d * d);
    }
    (x, jac)
}

pub(crate) fn hyperboloid_to_ball(x: &DVector<f64>, kappa: f64) -> (DVector<f64>, DMatrix<f64>) {
    let m = x.len() - 1;
    let t = 1.0 + kappa * x[m];
    let b = x.rows(0, m) * (kappa / t);
    let mut jac = DMatrix::zeros(m, m + 1);
    for i in 0..m {
        jac[(i, i)] = kappa / t;
        jac[(i, m)] = -kappa * kappa * x[i] / (t * t);
    }
    (b, jac)
}
