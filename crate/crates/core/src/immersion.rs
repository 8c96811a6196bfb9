//! Immersions `S^n -> M` sampled through 2-jets in stereographic charts, and
//! their extrinsic curvature.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::chart::{projection_jet, ChartId, ChartPoint, MapJet};
use crate::error::{GeometryError, Result};
use crate::interval::{CurvatureInterval, Membership};
use crate::linalg::{
    cofactor_normal, det_with_column, generalized_symmetric_eigen, smallest_singular_value,
    symmetrize,
};
use crate::mesh::SphereMesh;
use crate::model::{lorentz, AmbientPoint, ModelKind, SpaceFormModel};

/// Relative finite-difference step used when no exact derivatives exist.
pub const DEFAULT_JET_STEP: f64 = 2e-3;
/// Relative step for differentiating exact first derivatives.
pub const D1_DIFF_STEP: f64 = 1e-3;
const RANK_TOL: f64 = 1e-9;

/// How many derivatives an immersion supplies in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExactOrder {
    None,
    First,
    Second,
}

/// An evaluable map `S^n -> M`, total on both stereographic charts.
pub trait Immersion: Send + Sync {
    fn model(&self) -> SpaceFormModel;

    fn dim(&self) -> usize {
        self.model().hypersurface_dim()
    }

    fn eval(&self, p: &ChartPoint) -> Result<AmbientPoint>;

    fn exact_order(&self) -> ExactOrder {
        ExactOrder::None
    }

    fn exact_jet(&self, p: &ChartPoint) -> Result<Jet2Sample> {
        let _ = p;
        Err(GeometryError::Other(format!("{} has no exact 2-jet", self.label())))
    }

    fn exact_d1(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        match self.exact_order() {
            ExactOrder::Second => Ok(self.exact_jet(p)?.d1),
            _ => Err(GeometryError::Other(format!(
                "{} has no exact differential",
                self.label()
            ))),
        }
    }

    fn label(&self) -> String {
        "immersion".into()
    }
}

pub type SharedImmersion = Arc<dyn Immersion>;

impl fmt::Debug for dyn Immersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Immersion({} in {})", self.label(), self.model())
    }
}

/// Value and first two chart derivatives of an immersion at a chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2Sample {
    pub at: ChartPoint,
    pub value: AmbientPoint,
    /// `coord_len x n`, columns `df/dx_i`.
    pub d1: DMatrix<f64>,
    /// One symmetric `n x n` Hessian per ambient coordinate.
    pub d2: Vec<DMatrix<f64>>,
}

impl Jet2Sample {
    pub fn from_map_jet(at: ChartPoint, jet: MapJet) -> Self {
        Jet2Sample {
            at,
            value: jet.value,
            d1: jet.d1,
            d2: jet.d2,
        }
    }

    pub fn to_map_jet(&self) -> MapJet {
        MapJet {
            value: self.value.clone(),
            d1: self.d1.clone(),
            d2: self.d2.clone(),
        }
    }

    /// Largest asymmetry of the Hessians.
    pub fn d2_asymmetry(&self) -> f64 {
        self.d2
            .iter()
            .map(|h| (h - h.transpose()).amax())
            .fold(0.0, f64::max)
    }
}

fn fd_step(x: &DVector<f64>, step: f64) -> f64 {
    step * x.amax().max(1.0)
}

fn shifted(p: &ChartPoint, dir: &[(usize, f64)]) -> ChartPoint {
    let mut x = p.x.clone();
    for &(i, d) in dir {
        x[i] += d;
    }
    ChartPoint::new(p.chart, x)
}

fn fd_full_jet(f: &dyn Immersion, p: &ChartPoint, step: f64) -> Result<Jet2Sample> {
    let n = p.dim();
    let h = fd_step(&p.x, step);
    let f0 = f.eval(p)?;
    let m = f0.len();
    let ev = |d: &[(usize, f64)]| f.eval(&shifted(p, d));
    let mut d1 = DMatrix::zeros(m, n);
    let mut d2 = vec![DMatrix::zeros(n, n); m];
    for i in 0..n {
        let p1 = ev(&[(i, h)])?;
        let m1 = ev(&[(i, -h)])?;
        let p2 = ev(&[(i, 2.0 * h)])?;
        let m2 = ev(&[(i, -2.0 * h)])?;
        let col = (&m2 - &p2 + (&p1 - &m1) * 8.0) / (12.0 * h);
        d1.set_column(i, &col);
        let diag = (-&p2 - &m2 + (&p1 + &m1) * 16.0 - &f0 * 30.0) / (12.0 * h * h);
        for k in 0..m {
            d2[k][(i, i)] = diag[k];
        }
        for j in 0..i {
            let c = |a: f64, b: f64| ev(&[(i, a * h), (j, b * h)]);
            let far = c(2.0, 2.0)? - c(2.0, -2.0)? - c(-2.0, 2.0)? + c(-2.0, -2.0)?;
            let near = c(1.0, 1.0)? - c(1.0, -1.0)? - c(-1.0, 1.0)? + c(-1.0, -1.0)?;
            let mixed = (near * 16.0 - far) / (48.0 * h * h);
            for k in 0..m {
                d2[k][(i, j)] = mixed[k];
                d2[k][(j, i)] = mixed[k];
            }
        }
    }
    Ok(Jet2Sample {
        at: p.clone(),
        value: f0,
        d1,
        d2,
    })
}

/// Chart points `x +- h e_j, x +- 2h e_j` (in that order for each `j`) used
/// to differentiate a first derivative, with the step `h`.
pub(crate) fn d1_stencil(p: &ChartPoint, step: f64) -> (f64, Vec<ChartPoint>) {
    let h = fd_step(&p.x, step);
    let mut pts = Vec::with_capacity(4 * p.dim());
    for j in 0..p.dim() {
        for t in [h, -h, 2.0 * h, -2.0 * h] {
            pts.push(shifted(p, &[(j, t)]));
        }
    }
    (h, pts)
}

/// Hessians from first derivatives sampled on [`d1_stencil`].
pub(crate) fn d2_from_d1_stencil(d1s: &[DMatrix<f64>], h: f64) -> Vec<DMatrix<f64>> {
    let (m, n) = d1s[0].shape();
    let mut d2 = vec![DMatrix::zeros(n, n); m];
    for j in 0..n {
        let [p1, m1, p2, m2] = [&d1s[4 * j], &d1s[4 * j + 1], &d1s[4 * j + 2], &d1s[4 * j + 3]];
        let deriv = (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h);
        for k in 0..m {
            for i in 0..n {
                d2[k][(i, j)] = deriv[(k, i)];
            }
        }
    }
    for hk in d2.iter_mut() {
        symmetrize(hk);
    }
    d2
}

fn fd_from_d1(f: &dyn Immersion, p: &ChartPoint, step: f64) -> Result<Jet2Sample> {
    let (h, pts) = d1_stencil(p, step);
    let value = f.eval(p)?;
    let d1 = f.exact_d1(p)?;
    let d1s = pts.iter().map(|q| f.exact_d1(q)).collect::<Result<Vec<_>>>()?;
    Ok(Jet2Sample {
        at: p.clone(),
        value,
        d1,
        d2: d2_from_d1_stencil(&d1s, h),
    })
}

/// 2-jet of `f` at `p`: exact when available, otherwise 4th-order central
/// differences with relative step `step` (of the exact differential when
/// only that is available).
pub fn jet(f: &dyn Immersion, p: &ChartPoint, step: f64) -> Result<Jet2Sample> {
    if step <= 0.0 || !step.is_finite() {
        return Err(GeometryError::Other(format!("invalid step {step}")));
    }
    if p.dim() != f.dim() {
        return Err(GeometryError::Dimension {
            expected: f.dim(),
            got: p.dim(),
        });
    }
    let j = match f.exact_order() {
        ExactOrder::Second => f.exact_jet(p)?,
        ExactOrder::First => fd_from_d1(f, p, step.min(D1_DIFF_STEP))?,
        ExactOrder::None => fd_full_jet(f, p, step)?,
    };
    check_rank(&j)?;
    Ok(j)
}

/// The finite-difference jet regardless of exact derivatives.
pub fn numeric_jet(f: &dyn Immersion, p: &ChartPoint, step: f64) -> Result<Jet2Sample> {
    fd_full_jet(f, p, step)
}

/// Jet with the default step.
pub fn jet_at(f: &dyn Immersion, p: &ChartPoint) -> Result<Jet2Sample> {
    jet(f, p, DEFAULT_JET_STEP)
}

pub(crate) fn check_rank(j: &Jet2Sample) -> Result<()> {
    let sv = j.d1.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > RANK_TOL * max.max(1e-300)) || max == 0.0 {
        return Err(GeometryError::NotImmersive {
            at: j.at.clone(),
            sigma_min: min,
        });
    }
    Ok(())
}

/// Unit normal `nu` at a jet, oriented so that `(df(u_1)..df(u_n), nu)` is
/// positive for positive frames `(u_i)` of the sphere.
pub fn unit_normal(model: &SpaceFormModel, j: &Jet2Sample) -> Result<DVector<f64>> {
    model.check_point(&j.value)?;
    let sign = j.at.chart.orientation_sign();
    match model.kind() {
        ModelKind::Hyperboloid => {
            let m = j.value.len();
            let mut a = DMatrix::zeros(m, m - 1);
            a.view_mut((0, 0), (m, m - 2)).copy_from(&j.d1);
            a.set_column(m - 2, &j.value);
            let mut nu = cofactor_normal(&a);
            nu[m - 1] = -nu[m - 1];
            let len = lorentz(&nu, &nu);
            if !(len > 0.0) {
                return Err(GeometryError::NotImmersive {
                    at: j.at.clone(),
                    sigma_min: smallest_singular_value(&j.d1),
                });
            }
            nu /= len.sqrt();
            let mut frame = DMatrix::zeros(m, m - 1);
            frame.view_mut((0, 0), (m, m - 2)).copy_from(&j.d1);
            frame.set_column(m - 2, &nu);
            if det_with_column(&frame, &j.value) * sign < 0.0 {
                nu = -nu;
            }
            Ok(nu)
        }
        _ => {
            let w = cofactor_normal(&j.d1);
            let len = model.norm(&j.value, &w);
            if !(len > 0.0) {
                return Err(GeometryError::NotImmersive {
                    at: j.at.clone(),
                    sigma_min: smallest_singular_value(&j.d1),
                });
            }
            Ok(w * (sign / len))
        }
    }
}

/// Extrinsic data at one sample.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub at: ChartPoint,
    pub value: AmbientPoint,
    pub normal: DVector<f64>,
    /// Induced metric in the chart basis.
    pub g: DMatrix<f64>,
    /// Second fundamental form in the chart basis.
    pub h: DMatrix<f64>,
    /// `g^{-1} h`.
    pub shape: DMatrix<f64>,
    /// Principal curvatures, ascending.
    pub lambdas: Vec<f64>,
    /// `g`-orthonormal principal directions in the chart basis (columns).
    pub directions: DMatrix<f64>,
}

impl ShapeData {
    pub fn min_lambda(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn max_lambda(&self) -> f64 {
        *self.lambdas.last().expect("n >= 1")
    }

    /// Largest entry of `g S - (g S)^T`, relative to `|h|`.
    pub fn self_adjointness_defect(&self) -> f64 {
        let gs = &self.g * &self.shape;
        (&gs - gs.transpose()).amax() / self.h.amax().max(1.0)
    }
}

pub fn shape_data(f: &dyn Immersion, p: &ChartPoint) -> Result<ShapeData> {
    let j = jet_at(f, p)?;
    shape_from_jet(&f.model(), &j)
}

pub fn shape_from_jet(model: &SpaceFormModel, j: &Jet2Sample) -> Result<ShapeData> {
    let nu = unit_normal(model, j)?;
    let gram = model.metric_tensor(&j.value)?;
    let n = j.d1.ncols();
    let mut g = j.d1.transpose() * &gram * &j.d1;
    symmetrize(&mut g);
    if g.clone().cholesky().is_none() {
        return Err(GeometryError::MetricNotPositive(j.at.clone()));
    }
    let gamma = model.christoffel(&j.value)?;
    let gnu = &gram * &nu;
    let mut h = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let mut acc: f64 = j.d2.iter().enumerate().map(|(k, hk)| gnu[k] * hk[(a, b)]).sum();
            if !gamma.is_zero() {
                let corr = gamma.contract(&j.d1.column(a).into_owned(), &j.d1.column(b).into_owned());
                acc += gnu.dot(&corr);
            }
            h[(a, b)] = acc;
            h[(b, a)] = acc;
        }
    }
    let eig = generalized_symmetric_eigen(&g, &h)?;
    let g_inv = g
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| GeometryError::MetricNotPositive(j.at.clone()))?;
    let shape = &g_inv * &h;
    Ok(ShapeData {
        at: j.at.clone(),
        value: j.value.clone(),
        normal: nu,
        g,
        h,
        shape,
        lambdas: eig.values,
        directions: eig.vectors,
    })
}

/// Gauss-Kronecker curvature: the product of the principal curvatures.
pub fn gaussian_curvature(sd: &ShapeData) -> f64 {
    sd.lambdas.iter().product()
}

/// Coordinate derivative of the unit normal field along `f`, as columns
/// `d nu / dx_i`, from the Weingarten relation `nabla_i nu = -df(S e_i)`.
pub fn normal_derivative(model: &SpaceFormModel, j: &Jet2Sample, sd: &ShapeData) -> Result<DMatrix<f64>> {
    let mut dn = -(&j.d1 * &sd.shape);
    let gamma = model.christoffel(&j.value)?;
    if !gamma.is_zero() {
        for i in 0..j.d1.ncols() {
            let corr = gamma.contract(&j.d1.column(i).into_owned(), &sd.normal);
            let col = dn.column(i) - corr;
            dn.set_column(i, &col);
        }
    }
    Ok(dn)
}

/// Smallest singular value of `df` measured from the round metric of the
/// sphere to the model metric.
pub fn immersivity_margin(sd: &ShapeData) -> Result<f64> {
    let round = sd.at.sphere_jet().d1;
    let g0 = round.transpose() * round;
    let eig = generalized_symmetric_eigen(&g0, &sd.g)?;
    Ok(eig.values[0].max(0.0).sqrt())
}

/// An immersion defined by a closure, differentiated numerically.
pub struct FnImmersion<F> {
    model: SpaceFormModel,
    label: String,
    f: F,
}

impl<F> FnImmersion<F>
where
    F: Fn(&DVector<f64>) -> AmbientPoint + Send + Sync,
{
    /// `f` receives the unit vector of the sphere point.
    pub fn new(model: SpaceFormModel, label: impl Into<String>, f: F) -> Self {
        FnImmersion {
            model,
            label: label.into(),
            f,
        }
    }
}

impl<F> Immersion for FnImmersion<F>
where
    F: Fn(&DVector<f64>) -> AmbientPoint + Send + Sync,
{
    fn model(&self) -> SpaceFormModel {
        self.model
    }

    fn eval(&self, p: &ChartPoint) -> Result<AmbientPoint> {
        Ok((self.f)(&p.to_sphere()))
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// A map defined on a neighbourhood of `S^n` in `R^{n+1}` whose restriction
/// to the sphere is the immersion; only tangential derivatives matter.
pub trait SphereExtension: Send + Sync {
    fn model(&self) -> SpaceFormModel;
    /// 2-jet of the extension at the unit vector `q`.
    fn extension_jet(&self, q: &DVector<f64>) -> MapJet;
    fn label(&self) -> String;
}

/// Immersion with exact jets obtained from a [`SphereExtension`] by the
/// chain rule through the stereographic charts.
pub struct Extended<T>(pub T);

impl<T: SphereExtension> Immersion for Extended<T> {
    fn model(&self) -> SpaceFormModel {
        self.0.model()
    }

    fn eval(&self, p: &ChartPoint) -> Result<AmbientPoint> {
        Ok(self.0.extension_jet(&p.to_sphere()).value)
    }

    fn exact_order(&self) -> ExactOrder {
        ExactOrder::Second
    }

    fn exact_jet(&self, p: &ChartPoint) -> Result<Jet2Sample> {
        let s = p.sphere_jet();
        let outer = self.0.extension_jet(&s.value);
        Ok(Jet2Sample::from_map_jet(p.clone(), MapJet::compose(&outer, &s)))
    }

    fn label(&self) -> String {
        self.0.label()
    }
}

/// A diffeomorphism of `S^n` given by an orthogonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereDiffeo {
    matrix: DMatrix<f64>,
    label: String,
}

impl SphereDiffeo {
    pub fn orthogonal(matrix: DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(GeometryError::NotInvertible("matrix is not square".into()));
        }
        let defect = (matrix.transpose() * &matrix - DMatrix::identity(n, n)).amax();
        if defect > 1e-12 {
            return Err(GeometryError::NotInvertible(format!(
                "matrix is not orthogonal (defect {defect:.2e})"
            )));
        }
        Ok(SphereDiffeo {
            matrix,
            label: label.into(),
        })
    }

    pub fn identity(n: usize) -> Self {
        SphereDiffeo {
            matrix: DMatrix::identity(n + 1, n + 1),
            label: "id".into(),
        }
    }

    /// Reflection in the hyperplane `x_1 = 0`.
    pub fn reflection(n: usize) -> Self {
        let mut m = DMatrix::identity(n + 1, n + 1);
        m[(0, 0)] = -1.0;
        SphereDiffeo {
            matrix: m,
            label: "reflection".into(),
        }
    }

    pub fn antipodal(n: usize) -> Self {
        SphereDiffeo {
            matrix: -DMatrix::identity(n + 1, n + 1),
            label: "antipodal".into(),
        }
    }

    /// Rotation by `angle` in the `(a, b)` coordinate plane.
    pub fn rotation(n: usize, a: usize, b: usize, angle: f64) -> Self {
        let mut m = DMatrix::identity(n + 1, n + 1);
        let (s, c) = angle.sin_cos();
        m[(a, a)] = c;
        m[(b, b)] = c;
        m[(a, b)] = -s;
        m[(b, a)] = s;
        SphereDiffeo {
            matrix: m,
            label: format!("rotation({a},{b},{angle})"),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn degree(&self) -> i32 {
        if self.matrix.determinant() > 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn apply(&self, q: &DVector<f64>) -> DVector<f64> {
        &self.matrix * q
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Chart expression of the map at `p` as a 2-jet `R^n -> R^n`, together
    /// with the target chart.
    pub fn chart_jet(&self, p: &ChartPoint) -> (ChartId, MapJet) {
        let s = p.sphere_jet();
        let moved = MapJet::compose(&MapJet::linear(&self.matrix, &s.value), &s);
        let target = ChartPoint::from_sphere(&moved.value).chart;
        let proj = projection_jet(&moved.value, target);
        (target, MapJet::compose(&proj, &moved))
    }
}

/// `f o g`.
pub struct Composed {
    inner: SharedImmersion,
    diffeo: SphereDiffeo,
}

impl Composed {
    pub fn diffeo(&self) -> &SphereDiffeo {
        &self.diffeo
    }

    pub fn inner(&self) -> &SharedImmersion {
        &self.inner
    }
}

impl Immersion for Composed {
    fn model(&self) -> SpaceFormModel {
        self.inner.model()
    }

    fn eval(&self, p: &ChartPoint) -> Result<AmbientPoint> {
        let q = self.diffeo.apply(&p.to_sphere());
        self.inner.eval(&ChartPoint::from_sphere(&q))
    }

    fn exact_order(&self) -> ExactOrder {
        self.inner.exact_order()
    }

    fn exact_jet(&self, p: &ChartPoint) -> Result<Jet2Sample> {
        let (chart, psi) = self.diffeo.chart_jet(p);
        let inner = self
            .inner
            .exact_jet(&ChartPoint::new(chart, psi.value.clone()))?;
        Ok(Jet2Sample::from_map_jet(
            p.clone(),
            MapJet::compose(&inner.to_map_jet(), &psi),
        ))
    }

    fn exact_d1(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        let (chart, psi) = self.diffeo.chart_jet(p);
        let d1 = self.inner.exact_d1(&ChartPoint::new(chart, psi.value.clone()))?;
        Ok(d1 * psi.d1)
    }

    fn label(&self) -> String {
        format!("{} o {}", self.inner.label(), self.diffeo.label())
    }
}

/// Result of pre-composing an immersion with a sphere diffeomorphism.
pub struct Composition {
    pub immersion: Arc<Composed>,
    pub degree: i32,
}

impl Composition {
    /// `deg(g) * (lambda_k o g)`, sorted ascending.
    pub fn predicted_lambdas(&self, p: &ChartPoint) -> Result<Vec<f64>> {
        let q = self.immersion.diffeo.apply(&p.to_sphere());
        let sd = shape_data(self.immersion.inner.as_ref(), &ChartPoint::from_sphere(&q))?;
        let d = self.degree as f64;
        let mut l: Vec<f64> = sd.lambdas.iter().map(|x| d * x).collect();
        l.sort_by(f64::total_cmp);
        Ok(l)
    }
}

pub fn compose_with_diffeo(f: SharedImmersion, g: SphereDiffeo) -> Result<Composition> {
    if g.dim() != f.dim() {
        return Err(GeometryError::Dimension {
            expected: f.dim(),
            got: g.dim(),
        });
    }
    let degree = g.degree();
    Ok(Composition {
        immersion: Arc::new(Composed {
            inner: f,
            diffeo: g,
        }),
        degree,
    })
}

/// Per-vertex curvature sample.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub vertex: usize,
    pub at: ChartPoint,
    pub lambdas: Vec<f64>,
    pub gaussian: f64,
}

pub fn curvature_samples(f: &dyn Immersion, mesh: &SphereMesh) -> Result<Vec<CurvatureSample>> {
    mesh.vertices()
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let p = ChartPoint::from_sphere(q);
            let sd = shape_data(f, &p)?;
            Ok(CurvatureSample {
                vertex: i,
                gaussian: gaussian_curvature(&sd),
                lambdas: sd.lambdas,
                at: p,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CurvatureRange {
    pub min: f64,
    pub max: f64,
    pub argmin: usize,
    pub argmax: usize,
    pub verdict: Option<IntervalVerdict>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalVerdict {
    pub inside: bool,
    pub margin: f64,
}

impl CurvatureRange {
    pub fn from_samples(samples: &[CurvatureSample], interval: Option<&CurvatureInterval>) -> Self {
        let mut r = CurvatureRange {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            argmin: 0,
            argmax: 0,
            verdict: None,
        };
        for s in samples {
            if s.lambdas[0] < r.min {
                r.min = s.lambdas[0];
                r.argmin = s.vertex;
            }
            let top = *s.lambdas.last().expect("n >= 1");
            if top > r.max {
                r.max = top;
                r.argmax = s.vertex;
            }
        }
        r.verdict = interval.map(|i| r.verdict_for(i));
        r
    }

    pub fn verdict_for(&self, interval: &CurvatureInterval) -> IntervalVerdict {
        let a: Membership = interval.membership(self.min);
        let b = interval.membership(self.max);
        IntervalVerdict {
            inside: a.inside && b.inside,
            margin: a.margin.min(b.margin),
        }
    }
}

/// Extremal sampled principal curvatures over a mesh, with the verdict for
/// `interval` when given.
pub fn curvature_range(
    f: &dyn Immersion,
    mesh: &SphereMesh,
    interval: Option<&CurvatureInterval>,
) -> Result<CurvatureRange> {
    let samples = curvature_samples(f, mesh)?;
    Ok(CurvatureRange::from_samples(&samples, interval))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Inclusion(SpaceFormModel);

    impl SphereExtension for Inclusion {
        fn model(&self) -> SpaceFormModel {
            self.0
        }
        fn extension_jet(&self, q: &DVector<f64>) -> MapJet {
            MapJet::identity(q)
        }
        fn label(&self) -> String {
            "inclusion".into()
        }
    }

    fn iota(n: usize) -> SharedImmersion {
        Arc::new(Extended(Inclusion(SpaceFormModel::euclidean(n + 1).unwrap())))
    }

    fn pt(chart: ChartId, x: &[f64]) -> ChartPoint {
        ChartPoint::new(chart, DVector::from_vec(x.to_vec()))
    }

    #[test]
    fn inclusion_exact_jet_matches_finite_differences() {
        let f = iota(2);
        let p = pt(ChartId::North, &[0.3, -0.4]);
        let exact = f.exact_jet(&p).unwrap();
        let fd = numeric_jet(f.as_ref(), &p, DEFAULT_JET_STEP).unwrap();
        assert!((&exact.d1 - &fd.d1).amax() < 1e-5);
        for (a, b) in exact.d2.iter().zip(&fd.d2) {
            assert!((a - b).amax() < 1e-5);
        }
    }

    #[test]
    fn constant_map_is_not_immersive() {
        let m = SpaceFormModel::euclidean(3).unwrap();
        let f = FnImmersion::new(m, "const", |_q: &DVector<f64>| DVector::from_vec(vec![1.0, 2.0, 3.0]));
        match jet_at(&f, &pt(ChartId::South, &[0.1, 0.2])) {
            Err(GeometryError::NotImmersive { sigma_min, .. }) => assert!(sigma_min < 1e-9),
            other => panic!("expected NotImmersive, got {other:?}"),
        }
    }

    #[test]
    fn inclusion_normal_is_position() {
        let f = iota(2);
        for p in [pt(ChartId::North, &[0.3, -0.4]), pt(ChartId::South, &[-0.9, 0.1])] {
            let j = jet_at(f.as_ref(), &p).unwrap();
            let nu = unit_normal(&f.model(), &j).unwrap();
            assert!((nu - p.to_sphere()).norm() < 1e-14);
        }
    }

    #[test]
    fn inclusion_curvatures() {
        for n in [2, 3] {
            let f = iota(n);
            let p = ChartPoint::from_sphere(&DVector::from_fn(n + 1, |i, _| (i as f64 + 1.0).sqrt()).normalize());
            let sd = shape_data(f.as_ref(), &p).unwrap();
            for l in &sd.lambdas {
                assert!((l + 1.0).abs() < 1e-13);
            }
            let k = gaussian_curvature(&sd);
            assert!((k - (-1f64).powi(n as i32)).abs() < 1e-12);
            assert!((k - sd.shape.determinant()).abs() < 1e-8);
            assert!(sd.self_adjointness_defect() < 1e-12);
        }
    }

    #[test]
    fn reflection_and_antipodal_compositions() {
        let f = iota(2);
        let refl = compose_with_diffeo(f.clone(), SphereDiffeo::reflection(2)).unwrap();
        assert_eq!(refl.degree, -1);
        let anti = compose_with_diffeo(f.clone(), SphereDiffeo::antipodal(2)).unwrap();
        assert_eq!(anti.degree, -1);
        let p = pt(ChartId::North, &[0.2, 0.7]);
        for comp in [&refl, &anti] {
            let sd = shape_data(comp.immersion.as_ref(), &p).unwrap();
            let pred = comp.predicted_lambdas(&p).unwrap();
            for (a, b) in sd.lambdas.iter().zip(&pred) {
                assert!((a - 1.0).abs() < 1e-12 && (a - b).abs() < 1e-12);
            }
        }
        // at n = 2 the antipodal map is orientation reversing, so nu_{-iota} = id
        let j = jet_at(anti.immersion.as_ref(), &p).unwrap();
        let nu = unit_normal(&f.model(), &j).unwrap();
        assert!((nu - p.to_sphere()).norm() < 1e-13);
    }

    #[test]
    fn non_orthogonal_diffeo_is_rejected() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 1.0]));
        assert!(matches!(
            SphereDiffeo::orthogonal(m, "stretch"),
            Err(GeometryError::NotInvertible(_))
        ));
        let sing = DMatrix::zeros(3, 3);
        assert!(SphereDiffeo::orthogonal(sing, "zero").is_err());
    }

    #[test]
    fn composed_exact_jet_matches_finite_differences() {
        let f = iota(3);
        let g = SphereDiffeo::rotation(3, 1, 3, 0.7);
        let c = compose_with_diffeo(f, g).unwrap();
        let p = pt(ChartId::South, &[0.2, -0.3, 0.5]);
        let exact = c.immersion.exact_jet(&p).unwrap();
        let fd = numeric_jet(c.immersion.as_ref(), &p, DEFAULT_JET_STEP).unwrap();
        assert!((&exact.d1 - &fd.d1).amax() < 1e-6);
        for (a, b) in exact.d2.iter().zip(&fd.d2) {
            assert!((a - b).amax() < 1e-6);
        }
        assert!(exact.d2_asymmetry() < 1e-12);
    }
}
