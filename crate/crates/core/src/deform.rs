//! Curvature-constrained deformations: the normal translation flow in
//! hyperbolic space, retractions onto round spheres, the overlap-case path,
//! and per-step invariant tracking.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{ball_sphere_radius, euclidean_sphere, halfspace_sphere, halfspace_sphere_params, hyperboloid_sphere, ball_sphere};
use crate::chart::ChartPoint;
use crate::error::{GeometryError, Result};
use crate::gauss::{gauss_from_normal, GaussMapKind};
use crate::immersion::{
    check_rank, compose_with_diffeo, d1_stencil, d2_from_d1_stencil, immersivity_margin, jet_at,
    shape_from_jet, ExactOrder, Immersion, Jet2Sample, SharedImmersion, SphereDiffeo, D1_DIFF_STEP,
};
use crate::interval::CurvatureInterval;
use crate::mesh::SphereMesh;
use crate::model::{unit_angle, AmbientPoint, ModelKind, SpaceFormModel};

/// Largest flow distance used by the overlap path.
pub const R_MAX: f64 = 8.0;

/// Round sphere with all principal curvatures `mu`. Euclidean space accepts
/// any `mu != 0`; the hyperbolic models need `mu < -kappa`.
pub fn round_sphere(model: &SpaceFormModel, mu: f64) -> Result<SharedImmersion> {
    let n = model.hypersurface_dim();
    let k = model.kappa();
    match model.kind() {
        ModelKind::Euclidean => euclidean_sphere(n, mu),
        ModelKind::HalfSpace => halfspace_sphere(n, mu, k),
        ModelKind::Ball => ball_sphere(n, mu, k),
        ModelKind::Hyperboloid => hyperboloid_sphere(n, mu, k),
    }
}

/// Principal curvature after flowing a distance `r` along the normal:
/// `kappa (l - tanh(kappa r)) / (1 - l tanh(kappa r))` with `l = lambda / kappa`.
pub fn curvature_flow_value(lambda: f64, r: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(GeometryError::Regime("normal flow needs kappa > 0".into()));
    }
    if !(lambda < kappa) || !(r >= 0.0) {
        return Err(GeometryError::Regime(format!(
            "curvature flow needs lambda < kappa and r >= 0, got lambda={lambda}, r={r}"
        )));
    }
    let l = lambda / kappa;
    let t = (kappa * r).tanh();
    let den = 1.0 - l * t;
    assert!(den > 0.0, "pole of the curvature flow with lambda < kappa");
    Ok(kappa * (l - t) / den)
}

/// Data of the source immersion at one chart point.
#[derive(Debug, Clone)]
pub struct SourceSample {
    pub at: ChartPoint,
    pub value: AmbientPoint,
    pub d1: DMatrix<f64>,
    pub normal: DVector<f64>,
    /// Shape operator in the chart basis.
    pub shape: DMatrix<f64>,
    pub lambdas: Vec<f64>,
}

pub fn source_sample(f: &dyn Immersion, p: &ChartPoint) -> Result<SourceSample> {
    let j = jet_at(f, p)?;
    let sd = shape_from_jet(&f.model(), &j)?;
    Ok(SourceSample {
        at: p.clone(),
        value: j.value,
        d1: j.d1,
        normal: sd.normal,
        shape: sd.shape,
        lambdas: sd.lambdas,
    })
}

/// One stage `f_s` of a deformation, as a function of the source data.
trait StageMap: Send + Sync {
    fn model(&self) -> SpaceFormModel;
    fn value_d1(&self, src: &SourceSample) -> Result<(AmbientPoint, DMatrix<f64>)>;
    fn label(&self) -> String;
}

struct Stage<M> {
    source: SharedImmersion,
    map: M,
}

impl<M: StageMap> Immersion for Stage<M> {
    fn model(&self) -> SpaceFormModel {
        self.map.model()
    }

    fn eval(&self, p: &ChartPoint) -> Result<AmbientPoint> {
        Ok(self.map.value_d1(&source_sample(self.source.as_ref(), p)?)?.0)
    }

    fn exact_order(&self) -> ExactOrder {
        ExactOrder::First
    }

    fn exact_d1(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        Ok(self.map.value_d1(&source_sample(self.source.as_ref(), p)?)?.1)
    }

    fn label(&self) -> String {
        format!("{} of {}", self.map.label(), self.source.label())
    }
}

fn hyperbolic_frame(model: &SpaceFormModel, src: &SourceSample) -> Result<(DVector<f64>, DMatrix<f64>, DVector<f64>)> {
    let hyp = model.with_kind(ModelKind::Hyperboloid)?;
    let (x, jac) = model.conversion_jet(&src.value, &hyp)?;
    Ok((x, &jac * &src.d1, jac * &src.normal))
}

#[derive(Debug, Clone)]
struct NormalFlowMap {
    model: SpaceFormModel,
    r: f64,
}

impl NormalFlowMap {
    /// Flowed point and differential in hyperboloid coordinates.
    fn hyperboloid_value_d1(&self, src: &SourceSample) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let k = self.model.kappa();
        let (c, s) = ((k * self.r).cosh(), (k * self.r).sinh());
        for &l in &src.lambdas {
            let factor = c - (l / k) * s;
            if !(factor > 0.0) {
                return Err(GeometryError::FlowDegenerate {
                    at: src.at.clone(),
                    lambda: l,
                    factor,
                });
            }
        }
        let (x, dx, nu) = hyperbolic_frame(&self.model, src)?;
        let n = src.shape.nrows();
        let a = DMatrix::identity(n, n) * c - &src.shape * (s / k);
        Ok((x * c + nu * (s / k), dx * a))
    }
}

impl StageMap for NormalFlowMap {
    fn model(&self) -> SpaceFormModel {
        self.model
    }

    fn value_d1(&self, src: &SourceSample) -> Result<(AmbientPoint, DMatrix<f64>)> {
        let (y, dy) = self.hyperboloid_value_d1(src)?;
        let hyp = self.model.with_kind(ModelKind::Hyperboloid)?;
        let (back, jac) = hyp.conversion_jet(&y, &self.model)?;
        Ok((back, jac * dy))
    }

    fn label(&self) -> String {
        format!("normal_flow(r={})", self.r)
    }
}

#[derive(Debug, Clone)]
struct EuclideanRetractionMap {
    model: SpaceFormModel,
    mu: f64,
    s: f64,
}

impl StageMap for EuclideanRetractionMap {
    fn model(&self) -> SpaceFormModel {
        self.model
    }

    fn value_d1(&self, src: &SourceSample) -> Result<(AmbientPoint, DMatrix<f64>)> {
        let (s, mu) = (self.s, self.mu);
        let n = src.shape.nrows();
        let value = &src.value * (1.0 - s) - &src.normal * (s / mu);
        let a = DMatrix::identity(n, n) * (1.0 - s) + &src.shape * (s / mu);
        Ok((value, &src.d1 * a))
    }

    fn label(&self) -> String {
        format!("euclidean_retraction(mu={},s={})", self.mu, self.s)
    }
}

#[derive(Debug, Clone)]
struct HalfSpaceRetractionMap {
    model: SpaceFormModel,
    mu: f64,
    s: f64,
    center: f64,
    radius: f64,
}

impl HalfSpaceRetractionMap {
    fn new(model: SpaceFormModel, mu: f64, s: f64) -> Result<Self> {
        let (center, radius) = halfspace_sphere_params(mu, model.kappa())?;
        Ok(HalfSpaceRetractionMap {
            model,
            mu,
            s,
            center,
            radius,
        })
    }

    /// Positive factor `r (nubar_{n+1} - lambda / kappa) / f_{n+1}` by which
    /// `d nubar` stretches the principal direction of `lambda`.
    fn stretch(&self, src: &SourceSample, lambda: f64) -> f64 {
        let m = src.value.len();
        let k = self.model.kappa();
        let nubar_last = src.normal[m - 1] / (k * src.value[m - 1]);
        self.radius * (nubar_last - lambda / k) / src.value[m - 1]
    }
}

impl StageMap for HalfSpaceRetractionMap {
    fn model(&self) -> SpaceFormModel {
        self.model
    }

    fn value_d1(&self, src: &SourceSample) -> Result<(AmbientPoint, DMatrix<f64>)> {
        let s = self.s;
        let m = src.value.len();
        let n = m - 1;
        let k = self.model.kappa();
        let last = src.value[m - 1];
        let nubar = &src.normal / (k * last);
        let mut target = &nubar * self.radius;
        target[m - 1] += self.center;
        let value = &src.value * (1.0 - s) + target * s;
        let dnubar = (DMatrix::identity(n, n) * nubar[m - 1] - &src.shape / k) / last;
        let a = DMatrix::identity(n, n) * (1.0 - s) + dnubar * (s * self.radius);
        Ok((value, &src.d1 * a))
    }

    fn label(&self) -> String {
        format!("halfspace_retraction(mu={},s={})", self.mu, self.s)
    }
}

#[derive(Debug, Clone)]
struct OverlapMap {
    flow: NormalFlowMap,
    s: f64,
    tau: f64,
    end_radius: f64,
}

/// Chart differential of the visual Gauss map in ball-boundary coordinates.
fn visual_value_d1(model: &SpaceFormModel, src: &SourceSample) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let k = model.kappa();
    let (x, dx, nu) = hyperbolic_frame(model, src)?;
    let m = x.len();
    let n = src.shape.nrows();
    let w = dx * (DMatrix::identity(n, n) * k - &src.shape);
    let den = k * x[m - 1] + nu[m - 1];
    let e = (x.rows(0, m - 1) * k + nu.rows(0, m - 1)) / den;
    let de = (w.rows(0, m - 1) - &e * w.row(m - 1)) / den;
    Ok((e, de))
}

impl OverlapMap {
    fn flow_distance(s: f64) -> f64 {
        (s.min(1.0) * R_MAX.atan()).tan()
    }
}

impl StageMap for OverlapMap {
    fn model(&self) -> SpaceFormModel {
        self.flow.model
    }

    fn value_d1(&self, src: &SourceSample) -> Result<(AmbientPoint, DMatrix<f64>)> {
        let s = self.s;
        if s <= 1.0 {
            let flow = NormalFlowMap {
                model: self.flow.model,
                r: Self::flow_distance(s),
            };
            let scale = 1.0 + s * (self.tau - 1.0);
            let (y, dy) = flow.value_d1(src)?;
            Ok((y * scale, dy * scale))
        } else {
            let (y, dy) = self.flow.value_d1(src)?;
            let (e, de) = visual_value_d1(&self.flow.model, src)?;
            let t = self.tau + (s - 1.0) * (self.end_radius - self.tau);
            let (a, b) = (2.0 - s, s - 1.0);
            Ok(((y * a + e * b) * t, (dy * a + de * b) * t))
        }
    }

    fn label(&self) -> String {
        format!("overlap_path(s={},tau={})", self.s, self.tau)
    }
}

fn stage<M: StageMap + 'static>(source: &SharedImmersion, map: M) -> SharedImmersion {
    Arc::new(Stage {
        source: source.clone(),
        map,
    })
}

fn require_model(f: &dyn Immersion, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(GeometryError::ModelMismatch(format!("{what} is not defined for {}", f.model())))
    }
}

/// `p -> exp_{f(p)}(r nu_f(p))`.
pub fn normal_flow(f: &SharedImmersion, r: f64) -> Result<SharedImmersion> {
    require_model(f.as_ref(), f.model().is_hyperbolic(), "normal flow")?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(GeometryError::Regime(format!("flow distance must be finite and >= 0, got {r}")));
    }
    Ok(stage(f, NormalFlowMap { model: f.model(), r }))
}

/// `(1 - s) f + s sigma(nu_f)` with `sigma` the round sphere of curvature `mu < 0`.
pub fn euclidean_retraction(f: &SharedImmersion, mu: f64, s: f64) -> Result<SharedImmersion> {
    require_model(f.as_ref(), f.model().kind() == ModelKind::Euclidean, "euclidean retraction")?;
    check_unit(s)?;
    if !(mu < 0.0) {
        return Err(GeometryError::Regime(format!("euclidean retraction needs mu < 0, got {mu}")));
    }
    Ok(stage(f, EuclideanRetractionMap { model: f.model(), mu, s }))
}

/// `(1 - s) f + s sigma(nubar_f)` in half-space coordinates.
pub fn halfspace_retraction(f: &SharedImmersion, mu: f64, s: f64) -> Result<SharedImmersion> {
    require_model(f.as_ref(), f.model().kind() == ModelKind::HalfSpace, "half-space retraction")?;
    check_unit(s)?;
    Ok(stage(f, HalfSpaceRetractionMap::new(f.model(), mu, s)?))
}

/// Stage `s in [0, 2]` of the overlap path in the ball model: a normal flow
/// by `r(s) = tan(s atan(R_MAX))` shrunk by `1 + s (tau - 1)` for `s <= 1`,
/// then a shrinking straight-line path to `sigma(nu_hat_f)`.
pub fn overlap_path(f: &SharedImmersion, mu: f64, s: f64, tau: f64) -> Result<SharedImmersion> {
    require_model(f.as_ref(), f.model().kind() == ModelKind::Ball, "overlap path")?;
    if !(0.0..=2.0).contains(&s) {
        return Err(GeometryError::Regime(format!("overlap path parameter {s} outside [0, 2]")));
    }
    if !(tau > 0.5 && tau <= 1.0) {
        return Err(GeometryError::Regime(format!("tau must lie in (1/2, 1], got {tau}")));
    }
    let end_radius = ball_sphere_radius(mu, f.model().kappa())?;
    Ok(stage(
        f,
        OverlapMap {
            flow: NormalFlowMap { model: f.model(), r: R_MAX },
            s,
            tau,
            end_radius,
        },
    ))
}

fn check_unit(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(GeometryError::Regime(format!("deformation parameter {s} outside [0, 1]")))
    }
}

/// `f o rho` with the interval negated.
pub fn switch_side(f: &SharedImmersion, interval: &CurvatureInterval) -> Result<(SharedImmersion, CurvatureInterval)> {
    let c = compose_with_diffeo(f.clone(), SphereDiffeo::reflection(f.dim()))?;
    Ok((c.immersion, interval.negate()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeformationKind {
    NormalFlow,
    EuclideanRetraction,
    HalfSpaceRetraction,
    OverlapPath,
}

impl DeformationKind {
    pub fn name(self) -> &'static str {
        match self {
            DeformationKind::NormalFlow => "normal-flow",
            DeformationKind::EuclideanRetraction => "euclidean-retraction",
            DeformationKind::HalfSpaceRetraction => "half-space-retraction",
            DeformationKind::OverlapPath => "overlap-path",
        }
    }
}

/// A one-parameter family `f_s` with `f_0 = f`.
#[derive(Clone)]
pub struct DeformationPath {
    pub kind: DeformationKind,
    pub source: SharedImmersion,
    pub interval: CurvatureInterval,
    /// Target curvature of the retractions and of the overlap path.
    pub mu: Option<f64>,
    /// Flow distance at `s = 1` of a normal-flow path.
    pub r_end: f64,
    pub tau: f64,
}

impl DeformationPath {
    pub fn normal_flow(f: SharedImmersion, r_end: f64, interval: CurvatureInterval) -> Result<Self> {
        require_model(f.as_ref(), f.model().is_hyperbolic(), "normal flow")?;
        Ok(DeformationPath {
            kind: DeformationKind::NormalFlow,
            source: f,
            interval,
            mu: None,
            r_end,
            tau: 1.0,
        })
    }

    pub fn euclidean_retraction(f: SharedImmersion, mu: f64, interval: CurvatureInterval) -> Result<Self> {
        require_model(f.as_ref(), f.model().kind() == ModelKind::Euclidean, "euclidean retraction")?;
        if !interval.lies_below(0.0) || !interval.contains_value(mu) {
            return Err(GeometryError::Regime(format!(
                "euclidean retraction needs {interval} < 0 containing mu={mu}; use switch_side for the positive side"
            )));
        }
        Ok(DeformationPath {
            kind: DeformationKind::EuclideanRetraction,
            source: f,
            interval,
            mu: Some(mu),
            r_end: 0.0,
            tau: 1.0,
        })
    }

    pub fn halfspace_retraction(f: SharedImmersion, mu: f64, interval: CurvatureInterval) -> Result<Self> {
        require_model(f.as_ref(), f.model().kind() == ModelKind::HalfSpace, "half-space retraction")?;
        let k = f.model().kappa();
        if !interval.lies_below(-k) || !interval.contains_value(mu) {
            return Err(GeometryError::Regime(format!(
                "half-space retraction needs {interval} < -{k} containing mu={mu}"
            )));
        }
        Ok(DeformationPath {
            kind: DeformationKind::HalfSpaceRetraction,
            source: f,
            interval,
            mu: Some(mu),
            r_end: 0.0,
            tau: 1.0,
        })
    }

    pub fn overlap(f: SharedImmersion, mu: f64, tau: f64, interval: CurvatureInterval) -> Result<Self> {
        require_model(f.as_ref(), f.model().kind() == ModelKind::Ball, "overlap path")?;
        let k = f.model().kappa();
        if !interval.lies_below(k) || !interval.contains_value(mu) || !(mu < -k) {
            return Err(GeometryError::Regime(format!(
                "overlap path needs {interval} < {k} containing mu={mu} < -{k}"
            )));
        }
        Ok(DeformationPath {
            kind: DeformationKind::OverlapPath,
            source: f,
            interval,
            mu: Some(mu),
            r_end: R_MAX,
            tau,
        })
    }

    pub fn s_max(&self) -> f64 {
        match self.kind {
            DeformationKind::OverlapPath => 2.0,
            _ => 1.0,
        }
    }

    fn map(&self, s: f64) -> Result<Box<dyn StageMap>> {
        let model = self.source.model();
        Ok(match self.kind {
            DeformationKind::NormalFlow => Box::new(NormalFlowMap { model, r: s * self.r_end }),
            DeformationKind::EuclideanRetraction => Box::new(EuclideanRetractionMap {
                model,
                mu: self.mu.expect("set by constructor"),
                s,
            }),
            DeformationKind::HalfSpaceRetraction => Box::new(HalfSpaceRetractionMap::new(
                model,
                self.mu.expect("set by constructor"),
                s,
            )?),
            DeformationKind::OverlapPath => Box::new(OverlapMap {
                flow: NormalFlowMap { model, r: R_MAX },
                s,
                tau: self.tau,
                end_radius: ball_sphere_radius(self.mu.expect("set by constructor"), model.kappa())?,
            }),
        })
    }

    /// The immersion `f_s`; `s = 0` returns the source itself.
    pub fn stage(&self, s: f64) -> Result<SharedImmersion> {
        if s == 0.0 {
            return Ok(self.source.clone());
        }
        match self.kind {
            DeformationKind::NormalFlow => normal_flow(&self.source, s * self.r_end),
            DeformationKind::EuclideanRetraction => {
                euclidean_retraction(&self.source, self.mu.expect("set by constructor"), s)
            }
            DeformationKind::HalfSpaceRetraction => {
                halfspace_retraction(&self.source, self.mu.expect("set by constructor"), s)
            }
            DeformationKind::OverlapPath => {
                overlap_path(&self.source, self.mu.expect("set by constructor"), s, self.tau)
            }
        }
    }

    /// Gauss map that the deformation leaves unchanged.
    pub fn invariant_map(&self) -> Option<GaussMapKind> {
        match self.kind {
            DeformationKind::NormalFlow => Some(GaussMapKind::Visual),
            DeformationKind::EuclideanRetraction => Some(GaussMapKind::Normal),
            DeformationKind::HalfSpaceRetraction => Some(GaussMapKind::Flat),
            DeformationKind::OverlapPath => None,
        }
    }

    /// Closed-form principal curvatures of `f_s` at a sample, ascending.
    pub fn predicted_lambdas(&self, s: f64, src: &SourceSample) -> Option<Result<Vec<f64>>> {
        let model = self.source.model();
        let mut out: Vec<f64> = match self.kind {
            DeformationKind::NormalFlow => {
                let r = s * self.r_end;
                match src
                    .lambdas
                    .iter()
                    .map(|&l| curvature_flow_value(l, r, model.kappa()))
                    .collect::<Result<Vec<_>>>()
                {
                    Ok(v) => v,
                    Err(e) => return Some(Err(e)),
                }
            }
            DeformationKind::EuclideanRetraction => {
                let mu = self.mu?;
                src.lambdas.iter().map(|&l| 1.0 / ((1.0 - s) / l + s / mu)).collect()
            }
            DeformationKind::HalfSpaceRetraction => {
                let mu = self.mu?;
                let map = match HalfSpaceRetractionMap::new(model, mu, s) {
                    Ok(m) => m,
                    Err(e) => return Some(Err(e)),
                };
                src.lambdas
                    .iter()
                    .map(|&l| {
                        let rho = map.stretch(src, l);
                        ((1.0 - s) * l + s * rho * mu) / ((1.0 - s) + s * rho)
                    })
                    .collect()
            }
            DeformationKind::OverlapPath => return None,
        };
        out.sort_by(f64::total_cmp);
        Some(Ok(out))
    }

    pub fn label(&self) -> String {
        format!("{} of {}", self.kind.name(), self.source.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOptions {
    /// Uniform steps including both ends.
    pub steps: usize,
    pub drift_tol: f64,
    pub formula_tol: f64,
    /// Bisection depth around steps whose interval margin is small.
    pub refine_depth: u32,
    /// Interval margin below which neighbouring steps are refined.
    pub near_margin: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            steps: 33,
            drift_tol: 1e-6,
            formula_tol: 1e-5,
            refine_depth: 3,
            near_margin: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub s: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Signed distance of the sampled range to the ends of the interval.
    pub interval_margin: f64,
    /// Smallest singular value of `df` from the round metric.
    pub immersivity: f64,
    pub drift: Option<f64>,
    pub formula_residual: Option<f64>,
    pub inside: bool,
    pub pass: bool,
    pub refined: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyReport {
    pub kind: DeformationKind,
    pub label: String,
    pub interval: CurvatureInterval,
    pub mesh_level: u32,
    pub tau: f64,
    pub drift_tol: f64,
    pub formula_tol: f64,
    pub rows: Vec<StepRow>,
    pub pass: bool,
    /// Index into `rows` of the first failing step in `s` order.
    pub first_failure: Option<usize>,
}

impl HomotopyReport {
    pub fn max_drift(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.drift).reduce(f64::max)
    }

    pub fn max_formula_residual(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.formula_residual).reduce(f64::max)
    }

    pub fn lambda_range(&self) -> (f64, f64) {
        self.rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.lambda_min), hi.max(r.lambda_max))
        })
    }

    pub fn min_immersivity(&self) -> f64 {
        self.rows.iter().map(|r| r.immersivity).fold(f64::INFINITY, f64::min)
    }
}

/// Source data at a vertex and at its first-derivative stencil.
struct VertexCache {
    vertex: usize,
    center: SourceSample,
    h: f64,
    stencil: Vec<SourceSample>,
    reference: Option<DVector<f64>>,
}

struct VertexEval {
    lambdas: Vec<f64>,
    immersivity: f64,
    drift: Option<f64>,
    residual: Option<f64>,
}

fn build_cache(path: &DeformationPath, mesh: &SphereMesh) -> Result<Vec<VertexCache>> {
    let f = path.source.as_ref();
    let model = f.model();
    mesh.vertices()
        .par_iter()
        .enumerate()
        .map(|(vertex, q)| {
            let p = ChartPoint::from_sphere(q);
            let center = source_sample(f, &p)?;
            let (h, pts) = d1_stencil(&p, D1_DIFF_STEP);
            let stencil = pts.iter().map(|x| source_sample(f, x)).collect::<Result<Vec<_>>>()?;
            let reference = match path.invariant_map() {
                Some(kind) => Some(gauss_from_normal(kind, &model, &center.value, &center.normal)?),
                None => None,
            };
            Ok(VertexCache {
                vertex,
                center,
                h,
                stencil,
                reference,
            })
        })
        .collect()
}

fn eval_vertex(path: &DeformationPath, map: &dyn StageMap, s: f64, c: &VertexCache) -> Result<VertexEval> {
    let model = map.model();
    let (value, d1) = map.value_d1(&c.center)?;
    let d1s = c
        .stencil
        .iter()
        .map(|src| Ok(map.value_d1(src)?.1))
        .collect::<Result<Vec<_>>>()?;
    let jet = Jet2Sample {
        at: c.center.at.clone(),
        value,
        d1,
        d2: d2_from_d1_stencil(&d1s, c.h),
    };
    check_rank(&jet)?;
    let sd = shape_from_jet(&model, &jet)?;
    let drift = match (path.invariant_map(), &c.reference) {
        (Some(kind), Some(r)) => Some(unit_angle(&gauss_from_normal(kind, &model, &sd.value, &sd.normal)?, r)),
        _ => None,
    };
    let residual = match path.predicted_lambdas(s, &c.center) {
        Some(pred) => Some(
            pred?
                .iter()
                .zip(&sd.lambdas)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        ),
        None => None,
    };
    Ok(VertexEval {
        immersivity: immersivity_margin(&sd)?,
        lambdas: sd.lambdas,
        drift,
        residual,
    })
}

fn eval_step(path: &DeformationPath, caches: &[VertexCache], s: f64, opts: &TrackOptions) -> StepRow {
    let mut row = StepRow {
        s,
        lambda_min: f64::NAN,
        lambda_max: f64::NAN,
        interval_margin: f64::NAN,
        immersivity: f64::NAN,
        drift: None,
        formula_residual: None,
        inside: false,
        pass: false,
        refined: false,
        error: None,
    };
    let map = match path.map(s) {
        Ok(m) => m,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let evals: Vec<std::result::Result<VertexEval, (usize, GeometryError)>> = caches
        .par_iter()
        .map(|c| eval_vertex(path, map.as_ref(), s, c).map_err(|e| (c.vertex, e)))
        .collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut imm = f64::INFINITY;
    let mut drift: Option<f64> = None;
    let mut resid: Option<f64> = None;
    for e in evals {
        match e {
            Ok(v) => {
                lo = lo.min(v.lambdas[0]);
                hi = hi.max(*v.lambdas.last().expect("n >= 1"));
                imm = imm.min(v.immersivity);
                drift = v.drift.map(|d| drift.map_or(d, |x: f64| x.max(d)));
                resid = v.residual.map(|d| resid.map_or(d, |x: f64| x.max(d)));
            }
            Err((vertex, err)) => {
                if row.error.is_none() {
                    row.error = Some(format!("vertex {vertex}: {err}"));
                }
            }
        }
    }
    let a = path.interval.membership(lo);
    let b = path.interval.membership(hi);
    row.lambda_min = lo;
    row.lambda_max = hi;
    row.interval_margin = a.margin.min(b.margin);
    row.immersivity = imm;
    row.drift = drift;
    row.formula_residual = resid;
    row.inside = row.error.is_none() && a.inside && b.inside;
    row.pass = row.inside
        && imm > 0.0
        && drift.map_or(true, |d| d <= opts.drift_tol)
        && resid.map_or(true, |r| r <= opts.formula_tol);
    row
}

/// Evaluate the path on a uniform grid of `steps` values of `s`, bisecting
/// between neighbours around failing or nearly failing steps. Never fails:
/// problems are recorded in the rows.
pub fn track(path: &DeformationPath, mesh: &SphereMesh, opts: &TrackOptions) -> HomotopyReport {
    let steps = opts.steps.max(2);
    let mut report = HomotopyReport {
        kind: path.kind,
        label: path.label(),
        interval: path.interval,
        mesh_level: mesh.level(),
        tau: path.tau,
        drift_tol: opts.drift_tol,
        formula_tol: opts.formula_tol,
        rows: Vec::new(),
        pass: false,
        first_failure: None,
    };
    let caches = match build_cache(path, mesh) {
        Ok(c) => c,
        Err(e) => {
            report.rows.push(StepRow {
                s: 0.0,
                lambda_min: f64::NAN,
                lambda_max: f64::NAN,
                interval_margin: f64::NAN,
                immersivity: f64::NAN,
                drift: None,
                formula_residual: None,
                inside: false,
                pass: false,
                refined: false,
                error: Some(e.to_string()),
            });
            report.first_failure = Some(0);
            return report;
        }
    };
    let s_max = path.s_max();
    let mut rows: Vec<StepRow> = (0..steps)
        .map(|i| eval_step(path, &caches, s_max * i as f64 / (steps - 1) as f64, opts))
        .collect();
    let needs = |r: &StepRow| !r.pass || r.interval_margin < opts.near_margin;
    let mut frontier: Vec<(f64, f64)> = rows
        .windows(2)
        .filter(|w| needs(&w[0]) || needs(&w[1]))
        .map(|w| (w[0].s, w[1].s))
        .collect();
    for _ in 0..opts.refine_depth {
        let mut next = Vec::new();
        for (a, b) in frontier {
            let mid = 0.5 * (a + b);
            let mut row = eval_step(path, &caches, mid, opts);
            row.refined = true;
            if needs(&row) {
                next.push((a, mid));
                next.push((mid, b));
            }
            rows.push(row);
        }
        frontier = next;
    }
    rows.sort_by(|a, b| a.s.total_cmp(&b.s));
    report.first_failure = rows.iter().position(|r| !r.pass);
    report.pass = report.first_failure.is_none();
    report.rows = rows;
    report
}

/// Result of the search for a shrink factor that keeps the overlap path in
/// the interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSearch {
    /// `(k, tau_k)` of the first successful trial.
    pub found: Option<(u32, f64)>,
    /// `(k, tau_k, passed)` for every trial.
    pub attempts: Vec<(u32, f64, bool)>,
    /// Report of the successful trial, else of the last one.
    pub report: HomotopyReport,
}

/// Try `tau_k = 1 - 2^{-k} / 2` for `k = 1, .., max_k` in turn.
pub fn search_tau(
    f: SharedImmersion,
    mu: f64,
    interval: CurvatureInterval,
    mesh: &SphereMesh,
    opts: &TrackOptions,
    max_k: u32,
) -> Result<TauSearch> {
    let mut attempts = Vec::new();
    let mut last = None;
    // k = 0 gives the excluded endpoint 1/2.
    for k in 1..=max_k.max(1) {
        let tau = 1.0 - 0.5f64.powi(k as i32 + 1);
        let path = DeformationPath::overlap(f.clone(), mu, tau, interval)?;
        let report = track(&path, mesh, opts);
        attempts.push((k, tau, report.pass));
        if report.pass {
            return Ok(TauSearch {
                found: Some((k, tau)),
                attempts,
                report,
            });
        }
        last = Some(report);
    }
    Ok(TauSearch {
        found: None,
        attempts,
        report: last.expect("at least one trial"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make, Params};
    use crate::immersion::shape_data;

    #[test]
    fn flow_value_closed_forms() {
        for r in [0.1, 0.5, 1.0, 2.0, 4.0] {
            assert!((curvature_flow_value(0.0, r, 1.0).unwrap() + r.tanh()).abs() < 1e-15);
            assert!((curvature_flow_value(-1.0, r, 1.0).unwrap() + 1.0).abs() < 1e-15);
            let ell: f64 = 0.7;
            let v = curvature_flow_value(-1.0 / ell.tanh(), r, 1.0).unwrap();
            assert!((v + 1.0 / (ell + r).tanh()).abs() < 1e-12);
            let v = curvature_flow_value(ell.tanh(), r, 1.0).unwrap();
            assert!((v - (ell - r).tanh()).abs() < 1e-12);
        }
        assert!(curvature_flow_value(1.0, 0.5, 1.0).is_err());
        // kappa scaling
        let v = curvature_flow_value(-3.0, 0.25, 2.0).unwrap();
        assert!((v - 2.0 * curvature_flow_value(-1.5, 0.5, 1.0).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn stage_zero_is_the_source() {
        let f = make("bumpy_sphere", &Params::default()).unwrap();
        let path = DeformationPath::euclidean_retraction(f.clone(), -1.0, CurvatureInterval::below(0.0)).unwrap();
        assert!(Arc::ptr_eq(&path.stage(0.0).unwrap(), &f));
    }

    #[test]
    fn normal_flow_of_ball_sphere_stays_round() {
        let f = round_sphere(&SpaceFormModel::ball(3, 1.0).unwrap(), -2.0).unwrap();
        let g = normal_flow(&f, 0.5).unwrap();
        let p = ChartPoint::from_sphere(&DVector::from_vec(vec![0.6, 0.0, 0.8]));
        let sd = shape_data(g.as_ref(), &p).unwrap();
        let want = curvature_flow_value(-2.0, 0.5, 1.0).unwrap();
        for l in &sd.lambdas {
            assert!((l - want).abs() < 1e-8, "{l} vs {want}");
        }
    }

    #[test]
    fn normal_flow_rejects_euclidean_and_detects_degeneracy() {
        let iota = make("inclusion", &Params::default()).unwrap();
        assert!(normal_flow(&iota, 1.0).is_err());
        let flipped = make("ball_sphere", &Params { mu: Some(-2.0), reflect: Some(true), ..Default::default() }).unwrap();
        let g = normal_flow(&flipped, 1.0).unwrap();
        let p = ChartPoint::from_sphere(&DVector::from_vec(vec![0.0, 0.6, 0.8]));
        assert!(matches!(g.exact_d1(&p), Err(GeometryError::FlowDegenerate { .. })));
    }

    #[test]
    fn retraction_endpoints() {
        let f = make("ellipsoid", &Params { axes: Some(vec![2.0, 1.0, 1.0]), ..Default::default() }).unwrap();
        let g = euclidean_retraction(&f, -1.0, 1.0).unwrap();
        let p = ChartPoint::from_sphere(&DVector::from_vec(vec![0.48, 0.6, 0.64]));
        let nu = source_sample(f.as_ref(), &p).unwrap().normal;
        assert!((g.eval(&p).unwrap() - nu).norm() < 1e-12);
        assert!(euclidean_retraction(&f, 1.0, 0.5).is_err());
        assert!(DeformationPath::euclidean_retraction(f, -1.0, CurvatureInterval::above(0.0)).is_err());
    }

    #[test]
    fn switch_side_negates_curvatures_and_is_involutive() {
        let f = make("halfspace_sphere", &Params { mu: Some(-2.0), ..Default::default() }).unwrap();
        let i = CurvatureInterval::below(-1.0);
        let (g, j) = switch_side(&f, &i).unwrap();
        assert_eq!(j, CurvatureInterval::above(1.0));
        let p = ChartPoint::from_sphere(&DVector::from_vec(vec![0.0, 0.6, -0.8]));
        for l in shape_data(g.as_ref(), &p).unwrap().lambdas {
            assert!((l - 2.0).abs() < 1e-12);
        }
        let (h, k) = switch_side(&g, &j).unwrap();
        assert_eq!(k, i);
        let a = shape_data(h.as_ref(), &p).unwrap().lambdas;
        let b = shape_data(f.as_ref(), &p).unwrap().lambdas;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn visual_derivative_matches_finite_differences() {
        let f = make("bumpy_sphere", &Params { model: Some(ModelKind::Ball), ..Default::default() }).unwrap();
        let model = f.model();
        let p = ChartPoint::new(crate::chart::ChartId::South, DVector::from_vec(vec![0.3, -0.2]));
        let (_, de) = visual_value_d1(&model, &source_sample(f.as_ref(), &p).unwrap()).unwrap();
        let h = 1e-4;
        for i in 0..2 {
            let mut a = p.clone();
            a.x[i] += h;
            let mut b = p.clone();
            b.x[i] -= h;
            let ea = visual_value_d1(&model, &source_sample(f.as_ref(), &a).unwrap()).unwrap().0;
            let eb = visual_value_d1(&model, &source_sample(f.as_ref(), &b).unwrap()).unwrap().0;
            assert!(((ea - eb) / (2.0 * h) - de.column(i)).norm() < 1e-6);
        }
    }
}
