//! Closed-form test immersions with exact jets, and the shipped manifest of
//! named entries with their expected curvature data.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{projection_jet, ChartId, ChartPoint, MapJet};
use crate::error::{GeometryError, Result};
use crate::gauss::{gauss_degree, predicted_orientation};
use crate::immersion::{
    compose_with_diffeo, shape_data, CurvatureRange, CurvatureSample, Extended, SharedImmersion,
    SphereDiffeo, SphereExtension,
};
use crate::interval::CurvatureInterval;
use crate::mesh::SphereMesh;
use crate::model::{ModelKind, SpaceFormModel};

const MANIFEST: &str = include_str!("../data/catalog.toml");

/// Affine map `q -> c + A q`.
#[derive(Debug, Clone)]
pub struct AffineSphere {
    model: SpaceFormModel,
    offset: DVector<f64>,
    matrix: DMatrix<f64>,
    label: String,
}

impl SphereExtension for AffineSphere {
    fn model(&self) -> SpaceFormModel {
        self.model
    }

    fn extension_jet(&self, q: &DVector<f64>) -> MapJet {
        let m = self.offset.len();
        MapJet {
            value: &self.offset + &self.matrix * q,
            d1: self.matrix.clone(),
            d2: vec![DMatrix::zeros(q.len(), q.len()); m],
        }
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

fn affine(model: SpaceFormModel, offset: DVector<f64>, matrix: DMatrix<f64>, label: String) -> SharedImmersion {
    Arc::new(Extended(AffineSphere {
        model,
        offset,
        matrix,
        label,
    }))
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(GeometryError::Dimension { expected: 2, got: n });
    }
    Ok(())
}

fn reflection_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n + 1, n + 1);
    m[(0, 0)] = -1.0;
    m
}

/// Round sphere of `E^{n+1}` with all principal curvatures `mu != 0`:
/// `-q / mu` for `mu < 0` and `rho(q) / mu` for `mu > 0`.
pub fn euclidean_sphere(n: usize, mu: f64) -> Result<SharedImmersion> {
    check_n(n)?;
    if mu == 0.0 || !mu.is_finite() {
        return Err(GeometryError::Regime(format!("no round sphere with curvature {mu}")));
    }
    let m = if mu < 0.0 {
        DMatrix::identity(n + 1, n + 1) * (-1.0 / mu)
    } else {
        reflection_matrix(n) / mu
    };
    Ok(affine(
        SpaceFormModel::euclidean(n + 1)?,
        DVector::zeros(n + 1),
        m,
        format!("euclidean_sphere(mu={mu})"),
    ))
}

/// Center height and radius of the half-space sphere `c + r q` centered on
/// the vertical axis with all principal curvatures `mu < -kappa`.
pub fn halfspace_sphere_params(mu: f64, kappa: f64) -> Result<(f64, f64)> {
    let m = mu / kappa;
    if !(m < -1.0) {
        return Err(GeometryError::Regime(format!(
            "half-space sphere needs mu < -kappa, got mu={mu}, kappa={kappa}"
        )));
    }
    Ok((m / (m + 1.0), -1.0 / (m + 1.0)))
}

pub fn halfspace_sphere(n: usize, mu: f64, kappa: f64) -> Result<SharedImmersion> {
    check_n(n)?;
    let model = SpaceFormModel::half_space(n + 1, kappa)?;
    let (c, r) = halfspace_sphere_params(mu, kappa)?;
    let mut offset = DVector::zeros(n + 1);
    offset[n] = c;
    Ok(affine(
        model,
        offset,
        DMatrix::identity(n + 1, n + 1) * r,
        format!("halfspace_sphere(mu={mu},kappa={kappa})"),
    ))
}

/// Euclidean radius of the origin-centered ball-model sphere with all
/// principal curvatures `mu < -kappa`.
pub fn ball_sphere_radius(mu: f64, kappa: f64) -> Result<f64> {
    let c = -mu / kappa;
    if !(c > 1.0) {
        return Err(GeometryError::Regime(format!(
            "ball sphere needs mu < -kappa, got mu={mu}, kappa={kappa}"
        )));
    }
    // (1 + t^2) / (2 t) = c, the root in (0, 1)
    Ok(1.0 / (c + (c * c - 1.0).sqrt()))
}

pub fn ball_sphere(n: usize, mu: f64, kappa: f64) -> Result<SharedImmersion> {
    check_n(n)?;
    let model = SpaceFormModel::ball(n + 1, kappa)?;
    let t = ball_sphere_radius(mu, kappa)?;
    Ok(affine(
        model,
        DVector::zeros(n + 1),
        DMatrix::identity(n + 1, n + 1) * t,
        format!("ball_sphere(mu={mu},kappa={kappa})"),
    ))
}

/// Geodesic sphere about the apex: `(sinh(kR) q, cosh(kR)) / k` with
/// `-k coth(kR) = mu`.
pub fn hyperboloid_sphere(n: usize, mu: f64, kappa: f64) -> Result<SharedImmersion> {
    check_n(n)?;
    let model = SpaceFormModel::hyperboloid(n + 1, kappa)?;
    let c = -mu / kappa;
    if !(c > 1.0) {
        return Err(GeometryError::Regime(format!(
            "hyperboloid sphere needs mu < -kappa, got mu={mu}, kappa={kappa}"
        )));
    }
    let kr = (1.0 / c).atanh();
    let mut offset = DVector::zeros(n + 2);
    offset[n + 1] = kr.cosh() / kappa;
    let mut m = DMatrix::zeros(n + 2, n + 1);
    for i in 0..=n {
        m[(i, i)] = kr.sinh() / kappa;
    }
    Ok(affine(model, offset, m, format!("hyperboloid_sphere(mu={mu},kappa={kappa})")))
}

/// Sum of `Re((q_a + i q_b)^l)` over the modes, with each mode in its own
/// coordinate plane. Harmonic on `R^{n+1}`.
#[derive(Debug, Clone)]
pub struct HarmonicBumps {
    terms: Vec<(usize, usize, u32)>,
}

impl HarmonicBumps {
    pub fn new(n: usize, modes: &[u32]) -> Result<Self> {
        let planes = [(0, 1), (1, n), (0, n)];
        if modes.is_empty() || modes.len() > planes.len() {
            return Err(GeometryError::Catalog(format!(
                "between 1 and {} modes are supported, got {}",
                planes.len(),
                modes.len()
            )));
        }
        if modes.iter().any(|&l| l == 0) {
            return Err(GeometryError::Catalog("mode degrees must be positive".into()));
        }
        Ok(HarmonicBumps {
            terms: modes
                .iter()
                .zip(planes)
                .map(|(&l, (a, b))| (a, b, l))
                .collect(),
        })
    }

    /// Value, gradient and Hessian at `q`.
    pub fn jet(&self, q: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let m = q.len();
        let mut v = 0.0;
        let mut grad = DVector::zeros(m);
        let mut hess = DMatrix::zeros(m, m);
        for &(a, b, l) in &self.terms {
            let z = Complex::new(q[a], q[b]);
            let lf = l as f64;
            v += z.powu(l).re;
            let d = z.powu(l - 1) * lf;
            grad[a] += d.re;
            grad[b] -= d.im;
            if l >= 2 {
                let dd = z.powu(l - 2) * (lf * (lf - 1.0));
                hess[(a, a)] += dd.re;
                hess[(b, b)] -= dd.re;
                hess[(a, b)] -= dd.im;
                hess[(b, a)] -= dd.im;
            }
        }
        (v, grad, hess)
    }
}

/// `q -> c + r (1 + eps P(q)) q`, optionally pushed to the hyperboloid from
/// the ball.
#[derive(Debug, Clone)]
pub struct RadialBumps {
    model: SpaceFormModel,
    center: DVector<f64>,
    radius: f64,
    eps: f64,
    bumps: HarmonicBumps,
    label: String,
}

impl SphereExtension for RadialBumps {
    fn model(&self) -> SpaceFormModel {
        self.model
    }

    fn extension_jet(&self, q: &DVector<f64>) -> MapJet {
        let m = q.len();
        let (p, gp, hp) = self.bumps.jet(q);
        let (r, e) = (self.radius, self.eps);
        let s = 1.0 + e * p;
        let value = &self.center + q * (r * s);
        let d1 = (DMatrix::identity(m, m) * s + q * gp.transpose() * e) * r;
        let d2 = (0..m)
            .map(|k| {
                let mut h = &hp * (r * e * q[k]);
                for j in 0..m {
                    h[(k, j)] += r * e * gp[j];
                    h[(j, k)] += r * e * gp[j];
                }
                h
            })
            .collect();
        let flat = MapJet { value, d1, d2 };
        match self.model.kind() {
            ModelKind::Hyperboloid => MapJet::compose(&ball_to_hyperboloid_jet(&flat.value, self.model.kappa()), &flat),
            _ => flat,
        }
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// `q -> c + r q + eps r P(q) e_{n+1}`.
#[derive(Debug, Clone)]
pub struct GraphBumps {
    model: SpaceFormModel,
    center: DVector<f64>,
    radius: f64,
    eps: f64,
    bumps: HarmonicBumps,
    label: String,
}

impl SphereExtension for GraphBumps {
    fn model(&self) -> SpaceFormModel {
        self.model
    }

    fn extension_jet(&self, q: &DVector<f64>) -> MapJet {
        let m = q.len();
        let (p, gp, hp) = self.bumps.jet(q);
        let (r, e) = (self.radius, self.eps);
        let mut value = &self.center + q * r;
        value[m - 1] += e * r * p;
        let mut d1 = DMatrix::identity(m, m) * r;
        for j in 0..m {
            d1[(m - 1, j)] += e * r * gp[j];
        }
        let mut d2 = vec![DMatrix::zeros(m, m); m];
        d2[m - 1] = hp * (e * r);
        MapJet { value, d1, d2 }
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Exact 2-jet of the ball-to-hyperboloid isometry
/// `b -> (2 b, 1 + |b|^2) / (k (1 - |b|^2))`.
pub fn ball_to_hyperboloid_jet(b: &DVector<f64>, kappa: f64) -> MapJet {
    let m = b.len();
    let u = 1.0 / (1.0 - b.norm_squared());
    let gu = b * (2.0 * u * u);
    let hu = DMatrix::identity(m, m) * (2.0 * u * u) + (b * b.transpose()) * (8.0 * u * u * u);
    let mut value = DVector::zeros(m + 1);
    let mut d1 = DMatrix::zeros(m + 1, m);
    let mut d2 = Vec::with_capacity(m + 1);
    for k in 0..m {
        value[k] = 2.0 * b[k] * u / kappa;
        for i in 0..m {
            d1[(k, i)] = 2.0 * (if i == k { u } else { 0.0 } + b[k] * gu[i]) / kappa;
        }
        let mut h = &hu * (2.0 * b[k] / kappa);
        for j in 0..m {
            h[(k, j)] += 2.0 * gu[j] / kappa;
            h[(j, k)] += 2.0 * gu[j] / kappa;
        }
        d2.push(h);
    }
    value[m] = (2.0 * u - 1.0) / kappa;
    for i in 0..m {
        d1[(m, i)] = 2.0 * gu[i] / kappa;
    }
    d2.push(hu * (2.0 / kappa));
    MapJet { value, d1, d2 }
}

/// Local hypersurfaces of the half-space parametrized through the north
/// chart. They are immersions of `S^n` minus the north pole only.
#[derive(Debug, Clone)]
pub enum Patch {
    /// `y -> (y, 1)`.
    Horosphere,
    /// `y -> (sinh(l) e^{y_n}, y_1, .., y_{n-1}, e^{y_n})`, at distance
    /// `l / kappa` from the totally geodesic hyperplane `q_1 = 0`.
    Equidistant { ell: f64 },
}

#[derive(Debug, Clone)]
pub struct PatchImmersion {
    model: SpaceFormModel,
    patch: Patch,
}

impl SphereExtension for PatchImmersion {
    fn model(&self) -> SpaceFormModel {
        self.model
    }

    fn extension_jet(&self, q: &DVector<f64>) -> MapJet {
        let y = projection_jet(q, ChartId::North);
        let n = y.value.len();
        let inner = match self.patch {
            Patch::Horosphere => {
                let mut value = y.value.clone().push(1.0);
                value[n] = 1.0;
                let mut d1 = DMatrix::zeros(n + 1, n);
                for i in 0..n {
                    d1[(i, i)] = 1.0;
                }
                MapJet {
                    value,
                    d1,
                    d2: vec![DMatrix::zeros(n, n); n + 1],
                }
            }
            Patch::Equidistant { ell } => {
                let t = y.value[n - 1].exp();
                let s = ell.sinh();
                let mut value = DVector::zeros(n + 1);
                let mut d1 = DMatrix::zeros(n + 1, n);
                let mut d2 = vec![DMatrix::zeros(n, n); n + 1];
                value[0] = s * t;
                d1[(0, n - 1)] = s * t;
                d2[0][(n - 1, n - 1)] = s * t;
                for i in 0..n - 1 {
                    value[i + 1] = y.value[i];
                    d1[(i + 1, i)] = 1.0;
                }
                value[n] = t;
                d1[(n, n - 1)] = t;
                d2[n][(n - 1, n - 1)] = t;
                MapJet { value, d1, d2 }
            }
        };
        MapJet::compose(&inner, &y)
    }

    fn label(&self) -> String {
        match self.patch {
            Patch::Horosphere => "horosphere_patch".into(),
            Patch::Equidistant { ell } => format!("equidistant_patch(ell={ell})"),
        }
    }
}

/// Constructor parameters; which fields are needed depends on the entry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    /// Pre-compose with the reflection of the first coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflect: Option<bool>,
}

fn need<T: Copy>(v: Option<T>, field: &str, name: &str) -> Result<T> {
    v.ok_or_else(|| GeometryError::Catalog(format!("`{name}` needs parameter `{field}`")))
}

pub const ENTRY_NAMES: &[&str] = &[
    "inclusion",
    "minus_inclusion",
    "reflected",
    "scaled_sphere",
    "halfspace_sphere",
    "ball_sphere",
    "hyperboloid_sphere",
    "ellipsoid",
    "bumpy_sphere",
    "graph_halfspace_sphere",
    "horosphere_patch",
    "equidistant_patch",
];

/// Build a catalog immersion.
pub fn make(name: &str, params: &Params) -> Result<SharedImmersion> {
    let n = params.n.unwrap_or(2);
    check_n(n)?;
    let kappa = params.kappa.unwrap_or(1.0);
    let base: SharedImmersion = match name {
        "inclusion" => euclidean_sphere(n, -1.0)?,
        "minus_inclusion" => affine(
            SpaceFormModel::euclidean(n + 1)?,
            DVector::zeros(n + 1),
            -DMatrix::identity(n + 1, n + 1),
            "minus_inclusion".into(),
        ),
        "reflected" => euclidean_sphere(n, 1.0)?,
        "scaled_sphere" => euclidean_sphere(n, need(params.mu, "mu", name)?)?,
        "halfspace_sphere" => halfspace_sphere(n, need(params.mu, "mu", name)?, kappa)?,
        "ball_sphere" => ball_sphere(n, need(params.mu, "mu", name)?, kappa)?,
        "hyperboloid_sphere" => hyperboloid_sphere(n, need(params.mu, "mu", name)?, kappa)?,
        "ellipsoid" => {
            let axes = params
                .axes
                .clone()
                .ok_or_else(|| GeometryError::Catalog("`ellipsoid` needs parameter `axes`".into()))?;
            check_n(axes.len().saturating_sub(1))?;
            if axes.iter().any(|a| !(*a > 0.0)) {
                return Err(GeometryError::Regime("ellipsoid axes must be positive".into()));
            }
            let m = axes.len();
            affine(
                SpaceFormModel::euclidean(m)?,
                DVector::zeros(m),
                DMatrix::from_diagonal(&DVector::from_vec(axes.clone())),
                format!("ellipsoid{axes:?}"),
            )
        }
        "bumpy_sphere" => bumpy_sphere(params, n, kappa)?,
        "graph_halfspace_sphere" => {
            let mu = need(params.mu, "mu", name)?;
            let (c, r) = halfspace_sphere_params(mu, kappa)?;
            let eps = params.eps.unwrap_or(0.05);
            let modes = params.modes.clone().unwrap_or_else(|| vec![2]);
            let mut center = DVector::zeros(n + 1);
            center[n] = c;
            Arc::new(Extended(GraphBumps {
                model: SpaceFormModel::half_space(n + 1, kappa)?,
                center,
                radius: r,
                eps,
                bumps: HarmonicBumps::new(n, &modes)?,
                label: format!("graph_halfspace_sphere(mu={mu},eps={eps},modes={modes:?})"),
            }))
        }
        "horosphere_patch" => Arc::new(Extended(PatchImmersion {
            model: SpaceFormModel::half_space(n + 1, kappa)?,
            patch: Patch::Horosphere,
        })),
        "equidistant_patch" => Arc::new(Extended(PatchImmersion {
            model: SpaceFormModel::half_space(n + 1, kappa)?,
            patch: Patch::Equidistant {
                ell: need(params.ell, "ell", name)?,
            },
        })),
        other => return Err(GeometryError::UnknownEntry(other.to_string())),
    };
    if params.reflect.unwrap_or(false) {
        let c = compose_with_diffeo(base, SphereDiffeo::reflection(n))?;
        Ok(c.immersion)
    } else {
        Ok(base)
    }
}

fn bumpy_sphere(params: &Params, n: usize, kappa: f64) -> Result<SharedImmersion> {
    let kind = params.model.unwrap_or(ModelKind::Euclidean);
    let eps = params.eps.unwrap_or(0.05);
    let modes = params.modes.clone().unwrap_or_else(|| vec![2]);
    if !(eps.abs() < 0.5) {
        return Err(GeometryError::Regime(format!("bump amplitude {eps} is too large")));
    }
    let model = match kind {
        ModelKind::Euclidean => SpaceFormModel::euclidean(n + 1)?,
        k => SpaceFormModel::new(k, n + 1, kappa)?,
    };
    let mu = params.mu.unwrap_or(if kind == ModelKind::Euclidean { -1.0 } else { -2.0 * kappa });
    let mut center = DVector::zeros(n + 1);
    let radius = match kind {
        ModelKind::Euclidean => {
            if !(mu < 0.0) {
                return Err(GeometryError::Regime("euclidean bumpy sphere needs mu < 0".into()));
            }
            -1.0 / mu
        }
        ModelKind::HalfSpace => {
            let (c, r) = halfspace_sphere_params(mu, kappa)?;
            center[n] = c;
            r
        }
        ModelKind::Ball | ModelKind::Hyperboloid => ball_sphere_radius(mu, kappa)?,
    };
    Ok(Arc::new(Extended(RadialBumps {
        model,
        center,
        radius,
        eps,
        bumps: HarmonicBumps::new(n, &modes)?,
        label: format!("bumpy_sphere({kind},mu={mu},eps={eps},modes={modes:?})"),
    })))
}

/// How an entry's curvature expectation was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    /// `lambda` is the exact sampled minimum and maximum.
    ClosedForm,
    /// `lambda` is a band containing every sampled value.
    SampledBand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub id: String,
    pub constructor: String,
    #[serde(default)]
    pub params: Params,
    /// Constraint interval the entry is meant to satisfy.
    pub interval: CurvatureInterval,
    pub lambda: [f64; 2],
    pub expectation: Expectation,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Degree of the designated Gauss map, where known.
    #[serde(default)]
    pub degree: Option<i64>,
    #[serde(default = "default_closed")]
    pub closed: bool,
    #[serde(default)]
    pub note: String,
}

fn default_tol() -> f64 {
    1e-5
}

fn default_closed() -> bool {
    true
}

impl CatalogEntry {
    pub fn build(&self) -> Result<SharedImmersion> {
        make(&self.constructor, &self.params)
    }

    pub fn kappa(&self) -> Result<f64> {
        Ok(self.build()?.model().kappa())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    #[serde(rename = "entry")]
    pub entries: Vec<CatalogEntry>,
}

/// Comparison of an entry against its manifest expectations.
#[derive(Debug, Clone, Serialize)]
pub struct EntryValidation {
    pub id: String,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub in_interval: bool,
    pub matches_expectation: bool,
    pub degree: Option<i64>,
    pub degree_ok: bool,
    pub detail: String,
}

impl EntryValidation {
    pub fn ok(&self) -> bool {
        self.in_interval && self.matches_expectation && self.degree_ok
    }
}

/// Sample points used for an entry: all mesh vertices for closed entries,
/// the lower part of the sphere for chart patches.
pub fn entry_points(entry: &CatalogEntry, mesh: &SphereMesh) -> Vec<ChartPoint> {
    mesh.vertices()
        .iter()
        .filter(|q| entry.closed || q[q.len() - 1] < 0.3)
        .map(ChartPoint::from_sphere)
        .collect()
}

pub fn sample_entry(entry: &CatalogEntry, f: &SharedImmersion, mesh: &SphereMesh) -> Result<Vec<CurvatureSample>> {
    entry_points(entry, mesh)
        .into_par_iter()
        .enumerate()
        .map(|(i, p)| {
            let sd = shape_data(f.as_ref(), &p)?;
            Ok(CurvatureSample {
                vertex: i,
                gaussian: sd.lambdas.iter().product(),
                lambdas: sd.lambdas,
                at: p,
            })
        })
        .collect()
}

impl Catalog {
    pub fn parse(text: &str) -> Result<Self> {
        let cat: Catalog = toml::from_str(text).map_err(|e| GeometryError::Catalog(e.to_string()))?;
        let mut seen = std::collections::HashSet::new();
        for e in &cat.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(GeometryError::Catalog(format!("duplicate id `{}`", e.id)));
            }
            if !ENTRY_NAMES.contains(&e.constructor.as_str()) {
                return Err(GeometryError::UnknownEntry(e.constructor.clone()));
            }
            if !(e.lambda[0] <= e.lambda[1]) {
                return Err(GeometryError::Catalog(format!("`{}`: lambda band is reversed", e.id)));
            }
        }
        Ok(cat)
    }

    /// The manifest shipped with the library.
    pub fn shipped() -> Self {
        Self::parse(MANIFEST).expect("shipped catalog manifest parses")
    }

    pub fn manifest_text() -> &'static str {
        MANIFEST
    }

    pub fn get(&self, id: &str) -> Result<&CatalogEntry> {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| GeometryError::UnknownEntry(id.to_string()))
    }

    /// Build an entry by id.
    pub fn make(&self, id: &str) -> Result<SharedImmersion> {
        self.get(id)?.build()
    }

    /// Re-derive every entry's curvature data on `mesh_for(n)` and compare
    /// with the manifest. Degrees are checked on `degree_level` icospheres
    /// for closed surfaces with `n = 2`.
    pub fn validate(&self, level: u32, degree_level: Option<u32>) -> Result<Vec<EntryValidation>> {
        let mut out = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            out.push(validate_entry(e, level, degree_level)?);
        }
        Ok(out)
    }

    /// Build and validate, failing on the first mismatch.
    pub fn load_validated(level: u32) -> Result<Self> {
        let cat = Self::shipped();
        for v in cat.validate(level, None)? {
            if !v.ok() {
                return Err(GeometryError::Catalog(format!("entry `{}`: {}", v.id, v.detail)));
            }
        }
        Ok(cat)
    }
}

pub fn validate_entry(e: &CatalogEntry, level: u32, degree_level: Option<u32>) -> Result<EntryValidation> {
    let f = e.build()?;
    let mesh = SphereMesh::for_dim(f.dim(), level)?;
    let samples = sample_entry(e, &f, &mesh)?;
    let range = CurvatureRange::from_samples(&samples, Some(&e.interval));
    let in_interval = samples
        .iter()
        .all(|s| s.lambdas.iter().all(|&l| e.interval.membership(l).inside));
    let [lo, hi] = e.lambda;
    let matches = match e.expectation {
        Expectation::ClosedForm => (range.min - lo).abs() <= e.tol && (range.max - hi).abs() <= e.tol,
        Expectation::SampledBand => range.min >= lo - e.tol && range.max <= hi + e.tol,
    };
    let mut detail = format!(
        "sampled [{:.9}, {:.9}] vs expected [{lo}, {hi}] ({:?})",
        range.min, range.max, e.expectation
    );
    let (mut degree, mut degree_ok) = (None, true);
    if let (Some(expected), Some(dl), true, 2) = (e.degree, degree_level, e.closed, f.dim()) {
        let model = f.model();
        let (map, _) = predicted_orientation(model.kind(), model.kappa(), f.dim(), &e.interval)?;
        let rep = gauss_degree(map, f.as_ref(), &SphereMesh::icosphere(dl))?;
        degree = Some(rep.rounded);
        degree_ok = rep.rounded == expected;
        detail.push_str(&format!("; {map} degree {} (raw {:.6})", rep.rounded, rep.raw));
    }
    Ok(EntryValidation {
        id: e.id.clone(),
        lambda_min: range.min,
        lambda_max: range.max,
        in_interval,
        matches_expectation: matches,
        degree,
        degree_ok,
        detail,
    })
}
