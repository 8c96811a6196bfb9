//! Stereographic charts of the unit sphere `S^n` and exact 2-jets of maps
//! between coordinate spaces.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

/// Stereographic chart, named after its projection pole.
///
/// `North` projects from `+e_{n+1}` and covers everything except the north
/// pole; `South` projects from `-e_{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartId {
    North,
    South,
}

impl ChartId {
    pub fn other(self) -> ChartId {
        match self {
            ChartId::North => ChartId::South,
            ChartId::South => ChartId::North,
        }
    }

    /// Sign of `det[d phi(e_1), .., d phi(e_n), phi(x)]`, constant over the chart.
    pub fn orientation_sign(self) -> f64 {
        match self {
            ChartId::North => -1.0,
            ChartId::South => 1.0,
        }
    }

    fn pole_sign(self) -> f64 {
        match self {
            ChartId::North => 1.0,
            ChartId::South => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChartId::North => "north",
            ChartId::South => "south",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub chart: ChartId,
    pub x: DVector<f64>,
}

impl fmt::Display for ChartPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.chart.name())?;
        for (i, v) in self.x.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v:.6}")?;
        }
        write!(f, ")")
    }
}

/// Value, first and second derivatives of a map `R^a -> R^b` at a point.
/// `d2[k]` is the symmetric Hessian of component `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapJet {
    pub value: DVector<f64>,
    pub d1: DMatrix<f64>,
    pub d2: Vec<DMatrix<f64>>,
}

impl MapJet {
    /// Jet of a linear map `x -> a x` at `x`.
    pub fn linear(a: &DMatrix<f64>, x: &DVector<f64>) -> MapJet {
        let n = a.ncols();
        MapJet {
            value: a * x,
            d1: a.clone(),
            d2: vec![DMatrix::zeros(n, n); a.nrows()],
        }
    }

    pub fn identity(x: &DVector<f64>) -> MapJet {
        let n = x.len();
        MapJet::linear(&DMatrix::identity(n, n), x)
    }

    /// Jet of `outer o inner`, where `outer` is taken at `inner.value`.
    pub fn compose(outer: &MapJet, inner: &MapJet) -> MapJet {
        let d1 = &outer.d1 * &inner.d1;
        let d2 = (0..outer.value.len())
            .map(|k| {
                let mut h = inner.d1.transpose() * &outer.d2[k] * &inner.d1;
                for (m, hm) in inner.d2.iter().enumerate() {
                    let c = outer.d1[(k, m)];
                    if c != 0.0 {
                        h += hm * c;
                    }
                }
                h
            })
            .collect();
        MapJet {
            value: outer.value.clone(),
            d1,
            d2,
        }
    }

    pub fn scale(&self, c: f64) -> MapJet {
        MapJet {
            value: &self.value * c,
            d1: &self.d1 * c,
            d2: self.d2.iter().map(|h| h * c).collect(),
        }
    }

    /// Affine combination `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &MapJet, b: f64) -> MapJet {
        MapJet {
            value: &self.value * a + &other.value * b,
            d1: &self.d1 * a + &other.d1 * b,
            d2: self
                .d2
                .iter()
                .zip(&other.d2)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        }
    }
}

impl ChartPoint {
    pub fn new(chart: ChartId, x: DVector<f64>) -> Self {
        ChartPoint { chart, x }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Chart point of a unit vector, using the chart whose pole is farther
    /// away so that `|x| <= 1`.
    pub fn from_sphere(q: &DVector<f64>) -> ChartPoint {
        let last = q[q.len() - 1];
        let chart = if last <= 0.0 {
            ChartId::North
        } else {
            ChartId::South
        };
        Self::in_chart(q, chart)
    }

    /// Coordinates of `q` in a given chart (the pole itself is not covered).
    pub fn in_chart(q: &DVector<f64>, chart: ChartId) -> ChartPoint {
        let n = q.len() - 1;
        let denom = 1.0 - chart.pole_sign() * q[n];
        ChartPoint {
            chart,
            x: q.rows(0, n) / denom,
        }
    }

    pub fn to_sphere(&self) -> DVector<f64> {
        let n = self.x.len();
        let r2 = self.x.norm_squared();
        let d = 1.0 + r2;
        let mut q = DVector::zeros(n + 1);
        for i in 0..n {
            q[i] = 2.0 * self.x[i] / d;
        }
        q[n] = self.chart.pole_sign() * (r2 - 1.0) / d;
        q
    }

    /// The same sphere point in the other chart: `x -> x / |x|^2`.
    pub fn transition(&self) -> Result<ChartPoint> {
        let r2 = self.x.norm_squared();
        if r2 == 0.0 {
            return Err(GeometryError::Domain {
                model: "sphere chart",
                detail: "chart origin is the pole of the other chart".into(),
            });
        }
        Ok(ChartPoint {
            chart: self.chart.other(),
            x: &self.x / r2,
        })
    }

    /// Exact 2-jet of the inverse stereographic projection at this point.
    pub fn sphere_jet(&self) -> MapJet {
        let n = self.x.len();
        let x = &self.x;
        let d = 1.0 + x.norm_squared();
        let s = self.chart.pole_sign();
        let value = self.to_sphere();
        let mut d1 = DMatrix::zeros(n + 1, n);
        for i in 0..n {
            for j in 0..n {
                let delta = if i == j { 2.0 / d } else { 0.0 };
                d1[(i, j)] = delta - 4.0 * x[i] * x[j] / (d * d);
            }
        }
        for j in 0..n {
            d1[(n, j)] = s * 4.0 * x[j] / (d * d);
        }
        let mut d2 = Vec::with_capacity(n + 1);
        for i in 0..n {
            let h = DMatrix::from_fn(n, n, |j, k| {
                let mut t = 0.0;
                if i == j {
                    t += x[k];
                }
                if i == k {
                    t += x[j];
                }
                if j == k {
                    t += x[i];
                }
                -4.0 * t / (d * d) + 16.0 * x[i] * x[j] * x[k] / (d * d * d)
            });
            d2.push(h);
        }
        d2.push(DMatrix::from_fn(n, n, |j, k| {
            let delta = if j == k { 4.0 / (d * d) } else { 0.0 };
            s * (delta - 16.0 * x[j] * x[k] / (d * d * d))
        }));
        MapJet { value, d1, d2 }
    }
}

/// Exact 2-jet of the stereographic projection `R^{n+1} -> R^n` of `chart`
/// at `q` (extended off the sphere by the same formula).
pub fn projection_jet(q: &DVector<f64>, chart: ChartId) -> MapJet {
    let n = q.len() - 1;
    let s = chart.pole_sign();
    let t = 1.0 - s * q[n];
    let value = q.rows(0, n) / t;
    let mut d1 = DMatrix::zeros(n, n + 1);
    for i in 0..n {
        d1[(i, i)] = 1.0 / t;
        d1[(i, n)] = s * q[i] / (t * t);
    }
    let d2 = (0..n)
        .map(|i| {
            let mut h = DMatrix::zeros(n + 1, n + 1);
            h[(i, n)] = s / (t * t);
            h[(n, i)] = s / (t * t);
            h[(n, n)] = 2.0 * q[i] / (t * t * t);
            h
        })
        .collect();
    MapJet { value, d1, d2 }
}

/// Sign-corrected orientation test of the chart basis at a point.
pub fn chart_frame_sign(p: &ChartPoint) -> f64 {
    let jet = p.sphere_jet();
    let n = p.dim();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n + 1, n)).copy_from(&jet.d1);
    m.set_column(n, &jet.value);
    m.determinant().signum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jet(p: &ChartPoint) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let n = p.dim();
        let h = 1e-4;
        let f = |x: &DVector<f64>| ChartPoint::new(p.chart, x.clone()).to_sphere();
        let mut d1 = DMatrix::zeros(n + 1, n);
        let mut d2 = vec![DMatrix::zeros(n, n); n + 1];
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = h;
            let col = (f(&(&p.x + &e)) - f(&(&p.x - &e))) / (2.0 * h);
            d1.set_column(j, &col);
            for k in 0..n {
                let mut e2 = DVector::zeros(n);
                e2[k] = h;
                let v = (f(&(&p.x + &e + &e2)) - f(&(&p.x + &e - &e2)) - f(&(&p.x - &e + &e2))
                    + f(&(&p.x - &e - &e2)))
                    / (4.0 * h * h);
                for c in 0..=n {
                    d2[c][(j, k)] = v[c];
                }
            }
        }
        (d1, d2)
    }

    #[test]
    fn sphere_jet_matches_finite_differences() {
        for chart in [ChartId::North, ChartId::South] {
            let p = ChartPoint::new(chart, DVector::from_vec(vec![0.3, -0.7, 0.2]));
            let jet = p.sphere_jet();
            assert!((jet.value.norm() - 1.0).abs() < 1e-15);
            let (d1, d2) = fd_jet(&p);
            assert!((jet.d1 - d1).norm() < 1e-7);
            for (a, b) in jet.d2.iter().zip(&d2) {
                assert!((a - b).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn transition_round_trip() {
        let q = DVector::from_vec(vec![0.48, -0.6, 0.64]);
        let p = ChartPoint::in_chart(&q, ChartId::North);
        let other = p.transition().unwrap();
        assert!((other.to_sphere() - &q).norm() < 1e-12);
        assert!((other.x.clone() - ChartPoint::in_chart(&q, ChartId::South).x).norm() < 1e-12);
        let back = other.transition().unwrap();
        assert!((back.x - p.x).norm() < 1e-12);
        assert!(ChartPoint::new(ChartId::South, DVector::zeros(2))
            .transition()
            .is_err());
    }

    #[test]
    fn chart_orientation_signs() {
        for chart in [ChartId::North, ChartId::South] {
            for x in [vec![0.0, 0.0], vec![0.5, -1.2], vec![3.0, 4.0]] {
                let p = ChartPoint::new(chart, DVector::from_vec(x));
                assert_eq!(chart_frame_sign(&p), chart.orientation_sign());
            }
        }
    }

    #[test]
    fn projection_inverts_sphere_jet() {
        let p = ChartPoint::new(ChartId::South, DVector::from_vec(vec![0.4, 0.1]));
        let q = p.sphere_jet();
        let proj = projection_jet(&q.value, ChartId::South);
        let id = MapJet::compose(&proj, &q);
        assert!((&id.value - &p.x).norm() < 1e-15);
        assert!((id.d1 - DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
        for h in id.d2 {
            assert!(h.norm() < 1e-13);
        }
    }

    #[test]
    fn from_sphere_keeps_points_inside_unit_disk() {
        for q in [
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, -1.0],
            vec![0.6, 0.0, 0.8],
            vec![1.0, 0.0, 0.0],
        ] {
            let q = DVector::from_vec(q);
            let p = ChartPoint::from_sphere(&q);
            assert!(p.x.norm() <= 1.0 + 1e-15);
            assert!((p.to_sphere() - q).norm() < 1e-15);
        }
    }
}
