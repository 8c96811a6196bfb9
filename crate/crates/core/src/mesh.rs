//! Sample sets on `S^n` with quadrature weights.

use std::collections::HashMap;

use nalgebra::{DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GeometryError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    /// Subdivided icosahedron, `n = 2` only.
    Icosphere,
    /// Midpoint grid in hyperspherical coordinates.
    AngularGrid,
}

#[derive(Debug, Clone)]
pub struct SphereMesh {
    kind: MeshKind,
    dim: usize,
    level: u32,
    vertices: Vec<DVector<f64>>,
    weights: Vec<f64>,
    faces: Vec<[usize; 3]>,
}

/// Volume of the unit sphere `S^n`.
pub fn sphere_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * sphere_volume(n - 2),
    }
}

fn spherical_triangle_area(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let num = a.dot(&b.cross(c)).abs();
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

/// `int_a^b sin^k`.
fn sin_power_integral(k: u32, a: f64, b: f64) -> f64 {
    match k {
        0 => b - a,
        1 => a.cos() - b.cos(),
        _ => {
            let kf = k as f64;
            let edge = |t: f64| -t.sin().powi(k as i32 - 1) * t.cos() / kf;
            edge(b) - edge(a) + (kf - 1.0) / kf * sin_power_integral(k - 2, a, b)
        }
    }
}

impl SphereMesh {
    /// Icosphere with `10 * 4^level + 2` vertices. Vertex weights are a third
    /// of the areas of the incident spherical triangles, so they sum to `4 pi`.
    pub fn icosphere(level: u32) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ];
        let mut verts: Vec<Vector3<f64>> = raw
            .iter()
            .map(|v| Vector3::new(v[0], v[1], v[2]).normalize())
            .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
            let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
                let key = (a.min(b), a.max(b));
                *cache.entry(key).or_insert_with(|| {
                    verts.push((verts[a] + verts[b]).normalize());
                    verts.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for &[a, b, c] in &faces {
                let ab = mid(a, b, &mut verts);
                let bc = mid(b, c, &mut verts);
                let ca = mid(c, a, &mut verts);
                next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        for f in faces.iter_mut() {
            let (a, b, c) = (verts[f[0]], verts[f[1]], verts[f[2]]);
            if a.dot(&(b - a).cross(&(c - a))) < 0.0 {
                f.swap(1, 2);
            }
        }
        let mut weights = vec![0.0; verts.len()];
        for f in &faces {
            let area = spherical_triangle_area(&verts[f[0]], &verts[f[1]], &verts[f[2]]);
            for &i in f {
                weights[i] += area / 3.0;
            }
        }
        SphereMesh {
            kind: MeshKind::Icosphere,
            dim: 2,
            level,
            vertices: verts
                .into_iter()
                .map(|v| DVector::from_column_slice(v.as_slice()))
                .collect(),
            weights,
            faces,
        }
    }

    /// Cell-midpoint grid in hyperspherical coordinates with `2 + 2 level`
    /// cells per polar angle and twice that in azimuth. Weights are exact
    /// cell volumes.
    pub fn angular_grid(n: usize, level: u32) -> Result<Self> {
        if n < 2 {
            return Err(GeometryError::Dimension { expected: 2, got: n });
        }
        let k = 2 + 2 * level as usize;
        let polar: Vec<(f64, f64)> = (0..k)
            .map(|i| {
                let a = std::f64::consts::PI * i as f64 / k as f64;
                (a, a + std::f64::consts::PI / k as f64)
            })
            .collect();
        let az_cells = 2 * k;
        let dphi = 2.0 * std::f64::consts::PI / az_cells as f64;
        let mut vertices = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; n - 1];
        loop {
            let mut w = 1.0;
            let mut angles = Vec::with_capacity(n);
            for (j, &i) in idx.iter().enumerate() {
                let (a, b) = polar[i];
                w *= sin_power_integral((n - 1 - j) as u32, a, b);
                angles.push(0.5 * (a + b));
            }
            for l in 0..az_cells {
                let phi = (l as f64 + 0.5) * dphi;
                let mut q = DVector::zeros(n + 1);
                let mut prod = 1.0;
                for (j, th) in angles.iter().enumerate() {
                    q[j] = prod * th.cos();
                    prod *= th.sin();
                }
                q[n - 1] = prod * phi.cos();
                q[n] = prod * phi.sin();
                vertices.push(q);
                weights.push(w * dphi);
            }
            let mut j = n - 1;
            loop {
                if j == 0 {
                    return Ok(SphereMesh {
                        kind: MeshKind::AngularGrid,
                        dim: n,
                        level,
                        vertices,
                        weights,
                        faces: Vec::new(),
                    });
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < k {
                    break;
                }
                idx[j] = 0;
            }
        }
    }

    /// Icosphere for `n = 2`, angular grid otherwise.
    pub fn for_dim(n: usize, level: u32) -> Result<Self> {
        if n == 2 {
            Ok(Self::icosphere(level))
        } else {
            Self::angular_grid(n, level)
        }
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Outward-oriented triangles (icosphere only).
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Maximum angle between a vertex and its nearest neighbour; used when
    /// comparing sampled extrema across resolutions.
    pub fn spacing(&self) -> f64 {
        match self.kind {
            MeshKind::Icosphere => {
                let mut worst: f64 = 0.0;
                for f in &self.faces {
                    for e in 0..3 {
                        let a = &self.vertices[f[e]];
                        let b = &self.vertices[f[(e + 1) % 3]];
                        worst = worst.max(a.dot(b).clamp(-1.0, 1.0).acos());
                    }
                }
                worst
            }
            MeshKind::AngularGrid => std::f64::consts::PI / (2 + 2 * self.level as usize) as f64,
        }
    }
}

/// Deterministic uniform samples on `S^n`.
pub fn random_sphere_points(n: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v = DVector::from_fn(n + 1, |_, _| StandardNormal.sample(&mut rng));
            let len: f64 = v.norm();
            if len > 1e-6 {
                break v / len;
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_counts_and_weights() {
        for level in 0..=4 {
            let m = SphereMesh::icosphere(level);
            assert_eq!(m.len(), 10 * 4usize.pow(level) + 2);
            assert_eq!(m.faces().len(), 20 * 4usize.pow(level));
            assert!((m.total_weight() - 4.0 * PI).abs() < 1e-10);
            for v in m.vertices() {
                assert!((v.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn icosphere_faces_point_outward() {
        let m = SphereMesh::icosphere(2);
        for f in m.faces() {
            let [a, b, c] = f.map(|i| Vector3::from_column_slice(m.vertices()[i].as_slice()));
            assert!(a.dot(&(b - a).cross(&(c - a))) > 0.0);
        }
    }

    #[test]
    fn grid_weights_sum_to_volume() {
        for n in 2..=4 {
            for level in [1, 3] {
                let m = SphereMesh::angular_grid(n, level).unwrap();
                assert!((m.total_weight() - sphere_volume(n)).abs() < 1e-10, "n={n}");
                assert!(m.vertices().iter().all(|v| (v.norm() - 1.0).abs() < 1e-14));
            }
        }
        assert!((sphere_volume(2) - 4.0 * PI).abs() < 1e-15);
        assert!((sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-14);
    }

    #[test]
    fn grid_integrates_low_order_polynomials() {
        // int_{S^3} x_1^2 = 2 pi^2 / 4
        let m = SphereMesh::angular_grid(3, 6).unwrap();
        let s: f64 = m
            .vertices()
            .iter()
            .zip(m.weights())
            .map(|(v, w)| w * v[3] * v[3])
            .sum();
        assert!((s - PI * PI / 2.0).abs() < 3e-2);
    }

    #[test]
    fn random_points_are_reproducible() {
        let a = random_sphere_points(2, 5, 7);
        let b = random_sphere_points(2, 5, 7);
        assert_eq!(a, b);
        assert!(a.iter().all(|v| (v.norm() - 1.0).abs() < 1e-14));
    }
}
