//! Gauss–Legendre rules and spherical-cap node sets.
//!
//! A cap of angular radius ρ around a center direction is parametrised by
//! μ = cos(colatitude) ∈ [cos ρ, 1] in a local frame whose pole is the center,
//! and by the local azimuth β ∈ [0, 2π). μ gets Gauss–Legendre nodes, β a
//! uniform trapezoid rule. The weights sum to the cap area 2π(1 − cos ρ).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cross, norm, Vec3};

pub const MIN_POLAR_NODES: usize = 4;
pub const MIN_AZIMUTH_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub polar_nodes: usize,
    pub azimuth_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            polar_nodes: 64,
            azimuth_nodes: 128,
        }
    }
}

impl QuadratureSpec {
    pub fn new(polar_nodes: usize, azimuth_nodes: usize) -> Result<Self> {
        let spec = Self {
            polar_nodes,
            azimuth_nodes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.polar_nodes < MIN_POLAR_NODES || self.azimuth_nodes < MIN_AZIMUTH_NODES {
            return Err(Error::invalid(format!(
                "quadrature needs at least {MIN_POLAR_NODES}×{MIN_AZIMUTH_NODES} nodes, got {}×{}",
                self.polar_nodes, self.azimuth_nodes
            )));
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        Self {
            polar_nodes: 2 * self.polar_nodes,
            azimuth_nodes: 2 * self.azimuth_nodes,
        }
    }

    pub fn halved(&self) -> Self {
        Self {
            polar_nodes: (self.polar_nodes / 2).max(MIN_POLAR_NODES),
            azimuth_nodes: (self.azimuth_nodes / 2).max(MIN_AZIMUTH_NODES),
        }
    }

    /// A rule resolving plane waves over the full sphere for element
    /// separations up to `k_times_extent` radians of phase.
    pub fn for_full_sphere(k_times_extent: f64) -> Self {
        let m = k_times_extent.ceil() as usize;
        Self {
            polar_nodes: (m / 2 + 48).max(64),
            azimuth_nodes: (2 * (m + 40)).max(128),
        }
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Weighted directions covering part of the unit sphere.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn orthonormal_frame(pole: &Vec3) -> (Vec3, Vec3) {
    // any axis not parallel to the pole
    let helper = if pole[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let e1 = cross(&helper, pole);
    let n1 = norm(&e1);
    let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    let e2 = cross(pole, &e1);
    (e1, e2)
}

/// Nodes for the band `mu_low ≤ cos(colatitude) ≤ mu_high` around `pole`.
fn band_rule(pole: &Vec3, mu_low: f64, mu_high: f64, spec: &QuadratureSpec) -> Result<SphereRule> {
    spec.validate()?;
    let (e1, e2) = if pole == &[0.0, 0.0, 1.0] {
        ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    } else {
        orthonormal_frame(pole)
    };
    let (x, w) = gauss_legendre(spec.polar_nodes);
    let half = 0.5 * (mu_high - mu_low);
    let mid = 0.5 * (mu_high + mu_low);
    let daz = 2.0 * PI / spec.azimuth_nodes as f64;
    let mut directions = Vec::with_capacity(spec.polar_nodes * spec.azimuth_nodes);
    let mut weights = Vec::with_capacity(directions.capacity());
    for (xi, wi) in x.iter().zip(&w) {
        let mu = mid + half * xi;
        let s = (1.0 - mu * mu).max(0.0).sqrt();
        let weight = wi * half * daz;
        for m in 0..spec.azimuth_nodes {
            let (sb, cb) = (m as f64 * daz).sin_cos();
            let u = [
                mu * pole[0] + s * (cb * e1[0] + sb * e2[0]),
                mu * pole[1] + s * (cb * e1[1] + sb * e2[1]),
                mu * pole[2] + s * (cb * e1[2] + sb * e2[2]),
            ];
            directions.push(u);
            weights.push(weight);
        }
    }
    Ok(SphereRule {
        directions,
        weights,
    })
}

/// Cap of `radius` (0 < radius ≤ π) around the unit vector `center`.
pub fn cap_rule(center: &Vec3, radius: f64, spec: &QuadratureSpec) -> Result<SphereRule> {
    if !(radius > 0.0 && radius <= PI) {
        return Err(Error::invalid(format!("cap radius must lie in (0, π], got {radius}")));
    }
    let n = norm(center);
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("cap center must be a unit vector"));
    }
    band_rule(center, radius.cos(), 1.0, spec)
}

pub fn full_sphere_rule(spec: &QuadratureSpec) -> Result<SphereRule> {
    band_rule(&[0.0, 0.0, 1.0], -1.0, 1.0, spec)
}

/// The z ≥ 0 half of the sphere.
pub fn upper_hemisphere_rule(spec: &QuadratureSpec) -> Result<SphereRule> {
    band_rule(&[0.0, 0.0, 1.0], 0.0, 1.0, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 64, 200] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
            // exact for degree ≤ 2n-1
            for deg in 0..(2 * n).min(40) {
                let quad: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((quad - exact).abs() < 1e-12, "n={n} deg={deg}: {quad} vs {exact}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn cap_weights_sum_to_cap_area() {
        let spec = QuadratureSpec::default();
        for rho in [0.01, 0.05, 0.7, 2.0, PI] {
            let c = crate::geometry::direction_unit_vector(0.3, 1.1);
            let rule = cap_rule(&c, rho, &spec).unwrap();
            let area = 2.0 * PI * (1.0 - rho.cos());
            assert!((rule.total_weight() - area).abs() < 1e-12 * area.max(1.0));
            for u in &rule.directions {
                assert!((norm(u) - 1.0).abs() < 1e-12);
                let ang = crate::geometry::dot(u, &c).clamp(-1.0, 1.0).acos();
                assert!(ang <= rho + 1e-9);
            }
        }
    }

    #[test]
    fn full_sphere_and_hemisphere_areas() {
        let spec = QuadratureSpec::default();
        let s = full_sphere_rule(&spec).unwrap();
        assert!((s.total_weight() - 4.0 * PI).abs() < 1e-12);
        let h = upper_hemisphere_rule(&spec).unwrap();
        assert!((h.total_weight() - 2.0 * PI).abs() < 1e-12);
        assert!(h.directions.iter().all(|u| u[2] >= 0.0));
    }

    #[test]
    fn second_moment_over_sphere() {
        // ∫ z² dS = 4π/3
        let s = full_sphere_rule(&QuadratureSpec::new(8, 16).unwrap()).unwrap();
        let v: f64 = s.directions.iter().zip(&s.weights).map(|(u, w)| w * u[2] * u[2]).sum();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_tiny_rules() {
        assert!(QuadratureSpec::new(2, 128).is_err());
        assert!(QuadratureSpec::new(64, 4).is_err());
        assert!(cap_rule(&[0.0, 0.0, 1.0], 0.0, &QuadratureSpec::default()).is_err());
    }
}
