//! Array layouts and direction conventions.
//!
//! Directions use θ measured from the array broadside (+z) and φ measured in
//! the array plane from +x. Angles are stored in radians everywhere; degrees
//! only appear at the config and report boundary.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Regular square lattice description, kept alongside the explicit
/// positions so that displacement-indexed fast paths can be used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub side: usize,
    pub spacing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<Vec3>,
    wavelength: f64,
    wavenumber: f64,
    grid: Option<GridLayout>,
}

impl ArrayGeometry {
    /// Arbitrary element layout. Used for tests and small hand-built cases;
    /// experiments go through [`build_planar_array`].
    pub fn from_positions(positions: Vec<Vec3>, wavelength: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("array needs at least one element"));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid(format!("wavelength must be positive, got {wavelength}")));
        }
        if positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("element positions must be finite"));
        }
        Ok(Self {
            positions,
            wavelength,
            wavenumber: 2.0 * PI / wavelength,
            grid: None,
        })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn grid(&self) -> Option<GridLayout> {
        self.grid
    }

    /// True when every element lies in the z = 0 plane.
    pub fn is_planar_xy(&self) -> bool {
        self.positions.iter().all(|p| p[2] == 0.0)
    }

    /// Largest distance between any two elements.
    pub fn max_extent(&self) -> f64 {
        if let Some(g) = self.grid {
            return (g.side.saturating_sub(1)) as f64 * g.spacing * std::f64::consts::SQRT_2;
        }
        let mut best = 0.0f64;
        for (i, a) in self.positions.iter().enumerate() {
            for b in &self.positions[i + 1..] {
                let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
                best = best.max(norm(&d));
            }
        }
        best
    }
}

/// Square planar grid of `side × side` elements in the z = 0 plane, centered
/// on the origin. Ordering is row-major with x varying fastest.
pub fn build_planar_array(side: usize, spacing: f64, wavelength: f64) -> Result<ArrayGeometry> {
    if side == 0 {
        return Err(Error::invalid("grid side must be at least 1"));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::invalid(format!("spacing must be positive, got {spacing}")));
    }
    let half = (side as f64 - 1.0) / 2.0;
    let mut positions = Vec::with_capacity(side * side);
    for iy in 0..side {
        for ix in 0..side {
            positions.push([
                (ix as f64 - half) * spacing,
                (iy as f64 - half) * spacing,
                0.0,
            ]);
        }
    }
    let mut geometry = ArrayGeometry::from_positions(positions, wavelength)?;
    geometry.grid = Some(GridLayout { side, spacing });
    Ok(geometry)
}

/// Unit vector `(sinθ cosφ, sinθ sinφ, cosθ)`.
pub fn direction_unit_vector(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Self {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    pub fn unit(&self) -> Vec3 {
        direction_unit_vector(self.theta, self.phi)
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta.to_degrees()
    }

    /// Azimuth in degrees, wrapped into [0, 360).
    pub fn phi_deg(&self) -> f64 {
        self.phi.to_degrees().rem_euclid(360.0)
    }

    /// Great-circle angle to another direction, radians.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        let a = self.unit();
        let b = other.unit();
        // atan2 form stays accurate for tiny separations
        norm(&cross(&a, &b)).atan2(dot(&a, &b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRegion {
    pub center: Direction,
    pub angular_radius: f64,
}

impl TargetRegion {
    pub fn new(center: Direction, angular_radius: f64) -> Result<Self> {
        if !(angular_radius > 0.0 && angular_radius < FRAC_PI_2) {
            return Err(Error::invalid(format!(
                "cap angular radius must lie in (0, π/2), got {angular_radius}"
            )));
        }
        Ok(Self {
            center,
            angular_radius,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_sits_at_origin() {
        let g = build_planar_array(1, 0.37, 1.0).unwrap();
        assert_eq!(g.positions(), &[[0.0, 0.0, 0.0]]);
    }

    #[test]
    fn eight_by_eight_half_wavelength() {
        let lambda = 0.01;
        let s = lambda / 2.0;
        let g = build_planar_array(8, s, lambda).unwrap();
        assert_eq!(g.len(), 64);
        // brute-force enumeration of expected coordinates
        let mut expected = Vec::new();
        for iy in 0..8 {
            for ix in 0..8 {
                expected.push([(ix as f64 - 3.5) * s, (iy as f64 - 3.5) * s, 0.0]);
            }
        }
        assert_eq!(g.positions(), expected.as_slice());
        let max_x = g.positions().iter().map(|p| p[0]).fold(f64::MIN, f64::max);
        let max_y = g.positions().iter().map(|p| p[1]).fold(f64::MIN, f64::max);
        assert!((max_x - 3.5 * s).abs() < 1e-15);
        assert!((max_y - 3.5 * s).abs() < 1e-15);
    }

    #[test]
    fn ten_thousand_elements() {
        let g = build_planar_array(100, 0.5, 1.0).unwrap();
        assert_eq!(g.len(), 10_000);
    }

    #[test]
    fn centroid_at_origin() {
        for side in [1, 2, 5, 16, 33] {
            let g = build_planar_array(side, 0.5, 1.0).unwrap();
            let mut sum = [0.0; 3];
            for p in g.positions() {
                for c in 0..3 {
                    sum[c] += p[c];
                }
            }
            for c in sum {
                assert!(c.abs() < 1e-9 * 0.5, "side {side}: {sum:?}");
            }
            assert!(g.is_planar_xy());
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_planar_array(0, 0.5, 1.0).is_err());
        assert!(build_planar_array(4, 0.0, 1.0).is_err());
        assert!(build_planar_array(4, -1.0, 1.0).is_err());
        assert!(build_planar_array(4, 0.5, 0.0).is_err());
        assert!(ArrayGeometry::from_positions(vec![[f64::NAN, 0.0, 0.0]], 1.0).is_err());
    }

    #[test]
    fn unit_vectors() {
        let u = direction_unit_vector(0.0, 0.0);
        assert_eq!(u, [0.0, 0.0, 1.0]);
        let u = direction_unit_vector(FRAC_PI_2, 0.0);
        assert!((u[0] - 1.0).abs() < 1e-15 && u[1].abs() < 1e-15 && u[2].abs() < 1e-15);

        let (t, p) = (12.38f64.to_radians(), 306.16f64.to_radians());
        let u = direction_unit_vector(t, p);
        let expected = [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
        assert_eq!(u, expected);
        assert!((norm(&u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angle_between_directions() {
        let a = Direction::from_degrees(10.0, 0.0);
        let b = Direction::from_degrees(10.0, 180.0);
        assert!((a.angle_to(&b).to_degrees() - 20.0).abs() < 1e-9);
        assert!(a.angle_to(&a).abs() < 1e-15);
    }

    #[test]
    fn target_region_bounds() {
        let c = Direction::new(0.1, 0.2);
        assert!(TargetRegion::new(c, 0.05).is_ok());
        assert!(TargetRegion::new(c, 0.0).is_err());
        assert!(TargetRegion::new(c, FRAC_PI_2).is_err());
    }

    proptest::proptest! {
        #[test]
        fn unit_norm(theta in -10.0f64..10.0, phi in -10.0f64..10.0) {
            let u = direction_unit_vector(theta, phi);
            proptest::prop_assert!((norm(&u) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn joint_scaling_preserves_phase(
            side in 1usize..6,
            c in 0.1f64..10.0,
            theta in 0.0f64..3.1,
            phi in 0.0f64..6.3,
        ) {
            let a = build_planar_array(side, 0.5, 1.0).unwrap();
            let b = build_planar_array(side, 0.5 * c, c).unwrap();
            let u = direction_unit_vector(theta, phi);
            for (pa, pb) in a.positions().iter().zip(b.positions()) {
                let ka = a.wavenumber() * dot(pa, &u);
                let kb = b.wavenumber() * dot(pb, &u);
                proptest::prop_assert!((ka - kb).abs() < 1e-9 * (1.0 + ka.abs()));
            }
        }
    }
}
