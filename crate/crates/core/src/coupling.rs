//! Coupling matrices `A` (energy through the target cap) and `B` (energy
//! through the whole sphere).
//!
//! Entry (i, j) of either matrix is `∫ exp(−jk u·(r_i − r_j)) dS` over the
//! relevant region, so `w^H A w` is the radiated power through the cap for
//! weights `w`. For square grids the integrand depends only on the integer
//! displacement between elements, which lets assembly touch `(2N−1)²`
//! displacements per node instead of `n²` element pairs.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, ArrayGeometry, Direction, GridLayout, TargetRegion};
use crate::quadrature::{self, QuadratureSpec, SphereRule};

pub type HermitianMatrix = DMatrix<Complex64>;

/// Per-element phases of a plane wave towards `direction`:
/// `T_i = exp(−jk u·r_i)`.
pub fn steering_vector(geometry: &ArrayGeometry, direction: &Direction) -> DVector<Complex64> {
    let u = direction.unit();
    let k = geometry.wavenumber();
    DVector::from_iterator(
        geometry.len(),
        geometry
            .positions()
            .iter()
            .map(|r| Complex64::cis(-k * dot(&u, r))),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coverage {
    #[default]
    FullSphere,
    /// Only directions with z ≥ 0, for arrays radiating into one half-space.
    UpperHemisphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SphereMethod {
    /// Closed form `4π·sin(kd)/(kd)`.
    #[default]
    Analytic,
    Quadrature(QuadratureSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingSpec {
    pub cap_quadrature: QuadratureSpec,
    pub sphere: SphereMethod,
    pub coverage: Coverage,
}

impl Default for CouplingSpec {
    fn default() -> Self {
        Self {
            cap_quadrature: QuadratureSpec::default(),
            sphere: SphereMethod::Analytic,
            coverage: Coverage::FullSphere,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMeta {
    pub spec: CouplingSpec,
    /// Largest entry change of `A` against a rule with half the nodes,
    /// relative to the largest entry. Only computed on the grid fast path.
    pub estimated_cap_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CouplingMatrices {
    pub a: HermitianMatrix,
    pub b: HermitianMatrix,
    pub meta: CouplingMeta,
}

impl CouplingMatrices {
    pub fn build(geometry: &ArrayGeometry, region: &TargetRegion, spec: &CouplingSpec) -> Result<Self> {
        let a = compute_a(geometry, region, &spec.cap_quadrature)?;
        let b = compute_b(geometry, &spec.sphere, spec.coverage)?;
        let estimated_cap_error = geometry.grid().map(|grid| {
            let center = region.center.unit();
            let coarse = quadrature::cap_rule(&center, region.angular_radius, &spec.cap_quadrature.halved())
                .map(|rule| displacement_table(geometry, grid, &rule));
            let fine = quadrature::cap_rule(&center, region.angular_radius, &spec.cap_quadrature)
                .map(|rule| displacement_table(geometry, grid, &rule));
            match (coarse, fine) {
                (Ok(c), Ok(f)) => {
                    let scale = f.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    let diff = c
                        .values
                        .iter()
                        .zip(&f.values)
                        .map(|(x, y)| (x - y).norm())
                        .fold(0.0, f64::max);
                    diff / scale.max(f64::MIN_POSITIVE)
                }
                _ => f64::NAN,
            }
        });
        Ok(Self {
            a,
            b,
            meta: CouplingMeta {
                spec: *spec,
                estimated_cap_error,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Cap matrix for the target region.
pub fn compute_a(geometry: &ArrayGeometry, region: &TargetRegion, spec: &QuadratureSpec) -> Result<HermitianMatrix> {
    compute_cap_matrix(geometry, &region.center, region.angular_radius, spec)
}

/// Cap matrix for any radius in (0, π]; radius π is the whole sphere.
pub fn compute_cap_matrix(
    geometry: &ArrayGeometry,
    center: &Direction,
    radius: f64,
    spec: &QuadratureSpec,
) -> Result<HermitianMatrix> {
    let rule = quadrature::cap_rule(&center.unit(), radius, spec)?;
    Ok(assemble(geometry, &rule))
}

pub fn compute_b(geometry: &ArrayGeometry, method: &SphereMethod, coverage: Coverage) -> Result<HermitianMatrix> {
    match method {
        SphereMethod::Analytic => {
            let scale = match coverage {
                Coverage::FullSphere => 4.0 * PI,
                // z → −z symmetry of in-plane displacements halves the integral
                Coverage::UpperHemisphere if geometry.is_planar_xy() => 2.0 * PI,
                Coverage::UpperHemisphere => {
                    return Err(Error::invalid(
                        "analytic hemisphere integral needs a planar array; use quadrature",
                    ))
                }
            };
            Ok(analytic_sinc(geometry, scale))
        }
        SphereMethod::Quadrature(spec) => {
            let rule = match coverage {
                Coverage::FullSphere => quadrature::full_sphere_rule(spec)?,
                Coverage::UpperHemisphere => quadrature::upper_hemisphere_rule(spec)?,
            };
            Ok(assemble(geometry, &rule))
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn analytic_sinc(geometry: &ArrayGeometry, scale: f64) -> HermitianMatrix {
    let k = geometry.wavenumber();
    let n = geometry.len();
    if let Some(grid) = geometry.grid() {
        let side = grid.side as isize;
        let width = (2 * side - 1) as usize;
        let mut table = vec![0.0; width * width];
        for dy in -(side - 1)..side {
            for dx in -(side - 1)..side {
                let d = grid.spacing * ((dx * dx + dy * dy) as f64).sqrt();
                table[(dy + side - 1) as usize * width + (dx + side - 1) as usize] = scale * sinc(k * d);
            }
        }
        let table = DisplacementTable {
            side: grid.side,
            values: table.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        };
        return table.expand();
    }
    let p = geometry.positions();
    DMatrix::from_fn(n, n, |i, j| {
        let d = [p[i][0] - p[j][0], p[i][1] - p[j][1], p[i][2] - p[j][2]];
        Complex64::new(scale * sinc(k * dot(&d, &d).sqrt()), 0.0)
    })
}

/// `Σ_q w_q exp(−jk u_q·(r_i − r_j))`, Hermitian-symmetrised.
pub fn assemble(geometry: &ArrayGeometry, rule: &SphereRule) -> HermitianMatrix {
    let m = match geometry.grid() {
        Some(grid) => displacement_table(geometry, grid, rule).expand(),
        None => assemble_direct(geometry, rule),
    };
    symmetrize(m)
}

/// Element-pair assembly for arbitrary layouts, `O(nodes · n²)`.
pub fn assemble_direct(geometry: &ArrayGeometry, rule: &SphereRule) -> HermitianMatrix {
    let n = geometry.len();
    let k = geometry.wavenumber();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let mut t = vec![Complex64::new(0.0, 0.0); n];
    for (u, w) in rule.directions.iter().zip(&rule.weights) {
        for (ti, r) in t.iter_mut().zip(geometry.positions()) {
            *ti = Complex64::cis(-k * dot(u, r));
        }
        for j in 0..n {
            let tj = t[j].conj() * *w;
            let col = m.column_mut(j);
            for (mij, ti) in col.into_iter().zip(&t) {
                *mij += ti * tj;
            }
        }
    }
    symmetrize(m)
}

struct DisplacementTable {
    side: usize,
    /// Row-major over (dy, dx), each offset by `side − 1`.
    values: Vec<Complex64>,
}

impl DisplacementTable {
    fn expand(&self) -> HermitianMatrix {
        let side = self.side;
        let n = side * side;
        let width = 2 * side - 1;
        DMatrix::from_fn(n, n, |i, j| {
            let (iy, ix) = (i / side, i % side);
            let (jy, jx) = (j / side, j % side);
            let dy = iy + side - 1 - jy;
            let dx = ix + side - 1 - jx;
            self.values[dy * width + dx]
        })
    }
}

fn displacement_table(geometry: &ArrayGeometry, grid: GridLayout, rule: &SphereRule) -> DisplacementTable {
    let side = grid.side as isize;
    let width = (2 * side - 1) as usize;
    let ks = geometry.wavenumber() * grid.spacing;
    let mut values = vec![Complex64::new(0.0, 0.0); width * width];
    let mut px = vec![Complex64::new(0.0, 0.0); width];
    let mut py = vec![Complex64::new(0.0, 0.0); width];
    for (u, w) in rule.directions.iter().zip(&rule.weights) {
        for (idx, d) in (-(side - 1)..side).enumerate() {
            px[idx] = Complex64::cis(-ks * u[0] * d as f64);
            py[idx] = Complex64::cis(-ks * u[1] * d as f64);
        }
        for (row, pyv) in values.chunks_exact_mut(width).zip(&py) {
            let s = pyv * *w;
            for (v, pxv) in row.iter_mut().zip(&px) {
                *v += pxv * s;
            }
        }
    }
    DisplacementTable {
        side: grid.side,
        values,
    }
}

/// `M ← (M + M^H) / 2`.
pub fn symmetrize(mut m: HermitianMatrix) -> HermitianMatrix {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)].im = 0.0;
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    m
}

/// Largest `|M − M^H|` entry relative to the largest entry of `M`.
pub fn hermitian_defect(m: &HermitianMatrix) -> f64 {
    let n = m.nrows();
    let mut scale = 0.0f64;
    let mut defect = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            scale = scale.max(m[(i, j)].norm());
            defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        defect / scale
    }
}

/// `v^H M v`, real part (the imaginary part vanishes for Hermitian `M`).
pub fn hermitian_form(m: &HermitianMatrix, v: &DVector<Complex64>) -> f64 {
    let mv = m * v;
    v.dotc(&mv).re
}
