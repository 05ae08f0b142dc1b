//! Continuous-weight optimum and its nearest-phase quantization.
//!
//! The best unconstrained weight maximises `w^H A w / w^H B w`, i.e. it is
//! the top eigenpair of `A w = λ B w`. With `B = L L^H` this becomes the
//! standard Hermitian problem `C y = λ y`, `C = L⁻¹ A L⁻ᴴ`, `w = L⁻ᴴ y`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::alphabet::PhaseAlphabet;
use crate::coupling::{hermitian_form, HermitianMatrix};
use crate::error::{Error, Result};

/// Above this many elements the top eigenpair comes from Lanczos iteration
/// instead of a full dense decomposition.
pub const DENSE_EIGEN_LIMIT: usize = 1024;

/// Default diagonal shift, relative to a bound on the largest eigenvalue of
/// `B`, used when `B` is numerically singular. Dense grids at half-wavelength
/// spacing or tighter have modes outside the visible region with `B ≈ 0`.
pub const DEFAULT_B_REGULARIZATION: f64 = 1e-10;

const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightLabel {
    Continuous,
    Discrete2,
    Discrete4,
    Quantized2,
    Quantized4,
}

impl WeightLabel {
    pub fn discrete(k: usize) -> Self {
        if k == 2 {
            WeightLabel::Discrete2
        } else {
            WeightLabel::Discrete4
        }
    }

    pub fn quantized(k: usize) -> Self {
        if k == 2 {
            WeightLabel::Quantized2
        } else {
            WeightLabel::Quantized4
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, WeightLabel::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub w: DVector<Complex64>,
    pub label: WeightLabel,
}

impl WeightVector {
    pub fn new(w: DVector<Complex64>, label: WeightLabel) -> Self {
        Self { w, label }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Phases in degrees, for export.
    pub fn phases_deg(&self) -> Vec<f64> {
        self.w.iter().map(|z| z.arg().to_degrees()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ContinuousSolution {
    pub lambda_max: f64,
    pub weights: WeightVector,
    /// `‖A w − λ B w‖ / ‖A w‖` of the returned pair.
    pub relative_residual: f64,
    /// Absolute diagonal shift added to `B`; zero when `B` factored as is.
    pub b_shift: f64,
}

/// Largest generalized eigenpair of `(A, B)`, `w` scaled to `w^H B w = 1`.
/// Fails if `B` is numerically singular.
pub fn solve_continuous(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<ContinuousSolution> {
    solve_continuous_with(a, b, 0.0)
}

/// As [`solve_continuous`], but if `B` is numerically singular and
/// `rel_shift > 0`, solve with `B + δI` where `δ = rel_shift · max_i Σ_j |B_ij|`.
/// The residual and normalisation refer to the shifted matrix.
pub fn solve_continuous_with(a: &HermitianMatrix, b: &HermitianMatrix, rel_shift: f64) -> Result<ContinuousSolution> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n || n == 0 {
        return Err(Error::invalid("A and B must be square matrices of equal size"));
    }
    if !(rel_shift >= 0.0 && rel_shift.is_finite()) {
        return Err(Error::invalid(format!("B regularization must be finite and non-negative, got {rel_shift}")));
    }
    let mut shifted = None;
    let chol = match try_factor(b) {
        Some(chol) => chol,
        None if rel_shift > 0.0 => {
            let bound = (0..n).map(|i| b.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
            let delta = rel_shift * bound;
            log::warn!("B is numerically singular; adding {delta:.3e} to its diagonal");
            let m = shift_diagonal(b, delta);
            let chol = Cholesky::new(m.clone()).ok_or_else(|| singular_error(b))?;
            shifted = Some((m, delta));
            chol
        }
        None => return Err(singular_error(b)),
    };
    let b_shift = shifted.as_ref().map_or(0.0, |s| s.1);
    let b = shifted.as_ref().map_or(b, |s| &s.0);
    let (lambda, y) = if n <= DENSE_EIGEN_LIMIT {
        top_pair_dense(a, &chol)
    } else {
        top_pair_lanczos(a, &chol)?
    };
    let mut w = chol
        .l_dirty()
        .ad_solve_lower_triangular(&y)
        .ok_or_else(|| Error::Consistency("back-substitution with L^H failed".into()))?;
    fix_global_phase(&mut w);
    let scale = hermitian_form(b, &w).sqrt();
    w.unscale_mut(scale);

    let aw = a * &w;
    let bw = b * &w;
    let resid = (&aw - bw * Complex64::new(lambda, 0.0)).norm();
    let relative_residual = if aw.norm() > 0.0 { resid / aw.norm() } else { resid };
    if relative_residual > RESIDUAL_TOL && aw.norm() > 0.0 {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: relative_residual,
        });
    }
    Ok(ContinuousSolution {
        lambda_max: lambda,
        weights: WeightVector::new(w, WeightLabel::Continuous),
        relative_residual,
        b_shift,
    })
}

fn shift_diagonal(b: &HermitianMatrix, delta: f64) -> HermitianMatrix {
    let mut out = b.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += Complex64::new(delta, 0.0);
    }
    out
}

fn try_factor(b: &HermitianMatrix) -> Option<Cholesky<Complex64, Dyn>> {
    let largest_diag = b.diagonal().iter().map(|z| z.re).fold(0.0, f64::max);
    let chol = Cholesky::new(b.clone())?;
    let min_pivot = chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|z| z.re * z.re)
        .fold(f64::INFINITY, f64::min);
    (min_pivot > 1e-10 * largest_diag).then_some(chol)
}

fn singular_error(b: &HermitianMatrix) -> Error {
    if b.nrows() > DENSE_EIGEN_LIMIT {
        // a full decomposition is too slow here; report the diagonal range
        let diag = b.diagonal();
        return Error::IllConditioned {
            eigenvalue: diag.iter().map(|z| z.re).fold(f64::INFINITY, f64::min).min(0.0),
            largest: diag.iter().map(|z| z.re).fold(0.0, f64::max),
        };
    }
    let eig = SymmetricEigen::new(b.clone());
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Error::IllConditioned {
        eigenvalue: min,
        largest: max,
    }
}

fn top_pair_dense(a: &HermitianMatrix, chol: &Cholesky<Complex64, Dyn>) -> (f64, DVector<Complex64>) {
    let l = chol.l();
    // X = L⁻¹ A, C = L⁻¹ X^H = L⁻¹ A L⁻ᴴ
    let x = l.solve_lower_triangular(a).expect("nonsingular factor");
    let c = l.solve_lower_triangular(&x.adjoint()).expect("nonsingular factor");
    let c = crate::coupling::symmetrize(c);
    let eig = SymmetricEigen::new(c);
    let (imax, lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    (lambda, eig.eigenvectors.column(imax).into_owned())
}

struct ReducedOperator<'a> {
    a: &'a HermitianMatrix,
    l: DMatrix<Complex64>,
}

impl ReducedOperator<'_> {
    fn apply(&self, y: &DVector<Complex64>) -> DVector<Complex64> {
        let z = self.l.ad_solve_lower_triangular(y).expect("nonsingular factor");
        let az = self.a * z;
        self.l.solve_lower_triangular(&az).expect("nonsingular factor")
    }
}

/// Lanczos with full reorthogonalisation and explicit restarts from the
/// current best Ritz vector.
fn top_pair_lanczos(a: &HermitianMatrix, chol: &Cholesky<Complex64, Dyn>) -> Result<(f64, DVector<Complex64>)> {
    let n = a.nrows();
    let op = ReducedOperator { a, l: chol.l() };
    let krylov = 80.min(n);
    let max_restarts = 40;

    // deterministic start: all-ones plus a ramp to avoid symmetric blind spots
    let mut start = DVector::from_fn(n, |i, _| Complex64::new(1.0, 0.1 * (i as f64 / n as f64)));
    start.normalize_mut();
    let mut total = 0;
    let mut last_residual = f64::INFINITY;

    for _ in 0..max_restarts {
        let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(krylov + 1);
        let mut alpha = Vec::with_capacity(krylov);
        let mut beta: Vec<f64> = Vec::with_capacity(krylov);
        basis.push(start.clone());
        let mut tail_beta = 0.0;
        for j in 0..krylov {
            let mut r = op.apply(&basis[j]);
            total += 1;
            let aj = basis[j].dotc(&r).re;
            alpha.push(aj);
            // two passes of classical Gram–Schmidt against the whole basis
            for _ in 0..2 {
                for q in &basis {
                    let h = q.dotc(&r);
                    r.axpy(-h, q, Complex64::new(1.0, 0.0));
                }
            }
            let bj = r.norm();
            tail_beta = bj;
            if j + 1 == krylov || bj < 1e-14 {
                break;
            }
            beta.push(bj);
            r.unscale_mut(bj);
            basis.push(r);
        }
        let m = alpha.len();
        let t = DMatrix::<f64>::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (imax, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let s = eig.eigenvectors.column(imax);
        let mut y = DVector::<Complex64>::zeros(n);
        for (q, &si) in basis.iter().zip(s.iter()) {
            y.axpy(Complex64::new(si, 0.0), q, Complex64::new(1.0, 0.0));
        }
        y.normalize_mut();
        let cy = op.apply(&y);
        total += 1;
        let residual = (&cy - &y * Complex64::new(theta, 0.0)).norm();
        log::debug!("lanczos restart: θ = {theta:.12}, residual {residual:.3e}, tail β {tail_beta:.3e}");
        let scale = theta.abs().max(1e-300);
        // a shifted, badly conditioned B puts a floor under the residual;
        // stop once progress stalls near it
        let stalled = residual > 0.5 * last_residual && residual <= 1e-8 * scale;
        if residual <= 1e-10 * scale || stalled {
            return Ok((theta, y));
        }
        last_residual = residual;
        start = y;
    }
    Err(Error::NoConvergence {
        iterations: total,
        residual: last_residual,
    })
}

/// Rotate so the largest-magnitude entry is real and positive.
fn fix_global_phase(w: &mut DVector<Complex64>) {
    let (mut idx, mut best) = (0, -1.0);
    for (i, z) in w.iter().enumerate() {
        if z.norm() > best + 1e-12 {
            idx = i;
            best = z.norm();
        }
    }
    if best > 0.0 {
        let rot = w[idx].conj() / best;
        for z in w.iter_mut() {
            *z *= rot;
        }
    }
}

/// Snap each entry to the alphabet phase closest to its argument, with unit
/// amplitude. Zero entries take phase index 0.
pub fn quantize_weights(w: &WeightVector, alphabet: &PhaseAlphabet) -> WeightVector {
    let k = alphabet.phase_count();
    let mut zeros = 0usize;
    let out = DVector::from_iterator(
        w.len(),
        w.w.iter().map(|z| {
            if z.norm() == 0.0 {
                zeros += 1;
                alphabet.phases()[0]
            } else {
                alphabet.phases()[alphabet.nearest_index(*z)]
            }
        }),
    );
    if zeros > 0 {
        log::warn!("{zeros} zero-amplitude weights quantized to phase index 0");
    }
    WeightVector::new(out, WeightLabel::quantized(k))
}

/// `w^H A w / w^H B w`.
pub fn ratio_objective(w: &DVector<Complex64>, a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    if w.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::invalid("weight vector is zero"));
    }
    let num = hermitian_form(a, w);
    let den = hermitian_form(b, w);
    if den <= 0.0 {
        return Err(Error::Consistency(format!("non-positive denominator {den:e}")));
    }
    Ok(num / den)
}
