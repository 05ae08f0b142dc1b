//! Real quadratic forms over bit vectors that reproduce `w^H A w` and
//! `w^H B w` through the alphabet's affine map, and the QUBO
//! `H_t(x) = t·g(x) − f(x)` built from them.
//!
//! Two phases, `w = Δ·z + w0·1`:
//!
//! ```text
//! w^H A w = |Δ|² z^T Re(A) z + 2 Re(conj(Δ) w0 (A·1))^T z + |w0|² Σ A_ij
//! ```
//!
//! Four phases, `w = a·u + b·v + c·1` with `x = [u; v]`:
//!
//! ```text
//! A0 = [ |a|² Re(A)          Re(conj(a) b A) ]     b0 = [ 2 Re(conj(a) c (A·1)) ]
//!      [ Re(conj(a) b A)^T   |b|² Re(A)      ]          [ 2 Re(conj(b) c (A·1)) ]
//! c0 = |c|² Σ A_ij
//! ```
//!
//! Only real parts survive because `x` is real and `A` is Hermitian.

use num_complex::Complex64;

use crate::alphabet::{AffineMap, PhaseAlphabet};
use crate::coupling::{hermitian_defect, HermitianMatrix};
use crate::error::{Error, Result};
use crate::qubo::QuboInstance;

const HERMITIAN_TOL: f64 = 1e-10;

/// One real quadratic form `x^T M x + lin^T x + constant`, `M` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    n: usize,
    /// Row-major symmetric.
    pub matrix: Vec<f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl QuadraticForm {
    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &[u8]) -> f64 {
        let n = self.n;
        let mut v = self.constant;
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            v += self.linear[i];
            let row = &self.matrix[i * n..(i + 1) * n];
            for j in 0..n {
                if x[j] != 0 {
                    v += row[j];
                }
            }
        }
        v
    }

    fn from_hermitian(h: &HermitianMatrix, alphabet: &PhaseAlphabet) -> Self {
        let n = h.nrows();
        let row_sums: Vec<Complex64> = (0..n).map(|i| h.row(i).iter().sum()).collect();
        let total: Complex64 = row_sums.iter().sum();
        match *alphabet.map() {
            AffineMap::Binary { w0, w1 } => {
                let delta = w1 - w0;
                let d2 = delta.norm_sqr();
                let mut matrix = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        matrix[i * n + j] = d2 * h[(i, j)].re;
                    }
                }
                let lin_coef = delta.conj() * w0;
                let linear = row_sums.iter().map(|s| 2.0 * (lin_coef * s).re).collect();
                Self {
                    n,
                    matrix: symmetrized(n, matrix),
                    linear,
                    constant: w0.norm_sqr() * total.re,
                }
            }
            AffineMap::Quaternary { a, b, c } => {
                let nv = 2 * n;
                let mut matrix = vec![0.0; nv * nv];
                let (a2, b2) = (a.norm_sqr(), b.norm_sqr());
                let ab = a.conj() * b;
                for i in 0..n {
                    for j in 0..n {
                        let hij = h[(i, j)];
                        let re = hij.re;
                        matrix[i * nv + j] = a2 * re;
                        matrix[(n + i) * nv + (n + j)] = b2 * re;
                        let cross = (ab * hij).re;
                        matrix[i * nv + (n + j)] = cross;
                        matrix[(n + j) * nv + i] = cross;
                    }
                }
                let (ac, bc) = (c * a.conj(), c * b.conj());
                let mut linear = vec![0.0; nv];
                for i in 0..n {
                    linear[i] = 2.0 * (ac * row_sums[i]).re;
                    linear[n + i] = 2.0 * (bc * row_sums[i]).re;
                }
                Self {
                    n: nv,
                    matrix: symmetrized(nv, matrix),
                    linear,
                    constant: c.norm_sqr() * total.re,
                }
            }
        }
    }
}

fn symmetrized(n: usize, mut m: Vec<f64>) -> Vec<f64> {
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
    m
}

/// Numerator `f(x) = w^H A w` and denominator `g(x) = w^H B w` as real
/// forms over the QUBO variables.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalCoefficients {
    pub numerator: QuadraticForm,
    pub denominator: QuadraticForm,
    elements: usize,
}

impl FractionalCoefficients {
    pub fn num_vars(&self) -> usize {
        self.numerator.n
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn f(&self, x: &[u8]) -> f64 {
        self.numerator.eval(x)
    }

    pub fn g(&self, x: &[u8]) -> f64 {
        self.denominator.eval(x)
    }

    pub fn ratio(&self, x: &[u8]) -> f64 {
        self.f(x) / self.g(x)
    }
}

pub fn build_fractional_coefficients(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    alphabet: &PhaseAlphabet,
) -> Result<FractionalCoefficients> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n || n == 0 {
        return Err(Error::invalid("A and B must be square matrices of equal size"));
    }
    for (name, m) in [("A", a), ("B", b)] {
        let defect = hermitian_defect(m);
        if defect > HERMITIAN_TOL {
            return Err(Error::invalid(format!(
                "{name} is not Hermitian (relative defect {defect:e})"
            )));
        }
    }
    Ok(FractionalCoefficients {
        numerator: QuadraticForm::from_hermitian(a, alphabet),
        denominator: QuadraticForm::from_hermitian(b, alphabet),
        elements: n,
    })
}

/// QUBO with energy `t·g(x) − f(x)`.
pub fn assemble_bisection_qubo(coeffs: &FractionalCoefficients, t: f64) -> QuboInstance {
    let f = &coeffs.numerator;
    let g = &coeffs.denominator;
    let n = f.n;
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        let (fr, gr) = (&f.matrix[i * n..(i + 1) * n], &g.matrix[i * n..(i + 1) * n]);
        let row = &mut q[i * n..(i + 1) * n];
        row[i] = t * gr[i] - fr[i] + t * g.linear[i] - f.linear[i];
        for j in (i + 1)..n {
            row[j] = 2.0 * (t * gr[j] - fr[j]);
        }
    }
    QuboInstance::from_upper(n, q, t * g.constant - f.constant)
        .expect("sizes agree by construction")
        .with_t(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{compute_a, compute_b, hermitian_form, Coverage, SphereMethod};
    use crate::geometry::{build_planar_array, Direction, TargetRegion};
    use crate::quadrature::QuadratureSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrices(side: usize, target: Direction) -> (HermitianMatrix, HermitianMatrix) {
        let g = build_planar_array(side, 0.5, 1.0).unwrap();
        let region = TargetRegion::new(target, 0.05).unwrap();
        let a = compute_a(&g, &region, &QuadratureSpec::default()).unwrap();
        let b = compute_b(&g, &SphereMethod::Analytic, Coverage::FullSphere).unwrap();
        (a, b)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn zero_bits_give_all_ones_form() {
        let (a, b) = matrices(3, Direction::from_degrees(10.0, 20.0));
        for alphabet in [PhaseAlphabet::binary(), PhaseAlphabet::quaternary()] {
            let c = build_fractional_coefficients(&a, &b, &alphabet).unwrap();
            let x = vec![0u8; c.num_vars()];
            let ones = nalgebra::DVector::from_element(9, Complex64::new(1.0, 0.0));
            assert!(rel(c.f(&x), hermitian_form(&a, &ones)) < 1e-12);
            assert!(rel(c.numerator.constant, c.f(&x)) < 1e-15);
        }
    }

    #[test]
    fn scalar_two_point_enumeration() {
        let alpha = 0.7;
        let a = HermitianMatrix::from_element(1, 1, Complex64::new(alpha, 0.0));
        let alphabet = PhaseAlphabet::from_map(AffineMap::Binary {
            w0: Complex64::new(0.0, 2.0),
            w1: Complex64::new(-0.5, 0.0),
        });
        let c = build_fractional_coefficients(&a, &a, &alphabet).unwrap();
        assert!((c.f(&[0]) - 4.0 * alpha).abs() < 1e-15);
        assert!((c.f(&[1]) - 0.25 * alpha).abs() < 1e-15);
    }

    #[test]
    fn random_bits_match_direct_forms() {
        let (a, b) = matrices(3, Direction::from_degrees(15.0, 250.0));
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for alphabet in [PhaseAlphabet::binary(), PhaseAlphabet::quaternary()] {
            let c = build_fractional_coefficients(&a, &b, &alphabet).unwrap();
            for _ in 0..1000 {
                let x: Vec<u8> = (0..c.num_vars()).map(|_| rng.random_range(0..2)).collect();
                let w = alphabet.bits_to_weights(&x).unwrap();
                assert!(rel(c.f(&x), hermitian_form(&a, &w)) < 1e-9);
                assert!(rel(c.g(&x), hermitian_form(&b, &w)) < 1e-9);
            }
        }
    }

    #[test]
    fn qubo_energy_is_t_g_minus_f() {
        let (a, b) = matrices(2, Direction::from_degrees(5.0, 45.0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for alphabet in [PhaseAlphabet::binary(), PhaseAlphabet::quaternary()] {
            let c = build_fractional_coefficients(&a, &b, &alphabet).unwrap();
            for t in [0.0, 0.123, 0.5, 1.0] {
                let q = assemble_bisection_qubo(&c, t);
                assert_eq!(q.t(), Some(t));
                let zero = vec![0u8; c.num_vars()];
                assert!((q.energy(&zero).unwrap() - (t * c.denominator.constant - c.numerator.constant)).abs() < 1e-12);
                for _ in 0..200 {
                    let x: Vec<u8> = (0..c.num_vars()).map(|_| rng.random_range(0..2)).collect();
                    let e = q.energy(&x).unwrap();
                    let expected = t * c.g(&x) - c.f(&x);
                    assert!((e - expected).abs() < 1e-9 * (1.0 + expected.abs()));
                    if t == 0.0 {
                        assert!(e <= 1e-12);
                    }
                    if t == 1.0 {
                        assert!(e >= -1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = HermitianMatrix::identity(2, 2);
        a[(0, 1)] = Complex64::new(0.5, 0.0);
        let b = HermitianMatrix::identity(2, 2);
        assert!(build_fractional_coefficients(&a, &b, &PhaseAlphabet::binary()).is_err());
    }
}
