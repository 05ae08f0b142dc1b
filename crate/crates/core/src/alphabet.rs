//! Discrete phase sets and the affine bit → weight maps.
//!
//! Two phases use one bit per element, `w_i = Δ·x_i + w0` with `Δ = w1 − w0`.
//! Four phases use two bits per element split into halves `x = [u; v]`,
//! `w = a·u + b·v + c`, with phase index `2·u_i + v_i`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const J: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AffineMap {
    Binary { w0: Complex64, w1: Complex64 },
    Quaternary { a: Complex64, b: Complex64, c: Complex64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseAlphabet {
    map: AffineMap,
    phases: Vec<Complex64>,
}

impl PhaseAlphabet {
    /// `{1, −1}`.
    pub fn binary() -> Self {
        Self::from_map(AffineMap::Binary { w0: ONE, w1: -ONE })
    }

    /// `{1, j, −j, −1}` from `[a, b, c] = [−1 − j, −1 + j, 1]`.
    pub fn quaternary() -> Self {
        Self::from_map(AffineMap::Quaternary {
            a: -ONE - J,
            b: -ONE + J,
            c: ONE,
        })
    }

    pub fn with_phase_count(k: usize) -> Result<Self> {
        match k {
            2 => Ok(Self::binary()),
            4 => Ok(Self::quaternary()),
            _ => Err(Error::invalid(format!("phase count must be 2 or 4, got {k}"))),
        }
    }

    pub fn from_map(map: AffineMap) -> Self {
        let phases = match map {
            AffineMap::Binary { w0, w1 } => vec![w0, w1],
            AffineMap::Quaternary { a, b, c } => vec![c, b + c, a + c, a + b + c],
        };
        Self { map, phases }
    }

    pub fn map(&self) -> &AffineMap {
        &self.map
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn phase_count(&self) -> usize {
        self.phases.len()
    }

    pub fn bits_per_element(&self) -> usize {
        match self.map {
            AffineMap::Binary { .. } => 1,
            AffineMap::Quaternary { .. } => 2,
        }
    }

    /// QUBO variable count for `elements` array elements.
    pub fn variable_count(&self, elements: usize) -> usize {
        self.bits_per_element() * elements
    }

    pub fn contains(&self, w: Complex64, tol: f64) -> bool {
        self.phases.iter().any(|p| (p - w).norm() <= tol)
    }

    /// Index of the exact alphabet member, if any.
    pub fn index_of(&self, w: Complex64) -> Option<usize> {
        self.phases.iter().position(|p| (p - w).norm() <= 1e-12)
    }

    /// Map a bit vector to complex weights.
    pub fn bits_to_weights(&self, bits: &[u8]) -> Result<DVector<Complex64>> {
        let nv = bits.len();
        let bpe = self.bits_per_element();
        if !nv.is_multiple_of(bpe) || nv == 0 {
            return Err(Error::invalid(format!(
                "bit vector length {nv} is not a positive multiple of {bpe}"
            )));
        }
        let n = nv / bpe;
        Ok(match self.map {
            AffineMap::Binary { w0, w1 } => {
                let delta = w1 - w0;
                DVector::from_iterator(n, bits.iter().map(|&x| delta * f64::from(x) + w0))
            }
            AffineMap::Quaternary { a, b, c } => {
                let (u, v) = bits.split_at(n);
                DVector::from_iterator(
                    n,
                    u.iter()
                        .zip(v)
                        .map(|(&ui, &vi)| a * f64::from(ui) + b * f64::from(vi) + c),
                )
            }
        })
    }

    /// Like [`bits_to_weights`](Self::bits_to_weights) but checks the length
    /// against an element count.
    pub fn bits_to_weights_checked(&self, bits: &[u8], elements: usize) -> Result<DVector<Complex64>> {
        if bits.len() != self.variable_count(elements) {
            return Err(Error::invalid(format!(
                "expected {} bits for {elements} elements, got {}",
                self.variable_count(elements),
                bits.len()
            )));
        }
        self.bits_to_weights(bits)
    }

    /// Inverse of the bit map for per-element phase indices.
    pub fn indices_to_bits(&self, indices: &[usize]) -> Vec<u8> {
        match self.map {
            AffineMap::Binary { .. } => indices.iter().map(|&i| i as u8).collect(),
            AffineMap::Quaternary { .. } => {
                let n = indices.len();
                let mut bits = vec![0u8; 2 * n];
                for (i, &idx) in indices.iter().enumerate() {
                    bits[i] = (idx >> 1) as u8;
                    bits[n + i] = (idx & 1) as u8;
                }
                bits
            }
        }
    }

    /// Nearest alphabet phase to `arg(w)`; ties go to the smaller index.
    pub fn nearest_index(&self, w: Complex64) -> usize {
        let target = w.arg();
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, p) in self.phases.iter().enumerate() {
            let d = angular_distance(target, p.arg());
            if d < best_dist - 1e-12 {
                best = i;
                best_dist = d;
            }
        }
        best
    }
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-15
    }

    #[test]
    fn quaternary_phase_set() {
        let q = PhaseAlphabet::quaternary();
        let p = q.phases();
        assert!(close(p[0], ONE));
        assert!(close(p[1], J));
        assert!(close(p[2], -J));
        assert!(close(p[3], -ONE));
        assert_eq!(q.bits_per_element(), 2);
        assert_eq!(q.variable_count(9), 18);
    }

    #[test]
    fn binary_map_reproduces_phases() {
        let b = PhaseAlphabet::binary();
        let w = b.bits_to_weights(&[0, 0, 0]).unwrap();
        assert!(w.iter().all(|z| close(*z, ONE)));
        let w = b.bits_to_weights(&[1, 0]).unwrap();
        assert!(close(w[0], -ONE) && close(w[1], ONE));
    }

    #[test]
    fn quaternary_bit_patterns() {
        let q = PhaseAlphabet::quaternary();
        // one element: x = [u; v]
        assert!(close(q.bits_to_weights(&[0, 1]).unwrap()[0], J));
        assert!(close(q.bits_to_weights(&[1, 1]).unwrap()[0], -ONE));
        assert!(close(q.bits_to_weights(&[1, 0]).unwrap()[0], -J));
        assert!(close(q.bits_to_weights(&[0, 0]).unwrap()[0], ONE));
        for idx in 0..4 {
            let bits = q.indices_to_bits(&[idx]);
            assert!(close(q.bits_to_weights(&bits).unwrap()[0], q.phases()[idx]));
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let q = PhaseAlphabet::quaternary();
        assert!(q.bits_to_weights(&[0, 1, 1]).is_err());
        assert!(q.bits_to_weights(&[]).is_err());
        assert!(q.bits_to_weights_checked(&[0, 1], 2).is_err());
        assert!(PhaseAlphabet::with_phase_count(3).is_err());
    }

    #[test]
    fn nearest_phase() {
        let q = PhaseAlphabet::quaternary();
        assert_eq!(q.nearest_index(Complex64::from_polar(0.3, 0.1)), 0);
        assert_eq!(q.nearest_index(Complex64::from_polar(1.0, 100f64.to_radians())), 1);
        assert_eq!(q.nearest_index(Complex64::from_polar(1.0, -170f64.to_radians())), 3);
        // exact tie between 1 and j
        assert_eq!(q.nearest_index(Complex64::from_polar(1.0, 45f64.to_radians())), 0);
        let b = PhaseAlphabet::binary();
        assert_eq!(b.nearest_index(Complex64::from_polar(1.0, 90f64.to_radians())), 0);
    }
}
