//! Exact back-ends for tiny instances: Gray-code QUBO enumeration and a
//! direct enumeration of discrete weight vectors that never touches the QUBO
//! coefficients.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::alphabet::PhaseAlphabet;
use crate::bisection::QuboSolver;
use crate::coupling::{hermitian_form, HermitianMatrix};
use crate::error::{Error, Result};
use crate::qubo::QuboInstance;
use crate::sa::{Couplings, LocalFields, SaOutcome, StopReason};

pub const MAX_EXHAUSTIVE_VARS: usize = 30;

/// Exact minimum over all `2^N_V` configurations.
pub fn exhaustive_minimum(instance: &QuboInstance) -> Result<SaOutcome> {
    let n = instance.num_vars();
    if n == 0 || n > MAX_EXHAUSTIVE_VARS {
        return Err(Error::invalid(format!(
            "exhaustive search supports 1..={MAX_EXHAUSTIVE_VARS} variables, got {n}"
        )));
    }
    let couplings = Couplings::from_instance(instance);
    let mut state = LocalFields::new(&couplings, vec![0; n])?;
    let mut best_energy = state.energy();
    let mut best_config = state.config().to_vec();
    let total = 1u64 << n;
    for i in 1..total {
        state.flip(&couplings, i.trailing_zeros() as usize);
        if state.energy() < best_energy {
            best_energy = state.energy();
            best_config.copy_from_slice(state.config());
        }
    }
    // recompute exactly; the incremental energy carries rounding
    let best_energy = instance.energy(&best_config)?;
    Ok(SaOutcome {
        negative_found: best_energy < 0.0,
        best_config,
        best_energy,
        stop_reason: StopReason::Exhausted,
        bits_explored: total - 1,
        batches_run: 1,
        batch_best: vec![best_energy],
        best_trace: vec![best_energy],
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExhaustiveSolver;

impl QuboSolver for ExhaustiveSolver {
    fn solve(&mut self, instance: &QuboInstance) -> Result<SaOutcome> {
        exhaustive_minimum(instance)
    }

    fn describe(&self) -> String {
        "exhaustive".into()
    }
}

#[derive(Debug, Clone)]
pub struct BruteForceOptimum {
    pub ratio: f64,
    pub phase_indices: Vec<usize>,
    pub weights: DVector<Complex64>,
    pub configurations: u64,
}

/// Maximum of `w^H A w / w^H B w` over every weight vector drawn from the
/// alphabet, by direct evaluation of the Hermitian forms.
pub fn brute_force_ratio(a: &HermitianMatrix, b: &HermitianMatrix, alphabet: &PhaseAlphabet) -> Result<BruteForceOptimum> {
    let n = a.nrows();
    let k = alphabet.phase_count();
    let total = (k as u64).checked_pow(n as u32).filter(|&t| t <= 1 << MAX_EXHAUSTIVE_VARS);
    let total = total.ok_or_else(|| Error::invalid(format!("{k}^{n} configurations is too many to enumerate")))?;
    let mut indices = vec![0usize; n];
    let mut best = BruteForceOptimum {
        ratio: f64::NEG_INFINITY,
        phase_indices: indices.clone(),
        weights: DVector::zeros(n),
        configurations: total,
    };
    for code in 0..total {
        let mut c = code;
        for idx in indices.iter_mut() {
            *idx = (c % k as u64) as usize;
            c /= k as u64;
        }
        let w = DVector::from_iterator(n, indices.iter().map(|&i| alphabet.phases()[i]));
        let r = hermitian_form(a, &w) / hermitian_form(b, &w);
        if r > best.ratio {
            best.ratio = r;
            best.phase_indices.copy_from_slice(&indices);
            best.weights = w;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_naive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = 9;
            let q: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let inst = QuboInstance::from_upper(n, q, rng.random_range(-1.0..1.0)).unwrap();
            let out = exhaustive_minimum(&inst).unwrap();
            let mut best = f64::INFINITY;
            for code in 0..(1u32 << n) {
                let x: Vec<u8> = (0..n).map(|i| ((code >> i) & 1) as u8).collect();
                best = best.min(inst.energy(&x).unwrap());
            }
            assert!((out.best_energy - best).abs() < 1e-12);
            assert_eq!(out.negative_found, best < 0.0);
        }
    }

    #[test]
    fn rejects_oversized() {
        let inst = QuboInstance::zeros(MAX_EXHAUSTIVE_VARS + 1);
        assert!(exhaustive_minimum(&inst).is_err());
    }
}
