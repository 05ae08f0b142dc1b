//! Bisection on the achievable ratio `t`.
//!
//! For a trial `t` the QUBO `H_t(x) = t·g(x) − f(x)` has a negative minimum
//! exactly when some configuration has `f/g > t`. A negative energy found by
//! the back-end raises the lower bound (`t0 ← t`); otherwise the upper bound
//! drops (`t1 ← t`). The bounds start at `(0, 1)`, valid because the cap is
//! part of the sphere.

use serde::{Deserialize, Serialize};

use crate::alphabet::PhaseAlphabet;
use crate::continuous::{WeightLabel, WeightVector};
use crate::coupling::HermitianMatrix;
use crate::error::{Error, Result};
use crate::fractional::{assemble_bisection_qubo, build_fractional_coefficients, FractionalCoefficients};
use crate::qubo::QuboInstance;
use crate::sa::{run_sa, SaOutcome, SaParams, StopReason};

/// Anything that can search a QUBO for low (in particular negative) energy.
pub trait QuboSolver {
    fn solve(&mut self, instance: &QuboInstance) -> Result<SaOutcome>;
    fn describe(&self) -> String;
}

#[derive(Debug, Clone, Default)]
pub struct SaSolver {
    pub params: SaParams,
}

impl SaSolver {
    pub fn new(params: SaParams) -> Self {
        Self { params }
    }
}

impl QuboSolver for SaSolver {
    fn solve(&mut self, instance: &QuboInstance) -> Result<SaOutcome> {
        run_sa(instance, &self.params)
    }

    fn describe(&self) -> String {
        format!(
            "simulated-annealing(batches={}, sweeps={}, early_stop={:?})",
            self.params.batches, self.params.sweeps, self.params.early_stop
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BisectionParams {
    pub t0: f64,
    pub t1: f64,
    /// Trial point `t = α·t0 + (1 − α)·t1`.
    pub alpha: f64,
    pub tol: f64,
    /// Run the back-end once at `t1` first and fail if it finds a negative
    /// energy there.
    pub verify_upper: bool,
}

impl Default for BisectionParams {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t1: 1.0,
            alpha: 0.5,
            tol: 1e-6,
            verify_upper: false,
        }
    }
}

impl BisectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.t0 && self.t0 < self.t1 && self.t1 <= 1.0) {
            return Err(Error::invalid(format!(
                "need 0 ≤ t0 < t1 ≤ 1, got ({}, {})",
                self.t0, self.t1
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        Ok(())
    }

    /// Upper bound on the number of trials for plain bisection.
    pub fn max_updates(&self) -> usize {
        ((self.t1 - self.t0) / self.tol).log2().ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    /// Negative energy found: `t0 ← t`.
    RaiseLower,
    /// No negative energy found: `t1 ← t`.
    LowerUpper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub t: f64,
    pub decision: Decision,
    /// Minimum energy found, i.e. `−q` for this trial.
    pub best_energy: f64,
    pub bits_explored: u64,
    pub batches_run: usize,
    pub stop_reason: StopReason,
    pub t0: f64,
    pub t1: f64,
    /// Best energy of each annealing batch run for this trial.
    pub batch_best: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BisectionState {
    pub t0: f64,
    pub t1: f64,
    pub alpha: f64,
    pub tol: f64,
    pub history: Vec<BisectionStep>,
}

impl BisectionState {
    pub fn new(params: &BisectionParams) -> Self {
        Self {
            t0: params.t0,
            t1: params.t1,
            alpha: params.alpha,
            tol: params.tol,
            history: Vec::new(),
        }
    }

    pub fn done(&self) -> bool {
        self.t1 - self.t0 < self.tol
    }

    pub fn trial(&self) -> f64 {
        self.alpha * self.t0 + (1.0 - self.alpha) * self.t1
    }

    fn record(&mut self, t: f64, outcome: &SaOutcome) -> Decision {
        let decision = if outcome.negative_found {
            self.t0 = t;
            Decision::RaiseLower
        } else {
            self.t1 = t;
            Decision::LowerUpper
        };
        self.history.push(BisectionStep {
            t,
            decision,
            best_energy: outcome.best_energy,
            bits_explored: outcome.bits_explored,
            batches_run: outcome.batches_run,
            stop_reason: outcome.stop_reason,
            t0: self.t0,
            t1: self.t1,
            batch_best: outcome.batch_best.clone(),
        });
        decision
    }
}

#[derive(Debug, Clone)]
pub struct BisectionOutcome {
    pub t_star: f64,
    pub weights: WeightVector,
    pub bits: Vec<u8>,
    /// `f/g` of the returned configuration; at least `t_star` whenever some
    /// lower-bound step was accepted.
    pub achieved_ratio: f64,
    pub history: Vec<BisectionStep>,
    pub total_bits_explored: u64,
    pub warnings: Vec<String>,
}

impl BisectionOutcome {
    pub fn t_updates(&self) -> usize {
        self.history.len()
    }
}

/// Build the coefficient forms for `(A, B)` and bisect.
pub fn bisection_solve(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    alphabet: &PhaseAlphabet,
    solver: &mut dyn QuboSolver,
    params: &BisectionParams,
) -> Result<BisectionOutcome> {
    params.validate()?;
    let trace_a = a.trace().re;
    let trace_b = b.trace().re;
    if !(trace_a > 1e-14 * trace_b) {
        let n = a.nrows();
        let bits = vec![0u8; alphabet.variable_count(n)];
        let w = alphabet.bits_to_weights(&bits)?;
        let msg = format!("target matrix is numerically zero (trace {trace_a:e}); returning all-ones weights");
        log::warn!("{msg}");
        return Ok(BisectionOutcome {
            t_star: 0.0,
            weights: WeightVector::new(w, WeightLabel::discrete(alphabet.phase_count())),
            bits,
            achieved_ratio: 0.0,
            history: Vec::new(),
            total_bits_explored: 0,
            warnings: vec![msg],
        });
    }
    let coeffs = build_fractional_coefficients(a, b, alphabet)?;
    bisection_solve_coefficients(&coeffs, alphabet, solver, params)
}

/// Bisection over prepared coefficient forms.
pub fn bisection_solve_coefficients(
    coeffs: &FractionalCoefficients,
    alphabet: &PhaseAlphabet,
    solver: &mut dyn QuboSolver,
    params: &BisectionParams,
) -> Result<BisectionOutcome> {
    params.validate()?;
    let mut warnings = Vec::new();
    let mut total_bits = 0u64;

    if params.verify_upper {
        let q = assemble_bisection_qubo(coeffs, params.t1);
        let out = solver.solve(&q)?;
        total_bits += out.bits_explored;
        if out.negative_found {
            return Err(Error::Consistency(format!(
                "found ratio above the initial upper bound t1 = {} (energy {:e})",
                params.t1, out.best_energy
            )));
        }
    }

    let mut state = BisectionState::new(params);
    let mut certified: Option<(Vec<u8>, f64)> = None;
    // fallback when no trial is ever accepted
    let mut best_seen: Option<(Vec<u8>, f64)> = None;

    while !state.done() {
        let t = state.trial();
        let q = assemble_bisection_qubo(coeffs, t);
        let out = solver.solve(&q)?;
        total_bits += out.bits_explored;
        let ratio = coeffs.ratio(&out.best_config);
        if best_seen.as_ref().is_none_or(|(_, r)| ratio > *r) {
            best_seen = Some((out.best_config.clone(), ratio));
        }
        if state.record(t, &out) == Decision::RaiseLower {
            certified = Some((out.best_config, ratio));
        }
    }

    let (bits, achieved_ratio) = match certified {
        Some(c) => c,
        None => {
            warnings.push("no trial produced a negative energy; returning the best configuration seen".into());
            best_seen.expect("at least one trial runs when t0 < t1")
        }
    };
    let w = alphabet.bits_to_weights(&bits)?;
    Ok(BisectionOutcome {
        t_star: state.t0,
        weights: WeightVector::new(w, WeightLabel::discrete(alphabet.phase_count())),
        bits,
        achieved_ratio,
        total_bits_explored: total_bits,
        history: state.history,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{compute_a, compute_b, Coverage, SphereMethod};
    use crate::exhaustive::{brute_force_ratio, exhaustive_minimum, ExhaustiveSolver};
    use crate::geometry::{build_planar_array, Direction, TargetRegion};
    use crate::quadrature::QuadratureSpec;

    fn matrices(side: usize, target: Direction) -> (HermitianMatrix, HermitianMatrix) {
        let g = build_planar_array(side, 0.5, 1.0).unwrap();
        let region = TargetRegion::new(target, 0.05).unwrap();
        (
            compute_a(&g, &region, &QuadratureSpec::default()).unwrap(),
            compute_b(&g, &SphereMethod::Analytic, Coverage::FullSphere).unwrap(),
        )
    }

    #[test]
    fn first_trial_is_midpoint_and_update_count_is_bounded() {
        let (a, b) = matrices(2, Direction::from_degrees(20.0, 30.0));
        let params = BisectionParams::default();
        assert_eq!(params.max_updates(), 20);
        let out = bisection_solve(&a, &b, &PhaseAlphabet::binary(), &mut ExhaustiveSolver, &params).unwrap();
        assert_eq!(out.history[0].t, 0.5);
        assert!(out.t_updates() <= 20);
        for w in out.history.windows(2) {
            assert!(w[1].t0 >= w[0].t0 && w[1].t1 <= w[0].t1);
            assert!(w[1].t1 - w[1].t0 < w[0].t1 - w[0].t0);
        }
    }

    #[test]
    fn exhaustive_bisection_matches_brute_force() {
        for (side, alphabet) in [(2, PhaseAlphabet::binary()), (2, PhaseAlphabet::quaternary())] {
            for target in [Direction::from_degrees(0.0, 0.0), Direction::from_degrees(35.0, 200.0)] {
                let (a, b) = matrices(side, target);
                let oracle = brute_force_ratio(&a, &b, &alphabet).unwrap();
                let out = bisection_solve(&a, &b, &alphabet, &mut ExhaustiveSolver, &BisectionParams::default()).unwrap();
                assert!((out.t_star - oracle.ratio).abs() < 1e-6, "{} vs {}", out.t_star, oracle.ratio);
                assert!(out.achieved_ratio >= out.t_star);
                assert!((out.achieved_ratio - oracle.ratio).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sign_convention_around_optimum() {
        let (a, b) = matrices(2, Direction::from_degrees(12.0, 80.0));
        let alphabet = PhaseAlphabet::quaternary();
        let params = BisectionParams::default();
        let out = bisection_solve(&a, &b, &alphabet, &mut ExhaustiveSolver, &params).unwrap();
        let coeffs = build_fractional_coefficients(&a, &b, &alphabet).unwrap();
        let above = exhaustive_minimum(&assemble_bisection_qubo(&coeffs, out.t_star + 2.0 * params.tol)).unwrap();
        let below = exhaustive_minimum(&assemble_bisection_qubo(&coeffs, out.t_star - 2.0 * params.tol)).unwrap();
        assert!(above.best_energy >= 0.0);
        assert!(below.best_energy < 0.0);
    }

    #[test]
    fn degenerate_target_returns_zero() {
        let (_, b) = matrices(2, Direction::from_degrees(0.0, 0.0));
        let a = HermitianMatrix::zeros(4, 4);
        let out = bisection_solve(&a, &b, &PhaseAlphabet::binary(), &mut ExhaustiveSolver, &BisectionParams::default()).unwrap();
        assert_eq!(out.t_star, 0.0);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.weights.w.iter().all(|z| (z.re - 1.0).abs() < 1e-15));
    }

    #[test]
    fn verify_flag_and_alpha() {
        let (a, b) = matrices(2, Direction::from_degrees(5.0, 10.0));
        let params = BisectionParams {
            alpha: 0.3,
            verify_upper: true,
            ..BisectionParams::default()
        };
        let out = bisection_solve(&a, &b, &PhaseAlphabet::binary(), &mut ExhaustiveSolver, &params).unwrap();
        assert!((out.history[0].t - 0.7).abs() < 1e-15);
        let oracle = brute_force_ratio(&a, &b, &PhaseAlphabet::binary()).unwrap();
        assert!((out.t_star - oracle.ratio).abs() < 1e-6);
        assert!(BisectionParams { alpha: 1.0, ..BisectionParams::default() }.validate().is_err());
        assert!(BisectionParams { t0: 0.5, t1: 0.5, ..BisectionParams::default() }.validate().is_err());
    }
}
