//! Simulated annealing for QUBO instances, with early stopping tuned to the
//! bisection use case: the caller only needs to know whether some
//! configuration has negative energy.
//!
//! * **C1** stops as soon as any explored configuration has energy < 0. This
//!   is a certificate, never a wrong decision.
//! * **C2** stops after `G` consecutive batches without improving the best
//!   energy, where `G ∈ [G_min, G_max]` shrinks as the best energy grows (a
//!   sigmoid in the best energy). This one is a heuristic.
//!
//! Each batch draws its start configuration from a ChaCha8 stream seeded with
//! `seed + batch_index`, so runs are reproducible on every platform.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::QuboInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EarlyStop {
    Off,
    C1,
    #[default]
    #[serde(rename = "c1c2")]
    C1C2,
}

impl EarlyStop {
    pub fn c1(&self) -> bool {
        !matches!(self, EarlyStop::Off)
    }

    pub fn c2(&self) -> bool {
        matches!(self, EarlyStop::C1C2)
    }
}

impl std::str::FromStr for EarlyStop {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(EarlyStop::Off),
            "c1" => Ok(EarlyStop::C1),
            "c1c2" | "c1+c2" => Ok(EarlyStop::C1C2),
            other => Err(Error::Config(format!("unknown early-stop mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleShape {
    #[default]
    Geometric,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaParams {
    pub batches: usize,
    pub sweeps: usize,
    pub beta_hot: f64,
    pub beta_cold: f64,
    pub schedule: ScheduleShape,
    /// Divide both betas by the mean |Q| of the instance.
    pub scale_beta: bool,
    pub g_min: usize,
    pub g_max: usize,
    /// Fixed sigmoid midpoint; `None` uses the median of the positive
    /// batch-best energies seen so far.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_midpoint: Option<f64>,
    /// Fixed sigmoid width; `None` uses a fifth of the midpoint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_steepness: Option<f64>,
    pub seed: u64,
    pub early_stop: EarlyStop,
    /// Run batches concurrently in waves of this many threads (1 = sequential).
    pub threads: usize,
}

impl Default for SaParams {
    fn default() -> Self {
        Self {
            batches: 50,
            sweeps: 50,
            beta_hot: 0.1,
            beta_cold: 10.0,
            schedule: ScheduleShape::Geometric,
            scale_beta: true,
            g_min: 5,
            g_max: 15,
            g_midpoint: None,
            g_steepness: None,
            seed: 0,
            early_stop: EarlyStop::C1C2,
            threads: 1,
        }
    }
}

impl SaParams {
    pub fn validate(&self) -> Result<()> {
        if self.batches == 0 || self.sweeps == 0 {
            return Err(Error::invalid("batches and sweeps must be at least 1"));
        }
        if !(self.beta_hot >= 0.0 && self.beta_hot <= self.beta_cold) {
            return Err(Error::invalid(format!(
                "need 0 ≤ beta_hot ≤ beta_cold, got {} and {}",
                self.beta_hot, self.beta_cold
            )));
        }
        if self.g_min == 0 || self.g_min > self.g_max {
            return Err(Error::invalid("need 1 ≤ g_min ≤ g_max"));
        }
        if matches!(self.g_steepness, Some(s) if s <= 0.0) {
            return Err(Error::invalid("g_steepness must be positive"));
        }
        if self.threads == 0 {
            return Err(Error::invalid("threads must be at least 1"));
        }
        Ok(())
    }

    /// Inverse temperature for each sweep of a batch.
    pub fn betas(&self, energy_scale: f64) -> Vec<f64> {
        let scale = if self.scale_beta && energy_scale > 0.0 {
            1.0 / energy_scale
        } else {
            1.0
        };
        let (hot, cold) = (self.beta_hot * scale, self.beta_cold * scale);
        let steps = self.sweeps.saturating_sub(1).max(1) as f64;
        (0..self.sweeps)
            .map(|s| {
                let frac = s as f64 / steps;
                match self.schedule {
                    ScheduleShape::Geometric if hot > 0.0 => hot * (cold / hot).powf(frac),
                    _ => hot + (cold - hot) * frac,
                }
            })
            .collect()
    }
}

/// Parameters of the stagnation budget curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GSchedule {
    pub g_min: usize,
    pub g_max: usize,
    pub midpoint: f64,
    pub steepness: f64,
}

/// Batches without improvement tolerated before a C2 stop, given the best
/// energy so far. Non-positive energies are treated as the `0⁺` limit.
pub fn g_schedule(min_energy: f64, params: &GSchedule) -> usize {
    let e = min_energy.max(0.0);
    let z = -(e - params.midpoint) / params.steepness;
    let sigmoid = 1.0 / (1.0 + (-z).exp());
    let span = (params.g_max - params.g_min) as f64;
    let g = (params.g_min as f64 + span * sigmoid).round() as usize;
    g.clamp(params.g_min, params.g_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    C1,
    C2,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaOutcome {
    pub best_config: Vec<u8>,
    pub best_energy: f64,
    pub stop_reason: StopReason,
    /// Number of flip evaluations performed.
    pub bits_explored: u64,
    pub negative_found: bool,
    pub batches_run: usize,
    /// Best energy within each completed batch.
    pub batch_best: Vec<f64>,
    /// Running best energy after each completed batch (non-increasing).
    pub best_trace: Vec<f64>,
}

/// Symmetric coupling matrix with a zero diagonal plus the diagonal of Q,
/// laid out for row-contiguous field updates.
#[derive(Debug, Clone)]
pub struct Couplings {
    n: usize,
    offset: f64,
    diag: Vec<f64>,
    sym: Vec<f64>,
}

impl Couplings {
    pub fn from_instance(instance: &QuboInstance) -> Self {
        let n = instance.num_vars();
        let q = instance.raw();
        let mut sym = vec![0.0; n * n];
        let mut diag = vec![0.0; n];
        for i in 0..n {
            diag[i] = q[i * n + i];
            for j in (i + 1)..n {
                let v = q[i * n + j];
                sym[i * n + j] = v;
                sym[j * n + i] = v;
            }
        }
        Self {
            n,
            offset: instance.offset(),
            diag,
            sym,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.sym[i * self.n..(i + 1) * self.n]
    }

    fn energy(&self, x: &[u8]) -> f64 {
        let mut e = self.offset;
        for i in 0..self.n {
            if x[i] != 0 {
                e += self.diag[i];
                let row = self.row(i);
                for j in (i + 1)..self.n {
                    if x[j] != 0 {
                        e += row[j];
                    }
                }
            }
        }
        e
    }
}

/// Current configuration with cached local fields, so single-flip energy
/// changes cost O(1) and accepted flips cost O(N_V).
#[derive(Debug, Clone)]
pub struct LocalFields {
    x: Vec<u8>,
    /// `Q_kk + Σ_{j≠k} Q_kj x_j` for every k.
    fields: Vec<f64>,
    energy: f64,
}

impl LocalFields {
    pub fn new(couplings: &Couplings, x: Vec<u8>) -> Result<Self> {
        if x.len() != couplings.n {
            return Err(Error::invalid(format!(
                "configuration has {} bits, instance has {}",
                x.len(),
                couplings.n
            )));
        }
        let fields = Self::compute_fields(couplings, &x);
        let energy = couplings.energy(&x);
        Ok(Self { x, fields, energy })
    }

    fn compute_fields(c: &Couplings, x: &[u8]) -> Vec<f64> {
        let mut fields = c.diag.clone();
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0 {
                for (f, q) in fields.iter_mut().zip(c.row(j)) {
                    *f += q;
                }
            }
        }
        fields
    }

    pub fn config(&self) -> &[u8] {
        &self.x
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// `H(x with bit k flipped) − H(x)`.
    #[inline]
    pub fn delta(&self, k: usize) -> f64 {
        if self.x[k] == 0 {
            self.fields[k]
        } else {
            -self.fields[k]
        }
    }

    pub fn flip(&mut self, couplings: &Couplings, k: usize) {
        let d = self.delta(k);
        let step = if self.x[k] == 0 { 1.0 } else { -1.0 };
        self.x[k] ^= 1;
        self.energy += d;
        for (f, q) in self.fields.iter_mut().zip(couplings.row(k)) {
            *f += step * q;
        }
    }

    /// Recompute fields and energy from scratch; error if the cached values
    /// drifted more than `tol` (absolute, scaled by the energy magnitude).
    pub fn audit(&mut self, couplings: &Couplings, tol: f64) -> Result<()> {
        let fresh = Self::compute_fields(couplings, &self.x);
        let energy = couplings.energy(&self.x);
        let scale = 1.0 + energy.abs() + couplings.diag.iter().map(|d| d.abs()).sum::<f64>() / couplings.n.max(1) as f64;
        let drift = (energy - self.energy).abs();
        let field_drift = fresh
            .iter()
            .zip(&self.fields)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if drift > tol * scale || field_drift > tol * scale {
            return Err(Error::Consistency(format!(
                "local fields are stale: energy drift {drift:e}, field drift {field_drift:e}"
            )));
        }
        self.fields = fresh;
        self.energy = energy;
        Ok(())
    }
}

/// `H(x̄_k) − H(x)` for the configuration held by `fields`.
pub fn energy_delta(fields: &LocalFields, k: usize) -> f64 {
    fields.delta(k)
}

const AUDIT_TOL: f64 = 1e-6;

struct BatchResult {
    best_energy: f64,
    best_config: Vec<u8>,
    bits_explored: u64,
    hit_c1: bool,
}

fn run_batch(
    couplings: &Couplings,
    betas: &[f64],
    seed: u64,
    check_c1: bool,
    cancel: Option<&AtomicBool>,
) -> Result<BatchResult> {
    let n = couplings.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
    let mut state = LocalFields::new(couplings, x)?;
    let mut best_energy = state.energy();
    let mut best_config = state.config().to_vec();
    let mut bits = 0u64;

    if check_c1 && best_energy < 0.0 {
        return Ok(BatchResult {
            best_energy,
            best_config,
            bits_explored: bits,
            hit_c1: true,
        });
    }

    for &beta in betas {
        if cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
            break;
        }
        for k in 0..n {
            let d = state.delta(k);
            bits += 1;
            if check_c1 && state.energy() + d < 0.0 {
                // the cached energy carries rounding; confirm the sign exactly
                state.flip(couplings, k);
                let exact = couplings.energy(state.config());
                if exact < 0.0 {
                    return Ok(BatchResult {
                        best_energy: exact,
                        best_config: state.config().to_vec(),
                        bits_explored: bits,
                        hit_c1: true,
                    });
                }
                state.flip(couplings, k);
            }
            let accept = if d < 0.0 {
                true
            } else if beta.is_infinite() {
                false
            } else {
                rng.random::<f64>() < (-beta * d).exp()
            };
            if accept {
                state.flip(couplings, k);
                if state.energy() < best_energy {
                    best_energy = state.energy();
                    best_config.copy_from_slice(state.config());
                }
            }
        }
    }
    state.audit(couplings, AUDIT_TOL)?;
    Ok(BatchResult {
        best_energy: couplings.energy(&best_config),
        best_config,
        bits_explored: bits,
        hit_c1: false,
    })
}

struct Tracker<'a> {
    params: &'a SaParams,
    best_energy: f64,
    best_config: Vec<u8>,
    bits: u64,
    stagnant: usize,
    positive_bests: Vec<f64>,
    batch_best: Vec<f64>,
    best_trace: Vec<f64>,
}

impl Tracker<'_> {
    /// Merge one finished batch; returns a stop reason if the run should end.
    fn absorb(&mut self, r: BatchResult) -> Option<StopReason> {
        self.bits += r.bits_explored;
        self.batch_best.push(r.best_energy);
        let improved = r.best_energy < self.best_energy;
        if improved {
            self.best_energy = r.best_energy;
            self.best_config = r.best_config;
            self.stagnant = 0;
        } else {
            self.stagnant += 1;
        }
        self.best_trace.push(self.best_energy);
        if r.best_energy > 0.0 {
            self.positive_bests.push(r.best_energy);
        }
        if r.hit_c1 {
            return Some(StopReason::C1);
        }
        if self.params.early_stop.c2() && self.stagnant >= self.current_g() {
            return Some(StopReason::C2);
        }
        None
    }

    fn current_g(&self) -> usize {
        let p = self.params;
        let midpoint = p.g_midpoint.unwrap_or_else(|| median(&self.positive_bests));
        if !(midpoint > 0.0) {
            return p.g_max;
        }
        let steepness = p.g_steepness.unwrap_or(midpoint / 5.0);
        g_schedule(
            self.best_energy,
            &GSchedule {
                g_min: p.g_min,
                g_max: p.g_max,
                midpoint,
                steepness,
            },
        )
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Anneal `instance` under `params`.
pub fn run_sa(instance: &QuboInstance, params: &SaParams) -> Result<SaOutcome> {
    params.validate()?;
    let n = instance.num_vars();
    if n == 0 {
        return Err(Error::invalid("instance has no variables"));
    }
    let couplings = Couplings::from_instance(instance);
    let betas = params.betas(instance.mean_abs_coefficient());
    let check_c1 = params.early_stop.c1();

    let mut tracker = Tracker {
        params,
        best_energy: f64::INFINITY,
        best_config: vec![0; n],
        bits: 0,
        stagnant: 0,
        positive_bests: Vec::new(),
        batch_best: Vec::new(),
        best_trace: Vec::new(),
    };
    let mut stop = StopReason::Exhausted;

    if params.threads <= 1 {
        for batch in 0..params.batches {
            let r = run_batch(&couplings, &betas, params.seed.wrapping_add(batch as u64), check_c1, None)?;
            if let Some(reason) = tracker.absorb(r) {
                stop = reason;
                break;
            }
        }
    } else {
        let cancel = AtomicBool::new(false);
        let mut next = 0;
        'waves: while next < params.batches {
            let wave: Vec<usize> = (next..(next + params.threads).min(params.batches)).collect();
            next += wave.len();
            let results: Vec<Result<BatchResult>> = std::thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|&batch| {
                        let (couplings, betas, cancel) = (&couplings, &betas, &cancel);
                        s.spawn(move || {
                            let r = run_batch(couplings, betas, params.seed.wrapping_add(batch as u64), check_c1, Some(cancel));
                            if matches!(&r, Ok(b) if b.hit_c1) {
                                cancel.store(true, Ordering::Relaxed);
                            }
                            r
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("annealing thread panicked")).collect()
            });
            // a C1 hit anywhere in the wave ends the run; merge it first
            let mut results = results.into_iter().collect::<Result<Vec<_>>>()?;
            if let Some(pos) = results.iter().position(|r| r.hit_c1) {
                let hit = results.swap_remove(pos);
                tracker.absorb(hit);
                stop = StopReason::C1;
                break 'waves;
            }
            for r in results {
                if let Some(reason) = tracker.absorb(r) {
                    stop = reason;
                    break 'waves;
                }
            }
        }
    }

    let best_energy = tracker.best_energy;
    Ok(SaOutcome {
        negative_found: best_energy < 0.0,
        best_config: tracker.best_config,
        best_energy,
        stop_reason: stop,
        bits_explored: tracker.bits,
        batches_run: tracker.batch_best.len(),
        batch_best: tracker.batch_best,
        best_trace: tracker.best_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_instance(n: usize, seed: u64) -> QuboInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q: Vec<f64> = (0..n * n)
            .map(|idx| if idx / n <= idx % n { rng.random_range(-1.0..1.0) } else { 0.0 })
            .collect();
        QuboInstance::from_upper(n, q, 0.0).unwrap()
    }

    #[test]
    fn g_schedule_endpoints() {
        let p = GSchedule {
            g_min: 5,
            g_max: 15,
            midpoint: 10.0,
            steepness: 2.0,
        };
        assert_eq!(g_schedule(1e-12, &p), 15);
        assert_eq!(g_schedule(0.0, &p), 15);
        assert_eq!(g_schedule(1e9, &p), 5);
        assert_eq!(g_schedule(10.0, &p), 10);
        let mut prev = usize::MAX;
        for i in 0..200 {
            let g = g_schedule(i as f64 * 0.2, &p);
            assert!(g <= prev && (5..=15).contains(&g));
            prev = g;
        }
    }

    #[test]
    fn delta_matches_recomputation() {
        let inst = random_instance(15, 3);
        let c = Couplings::from_instance(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<u8> = (0..15).map(|_| rng.random_range(0..2)).collect();
        let state = LocalFields::new(&c, x.clone()).unwrap();
        let e0 = inst.energy(&x).unwrap();
        assert!((state.energy() - e0).abs() < 1e-12);
        for k in 0..15 {
            let mut y = x.clone();
            y[k] ^= 1;
            let d = energy_delta(&state, k);
            assert!((d - (inst.energy(&y).unwrap() - e0)).abs() < 1e-9);
            let mut s2 = state.clone();
            s2.flip(&c, k);
            let d2 = energy_delta(&s2, k);
            assert!((d + d2).abs() < 1e-9);
        }
    }

    #[test]
    fn drift_stays_small_over_many_flips() {
        let inst = random_instance(20, 8);
        let c = Couplings::from_instance(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut state = LocalFields::new(&c, vec![0; 20]).unwrap();
        for _ in 0..10_000 {
            state.flip(&c, rng.random_range(0..20));
        }
        let exact = inst.energy(state.config()).unwrap();
        assert!((state.energy() - exact).abs() < 1e-6);
        state.audit(&c, 1e-6).unwrap();
    }

    #[test]
    fn audit_detects_corruption() {
        let inst = random_instance(6, 1);
        let c = Couplings::from_instance(&inst);
        let mut state = LocalFields::new(&c, vec![1; 6]).unwrap();
        state.fields[2] += 1.0;
        assert!(matches!(state.audit(&c, 1e-6), Err(Error::Consistency(_))));
    }

    #[test]
    fn positive_instance_has_zero_ground_state() {
        let n = 8;
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                q[i * n + j] = 1.0 + (i + j) as f64 * 0.1;
            }
        }
        let inst = QuboInstance::from_upper(n, q, 0.0).unwrap();
        let out = run_sa(&inst, &SaParams::default()).unwrap();
        assert_eq!(out.best_energy, 0.0);
        assert!(out.best_config.iter().all(|&b| b == 0));
        assert!(!out.negative_found);
        assert!(matches!(out.stop_reason, StopReason::C2 | StopReason::Exhausted));
        // C2 cannot fire before g_min batches
        assert!(out.batches_run >= 5);
    }

    #[test]
    fn c1_stops_on_first_negative() {
        let inst = random_instance(12, 21);
        let out = run_sa(&inst, &SaParams::default()).unwrap();
        assert_eq!(out.stop_reason, StopReason::C1);
        assert!(out.negative_found);
        assert!(inst.energy(&out.best_config).unwrap() < 0.0);
        assert_eq!(out.batches_run, 1);
    }

    #[test]
    fn deterministic_for_identical_inputs() {
        let inst = random_instance(30, 2);
        let params = SaParams {
            early_stop: EarlyStop::Off,
            batches: 5,
            seed: 77,
            ..SaParams::default()
        };
        let a = run_sa(&inst, &params).unwrap();
        let b = run_sa(&inst, &params).unwrap();
        assert_eq!(a, b);
        assert!(a.best_trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(a.bits_explored, 5 * 50 * 30);
        assert_eq!(a.stop_reason, StopReason::Exhausted);
    }

    #[test]
    fn infinite_beta_only_descends() {
        let inst = random_instance(25, 6);
        let params = SaParams {
            beta_hot: f64::INFINITY,
            beta_cold: f64::INFINITY,
            scale_beta: false,
            early_stop: EarlyStop::Off,
            batches: 1,
            sweeps: 3,
            ..SaParams::default()
        };
        // the batch best equals the final state when only descents are taken
        let out = run_sa(&inst, &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let x: Vec<u8> = (0..25).map(|_| rng.random_range(0..2u8)).collect();
        assert!(out.best_energy <= inst.energy(&x).unwrap());
    }

    #[test]
    fn zero_beta_accepts_every_flip() {
        let inst = random_instance(10, 12);
        let params = SaParams {
            beta_hot: 0.0,
            beta_cold: 0.0,
            early_stop: EarlyStop::Off,
            batches: 1,
            sweeps: 2,
            ..SaParams::default()
        };
        let c = Couplings::from_instance(&inst);
        let betas = params.betas(inst.mean_abs_coefficient());
        assert!(betas.iter().all(|&b| b == 0.0));
        // two full sweeps flipping every bit return to the start
        let r = run_batch(&c, &betas, 0, false, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x: Vec<u8> = (0..10).map(|_| rng.random_range(0..2u8)).collect();
        let flipped: Vec<u8> = x.iter().map(|b| b ^ 1).collect();
        let best = inst.energy(&x).unwrap().min(inst.energy(&flipped).unwrap());
        assert!(r.best_energy <= best + 1e-12);
    }

    #[test]
    fn parallel_mode_finds_same_best_without_early_stop() {
        let inst = random_instance(20, 5);
        let base = SaParams {
            early_stop: EarlyStop::Off,
            batches: 8,
            ..SaParams::default()
        };
        let seq = run_sa(&inst, &base).unwrap();
        let par = run_sa(&inst, &SaParams { threads: 3, ..base }).unwrap();
        assert_eq!(seq.best_energy, par.best_energy);
        assert_eq!(seq.batch_best, par.batch_best);
    }

    #[test]
    fn params_validation() {
        assert!(SaParams { batches: 0, ..SaParams::default() }.validate().is_err());
        assert!(SaParams { beta_hot: 2.0, beta_cold: 1.0, ..SaParams::default() }.validate().is_err());
        assert!(SaParams { g_min: 16, ..SaParams::default() }.validate().is_err());
        assert_eq!("c1c2".parse::<EarlyStop>().unwrap(), EarlyStop::C1C2);
        assert!("c3".parse::<EarlyStop>().is_err());
    }

    #[test]
    fn geometric_schedule_endpoints() {
        let p = SaParams::default();
        let b = p.betas(2.0);
        assert_eq!(b.len(), 50);
        assert!((b[0] - 0.05).abs() < 1e-15);
        assert!((b[49] - 5.0).abs() < 1e-12);
    }
}
