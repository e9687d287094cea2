//! State-dependent displacement ("geometric phase") gate on a truncated
//! oscillator ⊗ Dicke space.
//!
//! The interaction-picture Hamiltonian is
//! H(t) = λ (a† e^{iδ′t} + a e^{-iδ′t}) J_z with λ = g²η/Δ. It never couples
//! different M_J, so each M_J sector is a driven oscillator and is integrated
//! on its own. In sector m the exact solution from |0⟩ is e^{iΦ_m(t)} |α_m(t)⟩ with
//!
//! α_m(t) = -(λm/δ′)(e^{iδ′t} - 1),  Φ_m(t) = (λm/δ′)² (δ′t - sin δ′t).
//!
//! After k loops (t = 2πk/δ′) the oscillator is back in |0⟩ and sector m has
//! picked up 2πk(λ/δ′)² m², which is one-axis twisting with
//! χt = -2πk(λ/δ′)².

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dicke::{DickeBasis, SpinState};
use crate::error::{invalid, Error, Result};
use crate::squeezing::oat_evolve;
use crate::sweep::SweepResult;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Minimum integrator steps per loop period.
pub const STEPS_PER_LOOP: usize = 4096;
/// Largest h·‖H‖ allowed per RK4 step.
pub const MAX_STEP_PHASE: f64 = 0.01;
/// Minimum samples per loop for phase unwrapping.
pub const MIN_SAMPLES_PER_LOOP: usize = 64;
/// Allowed population in the two highest Fock levels.
pub const CUTOFF_POPULATION_LIMIT: f64 = 1e-8;
pub const NORM_DRIFT_LIMIT: f64 = 1e-9;
/// Allowed disagreement between the h and h/2 runs.
pub const CONVERGENCE_LIMIT: f64 = 1e-8;
pub const RETURN_FIDELITY_LIMIT: f64 = 1e-6;
/// Above this the Lamb-Dicke approximation behind H is questionable.
pub const ETA_WARNING: f64 = 0.3;

/// Integrator steps per loop: at least [`STEPS_PER_LOOP`], more when the bound
/// ‖H‖ ≤ 2λJ√(n_max+1) makes h·‖H‖ exceed [`MAX_STEP_PHASE`].
pub fn steps_per_loop(params: &GateParams) -> usize {
    let h_norm =
        2.0 * params.lambda_c * params.particles as f64 / 2.0 * ((params.n_max + 1) as f64).sqrt();
    let needed = (params.period() * h_norm / MAX_STEP_PHASE).ceil() as usize;
    needed.max(STEPS_PER_LOOP)
}

/// Fock cutoff n_max = ceil(|α|² + 8|α| + 10) for a peak displacement |α|.
pub fn cutoff_rule(alpha_max: f64) -> usize {
    (alpha_max * alpha_max + 8.0 * alpha_max + 10.0).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateParams {
    /// λ = g²η/Δ, angular frequency.
    pub lambda_c: f64,
    /// Gate detuning δ′, angular frequency.
    pub delta_p: f64,
    pub n_max: usize,
    pub particles: usize,
    pub loops: u32,
    /// Lamb-Dicke parameter; informational only.
    pub eta: f64,
}

impl GateParams {
    /// Parameters with the Fock cutoff chosen by [`cutoff_rule`].
    pub fn new(particles: usize, lambda_c: f64, delta_p: f64, loops: u32) -> Result<Self> {
        let mut p = Self {
            lambda_c,
            delta_p,
            n_max: 0,
            particles,
            loops,
            eta: 0.1,
        };
        p.check()?;
        p.n_max = cutoff_rule(p.alpha_max());
        Ok(p)
    }

    /// Dimensionless form with δ′ = 1.
    pub fn from_ratio(particles: usize, lambda_over_delta: f64, loops: u32) -> Result<Self> {
        Self::new(particles, lambda_over_delta, 1.0, loops)
    }

    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(invalid(format!("n_max must be at least 2, got {n_max}")));
        }
        self.n_max = n_max;
        Ok(self)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta < 0.0 {
            return Err(invalid(format!(
                "eta must be finite and nonnegative, got {eta}"
            )));
        }
        self.eta = eta;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        DickeBasis::new(self.particles)?;
        if !self.delta_p.is_finite() || self.delta_p <= 0.0 {
            return Err(invalid(format!(
                "detuning delta' must be positive, got {}",
                self.delta_p
            )));
        }
        if !self.lambda_c.is_finite() {
            return Err(invalid(format!(
                "coupling lambda must be finite, got {}",
                self.lambda_c
            )));
        }
        if self.loops == 0 {
            return Err(invalid("loop count must be at least 1"));
        }
        Ok(())
    }

    /// Validates and returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        self.check()?;
        if self.n_max < 2 {
            return Err(invalid(format!(
                "n_max must be at least 2, got {}",
                self.n_max
            )));
        }
        let mut warnings = Vec::new();
        if self.eta >= ETA_WARNING {
            warnings.push(format!(
                "Lamb-Dicke parameter eta = {} >= {ETA_WARNING}; the effective Hamiltonian assumes eta << 1",
                self.eta
            ));
        }
        let rule = cutoff_rule(self.alpha_max());
        if self.n_max < rule {
            warnings.push(format!(
                "n_max = {} is below the cutoff rule value {rule}",
                self.n_max
            ));
        }
        Ok(warnings)
    }

    pub fn basis(&self) -> DickeBasis {
        DickeBasis::new(self.particles).expect("validated at construction")
    }

    pub fn ratio(&self) -> f64 {
        self.lambda_c / self.delta_p
    }

    /// One loop period 2π/δ′.
    pub fn period(&self) -> f64 {
        TAU / self.delta_p
    }

    pub fn gate_time(&self) -> f64 {
        self.loops as f64 * self.period()
    }

    /// Peak displacement 2|λ|J/δ′ over all sectors.
    pub fn alpha_max(&self) -> f64 {
        2.0 * self.ratio().abs() * self.particles as f64 / 2.0
    }

    /// Per-loop geometric phase coefficient: Φ(m) = coefficient · m² after one loop.
    pub fn phase_per_loop(&self) -> f64 {
        TAU * self.ratio() * self.ratio()
    }

    /// Twisting strength the gate implements after `loops` closed loops.
    pub fn chi_t_eff(&self) -> f64 {
        -(self.loops as f64) * self.phase_per_loop()
    }
}

/// Closed-form sector solution: (α_m(t), Φ_m(t)).
pub fn evolve_analytic(params: &GateParams, m: f64, t: f64) -> (Complex64, f64) {
    let r = params.ratio() * m;
    let wt = params.delta_p * t;
    let alpha = -(Complex64::from_polar(1.0, wt) - 1.0) * r;
    (alpha, r * r * (wt - wt.sin()))
}

/// Amplitudes over (n, M_J), stored sector by sector: index = k·(n_max+1) + n.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    n_max: usize,
    basis: DickeBasis,
    amplitudes: Vec<Complex64>,
}

impl JointState {
    pub fn new(n_max: usize, basis: DickeBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        let expected = (n_max + 1) * basis.dim();
        if amplitudes.len() != expected {
            return Err(invalid(format!(
                "expected {expected} joint amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let s = Self {
            n_max,
            basis,
            amplitudes,
        };
        let norm = s.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("joint state norm is {norm}, expected 1")));
        }
        Ok(s)
    }

    /// |0⟩ ⊗ spin.
    pub fn ground_product(n_max: usize, spin: &SpinState) -> Self {
        let basis = spin.basis();
        let mut amplitudes = vec![ZERO; (n_max + 1) * basis.dim()];
        for (k, a) in spin.amplitudes().iter().enumerate() {
            amplitudes[k * (n_max + 1)] = *a;
        }
        Self {
            n_max,
            basis,
            amplitudes,
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn basis(&self) -> DickeBasis {
        self.basis
    }

    pub fn amplitude(&self, n: usize, m_index: usize) -> Complex64 {
        self.amplitudes[m_index * (self.n_max + 1) + n]
    }

    pub fn sector(&self, m_index: usize) -> &[Complex64] {
        let w = self.n_max + 1;
        &self.amplitudes[m_index * w..(m_index + 1) * w]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn sector_population(&self, m_index: usize) -> f64 {
        self.sector(m_index).iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨a†a⟩ over the whole state.
    pub fn nbar(&self) -> f64 {
        (0..self.basis.dim())
            .map(|k| {
                self.sector(k)
                    .iter()
                    .enumerate()
                    .map(|(n, a)| n as f64 * a.norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }

    /// Reduced spin density matrix after tracing out the oscillator.
    pub fn reduced_density(&self) -> nalgebra::DMatrix<Complex64> {
        let dim = self.basis.dim();
        nalgebra::DMatrix::from_fn(dim, dim, |r, c| {
            self.sector(r)
                .iter()
                .zip(self.sector(c))
                .map(|(a, b)| a * b.conj())
                .sum()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorTrace {
    pub m: f64,
    pub population: f64,
    /// Conditional ⟨n̂⟩ within the sector.
    pub nbar: Vec<f64>,
    /// Unwrapped arg⟨initial_m|ψ_m(t)⟩, relative to the m = 0 sector when that is populated.
    pub phase: Vec<f64>,
    /// |⟨initial_m|ψ_m(t)⟩|² / population², the motional return probability.
    pub return_fidelity: Vec<f64>,
    /// Return fidelity at each loop closure t = k·2π/δ′ ≤ t_end.
    pub closure_fidelity: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub step: f64,
    pub half_step: f64,
    /// Largest difference between the h and h/2 runs: relative ⟨n̂⟩, return
    /// fidelity, overlap-weighted phase and final amplitudes.
    pub max_difference: f64,
    pub max_norm_drift: f64,
    pub max_top_population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateTrace {
    pub times: Vec<f64>,
    pub closure_times: Vec<f64>,
    pub sectors: Vec<SectorTrace>,
    pub n_max: usize,
    pub convergence: ConvergenceReport,
}

impl GateTrace {
    pub fn sector(&self, m: f64) -> Option<&SectorTrace> {
        self.sectors.iter().find(|s| (s.m - m).abs() < 1e-9)
    }

    /// Long format: t, m, nbar, phase, return_fidelity, sector-major.
    pub fn to_sweep_result(&self) -> SweepResult {
        let mut cols: [Vec<f64>; 5] = Default::default();
        for s in &self.sectors {
            for (i, &t) in self.times.iter().enumerate() {
                cols[0].push(t);
                cols[1].push(s.m);
                cols[2].push(s.nbar[i]);
                cols[3].push(s.phase[i]);
                cols[4].push(s.return_fidelity[i]);
            }
        }
        let [t, m, nbar, phase, fid] = cols;
        SweepResult::new()
            .with_column("t", t)
            .with_column("m", m)
            .with_column("nbar", nbar)
            .with_column("phase", phase)
            .with_column("return_fidelity", fid)
    }
}

/// Event times: uniform samples plus loop closures, merged and sorted.
fn event_times(samples: &[f64], closures: &[f64], t_end: f64) -> Vec<f64> {
    let mut all: Vec<f64> = samples.iter().chain(closures).copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    let eps = 1e-12 * t_end;
    all.dedup_by(|b, a| (*b - *a).abs() <= eps);
    all
}

fn position_of(events: &[f64], t: f64, eps: f64) -> usize {
    events
        .iter()
        .position(|&e| (e - t).abs() <= eps)
        .expect("time is one of the events")
}

struct SectorRun {
    /// ψ at every event time.
    snapshots: Vec<Vec<Complex64>>,
    max_norm_drift: f64,
    max_top_population: f64,
}

/// Classical RK4 on one sector of i dψ/dt = λm (a† e^{iδ′t} + a e^{-iδ′t}) ψ.
fn integrate_sector(
    coupling: f64,
    delta: f64,
    initial: &[Complex64],
    events: &[f64],
    max_step: f64,
) -> SectorRun {
    let len = initial.len();
    let sqrt_n: Vec<f64> = (0..len).map(|n| (n as f64).sqrt()).collect();
    let minus_i = Complex64::new(0.0, -1.0);
    let deriv = |t: f64, psi: &[Complex64], out: &mut [Complex64]| {
        let e = Complex64::from_polar(coupling, delta * t) * minus_i;
        let ec = Complex64::from_polar(coupling, -delta * t) * minus_i;
        for n in 0..len {
            let mut acc = ZERO;
            if n > 0 {
                acc += e * (sqrt_n[n] * psi[n - 1]);
            }
            if n + 1 < len {
                acc += ec * (sqrt_n[n + 1] * psi[n + 1]);
            }
            out[n] = acc;
        }
    };

    let norm0: f64 = initial.iter().map(|a| a.norm_sqr()).sum();
    let top = |psi: &[Complex64]| -> f64 {
        let p = psi[len - 1].norm_sqr()
            + if len >= 2 {
                psi[len - 2].norm_sqr()
            } else {
                0.0
            };
        if norm0 > 0.0 {
            p / norm0
        } else {
            0.0
        }
    };

    let mut psi = initial.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![ZERO; len],
        vec![ZERO; len],
        vec![ZERO; len],
        vec![ZERO; len],
        vec![ZERO; len],
    );
    let mut snapshots = Vec::with_capacity(events.len());
    let mut max_norm_drift = 0.0f64;
    let mut max_top_population = top(&psi);
    let mut t = 0.0;
    for &target in events {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / max_step).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for s in 0..steps {
                let t0 = t + s as f64 * h;
                deriv(t0, &psi, &mut k1);
                for i in 0..len {
                    tmp[i] = psi[i] + k1[i] * (0.5 * h);
                }
                deriv(t0 + 0.5 * h, &tmp, &mut k2);
                for i in 0..len {
                    tmp[i] = psi[i] + k2[i] * (0.5 * h);
                }
                deriv(t0 + 0.5 * h, &tmp, &mut k3);
                for i in 0..len {
                    tmp[i] = psi[i] + k3[i] * h;
                }
                deriv(t0 + h, &tmp, &mut k4);
                for i in 0..len {
                    psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
                }
                max_top_population = max_top_population.max(top(&psi));
            }
            t = target;
        }
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        max_norm_drift = max_norm_drift.max((norm.sqrt() - norm0.sqrt()).abs());
        snapshots.push(psi.clone());
    }
    SectorRun {
        snapshots,
        max_norm_drift,
        max_top_population,
    }
}

struct Run {
    sectors: Vec<(usize, SectorRun)>,
}

fn run_all(params: &GateParams, initial: &JointState, events: &[f64], max_step: f64) -> Run {
    let basis = initial.basis;
    let sectors = (0..basis.dim())
        .into_par_iter()
        .filter(|&k| initial.sector_population(k) > 0.0)
        .map(|k| {
            let coupling = params.lambda_c * basis.m(k);
            (
                k,
                integrate_sector(
                    coupling,
                    params.delta_p,
                    initial.sector(k),
                    events,
                    max_step,
                ),
            )
        })
        .collect();
    Run { sectors }
}

fn wrap_to_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Integrates the joint state from t = 0 to `t_end`, sampling observables at
/// `sample_count` uniform times (both endpoints included).
///
/// The run is repeated at half the step size; observables must agree to
/// [`CONVERGENCE_LIMIT`].
pub fn evolve_numeric(
    params: &GateParams,
    initial: &JointState,
    t_end: f64,
    sample_count: usize,
) -> Result<(GateTrace, JointState)> {
    params.validate()?;
    if initial.n_max != params.n_max || initial.basis != params.basis() {
        return Err(invalid(format!(
            "joint state (n_max = {}, N = {}) does not match gate parameters (n_max = {}, N = {})",
            initial.n_max,
            initial.basis.particles(),
            params.n_max,
            params.particles
        )));
    }
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(invalid(format!("t_end must be positive, got {t_end}")));
    }
    let period = params.period();
    let loops_covered = (t_end / period - 1e-9).ceil().max(1.0) as usize;
    let min_samples = MIN_SAMPLES_PER_LOOP * loops_covered + 1;
    if sample_count < min_samples {
        return Err(invalid(format!(
            "sample_count = {sample_count} is too sparse for phase unwrapping; need at least {min_samples}"
        )));
    }

    let intervals = sample_count - 1;
    let times: Vec<f64> = (0..sample_count)
        .map(|i| {
            if i == intervals {
                t_end
            } else {
                t_end * i as f64 / intervals as f64
            }
        })
        .collect();
    let closure_times: Vec<f64> = (1..)
        .map(|k| k as f64 * period)
        .take_while(|&c| c <= t_end * (1.0 + 1e-12))
        .collect();
    let events = event_times(&times, &closure_times, t_end);
    let eps = 1e-12 * t_end;
    let sample_idx: Vec<usize> = times
        .iter()
        .map(|&t| position_of(&events, t, eps))
        .collect();
    let closure_idx: Vec<usize> = closure_times
        .iter()
        .map(|&t| position_of(&events, t, eps))
        .collect();

    let step = period / steps_per_loop(params) as f64;
    let coarse = run_all(params, initial, &events, step);
    let fine = run_all(params, initial, &events, step / 2.0);

    let max_top = coarse
        .sectors
        .iter()
        .chain(&fine.sectors)
        .map(|(_, r)| r.max_top_population)
        .fold(0.0, f64::max);
    if max_top >= CUTOFF_POPULATION_LIMIT {
        let rule = cutoff_rule(params.alpha_max());
        let required = if params.n_max < rule {
            rule
        } else {
            2 * params.n_max
        };
        return Err(Error::CutoffOverflow {
            n_max: params.n_max,
            required,
            population: max_top,
        });
    }
    let max_norm_drift = coarse
        .sectors
        .iter()
        .chain(&fine.sectors)
        .map(|(_, r)| r.max_norm_drift)
        .fold(0.0, f64::max);
    if max_norm_drift > NORM_DRIFT_LIMIT {
        return Err(Error::StepSize(format!(
            "norm drift {max_norm_drift:e} exceeds {NORM_DRIFT_LIMIT:e}"
        )));
    }

    let basis = initial.basis;
    let observe = |run: &Run| -> Vec<SectorTrace> {
        let mut traces: Vec<SectorTrace> = run
            .sectors
            .iter()
            .map(|(k, r)| {
                let init = initial.sector(*k);
                let pop = initial.sector_population(*k);
                let overlap = |psi: &[Complex64]| -> Complex64 {
                    init.iter().zip(psi).map(|(a, b)| a.conj() * b).sum()
                };
                let nbar = sample_idx
                    .iter()
                    .map(|&i| {
                        r.snapshots[i]
                            .iter()
                            .enumerate()
                            .map(|(n, a)| n as f64 * a.norm_sqr())
                            .sum::<f64>()
                            / pop
                    })
                    .collect();
                let raw: Vec<f64> = sample_idx
                    .iter()
                    .map(|&i| overlap(&r.snapshots[i]).arg())
                    .collect();
                let mut phase = Vec::with_capacity(raw.len());
                for (i, &p) in raw.iter().enumerate() {
                    if i == 0 {
                        phase.push(p);
                    } else {
                        let prev: f64 = phase[i - 1];
                        phase.push(prev + wrap_to_pi(p - raw[i - 1]));
                    }
                }
                let fidelity = |i: usize| overlap(&r.snapshots[i]).norm_sqr() / (pop * pop);
                SectorTrace {
                    m: basis.m(*k),
                    population: pop,
                    nbar,
                    phase,
                    return_fidelity: sample_idx.iter().map(|&i| fidelity(i)).collect(),
                    closure_fidelity: closure_idx.iter().map(|&i| fidelity(i)).collect(),
                }
            })
            .collect();
        if let Some(reference) = traces.iter().find(|s| s.m == 0.0).map(|s| s.phase.clone()) {
            for s in &mut traces {
                for (p, r) in s.phase.iter_mut().zip(&reference) {
                    *p -= r;
                }
            }
        }
        traces
    };
    let sectors = observe(&coarse);
    let check = observe(&fine);

    let mut max_difference = 0.0f64;
    for (a, b) in sectors.iter().zip(&check) {
        for (x, y) in a.nbar.iter().zip(&b.nbar) {
            max_difference = max_difference.max((x - y).abs() / x.abs().max(1.0));
        }
        for (x, y) in a.return_fidelity.iter().zip(&b.return_fidelity) {
            max_difference = max_difference.max((x - y).abs());
        }
        // phase is ill-conditioned where the return overlap is tiny; weight by its magnitude
        for ((x, y), f) in a.phase.iter().zip(&b.phase).zip(&a.return_fidelity) {
            max_difference = max_difference.max((x - y).abs() * f.max(0.0).sqrt());
        }
    }
    let last = events.len() - 1;
    for ((_, a), (_, b)) in coarse.sectors.iter().zip(&fine.sectors) {
        for (x, y) in a.snapshots[last].iter().zip(&b.snapshots[last]) {
            max_difference = max_difference.max((x - y).norm());
        }
    }
    if max_difference > CONVERGENCE_LIMIT {
        return Err(Error::StepSize(format!(
            "step-halving check disagrees by {max_difference:e} (limit {CONVERGENCE_LIMIT:e})"
        )));
    }

    let width = params.n_max + 1;
    let mut amplitudes = vec![ZERO; width * basis.dim()];
    for (k, r) in &coarse.sectors {
        amplitudes[k * width..(k + 1) * width].copy_from_slice(&r.snapshots[last]);
    }
    let final_state = JointState {
        n_max: params.n_max,
        basis,
        amplitudes,
    };
    let trace = GateTrace {
        times,
        closure_times,
        sectors,
        n_max: params.n_max,
        convergence: ConvergenceReport {
            step,
            half_step: step / 2.0,
            max_difference,
            max_norm_drift,
            max_top_population: max_top,
        },
    };
    Ok((trace, final_state))
}

/// Samples per loop large enough that the fastest sector's phase moves < π/4 between samples.
pub fn samples_per_loop(params: &GateParams) -> usize {
    let j = params.particles as f64 / 2.0;
    // phase rate peaks at 2(λm)²/δ′, i.e. 2·2π(λJ/δ′)²/(2π) per unit δ′t
    let per_loop_peak = 2.0 * TAU * (params.ratio() * j).powi(2);
    let needed = (per_loop_peak / (PI / 4.0)).ceil() as usize;
    needed.max(2 * MIN_SAMPLES_PER_LOOP)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseFit {
    /// Columns: m, phase, fit_residual.
    pub table: SweepResult,
    /// Least-squares a in Φ(m) = a·m².
    pub coefficient: f64,
    /// loops·2π·(λ/δ′)² from the closed form.
    pub analytic_coefficient: f64,
    pub relative_error: f64,
    pub max_residual: f64,
    /// max |Φ(m) - Φ(-m)| / 2.
    pub odd_component: f64,
    /// Printed comparison curve f(M_J) = loops·4π·λ²·M_J²/δ′ evaluated with these parameters.
    pub reference_curve_coefficient: f64,
    /// reference_curve_coefficient / coefficient.
    pub reference_curve_ratio: f64,
    pub convergence: ConvergenceReport,
}

/// Accumulated phase of each |0⟩|M_J⟩ after `loops` closed loops, with a quadratic fit.
pub fn phase_vs_m(params: &GateParams) -> Result<PhaseFit> {
    params.validate()?;
    let basis = params.basis();
    let dim = basis.dim();
    // Sectors evolve independently, so one run on an equal superposition covers every M_J.
    let amp = Complex64::from(1.0 / (dim as f64).sqrt());
    let spin = SpinState::new(basis, vec![amp; dim])?;
    let initial = JointState::ground_product(params.n_max, &spin);
    let samples = samples_per_loop(params) * params.loops as usize + 1;
    let (trace, _) = evolve_numeric(params, &initial, params.gate_time(), samples)?;

    let ms: Vec<f64> = trace.sectors.iter().map(|s| s.m).collect();
    let phases: Vec<f64> = trace
        .sectors
        .iter()
        .map(|s| *s.phase.last().expect("samples"))
        .collect();
    let m4: f64 = ms.iter().map(|m| m.powi(4)).sum();
    let coefficient = if m4 > 0.0 {
        ms.iter().zip(&phases).map(|(m, p)| p * m * m).sum::<f64>() / m4
    } else {
        0.0
    };
    let residuals: Vec<f64> = ms
        .iter()
        .zip(&phases)
        .map(|(m, p)| p - coefficient * m * m)
        .collect();
    let max_residual = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let mut odd_component = 0.0f64;
    for (m, p) in ms.iter().zip(&phases) {
        if let Some(j) = ms.iter().position(|x| (x + m).abs() < 1e-9) {
            odd_component = odd_component.max(0.5 * (p - phases[j]).abs());
        }
    }
    let analytic_coefficient = params.loops as f64 * params.phase_per_loop();
    let relative_error = if analytic_coefficient != 0.0 {
        (coefficient - analytic_coefficient).abs() / analytic_coefficient.abs()
    } else {
        coefficient.abs()
    };
    let reference_curve_coefficient =
        params.loops as f64 * 2.0 * TAU * params.lambda_c * params.lambda_c / params.delta_p;

    let mut table = SweepResult::new()
        .with_column("m", ms)
        .with_column("phase", phases)
        .with_column("fit_residual", residuals);
    table.set_meta("coefficient", coefficient);
    table.set_meta("analytic_coefficient", analytic_coefficient);
    Ok(PhaseFit {
        table,
        coefficient,
        analytic_coefficient,
        relative_error,
        max_residual,
        odd_component,
        reference_curve_coefficient,
        reference_curve_ratio: if coefficient != 0.0 {
            reference_curve_coefficient / coefficient
        } else {
            f64::NAN
        },
        convergence: trace.convergence,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezerReport {
    /// Spin state with the oscillator projected back onto |0⟩.
    pub spin_out: SpinState,
    pub chi_t_eff: f64,
    /// ⟨ψ_OAT| ρ_spin |ψ_OAT⟩ for the reduced density matrix ρ_spin.
    pub oat_overlap: f64,
    pub min_return_fidelity: f64,
    /// Tr ρ_spin².
    pub purity: f64,
    pub convergence: ConvergenceReport,
}

/// Runs |0⟩ ⊗ spin_in through the gate for `loops` closed loops, traces out the
/// oscillator and compares with ideal twisting at [`GateParams::chi_t_eff`].
pub fn gate_as_squeezer(params: &GateParams, spin_in: &SpinState) -> Result<SqueezerReport> {
    params.validate()?;
    if spin_in.basis() != params.basis() {
        return Err(invalid("spin state and gate parameters disagree on N"));
    }
    if (spin_in.norm() - 1.0).abs() > 1e-10 {
        return Err(invalid("input spin state must be normalized"));
    }
    let initial = JointState::ground_product(params.n_max, spin_in);
    let samples = MIN_SAMPLES_PER_LOOP * params.loops as usize + 1;
    let (trace, out) = evolve_numeric(params, &initial, params.gate_time(), samples)?;

    let mut min_return_fidelity = 1.0f64;
    for s in &trace.sectors {
        let f = *s
            .closure_fidelity
            .last()
            .expect("gate ends on a loop closure");
        if f < 1.0 - RETURN_FIDELITY_LIMIT {
            return Err(Error::OpenLoop {
                m: s.m,
                fidelity: f,
            });
        }
        min_return_fidelity = min_return_fidelity.min(f);
    }

    let rho = out.reduced_density();
    let purity = (&rho * &rho).trace().re;
    let chi_t_eff = params.chi_t_eff();
    let ideal = oat_evolve(spin_in, chi_t_eff)?;
    let v = ideal.amplitudes();
    let oat_overlap = (v.adjoint() * &rho * v)[(0, 0)].re;
    let projected: Vec<Complex64> = (0..out.basis().dim())
        .map(|k| out.amplitude(0, k))
        .collect();
    let spin_out = SpinState::normalized(out.basis(), projected)?;
    Ok(SqueezerReport {
        spin_out,
        chi_t_eff,
        oat_overlap,
        min_return_fidelity,
        purity,
        convergence: trace.convergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::squeezing::coherent_state;
    use approx::assert_abs_diff_eq;

    fn eigen_initial(params: &GateParams, m: f64) -> JointState {
        let b = params.basis();
        let spin = SpinState::basis_state(b, b.index_of(m).unwrap()).unwrap();
        JointState::ground_product(params.n_max, &spin)
    }

    #[test]
    fn cutoff_rule_example() {
        assert_eq!(cutoff_rule(0.5), 15);
        let p = GateParams::from_ratio(10, 0.05, 5).unwrap();
        assert_eq!(p.n_max, 15);
    }

    #[test]
    fn parameter_validation() {
        assert!(GateParams::new(4, 0.1, 0.0, 1).is_err());
        assert!(GateParams::new(4, 0.1, -1.0, 1).is_err());
        assert!(GateParams::new(4, f64::NAN, 1.0, 1).is_err());
        assert!(GateParams::new(4, 0.1, 1.0, 0).is_err());
        assert!(GateParams::new(0, 0.1, 1.0, 1).is_err());
        let p = GateParams::from_ratio(4, 0.1, 1).unwrap();
        assert!(p.with_n_max(1).is_err());
        assert!(p.validate().unwrap().is_empty());
        let warned = p.with_eta(0.4).unwrap().validate().unwrap();
        assert_eq!(warned.len(), 1);
        assert!(p.with_eta(-0.1).is_err());
    }

    #[test]
    fn analytic_examples() {
        let p = GateParams::new(10, 0.3, 2.0, 1).unwrap();
        for t in [0.0, 0.7, 3.1] {
            let (a, phi) = evolve_analytic(&p, 0.0, t);
            assert_eq!((a.norm(), phi), (0.0, 0.0));
        }
        let (a, phi) = evolve_analytic(&p, 3.0, p.period());
        assert!(a.norm() < 1e-14);
        assert_abs_diff_eq!(phi, TAU * (0.15f64 * 3.0).powi(2), epsilon = 1e-12);
        let (a, _) = evolve_analytic(&p, -3.0, PI / p.delta_p);
        assert_abs_diff_eq!(a.norm(), 2.0 * 0.15 * 3.0, epsilon = 1e-14);
    }

    #[test]
    fn analytic_phase_matches_quadrature_of_magnus_term() {
        // Φ(t) = ∫₀ᵗ dt₁ ∫₀^{t₁} dt₂ (λm)² sin(δ′(t₁ - t₂)), Simpson on both integrals
        let p = GateParams::new(4, 0.4, 1.3, 1).unwrap();
        let m = 2.0;
        let t = 4.1;
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let c = (p.lambda_c * m).powi(2);
        let inner = |t1: f64| simpson(&|t2: f64| c * (p.delta_p * (t1 - t2)).sin(), 0.0, t1, 800);
        let outer = simpson(&inner, 0.0, t, 800);
        assert_abs_diff_eq!(evolve_analytic(&p, m, t).1, outer, epsilon = 1e-9);
    }

    #[test]
    fn m_zero_sector_is_frozen() {
        let p = GateParams::from_ratio(4, 0.05, 1).unwrap();
        let init = eigen_initial(&p, 0.0);
        let (trace, out) = evolve_numeric(&p, &init, p.period(), 65).unwrap();
        assert_eq!(out, init);
        let s = trace.sector(0.0).unwrap();
        assert!(s.nbar.iter().all(|&n| n == 0.0));
        assert!(s.phase.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_loop_returns_to_ground() {
        let p = GateParams::from_ratio(2, 0.05, 1).unwrap();
        let init = eigen_initial(&p, 1.0);
        let (trace, _) = evolve_numeric(&p, &init, p.period(), 129).unwrap();
        let s = trace.sector(1.0).unwrap();
        let peak = s.nbar.iter().cloned().fold(0.0, f64::max);
        assert_abs_diff_eq!(peak, (2.0 * 0.05f64).powi(2), epsilon = 1e-9);
        assert!(s.nbar.last().unwrap().abs() < 1e-10);
        assert!(s.closure_fidelity[0] > 1.0 - 1e-10);
    }

    #[test]
    fn higher_m_reaches_higher_excitation() {
        let p = GateParams::from_ratio(10, 0.05, 1).unwrap();
        let b = p.basis();
        let mut amps = vec![Complex64::from(0.0); b.dim()];
        amps[b.index_of(1.0).unwrap()] = Complex64::from(1.0);
        amps[b.index_of(5.0).unwrap()] = Complex64::from(1.0);
        let spin = SpinState::normalized(b, amps).unwrap();
        let init = JointState::ground_product(p.n_max, &spin);
        let (trace, _) = evolve_numeric(&p, &init, p.period(), 129).unwrap();
        let peak = |m: f64| {
            trace
                .sector(m)
                .unwrap()
                .nbar
                .iter()
                .cloned()
                .fold(0.0, f64::max)
        };
        assert_abs_diff_eq!(peak(5.0) / peak(1.0), 25.0, epsilon = 1e-6);
    }

    #[test]
    fn sector_populations_are_conserved() {
        let p = GateParams::from_ratio(6, 0.08, 2).unwrap();
        let spin = coherent_state(6).unwrap();
        let init = JointState::ground_product(p.n_max, &spin);
        let (_, out) = evolve_numeric(&p, &init, 1.3 * p.period(), 257).unwrap();
        for k in 0..p.basis().dim() {
            assert!((out.sector_population(k) - init.sector_population(k)).abs() <= 1e-12);
        }
    }

    #[test]
    fn cutoff_overflow_suggests_larger_n_max() {
        let p = GateParams::from_ratio(10, 0.3, 1)
            .unwrap()
            .with_n_max(4)
            .unwrap();
        let init = eigen_initial(&p, 5.0);
        match evolve_numeric(&p, &init, p.period(), 65) {
            Err(Error::CutoffOverflow {
                n_max, required, ..
            }) => {
                assert_eq!(n_max, 4);
                assert_eq!(required, cutoff_rule(p.alpha_max()));
            }
            other => panic!("expected cutoff overflow, got {other:?}"),
        }
    }

    #[test]
    fn sparse_sampling_rejected() {
        let p = GateParams::from_ratio(2, 0.05, 2).unwrap();
        let init = eigen_initial(&p, 1.0);
        assert!(evolve_numeric(&p, &init, p.gate_time(), 64).is_err());
        assert!(evolve_numeric(&p, &init, -1.0, 200).is_err());
        let other = GateParams::from_ratio(3, 0.05, 2).unwrap();
        assert!(evolve_numeric(&other, &init, 1.0, 200).is_err());
    }

    #[test]
    fn eigenstate_passes_through_up_to_phase() {
        let p = GateParams::from_ratio(6, 0.05, 1).unwrap();
        let top = SpinState::stretched(p.basis());
        let r = gate_as_squeezer(&p, &top).unwrap();
        assert_abs_diff_eq!(r.spin_out.fidelity(&top).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn gate_matches_twisting_for_six_spins() {
        let p = GateParams::from_ratio(6, 0.05, 1).unwrap();
        let r = gate_as_squeezer(&p, &coherent_state(6).unwrap()).unwrap();
        assert!(r.oat_overlap >= 1.0 - 1e-6, "{}", r.oat_overlap);
        assert!(r.purity > 1.0 - 1e-6);
        assert_abs_diff_eq!(r.chi_t_eff, -TAU * 0.0025, epsilon = 1e-15);
    }

    #[test]
    fn phase_fit_is_quadratic() {
        let p = GateParams::from_ratio(10, 0.05, 5).unwrap();
        let fit = phase_vs_m(&p).unwrap();
        assert!(fit.relative_error <= 1e-4, "{}", fit.relative_error);
        assert!(fit.max_residual <= 1e-6 * fit.coefficient.abs() * 25.0);
        assert!(fit.odd_component <= 1e-8);
        assert_eq!(fit.table.rows(), 11);
    }

    #[test]
    fn unwrap_handles_branch_cut() {
        assert_abs_diff_eq!(wrap_to_pi(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_to_pi(-0.5), -0.5);
        assert_abs_diff_eq!(wrap_to_pi(TAU - 0.1), -0.1, epsilon = 1e-12);
    }
}
