//! Brute-force 2^N tensor-product checks of the Dicke-subspace machinery.
//!
//! Configurations are bitmasks with bit j set when particle j is |↓⟩.
//! Collective operators act configuration by configuration, and rotations
//! about x are applied as a product of single-particle rotations, so nothing
//! here shares a code path with the Dicke-basis matrices it checks.

use num_complex::Complex64;
use serde::Serialize;

use crate::dicke::{build_operator, ladder_coefficient, Axis, DickeBasis, OperatorLabel, Rotator};
use crate::error::{invalid, Error, Result};

pub const MAX_PARTICLES: usize = 12;
pub const ROTATION_ANGLES: [f64; 3] = [0.3, 0.7, 1.9];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("particle count must be at least 1"));
    }
    if n > MAX_PARTICLES {
        return Err(Error::Resource(format!(
            "full tensor space for N = {n} exceeds the oracle limit N <= {MAX_PARTICLES}"
        )));
    }
    Ok(())
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    particles: usize,
    amplitudes: Vec<Complex64>,
}

impl FullState {
    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        compensated_sum(self.amplitudes.iter().map(|a| a.norm_sqr())).sqrt()
    }

    pub fn inner(&self, other: &FullState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn support(&self) -> usize {
        self.amplitudes
            .iter()
            .filter(|a| a.norm_sqr() > 0.0)
            .count()
    }
}

/// Masks of `n` bits with exactly `q` set, in increasing order (Gosper's hack).
pub fn combinations(n: usize, q: usize) -> Vec<usize> {
    if q == 0 {
        return vec![0];
    }
    if q > n {
        return Vec::new();
    }
    let limit = 1usize << n;
    let mut out = Vec::with_capacity(binomial(n, q) as usize);
    let mut mask = (1usize << q) - 1;
    while mask < limit {
        out.push(mask);
        let lowest = mask & mask.wrapping_neg();
        let ripple = mask + lowest;
        mask = (((ripple ^ mask) >> 2) / lowest) | ripple;
    }
    out
}

/// |N/2, N/2 - q⟩ = √(q!(N-q)!/N!) Σ over configurations with q down spins.
pub fn dicke_to_full(n: usize, q: usize) -> Result<FullState> {
    check_size(n)?;
    if q > n {
        return Err(invalid(format!("q = {q} out of range 0..={n}")));
    }
    let amp = (factorial(q) as f64 * factorial(n - q) as f64 / factorial(n) as f64).sqrt();
    let mut amplitudes = vec![ZERO; 1 << n];
    for mask in combinations(n, q) {
        amplitudes[mask] = Complex64::from(amp);
    }
    Ok(FullState {
        particles: n,
        amplitudes,
    })
}

/// Sum of single-particle operators, applied configuration by configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FullOperator {
    particles: usize,
    label: OperatorLabel,
}

pub fn collective_full(n: usize, label: OperatorLabel) -> Result<FullOperator> {
    check_size(n)?;
    if let OperatorLabel::Custom(name) = &label {
        return Err(invalid(format!(
            "no full-space form for custom operator '{name}'"
        )));
    }
    Ok(FullOperator {
        particles: n,
        label,
    })
}

impl FullOperator {
    pub fn apply(&self, state: &FullState) -> Result<FullState> {
        if state.particles != self.particles {
            return Err(invalid("particle count mismatch"));
        }
        let n = self.particles;
        let psi = &state.amplitudes;
        let amplitudes = match &self.label {
            OperatorLabel::Jz => jz(n, psi),
            OperatorLabel::Jplus => jplus(n, psi),
            OperatorLabel::Jminus => jminus(n, psi),
            OperatorLabel::Jx => {
                let p = jplus(n, psi);
                let m = jminus(n, psi);
                p.iter().zip(&m).map(|(a, b)| (a + b) * 0.5).collect()
            }
            OperatorLabel::Jy => {
                let p = jplus(n, psi);
                let m = jminus(n, psi);
                p.iter()
                    .zip(&m)
                    .map(|(a, b)| (a - b) * Complex64::new(0.0, -0.5))
                    .collect()
            }
            // J² = J₋J₊ + J_z² + J_z
            OperatorLabel::Jsq => {
                let a = jminus(n, &jplus(n, psi));
                let z = jz(n, psi);
                let zz = jz(n, &z);
                (0..psi.len()).map(|i| a[i] + zz[i] + z[i]).collect()
            }
            OperatorLabel::Custom(_) => unreachable!("rejected at construction"),
        };
        Ok(FullState {
            particles: n,
            amplitudes,
        })
    }
}

fn jz(n: usize, psi: &[Complex64]) -> Vec<Complex64> {
    psi.iter()
        .enumerate()
        .map(|(mask, a)| a * (0.5 * (n as f64 - 2.0 * mask.count_ones() as f64)))
        .collect()
}

fn jminus(n: usize, psi: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; psi.len()];
    for (mask, a) in psi.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        for j in 0..n {
            if mask & (1 << j) == 0 {
                out[mask | (1 << j)] += a;
            }
        }
    }
    out
}

fn jplus(n: usize, psi: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; psi.len()];
    for (mask, a) in psi.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        for j in 0..n {
            if mask & (1 << j) != 0 {
                out[mask & !(1 << j)] += a;
            }
        }
    }
    out
}

/// exp(-iθJ_x) as the product of exp(-iθσ_x/2) on every particle.
pub fn rotate_x_full(state: &FullState, theta: f64) -> FullState {
    let c = Complex64::from((0.5 * theta).cos());
    let s = Complex64::new(0.0, -(0.5 * theta).sin());
    let mut psi = state.amplitudes.clone();
    for j in 0..state.particles {
        let bit = 1 << j;
        for mask in 0..psi.len() {
            if mask & bit == 0 {
                let (a, b) = (psi[mask], psi[mask | bit]);
                psi[mask] = c * a + s * b;
                psi[mask | bit] = s * a + c * b;
            }
        }
    }
    FullState {
        particles: state.particles,
        amplitudes: psi,
    }
}

/// Dicke coefficients of `state` and the norm of what lies outside the symmetric subspace.
pub fn project_symmetric(state: &FullState, dicke: &[FullState]) -> (Vec<Complex64>, f64) {
    let coeffs: Vec<Complex64> = dicke.iter().map(|d| d.inner(state)).collect();
    let mut residual = state.amplitudes.clone();
    for (d, c) in dicke.iter().zip(&coeffs) {
        for (r, a) in residual.iter_mut().zip(&d.amplitudes) {
            *r -= c * a;
        }
    }
    let outside = residual.iter().map(|r| r.norm_sqr()).sum::<f64>().sqrt();
    (coeffs, outside)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub particles: usize,
    pub check: String,
    pub max_deviation: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(particles: usize, check: &str, max_deviation: f64, threshold: f64) -> Self {
        Self {
            particles,
            check: check.to_string(),
            max_deviation,
            threshold,
            passed: max_deviation <= threshold,
        }
    }
}

fn max_dev(acc: &mut f64, x: f64) {
    if x.is_nan() || x > *acc {
        *acc = x;
    }
}

/// Cross-checks the Dicke basis and collective operators against the full tensor space.
pub fn verify_subspace(n: usize) -> Result<Vec<CheckResult>> {
    check_size(n)?;
    let basis = DickeBasis::new(n)?;
    let dicke: Vec<FullState> = (0..=n)
        .map(|q| dicke_to_full(n, q))
        .collect::<Result<_>>()?;
    let j = basis.j();
    let mut out = Vec::new();

    let mut exact = 0.0;
    let mut norm = 0.0;
    let mut support = 0.0;
    for (q, d) in dicke.iter().enumerate() {
        // C(N,q)·q!·(N-q)! = N!
        if binomial(n, q) * factorial(q) * factorial(n - q) != factorial(n) {
            exact = 1.0;
        }
        max_dev(&mut norm, (d.norm() - 1.0).abs());
        max_dev(
            &mut support,
            (d.support() as f64 - binomial(n, q) as f64).abs(),
        );
    }
    out.push(CheckResult::new(n, "normalization_exact", exact, 0.0));
    out.push(CheckResult::new(n, "normalization", norm, 1e-14));
    out.push(CheckResult::new(n, "support_count", support, 0.0));

    let mut ortho = 0.0;
    for (a, da) in dicke.iter().enumerate() {
        for (b, db) in dicke.iter().enumerate() {
            let expected = if a == b { 1.0 } else { 0.0 };
            max_dev(&mut ortho, (da.inner(db) - expected).norm());
        }
    }
    out.push(CheckResult::new(n, "orthogonality", ortho, 1e-14));

    let mut invariance = 0.0;
    for (label, name) in [
        (OperatorLabel::Jz, "Jz"),
        (OperatorLabel::Jplus, "Jplus"),
        (OperatorLabel::Jminus, "Jminus"),
        (OperatorLabel::Jx, "Jx"),
        (OperatorLabel::Jy, "Jy"),
    ] {
        let full = collective_full(n, label.clone())?;
        let core = build_operator(basis, name)?;
        let mut elements = 0.0;
        for (col, d) in dicke.iter().enumerate() {
            let (coeffs, outside) = project_symmetric(&full.apply(d)?, &dicke);
            max_dev(&mut invariance, outside);
            for (row, c) in coeffs.iter().enumerate() {
                max_dev(&mut elements, (c - core.matrix()[(row, col)]).norm());
            }
        }
        out.push(CheckResult::new(
            n,
            &format!("{name}_elements"),
            elements,
            1e-12,
        ));
    }

    // raising and lowering coefficients against √(J(J+1) - M(M±1))
    let lower = collective_full(n, OperatorLabel::Jminus)?;
    let raise = collective_full(n, OperatorLabel::Jplus)?;
    let mut ladder = 0.0;
    for q in 0..=n {
        let m = j - q as f64;
        if q < n {
            let c = dicke[q + 1].inner(&lower.apply(&dicke[q])?);
            max_dev(&mut ladder, (c - ladder_coefficient(j, m, false)).norm());
        }
        if q > 0 {
            let c = dicke[q - 1].inner(&raise.apply(&dicke[q])?);
            max_dev(&mut ladder, (c - ladder_coefficient(j, m, true)).norm());
        }
    }
    out.push(CheckResult::new(n, "ladder_formula", ladder, 1e-12));

    let casimir_op = collective_full(n, OperatorLabel::Jsq)?;
    let mut casimir = 0.0;
    for d in &dicke {
        let v = casimir_op.apply(d)?;
        for (a, b) in v.amplitudes.iter().zip(&d.amplitudes) {
            max_dev(&mut casimir, (a - b * (j * (j + 1.0))).norm());
        }
    }
    out.push(CheckResult::new(n, "casimir", casimir, 1e-12));

    let rotator = Rotator::new(basis);
    let mut rotation = 0.0;
    for &theta in &ROTATION_ANGLES {
        let u = rotator.matrix(Axis::X, theta)?;
        for (col, d) in dicke.iter().enumerate() {
            let (coeffs, outside) = project_symmetric(&rotate_x_full(d, theta), &dicke);
            max_dev(&mut invariance, outside);
            for (row, c) in coeffs.iter().enumerate() {
                max_dev(&mut rotation, (c - u[(row, col)]).norm());
            }
        }
    }
    out.push(CheckResult::new(n, "rotation_elements", rotation, 1e-12));
    out.push(CheckResult::new(
        n,
        "subspace_invariance",
        invariance,
        1e-12,
    ));
    Ok(out)
}
