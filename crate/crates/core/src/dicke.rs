//! Symmetric (Dicke) subspace of N spin-1/2 particles.
//!
//! States are stored over the basis |J, M⟩ with J = N/2 and amplitude index 0
//! holding M = +J, index k holding M = J - k. Collective operators are dense
//! `dim × dim` complex matrices; the ladder operators are also applied
//! directly from their band where that matters for speed (moments, sweeps).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Tolerance used when checking that user-supplied amplitudes are normalized.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Largest particle count accepted by the dense representation.
pub const MAX_PARTICLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DickeBasis {
    particles: usize,
}

impl DickeBasis {
    pub fn new(particles: usize) -> Result<Self> {
        if particles == 0 {
            return Err(invalid("particle count N must be at least 1"));
        }
        if particles > MAX_PARTICLES {
            return Err(Error::Resource(format!(
                "N = {particles} exceeds the dense limit of {MAX_PARTICLES}"
            )));
        }
        Ok(Self { particles })
    }

    /// Signed entry point for boundaries (FFI, config files) where N may be negative.
    pub fn from_signed(particles: i64) -> Result<Self> {
        if particles <= 0 {
            return Err(invalid(format!(
                "particle count N must be positive, got {particles}"
            )));
        }
        Self::new(particles as usize)
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    /// Total pseudo-spin J = N/2.
    pub fn j(&self) -> f64 {
        self.particles as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.particles + 1
    }

    /// M_J of amplitude index `index`.
    pub fn m(&self, index: usize) -> f64 {
        self.j() - index as f64
    }

    pub fn m_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.m(k)).collect()
    }

    /// Index of M_J = `m`, if `m` is one of J, J-1, ..., -J.
    pub fn index_of(&self, m: f64) -> Option<usize> {
        let k = self.j() - m;
        let rounded = k.round();
        if (k - rounded).abs() > 1e-9 || rounded < 0.0 || rounded > self.particles as f64 {
            return None;
        }
        Some(rounded as usize)
    }
}

/// ⟨J, m±1| J_± |J, m⟩.
pub fn ladder_coefficient(j: f64, m: f64, raising: bool) -> f64 {
    let s = if raising { 1.0 } else { -1.0 };
    let value = j * (j + 1.0) - m * (m + s);
    if value <= 0.0 {
        0.0
    } else {
        value.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OperatorLabel {
    Jz,
    Jplus,
    Jminus,
    Jx,
    Jy,
    Jsq,
    Custom(String),
}

impl fmt::Display for OperatorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorLabel::Jz => f.write_str("Jz"),
            OperatorLabel::Jplus => f.write_str("Jplus"),
            OperatorLabel::Jminus => f.write_str("Jminus"),
            OperatorLabel::Jx => f.write_str("Jx"),
            OperatorLabel::Jy => f.write_str("Jy"),
            OperatorLabel::Jsq => f.write_str("Jsq"),
            OperatorLabel::Custom(name) => write!(f, "custom:{name}"),
        }
    }
}

impl FromStr for OperatorLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Jz" => Ok(OperatorLabel::Jz),
            "Jplus" => Ok(OperatorLabel::Jplus),
            "Jminus" => Ok(OperatorLabel::Jminus),
            "Jx" => Ok(OperatorLabel::Jx),
            "Jy" => Ok(OperatorLabel::Jy),
            "Jsq" => Ok(OperatorLabel::Jsq),
            other => Err(invalid(format!("unknown operator label '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveOperator {
    basis: DickeBasis,
    matrix: DMatrix<Complex64>,
    label: OperatorLabel,
}

impl CollectiveOperator {
    /// Builds one of the named collective operators. `Custom` labels are rejected;
    /// use [`CollectiveOperator::custom`] for those.
    pub fn build(basis: DickeBasis, label: OperatorLabel) -> Result<Self> {
        let dim = basis.dim();
        let j = basis.j();
        let matrix = match &label {
            OperatorLabel::Jz => DMatrix::from_fn(dim, dim, |r, c| {
                if r == c {
                    Complex64::from(basis.m(r))
                } else {
                    ZERO
                }
            }),
            // J_+ |m⟩ lands on index k-1.
            OperatorLabel::Jplus => DMatrix::from_fn(dim, dim, |r, c| {
                if r + 1 == c {
                    Complex64::from(ladder_coefficient(j, basis.m(c), true))
                } else {
                    ZERO
                }
            }),
            OperatorLabel::Jminus => DMatrix::from_fn(dim, dim, |r, c| {
                if c + 1 == r {
                    Complex64::from(ladder_coefficient(j, basis.m(c), false))
                } else {
                    ZERO
                }
            }),
            OperatorLabel::Jx => {
                let p = Self::build(basis, OperatorLabel::Jplus)?.matrix;
                let m = Self::build(basis, OperatorLabel::Jminus)?.matrix;
                (p + m) * Complex64::from(0.5)
            }
            OperatorLabel::Jy => {
                let p = Self::build(basis, OperatorLabel::Jplus)?.matrix;
                let m = Self::build(basis, OperatorLabel::Jminus)?.matrix;
                (p - m) * Complex64::new(0.0, -0.5)
            }
            OperatorLabel::Jsq => {
                let x = Self::build(basis, OperatorLabel::Jx)?.matrix;
                let y = Self::build(basis, OperatorLabel::Jy)?.matrix;
                let z = Self::build(basis, OperatorLabel::Jz)?.matrix;
                &x * &x + &y * &y + &z * &z
            }
            OperatorLabel::Custom(name) => {
                return Err(invalid(format!(
                    "custom operator '{name}' needs an explicit matrix"
                )))
            }
        };
        Ok(Self {
            basis,
            matrix,
            label,
        })
    }

    pub fn custom(basis: DickeBasis, name: &str, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(invalid(format!(
                "custom operator is {}x{}, basis needs {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                basis.dim(),
                basis.dim()
            )));
        }
        Ok(Self {
            basis,
            matrix,
            label: OperatorLabel::Custom(name.to_string()),
        })
    }

    pub fn identity(basis: DickeBasis) -> Self {
        Self {
            basis,
            matrix: DMatrix::identity(basis.dim(), basis.dim()),
            label: OperatorLabel::Custom("identity".into()),
        }
    }

    pub fn basis(&self) -> DickeBasis {
        self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn label(&self) -> &OperatorLabel {
        &self.label
    }
}

pub fn build_operator(basis: DickeBasis, label: &str) -> Result<CollectiveOperator> {
    CollectiveOperator::build(basis, label.parse()?)
}

/// Pure state in the Dicke subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    basis: DickeBasis,
    amplitudes: DVector<Complex64>,
}

impl SpinState {
    /// Wraps amplitudes that are already normalized (within [`NORM_TOLERANCE`]).
    pub fn new(basis: DickeBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        let state = Self::unchecked(basis, amplitudes)?;
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(invalid(format!("state norm is {norm}, expected 1")));
        }
        Ok(state)
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(basis: DickeBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut state = Self::unchecked(basis, amplitudes)?;
        let norm = state.norm();
        if norm == 0.0 {
            return Err(invalid("cannot normalize the zero vector"));
        }
        state.amplitudes /= Complex64::from(norm);
        Ok(state)
    }

    fn unchecked(basis: DickeBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(invalid(format!(
                "expected {} amplitudes, got {}",
                basis.dim(),
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(invalid("amplitudes must be finite"));
        }
        Ok(Self {
            basis,
            amplitudes: DVector::from_vec(amplitudes),
        })
    }

    pub(crate) fn from_vector(basis: DickeBasis, amplitudes: DVector<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), basis.dim());
        Self { basis, amplitudes }
    }

    /// |J, m⟩ for the amplitude index `index`.
    pub fn basis_state(basis: DickeBasis, index: usize) -> Result<Self> {
        if index >= basis.dim() {
            return Err(invalid(format!("basis index {index} out of range")));
        }
        let mut amplitudes = DVector::from_element(basis.dim(), ZERO);
        amplitudes[index] = ONE;
        Ok(Self { basis, amplitudes })
    }

    /// |J, J⟩, all particles up.
    pub fn stretched(basis: DickeBasis) -> Self {
        Self::basis_state(basis, 0).expect("index 0 always exists")
    }

    pub fn basis(&self) -> DickeBasis {
        self.basis
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &SpinState) -> Result<Complex64> {
        check_basis(self.basis, other.basis)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &SpinState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

pub(crate) fn check_basis(a: DickeBasis, b: DickeBasis) -> Result<()> {
    if a != b {
        return Err(invalid(format!(
            "basis mismatch: N = {} vs N = {}",
            a.particles(),
            b.particles()
        )));
    }
    Ok(())
}

/// Matrix-vector product, without renormalization.
pub fn apply(op: &CollectiveOperator, state: &SpinState) -> Result<DVector<Complex64>> {
    check_basis(op.basis, state.basis)?;
    Ok(&op.matrix * &state.amplitudes)
}

/// ⟨ψ|O|ψ⟩.
pub fn expectation(op: &CollectiveOperator, state: &SpinState) -> Result<Complex64> {
    let applied = apply(op, state)?;
    Ok(state.amplitudes.dotc(&applied))
}

// Banded kernels. `out` is overwritten.

pub(crate) fn jz_into(basis: DickeBasis, psi: &[Complex64], out: &mut [Complex64]) {
    for (k, (o, a)) in out.iter_mut().zip(psi).enumerate() {
        *o = a * basis.m(k);
    }
}

pub(crate) fn jplus_into(basis: DickeBasis, psi: &[Complex64], out: &mut [Complex64]) {
    let j = basis.j();
    let dim = basis.dim();
    out[dim - 1] = ZERO;
    for k in 0..dim - 1 {
        out[k] = psi[k + 1] * ladder_coefficient(j, basis.m(k + 1), true);
    }
}

pub(crate) fn jminus_into(basis: DickeBasis, psi: &[Complex64], out: &mut [Complex64]) {
    let j = basis.j();
    out[0] = ZERO;
    for k in 1..basis.dim() {
        out[k] = psi[k - 1] * ladder_coefficient(j, basis.m(k - 1), false);
    }
}

/// Mean spin vector and symmetrized second moments ⟨(J_a J_b + J_b J_a)/2⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMoments {
    pub mean: Vector3<f64>,
    pub second: nalgebra::Matrix3<f64>,
}

impl SpinMoments {
    pub fn of(state: &SpinState) -> Self {
        let basis = state.basis;
        let dim = basis.dim();
        let psi = state.amplitudes.as_slice();
        let mut plus = vec![ZERO; dim];
        let mut minus = vec![ZERO; dim];
        let mut vz = vec![ZERO; dim];
        jplus_into(basis, psi, &mut plus);
        jminus_into(basis, psi, &mut minus);
        jz_into(basis, psi, &mut vz);
        let half = Complex64::from(0.5);
        let neg_half_i = Complex64::new(0.0, -0.5);
        let vx: Vec<Complex64> = plus
            .iter()
            .zip(&minus)
            .map(|(p, m)| (p + m) * half)
            .collect();
        let vy: Vec<Complex64> = plus
            .iter()
            .zip(&minus)
            .map(|(p, m)| (p - m) * neg_half_i)
            .collect();
        let vecs = [vx, vy, vz];

        let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
        };
        let mean = Vector3::from_fn(|a, _| dot(psi, &vecs[a]).re);
        let second = nalgebra::Matrix3::from_fn(|a, b| dot(&vecs[a], &vecs[b]).re);
        Self { mean, second }
    }

    pub fn covariance(&self) -> nalgebra::Matrix3<f64> {
        self.second - self.mean * self.mean.transpose()
    }
}

/// Threshold on |⟨J⟩| below which the mean-spin direction is undefined.
pub fn direction_threshold(basis: DickeBasis) -> f64 {
    1e-9 * basis.j()
}

/// Covariance of the two spin components transverse to the mean spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentCovariance {
    /// Unit mean-spin direction n̂.
    pub direction: Vector3<f64>,
    /// |⟨J⟩|.
    pub mean_length: f64,
    pub u1: Vector3<f64>,
    pub u2: Vector3<f64>,
    /// Covariance of (J·û₁, J·û₂).
    pub covariance: nalgebra::Matrix2<f64>,
}

impl TangentCovariance {
    /// Eigenvalues of the 2×2 covariance, smaller first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let c = &self.covariance;
        let mean = 0.5 * (c[(0, 0)] + c[(1, 1)]);
        let half_diff = 0.5 * (c[(0, 0)] - c[(1, 1)]);
        let radius = (half_diff * half_diff + c[(0, 1)] * c[(0, 1)]).sqrt();
        (mean - radius, mean + radius)
    }

    /// Angle of the minimum-variance axis measured from û₁ towards û₂, in (-π/2, π/2].
    pub fn min_axis_angle(&self) -> f64 {
        let c = &self.covariance;
        // major axis at 0.5·atan2(2c01, c00 - c11); minor axis is perpendicular
        let major = 0.5 * (2.0 * c[(0, 1)]).atan2(c[(0, 0)] - c[(1, 1)]);
        let mut minor = major + std::f64::consts::FRAC_PI_2;
        if minor > std::f64::consts::FRAC_PI_2 {
            minor -= std::f64::consts::PI;
        }
        minor
    }
}

/// Tangent frame: û₁ is ẑ projected onto the plane ⟂ n̂ (x̂ at the poles), û₂ = n̂ × û₁.
pub fn tangent_frame(direction: Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let z = Vector3::z();
    let projected = z - direction * direction.dot(&z);
    let u1 = if projected.norm() < 1e-12 {
        Vector3::x()
    } else {
        projected.normalize()
    };
    let u2 = direction.cross(&u1);
    (u1, u2)
}

pub fn covariance_tangent(state: &SpinState) -> Result<TangentCovariance> {
    let moments = SpinMoments::of(state);
    let mean_length = moments.mean.norm();
    let threshold = direction_threshold(state.basis);
    if mean_length.is_nan() || mean_length <= threshold {
        return Err(Error::DegenerateDirection {
            length: mean_length,
            threshold,
        });
    }
    let direction = moments.mean / mean_length;
    let (u1, u2) = tangent_frame(direction);
    let cov3 = moments.covariance();
    let frame = [u1, u2];
    let covariance =
        nalgebra::Matrix2::from_fn(|a, b| (frame[a].transpose() * cov3 * frame[b])[(0, 0)]);
    let covariance = (covariance + covariance.transpose()) * 0.5;
    Ok(TangentCovariance {
        direction,
        mean_length,
        u1,
        u2,
        covariance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(invalid(format!("unknown rotation axis '{other}'"))),
        }
    }
}

/// Rotations exp(-iθ J_axis) built from one eigendecomposition of J_x.
///
/// J_y rotations go through J_y = e^{-iπ/2 J_z} J_x e^{iπ/2 J_z}; J_z rotations are diagonal.
#[derive(Debug, Clone)]
pub struct Rotator {
    basis: DickeBasis,
    /// Real orthogonal eigenvectors of J_x, one per column.
    vectors: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl Rotator {
    pub fn new(basis: DickeBasis) -> Self {
        let dim = basis.dim();
        let j = basis.j();
        let mut jx = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..dim - 1 {
            let c = 0.5 * ladder_coefficient(j, basis.m(k + 1), true);
            jx[(k, k + 1)] = c;
            jx[(k + 1, k)] = c;
        }
        let eig = SymmetricEigen::new(jx);
        // The spectrum of J_x is exactly {J, J-1, ..., -J}.
        let eigenvalues = eig
            .eigenvalues
            .iter()
            .map(|&l| {
                let snapped = j - (j - l).round();
                if (snapped - l).abs() < 1e-8 {
                    snapped
                } else {
                    l
                }
            })
            .collect();
        Self {
            basis,
            vectors: eig.eigenvectors,
            eigenvalues,
        }
    }

    pub fn basis(&self) -> DickeBasis {
        self.basis
    }

    fn z_phases(&self, angle: f64) -> Vec<Complex64> {
        (0..self.basis.dim())
            .map(|k| Complex64::from_polar(1.0, -angle * self.basis.m(k)))
            .collect()
    }

    fn apply_x(&self, angle: f64, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let vc = self.vectors.map(Complex64::from);
        let mut coeffs = vc.tr_mul(psi);
        for (c, &l) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= Complex64::from_polar(1.0, -angle * l);
        }
        vc * coeffs
    }

    fn apply_vec(&self, axis: Axis, angle: f64, psi: &DVector<Complex64>) -> DVector<Complex64> {
        match axis {
            Axis::Z => {
                let phases = self.z_phases(angle);
                DVector::from_iterator(psi.len(), psi.iter().zip(&phases).map(|(a, p)| a * p))
            }
            Axis::X => self.apply_x(angle, psi),
            Axis::Y => {
                let half_pi = std::f64::consts::FRAC_PI_2;
                let step = self.apply_vec(Axis::Z, -half_pi, psi);
                let step = self.apply_x(angle, &step);
                self.apply_vec(Axis::Z, half_pi, &step)
            }
        }
    }

    pub fn rotate(&self, state: &SpinState, axis: Axis, angle: f64) -> Result<SpinState> {
        check_basis(self.basis, state.basis)?;
        if !angle.is_finite() {
            return Err(invalid(format!(
                "rotation angle must be finite, got {angle}"
            )));
        }
        Ok(SpinState::from_vector(
            self.basis,
            self.apply_vec(axis, angle, &state.amplitudes),
        ))
    }

    /// Dense matrix of exp(-i·angle·J_axis).
    pub fn matrix(&self, axis: Axis, angle: f64) -> Result<DMatrix<Complex64>> {
        if !angle.is_finite() {
            return Err(invalid(format!(
                "rotation angle must be finite, got {angle}"
            )));
        }
        let dim = self.basis.dim();
        let mut out = DMatrix::from_element(dim, dim, ZERO);
        for col in 0..dim {
            let mut e = DVector::from_element(dim, ZERO);
            e[col] = ONE;
            out.set_column(col, &self.apply_vec(axis, angle, &e));
        }
        Ok(out)
    }
}

/// exp(-i·angle·J_axis)|ψ⟩.
pub fn rotate(state: &SpinState, axis: Axis, angle: f64) -> Result<SpinState> {
    if !angle.is_finite() {
        return Err(invalid(format!(
            "rotation angle must be finite, got {angle}"
        )));
    }
    if axis == Axis::Z {
        return Ok(rotate_z(state, angle));
    }
    Rotator::new(state.basis).rotate(state, axis, angle)
}

fn rotate_z(state: &SpinState, angle: f64) -> SpinState {
    let basis = state.basis;
    let amps = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(k, a)| a * Complex64::from_polar(1.0, -angle * basis.m(k)));
    SpinState::from_vector(basis, DVector::from_iterator(basis.dim(), amps))
}
