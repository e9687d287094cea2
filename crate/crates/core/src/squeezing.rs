//! Coherent spin states, one-axis twisting and squeezing metrics.
//!
//! The binomial coherent state with real positive amplitudes has its mean spin
//! along +x. Twisting exp(-iχt J_z²) keeps the mean spin on the x axis and
//! shears the transverse noise in the (y, z) plane.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dicke::{covariance_tangent, Axis, DickeBasis, Rotator, SpinMoments, SpinState};
use crate::error::{invalid, Result};
use crate::sweep::SweepResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezeParams {
    pub chi_t: f64,
    pub particles: usize,
}

impl SqueezeParams {
    pub fn new(particles: usize, chi_t: f64) -> Result<Self> {
        DickeBasis::new(particles)?;
        check_chi_t(chi_t)?;
        Ok(Self { chi_t, particles })
    }
}

fn check_chi_t(chi_t: f64) -> Result<()> {
    if !chi_t.is_finite() {
        return Err(invalid(format!("chi_t must be finite, got {chi_t}")));
    }
    Ok(())
}

/// Binomial coherent spin state, c_M = 2^{-N/2} C(N, N/2+M)^{1/2}.
pub fn coherent_state(particles: usize) -> Result<SpinState> {
    let basis = DickeBasis::new(particles)?;
    let n = particles;
    // Amplitude index k holds M = J - k, so C(N, N/2 + M) = C(N, N - k) = C(N, k).
    let probabilities: Vec<f64> = if n <= 1000 {
        let mut p = Vec::with_capacity(n + 1);
        let mut current = 0.5f64.powi(n as i32);
        p.push(current);
        for k in 1..=n {
            current *= (n - k + 1) as f64 / k as f64;
            p.push(current);
        }
        p
    } else {
        let ln_half_n = n as f64 * std::f64::consts::LN_2;
        let mut ln_binom = 0.0;
        let mut p = Vec::with_capacity(n + 1);
        p.push((-ln_half_n).exp());
        for k in 1..=n {
            ln_binom += (((n - k + 1) as f64) / k as f64).ln();
            p.push((ln_binom - ln_half_n).exp());
        }
        p
    };
    let amplitudes = probabilities
        .into_iter()
        .map(|p| Complex64::from(p.sqrt()))
        .collect();
    SpinState::new(basis, amplitudes)
}

/// exp(-i·chi_t·J_z²)|ψ⟩.
pub fn oat_evolve(state: &SpinState, chi_t: f64) -> Result<SpinState> {
    check_chi_t(chi_t)?;
    let basis = state.basis();
    let amps: Vec<Complex64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let m = basis.m(k);
            a * Complex64::from_polar(1.0, -chi_t * m * m)
        })
        .collect();
    Ok(SpinState::from_vector(basis, DVector::from_vec(amps)))
}

/// ξ = ΔJ_⊥ / √(J/2), with ΔJ_⊥ the smallest transverse standard deviation.
pub fn squeezing_xi(state: &SpinState) -> Result<f64> {
    let tc = covariance_tangent(state)?;
    let (lambda_min, _) = tc.eigenvalues();
    let j = state.basis().j();
    Ok(lambda_min.max(0.0).sqrt() / (j / 2.0).sqrt())
}

/// 10·log₁₀(σ²_squeezed / σ²_unsqueezed); negative values mean squeezing.
pub fn squeezing_db(var_squeezed: f64, var_unsqueezed: f64) -> Result<f64> {
    for (name, v) in [
        ("var_squeezed", var_squeezed),
        ("var_unsqueezed", var_unsqueezed),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(invalid(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    Ok(10.0 * (var_squeezed / var_unsqueezed).log10())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapGrid {
    pub theta_values: Vec<f64>,
    pub phi_values: Vec<f64>,
    /// Row-major: `probabilities[i][j]` belongs to (theta_i, phi_j).
    pub probabilities: Vec<Vec<f64>>,
}

impl OverlapGrid {
    pub fn get(&self, theta_index: usize, phi_index: usize) -> f64 {
        self.probabilities[theta_index][phi_index]
    }

    /// (theta index, phi index, value) of the largest entry, first in row-major order on ties.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, row) in self.probabilities.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if p > best.2 {
                    best = (i, j, p);
                }
            }
        }
        best
    }

    /// Long (tidy) format: columns theta, phi, probability; theta-major row order.
    pub fn to_sweep_result(&self) -> SweepResult {
        let mut theta = Vec::new();
        let mut phi = Vec::new();
        let mut prob = Vec::new();
        for (i, &t) in self.theta_values.iter().enumerate() {
            for (j, &f) in self.phi_values.iter().enumerate() {
                theta.push(t);
                phi.push(f);
                prob.push(self.probabilities[i][j]);
            }
        }
        SweepResult::new()
            .with_column("theta", theta)
            .with_column("phi", phi)
            .with_column("probability", prob)
    }
}

/// Squared overlap of `state` with coherent-state probes tilted by θ and swung by φ.
///
/// Entry (i, j) is |⟨CS| exp(-iθ_i J_y) exp(iφ_j J_z) |ψ⟩|², i.e. the probe is
/// exp(-iφ J_z) exp(iθ J_y)|CS⟩: θ tilts the probe from the +x mean spin towards +z
/// and φ rotates it about z.
pub fn overlap_grid(
    state: &SpinState,
    theta_values: &[f64],
    phi_values: &[f64],
) -> Result<OverlapGrid> {
    if theta_values.is_empty() || phi_values.is_empty() {
        return Err(invalid("overlap grid axes must be nonempty"));
    }
    if theta_values
        .iter()
        .chain(phi_values)
        .any(|a| !a.is_finite())
    {
        return Err(invalid("overlap grid angles must be finite"));
    }
    let basis = state.basis();
    let cs = coherent_state(basis.particles())?;
    let rotator = Rotator::new(basis);
    let m_values = basis.m_values();
    let psi = state.amplitudes();

    let probabilities = theta_values
        .par_iter()
        .map(|&theta| -> Result<Vec<f64>> {
            let probe = rotator.rotate(&cs, Axis::Y, -theta)?;
            let probe = probe.amplitudes();
            Ok(phi_values
                .iter()
                .map(|&phi| {
                    let amp: Complex64 = (0..basis.dim())
                        .map(|k| {
                            probe[k].conj() * Complex64::from_polar(1.0, phi * m_values[k]) * psi[k]
                        })
                        .sum();
                    amp.norm_sqr().min(1.0)
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OverlapGrid {
        theta_values: theta_values.to_vec(),
        phi_values: phi_values.to_vec(),
        probabilities,
    })
}

/// ξ and Bloch length of the twisted coherent state.
pub fn twisted_xi(particles: usize, chi_t: f64) -> Result<(f64, f64)> {
    let state = oat_evolve(&coherent_state(particles)?, chi_t)?;
    let xi = squeezing_xi(&state)?;
    Ok((xi, SpinMoments::of(&state).mean.norm()))
}

/// Columns: chi_t, xi, bloch_length.
pub fn xi_sweep(particles: usize, chi_t_values: &[f64]) -> Result<SweepResult> {
    if chi_t_values.is_empty() {
        return Err(invalid("chi_t grid must be nonempty"));
    }
    if let Some(bad) = chi_t_values.iter().find(|c| !c.is_finite() || **c < 0.0) {
        return Err(invalid(format!(
            "chi_t values must be finite and nonnegative, got {bad}"
        )));
    }
    DickeBasis::new(particles)?;
    let rows = chi_t_values
        .par_iter()
        .map(|&c| twisted_xi(particles, c))
        .collect::<Result<Vec<_>>>()?;
    let mut out = SweepResult::new()
        .with_column("chi_t", chi_t_values.to_vec())
        .with_column("xi", rows.iter().map(|r| r.0).collect())
        .with_column("bloch_length", rows.iter().map(|r| r.1).collect());
    out.set_meta("particles", particles);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiMinimum {
    pub chi_t: f64,
    pub xi: f64,
}

/// Uniform grid of the twisting strength on (0, chi_t_max].
pub fn chi_t_grid(chi_t_max: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(invalid("chi_t grid needs at least one point"));
    }
    if !chi_t_max.is_finite() || chi_t_max <= 0.0 {
        return Err(invalid(format!(
            "chi_t_max must be positive, got {chi_t_max}"
        )));
    }
    Ok((1..=points)
        .map(|i| chi_t_max * i as f64 / points as f64)
        .collect())
}

/// Locates min ξ over chi_t ∈ (0, chi_t_max]: uniform scan, then golden-section refinement to 1e-6.
pub fn minimize_xi(particles: usize, chi_t_max: f64, points: usize) -> Result<XiMinimum> {
    let grid = chi_t_grid(chi_t_max, points)?;
    let values = grid
        .par_iter()
        .map(|&c| twisted_xi(particles, c).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    let (best, _) =
        values.iter().enumerate().fold(
            (0, f64::INFINITY),
            |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
        );
    let step = chi_t_max / points as f64;
    let lo = (grid[best] - step).max(0.0);
    let hi = (grid[best] + step).min(chi_t_max);
    let f = |c: f64| twisted_xi(particles, c).map(|r| r.0);
    let (chi_t, xi) = golden_section(f, lo, hi, 1e-6)?;
    if xi <= values[best] {
        Ok(XiMinimum { chi_t, xi })
    } else {
        Ok(XiMinimum {
            chi_t: grid[best],
            xi: values[best],
        })
    }
}

fn golden_section<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{build_operator, expectation, rotate};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn coherent_amplitudes() {
        let cs = coherent_state(2).unwrap();
        let a: Vec<f64> = cs.amplitudes().iter().map(|c| c.re).collect();
        assert_eq!(a, vec![0.5, std::f64::consts::FRAC_1_SQRT_2, 0.5]);
        let cs = coherent_state(1).unwrap();
        assert_abs_diff_eq!(cs.amplitudes()[0].re, 0.5f64.sqrt(), epsilon = 1e-16);
        assert_abs_diff_eq!(cs.amplitudes()[1].re, 0.5f64.sqrt(), epsilon = 1e-16);
        assert!(coherent_state(0).is_err());
    }

    #[test]
    fn coherent_state_moments_n50() {
        // binomial moments summed directly
        let n = 50usize;
        let cs = coherent_state(n).unwrap();
        let b = cs.basis();
        let (mut mean, mut sq) = (0.0, 0.0);
        for (k, a) in cs.amplitudes().iter().enumerate() {
            mean += a.norm_sqr() * b.m(k);
            sq += a.norm_sqr() * b.m(k) * b.m(k);
        }
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sq - mean * mean, 12.5, epsilon = 1e-10);
        let jz = expectation(&build_operator(b, "Jz").unwrap(), &cs).unwrap();
        assert_abs_diff_eq!(jz.re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn coherent_state_n2_has_zero_jz() {
        let cs = coherent_state(2).unwrap();
        // 0.25·1 + 0.5·0 + 0.25·(-1)
        let jz = expectation(&build_operator(cs.basis(), "Jz").unwrap(), &cs).unwrap();
        assert_eq!(jz.re, 0.0);
    }

    #[test]
    fn coherent_state_n4_transverse_variances() {
        let tc = covariance_tangent(&coherent_state(4).unwrap()).unwrap();
        assert_abs_diff_eq!(tc.covariance[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tc.covariance[(1, 1)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tc.direction.x, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn coherent_state_matches_rotated_pole() {
        // exp(-iπ/2 J_y) takes +z to +x
        for n in [1usize, 2, 5, 16, 40] {
            let b = DickeBasis::new(n).unwrap();
            let rotated = rotate(
                &SpinState::stretched(b),
                Axis::Y,
                std::f64::consts::FRAC_PI_2,
            )
            .unwrap();
            let cs = coherent_state(n).unwrap();
            assert_abs_diff_eq!(cs.fidelity(&rotated).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn oat_examples() {
        let cs = coherent_state(6).unwrap();
        assert_eq!(oat_evolve(&cs, 0.0).unwrap(), cs);
        assert!(oat_evolve(&cs, f64::INFINITY).is_err());

        let chi = 0.37;
        let out = oat_evolve(&cs, chi).unwrap();
        // index 1 is m = 2, index 2 is m = 1
        let dphase = (out.amplitudes()[1] / cs.amplitudes()[1]).arg()
            - (out.amplitudes()[2] / cs.amplitudes()[2]).arg();
        let wrapped = (dphase + 3.0 * chi).rem_euclid(2.0 * std::f64::consts::PI);
        assert!(wrapped < 1e-12 || (2.0 * std::f64::consts::PI - wrapped) < 1e-12);

        // elementwise oracle: cos/sin of -chi m² applied by hand
        let b = cs.basis();
        for (k, a) in out.amplitudes().iter().enumerate() {
            let m = 3.0 - k as f64;
            let theta = -chi * m * m;
            let c = cs.amplitudes()[k].re;
            let expect = Complex64::new(c * theta.cos(), c * theta.sin());
            assert!((a - expect).norm() <= 1e-14);
            assert_eq!(b.m(k), m);
        }
    }

    #[test]
    fn xi_of_coherent_states_is_one() {
        for n in [1usize, 2, 3, 10, 50, 101] {
            let xi = squeezing_xi(&coherent_state(n).unwrap()).unwrap();
            assert_abs_diff_eq!(xi, 1.0, epsilon = 1e-9);
        }
        // tilted coherent states too
        let b = DickeBasis::new(20).unwrap();
        let tilted = rotate(&SpinState::stretched(b), Axis::X, 0.77).unwrap();
        let tilted = rotate(&tilted, Axis::Z, 1.3).unwrap();
        assert_abs_diff_eq!(squeezing_xi(&tilted).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn single_spin_cannot_be_squeezed() {
        for chi in [0.0, 0.1, 0.7, 2.0] {
            let (xi, _) = twisted_xi(1, chi).unwrap();
            assert_abs_diff_eq!(xi, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn db_examples() {
        assert_eq!(squeezing_db(2.0, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(squeezing_db(0.5, 1.0).unwrap(), -3.0103, epsilon = 1e-4);
        assert_abs_diff_eq!(squeezing_db(0.4571, 1.0).unwrap(), -3.40, epsilon = 0.01);
        assert!(squeezing_db(0.0, 1.0).is_err());
        assert!(squeezing_db(1.0, -1.0).is_err());
        assert!(squeezing_db(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn twisting_squeezes_immediately() {
        for n in [4usize, 10, 50] {
            for chi in [1e-4, 1e-3, 5e-3] {
                assert!(twisted_xi(n, chi).unwrap().0 < 1.0);
            }
        }
    }

    #[test]
    fn min_xi_decreases_with_n() {
        let m10 = minimize_xi(10, 0.5, 400).unwrap().xi;
        let m50 = minimize_xi(50, 0.5, 400).unwrap().xi;
        let m100 = minimize_xi(100, 0.5, 400).unwrap().xi;
        assert!(m10 > m50 && m50 > m100, "{m10} {m50} {m100}");
    }

    #[test]
    fn xi_sweep_examples() {
        let r = xi_sweep(50, &[0.0]).unwrap();
        assert_eq!(r.rows(), 1);
        assert_abs_diff_eq!(r.column("xi").unwrap()[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.column("bloch_length").unwrap()[0], 25.0, epsilon = 1e-9);
        let r = xi_sweep(50, &[0.0, 0.1]).unwrap();
        let len = r.column("bloch_length").unwrap();
        assert!(len[1] < len[0]);
        assert!(xi_sweep(50, &[]).is_err());
        assert!(xi_sweep(50, &[-0.1]).is_err());
    }

    #[test]
    fn overlap_grid_examples() {
        let cs = coherent_state(50).unwrap();
        let g = overlap_grid(&cs, &[0.0], &[0.0]).unwrap();
        assert_abs_diff_eq!(g.get(0, 0), 1.0, epsilon = 1e-12);

        let axis: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.05).collect();
        let g = overlap_grid(&cs, &axis, &axis).unwrap();
        let (i, j, p) = g.argmax();
        assert_eq!((axis[i], axis[j]), (0.0, 0.0));
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        for (i, row) in g.probabilities.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                assert!((0.0..=1.0).contains(&p));
                // φ → -φ symmetry
                assert_abs_diff_eq!(p, g.get(i, axis.len() - 1 - j), epsilon = 1e-10);
            }
        }
        assert!(overlap_grid(&cs, &[], &[0.0]).is_err());
        assert_eq!(g.to_sweep_result().rows(), axis.len() * axis.len());
    }

    /// θ-φ correlation coefficient of the region at or above half the grid maximum.
    fn half_max_correlation(grid: &OverlapGrid) -> f64 {
        let (_, _, peak) = grid.argmax();
        let (mut s, mut st, mut sp, mut stt, mut spp, mut stp) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, &t) in grid.theta_values.iter().enumerate() {
            for (j, &p) in grid.phi_values.iter().enumerate() {
                if grid.get(i, j) >= 0.5 * peak {
                    s += 1.0;
                    st += t;
                    sp += p;
                    stt += t * t;
                    spp += p * p;
                    stp += t * p;
                }
            }
        }
        let (mt, mp) = (st / s, sp / s);
        let ctt = stt / s - mt * mt;
        let cpp = spp / s - mp * mp;
        let ctp = stp / s - mt * mp;
        ctp / (ctt * cpp).sqrt()
    }

    #[test]
    fn twisting_tilts_half_max_region() {
        let axis: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.01).collect();
        let cs = coherent_state(50).unwrap();
        let flat = half_max_correlation(&overlap_grid(&cs, &axis, &axis).unwrap());
        let sheared = half_max_correlation(
            &overlap_grid(&oat_evolve(&cs, 0.1).unwrap(), &axis, &axis).unwrap(),
        );
        assert!(flat.abs() < 1e-12, "flat correlation {flat}");
        assert!(sheared.abs() > 0.2, "sheared correlation {sheared}");
    }

    proptest! {
        #[test]
        fn oat_commutes_with_z_rotation(n in 1usize..30, chi in -3.0f64..3.0, phi in -7.0f64..7.0) {
            let cs = coherent_state(n).unwrap();
            let a = rotate(&oat_evolve(&cs, chi).unwrap(), Axis::Z, phi).unwrap();
            let b = oat_evolve(&rotate(&cs, Axis::Z, phi).unwrap(), chi).unwrap();
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                prop_assert!((x - y).norm() <= 1e-12);
            }
        }

        #[test]
        fn compositions_stay_normalized(n in 1usize..40, chi in -2.0f64..2.0, th in -4.0f64..4.0, ax in 0usize..3) {
            let axis = [Axis::X, Axis::Y, Axis::Z][ax];
            let s = rotate(&oat_evolve(&coherent_state(n).unwrap(), chi).unwrap(), axis, th).unwrap();
            let s = oat_evolve(&s, -0.5 * chi).unwrap();
            prop_assert!((s.norm() - 1.0).abs() <= 1e-12);
        }
    }
}
