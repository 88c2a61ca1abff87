//! Independent full-register oracles for the outcome distribution.

use num_complex::Complex64;

use super::{grid_step, OutcomeDistribution, StateKind, TAU};
use crate::error::{Error, Result};
use crate::sinestate::SineStateParams;
use crate::statevec::StateVector;

/// Largest register the dense inverse-QFT reference will build.
pub const MAX_REFERENCE_QUBITS: u32 = 12;

/// Canonical-POVM probabilities on the offset grid:
/// `P(k) = 2^-m |sum_n a_n e^{i n (phi - phi_k)}|^2`, `phi_k = 2 pi k / 2^m + offset`.
pub fn canonical_distribution(
    params: &SineStateParams,
    phase: f64,
    offset: f64,
    kind: StateKind,
) -> OutcomeDistribution {
    let amps = kind.amplitudes(params);
    let dim = params.dim();
    let step = grid_step(params);
    let probs = (0..dim)
        .map(|k| {
            let x = phase - (step * k as f64 + offset);
            let rot = Complex64::from_polar(1.0, x);
            let mut w = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, &a) in amps.iter().enumerate() {
                // reseed the running phasor periodically to bound drift
                if n % 64 == 0 {
                    w = Complex64::from_polar(1.0, n as f64 * x);
                }
                acc += a * w;
                w *= rot;
            }
            acc.norm_sqr() / dim as f64
        })
        .collect();
    OutcomeDistribution::new(params, offset, probs)
}

/// Control register after the phase kicks: `sum_n a_n e^{i n phi} |n>`, built
/// by kicking qubit `j` with `2^(j-1) phi` on the statevector engine.
pub fn kicked_amplitudes(
    params: &SineStateParams,
    phase: f64,
    kind: StateKind,
) -> Result<StateVector> {
    let mut state = StateVector::from_real(&kind.amplitudes(params))?;
    for j in 1..=params.qubits() {
        state.phase_kick(j as usize - 1, phase * 2f64.powi(j as i32 - 1))?;
    }
    Ok(state)
}

/// Dense `sum_k |k><phi_k|` applied to the kicked register, then
/// computational-basis probabilities.
pub fn inverse_qft_reference(
    params: &SineStateParams,
    phase: f64,
    offset: f64,
    kind: StateKind,
) -> Result<OutcomeDistribution> {
    if params.qubits() > MAX_REFERENCE_QUBITS {
        return Err(Error::Resource(format!(
            "dense inverse-QFT reference supports m <= {MAX_REFERENCE_QUBITS}"
        )));
    }
    let state = kicked_amplitudes(params, phase, kind)?;
    let dim = params.dim();
    let norm = (dim as f64).sqrt().recip();
    let root = TAU / dim as f64;
    let probs = (0..dim)
        .map(|k| {
            // row k: <phi_k| = 2^{-m/2} sum_n e^{-i n (2 pi k / 2^m + offset)} <n|
            let amp: Complex64 = state
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(n, &a)| {
                    let angle = root * ((n * k) % dim) as f64 + n as f64 * offset;
                    Complex64::from_polar(norm, -angle) * a
                })
                .sum();
            amp.norm_sqr()
        })
        .collect();
    Ok(OutcomeDistribution::new(params, offset, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis;
    use approx::assert_abs_diff_eq;

    fn p(m: u32) -> SineStateParams {
        SineStateParams::new(m).unwrap()
    }

    #[test]
    fn uniform_on_grid_is_indicator() {
        for m in 1..=6 {
            let q = p(m);
            for k in 0..q.dim() {
                let phase = grid_step(&q) * k as f64;
                for d in [
                    canonical_distribution(&q, phase, 0.0, StateKind::Uniform),
                    inverse_qft_reference(&q, phase, 0.0, StateKind::Uniform).unwrap(),
                ] {
                    for (i, &x) in d.probabilities.iter().enumerate() {
                        let want = if i == k { 1.0 } else { 0.0 };
                        assert_abs_diff_eq!(x, want, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn optimal_m2_zero_phase() {
        let want = [0.947214, 0.026393, 0.0, 0.026393];
        let a = canonical_distribution(&p(2), 0.0, 0.0, StateKind::Optimal);
        let b = inverse_qft_reference(&p(2), 0.0, 0.0, StateKind::Optimal).unwrap();
        for (i, w) in want.iter().enumerate() {
            assert_abs_diff_eq!(a.probabilities[i], w, epsilon = 1e-6);
            assert_abs_diff_eq!(b.probabilities[i], w, epsilon = 1e-6);
        }
    }

    #[test]
    fn discrete_probability_is_density_times_spacing() {
        for m in [2u32, 4, 6] {
            let q = p(m);
            let amps = StateKind::Optimal.amplitudes(&q);
            let (phase, offset) = (1.234, 0.01);
            let d = canonical_distribution(&q, phase, offset, StateKind::Optimal);
            for (k, &pk) in d.probabilities.iter().enumerate() {
                let dens = analysis::fourier_density(&amps, d.grid[k] - phase);
                assert_abs_diff_eq!(pk, grid_step(&q) * dens, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn reference_size_cap() {
        assert!(matches!(
            inverse_qft_reference(&p(13), 0.0, 0.0, StateKind::Uniform),
            Err(Error::Resource(_))
        ));
    }
}
