//! Phase-estimation measurement protocols.
//!
//! The target register is never simulated. A controlled `U^(2^(j-1))` acting on
//! an eigenstate with eigenphase `phi` is a diagonal kick `diag(1, e^{i 2^(j-1) phi})`
//! on control qubit `j`, so only control qubits are tracked.
//!
//! Outcome convention: qubit `j` yields bit `b_j`, qubit `m` is measured first,
//! and the outcome index is `k = sum_j b_j 2^(m-j)` with estimate
//! `2 pi k / 2^m + offset`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sinestate::{self, PreparationPlan, SineStateParams};
use crate::statevec::StateVector;

mod montecarlo;
mod reference;
mod streaming;

pub use montecarlo::{simulate, simulate_phases, trial_rng};
pub use reference::{
    canonical_distribution, inverse_qft_reference, kicked_amplitudes, MAX_REFERENCE_QUBITS,
};
pub use streaming::{enumerate_branches, run_streaming, Streamer, MAX_ENUMERATION_QUBITS};

pub const TAU: f64 = 2.0 * PI;

/// Which control state feeds the measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    /// Sine state, prepared sequentially with two-qubit gates.
    Optimal,
    /// `|+>^m`, one live qubit at a time.
    Uniform,
}

impl StateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StateKind::Optimal => "optimal",
            StateKind::Uniform => "uniform",
        }
    }

    /// Control-state amplitudes `a_0..a_N` (real, nonnegative for both kinds).
    pub fn amplitudes(self, params: &SineStateParams) -> Vec<f64> {
        match self {
            StateKind::Optimal => sinestate::amplitudes(params),
            StateKind::Uniform => vec![(params.dim() as f64).sqrt().recip(); params.dim()],
        }
    }
}

impl std::str::FromStr for StateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(StateKind::Optimal),
            "uniform" => Ok(StateKind::Uniform),
            other => Err(Error::arg(format!("unknown state kind {other:?}"))),
        }
    }
}

/// Wrap into `[0, 2 pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wrap into `(-pi, pi]`.
pub fn wrap_error(x: f64) -> f64 {
    let r = wrap_phase(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Grid spacing `2 pi / 2^m` of the canonical outcomes.
pub fn grid_step(params: &SineStateParams) -> f64 {
    TAU / params.dim() as f64
}

/// One measurement scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub params: SineStateParams,
    /// True eigenphase, kept in `[0, 2 pi)`.
    pub phase: f64,
    pub kind: StateKind,
    /// Shift the outcome grid by `offset` (covariant measurement).
    pub covariant: bool,
    /// Grid offset in `[0, 2 pi / 2^m)`; ignored unless `covariant`.
    pub offset: f64,
    /// Master seed for sampled runs.
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(params: SineStateParams, phase: f64, kind: StateKind) -> Self {
        ProtocolConfig {
            params,
            phase: wrap_phase(phase),
            kind,
            covariant: false,
            offset: 0.0,
            seed: 0,
        }
    }

    /// Enable the covariant measurement with a fixed grid offset.
    pub fn with_offset(mut self, offset: f64) -> Result<Self> {
        let step = grid_step(&self.params);
        if !(0.0..step).contains(&offset) {
            return Err(Error::arg(format!(
                "offset {offset} outside [0, {step}) for m = {}",
                self.params.qubits()
            )));
        }
        self.covariant = true;
        self.offset = offset;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = wrap_phase(phase);
        self
    }

    /// Offset actually applied: `offset` when covariant, else 0.
    pub fn effective_offset(&self) -> f64 {
        if self.covariant {
            self.offset
        } else {
            0.0
        }
    }
}

/// Everything recorded by one sampled run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRecord {
    /// `b_1 .. b_m`, indexed by qubit label minus one.
    pub bits: Vec<u8>,
    /// Feedback angle applied to each qubit's `|1>` before its Hadamard.
    pub feedback: Vec<f64>,
    pub outcome: usize,
    pub estimate: f64,
    /// `estimate - phase` wrapped to `(-pi, pi]`.
    pub error: f64,
    pub phase: f64,
    pub offset: f64,
}

/// Outcome index from bits `b_1..b_m`: `k = sum_j b_j 2^(m-j)`.
pub fn outcome_index(bits: &[u8]) -> usize {
    let m = bits.len();
    bits.iter()
        .enumerate()
        .map(|(i, &b)| usize::from(b) << (m - 1 - i))
        .sum()
}

/// Semiclassical feedback for qubit `j`, given the bits of all later-measured
/// qubits (`bits[i - 1] = b_i` for `i > j`; entries for `i <= j` are ignored).
///
/// `theta_j = -pi sum_{i=j+1}^{m} b_i 2^(j-i)`.
pub fn feedback_angle(j: u32, bits: &[u8]) -> f64 {
    let j = j as usize;
    -PI * bits
        .iter()
        .enumerate()
        .skip(j)
        .map(|(idx, &b)| f64::from(b) * 2f64.powi(j as i32 - (idx as i32 + 1)))
        .sum::<f64>()
}

/// Exact outcome distribution over the `2^m` grid points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub qubits: u32,
    pub offset: f64,
    pub probabilities: Vec<f64>,
    /// Estimates `2 pi k / 2^m + offset`.
    pub grid: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(params: &SineStateParams, offset: f64, probabilities: Vec<f64>) -> Self {
        let step = grid_step(params);
        let grid = (0..params.dim())
            .map(|k| step * k as f64 + offset)
            .collect();
        OutcomeDistribution {
            qubits: params.qubits(),
            offset,
            probabilities,
            grid,
        }
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Max-abs elementwise difference to another distribution of equal size.
    pub fn max_abs_diff(&self, other: &OutcomeDistribution) -> Result<f64> {
        if self.probabilities.len() != other.probabilities.len() {
            return Err(Error::arg("distributions differ in size"));
        }
        Ok(self
            .probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Full-register sequential preparation: `|+>^m`, then `U_l` on qubits
/// `(l, l+1)` for `l = m-1 .. 1`, then the flag fix on qubit 1.
pub fn prepare_full(params: &SineStateParams) -> Result<StateVector> {
    let plan = PreparationPlan::new(*params)?;
    prepare_with_plan(&plan)
}

pub fn prepare_with_plan(plan: &PreparationPlan) -> Result<StateVector> {
    let m = plan.params.qubits() as usize;
    let mut state = StateVector::plus(m);
    for (level, gate) in &plan.gates {
        let l = *level as usize;
        // fresh qubit l at position l-1 is the first factor, flag l+1 the second
        state.apply_gate(gate, &[l - 1, l])?;
    }
    state.apply_gate(&plan.flag_fix, &[0])?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::fidelity_up_to_global_phase;
    use approx::assert_abs_diff_eq;

    fn p(m: u32) -> SineStateParams {
        SineStateParams::new(m).unwrap()
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_phase(-1e-20), 0.0);
        assert_abs_diff_eq!(wrap_phase(-1e-3), TAU - 1e-3, epsilon = 1e-15);
        assert!((0.0..TAU).contains(&wrap_phase(-1e-20)));
        assert_abs_diff_eq!(wrap_error(PI), PI);
        assert_abs_diff_eq!(wrap_error(-PI), PI);
        assert_abs_diff_eq!(wrap_error(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_phase(5.0 * TAU + 0.25), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn feedback_examples() {
        assert_eq!(feedback_angle(3, &[1, 1, 1]), 0.0);
        assert_abs_diff_eq!(feedback_angle(2, &[0, 0, 1]).abs(), PI / 2.0);
        assert_abs_diff_eq!(feedback_angle(1, &[0, 1, 1]), -3.0 * PI / 4.0);
        // bits at or below j are ignored
        assert_abs_diff_eq!(feedback_angle(1, &[1, 1, 1]), -3.0 * PI / 4.0);
    }

    #[test]
    fn outcome_index_weights() {
        assert_eq!(outcome_index(&[1, 0, 0]), 4);
        assert_eq!(outcome_index(&[0, 0, 1]), 1);
        assert_eq!(outcome_index(&[1, 1]), 3);
    }

    #[test]
    fn offset_validation() {
        let c = ProtocolConfig::new(p(3), 0.0, StateKind::Optimal);
        assert!(c.with_offset(TAU / 8.0).is_err());
        assert!(c.with_offset(-0.1).is_err());
        let c = c.with_offset(0.5).unwrap();
        assert!(c.covariant);
        assert_eq!(c.effective_offset(), 0.5);
        assert_eq!(
            ProtocolConfig::new(p(3), 7.0, StateKind::Optimal).phase,
            7.0 - TAU
        );
    }

    #[test]
    fn prepare_full_matches_closed_form() {
        for m in 1..=10 {
            let q = p(m);
            let prepared = prepare_full(&q).unwrap();
            let direct = StateVector::from_real(&sinestate::amplitudes(&q)).unwrap();
            let f = fidelity_up_to_global_phase(&prepared, &direct).unwrap();
            assert!(f >= 1.0 - 1e-10, "m = {m}: fidelity {f}");
        }
        let s = prepare_full(&p(1)).unwrap();
        assert!(s.max_abs_diff(&StateVector::plus(1)).unwrap() < 1e-15);
    }

    #[test]
    fn prepare_full_is_exact_not_just_up_to_phase() {
        let q = p(6);
        let prepared = prepare_full(&q).unwrap();
        let direct = StateVector::from_real(&sinestate::amplitudes(&q)).unwrap();
        assert!(prepared.max_abs_diff(&direct).unwrap() < 1e-12);
    }
}
