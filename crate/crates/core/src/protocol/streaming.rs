//! The streaming two-live-qubit schedule, sampled and exhaustively branched.
//!
//! Schedule for control qubits `j = m, m-1, .., 1`:
//! 1. start with qubit `m` in `|+>`;
//! 2. before qubit `j` is measured it must be final: for the optimal state with
//!    `j >= 2`, bring in a fresh `|+>` as qubit `j-1` and apply `U_(j-1)` to
//!    `(j-1, j)`; for `j = 1` apply the flag fix. The uniform state just brings
//!    in the next `|+>` after each measurement;
//! 3. kick qubit `j` by `2^(j-1) (phi - offset)`, apply the feedback phase,
//!    a Hadamard, measure, and drop it from the register.
//!
//! Each `U_l` therefore runs as late as possible, so at most two control
//! qubits are ever alive.

use rand::Rng;

use super::{
    feedback_angle, outcome_index, wrap_error, MeasurementRecord, OutcomeDistribution,
    ProtocolConfig, StateKind,
};
use crate::error::{Error, Result};
use crate::sinestate::PreparationPlan;
use crate::statevec::{plus_vec, Gate, StateVector};

/// Exact enumeration visits `2^m` leaves; capped here.
pub const MAX_ENUMERATION_QUBITS: u32 = 14;

const MAX_LIVE: usize = 2;

/// Live control register with the label of the qubit at each position.
#[derive(Debug, Clone)]
struct LiveRegister {
    state: StateVector,
    labels: Vec<u32>,
    peak: usize,
}

impl LiveRegister {
    fn single(label: u32) -> Self {
        LiveRegister {
            state: StateVector::plus(1),
            labels: vec![label],
            peak: 1,
        }
    }

    fn position(&self, label: u32) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::Internal(format!("qubit {label} is not live")))
    }

    fn bring_in(&mut self, label: u32) -> Result<()> {
        self.state = self.state.append_qubit(plus_vec());
        self.labels.push(label);
        self.peak = self.peak.max(self.labels.len());
        if self.labels.len() > MAX_LIVE {
            return Err(Error::Internal(format!(
                "live register grew to {} control qubits",
                self.labels.len()
            )));
        }
        Ok(())
    }

    fn drop_measured(&mut self, position: usize, rest: StateVector) {
        self.labels.remove(position);
        self.state = rest;
    }
}

/// A configured protocol with its preparation gates built once.
#[derive(Debug, Clone)]
pub struct Streamer {
    config: ProtocolConfig,
    plan: Option<PreparationPlan>,
}

impl Streamer {
    pub fn new(config: ProtocolConfig) -> Result<Self> {
        let plan = match config.kind {
            StateKind::Optimal => Some(PreparationPlan::new(config.params)?),
            StateKind::Uniform => None,
        };
        Ok(Streamer { config, plan })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    /// Same gates, different phase and offset.
    pub fn with_setting(&self, phase: f64, covariant: bool, offset: f64) -> Result<Self> {
        let base = ProtocolConfig::new(self.config.params, phase, self.config.kind)
            .with_seed(self.config.seed);
        let config = if covariant {
            base.with_offset(offset)?
        } else {
            base
        };
        Ok(Streamer {
            config,
            plan: self.plan.clone(),
        })
    }

    fn start(&self) -> LiveRegister {
        LiveRegister::single(self.config.params.qubits())
    }

    /// Finish preparing qubit `j`, kick it, and return its measurement basis
    /// rotation together with the feedback angle used.
    fn ready(&self, reg: &mut LiveRegister, j: u32, bits: &[u8]) -> Result<(usize, Gate, f64)> {
        let m = self.config.params.qubits();
        match &self.plan {
            Some(plan) => {
                if j >= 2 {
                    let level = j - 1;
                    let (_, gate) = &plan.gates[(m - 1 - level) as usize];
                    reg.bring_in(level)?;
                    let targets = [reg.position(level)?, reg.position(j)?];
                    reg.state.apply_gate(gate, &targets)?;
                } else {
                    reg.state.apply_gate(&plan.flag_fix, &[reg.position(1)?])?;
                }
            }
            None => {
                if j < m {
                    reg.bring_in(j)?;
                }
            }
        }
        let pos = reg.position(j)?;
        let kick = (self.config.phase - self.config.effective_offset()) * 2f64.powi(j as i32 - 1);
        reg.state.phase_kick(pos, kick)?;
        let theta = feedback_angle(j, bits);
        let basis = Gate::phase(theta).then(&Gate::hadamard())?;
        Ok((pos, basis, theta))
    }

    fn record(&self, bits: Vec<u8>, feedback: Vec<f64>) -> MeasurementRecord {
        let outcome = outcome_index(&bits);
        let offset = self.config.effective_offset();
        let estimate = super::grid_step(&self.config.params) * outcome as f64 + offset;
        MeasurementRecord {
            bits,
            feedback,
            outcome,
            estimate,
            error: wrap_error(estimate - self.config.phase),
            phase: self.config.phase,
            offset,
        }
    }

    /// One sampled run of the protocol.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MeasurementRecord> {
        let m = self.config.params.qubits();
        let mut bits = vec![0u8; m as usize];
        let mut feedback = vec![0.0; m as usize];
        let mut reg = self.start();
        for j in (1..=m).rev() {
            let (pos, basis, theta) = self.ready(&mut reg, j, &bits)?;
            let out = reg.state.measure_qubit(pos, &basis, rng)?;
            bits[j as usize - 1] = out.bit;
            feedback[j as usize - 1] = theta;
            reg.drop_measured(pos, out.state);
        }
        if reg.peak > MAX_LIVE || !reg.labels.is_empty() {
            return Err(Error::Internal("live register bookkeeping broken".into()));
        }
        Ok(self.record(bits, feedback))
    }

    /// Follow both outcomes of every measurement; returns the exact
    /// distribution and the largest live-register size seen.
    pub fn enumerate(&self) -> Result<(OutcomeDistribution, usize)> {
        let m = self.config.params.qubits();
        if m > MAX_ENUMERATION_QUBITS {
            return Err(Error::Resource(format!(
                "branch enumeration supports m <= {MAX_ENUMERATION_QUBITS}, got {m}"
            )));
        }
        let mut probs = vec![0.0; self.config.params.dim()];
        let mut bits = vec![0u8; m as usize];
        let mut peak = 0;
        self.descend(self.start(), m, &mut bits, 1.0, &mut probs, &mut peak)?;
        let dist =
            OutcomeDistribution::new(&self.config.params, self.config.effective_offset(), probs);
        Ok((dist, peak))
    }

    fn descend(
        &self,
        mut reg: LiveRegister,
        j: u32,
        bits: &mut [u8],
        weight: f64,
        probs: &mut [f64],
        peak: &mut usize,
    ) -> Result<()> {
        if j == 0 {
            probs[outcome_index(bits)] += weight;
            *peak = (*peak).max(reg.peak);
            return Ok(());
        }
        let (pos, basis, _) = self.ready(&mut reg, j, bits)?;
        let branches = reg.state.branch_qubit(pos, &basis)?;
        for (bit, branch) in branches.into_iter().enumerate() {
            bits[j as usize - 1] = bit as u8;
            let mut next = reg.clone();
            next.drop_measured(pos, branch.state);
            self.descend(next, j - 1, bits, weight * branch.probability, probs, peak)?;
        }
        bits[j as usize - 1] = 0;
        Ok(())
    }
}

/// Sample one run of `config`.
pub fn run_streaming<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    Streamer::new(*config)?.run(rng)
}

/// Exact outcome distribution of the streaming protocol.
pub fn enumerate_branches(config: &ProtocolConfig) -> Result<OutcomeDistribution> {
    Ok(Streamer::new(*config)?.enumerate()?.0)
}
