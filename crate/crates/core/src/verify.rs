//! Invariant suite run by `optqpe verify`.
//!
//! Every check reports the worst deviation it saw against a fixed tolerance.

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{self, offset_averaged_stats};
use crate::error::{Error, Result};
use crate::par::{try_map_indexed, Execution};
use crate::protocol::{
    canonical_distribution, grid_step, inverse_qft_reference, prepare_full, ProtocolConfig,
    StateKind, Streamer,
};
use crate::sinestate::{self, RecursionCoeffs, Sign, SineStateParams};
use crate::statevec::{fidelity_up_to_global_phase, minus_vec, plus_vec, StateVector};

/// Largest register accepted by the suite (bounded by the dense reference).
pub const MAX_VERIFY_QUBITS: u32 = 12;

/// Number of true phases in the measurement-equivalence sweep.
pub const PHASE_GRID_POINTS: usize = 16;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub max_m: u32,
    /// Added to every `mu0_plus` the recursion checks consume (fault injection).
    pub mu_perturbation: f64,
    pub exec: Execution,
}

impl VerifyOptions {
    pub fn new(max_m: u32) -> Self {
        VerifyOptions {
            max_m,
            mu_perturbation: 0.0,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Largest deviation observed (for bounds: the margin-defining value).
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub max_m: u32,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn failed_checks(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }
}

/// Accumulates `worst` deviations for one named check.
struct Tally {
    name: &'static str,
    tolerance: f64,
    worst: f64,
    cases: usize,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally {
            name,
            tolerance,
            worst: 0.0,
            cases: 0,
        }
    }

    fn add(&mut self, deviation: f64) {
        self.cases += 1;
        // NaN must fail
        if deviation.is_nan() || deviation > self.worst {
            self.worst = if deviation.is_nan() {
                f64::INFINITY
            } else {
                deviation
            };
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            passed: self.worst <= self.tolerance,
            worst: self.worst,
            tolerance: self.tolerance,
            cases: self.cases,
        }
    }
}

fn params_range(max_m: u32, from: u32) -> Result<Vec<SineStateParams>> {
    (from..=max_m).map(SineStateParams::new).collect()
}

fn coeffs(params: &SineStateParams, level: u32, perturb: f64) -> Result<RecursionCoeffs> {
    let mut c = sinestate::mu_coeffs(params, level)?;
    c.mu0_plus += Complex64::new(perturb, 0.0);
    Ok(c)
}

/// Run the full suite.
pub fn run_verification(opts: &VerifyOptions) -> Result<VerifyReport> {
    if !(1..=MAX_VERIFY_QUBITS).contains(&opts.max_m) {
        return Err(Error::arg(format!(
            "max m must be in 1..={MAX_VERIFY_QUBITS}, got {}",
            opts.max_m
        )));
    }
    let all = params_range(opts.max_m, 1)?;
    let mut checks = Vec::new();

    let mut t = Tally::new("amplitude_normalization", 1e-12);
    for q in &all {
        let a = sinestate::amplitudes(q);
        t.add((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs());
    }
    checks.push(t.finish());

    let mut t = Tally::new("product_decomposition", 1e-12);
    for q in &all {
        let m = q.qubits();
        let c = Complex64::new((2f64.powi(m as i32 - 1) / q.denominator()).sqrt(), 0.0);
        let plus = sinestate::phi_product_state(q, m, Sign::Plus)?;
        let minus = sinestate::phi_product_state(q, m, Sign::Minus)?;
        let direct = StateVector::from_real(&sinestate::amplitudes(q))?;
        t.add(plus.combine(c, &minus, c)?.max_abs_diff(&direct)?);
    }
    checks.push(t.finish());

    let mut orth = Tally::new("block_orthogonality", 1e-12);
    let mut norms = Tally::new("block_norms", 1e-12);
    for q in &all {
        for l in 1..=q.qubits() {
            let plus = sinestate::big_phi_state(q, l, Sign::Plus, false)?;
            let minus = sinestate::big_phi_state(q, l, Sign::Minus, false)?;
            orth.add(minus.inner(&plus)?.norm());
            norms.add((plus.norm_sqr() - sinestate::big_phi_norm_sqr(q, l, Sign::Plus)?).abs());
            norms.add((minus.norm_sqr() - sinestate::big_phi_norm_sqr(q, l, Sign::Minus)?).abs());
        }
    }
    checks.push(orth.finish());
    checks.push(norms.finish());

    let mut t = Tally::new("overlap_product_telescoping", 1e-12);
    for q in &all {
        t.add((sinestate::overlap_product(q, q.qubits())? - 2f64.powi(-(q.qubits() as i32))).abs());
    }
    checks.push(t.finish());

    let multi = params_range(opts.max_m, 2)?;
    let mut mu_norm = Tally::new("mu_normalization", 1e-12);
    let mut rec = Tally::new("recurrence", 1e-12);
    let mut unit = Tally::new("gate_unitarity", 1e-10);
    let mut agree = Tally::new("gate_realizations_agree", 1e-12);
    for q in &multi {
        for l in 1..q.qubits() {
            let c = coeffs(q, l, opts.mu_perturbation)?;
            for sign in [Sign::Plus, Sign::Minus] {
                mu_norm.add((c.column_norm_sqr(sign) - 1.0).abs());
                let lhs = sinestate::big_phi_state(q, l + 1, sign, true)?;
                let same = sinestate::big_phi_state(q, l, sign, true)?.append_qubit(plus_vec());
                let other =
                    sinestate::big_phi_state(q, l, sign.flip(), true)?.append_qubit(minus_vec());
                rec.add(lhs.max_abs_diff(&same.combine(c.mu0(sign), &other, c.mu1(sign))?)?);
            }
            let a = sinestate::build_preparation_unitary(q, l)?;
            let b = sinestate::preparation_unitary_gram_schmidt(q, l)?;
            unit.add(a.unitarity_defect());
            unit.add(b.unitarity_defect());
            for col in 0..2 {
                // constrained columns live in the +- basis: |+,+> and |+,->
                let flag = if col == 0 { plus_vec() } else { minus_vec() };
                let input = StateVector::product(&[plus_vec(), flag]);
                let (mut x, mut y) = (input.clone(), input);
                x.apply_gate(&a, &[0, 1])?;
                y.apply_gate(&b, &[0, 1])?;
                agree.add(x.max_abs_diff(&y)?);
            }
        }
    }
    checks.push(mu_norm.finish());
    checks.push(rec.finish());
    checks.push(unit.finish());
    checks.push(agree.finish());

    let mut t = Tally::new("preparation_fidelity", 1e-10);
    for q in &all {
        let prepared = prepare_full(q)?;
        let direct = StateVector::from_real(&sinestate::amplitudes(q))?;
        t.add(1.0 - fidelity_up_to_global_phase(&prepared, &direct)?);
    }
    checks.push(t.finish());

    let (equiv, live) = measurement_equivalence(&all, opts.exec)?;
    checks.push(equiv);
    checks.push(live);

    let mut hol = Tally::new("holevo_minimum_streaming", 1e-8);
    let mut sharp = Tally::new("holevo_minimum_sharpness", 1e-12);
    let mut base = Tally::new("uniform_baseline", 1e-10);
    let mut sep = Tally::new("uniform_exceeds_optimal", 0.0);
    let rows = try_map_indexed(
        all.len(),
        opts.exec,
        |i| -> Result<(f64, f64, f64, Option<f64>)> {
            let q = all[i];
            let target = analysis::min_holevo_variance(q.max_index());
            let averaged = |kind| -> Result<f64> {
                let s = Streamer::new(ProtocolConfig::new(q, 0.3, kind))?;
                let stats = offset_averaged_stats(&q, 0.3, |off| {
                    Ok(s.with_setting(0.3, true, off)?.enumerate()?.0)
                })?;
                Ok(stats.holevo)
            };
            let opt = averaged(StateKind::Optimal)?;
            let uni = averaged(StateKind::Uniform)?;
            let d = q.dim() as f64;
            let uni_closed = (d / (d - 1.0)).powi(2) - 1.0;
            let s = analysis::sharpness_canonical(&StateKind::Optimal.amplitudes(&q));
            let margin = (q.qubits() >= 2).then_some(uni - target);
            Ok((
                (opt - target).abs(),
                (s.powi(-2) - 1.0 - target).abs(),
                (uni - uni_closed).abs(),
                margin,
            ))
        },
    )?;
    for (h, s, u, margin) in rows {
        hol.add(h);
        sharp.add(s);
        base.add(u);
        if let Some(gap) = margin {
            // deviation > 0 exactly when uniform does not strictly exceed optimal
            sep.add(if gap > 0.0 { 0.0 } else { 1.0 });
        }
    }
    checks.push(hol.finish());
    checks.push(sharp.finish());
    checks.push(base.finish());
    if sep.cases > 0 {
        checks.push(sep.finish());
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        max_m: opts.max_m,
        passed,
        checks,
    })
}

/// Phases used by the equivalence sweep: 16 points over `[0, 2 pi)`, shifted
/// off the outcome grid by a small irrational-looking amount, plus on-grid 0.
pub fn phase_sweep() -> Vec<f64> {
    (0..PHASE_GRID_POINTS)
        .map(|i| {
            let base = std::f64::consts::TAU * i as f64 / PHASE_GRID_POINTS as f64;
            if i == 0 {
                base
            } else {
                base + 0.0123
            }
        })
        .collect()
}

/// Worst elementwise disagreement between the three backends and the peak live
/// register size, over `params x 16 phases x both kinds x covariant on/off`.
pub fn measurement_equivalence(
    params: &[SineStateParams],
    exec: Execution,
) -> Result<(CheckResult, CheckResult)> {
    let phases = phase_sweep();
    let mut cases = Vec::new();
    for q in params {
        for kind in [StateKind::Optimal, StateKind::Uniform] {
            for covariant in [false, true] {
                for &phase in &phases {
                    cases.push((*q, kind, covariant, phase));
                }
            }
        }
    }
    let rows = try_map_indexed(cases.len(), exec, |i| -> Result<(f64, usize)> {
        let (q, kind, covariant, phase) = cases[i];
        let offset = if covariant { 0.37 * grid_step(&q) } else { 0.0 };
        let base = ProtocolConfig::new(q, phase, kind);
        let config = if covariant {
            base.with_offset(offset)?
        } else {
            base
        };
        let (enumerated, peak) = Streamer::new(config)?.enumerate()?;
        let canonical = canonical_distribution(&q, config.phase, offset, kind);
        let dense = inverse_qft_reference(&q, config.phase, offset, kind)?;
        let worst = enumerated
            .max_abs_diff(&canonical)?
            .max(enumerated.max_abs_diff(&dense)?)
            .max(canonical.max_abs_diff(&dense)?)
            .max((enumerated.total() - 1.0).abs());
        Ok((worst, peak))
    })?;
    let mut eq = Tally::new("measurement_equivalence", 1e-10);
    let mut live = Tally::new("live_register_bound", 2.0);
    for (w, peak) in rows {
        eq.add(w);
        live.add(peak as f64);
    }
    Ok((eq.finish(), live.finish()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let r = run_verification(&VerifyOptions::new(4)).unwrap();
        assert!(r.passed, "{:?}", r.failed_checks());
    }

    #[test]
    fn degenerate_m1_passes() {
        let r = run_verification(&VerifyOptions::new(1)).unwrap();
        assert!(r.passed, "{:?}", r.failed_checks());
        // no two-qubit gates exist at m = 1
        assert!(
            r.checks
                .iter()
                .find(|c| c.name == "recurrence")
                .map(|c| c.cases)
                == Some(0)
        );
    }

    #[test]
    fn tampered_mu_fails_recurrence() {
        let mut o = VerifyOptions::new(3);
        o.mu_perturbation = 1e-3;
        let r = run_verification(&o).unwrap();
        assert!(!r.passed);
        assert!(r.failed_checks().contains(&"recurrence"));
    }

    #[test]
    fn rejects_bad_range() {
        assert!(run_verification(&VerifyOptions::new(0)).is_err());
        assert!(run_verification(&VerifyOptions::new(13)).is_err());
    }
}
