//! Closed-form mathematics of the sine (minimum Holevo variance) control state.
//!
//! With `N = 2^m - 1` and `M = N + 2 = 2^m + 1` the state
//! `a_n = sqrt(2/M) sin(pi (n+1)/M)` is an equal-weight sum of two product
//! states `c (x)_j |phi_j^+> + c (x)_j |phi_j^->`. Grouping the first `l`
//! factors gives orthogonal block states `Phi_[l]^+-`, which obey a two-term
//! recursion in `l`. Each recursion step is one two-qubit gate.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevec::{Gate, StateVector};

/// Largest supported number of control qubits for closed-form quantities.
pub const MAX_QUBITS: u32 = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Register size `m` and the derived `N = 2^m - 1`, `M = 2^m + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SineStateParams {
    m: u32,
}

impl SineStateParams {
    pub fn new(m: u32) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&m) {
            return Err(Error::arg(format!(
                "number of control qubits must be in 1..={MAX_QUBITS}, got {m}"
            )));
        }
        Ok(SineStateParams { m })
    }

    /// Number of control qubits `m`.
    pub fn qubits(&self) -> u32 {
        self.m
    }

    /// Hilbert space dimension `2^m = N + 1`.
    pub fn dim(&self) -> usize {
        1usize << self.m
    }

    /// Largest basis index `N = 2^m - 1`.
    pub fn max_index(&self) -> usize {
        self.dim() - 1
    }

    /// `M = N + 2 = 2^m + 1`.
    pub fn denominator(&self) -> f64 {
        (self.dim() + 1) as f64
    }

    fn check_qubit(&self, j: u32) -> Result<()> {
        if !(1..=self.m).contains(&j) {
            return Err(Error::arg(format!(
                "qubit label {j} outside 1..={}",
                self.m
            )));
        }
        Ok(())
    }

    fn check_level(&self, level: u32) -> Result<()> {
        if self.m < 2 || !(1..self.m).contains(&level) {
            return Err(Error::arg(format!(
                "recursion level {level} outside 1..={} (m = {})",
                self.m.saturating_sub(1),
                self.m
            )));
        }
        Ok(())
    }
}

/// Which of the two product branches / block states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Sine window over `0..=n_max` for any `n_max`, normalized to unit 2-norm.
pub fn sine_window(n_max: usize) -> Vec<f64> {
    let denom = (n_max + 2) as f64;
    let scale = (2.0 / denom).sqrt();
    (0..=n_max)
        .map(|n| scale * (PI * (n + 1) as f64 / denom).sin())
        .collect()
}

/// Optimal-state amplitudes `a_0 .. a_N`.
pub fn amplitudes(params: &SineStateParams) -> Vec<f64> {
    sine_window(params.max_index())
}

/// Half-angle `pi 2^(j-2) / M` carried by `|phi_j^+->`.
fn half_angle(params: &SineStateParams, j: u32) -> f64 {
    PI * 2f64.powi(j as i32 - 2) / params.denominator()
}

/// `cos(pi 2^(j-1) / M)`, the overlap `<phi_j^-|phi_j^+>`.
fn qubit_overlap(params: &SineStateParams, j: u32) -> f64 {
    (PI * 2f64.powi(j as i32 - 1) / params.denominator()).cos()
}

/// Single-qubit factor `|phi_j^+->` of the product decomposition.
pub fn phi_qubit_state(params: &SineStateParams, j: u32, sign: Sign) -> Result<[Complex64; 2]> {
    params.check_qubit(j)?;
    let a = sign.value() * half_angle(params, j);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok([Complex64::from_polar(s, a), Complex64::from_polar(s, -a)])
}

/// Overlap product `C_l = prod_{j=1}^{l} cos(pi 2^(j-1) / M)`.
pub fn overlap_product(params: &SineStateParams, level: u32) -> Result<f64> {
    params.check_qubit(level)?;
    Ok((1..=level).map(|j| qubit_overlap(params, j)).product())
}

/// `1 - C_l`, evaluated without cancellation when every factor is near 1.
pub fn one_minus_overlap_product(params: &SineStateParams, level: u32) -> Result<f64> {
    params.check_qubit(level)?;
    let log_c: f64 = (1..=level)
        .map(|j| {
            let half = PI * 2f64.powi(j as i32 - 1) / params.denominator() / 2.0;
            (-2.0 * half.sin().powi(2)).ln_1p()
        })
        .sum();
    Ok(-log_c.exp_m1())
}

/// `1 + sign C_l`.
fn one_plus_signed_overlap(params: &SineStateParams, level: u32, sign: f64) -> Result<f64> {
    if sign > 0.0 {
        Ok(1.0 + overlap_product(params, level)?)
    } else {
        one_minus_overlap_product(params, level)
    }
}

/// Product state `(x)_{j=1}^{l} |phi_j^+->` on `l` qubits.
pub fn phi_product_state(params: &SineStateParams, level: u32, sign: Sign) -> Result<StateVector> {
    params.check_qubit(level)?;
    let factors = (1..=level)
        .map(|j| phi_qubit_state(params, j, sign))
        .collect::<Result<Vec<_>>>()?;
    Ok(StateVector::product(&factors))
}

/// `(N_[l]^+-)^2 = 2 +- 2 C_l`.
pub fn big_phi_norm_sqr(params: &SineStateParams, level: u32, sign: Sign) -> Result<f64> {
    Ok(2.0 * one_plus_signed_overlap(params, level, sign.value())?)
}

/// Block state `Phi_[l]^+- = phi_[l]^+ +- phi_[l]^-`, optionally normalized.
pub fn big_phi_state(
    params: &SineStateParams,
    level: u32,
    sign: Sign,
    normalized: bool,
) -> Result<StateVector> {
    let plus = phi_product_state(params, level, Sign::Plus)?;
    let minus = phi_product_state(params, level, Sign::Minus)?;
    let one = Complex64::new(1.0, 0.0);
    let phi = plus.combine(one, &minus, Complex64::new(sign.value(), 0.0))?;
    if normalized {
        let norm = big_phi_norm_sqr(params, level, sign)?.sqrt();
        Ok(phi.scaled(Complex64::new(norm.recip(), 0.0)))
    } else {
        Ok(phi)
    }
}

/// Coefficients of one recursion step
/// `Phi~_[l+1]^+- = mu0 Phi~_[l]^+- |+> + mu1 Phi~_[l]^-+ |->`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionCoeffs {
    pub level: u32,
    pub mu0_plus: Complex64,
    pub mu1_plus: Complex64,
    pub mu0_minus: Complex64,
    pub mu1_minus: Complex64,
}

impl RecursionCoeffs {
    pub fn mu0(&self, sign: Sign) -> Complex64 {
        match sign {
            Sign::Plus => self.mu0_plus,
            Sign::Minus => self.mu0_minus,
        }
    }

    pub fn mu1(&self, sign: Sign) -> Complex64 {
        match sign {
            Sign::Plus => self.mu1_plus,
            Sign::Minus => self.mu1_minus,
        }
    }

    /// `|mu0|^2 + |mu1|^2` for the given sign; 1 for valid coefficients.
    pub fn column_norm_sqr(&self, sign: Sign) -> f64 {
        self.mu0(sign).norm_sqr() + self.mu1(sign).norm_sqr()
    }
}

/// Recursion coefficients for level `l` in `1..m`.
pub fn mu_coeffs(params: &SineStateParams, level: u32) -> Result<RecursionCoeffs> {
    params.check_level(level)?;
    let angle = PI * 2f64.powi(level as i32 - 1) / params.denominator();
    // ratio of block norms N_[l]^(s-sign) / N_[l+1]^sign
    let ratio = |same: bool, sign: Sign| -> Result<f64> {
        let num_sign = if same { sign.value() } else { -sign.value() };
        let num = one_plus_signed_overlap(params, level, num_sign)?;
        let den = one_plus_signed_overlap(params, level + 1, sign.value())?;
        Ok((num / den).sqrt())
    };
    let mu0 = |sign| ratio(true, sign).map(|r| Complex64::new(angle.cos() * r, 0.0));
    let mu1 = |sign| ratio(false, sign).map(|r| Complex64::new(0.0, angle.sin() * r));
    Ok(RecursionCoeffs {
        level,
        mu0_plus: mu0(Sign::Plus)?,
        mu1_plus: mu1(Sign::Plus)?,
        mu0_minus: mu0(Sign::Minus)?,
        mu1_minus: mu1(Sign::Minus)?,
    })
}

/// `(H (x) H) U (H (x) H)`: converts a 4x4 matrix written in the
/// `(|++>, |+->, |-+>, |-->)` basis to the computational basis.
fn pm_to_computational(pm: &[Complex64]) -> Vec<Complex64> {
    let h2: Vec<Complex64> = (0..16)
        .map(|k| {
            let (r, c) = (k / 4usize, k % 4);
            let sign = if (r & c).count_ones() % 2 == 0 {
                0.5
            } else {
                -0.5
            };
            Complex64::new(sign, 0.0)
        })
        .collect();
    let tmp = crate::statevec::matmul(pm, &h2, 4);
    crate::statevec::matmul(&h2, &tmp, 4)
}

/// The two constrained columns in the `+-` basis: images of `|+,+>` and `|+,->`
/// (fresh qubit first, flag second).
fn constrained_columns(c: &RecursionCoeffs) -> [[Complex64; 4]; 2] {
    [
        [c.mu0_plus, ZERO, ZERO, c.mu1_plus],
        [ZERO, c.mu1_minus, c.mu0_minus, ZERO],
    ]
}

/// Preparation gate for one recursion step, as a controlled rotation.
///
/// In the `+-` basis, with the fresh qubit as first factor and the flag as
/// second: rotate the fresh qubit by `V^+` or `V^-` conditioned on the flag,
/// where `V^+|+> = mu0+ |+> + mu1+ |->` and `V^-|+> = mu1- |+> + mu0- |->`,
/// then flip the flag conditioned on the fresh qubit (`|->` acts as "1").
/// The flip moves the flag to `|+>` on the `mu0` terms and `|->` on the `mu1`
/// terms, which is where the recursion puts qubit `l + 1`.
pub fn preparation_unitary(coeffs: &RecursionCoeffs) -> Result<Gate> {
    let rot = |c0: Complex64, c1: Complex64| [[c0, -c1.conj()], [c1, c0.conj()]];
    let v = [
        rot(coeffs.mu0_plus, coeffs.mu1_plus),
        rot(coeffs.mu1_minus, coeffs.mu0_minus),
    ];
    let mut pm = vec![ZERO; 16];
    for (flag, rotation) in v.iter().enumerate() {
        for (f_out, row_entries) in rotation.iter().enumerate() {
            for (f_in, &x) in row_entries.iter().enumerate() {
                // controlled rotation, then (f, s) -> (f, s xor f)
                let row = 2 * f_out + (flag ^ f_out);
                let col = 2 * f_in + flag;
                pm[row * 4 + col] = x;
            }
        }
    }
    Gate::from_rows(2, pm_to_computational(&pm))
}

/// Preparation gate `U_l` for `l` in `1..m` (controlled-rotation realization).
pub fn build_preparation_unitary(params: &SineStateParams, level: u32) -> Result<Gate> {
    preparation_unitary(&mu_coeffs(params, level)?)
}

/// Alternative `U_l`: the two constrained columns completed by modified
/// Gram-Schmidt over the canonical basis vectors in index order.
pub fn preparation_unitary_gram_schmidt(params: &SineStateParams, level: u32) -> Result<Gate> {
    let coeffs = mu_coeffs(params, level)?;
    let mut cols: Vec<[Complex64; 4]> = constrained_columns(&coeffs).to_vec();
    for seed in 0..4 {
        if cols.len() == 4 {
            break;
        }
        let mut v = [ZERO; 4];
        v[seed] = Complex64::new(1.0, 0.0);
        for q in &cols {
            let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= proj * y);
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
    }
    if cols.len() != 4 {
        return Err(Error::Numeric("Gram-Schmidt completion lost rank".into()));
    }
    let pm: Vec<Complex64> = (0..16).map(|k| cols[k % 4][k / 4]).collect();
    Gate::from_rows(2, pm_to_computational(&pm))
}

/// Maps `|+> -> |+>`, `|-> -> i|->`: turns the final flag into `Phi~_[1]^+-`.
pub fn flag_fix_gate() -> Gate {
    let a = Complex64::new(0.5, 0.5);
    let b = Complex64::new(0.5, -0.5);
    Gate::single([[a, b], [b, a]]).expect("flag fix gate is unitary")
}

/// Ordered gate list that prepares the sine state from `|+>^m`.
#[derive(Debug, Clone)]
pub struct PreparationPlan {
    pub params: SineStateParams,
    /// `(l, U_l)` for `l = m-1` down to `1`; `U_l` acts on qubits `(l, l+1)`.
    pub gates: Vec<(u32, Gate)>,
    pub flag_fix: Gate,
}

impl PreparationPlan {
    pub fn new(params: SineStateParams) -> Result<Self> {
        let gates = (1..params.qubits())
            .rev()
            .map(|l| Ok((l, build_preparation_unitary(&params, l)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparationPlan {
            params,
            gates,
            flag_fix: flag_fix_gate(),
        })
    }
}
