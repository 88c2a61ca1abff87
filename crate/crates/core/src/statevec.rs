//! Minimal dense statevector engine.
//!
//! Qubit positions are 0-based: position `p` is bit `p` of the flat amplitude
//! index, so a register holding control qubits 1..m in order stores qubit `j`
//! at position `j - 1` and the basis state `|n_1 ... n_m>` at index
//! `sum_j n_j 2^(j-1)`.
//!
//! Measured qubits are removed from the register, never left collapsed.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Amplitude type used throughout the crate.
pub type ComplexAmp = Complex64;

/// Max-abs tolerance on `U^dagger U - I` accepted at gate construction.
pub const UNITARY_TOL: f64 = 1e-10;

/// Tolerance on `|sum |a|^2 - 1|` for a state to count as normalized.
pub const NORM_TOL: f64 = 1e-9;

/// Both measurement branches below this weight means the state has no norm left.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A validated 1- or 2-qubit unitary, stored row-major.
///
/// For a two-qubit gate applied to `targets = [a, b]`, the local basis index is
/// `2 * bit(a) + bit(b)`: the first target is the first (most significant)
/// tensor factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    arity: usize,
    matrix: Vec<Complex64>,
}

impl Gate {
    /// Build from a row-major matrix of dimension `2^arity`. Fails unless unitary
    /// within [`UNITARY_TOL`].
    pub fn from_rows(arity: usize, matrix: Vec<Complex64>) -> Result<Self> {
        if arity != 1 && arity != 2 {
            return Err(Error::arg(format!(
                "gate arity must be 1 or 2, got {arity}"
            )));
        }
        let dim = 1 << arity;
        if matrix.len() != dim * dim {
            return Err(Error::arg(format!(
                "gate of arity {arity} needs {} entries, got {}",
                dim * dim,
                matrix.len()
            )));
        }
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Validation("gate has non-finite entries".into()));
        }
        let gate = Gate { arity, matrix };
        let defect = gate.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::Validation(format!(
                "gate is not unitary: max |U^dagger U - I| = {defect:.3e}"
            )));
        }
        Ok(gate)
    }

    pub fn single(m: [[Complex64; 2]; 2]) -> Result<Self> {
        Self::from_rows(1, m.iter().flatten().copied().collect())
    }

    pub fn two(m: [[Complex64; 4]; 4]) -> Result<Self> {
        Self::from_rows(2, m.iter().flatten().copied().collect())
    }

    pub fn identity(arity: usize) -> Self {
        let dim = 1 << arity;
        let mut matrix = vec![ZERO; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = ONE;
        }
        Gate { arity, matrix }
    }

    pub fn hadamard() -> Self {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Gate {
            arity: 1,
            matrix: vec![s, s, s, -s],
        }
    }

    /// `diag(1, e^{i angle})`.
    pub fn phase(angle: f64) -> Self {
        Gate {
            arity: 1,
            matrix: vec![ONE, ZERO, ZERO, Complex64::from_polar(1.0, angle)],
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim() + col]
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    /// Column `col` as a vector.
    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.dim()).map(|r| self.entry(r, col)).collect()
    }

    /// The gate that applies `self` first and then `next`, i.e. `next * self`.
    pub fn then(&self, next: &Gate) -> Result<Gate> {
        if self.arity != next.arity {
            return Err(Error::arg("cannot compose gates of different arity"));
        }
        Ok(Gate {
            arity: self.arity,
            matrix: matmul(&next.matrix, &self.matrix, self.dim()),
        })
    }

    pub fn adjoint(&self) -> Gate {
        let d = self.dim();
        let mut matrix = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                matrix[c * d + r] = self.matrix[r * d + c].conj();
            }
        }
        Gate {
            arity: self.arity,
            matrix,
        }
    }

    /// Matrix-vector product on a local vector of length `dim()`.
    pub fn apply_local(&self, v: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim();
        (0..d)
            .map(|r| (0..d).map(|c| self.matrix[r * d + c] * v[c]).sum())
            .collect()
    }

    /// Max-abs entry of `U^dagger U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += self.matrix[k * d + i].conj() * self.matrix[k * d + j];
                }
                if i == j {
                    acc -= ONE;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }
}

/// Row-major square product `a * b`.
pub(crate) fn matmul(a: &[Complex64], b: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; d * d];
    for r in 0..d {
        for k in 0..d {
            let x = a[r * d + k];
            if x == ZERO {
                continue;
            }
            for c in 0..d {
                out[r * d + c] += x * b[k * d + c];
            }
        }
    }
    out
}

/// Dense amplitude vector over `num_qubits` live qubits.
///
/// A zero-qubit register is a single scalar amplitude; it is what remains after
/// every qubit has been measured out.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
    normalized: bool,
}

/// Outcome of a sampled single-qubit measurement.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub bit: u8,
    pub probability: f64,
    /// Post-measurement state with the measured qubit removed.
    pub state: StateVector,
}

/// One deterministic branch of a single-qubit measurement.
#[derive(Debug, Clone)]
pub struct Branch {
    pub probability: f64,
    /// Collapsed, renormalized state with the measured qubit removed. For a
    /// zero-weight branch this is the zero vector and is not flagged normalized.
    pub state: StateVector,
}

impl StateVector {
    /// Build from raw amplitudes; length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::arg(format!(
                "amplitude count {} is not a power of two",
                amps.len()
            )));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("non-finite amplitude".into()));
        }
        let num_qubits = amps.len().trailing_zeros() as usize;
        Ok(Self::from_parts(num_qubits, amps))
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    fn from_parts(num_qubits: usize, amps: Vec<Complex64>) -> Self {
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        StateVector {
            num_qubits,
            amps,
            normalized: (norm - 1.0).abs() <= NORM_TOL,
        }
    }

    /// Computational basis state `|index>` on `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::arg(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(StateVector {
            num_qubits,
            amps,
            normalized: true,
        })
    }

    /// Basis state with bit `n_j` on qubit position `j - 1`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let index = bits
            .iter()
            .enumerate()
            .map(|(p, &b)| usize::from(b & 1) << p)
            .sum();
        Self::basis(bits.len(), index)
    }

    /// `|+>^{num_qubits}`.
    pub fn plus(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        StateVector {
            num_qubits,
            amps: vec![a; dim],
            normalized: true,
        }
    }

    /// Product state, one single-qubit vector per position (position 0 first).
    pub fn product(factors: &[[Complex64; 2]]) -> Self {
        let mut amps = vec![ONE];
        for f in factors {
            // new qubit occupies the next-higher bit
            let mut next = Vec::with_capacity(amps.len() * 2);
            next.extend(amps.iter().map(|&a| a * f[0]));
            next.extend(amps.iter().map(|&a| a * f[1]));
            amps = next;
        }
        Self::from_parts(factors.len(), amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Scale by a complex factor; re-evaluates the normalized flag.
    pub fn scaled(&self, factor: Complex64) -> StateVector {
        Self::from_parts(
            self.num_qubits,
            self.amps.iter().map(|&a| a * factor).collect(),
        )
    }

    /// Divide by the norm. Fails on a zero vector.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr().sqrt();
        if n < PROBABILITY_FLOOR {
            return Err(Error::Numeric("cannot normalize a zero-norm state".into()));
        }
        self.amps.iter_mut().for_each(|a| *a /= n);
        self.normalized = true;
        Ok(())
    }

    /// Elementwise linear combination `alpha * self + beta * other`.
    pub fn combine(&self, alpha: Complex64, other: &StateVector, beta: Complex64) -> Result<Self> {
        self.check_same_dim(other)?;
        let amps = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(&a, &b)| alpha * a + beta * b)
            .collect();
        Ok(Self::from_parts(self.num_qubits, amps))
    }

    /// `self (x) other`, with `other` placed on the higher positions.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for &b in &other.amps {
            amps.extend(self.amps.iter().map(|&a| a * b));
        }
        Self::from_parts(self.num_qubits + other.num_qubits, amps)
    }

    /// Add a fresh qubit in state `single` at the new top position.
    pub fn append_qubit(&self, single: [Complex64; 2]) -> StateVector {
        self.tensor(&StateVector::product(&[single]))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_dim(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Max-abs elementwise difference.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    fn check_same_dim(&self, other: &StateVector) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::arg(format!(
                "dimension mismatch: {} vs {} qubits",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(())
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::arg(format!(
                "qubit position {qubit} out of range for {}-qubit register",
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Apply `gate` to the listed qubit positions.
    pub fn apply_gate(&mut self, gate: &Gate, targets: &[usize]) -> Result<()> {
        if targets.len() != gate.arity() {
            return Err(Error::arg(format!(
                "gate of arity {} given {} targets",
                gate.arity(),
                targets.len()
            )));
        }
        for &t in targets {
            self.check_qubit(t)?;
        }
        match *targets {
            [t] => {
                let mask = 1usize << t;
                let [u00, u01, u10, u11] = [
                    gate.matrix[0],
                    gate.matrix[1],
                    gate.matrix[2],
                    gate.matrix[3],
                ];
                for i in (0..self.dim()).filter(|i| i & mask == 0) {
                    let (a0, a1) = (self.amps[i], self.amps[i | mask]);
                    self.amps[i] = u00 * a0 + u01 * a1;
                    self.amps[i | mask] = u10 * a0 + u11 * a1;
                }
            }
            [ta, tb] => {
                if ta == tb {
                    return Err(Error::arg(format!("duplicate target qubit {ta}")));
                }
                let (ma, mb) = (1usize << ta, 1usize << tb);
                let u = &gate.matrix;
                for i in (0..self.dim()).filter(|i| i & (ma | mb) == 0) {
                    let idx = [i, i | mb, i | ma, i | ma | mb];
                    let v = idx.map(|k| self.amps[k]);
                    for (r, &k) in idx.iter().enumerate() {
                        self.amps[k] = (0..4).map(|c| u[r * 4 + c] * v[c]).sum();
                    }
                }
            }
            _ => unreachable!("arity is validated at construction"),
        }
        Ok(())
    }

    /// Multiply every amplitude whose `qubit` bit is 1 by `e^{i angle}`.
    ///
    /// This is exactly what a controlled `U^k` does to its control when the
    /// target sits in an eigenstate with eigenphase `angle / k`.
    pub fn phase_kick(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        let w = Complex64::from_polar(1.0, angle);
        self.amps
            .iter_mut()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .for_each(|(_, a)| *a *= w);
        Ok(())
    }

    /// Rotate `qubit` by `basis_rotation`, then split into the two
    /// computational outcomes with the qubit removed.
    pub fn branch_qubit(&self, qubit: usize, basis_rotation: &Gate) -> Result<[Branch; 2]> {
        let (parts, weights) = self.split(qubit, basis_rotation)?;
        let total = weights[0] + weights[1];
        let [p0, p1] = weights.map(|w| if total > 0.0 { w / total } else { 0.0 });
        let [s0, s1] = parts;
        Ok([
            Self::collapse(s0, weights[0], p0),
            Self::collapse(s1, weights[1], p1),
        ])
    }

    /// Sampled version of [`branch_qubit`](Self::branch_qubit).
    pub fn measure_qubit<R: Rng + ?Sized>(
        &self,
        qubit: usize,
        basis_rotation: &Gate,
        rng: &mut R,
    ) -> Result<Measurement> {
        let (parts, weights) = self.split(qubit, basis_rotation)?;
        if weights[0] < PROBABILITY_FLOOR && weights[1] < PROBABILITY_FLOOR {
            return Err(Error::Numeric(format!(
                "both outcomes of qubit {qubit} have probability below {PROBABILITY_FLOOR:e}"
            )));
        }
        let total = weights[0] + weights[1];
        let p0 = weights[0] / total;
        let bit = u8::from(rng.gen::<f64>() >= p0);
        let [s0, s1] = parts;
        let (state, w, p) = if bit == 0 {
            (s0, weights[0], p0)
        } else {
            (s1, weights[1], 1.0 - p0)
        };
        let branch = Self::collapse(state, w, p);
        Ok(Measurement {
            bit,
            probability: branch.probability,
            state: branch.state,
        })
    }

    fn split(
        &self,
        qubit: usize,
        basis_rotation: &Gate,
    ) -> Result<([Vec<Complex64>; 2], [f64; 2])> {
        if basis_rotation.arity() != 1 {
            return Err(Error::arg(
                "measurement basis rotation must be a 1-qubit gate",
            ));
        }
        self.check_qubit(qubit)?;
        let mut rotated = self.clone();
        rotated.apply_gate(basis_rotation, &[qubit])?;
        let half = self.dim() / 2;
        let low = (1usize << qubit) - 1;
        let mut parts = [Vec::with_capacity(half), Vec::with_capacity(half)];
        for r in 0..half {
            // reinsert a zero bit at `qubit`
            let base = (r & low) | ((r & !low) << 1);
            parts[0].push(rotated.amps[base]);
            parts[1].push(rotated.amps[base | (1 << qubit)]);
        }
        let weights = [0, 1].map(|b| parts[b].iter().map(|z| z.norm_sqr()).sum::<f64>());
        Ok((parts, weights))
    }

    fn collapse(mut amps: Vec<Complex64>, weight: f64, probability: f64) -> Branch {
        let num_qubits = amps.len().trailing_zeros() as usize;
        if weight > 0.0 {
            let s = weight.sqrt();
            amps.iter_mut().for_each(|a| *a /= s);
            Branch {
                probability,
                state: StateVector {
                    num_qubits,
                    amps,
                    normalized: true,
                },
            }
        } else {
            Branch {
                probability: 0.0,
                state: StateVector {
                    num_qubits,
                    amps: vec![ZERO; 1 << num_qubits],
                    normalized: false,
                },
            }
        }
    }
}

/// `|<a|b>|^2` for two normalized states of equal size.
pub fn fidelity_up_to_global_phase(a: &StateVector, b: &StateVector) -> Result<f64> {
    if !a.is_normalized() || !b.is_normalized() {
        return Err(Error::arg("fidelity requires normalized states"));
    }
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Single-qubit `|+>` and `|->`.
pub fn plus_vec() -> [Complex64; 2] {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [s, s]
}

pub fn minus_vec() -> [Complex64; 2] {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [s, -s]
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps: Vec<_> = (0..1 << n)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let mut s = StateVector::from_amplitudes(amps).unwrap();
        s.normalize().unwrap();
        s
    }

    fn random_unitary_1q(rng: &mut ChaCha8Rng) -> Gate {
        let (a, b, g, d): (f64, f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen(), rng.gen());
        let (t, p, l, gp) = (a * PI, b * 2.0 * PI, g * 2.0 * PI, d * 2.0 * PI);
        let e = |x: f64| Complex64::from_polar(1.0, x);
        Gate::single([
            [e(gp) * (t / 2.0).cos(), -e(gp + l) * (t / 2.0).sin()],
            [e(gp + p) * (t / 2.0).sin(), e(gp + p + l) * (t / 2.0).cos()],
        ])
        .unwrap()
    }

    #[test]
    fn identity_leaves_state_alone() {
        let s0 = random_state(3, 1);
        let mut s = s0.clone();
        s.apply_gate(&Gate::identity(1), &[1]).unwrap();
        s.apply_gate(&Gate::identity(2), &[2, 0]).unwrap();
        assert_eq!(s, s0);
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::basis(1, 0).unwrap();
        s.apply_gate(&Gate::hadamard(), &[0]).unwrap();
        assert_abs_diff_eq!(s.amplitude(0).re, 0.7071068, epsilon = 1e-7);
        assert_abs_diff_eq!(s.amplitude(1).re, 0.7071068, epsilon = 1e-7);
    }

    #[test]
    fn two_qubit_target_order() {
        // CNOT with control = first target.
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        let cnot = Gate::two([[o, z, z, z], [z, o, z, z], [z, z, z, o], [z, z, o, z]]).unwrap();
        // qubit at position 2 set, control there, target position 0
        let mut s = StateVector::from_bits(&[0, 0, 1]).unwrap();
        s.apply_gate(&cnot, &[2, 0]).unwrap();
        assert_abs_diff_eq!(s.amplitude(0b101).re, 1.0);
        let mut s = StateVector::from_bits(&[0, 0, 1]).unwrap();
        s.apply_gate(&cnot, &[0, 2]).unwrap();
        assert_abs_diff_eq!(s.amplitude(0b100).re, 1.0);
    }

    #[test]
    fn target_errors() {
        let mut s = StateVector::plus(2);
        assert!(matches!(
            s.apply_gate(&Gate::hadamard(), &[2]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            s.apply_gate(&Gate::identity(2), &[1, 1]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            s.apply_gate(&Gate::hadamard(), &[0, 1]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(s.phase_kick(5, 1.0), Err(Error::Argument(_))));
    }

    #[test]
    fn non_unitary_gate_rejected() {
        let r = Gate::single([[c(1.0, 0.0), c(1e-3, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]);
        assert!(matches!(r, Err(Error::Validation(_))));
        let r = Gate::from_rows(3, vec![c(1.0, 0.0); 64]);
        assert!(matches!(r, Err(Error::Argument(_))));
    }

    #[test]
    fn phase_kick_examples() {
        let mut s = StateVector::plus(1);
        s.phase_kick(0, 0.0).unwrap();
        assert_eq!(s, StateVector::plus(1));

        let mut s = StateVector::plus(1);
        s.phase_kick(0, PI).unwrap();
        let minus = StateVector::product(&[minus_vec()]);
        assert_abs_diff_eq!(
            fidelity_up_to_global_phase(&s, &minus).unwrap(),
            1.0,
            epsilon = 1e-15
        );

        let mut s = StateVector::plus(1);
        s.phase_kick(0, PI / 2.0).unwrap();
        assert_abs_diff_eq!(s.amplitude(0).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(1).re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(1).im, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn measure_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let zero = StateVector::basis(1, 0).unwrap();
        let m = zero.measure_qubit(0, &Gate::identity(1), &mut rng).unwrap();
        assert_eq!((m.bit, m.probability), (0, 1.0));
        assert_eq!(m.state.num_qubits(), 0);

        let plus = StateVector::plus(1);
        let m = plus.measure_qubit(0, &Gate::hadamard(), &mut rng).unwrap();
        assert_eq!(m.bit, 0);
        assert_abs_diff_eq!(m.probability, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn measure_underflow_is_numeric_error() {
        let z = StateVector::from_amplitudes(vec![c(0.0, 0.0); 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            z.measure_qubit(0, &Gate::identity(1), &mut rng),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn branch_examples() {
        let [b0, b1] = StateVector::basis(1, 0)
            .unwrap()
            .branch_qubit(0, &Gate::identity(1))
            .unwrap();
        assert_eq!(b0.probability, 1.0);
        assert_eq!(b1.probability, 0.0);
        assert_eq!(b0.state.num_qubits(), 0);
        assert!(b0.state.is_normalized());
        assert!(!b1.state.is_normalized());
        assert_eq!(b1.state.norm_sqr(), 0.0);

        let [b0, b1] = StateVector::plus(1)
            .branch_qubit(0, &Gate::identity(1))
            .unwrap();
        assert_abs_diff_eq!(b0.probability, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b1.probability, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn branch_removes_middle_qubit() {
        // |n1 n2 n3> = |1 0 1> -> measure position 1 -> |1 1> on remaining
        let s = StateVector::from_bits(&[1, 0, 1]).unwrap();
        let [b0, _] = s.branch_qubit(1, &Gate::identity(1)).unwrap();
        assert_eq!(b0.state.num_qubits(), 2);
        assert_abs_diff_eq!(b0.state.amplitude(0b11).re, 1.0);
    }

    #[test]
    fn fidelity_examples() {
        let psi = random_state(3, 9);
        assert_abs_diff_eq!(
            fidelity_up_to_global_phase(&psi, &psi).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let rotated = psi.scaled(Complex64::from_polar(1.0, 1.234));
        assert_abs_diff_eq!(
            fidelity_up_to_global_phase(&psi, &rotated).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let zero = StateVector::basis(1, 0).unwrap();
        assert_abs_diff_eq!(
            fidelity_up_to_global_phase(&zero, &StateVector::plus(1)).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(matches!(
            fidelity_up_to_global_phase(&zero, &StateVector::plus(2)),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn index_convention_round_trip() {
        for idx in 0..32usize {
            let bits: Vec<u8> = (0..5).map(|p| ((idx >> p) & 1) as u8).collect();
            let s = StateVector::from_bits(&bits).unwrap();
            let n: usize = bits
                .iter()
                .enumerate()
                .map(|(j, &b)| usize::from(b) << j)
                .sum();
            assert_eq!(s.amplitude(n), c(1.0, 0.0));
        }
    }

    #[test]
    fn norm_preserved_over_thousand_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = random_state(5, 4);
        for i in 0..1000 {
            let g = random_unitary_1q(&mut rng);
            s.apply_gate(&g, &[i % 5]).unwrap();
            if i % 3 == 0 {
                s.phase_kick((i + 2) % 5, rng.gen::<f64>() * 7.0).unwrap();
            }
        }
        assert!((s.norm_sqr() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn sampling_matches_branch_probabilities() {
        // chi-square over 1e5 draws, one degree of freedom
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_state(3, 5);
        let rot = random_unitary_1q(&mut rng);
        let [b0, b1] = s.branch_qubit(1, &rot).unwrap();
        assert!((b0.probability + b1.probability - 1.0).abs() <= 1e-12);
        let n = 100_000;
        let ones: usize = (0..n)
            .map(|_| s.measure_qubit(1, &rot, &mut rng).unwrap().bit as usize)
            .sum();
        let obs = [(n - ones) as f64, ones as f64];
        let exp = [b0.probability * n as f64, b1.probability * n as f64];
        let chi2: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e).powi(2) / e).sum();
        // 99.9% quantile of chi^2(1)
        assert!(chi2 < 10.83, "chi2 = {chi2}");
    }
}
