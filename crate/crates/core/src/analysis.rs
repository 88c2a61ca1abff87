//! Error densities and Holevo-variance statistics.
//!
//! For a control state with real amplitudes `a_n` measured canonically, the
//! error `theta = estimate - phase` has density `|sum_n a_n e^{i n theta}|^2 / 2pi`.
//! The closed forms for the sine and uniform states are checked against that sum.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::protocol::{grid_step, wrap_error, MeasurementRecord, OutcomeDistribution};
use crate::sinestate::{sine_window, SineStateParams};

/// Closed forms switch to the direct sum when their denominator is this small.
pub const SINGULAR_DENOMINATOR: f64 = 1e-8;

/// Offsets per grid cell used to average out the covariant grid offset.
pub const OFFSET_GRID_POINTS: usize = 64;

/// Below this sharpness magnitude the Holevo variance is reported as infinite.
pub const SHARPNESS_FLOOR: f64 = 1e-12;

/// `(1/2pi) |sum_n a_n e^{i n theta}|^2`.
pub fn fourier_density(amps: &[f64], theta: f64) -> f64 {
    let sum: Complex64 = amps
        .iter()
        .enumerate()
        .map(|(n, &a)| Complex64::from_polar(a, n as f64 * theta))
        .sum();
    sum.norm_sqr() / (2.0 * PI)
}

/// Error density of the sine state with maximum index `n_max` under the
/// canonical measurement.
pub fn pdf_optimal(theta: f64, n_max: usize) -> f64 {
    let n = n_max as f64;
    let edge = PI / (n + 2.0);
    let den = edge.cos() - theta.cos();
    if den.abs() < SINGULAR_DENOMINATOR {
        return fourier_density(&sine_window(n_max), theta);
    }
    let ratio = (theta * (1.0 + n / 2.0)).cos() * edge.sin() / den;
    ratio * ratio / (PI * (n + 2.0))
}

/// Error density of the uniform superposition over `0..=n_max` (a periodic sinc).
pub fn pdf_uniform(theta: f64, n_max: usize) -> f64 {
    let n1 = (n_max + 1) as f64;
    let s = (theta / 2.0).sin();
    if s.abs() < SINGULAR_DENOMINATOR {
        return fourier_density(&vec![n1.sqrt().recip(); n_max + 1], theta);
    }
    let num = (n1 * theta / 2.0).sin();
    num * num / (s * s) / (2.0 * PI * n1)
}

/// `tan^2(pi / (N + 2))`.
pub fn min_holevo_variance(n_max: usize) -> f64 {
    (PI / (n_max as f64 + 2.0)).tan().powi(2)
}

/// `sum_n a_n a_(n+1)`: the canonical-measurement sharpness of a real state.
pub fn sharpness_canonical(amps: &[f64]) -> f64 {
    amps.windows(2).map(|w| w[0] * w[1]).sum()
}

/// Moments of a phase-error distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorStats {
    /// Mean phasor `<e^{i error}>`.
    #[serde(serialize_with = "ser_complex")]
    pub sharpness: Complex64,
    /// `|<e^{i error}>|^-2 - 1`.
    #[serde(serialize_with = "ser_extended")]
    pub holevo: f64,
    /// `<cos error>^-2 - 1`.
    #[serde(serialize_with = "ser_extended")]
    pub holevo_unbiased: f64,
    /// `2 (1 - <cos error>)`.
    pub cost_luis: f64,
    pub sample_count: usize,
}

fn ser_complex<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 3)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.serialize_field("abs", &z.norm())?;
    st.end()
}

/// Finite values as numbers, infinity as the string `"inf"`.
fn ser_extended<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str("inf")
    }
}

fn inverse_square_minus_one(x: f64) -> f64 {
    if x.abs() < SHARPNESS_FLOOR {
        f64::INFINITY
    } else {
        (x.powi(-2) - 1.0).max(0.0)
    }
}

impl ErrorStats {
    /// From a mean phasor; `<cos error>` is its real part.
    pub fn from_mean_phasor(sharpness: Complex64, sample_count: usize) -> Self {
        ErrorStats {
            sharpness,
            holevo: inverse_square_minus_one(sharpness.norm()),
            holevo_unbiased: inverse_square_minus_one(sharpness.re),
            cost_luis: 2.0 * (1.0 - sharpness.re),
            sample_count,
        }
    }

    /// Weighted errors; weights should sum to one.
    pub fn from_weighted<I: IntoIterator<Item = (f64, f64)>>(items: I) -> Self {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut count = 0;
        for (w, err) in items {
            acc += Complex64::from_polar(w, err);
            count += 1;
        }
        Self::from_mean_phasor(acc, count)
    }
}

/// Sample statistics of measurement records.
pub fn stats_from_samples(records: &[MeasurementRecord]) -> Result<ErrorStats> {
    if records.is_empty() {
        return Err(Error::arg("no samples"));
    }
    let w = (records.len() as f64).recip();
    Ok(ErrorStats::from_weighted(
        records.iter().map(|r| (w, r.error)),
    ))
}

/// Exact statistics of one outcome distribution at true phase `phase`.
pub fn stats_from_distribution(dist: &OutcomeDistribution, phase: f64) -> ErrorStats {
    ErrorStats::from_weighted(
        dist.probabilities
            .iter()
            .zip(&dist.grid)
            .map(|(&p, &g)| (p, wrap_error(g - phase))),
    )
}

/// Offsets `i * step / 64`, `i = 0..64`, covering one grid cell.
pub fn offset_grid(params: &SineStateParams) -> Vec<f64> {
    let step = grid_step(params);
    (0..OFFSET_GRID_POINTS)
        .map(|i| step * i as f64 / OFFSET_GRID_POINTS as f64)
        .collect()
}

/// Mean phasor averaged over a uniform offset grid, with the distribution for
/// each offset supplied by `dist_at`.
///
/// For an `m`-qubit register the offset-dependent part of the mean phasor is a
/// single harmonic `e^{i 2^m offset}`, which the 64-point grid cancels exactly.
pub fn offset_averaged_stats<F>(
    params: &SineStateParams,
    phase: f64,
    dist_at: F,
) -> Result<ErrorStats>
where
    F: Fn(f64) -> Result<OutcomeDistribution>,
{
    let offsets = offset_grid(params);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut count = 0;
    for &off in &offsets {
        let s = stats_from_distribution(&dist_at(off)?, phase);
        acc += s.sharpness;
        count += s.sample_count;
    }
    Ok(ErrorStats::from_mean_phasor(
        acc / offsets.len() as f64,
        count,
    ))
}

/// Density sampled on a grid over `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub thetas: Vec<f64>,
    pub densities: Vec<f64>,
}

impl DensityCurve {
    /// `points` equispaced samples from `-pi` to `pi` inclusive.
    pub fn sample<F: Fn(f64) -> f64>(points: usize, f: F) -> Self {
        let thetas = theta_grid(points);
        let densities = thetas.iter().map(|&t| f(t)).collect();
        DensityCurve { thetas, densities }
    }

    pub fn trapezoid(&self) -> f64 {
        self.thetas
            .windows(2)
            .zip(self.densities.windows(2))
            .map(|(t, d)| (t[1] - t[0]) * (d[0] + d[1]) / 2.0)
            .sum()
    }
}

/// Equispaced grid from `-pi` to `pi`, endpoints included.
pub fn theta_grid(points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|i| -PI + 2.0 * PI * i as f64 / (points - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{canonical_distribution, StateKind};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(m: u32) -> SineStateParams {
        SineStateParams::new(m).unwrap()
    }

    #[test]
    fn pdf_optimal_at_zero() {
        assert_abs_diff_eq!(pdf_optimal(0.0, 10), 1.53043, epsilon = 1e-4);
        assert_abs_diff_eq!(
            pdf_optimal(0.0, 10),
            fourier_density(&sine_window(10), 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn pdf_optimal_matches_fourier_sum() {
        for n in [1usize, 2, 3, 7, 10, 31] {
            let amps = sine_window(n);
            for t in theta_grid(1001) {
                assert_abs_diff_eq!(pdf_optimal(t, n), fourier_density(&amps, t), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn pdf_optimal_removable_points() {
        let n = 10;
        let edge = PI / 12.0;
        for t in [edge, -edge, edge + 1e-10, edge - 3e-9] {
            let direct = fourier_density(&sine_window(n), t);
            assert_abs_diff_eq!(pdf_optimal(t, n), direct, epsilon = 1e-9);
            assert!(pdf_optimal(t, n).is_finite());
        }
    }

    #[test]
    fn pdf_uniform_examples() {
        assert_abs_diff_eq!(pdf_uniform(0.0, 10), 1.750704, epsilon = 1e-6);
        assert_abs_diff_eq!(pdf_uniform(2.0 * PI / 11.0, 10), 0.0, epsilon = 1e-15);
        let amps = vec![11f64.sqrt().recip(); 11];
        for t in theta_grid(1001) {
            assert_abs_diff_eq!(
                pdf_uniform(t, 10),
                fourier_density(&amps, t),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn densities_normalize() {
        let opt = DensityCurve::sample(2001, |t| pdf_optimal(t, 10));
        let uni = DensityCurve::sample(2001, |t| pdf_uniform(t, 10));
        assert_abs_diff_eq!(opt.trapezoid(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(uni.trapezoid(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn optimal_tail_envelope_below_uniform() {
        // Compare the non-oscillating envelopes of the two closed forms; the
        // uniform density itself has exact zeros in the tails.
        let n = 10.0f64;
        let edge = PI / (n + 2.0);
        for t in theta_grid(2001).into_iter().filter(|t| t.abs() >= PI / 4.0) {
            let env_opt = (edge.sin() / (edge.cos() - t.cos())).powi(2) / (PI * (n + 2.0));
            let env_uni = 1.0 / ((t / 2.0).sin().powi(2) * 2.0 * PI * (n + 1.0));
            assert!(env_opt < env_uni, "theta = {t}");
            assert!(pdf_optimal(t, 10) <= env_opt * (1.0 + 1e-12));
        }
    }

    #[test]
    fn min_variance_examples() {
        assert_abs_diff_eq!(min_holevo_variance(2), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(min_holevo_variance(3), 0.527864, epsilon = 1e-6);
        assert_abs_diff_eq!(min_holevo_variance(10), 0.0717968, epsilon = 1e-7);
    }

    #[test]
    fn sharpness_examples() {
        assert_abs_diff_eq!(
            sharpness_canonical(&[0.371748, 0.601501, 0.601501, 0.371748]),
            0.809017,
            epsilon = 1e-6
        );
        for m in 1..=12u32 {
            let q = p(m);
            let s = sharpness_canonical(&StateKind::Optimal.amplitudes(&q));
            assert_abs_diff_eq!(s, (PI / q.denominator()).cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(
                s.powi(-2) - 1.0,
                min_holevo_variance(q.max_index()),
                epsilon = 1e-12
            );
            let u = sharpness_canonical(&StateKind::Uniform.amplitudes(&q));
            let d = q.dim() as f64;
            assert_abs_diff_eq!(u, (d - 1.0) / d, epsilon = 1e-12);
        }
        let u2 = sharpness_canonical(&StateKind::Uniform.amplitudes(&p(2)));
        assert_abs_diff_eq!(u2.powi(-2) - 1.0, 7.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn sample_stats_edge_cases() {
        assert!(stats_from_samples(&[]).is_err());
        let s = ErrorStats::from_weighted([(1.0, 0.0)]);
        assert_eq!((s.holevo, s.cost_luis), (0.0, 0.0));
        let x = 0.3;
        let s = ErrorStats::from_weighted([(0.5, x), (0.5, -x)]);
        assert_abs_diff_eq!(s.sharpness.re, x.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.sharpness.im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.holevo, s.holevo_unbiased, epsilon = 1e-14);
        let flat = ErrorStats::from_weighted((0..8).map(|k| (0.125, PI * k as f64 / 4.0)));
        assert!(flat.holevo.is_infinite());
    }

    #[test]
    fn distribution_stats() {
        // indicator at the true phase
        let q = p(3);
        let phase = grid_step(&q) * 5.0;
        let d = canonical_distribution(&q, phase, 0.0, StateKind::Uniform);
        let s = stats_from_distribution(&d, phase);
        assert_abs_diff_eq!(s.holevo, 0.0, epsilon = 1e-12);

        let avg = offset_averaged_stats(&q, 0.4, |off| {
            Ok(canonical_distribution(&q, 0.4, off, StateKind::Optimal))
        })
        .unwrap();
        assert_abs_diff_eq!(avg.holevo, 0.132474, epsilon = 1e-6);
        assert_abs_diff_eq!(avg.holevo, (PI / 9.0).tan().powi(2), epsilon = 1e-8);

        let q2 = p(2);
        let avg = offset_averaged_stats(&q2, 1.0, |off| {
            Ok(canonical_distribution(&q2, 1.0, off, StateKind::Uniform))
        })
        .unwrap();
        assert_abs_diff_eq!(avg.holevo, 7.0 / 9.0, epsilon = 1e-8);
    }

    #[test]
    fn stats_json_shape() {
        let s = ErrorStats::from_weighted((0..4).map(|k| (0.25, PI * k as f64 / 2.0)));
        let v = serde_json::to_value(s).unwrap();
        assert_eq!(v["holevo"], "inf");
        assert!(v["sharpness"]["re"].is_number());
    }

    proptest! {
        #[test]
        fn stats_invariants(errs in prop::collection::vec(-PI..PI, 1..200)) {
            let w = 1.0 / errs.len() as f64;
            let s = ErrorStats::from_weighted(errs.iter().map(|&e| (w, e)));
            prop_assert!(s.sharpness.norm() <= 1.0 + 1e-12);
            prop_assert!(s.holevo >= 0.0);
            prop_assert!((0.0..=4.0 + 1e-12).contains(&s.cost_luis));
        }
    }
}
