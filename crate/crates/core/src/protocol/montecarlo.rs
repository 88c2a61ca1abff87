//! Monte Carlo driver.
//!
//! Trial `t` draws from its own ChaCha8 stream `t` under the master seed, so
//! every record depends only on `(seed, t)` and never on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{grid_step, MeasurementRecord, ProtocolConfig, Streamer};
use crate::error::{Error, Result};
use crate::par::{try_map_indexed, Execution};

/// Generator for trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `trials` independent runs at `config.phase`. With `config.covariant` each
/// trial draws its own grid offset uniformly from `[0, 2 pi / 2^m)`.
pub fn simulate(
    config: &ProtocolConfig,
    trials: usize,
    exec: Execution,
) -> Result<Vec<MeasurementRecord>> {
    simulate_phases(config, &[config.phase], trials, exec)
}

/// As [`simulate`], with trial `t` using `phases[t % phases.len()]`.
pub fn simulate_phases(
    config: &ProtocolConfig,
    phases: &[f64],
    trials: usize,
    exec: Execution,
) -> Result<Vec<MeasurementRecord>> {
    if trials == 0 {
        return Err(Error::arg("trials must be at least 1"));
    }
    if phases.is_empty() {
        return Err(Error::arg("need at least one phase"));
    }
    let base = Streamer::new(*config)?;
    let step = grid_step(&config.params);
    try_map_indexed(trials, exec, |t| {
        let mut rng = trial_rng(config.seed, t as u64);
        let offset = if config.covariant {
            rng.gen_range(0.0..step)
        } else {
            0.0
        };
        let streamer = base.with_setting(phases[t % phases.len()], config.covariant, offset)?;
        streamer.run(&mut rng)
    })
}
