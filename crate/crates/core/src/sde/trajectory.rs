use num_complex::Complex64;

use super::noise::NoiseStream;
use super::SdeConfig;
use crate::error::{Error, Result};
use crate::state::NLevelState;
use crate::units::Duration;

/// Sampled path of a single trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<Duration>,
    pub states: Vec<NLevelState>,
    /// Level (0-based) whose population first crossed the collapse
    /// threshold; `None` while undecided.
    pub outcome: Option<usize>,
    pub outcome_time: Option<Duration>,
}

/// What a walk hands to its observer at each recorded step.
pub(crate) struct Sample<'a> {
    pub record: usize,
    pub step: usize,
    pub amplitudes: &'a [Complex64],
    pub outcome: Option<usize>,
}

/// Level whose population is at or above `threshold`, if any.
fn decided_level(amplitudes: &[Complex64], threshold: f64) -> Option<usize> {
    amplitudes.iter().position(|a| a.norm_sqr() >= threshold)
}

/// Integrates trajectory `index` from t = 0 to the last step, calling
/// `observe` at every recorded step. Returns the outcome and the step at
/// which it was reached.
pub(crate) fn walk(
    config: &SdeConfig,
    index: usize,
    mut observe: impl FnMut(Sample<'_>),
) -> Result<Option<(usize, usize)>> {
    let mut stepper = config.stepper()?;
    let mut noise = NoiseStream::new(config.seed(), index as u64);
    let dt = config.dt().value();
    let threshold = config.collapse_threshold();
    let records = config.record_steps();
    let n_steps = config.n_steps();

    let mut amps = config.state0().amplitudes().to_vec();
    let mut outcome = decided_level(&amps, threshold).map(|level| (level, 0));
    let mut next_record = 0;

    for step in 0..=n_steps {
        if step > 0 {
            let dw = noise.increment(dt);
            if !stepper.advance(&mut amps, dw) {
                return Err(Error::NumericFailure {
                    step,
                    trajectory: Some(index),
                });
            }
            if outcome.is_none() {
                outcome = decided_level(&amps, threshold).map(|level| (level, step));
            }
        }
        if records.get(next_record) == Some(&step) {
            observe(Sample {
                record: next_record,
                step,
                amplitudes: &amps,
                outcome: outcome.map(|(level, _)| level),
            });
            next_record += 1;
        }
    }
    Ok(outcome)
}

/// Runs one trajectory. The noise stream depends only on
/// `(config.seed(), index)`, so a trajectory is reproducible on its own.
pub fn run_trajectory(config: &SdeConfig, index: usize) -> Result<TrajectoryRecord> {
    let energies = config.state0().energies().to_vec();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let outcome = walk(config, index, |s| {
        times.push(Duration::seconds(config.time_of_step(s.step)).unwrap_or(Duration::ZERO));
        states.push(NLevelState::from_parts(s.amplitudes.to_vec(), energies.clone()));
    })?;
    Ok(TrajectoryRecord {
        times,
        states,
        outcome: outcome.map(|(level, _)| level),
        outcome_time: outcome
            .map(|(_, step)| Duration::seconds(config.time_of_step(step)).unwrap_or(Duration::ZERO)),
    })
}
