use super::EnsembleStats;
use crate::state::NLevelState;

/// Fraction of trajectories that must be decided before z-scores are given.
pub const MIN_DECIDED_FRACTION: f64 = 0.99;

/// Below this many expected outcomes on either side, the normal
/// approximation behind the z-score is unreliable.
const LOW_POWER_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelFrequency {
    pub level: usize,
    pub frequency: f64,
    pub expected: f64,
    /// `(freq − p)/√(p(1 − p)/N)`; `None` when too few trajectories were
    /// decided. For `p ∈ {0, 1}` it is 0 on an exact match and infinite
    /// otherwise.
    pub z: Option<f64>,
}

/// Outcome frequencies against the initial populations.
#[derive(Debug, Clone, PartialEq)]
pub struct BornReport {
    pub levels: Vec<LevelFrequency>,
    pub n_trajectories: usize,
    pub undecided: u64,
    pub low_power: bool,
}

impl BornReport {
    pub fn max_abs_z(&self) -> Option<f64> {
        self.levels
            .iter()
            .map(|l| l.z.map(f64::abs))
            .try_fold(0.0f64, |m, z| z.map(|z| m.max(z)))
    }
}

pub fn born_rule_check(stats: &EnsembleStats, state0: &NLevelState) -> BornReport {
    let n = stats.n_trajectories as f64;
    let undecided = stats.undecided();
    let decided_enough = (n - undecided as f64) >= MIN_DECIDED_FRACTION * n;
    let mut low_power = false;
    let levels = state0
        .populations()
        .into_iter()
        .zip(&stats.outcome_counts)
        .enumerate()
        .map(|(level, (p, &count))| {
            let frequency = count as f64 / n;
            let spread = p * (1.0 - p);
            if spread > 0.0 && n * p.min(1.0 - p) < LOW_POWER_EXPECTED {
                low_power = true;
            }
            let z = decided_enough.then(|| {
                if spread > 0.0 {
                    (frequency - p) / (spread / n).sqrt()
                } else if frequency == p {
                    0.0
                } else {
                    f64::INFINITY.copysign(frequency - p)
                }
            });
            LevelFrequency {
                level,
                frequency,
                expected: p,
                z,
            }
        })
        .collect();
    BornReport {
        levels,
        n_trajectories: stats.n_trajectories,
        undecided,
        low_power,
    }
}
