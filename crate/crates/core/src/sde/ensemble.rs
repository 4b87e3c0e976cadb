//! Ensemble averages over independent trajectories.
//!
//! Trajectories are grouped into fixed blocks of [`ENSEMBLE_BLOCK`]. Each
//! block is summed sequentially in trajectory order and block partials are
//! merged in block order, so the floating-point result does not depend on
//! how many threads ran the blocks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::trajectory::{walk, Sample};
use super::{coupling_gamma, PhaseMode, SdeConfig};
use crate::error::{Error, Result};
use crate::state::{energy_deviations, DensityMatrix};
use crate::units::Duration;

/// Trajectories per reduction block.
pub const ENSEMBLE_BLOCK: usize = 32;

/// Blocks evaluated concurrently before being merged.
const WAVE: usize = 64;

const MEAN_TRACE_TOLERANCE: f64 = 1e-6;

/// Ensemble statistics at one recorded time.
///
/// Coherences are reported in the frame rotating with the level energies,
/// `ρᵢⱼ·exp(i(Eᵢ − Eⱼ)t/ħ)`. In [`PhaseMode::Interaction`] that is the
/// integrated frame itself; in [`PhaseMode::Schrodinger`] it removes the
/// deterministic oscillation, so both modes can be compared directly with
/// the closed-form decay. Populations are frame independent.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSample {
    pub time: Duration,
    pub mean_density: DensityMatrix,
    /// Standard error of each mean population.
    pub population_stderr: Vec<f64>,
    /// Standard errors of the real and imaginary parts of mean `ρ₁₂`.
    pub coherence_stderr: (f64, f64),
    pub mean_energy: f64,
    pub mean_energy_stderr: f64,
    /// Ensemble mean of `⟨H²⟩ − ⟨H⟩²`, MeV².
    pub mean_energy_variance: f64,
    /// Trajectories decided for each level by this time.
    pub decided: Vec<u64>,
}

impl EnsembleSample {
    /// Mean `ρ₁₂` (levels 0 and 1).
    pub fn coherence(&self) -> Complex64 {
        self.mean_density.get(0, 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub samples: Vec<EnsembleSample>,
    /// Final outcome tally per level.
    pub outcome_counts: Vec<u64>,
    pub n_trajectories: usize,
    /// First recorded time at which `|mean ρ₁₂|` is at most `e⁻¹` of its
    /// initial value. `None` if that never happens or the initial
    /// coherence is zero.
    pub measured_collapse_time: Option<Duration>,
    pub phase: PhaseMode,
    pub collapse_threshold: f64,
    pub gamma: f64,
}

impl EnsembleStats {
    pub fn times(&self) -> Vec<Duration> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn undecided(&self) -> u64 {
        self.n_trajectories as u64 - self.outcome_counts.iter().sum::<u64>()
    }
}

/// Running sums for one recorded time.
#[derive(Debug, Clone)]
struct Moments {
    rho: Vec<Complex64>,
    pop_sq: Vec<f64>,
    coh_sq: (f64, f64),
    energy: f64,
    energy_sq: f64,
    variance: f64,
    decided: Vec<u64>,
}

impl Moments {
    fn new(n: usize) -> Self {
        Self {
            rho: vec![Complex64::new(0.0, 0.0); n * n],
            pop_sq: vec![0.0; n],
            coh_sq: (0.0, 0.0),
            energy: 0.0,
            energy_sq: 0.0,
            variance: 0.0,
            decided: vec![0; n],
        }
    }

    fn merge(&mut self, other: &Moments) {
        for (a, b) in self.rho.iter_mut().zip(&other.rho) {
            *a += b;
        }
        for (a, b) in self.pop_sq.iter_mut().zip(&other.pop_sq) {
            *a += b;
        }
        self.coh_sq.0 += other.coh_sq.0;
        self.coh_sq.1 += other.coh_sq.1;
        self.energy += other.energy;
        self.energy_sq += other.energy_sq;
        self.variance += other.variance;
        for (a, b) in self.decided.iter_mut().zip(&other.decided) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone)]
struct Partial {
    moments: Vec<Moments>,
    outcomes: Vec<u64>,
}

impl Partial {
    fn new(records: usize, n: usize) -> Self {
        Self {
            moments: vec![Moments::new(n); records],
            outcomes: vec![0; n],
        }
    }

    fn merge(&mut self, other: &Partial) {
        for (a, b) in self.moments.iter_mut().zip(&other.moments) {
            a.merge(b);
        }
        for (a, b) in self.outcomes.iter_mut().zip(&other.outcomes) {
            *a += b;
        }
    }
}

struct Accumulator<'a> {
    config: &'a SdeConfig,
    energies: Vec<f64>,
    /// `Eᵢ/ħ`, for undoing the deterministic phase.
    frequencies: Option<Vec<f64>>,
    populations: Vec<f64>,
    rotated: Vec<Complex64>,
}

impl<'a> Accumulator<'a> {
    fn new(config: &'a SdeConfig) -> Self {
        let energies = config.energy_values();
        let frequencies = match config.phase() {
            PhaseMode::Schrodinger => {
                Some(energies.iter().map(|e| e / config.constants().hbar()).collect())
            }
            PhaseMode::Interaction => None,
        };
        let n = energies.len();
        Self {
            config,
            energies,
            frequencies,
            populations: vec![0.0; n],
            rotated: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    fn add(&mut self, into: &mut Moments, sample: &Sample<'_>) {
        let n = self.energies.len();
        let t = self.config.time_of_step(sample.step);
        for i in 0..n {
            let a = sample.amplitudes[i];
            self.rotated[i] = match &self.frequencies {
                Some(w) => a * Complex64::from_polar(1.0, w[i] * t),
                None => a,
            };
            self.populations[i] = a.norm_sqr();
        }
        for i in 0..n {
            for j in 0..n {
                into.rho[i * n + j] += self.rotated[i] * self.rotated[j].conj();
            }
            into.pop_sq[i] += self.populations[i] * self.populations[i];
        }
        let c = self.rotated[0] * self.rotated[1].conj();
        into.coh_sq.0 += c.re * c.re;
        into.coh_sq.1 += c.im * c.im;

        let mean: f64 = self.populations.iter().zip(&self.energies).map(|(p, e)| p * e).sum();
        into.energy += mean;
        into.energy_sq += mean * mean;
        into.variance += energy_deviations(&self.populations, &self.energies)
            .iter()
            .zip(&self.populations)
            .map(|(d, p)| p * d * d)
            .sum::<f64>();
        if let Some(level) = sample.outcome {
            into.decided[level] += 1;
        }
    }
}

fn run_block(config: &SdeConfig, block: usize) -> std::result::Result<Partial, Vec<(usize, Error)>> {
    let n = config.state0().dim();
    let records = config.record_steps().len();
    let mut partial = Partial::new(records, n);
    let mut acc = Accumulator::new(config);
    let mut failures = Vec::new();
    let start = block * ENSEMBLE_BLOCK;
    let end = (start + ENSEMBLE_BLOCK).min(config.n_trajectories());
    for index in start..end {
        // a failed trajectory leaves partial sums behind, but then the
        // whole ensemble is reported as failed
        let moments = &mut partial.moments;
        match walk(config, index, |s| acc.add(&mut moments[s.record], &s)) {
            Ok(Some((level, _))) => partial.outcomes[level] += 1,
            Ok(None) => {}
            Err(e) => failures.push((index, e)),
        }
    }
    if failures.is_empty() {
        Ok(partial)
    } else {
        Err(failures)
    }
}

fn stderr(sum: f64, sum_sq: f64, n: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
    (var / n).sqrt()
}

/// Runs every trajectory of `config` and averages them. Uses the current
/// rayon thread pool; the result is bit-identical for any pool size.
pub fn run_ensemble(config: &SdeConfig) -> Result<EnsembleStats> {
    // reject unusable configs before spawning work
    config.stepper()?;
    let n = config.state0().dim();
    let records = config.record_steps();
    let n_blocks = config.n_trajectories().div_ceil(ENSEMBLE_BLOCK);

    let mut total = Partial::new(records.len(), n);
    let mut failures: Vec<(usize, Error)> = Vec::new();
    let blocks: Vec<usize> = (0..n_blocks).collect();
    for wave in blocks.chunks(WAVE) {
        let partials: Vec<_> = wave.par_iter().map(|&b| run_block(config, b)).collect();
        for p in partials {
            match p {
                Ok(p) => total.merge(&p),
                Err(mut f) => failures.append(&mut f),
            }
        }
    }
    if !failures.is_empty() {
        failures.sort_by_key(|(i, _)| *i);
        let first = Box::new(failures[0].1.clone());
        return Err(Error::EnsembleFailure {
            failed: failures.into_iter().map(|(i, _)| i).collect(),
            first,
        });
    }

    let count = config.n_trajectories() as f64;
    let mut samples = Vec::with_capacity(records.len());
    for (m, &step) in total.moments.iter().zip(&records) {
        let entries = DMatrix::from_fn(n, n, |i, j| m.rho[i * n + j] / count);
        let mean_density = DensityMatrix::with_tolerance(entries, MEAN_TRACE_TOLERANCE)?;
        let population_stderr = (0..n)
            .map(|i| stderr(m.rho[i * n + i].re, m.pop_sq[i], count))
            .collect();
        let c = m.rho[1];
        samples.push(EnsembleSample {
            time: Duration::seconds(config.time_of_step(step))?,
            mean_density,
            population_stderr,
            coherence_stderr: (stderr(c.re, m.coh_sq.0, count), stderr(c.im, m.coh_sq.1, count)),
            mean_energy: m.energy / count,
            mean_energy_stderr: stderr(m.energy, m.energy_sq, count),
            mean_energy_variance: m.variance / count,
            decided: m.decided.clone(),
        });
    }

    let measured_collapse_time = measure_collapse_time(&samples);
    Ok(EnsembleStats {
        samples,
        outcome_counts: total.outcomes,
        n_trajectories: config.n_trajectories(),
        measured_collapse_time,
        phase: config.phase(),
        collapse_threshold: config.collapse_threshold(),
        gamma: coupling_gamma(config.constants()),
    })
}

fn measure_collapse_time(samples: &[EnsembleSample]) -> Option<Duration> {
    let initial = samples.first()?.coherence().norm();
    if initial == 0.0 {
        return None;
    }
    let target = (-1.0f64).exp() * initial;
    samples
        .iter()
        .find(|s| s.coherence().norm() <= target)
        .map(|s| s.time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::NLevelState;
    use crate::units::{Energy, PhysicalConstants};

    fn config(alpha: f64, de: f64, n: usize, t_max: f64) -> SdeConfig {
        let s = NLevelState::two_level(alpha, Energy::ZERO, Energy::mev(de).unwrap()).unwrap();
        SdeConfig::new(
            s,
            PhysicalConstants::dimensionless(),
            Duration::seconds(1e-3).unwrap(),
            Duration::seconds(t_max).unwrap(),
            n,
            5,
        )
        .unwrap()
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let cfg = config(0.4, 1.0, 150, 0.5).with_record_stride(25).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&cfg).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
    }

    #[test]
    fn phase_mode_does_not_change_reported_statistics() {
        let cfg = config(0.3, 1.0, 64, 1.0).with_record_stride(50).unwrap();
        let a = run_ensemble(&cfg.clone().with_phase(PhaseMode::Schrodinger)).unwrap();
        let b = run_ensemble(&cfg.with_phase(PhaseMode::Interaction)).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            let d = (x.mean_density.entries() - y.mean_density.entries()).norm();
            assert!(d < 1e-10, "{d}");
        }
        assert_eq!(a.outcome_counts, b.outcome_counts);
    }

    #[test]
    fn eigenstate_ensemble_is_decided_immediately() {
        let stats = run_ensemble(&config(1.0, 1.0, 40, 0.2)).unwrap();
        assert_eq!(stats.outcome_counts, vec![40, 0]);
        assert_eq!(stats.samples[0].decided, vec![40, 0]);
        assert_eq!(stats.measured_collapse_time, None);
    }

    #[test]
    fn degenerate_levels_never_collapse() {
        let stats = run_ensemble(&config(0.5, 0.0, 40, 2.0).with_record_stride(100).unwrap()).unwrap();
        assert_eq!(stats.outcome_counts, vec![0, 0]);
        for s in &stats.samples {
            assert_eq!(s.coherence().re, stats.samples[0].coherence().re);
        }
        assert_eq!(stats.measured_collapse_time, None);
    }

    #[test]
    fn mean_trace_and_tallies() {
        let stats = run_ensemble(&config(0.5, 1.0, 70, 4.0).with_record_stride(200).unwrap()).unwrap();
        for s in &stats.samples {
            assert!((s.mean_density.trace().re - 1.0).abs() < 1e-6);
            assert!(s.decided.iter().sum::<u64>() <= 70);
        }
        assert!(stats.outcome_counts.iter().sum::<u64>() <= 70);
        assert_eq!(stats.samples.last().unwrap().decided, stats.outcome_counts);
    }
}
