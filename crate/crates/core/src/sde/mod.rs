//! Monte Carlo integration of the energy-driven stochastic Schrödinger
//! equation
//!
//! ```text
//! d|ψ⟩ = [ −(i/ħ) H dt − (γ/2)(H − ⟨H⟩)² dt + √γ (H − ⟨H⟩) dW ] |ψ⟩
//! ```
//!
//! with a diagonal `H`. The ensemble mean `E[|ψ⟩⟨ψ|]` obeys the
//! double-commutator master equation `dρ/dt = −(i/ħ)[H, ρ] − (γ/2)[H, [H, ρ]]`,
//! so populations are martingales and the coherence between levels `i` and
//! `j` decays at `(γ/2)(Eᵢ − Eⱼ)²`. [`coupling_gamma`] fixes `γ` so that this
//! rate equals `ΔE²/(k·ħ·E_p)`.
//!
//! Integration is Euler–Maruyama with explicit renormalization after every
//! step. Because `H` and `H − ⟨H⟩` are both diagonal they commute, and the
//! unitary part is applied as the exact factor `exp(−iEᵢ dt/ħ)`.

mod born;
mod ensemble;
mod noise;
mod trajectory;

pub use born::{born_rule_check, BornReport, LevelFrequency};
pub use ensemble::{run_ensemble, EnsembleSample, EnsembleStats, ENSEMBLE_BLOCK};
pub use noise::NoiseStream;
pub use trajectory::{run_trajectory, TrajectoryRecord};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{energy_deviations, normalize, NLevelState};
use crate::units::{Duration, PhysicalConstants};

/// Upper bound on `γ·(E_max − E_min)²·dt`.
pub const STABILITY_LIMIT: f64 = 0.1;

/// Population above which a trajectory is declared collapsed.
pub const DEFAULT_COLLAPSE_THRESHOLD: f64 = 1.0 - 1e-4;

/// `γ = 2/(k·ħ·E_p)` in MeV⁻²·s⁻¹.
pub fn coupling_gamma(constants: &PhysicalConstants) -> f64 {
    2.0 / constants.collapse_scale()
}

/// Whether the deterministic `−(i/ħ)H dt` term is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// Full equation, phases included.
    Schrodinger,
    /// Unitary term dropped. Populations and `|ρᵢⱼ|` are unaffected.
    Interaction,
}

impl PhaseMode {
    /// Phases on in dimensionless mode, off in physical units, where
    /// `E/ħ` is of order 10²¹ rad/s.
    pub fn default_for(constants: &PhysicalConstants) -> Self {
        if constants.is_dimensionless() {
            PhaseMode::Schrodinger
        } else {
            PhaseMode::Interaction
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseMode::Schrodinger => "schrodinger",
            PhaseMode::Interaction => "interaction",
        }
    }
}

/// Checks `γ·(E_max − E_min)²·dt ≤ STABILITY_LIMIT`.
pub fn check_stability(energies: &[f64], constants: &PhysicalConstants, dt: f64) -> Result<()> {
    let (lo, hi) = energies
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let spread = hi - lo;
    let stiffness = coupling_gamma(constants) * spread * spread * dt;
    if !(stiffness <= STABILITY_LIMIT) {
        return Err(Error::validation(
            "step size",
            format!("gamma * (E_max - E_min)^2 * dt = {stiffness} exceeds {STABILITY_LIMIT}"),
        ));
    }
    Ok(())
}

/// The per-step update for a fixed set of levels and step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    energies: Vec<f64>,
    dt: f64,
    half_gamma_dt: f64,
    sqrt_gamma: f64,
    phases: Option<Vec<Complex64>>,
    populations: Vec<f64>,
}

impl Stepper {
    pub fn new(energies: &[f64], constants: &PhysicalConstants, dt: f64, phase: PhaseMode) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::validation("step size", format!("dt = {dt} must be positive")));
        }
        check_stability(energies, constants, dt)?;
        let gamma = coupling_gamma(constants);
        let phases = match phase {
            PhaseMode::Schrodinger => Some(
                energies
                    .iter()
                    .map(|e| Complex64::from_polar(1.0, -e * dt / constants.hbar()))
                    .collect(),
            ),
            PhaseMode::Interaction => None,
        };
        Ok(Self {
            energies: energies.to_vec(),
            dt,
            half_gamma_dt: 0.5 * gamma * dt,
            sqrt_gamma: gamma.sqrt(),
            phases,
            populations: vec![0.0; energies.len()],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn factors(&mut self, amplitudes: &[Complex64], dw: f64) -> Vec<f64> {
        for (p, a) in self.populations.iter_mut().zip(amplitudes) {
            *p = a.norm_sqr();
        }
        energy_deviations(&self.populations, &self.energies)
            .into_iter()
            .map(|d| 1.0 - self.half_gamma_dt * d * d + self.sqrt_gamma * d * dw)
            .collect()
    }

    /// Advances `amplitudes` by one step driven by the Wiener increment
    /// `dw`. Returns false if the result is not finite or vanishes; the
    /// amplitudes are then left in an unspecified state.
    pub fn advance(&mut self, amplitudes: &mut [Complex64], dw: f64) -> bool {
        let f = self.factors(amplitudes, dw);
        match &self.phases {
            Some(ph) => {
                for ((a, f), ph) in amplitudes.iter_mut().zip(&f).zip(ph) {
                    *a *= ph * f;
                }
            }
            None => {
                for (a, f) in amplitudes.iter_mut().zip(&f) {
                    *a *= f;
                }
            }
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return false;
        }
        normalize(amplitudes)
    }

    /// Squared norm of the Euler update before renormalization.
    pub fn unnormalized_norm_sqr(&mut self, amplitudes: &[Complex64], dw: f64) -> f64 {
        self.factors(amplitudes, dw)
            .iter()
            .zip(amplitudes)
            .map(|(f, a)| f * f * a.norm_sqr())
            .sum()
    }
}

/// One Euler–Maruyama step of a state with Wiener increment `dw`.
pub fn step(
    state: &NLevelState,
    constants: &PhysicalConstants,
    dt: Duration,
    dw: f64,
    phase: PhaseMode,
) -> Result<NLevelState> {
    let energies: Vec<f64> = state.energies().iter().map(|e| e.value()).collect();
    let mut stepper = Stepper::new(&energies, constants, dt.value(), phase)?;
    let mut amps = state.amplitudes().to_vec();
    if !dw.is_finite() || !stepper.advance(&mut amps, dw) {
        return Err(Error::NumericFailure {
            step: 0,
            trajectory: None,
        });
    }
    Ok(NLevelState::from_parts(amps, state.energies().to_vec()))
}

/// Parameters of an ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeConfig {
    state0: NLevelState,
    constants: PhysicalConstants,
    dt: Duration,
    t_max: Duration,
    n_trajectories: usize,
    seed: u64,
    record_stride: usize,
    phase: PhaseMode,
    collapse_threshold: f64,
}

impl SdeConfig {
    /// Record stride 1, default phase mode and collapse threshold.
    pub fn new(
        state0: NLevelState,
        constants: PhysicalConstants,
        dt: Duration,
        t_max: Duration,
        n_trajectories: usize,
        seed: u64,
    ) -> Result<Self> {
        if dt.value() <= 0.0 {
            return Err(Error::validation("sde config", "dt must be positive"));
        }
        if t_max.value() < dt.value() {
            return Err(Error::validation("sde config", format!("t_max = {t_max} is shorter than dt = {dt}")));
        }
        if n_trajectories == 0 {
            return Err(Error::validation("sde config", "at least one trajectory is required"));
        }
        let energies: Vec<f64> = state0.energies().iter().map(|e| e.value()).collect();
        check_stability(&energies, &constants, dt.value())?;
        let phase = PhaseMode::default_for(&constants);
        Ok(Self {
            state0,
            constants,
            dt,
            t_max,
            n_trajectories,
            seed,
            record_stride: 1,
            phase,
            collapse_threshold: DEFAULT_COLLAPSE_THRESHOLD,
        })
    }

    pub fn with_record_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::validation("sde config", "record stride must be positive"));
        }
        self.record_stride = stride;
        Ok(self)
    }

    pub fn with_phase(mut self, phase: PhaseMode) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_collapse_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.5 && threshold <= 1.0) {
            return Err(Error::validation(
                "sde config",
                format!("collapse threshold {threshold} must lie in (0.5, 1]"),
            ));
        }
        self.collapse_threshold = threshold;
        Ok(self)
    }

    pub fn state0(&self) -> &NLevelState {
        &self.state0
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn dt(&self) -> Duration {
        self.dt
    }

    pub fn t_max(&self) -> Duration {
        self.t_max
    }

    pub fn n_trajectories(&self) -> usize {
        self.n_trajectories
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn record_stride(&self) -> usize {
        self.record_stride
    }

    pub fn phase(&self) -> PhaseMode {
        self.phase
    }

    pub fn collapse_threshold(&self) -> f64 {
        self.collapse_threshold
    }

    /// Number of steps: `t_max/dt` rounded up, ignoring rounding noise.
    pub fn n_steps(&self) -> usize {
        let ratio = self.t_max.value() / self.dt.value();
        let n = (ratio - 1e-9 * ratio.max(1.0)).ceil();
        (n as usize).max(1)
    }

    /// Step indices at which samples are recorded: every stride-th step
    /// plus the final one.
    pub fn record_steps(&self) -> Vec<usize> {
        let n = self.n_steps();
        let mut steps: Vec<usize> = (0..=n).step_by(self.record_stride).collect();
        if *steps.last().unwrap() != n {
            steps.push(n);
        }
        steps
    }

    pub fn time_of_step(&self, step: usize) -> f64 {
        step as f64 * self.dt.value()
    }

    pub(crate) fn energy_values(&self) -> Vec<f64> {
        self.state0.energies().iter().map(|e| e.value()).collect()
    }

    pub(crate) fn stepper(&self) -> Result<Stepper> {
        Stepper::new(&self.energy_values(), &self.constants, self.dt.value(), self.phase)
    }
}
