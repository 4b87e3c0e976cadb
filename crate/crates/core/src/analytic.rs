//! Closed-form two-level decoherence under energy-driven collapse.
//!
//! With `τ = ΔE²·t / (k·ħ·E_p)` the populations stay fixed while the
//! coherence decays. To first order the off-diagonal factor is `1 − τ`;
//! the full curve used throughout the crate is `exp(−τ)`, which agrees to
//! `O(τ²)`. The collapse time `t_c = k·ħ·E_p / ΔE²` is where `τ = 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::DensityMatrix;
use crate::units::{Duration, Energy, PhysicalConstants};

/// Largest `τ` accepted by [`density_matrix_short_time`].
pub const LINEAR_VALIDITY_LIMIT: f64 = 0.5;

/// Result of a collapse-time calculation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollapseTime {
    /// A zero energy difference never collapses.
    NoCollapse,
    Finite(Duration),
}

impl CollapseTime {
    pub fn seconds(&self) -> Option<f64> {
        match self {
            CollapseTime::NoCollapse => None,
            CollapseTime::Finite(d) => Some(d.value()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapsePrediction {
    pub collapse_time: CollapseTime,
    pub delta_e_total: Energy,
    pub k_used: f64,
}

/// `t_c = k·ħ·E_p / ΔE²`.
pub fn collapse_time(delta_e: Energy, constants: &PhysicalConstants) -> Result<CollapsePrediction> {
    let de = checked_delta_e(delta_e)?;
    let collapse_time = if de == 0.0 {
        CollapseTime::NoCollapse
    } else {
        let t = constants.collapse_scale() / (de * de);
        CollapseTime::Finite(Duration::seconds(t).map_err(|_| {
            Error::validation("energy difference", format!("{de} MeV gives a collapse time of {t} s"))
        })?)
    };
    Ok(CollapsePrediction {
        collapse_time,
        delta_e_total: delta_e,
        k_used: constants.k(),
    })
}

/// Dimensionless elapsed collapse time `τ = ΔE²·t / (k·ħ·E_p)`.
pub fn collapse_progress(delta_e: Energy, t: Duration, constants: &PhysicalConstants) -> Result<f64> {
    let de = checked_delta_e(delta_e)?;
    Ok(de * de / constants.collapse_scale() * t.value())
}

/// `exp(−τ)`; identically 1 when `ΔE = 0`.
pub fn decoherence_factor(delta_e: Energy, t: Duration, constants: &PhysicalConstants) -> Result<f64> {
    Ok((-collapse_progress(delta_e, t, constants)?).exp())
}

/// The first-order factor `1 − τ`.
pub fn linear_decoherence_factor(delta_e: Energy, t: Duration, constants: &PhysicalConstants) -> Result<f64> {
    Ok(1.0 - collapse_progress(delta_e, t, constants)?)
}

fn checked_delta_e(delta_e: Energy) -> Result<f64> {
    let de = delta_e.value();
    if !de.is_finite() || de < 0.0 {
        return Err(Error::validation(
            "energy difference",
            format!("{de} MeV must be finite and non-negative"),
        ));
    }
    Ok(de)
}

/// Initial populations, level splitting and constants of a two-level system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelSpec {
    alpha0: f64,
    beta0: f64,
    delta_e: Energy,
    constants: PhysicalConstants,
}

impl TwoLevelSpec {
    pub fn new(alpha0: f64, beta0: f64, delta_e: Energy, constants: PhysicalConstants) -> Result<Self> {
        for (name, p) in [("alpha0", alpha0), ("beta0", beta0)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation("two-level spec", format!("{name} = {p} is not in [0, 1]")));
            }
        }
        if (alpha0 + beta0 - 1.0).abs() > 1e-12 {
            return Err(Error::validation(
                "two-level spec",
                format!("alpha0 + beta0 = {} must equal 1", alpha0 + beta0),
            ));
        }
        checked_delta_e(delta_e)?;
        Ok(Self {
            alpha0,
            beta0,
            delta_e,
            constants,
        })
    }

    /// `β(0) = 1 − α(0)`.
    pub fn from_alpha(alpha0: f64, delta_e: Energy, constants: PhysicalConstants) -> Result<Self> {
        Self::new(alpha0, 1.0 - alpha0, delta_e, constants)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn delta_e(&self) -> Energy {
        self.delta_e
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    /// `√(α(0)·β(0))`, the initial coherence.
    pub fn initial_coherence(&self) -> f64 {
        (self.alpha0 * self.beta0).sqrt()
    }

    fn matrix(&self, factor: f64) -> Result<DensityMatrix> {
        let off = Complex64::new(factor * self.initial_coherence(), 0.0);
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(self.alpha0, 0.0),
                off,
                off.conj(),
                Complex64::new(self.beta0, 0.0),
            ],
        );
        DensityMatrix::from_entries(m)
    }
}

/// First-order density matrix: populations fixed, coherence scaled by
/// `1 − τ`. Refuses `τ > 0.5`.
pub fn density_matrix_short_time(spec: &TwoLevelSpec, t: Duration) -> Result<DensityMatrix> {
    let tau = collapse_progress(spec.delta_e, t, &spec.constants)?;
    if tau > LINEAR_VALIDITY_LIMIT {
        return Err(Error::OutOfValidity {
            tau,
            limit: LINEAR_VALIDITY_LIMIT,
        });
    }
    spec.matrix(1.0 - tau)
}

/// Density matrix at any `t ≥ 0` with the coherence scaled by `exp(−τ)`.
pub fn density_matrix_mean(spec: &TwoLevelSpec, t: Duration) -> Result<DensityMatrix> {
    spec.matrix(decoherence_factor(spec.delta_e, t, &spec.constants)?)
}
