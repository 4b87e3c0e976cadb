//! Dimensioned scalars and physical constants.
//!
//! Energies are carried in MeV and times in seconds. The only conversion
//! between the two happens through [`PhysicalConstants`], whose `ħ` is in
//! MeV·s. Setting `ħ = E_p = k = 1` gives a scale-free mode in which the
//! same formulas run on order-one numbers.

use std::fmt;
use std::ops::{Add, Sub};

use crate::error::{Error, Result};

/// Reduced Planck constant, MeV·s (CODATA 2018).
pub const HBAR_MEV_S: f64 = 6.582119569e-22;

/// Planck energy, MeV.
pub const PLANCK_ENERGY_MEV: f64 = 1.220890e22;

/// An energy in MeV.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Energy(f64);

impl Energy {
    pub const ZERO: Energy = Energy(0.0);

    /// Wraps a finite value in MeV. Negative values are allowed so that
    /// signed differences can be formed; rest energies are checked with
    /// [`Energy::rest`].
    pub fn mev(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::validation("energy", format!("{value} MeV is not finite")));
        }
        Ok(Energy(value))
    }

    /// A non-negative rest energy.
    pub fn rest(value: f64) -> Result<Self> {
        let e = Energy::mev(value)?;
        if value < 0.0 {
            return Err(Error::validation("rest energy", format!("{value} MeV is negative")));
        }
        Ok(e)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn abs(self) -> Energy {
        Energy(self.0.abs())
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl Sub for Energy {
    type Output = Energy;
    fn sub(self, rhs: Energy) -> Energy {
        Energy(self.0 - rhs.0)
    }
}

impl std::iter::Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        Energy(iter.map(|e| e.0).sum())
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} MeV", self.0)
    }
}

/// A non-negative time span in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Duration(f64);

impl Duration {
    pub const ZERO: Duration = Duration(0.0);

    pub fn seconds(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::validation(
                "duration",
                format!("{value} s must be finite and non-negative"),
            ));
        }
        Ok(Duration(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} s", self.0)
    }
}

/// `ħ` (MeV·s), the Planck energy `E_p` (MeV) and the dimensionless
/// collapse constant `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    hbar: f64,
    planck_energy: f64,
    k: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, planck_energy: f64, k: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("planck_energy", planck_energy), ("k", k)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::validation(
                    "physical constants",
                    format!("{name} = {v} must be finite and positive"),
                ));
            }
        }
        Ok(Self {
            hbar,
            planck_energy,
            k,
        })
    }

    /// `ħ = E_p = k = 1`.
    pub fn dimensionless() -> Self {
        Self {
            hbar: 1.0,
            planck_energy: 1.0,
            k: 1.0,
        }
    }

    /// Same `ħ` and `E_p`, different collapse constant.
    pub fn with_k(self, k: f64) -> Result<Self> {
        Self::new(self.hbar, self.planck_energy, k)
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn planck_energy(&self) -> f64 {
        self.planck_energy
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `ħ·E_p` in MeV²·s.
    pub fn hbar_times_planck_energy(&self) -> f64 {
        self.hbar * self.planck_energy
    }

    /// `k·ħ·E_p` in MeV²·s: the numerator of the collapse time.
    pub fn collapse_scale(&self) -> f64 {
        self.k * self.hbar * self.planck_energy
    }

    pub fn is_dimensionless(&self) -> bool {
        self.hbar == 1.0 && self.planck_energy == 1.0
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: HBAR_MEV_S,
            planck_energy: PLANCK_ENERGY_MEV,
            k: 1.0,
        }
    }
}
