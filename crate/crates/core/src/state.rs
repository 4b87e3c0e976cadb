//! Pure states in the energy eigenbasis and density matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::Energy;

/// Tolerance on unit norm, Hermiticity and unit trace.
pub const STATE_TOLERANCE: f64 = 1e-12;

/// A normalized amplitude vector over levels of a diagonal Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct NLevelState {
    amplitudes: Vec<Complex64>,
    energies: Vec<Energy>,
}

impl NLevelState {
    /// Builds a state, rescaling the amplitudes to unit norm. Relative
    /// phases are kept as given.
    pub fn new(amplitudes: Vec<Complex64>, energies: Vec<Energy>) -> Result<Self> {
        if amplitudes.len() != energies.len() {
            return Err(Error::validation(
                "state",
                format!(
                    "{} amplitudes but {} energies",
                    amplitudes.len(),
                    energies.len()
                ),
            ));
        }
        if amplitudes.len() < 2 {
            return Err(Error::validation("state", "at least two levels are required"));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::validation("state", "amplitudes must be finite"));
        }
        if energies.iter().any(|e| !e.value().is_finite()) {
            return Err(Error::validation("state", "energies must be finite"));
        }
        let mut amplitudes = amplitudes;
        if !normalize(&mut amplitudes) {
            return Err(Error::validation("state", "all amplitudes are zero"));
        }
        Ok(Self {
            amplitudes,
            energies,
        })
    }

    /// Two-level state `√α|1⟩ + √(1−α)|2⟩` with real amplitudes.
    pub fn two_level(alpha: f64, e1: Energy, e2: Energy) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::validation("state", format!("alpha = {alpha} is not a probability")));
        }
        Self::new(
            vec![
                Complex64::new(alpha.sqrt(), 0.0),
                Complex64::new((1.0 - alpha).sqrt(), 0.0),
            ],
            vec![e1, e2],
        )
    }

    /// Rebuilds a state from amplitudes already known to be finite and
    /// nonzero; only the norm is restored.
    pub(crate) fn from_parts(mut amplitudes: Vec<Complex64>, energies: Vec<Energy>) -> Self {
        normalize(&mut amplitudes);
        Self {
            amplitudes,
            energies,
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn energies(&self) -> &[Energy] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> DensityMatrix {
        let n = self.dim();
        let a = &self.amplitudes;
        DensityMatrix {
            entries: DMatrix::from_fn(n, n, |i, j| a[i] * a[j].conj()),
        }
    }

    /// `⟨H⟩ = Σ |aᵢ|² Eᵢ`.
    pub fn mean_energy(&self) -> Energy {
        let e = self
            .amplitudes
            .iter()
            .zip(&self.energies)
            .map(|(a, e)| a.norm_sqr() * e.value())
            .sum();
        Energy::mev(e).unwrap_or(Energy::ZERO)
    }

    /// `⟨H²⟩ − ⟨H⟩²` in MeV², computed as `Σ pᵢ (Eᵢ − ⟨H⟩)²`.
    pub fn energy_variance(&self) -> f64 {
        let p = self.populations();
        let e: Vec<f64> = self.energies.iter().map(|e| e.value()).collect();
        energy_deviations(&p, &e)
            .iter()
            .zip(&p)
            .map(|(d, p)| p * d * d)
            .sum()
    }
}

/// `Eᵢ − ⟨H⟩` for every level, written as `Σⱼ pⱼ (Eᵢ − Eⱼ) / Σⱼ pⱼ` so that
/// levels sharing an energy get an exact zero relative to each other.
pub(crate) fn energy_deviations(populations: &[f64], energies: &[f64]) -> Vec<f64> {
    let total: f64 = populations.iter().sum();
    energies
        .iter()
        .map(|ei| {
            populations
                .iter()
                .zip(energies)
                .map(|(pj, ej)| pj * (ei - ej))
                .sum::<f64>()
                / total
        })
        .collect()
}

/// Scales to unit norm; false if the vector is zero or the norm overflows.
pub(crate) fn normalize(amplitudes: &mut [Complex64]) -> bool {
    let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if norm_sq == 0.0 || !norm_sq.is_finite() {
        return false;
    }
    if (norm_sq - 1.0).abs() > 4.0 * f64::EPSILON {
        let inv = norm_sq.sqrt().recip();
        for a in amplitudes.iter_mut() {
            *a *= inv;
        }
    }
    true
}

/// A Hermitian, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace to [`STATE_TOLERANCE`].
    pub fn from_entries(entries: DMatrix<Complex64>) -> Result<Self> {
        Self::with_tolerance(entries, STATE_TOLERANCE)
    }

    /// As [`DensityMatrix::from_entries`] with a caller-chosen tolerance,
    /// used for ensemble averages.
    pub fn with_tolerance(entries: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        if !entries.is_square() || entries.nrows() < 2 {
            return Err(Error::validation("density matrix", "must be square with dimension >= 2"));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("density matrix", "entries must be finite"));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in i..n {
                let d = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                if d > tol {
                    return Err(Error::validation(
                        "density matrix",
                        format!("not Hermitian at ({i}, {j}): deviation {d}"),
                    ));
                }
            }
        }
        let trace = entries.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::validation("density matrix", format!("trace {trace} is not 1")));
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn population(&self, i: usize) -> f64 {
        self.entries[(i, i)].re
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Largest `|ρᵢⱼ − conj(ρⱼᵢ)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Positive semidefinite up to `−1e-9`.
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -1e-9
    }
}
