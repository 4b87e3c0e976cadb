//! Composition trees and collapse-time predictions for substructure
//! hypotheses.
//!
//! A superposition of two composite particles collapses according to the
//! summed energy difference of its constituents: leaves of the two branches
//! are paired in depth-first order and `ΔE_total = Σᵢ |mᵢ − m′ᵢ|`, with rest
//! masses standing in for energies. Two structureless particles of equal
//! mass give zero and never collapse.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::analytic::{collapse_time, CollapseTime};
use crate::error::{Error, Result};
use crate::units::{Duration, Energy, PhysicalConstants};

/// A particle and, if composite, its constituents.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleNode {
    name: String,
    mass: Option<Energy>,
    constituents: Vec<ParticleNode>,
}

impl ParticleNode {
    pub fn elementary(name: impl Into<String>, mass: Energy) -> Result<Self> {
        Self::new(name, Some(mass), Vec::new())
    }

    /// A composite node. Its own mass is informational and may be absent.
    pub fn composite(
        name: impl Into<String>,
        mass: Option<Energy>,
        constituents: Vec<ParticleNode>,
    ) -> Result<Self> {
        if constituents.is_empty() {
            return Err(Error::validation("particle", "a composite needs constituents"));
        }
        Self::new(name, mass, constituents)
    }

    /// Leaves must carry a mass; composites may omit theirs.
    pub fn new(name: impl Into<String>, mass: Option<Energy>, constituents: Vec<ParticleNode>) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::validation("particle", "name must not be empty"));
        }
        if let Some(m) = mass {
            Energy::rest(m.value())?;
        }
        if constituents.is_empty() && mass.is_none() {
            return Err(Error::validation("particle", format!("elementary particle '{name}' has no mass")));
        }
        Ok(Self {
            name,
            mass,
            constituents,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mass(&self) -> Option<Energy> {
        self.mass
    }

    pub fn constituents(&self) -> &[ParticleNode] {
        &self.constituents
    }

    pub fn is_elementary(&self) -> bool {
        self.constituents.is_empty()
    }

    /// Elementary descendants in depth-first order; an elementary node
    /// yields itself.
    pub fn leaves(&self) -> Vec<&ParticleNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a ParticleNode>) {
        if self.is_elementary() {
            out.push(self);
        } else {
            for c in &self.constituents {
                c.collect_leaves(out);
            }
        }
    }

    fn leaf_mass(&self) -> Energy {
        // enforced by the constructor
        self.mass.unwrap_or(Energy::ZERO)
    }
}

/// `Σᵢ |m(aᵢ) − m(bᵢ)|` over leaves paired in depth-first order.
pub fn total_energy_difference(branch_a: &ParticleNode, branch_b: &ParticleNode) -> Result<Energy> {
    let a = branch_a.leaves();
    let b = branch_b.leaves();
    if a.len() != b.len() {
        return Err(Error::LeafCountMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| (x.leaf_mass() - y.leaf_mass()).abs())
        .sum())
}

/// Named two-branch superposition of particle trees.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionSpec {
    name: String,
    branches: Vec<ParticleNode>,
    amplitudes: Vec<Complex64>,
}

impl SuperpositionSpec {
    /// Normalizes the amplitudes. At least two branches are required;
    /// leaf counts are checked when the energy difference is computed.
    pub fn new(name: impl Into<String>, branches: Vec<ParticleNode>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if branches.len() < 2 {
            return Err(Error::validation("superposition", "at least two branches are required"));
        }
        if amplitudes.len() != branches.len() {
            return Err(Error::validation(
                "superposition",
                format!("{} amplitudes for {} branches", amplitudes.len(), branches.len()),
            ));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::validation("superposition", "amplitudes must be finite"));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::validation("superposition", "all amplitudes are zero"));
        }
        let amplitudes = if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
            amplitudes.into_iter().map(|a| a / norm).collect()
        } else {
            amplitudes
        };
        Ok(Self {
            name: name.into(),
            branches,
            amplitudes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn branches(&self) -> &[ParticleNode] {
        &self.branches
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
}

/// Predicted collapse time of one hypothesis, optionally set against a
/// measured timescale.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub hypothesis_name: String,
    pub delta_e_total: Energy,
    pub predicted_tc: CollapseTime,
    pub k: f64,
    pub measured_timescale: Option<Duration>,
    /// `log₁₀(predicted/measured)`, present only for finite predictions
    /// compared against a measurement.
    pub log10_ratio: Option<f64>,
}

impl HypothesisReport {
    pub fn is_comparable(&self) -> bool {
        self.log10_ratio.is_some()
    }
}

pub fn predict_collapse_time(spec: &SuperpositionSpec, constants: &PhysicalConstants) -> Result<HypothesisReport> {
    if spec.branches.len() != 2 {
        return Err(Error::validation(
            "superposition",
            format!("predictions need exactly two branches, got {}", spec.branches.len()),
        ));
    }
    let delta_e = total_energy_difference(&spec.branches[0], &spec.branches[1])?;
    let prediction = collapse_time(delta_e, constants)?;
    Ok(HypothesisReport {
        hypothesis_name: spec.name.clone(),
        delta_e_total: delta_e,
        predicted_tc: prediction.collapse_time,
        k: prediction.k_used,
        measured_timescale: None,
        log10_ratio: None,
    })
}

/// Attaches `log₁₀(predicted/measured)` to every finite prediction and
/// orders by its magnitude. Predictions without collapse go last, in their
/// original order.
pub fn compare_hypotheses(reports: Vec<HypothesisReport>, measured: Duration) -> Result<Vec<HypothesisReport>> {
    if measured.value() <= 0.0 {
        return Err(Error::validation("measured timescale", "must be positive"));
    }
    let mut reports: Vec<HypothesisReport> = reports
        .into_iter()
        .map(|mut r| {
            r.measured_timescale = Some(measured);
            r.log10_ratio = r
                .predicted_tc
                .seconds()
                .map(|t| (t / measured.value()).log10());
            r
        })
        .collect();
    // stable: ties and incomparable entries keep their input order
    reports.sort_by(|a, b| match (a.log10_ratio, b.log10_ratio) {
        (Some(x), Some(y)) => x.abs().total_cmp(&y.abs()),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(reports)
}

/// Particle name to rest mass. Names ending in `bar` fall back to the
/// unbarred entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MassTable {
    masses: BTreeMap<String, Energy>,
}

impl MassTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Constituent-scale strange and down quark masses (500 and 300 MeV).
    pub fn default_quarks() -> Self {
        let mut t = Self::new();
        t.insert("s", Energy::mev(500.0).unwrap_or_default());
        t.insert("d", Energy::mev(300.0).unwrap_or_default());
        t
    }

    pub fn insert(&mut self, name: impl Into<String>, mass: Energy) {
        self.masses.insert(name.into(), mass);
    }

    pub fn get(&self, name: &str) -> Option<Energy> {
        self.masses
            .get(name)
            .or_else(|| name.strip_suffix("bar").and_then(|base| self.masses.get(base)))
            .copied()
    }

    pub fn lookup(&self, name: &str) -> Result<Energy> {
        self.get(name)
            .ok_or_else(|| Error::validation("mass table", format!("no mass for '{name}'")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Energy)> {
        self.masses.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// `|K_L⟩ = (|s d̄⟩ − |d s̄⟩)/√2` with quark masses from `masses`.
pub fn kaon_superposition(masses: &MassTable) -> Result<SuperpositionSpec> {
    let quark = |name: &str| -> Result<ParticleNode> { ParticleNode::elementary(name, masses.lookup(name)?) };
    let k0 = ParticleNode::composite("K0", None, vec![quark("s")?, quark("dbar")?])?;
    let k0bar = ParticleNode::composite("K0bar", None, vec![quark("d")?, quark("sbar")?])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    SuperpositionSpec::new(
        "K_L",
        vec![k0, k0bar],
        vec![Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
    )
}

/// Collapse-time prediction for the long-lived neutral kaon.
pub fn kaon_case_study(constants: &PhysicalConstants, masses: &MassTable) -> Result<HypothesisReport> {
    predict_collapse_time(&kaon_superposition(masses)?, constants)
}
