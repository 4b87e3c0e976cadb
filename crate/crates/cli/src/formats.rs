//! On-disk formats: structure files, mass tables, hypothesis reports and
//! number formatting shared by the CSV writers.
//!
//! Structure file:
//!
//! ```json
//! {"name": "K_L",
//!  "amplitudes": [[0.7071, 0], [-0.7071, 0]],
//!  "branches": [{"name": "K0", "constituents": [{"name": "s", "mass_mev": 500}, ...]}, ...]}
//! ```
//!
//! Elementary nodes take `mass_mev`, or fall back to the mass table.
//! Mass table: a flat object `{"s": 500, "d": 300}`; `Xbar` resolves to `X`.

use collapse_core::analytic::CollapseTime;
use collapse_core::structure::{HypothesisReport, MassTable, ParticleNode, SuperpositionSpec};
use collapse_core::{Complex64, Energy};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDoc {
    pub name: String,
    pub amplitudes: Vec<[f64; 2]>,
    pub branches: Vec<NodeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_mev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constituents: Option<Vec<NodeDoc>>,
}

fn json_error(what: &str, e: serde_json::Error) -> CliError {
    CliError::Validation(format!("{what}: {e} (line {}, column {})", e.line(), e.column()))
}

fn node_from_doc(doc: &NodeDoc, path: &str, masses: &MassTable) -> Result<ParticleNode, CliError> {
    let at = |msg: String| CliError::Validation(format!("{path}: {msg}"));
    let mass = doc
        .mass_mev
        .map(|m| Energy::rest(m).map_err(|e| at(format!("mass_mev: {e}"))))
        .transpose()?;
    let children = doc.constituents.as_deref().unwrap_or_default();
    if doc.constituents.is_some() && children.is_empty() {
        return Err(at("constituents must not be empty".into()));
    }
    let constituents = children
        .iter()
        .enumerate()
        .map(|(i, c)| node_from_doc(c, &format!("{path}.constituents[{i}]"), masses))
        .collect::<Result<Vec<_>, _>>()?;
    let mass = match mass {
        None if constituents.is_empty() => Some(masses.get(&doc.name).ok_or_else(|| {
            at(format!(
                "elementary particle '{}' has no mass_mev and no mass-table entry",
                doc.name
            ))
        })?),
        m => m,
    };
    ParticleNode::new(doc.name.clone(), mass, constituents).map_err(|e| at(e.to_string()))
}

fn node_to_doc(node: &ParticleNode) -> NodeDoc {
    NodeDoc {
        name: node.name().to_string(),
        mass_mev: node.mass().map(|m| m.value()),
        constituents: (!node.is_elementary()).then(|| node.constituents().iter().map(node_to_doc).collect()),
    }
}

pub fn structure_from_doc(doc: &StructureDoc, masses: &MassTable) -> Result<SuperpositionSpec, CliError> {
    let branches = doc
        .branches
        .iter()
        .enumerate()
        .map(|(i, b)| node_from_doc(b, &format!("branches[{i}]"), masses))
        .collect::<Result<Vec<_>, _>>()?;
    let amplitudes = doc.amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
    SuperpositionSpec::new(doc.name.clone(), branches, amplitudes)
        .map_err(|e| CliError::Validation(format!("structure: {e}")))
}

pub fn structure_to_doc(spec: &SuperpositionSpec) -> StructureDoc {
    StructureDoc {
        name: spec.name().to_string(),
        amplitudes: spec.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
        branches: spec.branches().iter().map(node_to_doc).collect(),
    }
}

pub fn parse_structure(text: &str, masses: &MassTable) -> Result<SuperpositionSpec, CliError> {
    let doc: StructureDoc = serde_json::from_str(text).map_err(|e| json_error("structure file", e))?;
    structure_from_doc(&doc, masses)
}

/// Pretty JSON with every leaf mass written out, so the file no longer
/// depends on a mass table.
pub fn emit_structure(spec: &SuperpositionSpec) -> String {
    let mut s = serde_json::to_string_pretty(&structure_to_doc(spec)).unwrap_or_default();
    s.push('\n');
    s
}

pub fn parse_mass_table(text: &str) -> Result<MassTable, CliError> {
    let raw: Map<String, Value> = serde_json::from_str(text).map_err(|e| json_error("mass table", e))?;
    let mut table = MassTable::new();
    for (name, v) in raw {
        let m = v
            .as_f64()
            .ok_or_else(|| CliError::Validation(format!("mass table: '{name}' is not a number")))?;
        let m = Energy::rest(m).map_err(|e| CliError::Validation(format!("mass table: '{name}': {e}")))?;
        table.insert(name, m);
    }
    Ok(table)
}

pub fn mass_table_to_json(table: &MassTable) -> Value {
    Value::Object(table.iter().map(|(k, v)| (k.to_string(), number(v.value()))).collect())
}

pub(crate) fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

/// `{"hypothesis_name", "delta_e_total_mev", "predicted_tc_seconds" | "no_collapse", "k", "log10_ratio"?}`
pub fn report_json(report: &HypothesisReport) -> Value {
    let mut m = Map::new();
    m.insert("hypothesis_name".into(), Value::String(report.hypothesis_name.clone()));
    m.insert("delta_e_total_mev".into(), number(report.delta_e_total.value()));
    m.insert(
        "predicted_tc_seconds".into(),
        match report.predicted_tc {
            CollapseTime::NoCollapse => Value::String("no_collapse".into()),
            CollapseTime::Finite(t) => number(t.value()),
        },
    );
    m.insert("k".into(), number(report.k));
    if let Some(r) = report.log10_ratio {
        m.insert("log10_ratio".into(), number(r));
    }
    Value::Object(m)
}

/// Shortest decimal that parses back to the same double.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format_finite(v).to_string()
    } else {
        v.to_string()
    }
}
