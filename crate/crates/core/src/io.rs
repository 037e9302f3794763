//! JSON files: instances, solutions, matchings and allocations.
//!
//! Serialization is canonical (fixed key order, pretty-printed, trailing
//! newline) so that saving a loaded file reproduces it byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{CapacityAllocation, Instance, Matching, PenaltySpec};

#[derive(Debug, Serialize, Deserialize)]
struct StudentJson {
    prefs: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SchoolJson {
    priority: Vec<usize>,
    capacity: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bound: Option<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PenaltyJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceJson {
    students: Vec<StudentJson>,
    schools: Vec<SchoolJson>,
    budget: i64,
    penalties: PenaltyJson,
}

impl From<&PenaltySpec> for PenaltyJson {
    fn from(spec: &PenaltySpec) -> Self {
        let mode = |m: &str| PenaltyJson { mode: Some(m.to_string()), value: None, values: None };
        match spec {
            PenaltySpec::Access => mode("access"),
            PenaltySpec::Improve => mode("improve"),
            PenaltySpec::MinCardinality => mode("min_cardinality"),
            PenaltySpec::Constant(v) => PenaltyJson { mode: Some("constant".into()), value: Some(*v), values: None },
            PenaltySpec::Values(v) => PenaltyJson { mode: None, value: None, values: Some(v.clone()) },
        }
    }
}

impl TryFrom<PenaltyJson> for PenaltySpec {
    type Error = Error;

    fn try_from(p: PenaltyJson) -> Result<Self> {
        match (p.mode.as_deref(), p.value, p.values) {
            (None, None, Some(values)) => Ok(PenaltySpec::Values(values)),
            (Some("constant"), Some(v), None) => Ok(PenaltySpec::Constant(v)),
            (Some(mode), None, None) => {
                PenaltySpec::parse_mode(mode).map_err(|e| Error::InvalidInstance(e.to_string()))
            }
            _ => Err(Error::InvalidInstance("penalties must be {\"mode\": ...} or {\"values\": [...]}".into())),
        }
    }
}

fn non_negative(what: &str, v: i64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::InvalidInstance(format!("negative {what}: {v}")))
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    let raw: InstanceJson = serde_json::from_str(text)?;
    let prefs = raw.students.into_iter().map(|s| s.prefs).collect();
    let mut priorities = Vec::with_capacity(raw.schools.len());
    let mut capacities = Vec::with_capacity(raw.schools.len());
    let mut bounds = Vec::with_capacity(raw.schools.len());
    for (c, school) in raw.schools.into_iter().enumerate() {
        priorities.push(school.priority);
        capacities.push(non_negative(&format!("capacity at school {c}"), school.capacity)?);
        bounds.push(match school.bound {
            Some(b) => Some(non_negative(&format!("bound at school {c}"), b)?),
            None => None,
        });
    }
    let budget = non_negative("budget", raw.budget)?;
    let spec = PenaltySpec::try_from(raw.penalties)?;
    Instance::new(prefs, priorities, capacities, budget, spec, bounds)
}

pub fn instance_to_json(inst: &Instance) -> String {
    let raw = InstanceJson {
        students: inst.all_prefs().iter().map(|p| StudentJson { prefs: p.clone() }).collect(),
        schools: (0..inst.n_schools())
            .map(|c| SchoolJson {
                priority: inst.applicants(c).to_vec(),
                capacity: inst.capacity(c) as i64,
                bound: inst.bound(c).map(|b| b as i64),
            })
            .collect(),
        budget: inst.budget() as i64,
        penalties: PenaltyJson::from(inst.penalty_spec()),
    };
    let mut text = serde_json::to_string_pretty(&raw).expect("instance serializes");
    text.push('\n');
    text
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    instance_from_json(&read(path.as_ref())?)
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &instance_to_json(inst))
}

pub fn save_matching(mu: &Matching, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string(&mu.assign)?;
    text.push('\n');
    write(path.as_ref(), &text)
}

pub fn load_matching(path: impl AsRef<Path>) -> Result<Matching> {
    Ok(Matching::new(serde_json::from_str(&read(path.as_ref())?)?))
}

pub fn save_allocation(t: &CapacityAllocation, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string(&t.t)?;
    text.push('\n');
    write(path.as_ref(), &text)
}

pub fn load_allocation(path: impl AsRef<Path>) -> Result<CapacityAllocation> {
    Ok(CapacityAllocation::new(serde_json::from_str(&read(path.as_ref())?)?))
}

/// Per-school bounds file: a JSON array with one entry per school, `null` for unbounded.
pub fn load_bounds(path: impl AsRef<Path>) -> Result<Vec<Option<usize>>> {
    Ok(serde_json::from_str(&read(path.as_ref())?)?)
}

/// Result of one solver run, as written by `capexp solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub t: Vec<usize>,
    pub assignment: Vec<Option<usize>>,
    pub objective: f64,
    pub method: String,
    #[serde(default)]
    pub stats: Map<String, Value>,
}

impl Solution {
    pub fn matching(&self) -> Matching {
        Matching::new(self.assignment.clone())
    }

    pub fn allocation(&self) -> CapacityAllocation {
        CapacityAllocation::new(self.t.clone())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("solution serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write(path.as_ref(), &self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Solution> {
        Ok(serde_json::from_str(&read(path.as_ref())?)?)
    }
}
