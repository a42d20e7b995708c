//! JSON documents for instances and solutions.
//!
//! Instance files carry explicit `n`, `N`, `J` alongside the data; infinite
//! numbers are written as the strings `"inf"` / `"-inf"`.

use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{CcpInstance, Domain, Scenario};

/// A real that round-trips infinities through JSON strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            v if v == f64::INFINITY => s.serialize_str("inf"),
            v if v == f64::NEG_INFINITY => s.serialize_str("-inf"),
            v if v.is_nan() => s.serialize_str("nan"),
            v => s.serialize_f64(v),
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct RealVisitor;
        impl Visitor<'_> for RealVisitor {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Real, E> {
                match v.trim().to_ascii_lowercase().as_str() {
                    "inf" | "+inf" | "infinity" => Ok(Real(f64::INFINITY)),
                    "-inf" | "-infinity" => Ok(Real(f64::NEG_INFINITY)),
                    other => other
                        .parse::<f64>()
                        .map(Real)
                        .map_err(|_| E::custom(format!("not a real: {v:?}"))),
                }
            }
        }
        d.deserialize_any(RealVisitor)
    }
}

fn reals(v: &[f64]) -> Vec<Real> {
    v.iter().copied().map(Real).collect()
}

fn floats(v: &[Real]) -> Vec<f64> {
    v.iter().map(|r| r.0).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    #[serde(rename = "W")]
    w: Vec<Vec<Real>>,
    d: Vec<Real>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DomainFile {
    lb: Vec<Real>,
    ub: Vec<Real>,
    #[serde(rename = "P", default)]
    p: Vec<Vec<Real>>,
    #[serde(default)]
    q: Vec<Real>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    #[serde(default)]
    name: String,
    n: usize,
    #[serde(rename = "N")]
    num_scenarios: usize,
    #[serde(rename = "J")]
    rows: usize,
    epsilon: Real,
    cost: Vec<Real>,
    probs: Vec<Real>,
    scenarios: Vec<ScenarioFile>,
    domain: DomainFile,
}

pub fn parse_instance(text: &str) -> Result<CcpInstance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.cost.len() != file.n {
        return Err(Error::DimensionMismatch(format!(
            "n = {} but cost has {} entries",
            file.n,
            file.cost.len()
        )));
    }
    if file.scenarios.len() != file.num_scenarios || file.probs.len() != file.num_scenarios {
        return Err(Error::DimensionMismatch(format!(
            "N = {} but {} scenarios and {} probabilities",
            file.num_scenarios,
            file.scenarios.len(),
            file.probs.len()
        )));
    }
    if let Some(i) = file.scenarios.iter().position(|s| s.d.len() != file.rows) {
        return Err(Error::DimensionMismatch(format!(
            "J = {} but scenario {i} has {} offsets",
            file.rows,
            file.scenarios[i].d.len()
        )));
    }
    let scenarios = file
        .scenarios
        .iter()
        .zip(&file.probs)
        .map(|(s, p)| Scenario {
            w: s.w.iter().map(|r| floats(r)).collect(),
            d: floats(&s.d),
            p: p.0,
        })
        .collect();
    let inst = CcpInstance {
        name: file.name,
        cost: floats(&file.cost),
        scenarios,
        epsilon: file.epsilon.0,
        domain: Domain {
            lb: floats(&file.domain.lb),
            ub: floats(&file.domain.ub),
            p_rows: file.domain.p.iter().map(|r| floats(r)).collect(),
            q: floats(&file.domain.q),
        },
    };
    inst.validate()?;
    Ok(inst)
}

pub fn instance_to_json(inst: &CcpInstance) -> Result<String> {
    let file = InstanceFile {
        name: inst.name.clone(),
        n: inst.n(),
        num_scenarios: inst.num_scenarios(),
        rows: inst.rows_per_scenario(),
        epsilon: Real(inst.epsilon),
        cost: reals(&inst.cost),
        probs: inst.scenarios.iter().map(|s| Real(s.p)).collect(),
        scenarios: inst
            .scenarios
            .iter()
            .map(|s| ScenarioFile {
                w: s.w.iter().map(|r| reals(r)).collect(),
                d: reals(&s.d),
            })
            .collect(),
        domain: DomainFile {
            lb: reals(&inst.domain.lb),
            ub: reals(&inst.domain.ub),
            p: inst.domain.p_rows.iter().map(|r| reals(r)).collect(),
            q: reals(&inst.domain.q),
        },
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<CcpInstance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn write_instance(path: impl AsRef<Path>, inst: &CcpInstance) -> Result<()> {
    std::fs::write(path, instance_to_json(inst)?)?;
    Ok(())
}

/// The solution document written by `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub objective: Option<f64>,
    pub x: Vec<f64>,
    pub beta: Option<f64>,
    pub s: Vec<f64>,
    pub alpha: Vec<f64>,
    pub status: String,
    pub violation_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<serde_json::Value>,
}
