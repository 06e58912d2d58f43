//! Instance files in the `cnl-instance/1` JSON schema.
//!
//! Floats are written in shortest round-trip form, so a saved instance
//! reloads bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::choice::{Instance, MixtureInstance, PricingInstance};
use crate::constraints::{default_total_cap, ConstraintSet, Row};
use crate::error::{CnlError, Result};

pub const SCHEMA: &str = "cnl-instance/1";

/// Row generators stored by name instead of as explicit rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Builder {
    /// At most `cap` products in total; `⌈m/2⌉` when omitted.
    TotalCap {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<usize>,
    },
    /// At most `⌈fraction·|S_n|⌉` products per nest.
    PerNestCap {
        #[serde(default = "default_fraction")]
        fraction: f64,
    },
    /// Marker for hand-written rows; adds nothing.
    Custom,
}

fn default_fraction() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstraintsDoc {
    #[serde(default)]
    pub rows: Vec<Row>,
    #[serde(default)]
    pub builders: Vec<Builder>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingDoc {
    #[serde(rename = "L")]
    pub levels: usize,
    pub p: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureDoc {
    #[serde(rename = "T")]
    pub types: usize,
    pub theta: Vec<f64>,
    pub v: Vec<Vec<f64>>,
}

/// Raw file contents. `r` and `v` are absent for pricing instances and
/// `v` is absent for mixtures, whose weights live under `mixture`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub schema: String,
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub v0: Vec<f64>,
    #[serde(default)]
    pub constraints: ConstraintsDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pricing: Option<PricingDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<MixtureDoc>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Assort(Instance),
    Pricing(PricingInstance),
    Mixture(MixtureInstance),
}

impl Problem {
    pub fn label(&self) -> &'static str {
        match self {
            Problem::Assort(_) => "assort",
            Problem::Pricing(_) => "pricing",
            Problem::Mixture(_) => "mixture",
        }
    }

    pub fn num_products(&self) -> usize {
        match self {
            Problem::Assort(i) => i.num_products(),
            Problem::Pricing(i) => i.num_products(),
            Problem::Mixture(i) => i.num_products(),
        }
    }

    pub fn num_nests(&self) -> usize {
        match self {
            Problem::Assort(i) => i.num_nests(),
            Problem::Pricing(i) => i.num_nests(),
            Problem::Mixture(i) => i.num_nests(),
        }
    }

    fn alpha(&self) -> &[Vec<f64>] {
        match self {
            Problem::Assort(i) => i.alpha(),
            Problem::Pricing(i) => i.alpha(),
            Problem::Mixture(i) => i.alpha(),
        }
    }
}

/// A problem with its product-level constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub problem: Problem,
    pub constraints: ConstraintSet,
}

impl InstanceFile {
    pub fn new(problem: Problem, constraints: ConstraintSet) -> Result<Self> {
        if constraints.num_products() != problem.num_products() {
            return Err(CnlError::dim(
                "constraint columns",
                problem.num_products(),
                constraints.num_products(),
            ));
        }
        Ok(InstanceFile { problem, constraints })
    }

    pub fn from_doc(doc: InstanceDoc) -> Result<Self> {
        if doc.schema != SCHEMA {
            return Err(CnlError::Parse(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                doc.schema
            )));
        }
        let need = |field: Option<Vec<f64>>, name: &str| {
            field.ok_or_else(|| CnlError::Parse(format!("missing field `{name}`")))
        };
        let problem = match (doc.pricing, doc.mixture) {
            (Some(_), Some(_)) => {
                return Err(CnlError::Parse("`pricing` and `mixture` are exclusive".into()))
            }
            (Some(p), None) => {
                if p.p.len() != doc.m {
                    return Err(CnlError::dim("pricing rows", doc.m, p.p.len()));
                }
                if let Some(row) = p.p.iter().chain(&p.v).find(|row| row.len() != p.levels) {
                    return Err(CnlError::dim("price levels", p.levels, row.len()));
                }
                Problem::Pricing(PricingInstance::new(p.p, p.v, doc.alpha, doc.sigma, doc.v0)?)
            }
            (None, Some(mx)) => {
                if mx.theta.len() != mx.types {
                    return Err(CnlError::dim("theta", mx.types, mx.theta.len()));
                }
                Problem::Mixture(MixtureInstance::new(
                    need(doc.r, "r")?,
                    mx.v,
                    mx.theta,
                    doc.alpha,
                    doc.sigma,
                    doc.v0,
                )?)
            }
            (None, None) => Problem::Assort(Instance::new(
                need(doc.r, "r")?,
                need(doc.v, "v")?,
                doc.alpha,
                doc.sigma,
                doc.v0,
            )?),
        };
        if problem.num_products() != doc.m {
            return Err(CnlError::dim("products", doc.m, problem.num_products()));
        }
        if problem.num_nests() != doc.n {
            return Err(CnlError::dim("nests", doc.n, problem.num_nests()));
        }
        let mut cs = ConstraintSet::from_rows(doc.m, doc.constraints.rows)?;
        for b in &doc.constraints.builders {
            match *b {
                Builder::TotalCap { cap } => cs.extend(ConstraintSet::total_cardinality(
                    doc.m,
                    cap.unwrap_or_else(|| default_total_cap(doc.m)),
                )?)?,
                Builder::PerNestCap { fraction } => {
                    cs.extend(ConstraintSet::per_nest_from_alpha(problem.alpha(), fraction)?)?
                }
                Builder::Custom => {}
            }
        }
        InstanceFile::new(problem, cs)
    }

    /// Every row is written explicitly with its tag; no builders.
    pub fn to_doc(&self) -> InstanceDoc {
        let mut doc = InstanceDoc {
            schema: SCHEMA.into(),
            m: self.problem.num_products(),
            n: self.problem.num_nests(),
            r: None,
            v: None,
            alpha: self.problem.alpha().to_vec(),
            sigma: Vec::new(),
            v0: Vec::new(),
            constraints: ConstraintsDoc {
                rows: self.constraints.rows().to_vec(),
                builders: Vec::new(),
            },
            pricing: None,
            mixture: None,
        };
        match &self.problem {
            Problem::Assort(i) => {
                doc.r = Some(i.revenues().to_vec());
                doc.v = Some(i.weights().to_vec());
                doc.sigma = i.sigma().to_vec();
                doc.v0 = i.no_purchase().to_vec();
            }
            Problem::Pricing(i) => {
                doc.sigma = i.sigma().to_vec();
                doc.v0 = i.no_purchase().to_vec();
                doc.pricing = Some(PricingDoc {
                    levels: i.num_levels(),
                    p: i.prices().to_vec(),
                    v: i.level_weights().to_vec(),
                });
            }
            Problem::Mixture(i) => {
                doc.r = Some(i.revenues().to_vec());
                doc.sigma = i.sigma().to_vec();
                doc.v0 = i.no_purchase().to_vec();
                doc.mixture = Some(MixtureDoc {
                    types: i.num_types(),
                    theta: i.theta().to_vec(),
                    v: i.type_weights().to_vec(),
                });
            }
        }
        doc
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDoc =
            serde_json::from_str(text).map_err(|e| CnlError::Parse(format!("instance JSON: {e}")))?;
        InstanceFile::from_doc(doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_doc()).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        InstanceFile::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
