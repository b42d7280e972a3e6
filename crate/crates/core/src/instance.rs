//! The `tighten-mip/1` JSON instance format.

use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::{Error, Result};
use crate::model::{LinConstraint, MilpModel, ObjSense, RowSense, VarKind, VarSpec};

pub const INSTANCE_FORMAT: &str = "tighten-mip/1";

#[derive(Serialize, Deserialize)]
struct VarDoc {
    name: String,
    kind: VarKind,
    #[serde(with = "decimal::real")]
    lb: f64,
    #[serde(with = "decimal::real")]
    ub: f64,
}

#[derive(Serialize, Deserialize)]
struct RowDoc {
    tag: String,
    #[serde(with = "decimal::terms")]
    terms: Vec<(usize, f64)>,
    sense: RowSense,
    #[serde(with = "decimal::real")]
    rhs: f64,
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    format: String,
    sense: ObjSense,
    vars: Vec<VarDoc>,
    #[serde(with = "decimal::terms")]
    objective: Vec<(usize, f64)>,
    constraints: Vec<RowDoc>,
    binary_index: Vec<usize>,
}

pub fn encode_instance(model: &MilpModel) -> String {
    let doc = InstanceDoc {
        format: INSTANCE_FORMAT.to_string(),
        sense: model.sense(),
        vars: model
            .vars()
            .iter()
            .map(|v| VarDoc {
                name: v.name.clone(),
                kind: v.kind,
                lb: v.lower,
                ub: v.upper,
            })
            .collect(),
        objective: model.objective().to_vec(),
        constraints: model
            .constraints()
            .iter()
            .map(|c| RowDoc {
                tag: c.tag.clone(),
                terms: c.coeffs.clone(),
                sense: c.sense,
                rhs: c.rhs,
            })
            .collect(),
        binary_index: model.binary_index().to_vec(),
    };
    serde_json::to_string_pretty(&doc).expect("instance document serializes")
}

/// Parse an instance. Terms are taken verbatim; run [`crate::model::validate`]
/// to check them.
pub fn decode_instance(text: &str) -> Result<MilpModel> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    if doc.format != INSTANCE_FORMAT {
        return Err(Error::Format(format!(
            "expected format {INSTANCE_FORMAT:?}, found {:?}",
            doc.format
        )));
    }
    let vars = doc
        .vars
        .into_iter()
        .map(|v| VarSpec {
            name: v.name,
            kind: v.kind,
            lower: v.lb,
            upper: v.ub,
        })
        .collect();
    let constraints = doc
        .constraints
        .into_iter()
        .map(|r| LinConstraint {
            coeffs: r.terms,
            sense: r.sense,
            rhs: r.rhs,
            tag: r.tag,
        })
        .collect();
    Ok(MilpModel::from_parts(
        vars,
        constraints,
        doc.objective,
        doc.sense,
        doc.binary_index,
    ))
}
