//! MILP model representation, validation and solution evaluation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute feasibility tolerance used when none is given.
pub const FEAS_TOL: f64 = 1e-6;
/// Distance from {0, 1} tolerated for a binary variable.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarSpec {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl VarSpec {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        VarSpec {
            name: name.into(),
            kind: VarKind::Continuous,
            lower,
            upper,
        }
    }

    pub fn free(name: impl Into<String>) -> Self {
        Self::continuous(name, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn binary(name: impl Into<String>) -> Self {
        VarSpec {
            name: name.into(),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
        }
    }

    pub fn is_binary(&self) -> bool {
        self.kind == VarKind::Binary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjSense {
    Min,
    Max,
}

/// One linear row `Σ coeffs · x  (sense)  rhs`.
///
/// Terms are kept sorted by variable index, merged, with zeros dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct LinConstraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
    pub tag: String,
}

impl LinConstraint {
    pub fn new(
        tag: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> Self {
        LinConstraint {
            coeffs: canonical_terms(terms),
            sense,
            rhs,
            tag: tag.into(),
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Amount by which `activity` misses the row; zero when satisfied.
    pub fn violation(&self, activity: f64) -> f64 {
        match self.sense {
            RowSense::Le => (activity - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - activity).max(0.0),
            RowSense::Eq => (activity - self.rhs).abs(),
        }
    }
}

/// Sort by index, merge duplicates, drop exact zeros.
pub fn canonical_terms(terms: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = terms.into_iter().collect();
    v.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for (j, c) in v {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += c,
            _ => out.push((j, c)),
        }
    }
    out.retain(|&(_, c)| c != 0.0);
    out
}

/// A mixed-binary linear program. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    vars: Vec<VarSpec>,
    constraints: Vec<LinConstraint>,
    objective: Vec<(usize, f64)>,
    sense: ObjSense,
    binary_index: Vec<usize>,
}

impl MilpModel {
    /// Assemble a model from raw parts without validating them; see [`validate`].
    pub fn from_parts(
        vars: Vec<VarSpec>,
        constraints: Vec<LinConstraint>,
        objective: Vec<(usize, f64)>,
        sense: ObjSense,
        binary_index: Vec<usize>,
    ) -> Self {
        MilpModel {
            vars,
            constraints,
            objective,
            sense,
            binary_index,
        }
    }

    pub fn vars(&self) -> &[VarSpec] {
        &self.vars
    }

    pub fn constraints(&self) -> &[LinConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn sense(&self) -> ObjSense {
        self.sense
    }

    pub fn binary_index(&self) -> &[usize] {
        &self.binary_index
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.constraints.iter().map(|c| c.coeffs.len()).sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Dense objective vector.
    pub fn objective_dense(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.vars.len()];
        for &(j, v) in &self.objective {
            c[j] += v;
        }
        c
    }

    /// The same model with every binary relaxed to a continuous `[0, 1]` variable.
    pub fn relaxed(&self) -> MilpModel {
        let vars = self
            .vars
            .iter()
            .map(|v| VarSpec {
                kind: VarKind::Continuous,
                ..v.clone()
            })
            .collect();
        MilpModel {
            vars,
            constraints: self.constraints.clone(),
            objective: self.objective.clone(),
            sense: self.sense,
            binary_index: Vec::new(),
        }
    }

    /// Copy with some variable bounds overridden.
    pub fn with_bounds(&self, overrides: &[(usize, f64, f64)]) -> MilpModel {
        let mut m = self.clone();
        for &(j, lo, hi) in overrides {
            m.vars[j].lower = lo;
            m.vars[j].upper = hi;
        }
        m
    }

    pub fn into_builder(self) -> ModelBuilder {
        ModelBuilder {
            vars: self.vars,
            constraints: self.constraints,
            objective: self.objective,
            sense: self.sense,
        }
    }
}

/// Incremental construction of a [`MilpModel`].
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    vars: Vec<VarSpec>,
    constraints: Vec<LinConstraint>,
    objective: Vec<(usize, f64)>,
    sense: ObjSense,
}

impl ModelBuilder {
    pub fn new(sense: ObjSense) -> Self {
        ModelBuilder {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            sense,
        }
    }

    pub fn add_var(&mut self, spec: VarSpec) -> usize {
        self.vars.push(spec);
        self.vars.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        tag: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(LinConstraint::new(tag, terms, sense, rhs));
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (usize, f64)>) {
        self.objective = canonical_terms(terms);
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn build(self) -> MilpModel {
        let binary_index = self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_binary())
            .map(|(j, _)| j)
            .collect();
        MilpModel {
            vars: self.vars,
            constraints: self.constraints,
            objective: self.objective,
            sense: self.sense,
            binary_index,
        }
    }
}

/// Which part of a model a [`Violation`] refers to.
#[derive(Debug, Clone, PartialEq)]
pub enum Subject {
    Var { index: usize, name: String },
    Constraint { index: usize, tag: String },
    Objective,
    BinaryIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub subject: Subject,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.subject {
            Subject::Var { index, name } => write!(f, "var {index} ({name}): {}", self.message),
            Subject::Constraint { index, tag } => {
                write!(f, "constraint {index} [{tag}]: {}", self.message)
            }
            Subject::Objective => write!(f, "objective: {}", self.message),
            Subject::BinaryIndex => write!(f, "binary_index: {}", self.message),
        }
    }
}

/// Check every structural invariant of `model`. An empty list means valid.
pub fn validate(model: &MilpModel) -> Vec<Violation> {
    let n = model.vars.len();
    let mut out = Vec::new();

    for (index, v) in model.vars.iter().enumerate() {
        let var = |message: String| Violation {
            subject: Subject::Var {
                index,
                name: v.name.clone(),
            },
            message,
        };
        if v.lower.is_nan() || v.upper.is_nan() {
            out.push(var("NaN bound".into()));
        } else if v.lower > v.upper {
            out.push(var(format!("lower {} > upper {}", v.lower, v.upper)));
        }
        if v.is_binary() && (v.lower != 0.0 || v.upper != 1.0) {
            out.push(var(format!(
                "binary with bounds [{}, {}], expected [0, 1]",
                v.lower, v.upper
            )));
        }
    }

    for (index, c) in model.constraints.iter().enumerate() {
        let row = |message: String| Violation {
            subject: Subject::Constraint {
                index,
                tag: c.tag.clone(),
            },
            message,
        };
        if !c.rhs.is_finite() {
            out.push(row(format!("non-finite rhs {}", c.rhs)));
        }
        let mut prev: Option<usize> = None;
        for &(j, a) in &c.coeffs {
            if j >= n {
                out.push(row(format!("references var {j}, model has {n}")));
            }
            if a == 0.0 {
                out.push(row(format!("stores zero coefficient for var {j}")));
            }
            if !a.is_finite() {
                out.push(row(format!("non-finite coefficient for var {j}")));
            }
            if prev.is_some_and(|p| p >= j) {
                out.push(row(format!("terms not strictly increasing at var {j}")));
            }
            prev = Some(j);
        }
    }

    for &(j, a) in &model.objective {
        if j >= n {
            out.push(Violation {
                subject: Subject::Objective,
                message: format!("references var {j}, model has {n}"),
            });
        }
        if !a.is_finite() {
            out.push(Violation {
                subject: Subject::Objective,
                message: format!("non-finite coefficient for var {j}"),
            });
        }
    }

    let expected: Vec<usize> = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_binary())
        .map(|(j, _)| j)
        .collect();
    if expected != model.binary_index {
        out.push(Violation {
            subject: Subject::BinaryIndex,
            message: format!(
                "lists {} entries, model declares {} binaries in a different order or set",
                model.binary_index.len(),
                expected.len()
            ),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub feasible: bool,
    pub objective: f64,
    pub max_violation: f64,
}

/// Feasibility and objective of a dense assignment.
pub fn evaluate(model: &MilpModel, x: &[f64], tol: f64) -> Result<Evaluation> {
    if x.len() != model.vars.len() {
        return Err(Error::DimensionMismatch {
            what: "assignment",
            expected: model.vars.len(),
            got: x.len(),
        });
    }
    let mut worst = 0.0f64;
    for (v, &xj) in model.vars.iter().zip(x) {
        if xj.is_nan() {
            worst = f64::INFINITY;
            continue;
        }
        worst = worst.max(v.lower - xj).max(xj - v.upper);
        if v.is_binary() {
            worst = worst.max(xj.abs().min((xj - 1.0).abs()));
        }
    }
    for c in &model.constraints {
        worst = worst.max(c.violation(c.activity(x)));
    }
    Ok(Evaluation {
        feasible: worst <= tol,
        objective: model.objective_value(x),
        max_violation: worst,
    })
}
