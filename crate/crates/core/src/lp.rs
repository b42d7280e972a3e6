//! LP relaxations and phase-1 feasibility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{evaluate, validate, LinConstraint, MilpModel, ModelBuilder, ObjSense, VarSpec, FEAS_TOL};
use crate::simplex::{LpState, Simplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Objective in the model's sense; meaningful only when optimal.
    pub objective: f64,
    pub point: Vec<f64>,
    pub iterations: usize,
}

fn reject_invalid(model: &MilpModel) -> Result<()> {
    let violations = validate(model);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidModel(format!(
            "{v} ({} violation(s) in total)",
            violations.len()
        )));
    }
    Ok(())
}

/// Solve the LP relaxation of `model` (binaries relaxed to `[0, 1]`).
pub fn solve_lp(model: &MilpModel) -> Result<LpOutcome> {
    reject_invalid(model)?;
    let mut simplex = Simplex::new(model);
    let state = simplex.solve()?;
    let status = match state {
        LpState::Optimal => LpStatus::Optimal,
        LpState::Infeasible => LpStatus::Infeasible,
        LpState::Unbounded => LpStatus::Unbounded,
        LpState::Cutoff => unreachable!("no cutoff on cold solves"),
    };
    Ok(LpOutcome {
        status,
        objective: if status == LpStatus::Optimal {
            simplex.objective()
        } else {
            f64::NAN
        },
        point: simplex.point(),
        iterations: simplex.iterations,
    })
}

/// A point satisfying `constraints` over `num_vars` free continuous
/// variables, or `None` when phase 1 certifies the system infeasible.
pub fn feasible_point(num_vars: usize, constraints: &[LinConstraint]) -> Result<Option<Vec<f64>>> {
    let mut b = ModelBuilder::new(ObjSense::Min);
    for k in 0..num_vars {
        b.add_var(VarSpec::free(format!("h{k}")));
    }
    for c in constraints {
        b.add_constraint(c.tag.clone(), c.coeffs.iter().copied(), c.sense, c.rhs);
    }
    let model = b.build();
    reject_invalid(&model)?;
    let mut simplex = Simplex::new(&model);
    let state = simplex.run_phase1()?;
    let point = simplex.point();
    let eval = evaluate(&model, &point, FEAS_TOL)?;
    match state {
        LpState::Optimal if eval.feasible => Ok(Some(point)),
        // Phase 1 stalled inside the reporting tolerance.
        LpState::Infeasible if eval.feasible => Ok(Some(point)),
        LpState::Infeasible => Ok(None),
        _ => Err(Error::SolverFailure(format!(
            "phase 1 ended at a point violating rows by {:.3e}",
            eval.max_violation
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RowSense;

    #[test]
    fn bounded_max() {
        let mut b = ModelBuilder::new(ObjSense::Max);
        let x = b.add_var(VarSpec::continuous("x", 0.0, 10.0));
        b.add_constraint("cap", [(x, 1.0)], RowSense::Le, 1.0);
        b.set_objective([(x, 1.0)]);
        let out = solve_lp(&b.build()).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_eq!(out.objective, 1.0);
        assert_eq!(out.point, vec![1.0]);
    }

    #[test]
    fn contradictory_rows() {
        let mut b = ModelBuilder::new(ObjSense::Max);
        let x = b.add_var(VarSpec::continuous("x", 0.0, 10.0));
        b.add_constraint("lo", [(x, 1.0)], RowSense::Ge, 2.0);
        b.add_constraint("hi", [(x, 1.0)], RowSense::Le, 1.0);
        b.set_objective([(x, 1.0)]);
        assert_eq!(solve_lp(&b.build()).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut b = ModelBuilder::new(ObjSense::Max);
        let x = b.add_var(VarSpec::continuous("x", 0.0, f64::INFINITY));
        let y = b.add_var(VarSpec::continuous("y", 0.0, f64::INFINITY));
        b.add_constraint("c", [(x, 1.0), (y, -1.0)], RowSense::Le, 1.0);
        b.set_objective([(x, 1.0)]);
        assert_eq!(solve_lp(&b.build()).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn multi_row_infeasibility() {
        let mut b = ModelBuilder::new(ObjSense::Min);
        let x = b.add_var(VarSpec::continuous("x", 0.0, f64::INFINITY));
        let y = b.add_var(VarSpec::continuous("y", 0.0, f64::INFINITY));
        b.add_constraint("a", [(x, 1.0), (y, 1.0)], RowSense::Le, 1.0);
        b.add_constraint("b", [(x, 1.0), (y, 2.0)], RowSense::Ge, 3.0);
        assert_eq!(solve_lp(&b.build()).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn invalid_model_rejected() {
        let mut b = ModelBuilder::new(ObjSense::Max);
        b.add_var(VarSpec::continuous("x", 1.0, 0.0));
        assert!(matches!(solve_lp(&b.build()), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn interval_feasibility() {
        let ok = [
            LinConstraint::new("lo", [(0, 1.0)], RowSense::Ge, 0.0),
            LinConstraint::new("hi", [(0, 1.0)], RowSense::Le, 1.0),
        ];
        let h = feasible_point(1, &ok).unwrap().unwrap();
        assert!((0.0..=1.0).contains(&h[0]));

        let bad = [
            LinConstraint::new("lo", [(0, 1.0)], RowSense::Ge, 1.0),
            LinConstraint::new("hi", [(0, 1.0)], RowSense::Le, 0.0),
        ];
        assert_eq!(feasible_point(1, &bad).unwrap(), None);
    }

    #[test]
    fn coupled_feasibility() {
        // h0 + h1 >= 2, h0 - h1 = 0, h0 <= 0.5 is infeasible; relaxing the cap fixes it.
        let mut rows = vec![
            LinConstraint::new("sum", [(0, 1.0), (1, 1.0)], RowSense::Ge, 2.0),
            LinConstraint::new("eq", [(0, 1.0), (1, -1.0)], RowSense::Eq, 0.0),
            LinConstraint::new("cap", [(0, 1.0)], RowSense::Le, 0.5),
        ];
        assert_eq!(feasible_point(2, &rows).unwrap(), None);
        rows[2].rhs = 1.5;
        let h = feasible_point(2, &rows).unwrap().unwrap();
        assert!(h[0] + h[1] >= 2.0 - 1e-9 && (h[0] - h[1]).abs() < 1e-9 && h[0] <= 1.5 + 1e-9);
    }
}
