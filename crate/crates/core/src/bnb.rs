//! Best-bound branch-and-bound over binary variables.
//!
//! All nodes share one simplex tableau. Moving to a node only changes
//! variable bounds, which leaves the basis dual feasible, so each node is
//! reoptimized with the dual method instead of being solved from scratch.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::{Error, Result};
use crate::model::{evaluate, validate, MilpModel, ObjSense, FEAS_TOL};
use crate::simplex::{LpState, Simplex};

/// A binary whose relaxed value is this close to 0 or 1 counts as integral.
const BRANCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branching {
    MostFractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeOrder {
    BestBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Stop once `|UB - LB| / max(|UB|, 1e-9)` reaches this value.
    pub gap_limit: f64,
    pub node_limit: u64,
    /// Seconds.
    pub time_limit: f64,
    pub branching: Branching,
    pub node_order: NodeOrder,
    /// The search makes no random choices; the seed is carried for
    /// provenance in reports.
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            gap_limit: 0.0,
            node_limit: 1_000_000,
            time_limit: 3600.0,
            branching: Branching::MostFractional,
            node_order: NodeOrder::BestBound,
            seed: 0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gap_limit) {
            return Err(Error::InvalidConfig(format!(
                "gap_limit {} outside [0, 1)",
                self.gap_limit
            )));
        }
        if !(self.time_limit > 0.0) {
            return Err(Error::InvalidConfig("time_limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MilpStatus {
    Optimal,
    GapLimit,
    NodeLimit,
    TimeLimit,
    Infeasible,
}

/// Global bounds at one moment of the search, in the model's own sense.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub time: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpOutcome {
    pub status: MilpStatus,
    /// Incumbent objective; NaN when no feasible point was found.
    pub objective: f64,
    /// Incumbent; empty when no feasible point was found.
    pub point: Vec<f64>,
    pub nodes: u64,
    pub iterations: u64,
    pub wall_time: f64,
    pub gap: f64,
    pub bound_trace: Vec<BoundPoint>,
}

impl MilpOutcome {
    pub fn has_solution(&self) -> bool {
        !self.point.is_empty()
    }

    pub fn report(&self) -> SolveReport {
        SolveReport {
            status: self.status,
            objective: self.objective,
            nodes: self.nodes,
            iterations: self.iterations,
            wall_time_s: self.wall_time,
            gap: self.gap,
            bound_trace: self
                .bound_trace
                .iter()
                .map(|b| vec![b.time, b.lower, b.upper])
                .collect(),
        }
    }
}

/// JSON solve report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: MilpStatus,
    #[serde(with = "decimal::real")]
    pub objective: f64,
    pub nodes: u64,
    pub iterations: u64,
    #[serde(with = "decimal::real")]
    pub wall_time_s: f64,
    #[serde(with = "decimal::real")]
    pub gap: f64,
    /// `[t, lb, ub]` triples.
    #[serde(with = "decimal::real_matrix")]
    pub bound_trace: Vec<Vec<f64>>,
}

/// `|UB - LB| / max(|UB|, 1e-9)`.
pub fn relative_gap(lower: f64, upper: f64) -> f64 {
    if !lower.is_finite() || !upper.is_finite() {
        return f64::INFINITY;
    }
    (upper - lower).abs() / upper.abs().max(1e-9)
}

#[derive(Debug, Clone)]
struct Node {
    id: u64,
    /// Parent relaxation value, max form.
    bound: f64,
    /// (position in binary_index, fixed value)
    fixings: Vec<(usize, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: larger bound first, then smaller id
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    cfg: &'a SolveConfig,
    sign: f64,
    simplex: Simplex,
    /// Fixing currently applied to each binary.
    applied: Vec<Option<bool>>,
    incumbent: Option<(f64, Vec<f64>)>,
    dual_bound: f64,
    trace: Vec<BoundPoint>,
    start: Instant,
    nodes: u64,
    extra_iterations: u64,
}

impl Search<'_> {
    fn prune_tol(&self) -> f64 {
        let inc = self.incumbent.as_ref().map_or(0.0, |(v, _)| v.abs());
        1e-7 + 1e-9 * inc
    }

    fn incumbent_max(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::NEG_INFINITY, |(v, _)| *v)
    }

    /// (lower, upper) in the model's sense.
    fn bounds(&self) -> (f64, f64) {
        let primal = self.sign * self.incumbent_max();
        let dual = self.sign * self.dual_bound;
        if self.sign > 0.0 {
            (primal, dual)
        } else {
            (dual, primal)
        }
    }

    fn gap(&self) -> f64 {
        let (lo, hi) = self.bounds();
        relative_gap(lo, hi)
    }

    fn record(&mut self) {
        if self.dual_bound.is_infinite() {
            return;
        }
        let (lower, upper) = self.bounds();
        if let Some(last) = self.trace.last() {
            if last.lower == lower && last.upper == upper {
                return;
            }
        }
        self.trace.push(BoundPoint {
            time: self.start.elapsed().as_secs_f64(),
            lower,
            upper,
        });
    }

    fn tighten_dual(&mut self, bound: f64) {
        let b = bound.max(self.incumbent_max());
        if b < self.dual_bound {
            self.dual_bound = b;
        }
    }

    fn apply_fixings(&mut self, fixings: &[(usize, bool)]) -> bool {
        let mut target: Vec<Option<bool>> = vec![None; self.applied.len()];
        for &(k, v) in fixings {
            target[k] = Some(v);
        }
        let mut consistent = true;
        for k in 0..target.len() {
            if target[k] == self.applied[k] {
                continue;
            }
            let j = self.model.binary_index()[k];
            let (lo, hi) = match target[k] {
                None => (0.0, 1.0),
                Some(false) => (0.0, 0.0),
                Some(true) => (1.0, 1.0),
            };
            if !self.simplex.set_bounds(j, lo, hi) {
                consistent = false;
                // leave the old bounds in place; this node is pruned anyway
                continue;
            }
            self.applied[k] = target[k];
        }
        consistent
    }

    /// Most fractional binary by position in `binary_index`; ties go to the
    /// lowest variable index.
    fn branching_candidate(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, &j) in self.model.binary_index().iter().enumerate() {
            let v = self.simplex.value(j);
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > BRANCH_TOL && best.is_none_or(|(_, f)| frac > f) {
                best = Some((k, frac));
            }
        }
        best.map(|(k, _)| k)
    }

    /// Offer an integral relaxation point as incumbent. Returns the position
    /// of a binary to branch on if rounding broke feasibility.
    fn offer(&mut self) -> Option<usize> {
        let mut point = self.simplex.point();
        for &j in self.model.binary_index() {
            point[j] = point[j].round();
        }
        let eval = evaluate(self.model, &point, FEAS_TOL).expect("point length matches model");
        if !eval.feasible {
            let worst = self
                .model
                .binary_index()
                .iter()
                .enumerate()
                .map(|(k, &j)| (k, (self.simplex.value(j) - point[j]).abs()))
                .filter(|&(_, d)| d > 0.0)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            if worst.is_none() {
                log::warn!(
                    "integral relaxation point violates rows by {:.3e}; discarded",
                    eval.max_violation
                );
            }
            return worst.map(|(k, _)| k);
        }
        let value = self.sign * eval.objective;
        if value > self.incumbent_max() {
            self.incumbent = Some((value, point));
            self.record();
        }
        None
    }
}

/// Solve `model` to optimality (or until a limit) by best-bound
/// branch-and-bound with most-fractional branching.
pub fn solve_milp(model: &MilpModel, cfg: &SolveConfig) -> Result<MilpOutcome> {
    cfg.validate()?;
    let violations = validate(model);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidModel(v.to_string()));
    }
    let start = Instant::now();
    let sign = match model.sense() {
        ObjSense::Max => 1.0,
        ObjSense::Min => -1.0,
    };
    let mut search = Search {
        model,
        cfg,
        sign,
        simplex: Simplex::new(model),
        applied: vec![None; model.binary_index().len()],
        incumbent: None,
        dual_bound: f64::INFINITY,
        trace: Vec::new(),
        start,
        nodes: 0,
        extra_iterations: 0,
    };

    let root_state = search.simplex.solve()?;
    search.nodes = 1;
    let status = match root_state {
        LpState::Infeasible => MilpStatus::Infeasible,
        LpState::Unbounded => return Err(Error::SolverFailure("LP relaxation is unbounded".into())),
        _ => run(&mut search)?,
    };
    let status = match status {
        MilpStatus::Optimal if search.incumbent.is_none() => MilpStatus::Infeasible,
        s => s,
    };
    if status == MilpStatus::Optimal {
        search.dual_bound = search.incumbent_max();
        search.record();
    }
    let gap = search.gap();
    let (objective, point) = match search.incumbent.take() {
        Some((v, p)) => (sign * v, p),
        None => (f64::NAN, Vec::new()),
    };
    Ok(MilpOutcome {
        status,
        objective,
        point,
        nodes: search.nodes,
        iterations: search.simplex.iterations as u64 + search.extra_iterations,
        wall_time: start.elapsed().as_secs_f64(),
        gap,
        bound_trace: search.trace,
    })
}

fn run(search: &mut Search<'_>) -> Result<MilpStatus> {
    let mut heap = BinaryHeap::new();
    let mut next_id = 1u64;
    let mut first = true;
    heap.push(Node {
        id: 0,
        bound: f64::INFINITY,
        fixings: Vec::new(),
    });

    while let Some(node) = heap.pop() {
        if node.bound <= search.incumbent_max() + search.prune_tol() {
            // best-first: every open node is dominated
            heap.clear();
            break;
        }
        search.tighten_dual(node.bound);
        search.record();
        if search.incumbent.is_some() && search.cfg.gap_limit > 0.0 && search.gap() <= search.cfg.gap_limit {
            return Ok(MilpStatus::GapLimit);
        }
        if search.start.elapsed().as_secs_f64() >= search.cfg.time_limit {
            return Ok(MilpStatus::TimeLimit);
        }
        if search.nodes >= search.cfg.node_limit && !first {
            return Ok(MilpStatus::NodeLimit);
        }

        let state = if first {
            first = false;
            LpState::Optimal
        } else {
            search.nodes += 1;
            solve_node(search, &node)?
        };
        if state != LpState::Optimal {
            continue;
        }
        let z = search.simplex.objective_max();
        if node.id == 0 {
            search.tighten_dual(z);
            search.record();
        }
        if z <= search.incumbent_max() + search.prune_tol() {
            continue;
        }
        let branch_on = match search.branching_candidate() {
            Some(k) => Some(k),
            None => search.offer(),
        };
        let Some(k) = branch_on else { continue };
        for value in [false, true] {
            let mut fixings = node.fixings.clone();
            fixings.push((k, value));
            heap.push(Node {
                id: next_id,
                bound: z,
                fixings,
            });
            next_id += 1;
        }
    }
    Ok(MilpStatus::Optimal)
}

fn solve_node(search: &mut Search<'_>, node: &Node) -> Result<LpState> {
    if !search.apply_fixings(&node.fixings) {
        return Ok(LpState::Infeasible);
    }
    search.simplex.refresh();
    let cutoff = search.incumbent.as_ref().map(|(v, _)| v + search.prune_tol());
    match search.simplex.reoptimize(cutoff) {
        Ok(state) => Ok(state),
        Err(e) => {
            log::warn!("node {} reoptimization failed ({e}); cold restart", node.id);
            search.extra_iterations += search.simplex.iterations as u64;
            search.simplex = Simplex::new(search.model);
            search.applied = vec![None; search.applied.len()];
            if !search.apply_fixings(&node.fixings) {
                return Ok(LpState::Infeasible);
            }
            search.simplex.refresh();
            search.simplex.solve()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelBuilder, RowSense, VarSpec};

    #[test]
    fn rounding_forced_down() {
        let mut b = ModelBuilder::new(ObjSense::Max);
        let u = b.add_var(VarSpec::binary("u"));
        b.add_constraint("half", [(u, 2.0)], RowSense::Le, 1.0);
        b.set_objective([(u, 1.0)]);
        let out = solve_milp(&b.build(), &SolveConfig::default()).unwrap();
        assert_eq!(out.status, MilpStatus::Optimal);
        assert_eq!(out.objective, 0.0);
        assert_eq!(out.point, vec![0.0]);
    }

    #[test]
    fn contradictory_binary() {
        let mut b = ModelBuilder::new(ObjSense::Max);
        let u = b.add_var(VarSpec::binary("u"));
        b.add_constraint("ge", [(u, 1.0)], RowSense::Ge, 1.0);
        b.add_constraint("le", [(u, 1.0)], RowSense::Le, 0.0);
        b.set_objective([(u, 1.0)]);
        let out = solve_milp(&b.build(), &SolveConfig::default()).unwrap();
        assert_eq!(out.status, MilpStatus::Infeasible);
        assert!(!out.has_solution());
    }

    #[test]
    fn small_knapsack_minimization() {
        // min -(5a + 4b + 3c) s.t. 2a + 3b + c <= 4 -> a = c = 1, obj -8
        let mut b = ModelBuilder::new(ObjSense::Min);
        let v: Vec<usize> = (0..3)
            .map(|k| b.add_var(VarSpec::binary(format!("u{k}"))))
            .collect();
        b.add_constraint("w", [(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)], RowSense::Le, 4.0);
        b.set_objective([(v[0], -5.0), (v[1], -4.0), (v[2], -3.0)]);
        let out = solve_milp(&b.build(), &SolveConfig::default()).unwrap();
        assert_eq!(out.status, MilpStatus::Optimal);
        assert!((out.objective + 8.0).abs() < 1e-9);
        assert!(out.gap < 1e-9);
        for p in &out.bound_trace {
            assert!(p.lower <= p.upper + 1e-6);
        }
    }

    #[test]
    fn bad_gap_limit() {
        let cfg = SolveConfig {
            gap_limit: 1.0,
            ..SolveConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn report_round_trip() {
        let mut b = ModelBuilder::new(ObjSense::Max);
        let u = b.add_var(VarSpec::binary("u"));
        b.add_constraint("half", [(u, 2.0)], RowSense::Le, 1.0);
        b.set_objective([(u, 1.0)]);
        let out = solve_milp(&b.build(), &SolveConfig::default()).unwrap();
        let json = serde_json::to_string(&out.report()).unwrap();
        assert!(json.contains("\"optimal\""));
        let back: SolveReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, out.report());
    }
}
