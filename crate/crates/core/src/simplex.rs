//! Dense bounded-variable simplex.
//!
//! Every kept row `i` gets a logical variable `r_i = a_i · x` whose bounds
//! carry the row sense, so the working system is the homogeneous
//! `A x - r = 0` with box constraints on all `n + m` columns. The tableau
//! `B⁻¹ [A | -I]` is kept as sparse rows sorted by column.
//!
//! The primal method (composite phase 1, then phase 2) solves cold LPs.
//! The dual method reoptimizes after bound changes from a dual feasible
//! basis, which is how branch-and-bound nodes are solved.
//!
//! Internally the objective is always maximized.

use crate::error::{Error, Result};
use crate::model::{MilpModel, ObjSense, RowSense};

pub(crate) const PRIMAL_TOL: f64 = 1e-7;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-7;
const DROP_TOL: f64 = 1e-13;
/// Consecutive degenerate pivots before switching to Bland's rule.
pub const BLAND_STREAK: usize = 50;
const RESIDUAL_TOL: f64 = 1e-7;
/// Pivots between scheduled refactorizations.
const REFACTOR_EVERY: usize = 1000;
/// Pivots smaller than this trigger an immediate refactorization.
const SMALL_PIVOT: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free column sitting at zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpState {
    Optimal,
    Infeasible,
    Unbounded,
    /// Dual simplex stopped because the objective fell to the cutoff.
    Cutoff,
}

type SparseRow = Vec<(usize, f64)>;

fn entry(row: &[(usize, f64)], j: usize) -> f64 {
    match row.binary_search_by_key(&j, |e| e.0) {
        Ok(k) => row[k].1,
        Err(_) => 0.0,
    }
}

#[derive(Debug, Clone, Copy)]
enum Leaving {
    Flip,
    Row(usize),
}

pub(crate) struct Simplex {
    n: usize,
    m: usize,
    width: usize,
    tab: Vec<SparseRow>,
    /// Dense copy of the entering column, filled by `load_column`.
    col: Vec<f64>,
    merged: SparseRow,
    cost: Vec<f64>,
    d: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    base_lb: Vec<f64>,
    base_ub: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    status: Vec<Status>,
    rows: Vec<Vec<(usize, f64)>>,
    obj_sign: f64,
    /// A row with no terms, or a singleton bound, contradicts itself.
    trivially_infeasible: bool,
    iter_limit: usize,
    pub(crate) iterations: usize,
    degenerate_streak: usize,
    since_refactor: usize,
    stale: bool,
    scratch: Vec<(usize, f64)>,
}

fn row_bounds(sense: RowSense, rhs: f64) -> (f64, f64) {
    match sense {
        RowSense::Le => (f64::NEG_INFINITY, rhs),
        RowSense::Ge => (rhs, f64::INFINITY),
        RowSense::Eq => (rhs, rhs),
    }
}

impl Simplex {
    /// Build the working form of `model` with integrality dropped.
    ///
    /// Rows with a single term are folded into the variable's bounds; rows
    /// with none are checked once and discarded.
    pub(crate) fn new(model: &MilpModel) -> Self {
        let n = model.num_vars();
        let mut base_lb: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
        let mut base_ub: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
        let mut trivially_infeasible = false;
        let mut rows = Vec::new();
        let mut row_lb = Vec::new();
        let mut row_ub = Vec::new();

        for c in model.constraints() {
            let (lo, hi) = row_bounds(c.sense, c.rhs);
            match c.coeffs.as_slice() {
                [] => {
                    if lo > PRIMAL_TOL || hi < -PRIMAL_TOL {
                        trivially_infeasible = true;
                    }
                }
                [(j, a)] => {
                    let (mut l, mut h) = (lo / a, hi / a);
                    if *a < 0.0 {
                        std::mem::swap(&mut l, &mut h);
                    }
                    base_lb[*j] = base_lb[*j].max(l);
                    base_ub[*j] = base_ub[*j].min(h);
                }
                terms => {
                    rows.push(terms.to_vec());
                    row_lb.push(lo);
                    row_ub.push(hi);
                }
            }
        }
        for j in 0..n {
            if base_lb[j] > base_ub[j] + PRIMAL_TOL {
                trivially_infeasible = true;
            } else if base_lb[j] > base_ub[j] {
                base_ub[j] = base_lb[j];
            }
        }

        let m = rows.len();
        let width = n + m;
        let obj_sign = match model.sense() {
            ObjSense::Max => 1.0,
            ObjSense::Min => -1.0,
        };
        let mut cost = vec![0.0; width];
        for &(j, c) in model.objective() {
            cost[j] += obj_sign * c;
        }

        let mut lb = base_lb.clone();
        let mut ub = base_ub.clone();
        lb.extend(&row_lb);
        ub.extend(&row_ub);

        let mut s = Simplex {
            n,
            m,
            width,
            tab: Vec::new(),
            col: vec![0.0; m],
            merged: Vec::new(),
            cost,
            d: vec![0.0; width],
            lb,
            ub,
            base_lb,
            base_ub,
            x: vec![0.0; width],
            head: Vec::new(),
            status: vec![Status::Zero; width],
            rows,
            obj_sign,
            trivially_infeasible,
            iter_limit: 50_000 + 50 * width,
            iterations: 0,
            degenerate_streak: 0,
            since_refactor: 0,
            stale: false,
            scratch: Vec::new(),
        };
        s.slack_basis();
        s
    }

    /// Reset to the all-logical basis with every structural at a bound.
    fn slack_basis(&mut self) {
        let (n, m, w) = (self.n, self.m, self.width);
        self.tab = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut t: SparseRow = row.iter().map(|&(j, a)| (j, -a)).collect();
                t.push((n + i, 1.0));
                t
            })
            .collect();
        self.head = (n..w).collect();
        for j in 0..n {
            self.place_nonbasic(j, 0.0);
        }
        for i in 0..m {
            self.status[n + i] = Status::Basic(i);
        }
        self.recompute_basics();
        self.recompute_duals();
        self.since_refactor = 0;
        self.stale = false;
    }

    /// Put nonbasic column `j` on the bound that keeps it dual feasible,
    /// with `hint` (a reduced cost) choosing the side.
    fn place_nonbasic(&mut self, j: usize, hint: f64) {
        let (l, u) = (self.lb[j], self.ub[j]);
        let st = if l == u {
            Status::AtLower
        } else if hint > DUAL_TOL && u.is_finite() {
            Status::AtUpper
        } else if hint < -DUAL_TOL && l.is_finite() {
            Status::AtLower
        } else {
            match self.status[j] {
                Status::AtUpper if u.is_finite() => Status::AtUpper,
                _ if l.is_finite() => Status::AtLower,
                _ if u.is_finite() => Status::AtUpper,
                _ => Status::Zero,
            }
        };
        self.status[j] = st;
        self.x[j] = match st {
            Status::AtLower => l,
            Status::AtUpper => u,
            _ => 0.0,
        };
    }

    /// Replace the bounds of structural column `j` (intersected with its
    /// model bounds). Returns `false` if the intersection is empty.
    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) -> bool {
        let l = lo.max(self.base_lb[j]);
        let u = hi.min(self.base_ub[j]);
        if l > u + PRIMAL_TOL {
            return false;
        }
        self.lb[j] = l;
        self.ub[j] = u.max(l);
        true
    }

    /// Re-seat nonbasic columns after bound changes and recompute basic values.
    pub(crate) fn refresh(&mut self) {
        self.recompute_duals();
        for j in 0..self.width {
            if !matches!(self.status[j], Status::Basic(_)) {
                let hint = self.d[j];
                self.place_nonbasic(j, hint);
            }
        }
        self.recompute_basics();
    }

    fn recompute_basics(&mut self) {
        for i in 0..self.m {
            let v: f64 = self.tab[i]
                .iter()
                .filter(|&&(j, _)| !matches!(self.status[j], Status::Basic(_)))
                .map(|&(j, t)| t * self.x[j])
                .sum();
            self.x[self.head[i]] = -v;
        }
    }

    fn recompute_duals(&mut self) {
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.head[i]];
            if cb != 0.0 {
                for &(j, t) in &self.tab[i] {
                    self.d[j] -= cb * t;
                }
            }
        }
        for i in 0..self.m {
            self.d[self.head[i]] = 0.0;
        }
    }

    /// Row operations making column `q` the unit vector of row `r`.
    fn eliminate(&mut self, r: usize, q: usize) {
        let piv = entry(&self.tab[r], q);
        self.scratch.clear();
        for &(j, v) in &self.tab[r] {
            let v = if j == q { 1.0 } else { v / piv };
            if v.abs() > DROP_TOL {
                self.scratch.push((j, v));
            }
        }
        self.tab[r].clone_from(&self.scratch);
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = entry(&self.tab[i], q);
            if f == 0.0 {
                continue;
            }
            // merged = row_i - f * pivot row, with column q cancelled exactly
            let row = &self.tab[i];
            let out = &mut self.merged;
            out.clear();
            let (mut a, mut b) = (0, 0);
            while a < row.len() || b < self.scratch.len() {
                let ja = row.get(a).map_or(usize::MAX, |e| e.0);
                let jb = self.scratch.get(b).map_or(usize::MAX, |e| e.0);
                let (j, t) = if ja < jb {
                    a += 1;
                    (ja, row[a - 1].1)
                } else if jb < ja {
                    b += 1;
                    (jb, -f * self.scratch[b - 1].1)
                } else {
                    a += 1;
                    b += 1;
                    (ja, row[a - 1].1 - f * self.scratch[b - 1].1)
                };
                if j != q && t.abs() >= DROP_TOL {
                    out.push((j, t));
                }
            }
            std::mem::swap(&mut self.tab[i], &mut self.merged);
        }
        let f = self.d[q];
        if f != 0.0 {
            for &(j, v) in &self.scratch {
                self.d[j] -= f * v;
            }
        }
        self.d[q] = 0.0;
    }

    /// Basis exchange; the caller settles the leaving column's status and value.
    fn pivot(&mut self, r: usize, q: usize) {
        let piv = entry(&self.tab[r], q);
        self.eliminate(r, q);
        self.since_refactor += 1;
        if piv.abs() < SMALL_PIVOT || self.since_refactor >= REFACTOR_EVERY {
            self.stale = true;
        }
        let leaving = self.head[r];
        self.head[r] = q;
        self.status[q] = Status::Basic(r);
        self.status[leaving] = Status::AtLower;
        self.iterations += 1;
    }

    /// Refactorize if due. `false` means the basis was singular and the
    /// all-logical basis replaced it.
    fn maintain(&mut self) -> bool {
        !self.stale || self.refactor()
    }

    /// Fill `col` with tableau column `q`.
    fn load_column(&mut self, q: usize) {
        for (c, row) in self.col.iter_mut().zip(&self.tab) {
            *c = entry(row, q);
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        (self.lb[j] - v).max(v - self.ub[j]).max(0.0)
    }

    pub(crate) fn objective_max(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    /// Objective in the model's own sense.
    pub(crate) fn objective(&self) -> f64 {
        self.obj_sign * self.objective_max()
    }

    pub(crate) fn point(&self) -> Vec<f64> {
        self.x[..self.n].to_vec()
    }

    pub(crate) fn value(&self, j: usize) -> f64 {
        self.x[j]
    }

    /// Largest row residual `|a_i x - r_i|` against the original rows.
    fn residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, row) in self.rows.iter().enumerate() {
            let act: f64 = row.iter().map(|&(j, a)| a * self.x[j]).sum();
            let scale = 1.0 + act.abs();
            worst = worst.max((act - self.x[self.n + i]).abs() / scale);
        }
        worst
    }

    fn primal_infeasible_basics(&self) -> bool {
        self.head.iter().any(|&j| self.infeasibility(j) > PRIMAL_TOL)
    }

    fn is_dual_feasible(&self) -> bool {
        (0..self.width).all(|j| match self.status[j] {
            Status::Basic(_) => true,
            _ if self.lb[j] == self.ub[j] => true,
            Status::AtLower => self.d[j] <= DUAL_TOL,
            Status::AtUpper => self.d[j] >= -DUAL_TOL,
            Status::Zero => self.d[j].abs() <= DUAL_TOL,
        })
    }

    fn bump_degeneracy(&mut self, step: f64) {
        if step.abs() <= PRIMAL_TOL {
            self.degenerate_streak += 1;
        } else {
            self.degenerate_streak = 0;
        }
    }

    fn bland(&self) -> bool {
        self.degenerate_streak >= BLAND_STREAK
    }

    fn check_limit(&self) -> Result<()> {
        if self.iterations > self.iter_limit {
            Err(Error::SolverFailure(format!(
                "iteration limit {} exceeded",
                self.iter_limit
            )))
        } else {
            Ok(())
        }
    }

    /// Entering column for the primal method given reduced costs `d`.
    fn price(&self, d: &[f64]) -> Option<(usize, f64)> {
        let bland = self.bland();
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.width {
            let dir = match self.status[j] {
                Status::Basic(_) => continue,
                _ if self.lb[j] == self.ub[j] => continue,
                Status::AtLower if d[j] > DUAL_TOL => 1.0,
                Status::AtUpper if d[j] < -DUAL_TOL => -1.0,
                Status::Zero if d[j].abs() > DUAL_TOL => d[j].signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = d[j].abs();
            if best.is_none_or(|(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Primal ratio test for entering `q` moving in direction `dir`.
    ///
    /// In phase 1 a basic column outside its box blocks only at the bound it
    /// is approaching. Expects column `q` in `col`.
    fn primal_ratio(&self, q: usize, dir: f64, phase1: bool) -> Option<(f64, Leaving)> {
        let bland = self.bland();
        let range = self.ub[q] - self.lb[q];
        // Harris pass 1 with relaxed bounds.
        let mut t_max = f64::INFINITY;
        let limit_of = |i: usize, relax: f64| -> Option<f64> {
            let alpha = -self.col[i] * dir;
            if alpha.abs() <= PIVOT_TOL {
                return None;
            }
            let j = self.head[i];
            let (v, l, u) = (self.x[j], self.lb[j], self.ub[j]);
            let below = v < l - PRIMAL_TOL;
            let above = v > u + PRIMAL_TOL;
            let target = if phase1 && below {
                (alpha > 0.0).then_some(l)
            } else if phase1 && above {
                (alpha < 0.0).then_some(u)
            } else if alpha > 0.0 {
                u.is_finite().then_some(u + relax)
            } else {
                l.is_finite().then_some(l - relax)
            }?;
            Some(((target - v) / alpha).max(0.0))
        };
        for i in 0..self.m {
            if let Some(t) = limit_of(i, PRIMAL_TOL) {
                t_max = t_max.min(t);
            }
        }
        let mut choice: Option<(usize, f64, f64)> = None;
        for i in 0..self.m {
            let Some(t) = limit_of(i, 0.0) else { continue };
            if t > t_max {
                continue;
            }
            let alpha = self.col[i].abs();
            let better = match choice {
                None => true,
                Some((ci, ct, ca)) => {
                    if bland {
                        t < ct - PRIMAL_TOL || (t <= ct + PRIMAL_TOL && self.head[i] < self.head[ci])
                    } else {
                        alpha > ca
                    }
                }
            };
            if better {
                choice = Some((i, t, alpha));
            }
        }
        match choice {
            Some((i, t, _)) if t <= range => Some((t, Leaving::Row(i))),
            _ if range.is_finite() => Some((range, Leaving::Flip)),
            Some((i, t, _)) => Some((t, Leaving::Row(i))),
            None => None,
        }
    }

    /// Move entering `q` by `step` in direction `dir` and update basics.
    /// Expects column `q` in `col`.
    fn apply_step(&mut self, q: usize, dir: f64, step: f64) {
        if step == 0.0 {
            return;
        }
        self.x[q] += dir * step;
        for i in 0..self.m {
            let t = self.col[i];
            if t != 0.0 {
                self.x[self.head[i]] -= t * dir * step;
            }
        }
    }

    /// Pivot `q` into row `r`, parking the leaving column on the bound it reached.
    fn enter(&mut self, r: usize, q: usize) {
        let leaving = self.head[r];
        let v = self.x[leaving];
        let (l, u) = (self.lb[leaving], self.ub[leaving]);
        self.pivot(r, q);
        let st = if !l.is_finite() && !u.is_finite() {
            Status::Zero
        } else if !u.is_finite() || (l.is_finite() && (v - l).abs() <= (v - u).abs()) {
            Status::AtLower
        } else {
            Status::AtUpper
        };
        self.status[leaving] = st;
        let parked = match st {
            Status::AtLower => l,
            Status::AtUpper => u,
            Status::Zero | Status::Basic(_) => 0.0,
        };
        // carry any snap to the bound through the basics
        let shift = parked - v;
        self.x[leaving] = parked;
        if shift != 0.0 {
            for i in 0..self.m {
                let t = entry(&self.tab[i], leaving);
                if t != 0.0 {
                    self.x[self.head[i]] -= t * shift;
                }
            }
        }
    }

    fn phase1_duals(&self) -> Vec<f64> {
        let w = self.width;
        let mut d = vec![0.0; w];
        for i in 0..self.m {
            let j = self.head[i];
            let v = self.x[j];
            let c = if v < self.lb[j] - PRIMAL_TOL {
                1.0
            } else if v > self.ub[j] + PRIMAL_TOL {
                -1.0
            } else {
                continue;
            };
            for &(k, t) in &self.tab[i] {
                d[k] -= c * t;
            }
        }
        for &j in &self.head {
            d[j] = 0.0;
        }
        d
    }

    /// Composite primal simplex from the current basis.
    pub(crate) fn primal(&mut self) -> Result<LpState> {
        if self.trivially_infeasible {
            return Ok(LpState::Infeasible);
        }
        self.degenerate_streak = 0;
        if self.run_phase1()? == LpState::Infeasible {
            return Ok(LpState::Infeasible);
        }
        self.degenerate_streak = 0;
        self.recompute_duals();
        loop {
            self.check_limit()?;
            let d = std::mem::take(&mut self.d);
            let entering = self.price(&d);
            self.d = d;
            let Some((q, dir)) = entering else {
                return Ok(LpState::Optimal);
            };
            self.load_column(q);
            let Some((step, leave)) = self.primal_ratio(q, dir, false) else {
                return Ok(LpState::Unbounded);
            };
            self.bump_degeneracy(step);
            self.apply_step(q, dir, step);
            match leave {
                Leaving::Flip => {
                    self.status[q] = if dir > 0.0 {
                        Status::AtUpper
                    } else {
                        Status::AtLower
                    };
                    self.x[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
                    self.iterations += 1;
                }
                Leaving::Row(r) => self.enter(r, q),
            }
            if !self.maintain() {
                return self.primal();
            }
        }
    }

    /// Phase 1 only: drive the basis to feasibility.
    pub(crate) fn run_phase1(&mut self) -> Result<LpState> {
        if self.trivially_infeasible {
            return Ok(LpState::Infeasible);
        }
        loop {
            self.check_limit()?;
            if !self.primal_infeasible_basics() {
                return Ok(LpState::Optimal);
            }
            let d = self.phase1_duals();
            let Some((q, dir)) = self.price(&d) else {
                return Ok(LpState::Infeasible);
            };
            self.load_column(q);
            let Some((step, leave)) = self.primal_ratio(q, dir, true) else {
                // The infeasibility sum can decrease without bound only if a
                // bug slipped in; phase 1 is bounded below by zero.
                return Err(Error::SolverFailure("unbounded phase-1 ray".into()));
            };
            self.bump_degeneracy(step);
            self.apply_step(q, dir, step);
            match leave {
                Leaving::Flip => {
                    self.status[q] = if dir > 0.0 {
                        Status::AtUpper
                    } else {
                        Status::AtLower
                    };
                    self.x[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
                    self.iterations += 1;
                }
                Leaving::Row(r) => self.enter(r, q),
            }
            self.maintain();
        }
    }

    /// Dual simplex from a dual feasible basis. Stops early with
    /// [`LpState::Cutoff`] once the objective (max form) is `<= cutoff`.
    fn dual(&mut self, cutoff: Option<f64>) -> Result<LpState> {
        self.degenerate_streak = 0;
        loop {
            self.check_limit()?;
            if let Some(c) = cutoff {
                if self.objective_max() <= c {
                    return Ok(LpState::Cutoff);
                }
            }
            let bland = self.bland();
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let inf = self.infeasibility(self.head[i]);
                if inf <= PRIMAL_TOL {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((li, linf)) => {
                        if bland {
                            self.head[i] < self.head[li]
                        } else {
                            inf > linf
                        }
                    }
                };
                if better {
                    leave = Some((i, inf));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(LpState::Optimal);
            };
            let jb = self.head[r];
            let (target, up) = if self.x[jb] < self.lb[jb] {
                (self.lb[jb], 1.0)
            } else {
                (self.ub[jb], -1.0)
            };

            // Harris two-pass dual ratio test.
            let row = &self.tab[r];
            let eligible = |j: usize, t: f64| -> Option<f64> {
                if t.abs() <= PIVOT_TOL || self.lb[j] == self.ub[j] {
                    return None;
                }
                let ok = match self.status[j] {
                    Status::Basic(_) => false,
                    Status::AtLower => -t * up > 0.0,
                    Status::AtUpper => t * up > 0.0,
                    Status::Zero => true,
                };
                ok.then_some(t.abs())
            };
            let mut ratio_max = f64::INFINITY;
            for &(j, t) in row {
                if let Some(a) = eligible(j, t) {
                    ratio_max = ratio_max.min((self.d[j].abs() + DUAL_TOL) / a);
                }
            }
            let mut choice: Option<(usize, f64, f64)> = None;
            for &(j, t) in row {
                let Some(a) = eligible(j, t) else { continue };
                let ratio = self.d[j].abs() / a;
                if ratio > ratio_max {
                    continue;
                }
                let better = match choice {
                    None => true,
                    Some((_, cr, ca)) => {
                        if bland {
                            ratio < cr - DUAL_TOL
                        } else {
                            a > ca
                        }
                    }
                };
                if better {
                    choice = Some((j, ratio, a));
                }
            }
            let Some((q, ratio, _)) = choice else {
                return Ok(LpState::Infeasible);
            };
            self.bump_degeneracy(ratio);

            let alpha = -entry(&self.tab[r], q);
            let theta = (target - self.x[jb]) / alpha;
            self.load_column(q);
            self.apply_step(q, 1.0, theta);
            self.x[jb] = target;
            self.enter(r, q);
            if !self.maintain() {
                return self.primal();
            }
        }
    }

    /// Solve from the current basis: dual simplex when it applies, primal
    /// otherwise. Checks the result against the original rows and
    /// refactorizes once if the tableau has drifted.
    pub(crate) fn reoptimize(&mut self, cutoff: Option<f64>) -> Result<LpState> {
        if self.trivially_infeasible {
            return Ok(LpState::Infeasible);
        }
        for attempt in 0..2 {
            let state = if self.is_dual_feasible() {
                self.dual(cutoff)?
            } else {
                self.primal()?
            };
            let settled = matches!(state, LpState::Unbounded | LpState::Cutoff);
            if settled || self.residual() <= RESIDUAL_TOL {
                return Ok(state);
            }
            if attempt == 0 {
                self.refactor();
            }
        }
        Err(Error::SolverFailure(format!(
            "row residual {:.3e} after refactorization",
            self.residual()
        )))
    }

    /// Cold solve with the primal method, refactorizing on drift.
    pub(crate) fn solve(&mut self) -> Result<LpState> {
        let state = self.primal()?;
        if state == LpState::Unbounded || self.residual() <= RESIDUAL_TOL {
            return Ok(state);
        }
        self.refactor();
        let state = self.primal()?;
        if state != LpState::Unbounded && self.residual() > RESIDUAL_TOL {
            return Err(Error::SolverFailure(format!(
                "row residual {:.3e} after refactorization",
                self.residual()
            )));
        }
        Ok(state)
    }

    /// Rebuild `B⁻¹ [A | -I]` from the original rows for the current basis.
    /// A singular basis falls back to the all-logical one.
    fn refactor(&mut self) -> bool {
        let (n, m) = (self.n, self.m);
        let basic: Vec<usize> = self.head.clone();
        self.tab = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut t = row.clone();
                t.push((n + i, -1.0));
                t
            })
            .collect();
        let mut assigned = vec![false; m];
        for &j in &basic {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..m {
                if assigned[i] {
                    continue;
                }
                let v = entry(&self.tab[i], j).abs();
                if v > 1e-11 && best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
            let Some((r, _)) = best else {
                log::warn!("singular basis on refactorization, restarting from logicals");
                self.slack_basis();
                return false;
            };
            assigned[r] = true;
            self.eliminate(r, j);
            self.head[r] = j;
            self.status[j] = Status::Basic(r);
        }
        self.recompute_duals();
        self.recompute_basics();
        self.since_refactor = 0;
        self.stale = false;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelBuilder, VarSpec};

    #[test]
    fn single_bounded_var() {
        let mut b = ModelBuilder::new(ObjSense::Max);
        let x = b.add_var(VarSpec::continuous("x", 0.0, 10.0));
        let y = b.add_var(VarSpec::continuous("y", 0.0, 10.0));
        b.add_constraint("c", [(x, 1.0), (y, 1.0)], RowSense::Le, 4.0);
        b.set_objective([(x, 2.0), (y, 1.0)]);
        let mut s = Simplex::new(&b.build());
        assert_eq!(s.solve().unwrap(), LpState::Optimal);
        assert!((s.objective() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn dual_reoptimize_after_bound_change() {
        let mut b = ModelBuilder::new(ObjSense::Max);
        let x = b.add_var(VarSpec::continuous("x", 0.0, 10.0));
        let y = b.add_var(VarSpec::continuous("y", 0.0, 10.0));
        b.add_constraint("c1", [(x, 1.0), (y, 1.0)], RowSense::Le, 4.0);
        b.add_constraint("c2", [(x, 1.0), (y, -1.0)], RowSense::Le, 1.0);
        b.set_objective([(x, 2.0), (y, 1.0)]);
        let mut s = Simplex::new(&b.build());
        assert_eq!(s.solve().unwrap(), LpState::Optimal);
        // x = 2.5, y = 1.5, obj 6.5
        assert!((s.objective() - 6.5).abs() < 1e-12);
        assert!(s.set_bounds(x, 0.0, 2.0));
        s.refresh();
        assert_eq!(s.reoptimize(None).unwrap(), LpState::Optimal);
        assert!((s.objective() - 6.0).abs() < 1e-12);
        assert!(s.set_bounds(x, 0.0, 10.0));
        assert!(s.set_bounds(y, 0.0, 1.0));
        s.refresh();
        assert_eq!(s.reoptimize(None).unwrap(), LpState::Optimal);
        // x - y <= 1 caps x at 2
        assert!((s.objective() - 5.0).abs() < 1e-12);
        assert!(s.set_bounds(x, 5.0, 10.0));
        s.refresh();
        assert_eq!(s.reoptimize(None).unwrap(), LpState::Infeasible);
    }

    #[test]
    fn refactor_reproduces_solution() {
        let mut b = ModelBuilder::new(ObjSense::Min);
        let x = b.add_var(VarSpec::continuous("x", 0.0, f64::INFINITY));
        let y = b.add_var(VarSpec::continuous("y", 0.0, f64::INFINITY));
        b.add_constraint("a", [(x, 1.0), (y, 2.0)], RowSense::Ge, 4.0);
        b.add_constraint("b", [(x, 3.0), (y, 1.0)], RowSense::Ge, 6.0);
        b.set_objective([(x, 1.0), (y, 1.0)]);
        let mut s = Simplex::new(&b.build());
        assert_eq!(s.solve().unwrap(), LpState::Optimal);
        let before = s.point();
        s.refactor();
        let after = s.point();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((s.objective() - 2.8).abs() < 1e-12);
    }
}
