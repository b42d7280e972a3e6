//! Continuous-time state-task-network scheduling instances.
//!
//! A task is instantiated once per suitable unit; these task-unit pairs are
//! the scheduling "tasks" of the MILP. Event points are numbered `1..=E`;
//! state amounts additionally carry an initial point `0`.
//!
//! Per event point the model has binaries `m(pair, n)` and `u(unit, n)`, and
//! continuous batch sizes `p(pair, n)`, sales `s(state, n)` (priced states
//! only), stock `sa(state, n)` and start/finish times `ts`, `tf`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::{Error, Result};
use crate::model::{MilpModel, ModelBuilder, ObjSense, RowSense, VarSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitData {
    pub name: String,
    #[serde(with = "decimal::real")]
    pub capacity: f64,
    /// Names of the tasks this unit can perform.
    pub tasks: Vec<String>,
    #[serde(with = "decimal::real")]
    pub mean_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateData {
    pub name: String,
    /// `inf` for unlimited storage.
    #[serde(with = "decimal::real")]
    pub storage: f64,
    #[serde(with = "decimal::real")]
    pub initial: f64,
    #[serde(with = "decimal::real")]
    pub price: f64,
}

/// Recipe of one task. Consumed proportions are stored negative so the
/// material balance adds both maps with a plus sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskData {
    pub name: String,
    #[serde(with = "state_map")]
    pub consumed: BTreeMap<String, f64>,
    #[serde(with = "state_map")]
    pub produced: BTreeMap<String, f64>,
}

mod state_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::decimal::{format_real, parse_real};

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        let out: BTreeMap<&String, String> = m.iter().map(|(k, v)| (k, format_real(*v))).collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| Ok((k, parse_real(&v).map_err(serde::de::Error::custom)?)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StnData {
    pub units: Vec<UnitData>,
    pub states: Vec<StateData>,
    pub tasks: Vec<TaskData>,
    /// Hours.
    #[serde(with = "decimal::real")]
    pub horizon: f64,
    pub events: usize,
}

/// A task instantiated on one unit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskUnit {
    pub task: String,
    pub unit: String,
}

impl TaskUnit {
    pub fn label(&self) -> String {
        format!("{}@{}", self.task, self.unit)
    }
}

fn unit(name: &str, capacity: f64, tasks: &[&str], mean_time: f64) -> UnitData {
    UnitData {
        name: name.into(),
        capacity,
        tasks: tasks.iter().map(|t| t.to_string()).collect(),
        mean_time,
    }
}

fn state(name: &str, storage: f64, initial: f64, price: f64) -> StateData {
    StateData {
        name: name.into(),
        storage,
        initial,
        price,
    }
}

fn task(name: &str, consumed: &[(&str, f64)], produced: &[(&str, f64)]) -> TaskData {
    TaskData {
        name: name.into(),
        consumed: consumed.iter().map(|(s, v)| (s.to_string(), -v)).collect(),
        produced: produced.iter().map(|(s, v)| (s.to_string(), *v)).collect(),
    }
}

impl StnData {
    /// The 8-unit, 9-state, 5-task batch plant.
    pub fn benchmark(events: usize, horizon: f64) -> StnData {
        let reactions = ["Reaction 1", "Reaction 2", "Reaction 3"];
        let inf = f64::INFINITY;
        StnData {
            units: vec![
                unit("Heater 1", 100.0, &["Heating"], 4.0),
                unit("Heater 2", 120.0, &["Heating"], 4.0),
                unit("Reactor 1", 70.0, &reactions, 4.0),
                unit("Reactor 2", 80.0, &reactions, 3.0),
                unit("Reactor 3", 70.0, &reactions, 4.0),
                unit("Reactor 4", 120.0, &reactions, 5.0),
                unit("Still 1", 200.0, &["Separation"], 5.0),
                unit("Still 2", 150.0, &["Separation"], 5.0),
            ],
            states: vec![
                state("Feed A", inf, 1000.0, 0.0),
                state("Feed B", inf, 800.0, 0.0),
                state("Feed C", inf, 800.0, 0.0),
                state("Hot A", 100.0, 0.0, 0.0),
                state("IntAB", 200.0, 0.0, 0.0),
                state("IntBC", 150.0, 0.0, 0.0),
                state("Impure E", 200.0, 0.0, 0.0),
                state("Product 1", inf, 0.0, 25.0),
                state("Product 2", inf, 0.0, 30.0),
            ],
            tasks: vec![
                task("Heating", &[("Feed A", 1.0)], &[("Hot A", 1.0)]),
                task(
                    "Reaction 1",
                    &[("Feed B", 0.5), ("Feed C", 0.5)],
                    &[("IntBC", 1.0)],
                ),
                task(
                    "Reaction 2",
                    &[("Hot A", 0.4), ("IntBC", 0.6)],
                    &[("IntAB", 0.6), ("Product 1", 0.4)],
                ),
                task(
                    "Reaction 3",
                    &[("Feed C", 0.2), ("IntAB", 0.8)],
                    &[("Impure E", 1.0)],
                ),
                task(
                    "Separation",
                    &[("Impure E", 1.0)],
                    &[("Product 2", 0.9), ("IntAB", 0.1)],
                ),
            ],
            horizon,
            events,
        }
    }

    /// Task-unit pairs: tasks in declaration order, then suitable units in
    /// declaration order.
    pub fn task_units(&self) -> Vec<TaskUnit> {
        let mut out = Vec::new();
        for t in &self.tasks {
            for u in &self.units {
                if u.tasks.contains(&t.name) {
                    out.push(TaskUnit {
                        task: t.name.clone(),
                        unit: u.name.clone(),
                    });
                }
            }
        }
        out
    }

    /// Binary count `(pairs + units) * events`.
    pub fn num_binaries(&self) -> usize {
        (self.task_units().len() + self.units.len()) * self.events
    }

    fn unit_data(&self, name: &str) -> Option<&UnitData> {
        self.units.iter().find(|u| u.name == name)
    }

    /// Invariant violations, empty when the data is usable.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        for u in &self.units {
            if !(u.capacity >= 0.0) || !(u.mean_time >= 0.0) {
                out.push(format!("unit {}: negative capacity or time", u.name));
            }
            for t in &u.tasks {
                if !self.tasks.iter().any(|x| &x.name == t) {
                    out.push(format!("unit {} lists unknown task {t}", u.name));
                }
            }
        }
        for s in &self.states {
            if !(s.storage >= 0.0) || !(s.initial >= 0.0) || !(s.price >= 0.0) {
                out.push(format!("state {}: negative storage, amount or price", s.name));
            }
        }
        for t in &self.tasks {
            let c: f64 = t.consumed.values().map(|v| v.abs()).sum();
            let p: f64 = t.produced.values().sum();
            if (c - 1.0).abs() > 1e-9 || (p - 1.0).abs() > 1e-9 {
                out.push(format!("task {}: proportions sum to {c} in, {p} out", t.name));
            }
            if t.consumed.values().any(|&v| v > 0.0) {
                out.push(format!("task {}: consumed proportions must be negative", t.name));
            }
            for s in t.consumed.keys().chain(t.produced.keys()) {
                if !self.states.iter().any(|x| &x.name == s) {
                    out.push(format!("task {} references unknown state {s}", t.name));
                }
            }
            if !self.units.iter().any(|u| u.tasks.contains(&t.name)) {
                out.push(format!("task {} has no suitable unit", t.name));
            }
        }
        if !(self.horizon > 0.0) {
            out.push("horizon must be positive".into());
        }
        if self.events == 0 {
            out.push("at least one event point is required".into());
        }
        out
    }
}

/// The perturbable parameters: processing-time terms per task-unit pair
/// and prices of sellable states.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulingTheta {
    pub tc: BTreeMap<TaskUnit, f64>,
    pub tv: BTreeMap<TaskUnit, f64>,
    pub price: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct PairEntry {
    task: String,
    unit: String,
    #[serde(with = "decimal::real")]
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct PriceEntry {
    state: String,
    #[serde(with = "decimal::real")]
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct ThetaDoc {
    tc: Vec<PairEntry>,
    tv: Vec<PairEntry>,
    price: Vec<PriceEntry>,
}

impl Serialize for SchedulingTheta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs = |m: &BTreeMap<TaskUnit, f64>| {
            m.iter()
                .map(|(k, &value)| PairEntry {
                    task: k.task.clone(),
                    unit: k.unit.clone(),
                    value,
                })
                .collect()
        };
        ThetaDoc {
            tc: pairs(&self.tc),
            tv: pairs(&self.tv),
            price: self
                .price
                .iter()
                .map(|(k, &value)| PriceEntry {
                    state: k.clone(),
                    value,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SchedulingTheta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = ThetaDoc::deserialize(d)?;
        let pairs = |v: Vec<PairEntry>| {
            v.into_iter()
                .map(|e| {
                    (
                        TaskUnit {
                            task: e.task,
                            unit: e.unit,
                        },
                        e.value,
                    )
                })
                .collect()
        };
        Ok(SchedulingTheta {
            tc: pairs(doc.tc),
            tv: pairs(doc.tv),
            price: doc.price.into_iter().map(|e| (e.state, e.value)).collect(),
        })
    }
}

/// Multiplicative perturbation level and its seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub level: f64,
    pub seed: u64,
}

/// Split each unit's mean processing time into a constant two thirds and
/// a per-material-unit third spread over the unit's capacity.
pub fn nominal_theta(data: &StnData) -> SchedulingTheta {
    let mut tc = BTreeMap::new();
    let mut tv = BTreeMap::new();
    for pair in data.task_units() {
        let u = data.unit_data(&pair.unit).expect("pair built from data");
        let constant = 2.0 / 3.0 * u.mean_time;
        let variable = if u.capacity > 0.0 {
            u.mean_time / 3.0 / u.capacity
        } else {
            0.0
        };
        tc.insert(pair.clone(), constant);
        tv.insert(pair, variable);
    }
    let price = data
        .states
        .iter()
        .filter(|s| s.price != 0.0)
        .map(|s| (s.name.clone(), s.price))
        .collect();
    SchedulingTheta { tc, tv, price }
}

/// Scale every entry by an independent factor drawn uniformly from
/// `[1 - level, 1 + level]`.
pub fn perturb_theta(theta: &SchedulingTheta, spec: &PerturbSpec) -> SchedulingTheta {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut factor = || {
        if spec.level == 0.0 {
            1.0
        } else {
            rng.gen_range(1.0 - spec.level..=1.0 + spec.level)
        }
    };
    let mut out = theta.clone();
    for v in out.tc.values_mut() {
        *v *= factor();
    }
    for v in out.tv.values_mut() {
        *v *= factor();
    }
    for v in out.price.values_mut() {
        *v *= factor();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinaryKind {
    TaskStart,
    UnitUse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryEntry {
    pub kind: BinaryKind,
    /// Task-unit label (`task@unit`) or unit name.
    pub id: String,
    pub event: usize,
    /// Column of this binary in the built model.
    pub var: usize,
}

/// Position of each scheduling binary in the learned vector: event point
/// major, then task starts in pair order, then unit uses in unit order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryIndex {
    pub entries: Vec<BinaryEntry>,
}

impl BinaryIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vars(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.var).collect()
    }

    /// Read the binary vector out of a model assignment.
    pub fn extract(&self, point: &[f64]) -> Vec<u8> {
        self.entries
            .iter()
            .map(|e| u8::from(point[e.var] > 0.5))
            .collect()
    }

    /// Same positions, kinds and ids (column numbers may differ).
    pub fn same_layout(&self, other: &BinaryIndex) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.kind == b.kind && a.id == b.id && a.event == b.event)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Add the variable processing-time term as a constant instead of
    /// scaling it by batch size.
    pub literal_a8: bool,
}

/// Instantiate the scheduling MILP for `theta`.
pub fn build_instance(
    data: &StnData,
    theta: &SchedulingTheta,
    opts: BuildOptions,
) -> Result<(MilpModel, BinaryIndex)> {
    let issues = data.check();
    if let Some(first) = issues.first() {
        return Err(Error::Build(first.clone()));
    }
    let pairs = data.task_units();
    for p in &pairs {
        if !theta.tc.contains_key(p) || !theta.tv.contains_key(p) {
            return Err(Error::Build(format!("theta lacks times for {}", p.label())));
        }
    }
    if theta.tc.len() != pairs.len() || theta.tv.len() != pairs.len() {
        return Err(Error::Build("theta has times for unknown task-unit pairs".into()));
    }
    let sellable: Vec<&StateData> = data.states.iter().filter(|s| s.price != 0.0).collect();
    for s in &sellable {
        if !theta.price.contains_key(&s.name) {
            return Err(Error::Build(format!("theta lacks a price for {}", s.name)));
        }
    }
    if theta.price.len() != sellable.len() {
        return Err(Error::Build("theta prices unknown states".into()));
    }

    let e = data.events;
    let h = data.horizon;
    let np = pairs.len();
    let nu = data.units.len();
    let ns = data.states.len();
    let unit_pos = |name: &str| data.units.iter().position(|u| u.name == name).unwrap();
    let state_pos = |name: &str| data.states.iter().position(|s| s.name == name).unwrap();
    let task_data = |name: &str| data.tasks.iter().find(|t| t.name == name).unwrap();
    let pair_unit: Vec<usize> = pairs.iter().map(|p| unit_pos(&p.unit)).collect();
    let capacity: Vec<f64> = pair_unit.iter().map(|&j| data.units[j].capacity).collect();

    let mut b = ModelBuilder::new(ObjSense::Max);
    let mut entries = Vec::with_capacity((np + nu) * e);

    // Columns, indexed [event][...] with event 0 used only by `sa`.
    let mut m = vec![vec![0usize; np]; e + 1];
    let mut u = vec![vec![0usize; nu]; e + 1];
    let mut p = vec![vec![0usize; np]; e + 1];
    let mut ts = vec![vec![0usize; np]; e + 1];
    let mut tf = vec![vec![0usize; np]; e + 1];
    let mut sa = vec![vec![0usize; ns]; e + 1];
    let mut sales: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); e + 1];

    for (k, s) in data.states.iter().enumerate() {
        sa[0][k] = b.add_var(VarSpec::continuous(
            format!("sa[{},0]", s.name),
            0.0,
            f64::INFINITY,
        ));
    }
    for n in 1..=e {
        for (i, pair) in pairs.iter().enumerate() {
            m[n][i] = b.add_var(VarSpec::binary(format!("m[{},{n}]", pair.label())));
            entries.push(BinaryEntry {
                kind: BinaryKind::TaskStart,
                id: pair.label(),
                event: n,
                var: m[n][i],
            });
        }
        for (j, unit) in data.units.iter().enumerate() {
            u[n][j] = b.add_var(VarSpec::binary(format!("u[{},{n}]", unit.name)));
            entries.push(BinaryEntry {
                kind: BinaryKind::UnitUse,
                id: unit.name.clone(),
                event: n,
                var: u[n][j],
            });
        }
        for (i, pair) in pairs.iter().enumerate() {
            let l = pair.label();
            p[n][i] = b.add_var(VarSpec::continuous(format!("p[{l},{n}]"), 0.0, f64::INFINITY));
            ts[n][i] = b.add_var(VarSpec::continuous(format!("ts[{l},{n}]"), 0.0, f64::INFINITY));
            tf[n][i] = b.add_var(VarSpec::continuous(format!("tf[{l},{n}]"), 0.0, f64::INFINITY));
        }
        for (k, s) in data.states.iter().enumerate() {
            sa[n][k] = b.add_var(VarSpec::continuous(
                format!("sa[{},{n}]", s.name),
                0.0,
                f64::INFINITY,
            ));
            if s.price != 0.0 {
                let v = b.add_var(VarSpec::continuous(
                    format!("s[{},{n}]", s.name),
                    0.0,
                    f64::INFINITY,
                ));
                sales[n].insert(k, v);
            }
        }
    }

    // objective: total sales revenue
    let mut obj = Vec::new();
    for n in 1..=e {
        for (&k, &v) in &sales[n] {
            obj.push((v, theta.price[&data.states[k].name]));
        }
    }
    b.set_objective(obj);

    // each unit performs at most the one task it is allocated
    for n in 1..=e {
        for j in 0..nu {
            let mut terms: Vec<(usize, f64)> = (0..np)
                .filter(|&i| pair_unit[i] == j)
                .map(|i| (m[n][i], 1.0))
                .collect();
            terms.push((u[n][j], -1.0));
            b.add_constraint(
                format!("allocation[{},{n}]", data.units[j].name),
                terms,
                RowSense::Eq,
                0.0,
            );
        }
    }

    for (k, s) in data.states.iter().enumerate() {
        b.add_constraint(
            format!("init[{}]", s.name),
            [(sa[0][k], 1.0)],
            RowSense::Eq,
            s.initial,
        );
    }

    for n in 1..=e {
        // batch bounded by the stock of every consumed state
        for (i, pair) in pairs.iter().enumerate() {
            for st in task_data(&pair.task).consumed.keys() {
                let k = state_pos(st);
                b.add_constraint(
                    format!("quantity[{},{st},{n}]", pair.label()),
                    [(p[n][i], 1.0), (sa[n][k], -1.0)],
                    RowSense::Le,
                    0.0,
                );
            }
        }
        for i in 0..np {
            b.add_constraint(
                format!("capacity[{},{n}]", pairs[i].label()),
                [(p[n][i], 1.0), (m[n][i], -capacity[i])],
                RowSense::Le,
                0.0,
            );
        }
        for (k, s) in data.states.iter().enumerate() {
            if s.storage.is_finite() {
                b.add_constraint(
                    format!("storage[{},{n}]", s.name),
                    [(sa[n][k], 1.0)],
                    RowSense::Le,
                    s.storage,
                );
            }
        }
        // sa(n) - sa(n-1) + s(n) - Σ Pp p(n-1) - Σ Pc p(n) = 0
        for (k, s) in data.states.iter().enumerate() {
            let mut terms = vec![(sa[n][k], 1.0), (sa[n - 1][k], -1.0)];
            if let Some(&v) = sales[n].get(&k) {
                terms.push((v, 1.0));
            }
            for (i, pair) in pairs.iter().enumerate() {
                let t = task_data(&pair.task);
                if n >= 2 {
                    if let Some(&pp) = t.produced.get(&s.name) {
                        terms.push((p[n - 1][i], -pp));
                    }
                }
                if let Some(&pc) = t.consumed.get(&s.name) {
                    terms.push((p[n][i], -pc));
                }
            }
            b.add_constraint(format!("material[{},{n}]", s.name), terms, RowSense::Eq, 0.0);
        }
        for (i, pair) in pairs.iter().enumerate() {
            let tc = theta.tc[pair];
            let tv = theta.tv[pair];
            let tag = format!("duration[{},{n}]", pair.label());
            if opts.literal_a8 {
                b.add_constraint(
                    tag,
                    [(tf[n][i], 1.0), (ts[n][i], -1.0), (m[n][i], -tc)],
                    RowSense::Eq,
                    tv,
                );
            } else {
                b.add_constraint(
                    tag,
                    [(tf[n][i], 1.0), (ts[n][i], -1.0), (m[n][i], -tc), (p[n][i], -tv)],
                    RowSense::Eq,
                    0.0,
                );
            }
        }
    }

    for n in 1..e {
        for i in 0..np {
            let j = pair_unit[i];
            let l = pairs[i].label();
            b.add_constraint(
                format!("seq_same[{l},{n}]"),
                [
                    (ts[n + 1][i], 1.0),
                    (tf[n][i], -1.0),
                    (m[n][i], -h),
                    (u[n][j], -h),
                ],
                RowSense::Ge,
                -2.0 * h,
            );
            b.add_constraint(
                format!("seq_start[{l},{n}]"),
                [(ts[n + 1][i], 1.0), (ts[n][i], -1.0)],
                RowSense::Ge,
                0.0,
            );
            b.add_constraint(
                format!("seq_finish[{l},{n}]"),
                [(tf[n + 1][i], 1.0), (tf[n][i], -1.0)],
                RowSense::Ge,
                0.0,
            );
        }
        for i in 0..np {
            for k in 0..np {
                if i == k {
                    continue;
                }
                let (j, jk) = (pair_unit[i], pair_unit[k]);
                let kind = if j == jk { "seq_unit" } else { "seq_cross" };
                b.add_constraint(
                    format!("{kind}[{},{},{n}]", pairs[i].label(), pairs[k].label()),
                    [
                        (ts[n + 1][i], 1.0),
                        (tf[n][k], -1.0),
                        (m[n][k], -h),
                        (u[n][jk], -h),
                    ],
                    RowSense::Ge,
                    -2.0 * h,
                );
            }
        }
        // start after the accumulated busy time of the unit
        for i in 0..np {
            let j = pair_unit[i];
            let mut terms = vec![(ts[n + 1][i], 1.0)];
            for nn in 1..=n {
                for k in (0..np).filter(|&k| pair_unit[k] == j) {
                    terms.push((tf[nn][k], -1.0));
                    terms.push((ts[nn][k], 1.0));
                }
            }
            b.add_constraint(
                format!("seq_busy[{},{n}]", pairs[i].label()),
                terms,
                RowSense::Ge,
                0.0,
            );
        }
    }

    for n in 1..=e {
        for i in 0..np {
            let l = pairs[i].label();
            b.add_constraint(
                format!("horizon_finish[{l},{n}]"),
                [(tf[n][i], 1.0)],
                RowSense::Le,
                h,
            );
            b.add_constraint(
                format!("horizon_start[{l},{n}]"),
                [(ts[n][i], 1.0)],
                RowSense::Le,
                h,
            );
        }
    }

    let model = b.build();
    debug_assert_eq!(
        model.binary_index(),
        entries.iter().map(|e| e.var).collect::<Vec<_>>()
    );
    Ok((model, BinaryIndex { entries }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_has_sixteen_pairs() {
        let d = StnData::benchmark(9, 8.0);
        assert!(d.check().is_empty());
        assert_eq!(d.task_units().len(), 16);
        assert_eq!(d.num_binaries(), 216);
    }

    #[test]
    fn heater_split() {
        let d = StnData::benchmark(4, 8.0);
        let th = nominal_theta(&d);
        let key = TaskUnit {
            task: "Heating".into(),
            unit: "Heater 1".into(),
        };
        assert!((th.tc[&key] - 8.0 / 3.0).abs() < 1e-15);
        assert!((th.tv[&key] - 4.0 / 3.0 / 100.0).abs() < 1e-15);
        assert_eq!(th.price["Product 2"], 30.0);
        assert_eq!(th.price["Product 1"], 25.0);
        assert_eq!(th.price.len(), 2);
    }

    #[test]
    fn zero_mean_time_gives_zero_terms() {
        let mut d = StnData::benchmark(2, 8.0);
        d.units[0].mean_time = 0.0;
        let th = nominal_theta(&d);
        let key = TaskUnit {
            task: "Heating".into(),
            unit: "Heater 1".into(),
        };
        assert_eq!(th.tc[&key], 0.0);
        assert_eq!(th.tv[&key], 0.0);
    }

    #[test]
    fn perturbation_ratios_within_level() {
        let d = StnData::benchmark(4, 8.0);
        let th = nominal_theta(&d);
        for level in [0.05, 0.10, 0.20] {
            let out = perturb_theta(&th, &PerturbSpec { level, seed: 11 });
            let ratios = out
                .tc
                .iter()
                .map(|(k, v)| v / th.tc[k])
                .chain(out.tv.iter().map(|(k, v)| v / th.tv[k]))
                .chain(out.price.iter().map(|(k, v)| v / th.price[k]));
            for r in ratios {
                assert!(r >= 1.0 - level - 1e-12 && r <= 1.0 + level + 1e-12);
            }
        }
    }

    #[test]
    fn zero_level_is_identity() {
        let th = nominal_theta(&StnData::benchmark(4, 8.0));
        assert_eq!(perturb_theta(&th, &PerturbSpec { level: 0.0, seed: 5 }), th);
    }

    #[test]
    fn perturbation_is_seeded() {
        let th = nominal_theta(&StnData::benchmark(4, 8.0));
        let a = perturb_theta(&th, &PerturbSpec { level: 0.1, seed: 1 });
        let b = perturb_theta(&th, &PerturbSpec { level: 0.1, seed: 1 });
        let c = perturb_theta(&th, &PerturbSpec { level: 0.1, seed: 2 });
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn binary_layout() {
        let d = StnData::benchmark(3, 8.0);
        let (model, idx) = build_instance(&d, &nominal_theta(&d), BuildOptions::default()).unwrap();
        assert_eq!(idx.len(), 72);
        assert_eq!(model.binary_index(), idx.vars().as_slice());
        assert_eq!(idx.entries[0].kind, BinaryKind::TaskStart);
        assert_eq!(idx.entries[0].id, "Heating@Heater 1");
        assert_eq!(idx.entries[16].kind, BinaryKind::UnitUse);
        assert_eq!(idx.entries[16].id, "Heater 1");
        assert_eq!(idx.entries[24].event, 2);
        assert!(crate::model::validate(&model).is_empty());
    }

    #[test]
    fn missing_unit_is_a_build_error() {
        let mut d = StnData::benchmark(2, 8.0);
        let th = nominal_theta(&d);
        for u in &mut d.units {
            u.tasks.retain(|t| t != "Separation");
        }
        assert!(matches!(
            build_instance(&d, &th, BuildOptions::default()),
            Err(Error::Build(_))
        ));
    }

    #[test]
    fn theta_key_mismatch() {
        let d = StnData::benchmark(2, 8.0);
        let mut th = nominal_theta(&d);
        th.price.remove("Product 1");
        assert!(build_instance(&d, &th, BuildOptions::default()).is_err());
    }

    #[test]
    fn theta_json_round_trip() {
        let th = perturb_theta(
            &nominal_theta(&StnData::benchmark(4, 8.0)),
            &PerturbSpec { level: 0.2, seed: 3 },
        );
        let text = serde_json::to_string(&th).unwrap();
        let back: SchedulingTheta = serde_json::from_str(&text).unwrap();
        assert_eq!(back, th);
    }

    #[test]
    fn data_json_round_trip() {
        let d = StnData::benchmark(5, 7.5);
        let text = serde_json::to_string_pretty(&d).unwrap();
        assert!(text.contains("\"inf\""));
        let back: StnData = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
    }
}
