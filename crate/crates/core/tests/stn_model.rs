use std::collections::BTreeMap;

use proptest::prelude::*;

use tightmip::model::{evaluate, MilpModel};
use tightmip::stn::{
    build_instance, nominal_theta, perturb_theta, BinaryIndex, BinaryKind, BuildOptions, PerturbSpec,
    StateData, StnData, TaskData, UnitData,
};
use tightmip::{solve_milp, MilpStatus, SolveConfig};

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
    let map = |xs: &[(&str, f64)], sign: f64| -> BTreeMap<String, f64> {
        xs.iter().map(|&(s, v)| (s.to_string(), sign * v)).collect()
    };
    TaskData {
        name: name.into(),
        consumed: map(consumed, -1.0),
        produced: map(produced, 1.0),
    }
}

fn var_index(model: &MilpModel, name: &str) -> usize {
    model
        .vars()
        .iter()
        .position(|v| v.name == name)
        .unwrap_or_else(|| panic!("no variable {name}"))
}

/// Σ m(i, n) over the unit's pairs equals u(j, n), read off the point.
fn allocation_holds(data: &StnData, index: &BinaryIndex, point: &[f64]) -> bool {
    let value = |kind: BinaryKind, id: &str, n: usize| {
        index
            .entries
            .iter()
            .find(|e| e.kind == kind && e.id == id && e.event == n)
            .map(|e| point[e.var].round())
            .expect("binary present")
    };
    (1..=data.events).all(|n| {
        data.units.iter().all(|u| {
            let starts: f64 = data
                .task_units()
                .iter()
                .filter(|p| p.unit == u.name)
                .map(|p| value(BinaryKind::TaskStart, &p.label(), n))
                .sum();
            starts <= 1.0 && starts == value(BinaryKind::UnitUse, &u.name, n)
        })
    })
}

fn storage_holds(data: &StnData, model: &MilpModel, point: &[f64]) -> bool {
    data.states.iter().all(|s| {
        (0..=data.events).all(|n| {
            let v = point[var_index(model, &format!("sa[{},{n}]", s.name))];
            v >= -1e-6 && v <= s.storage + 1e-6
        })
    })
}

#[test]
fn nothing_sellable_means_zero_objective() {
    let data = StnData {
        units: vec![unit("Heater 1", 100.0, &["Heating"], 4.0)],
        states: vec![
            state("Feed A", f64::INFINITY, 1000.0, 0.0),
            state("Hot A", 100.0, 0.0, 0.0),
        ],
        tasks: vec![task("Heating", &[("Feed A", 1.0)], &[("Hot A", 1.0)])],
        horizon: 8.0,
        events: 1,
    };
    assert!(data.check().is_empty());
    let (model, index) = build_instance(&data, &nominal_theta(&data), BuildOptions::default()).unwrap();
    assert_eq!(index.len(), 2);
    let out = solve_milp(&model, &SolveConfig::default()).unwrap();
    assert_eq!(out.status, MilpStatus::Optimal);
    assert_eq!(out.objective, 0.0);
}

fn reduced() -> StnData {
    StnData {
        units: vec![
            unit("Heater", 100.0, &["Heating"], 2.0),
            unit("Reactor", 80.0, &["Reaction"], 3.0),
        ],
        states: vec![
            state("Feed", f64::INFINITY, 500.0, 0.0),
            state("Hot", 100.0, 0.0, 0.0),
            state("Product", f64::INFINITY, 0.0, 10.0),
        ],
        tasks: vec![
            task("Heating", &[("Feed", 1.0)], &[("Hot", 1.0)]),
            task("Reaction", &[("Hot", 1.0)], &[("Product", 1.0)]),
        ],
        horizon: 8.0,
        events: 3,
    }
}

#[test]
fn reduced_instance_solves_to_a_valid_schedule() {
    let data = reduced();
    assert!(data.check().is_empty());
    let (model, index) = build_instance(&data, &nominal_theta(&data), BuildOptions::default()).unwrap();
    assert_eq!(index.len(), (2 + 2) * 3);
    let out = solve_milp(&model, &SolveConfig::default()).unwrap();
    assert_eq!(out.status, MilpStatus::Optimal);
    assert!(evaluate(&model, &out.point, 1e-6).unwrap().feasible);
    assert!(allocation_holds(&data, &index, &out.point));
    assert!(storage_holds(&data, &model, &out.point));
    // the reactor must run at least once for anything to be sold
    assert!(out.objective > 0.0);
    assert!(out.objective <= 10.0 * 80.0 * 3.0 + 1e-6);
}

#[test]
fn rebuilding_is_exact() {
    let data = StnData::benchmark(3, 8.0);
    let theta = perturb_theta(&nominal_theta(&data), &PerturbSpec { level: 0.1, seed: 5 });
    let (a, ia) = build_instance(&data, &theta, BuildOptions::default()).unwrap();
    let (b, ib) = build_instance(&data, &theta, BuildOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(ia, ib);
}

#[test]
fn literal_processing_time_changes_only_duration_rows() {
    let data = StnData::benchmark(2, 8.0);
    let theta = nominal_theta(&data);
    let (a, _) = build_instance(&data, &theta, BuildOptions::default()).unwrap();
    let (b, _) = build_instance(&data, &theta, BuildOptions { literal_a8: true }).unwrap();
    assert_eq!(a.num_constraints(), b.num_constraints());
    for (x, y) in a.constraints().iter().zip(b.constraints()) {
        if x != y {
            assert!(x.tag.starts_with("duration["), "{} differs", x.tag);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn optimal_schedules_respect_allocation_and_storage(seed in 0u64..100_000) {
        let data = StnData::benchmark(2, 8.0);
        let theta = perturb_theta(&nominal_theta(&data), &PerturbSpec { level: 0.2, seed });
        let (model, index) = build_instance(&data, &theta, BuildOptions::default()).unwrap();
        prop_assert_eq!(index.len(), data.num_binaries());
        let out = solve_milp(&model, &SolveConfig::default()).unwrap();
        prop_assert_eq!(out.status, MilpStatus::Optimal);
        prop_assert!(evaluate(&model, &out.point, 1e-6).unwrap().feasible);
        prop_assert!(allocation_holds(&data, &index, &out.point));
        prop_assert!(storage_holds(&data, &model, &out.point));
    }

    #[test]
    fn binary_count_formula(events in 1usize..12) {
        let data = StnData::benchmark(events, 8.0);
        let (_, index) = build_instance(&data, &nominal_theta(&data), BuildOptions::default()).unwrap();
        prop_assert_eq!(index.len(), (16 + 8) * events);
    }
}
