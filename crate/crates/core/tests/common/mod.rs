//! Random instance generators and brute-force oracles shared by the
//! integration tests. Nothing here calls into the branch-and-bound code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tightmip::model::{MilpModel, ModelBuilder, ObjSense, RowSense, VarSpec};
use tightmip::{solve_lp, LpStatus};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Bounded LP in `[0, 10]^n` with `m` random rows, all satisfied by a
/// random interior point.
pub fn random_lp(seed: u64, n: usize, m: usize) -> MilpModel {
    let mut r = rng(seed);
    let mut b = ModelBuilder::new(if r.gen_bool(0.5) {
        ObjSense::Max
    } else {
        ObjSense::Min
    });
    let x0: Vec<f64> = (0..n).map(|_| r.gen_range(1.0..9.0)).collect();
    for k in 0..n {
        b.add_var(VarSpec::continuous(format!("x{k}"), 0.0, 10.0));
    }
    for i in 0..m {
        let mut terms = Vec::new();
        for j in 0..n {
            if r.gen_bool(0.7) {
                terms.push((j, r.gen_range(-5i32..=5) as f64));
            }
        }
        let act: f64 = terms.iter().map(|&(j, a)| a * x0[j]).sum();
        let slack = r.gen_range(0.0..6.0);
        if r.gen_bool(0.5) {
            b.add_constraint(format!("r{i}"), terms, RowSense::Le, (act + slack).round());
        } else {
            b.add_constraint(format!("r{i}"), terms, RowSense::Ge, (act - slack).round());
        }
    }
    b.set_objective((0..n).map(|j| (j, r.gen_range(-3i32..=3) as f64)));
    b.build()
}

/// Mixed-binary program with `nb` binaries, `nc` continuous in `[-5, 5]`
/// and `m` rows. About one in five instances is likely infeasible.
pub fn random_milp(seed: u64, nb: usize, nc: usize, m: usize) -> MilpModel {
    let mut r = rng(seed);
    let sense = if r.gen_bool(0.5) {
        ObjSense::Max
    } else {
        ObjSense::Min
    };
    let mut b = ModelBuilder::new(sense);
    let u0: Vec<f64> = (0..nb).map(|_| if r.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
    let x0: Vec<f64> = (0..nc).map(|_| r.gen_range(-4.0..4.0)).collect();
    for k in 0..nb {
        b.add_var(VarSpec::binary(format!("u{k}")));
    }
    for k in 0..nc {
        b.add_var(VarSpec::continuous(format!("x{k}"), -5.0, 5.0));
    }
    let point: Vec<f64> = u0.iter().chain(&x0).copied().collect();
    let tight = r.gen_bool(0.2);
    for i in 0..m {
        let mut terms = Vec::new();
        for j in 0..nb + nc {
            if r.gen_bool(0.5) {
                terms.push((j, r.gen_range(-6i32..=6) as f64));
            }
        }
        let act: f64 = terms.iter().map(|&(j, a)| a * point[j]).sum();
        let slack = if tight {
            r.gen_range(-3.0..2.0)
        } else {
            r.gen_range(0.0..4.0)
        };
        match r.gen_range(0..10) {
            0 if nc > 0 => {
                b.add_constraint(format!("e{i}"), terms, RowSense::Eq, act);
            }
            1..=4 => {
                b.add_constraint(format!("l{i}"), terms, RowSense::Le, act + slack);
            }
            _ => {
                b.add_constraint(format!("g{i}"), terms, RowSense::Ge, act - slack);
            }
        }
    }
    b.set_objective((0..nb + nc).map(|j| (j, r.gen_range(-10i32..=10) as f64)));
    b.build()
}

/// Solve a dense square system by Gaussian elimination with partial pivoting.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &k| a[i][col].abs().total_cmp(&a[k][col].abs()))?;
        if a[p][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, p);
        rhs.swap(col, p);
        for i in 0..n {
            if i != col {
                let f = a[i][col] / a[col][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (x, y) in a[i][col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * y;
                    }
                    rhs[i] -= f * rhs[col];
                }
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if acc.len() == k {
            f(acc);
            return;
        }
        for i in start..n {
            if n - i < k - acc.len() {
                break;
            }
            acc.push(i);
            go(i + 1, n, k, acc, f);
            acc.pop();
        }
    }
    go(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Optimum of a bounded, continuous LP by enumerating every basic point:
/// all square subsystems of (rows ∪ bound hyperplanes). `None` if no
/// vertex is feasible.
pub fn vertex_oracle(model: &MilpModel) -> Option<f64> {
    let n = model.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in model.constraints() {
        let mut a = vec![0.0; n];
        for &(j, v) in &c.coeffs {
            a[j] = v;
        }
        planes.push((a, c.rhs));
    }
    for (j, v) in model.vars().iter().enumerate() {
        for bound in [v.lower, v.upper] {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            planes.push((a, bound));
        }
    }
    let feasible = |x: &[f64]| {
        model
            .vars()
            .iter()
            .zip(x)
            .all(|(v, &xj)| xj >= v.lower - 1e-7 && xj <= v.upper + 1e-7)
            && model
                .constraints()
                .iter()
                .all(|c| c.violation(c.activity(x)) <= 1e-7)
    };
    let max = model.sense() == ObjSense::Max;
    let mut best: Option<f64> = None;
    combinations(planes.len(), n, &mut |sel: &[usize]| {
        let a: Vec<Vec<f64>> = sel.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = sel.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let z = model.objective_value(&x);
                best = Some(match best {
                    None => z,
                    Some(v) if max => v.max(z),
                    Some(v) => v.min(z),
                });
            }
        }
    });
    best
}

/// Optimum of a mixed-binary program by fixing every binary vector and
/// solving the continuous remainder as an LP.
pub fn enumeration_oracle(model: &MilpModel) -> Option<f64> {
    let bins = model.binary_index().to_vec();
    let max = model.sense() == ObjSense::Max;
    let mut best: Option<f64> = None;
    for mask in 0u32..(1u32 << bins.len()) {
        let fix: Vec<(usize, f64, f64)> = bins
            .iter()
            .enumerate()
            .map(|(k, &j)| {
                let v = ((mask >> k) & 1) as f64;
                (j, v, v)
            })
            .collect();
        let out = solve_lp(&model.with_bounds(&fix).relaxed()).expect("oracle LP");
        if out.status == LpStatus::Optimal {
            best = Some(match best {
                None => out.objective,
                Some(v) if max => v.max(out.objective),
                Some(v) => v.min(out.objective),
            });
        }
    }
    best
}

/// Random 0/1 knapsack: (values, weights, capacity).
pub fn random_knapsack(seed: u64, items: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let mut r = rng(seed);
    let values: Vec<f64> = (0..items).map(|_| r.gen_range(1..40) as f64).collect();
    let weights: Vec<f64> = (0..items).map(|_| r.gen_range(1..30) as f64).collect();
    let cap = (weights.iter().sum::<f64>() * r.gen_range(0.3..0.7)).floor();
    (values, weights, cap)
}

pub fn knapsack_model(values: &[f64], weights: &[f64], cap: f64) -> MilpModel {
    let mut b = ModelBuilder::new(ObjSense::Max);
    let vars: Vec<usize> = (0..values.len())
        .map(|k| b.add_var(VarSpec::binary(format!("take{k}"))))
        .collect();
    b.add_constraint(
        "weight",
        vars.iter().zip(weights).map(|(&j, &w)| (j, w)),
        RowSense::Le,
        cap,
    );
    b.set_objective(vars.iter().zip(values).map(|(&j, &v)| (j, v)));
    b.build()
}

/// Exhaustive knapsack optimum by direct arithmetic.
pub fn knapsack_brute_force(values: &[f64], weights: &[f64], cap: f64) -> f64 {
    let n = values.len();
    (0u32..(1 << n))
        .filter_map(|mask| {
            let (mut v, mut w) = (0.0, 0.0);
            for k in 0..n {
                if (mask >> k) & 1 == 1 {
                    v += values[k];
                    w += weights[k];
                }
            }
            (w <= cap).then_some(v)
        })
        .fold(0.0, f64::max)
}
