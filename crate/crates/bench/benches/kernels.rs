use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tightmip::cuts::{build_cutset, contains};
use tightmip::model::{ModelBuilder, ObjSense, RowSense, VarSpec};
use tightmip::net::{init_params, loss_and_gradient, Mode, NetConfig};
use tightmip::stn::{build_instance, nominal_theta, BuildOptions, StnData};
use tightmip::{solve_lp, solve_milp, MilpModel, SolveConfig};

fn knapsack(seed: u64, items: usize) -> MilpModel {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut b = ModelBuilder::new(ObjSense::Max);
    let vars: Vec<usize> = (0..items)
        .map(|k| b.add_var(VarSpec::binary(format!("x{k}"))))
        .collect();
    let weights: Vec<f64> = (0..items).map(|_| r.gen_range(1..30) as f64).collect();
    let cap = weights.iter().sum::<f64>() / 2.0;
    b.add_constraint(
        "cap",
        vars.iter().zip(&weights).map(|(&j, &w)| (j, w)),
        RowSense::Le,
        cap,
    );
    b.set_objective(vars.iter().map(|&j| (j, r.gen_range(1..40) as f64)));
    b.build()
}

fn solver(c: &mut Criterion) {
    let data = StnData::benchmark(2, 8.0);
    let (stn, _) = build_instance(&data, &nominal_theta(&data), BuildOptions::default()).unwrap();
    let relaxed = stn.relaxed();
    c.bench_function("lp/stn-2-events-relaxation", |b| {
        b.iter(|| solve_lp(black_box(&relaxed)).unwrap())
    });
    c.bench_function("milp/stn-2-events", |b| {
        b.iter(|| solve_milp(black_box(&stn), &SolveConfig::default()).unwrap())
    });
    let ks = knapsack(1, 25);
    c.bench_function("milp/knapsack-25", |b| {
        b.iter(|| solve_milp(black_box(&ks), &SolveConfig::default()).unwrap())
    });
}

fn network(c: &mut Criterion) {
    let cfg = NetConfig::new(216);
    let params = init_params(&cfg).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let batch: Vec<Vec<u8>> = (0..64)
        .map(|_| (0..216).map(|_| u8::from(r.gen_bool(0.2))).collect())
        .collect();
    let views: Vec<&[u8]> = batch.iter().map(Vec::as_slice).collect();
    c.bench_function("net/gradient-batch-64-p216", |b| {
        b.iter(|| loss_and_gradient(black_box(&params), &views, Mode::Train, &mut r).unwrap())
    });
    let cs = build_cutset(&params, 5.0).unwrap();
    c.bench_function("cuts/contains-p216-d20", |b| {
        b.iter(|| contains(black_box(&cs), &batch[0]).unwrap())
    });
}

criterion_group!(benches, solver, network);
criterion_main!(benches);
