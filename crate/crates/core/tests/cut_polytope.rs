mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;

use tightmip::cuts::{build_cutset, contains, estimate_m, max_abs_score, ppo, tighten, CutSet, CUT_TAG};
use tightmip::model::{ModelBuilder, ObjSense, RowSense, VarSpec};
use tightmip::net::{init_params, reconstruct, train, BinaryDataset, NetConfig};
use tightmip::{solve_milp, MilpStatus, SolveConfig};

fn random_cutset(seed: u64, d: usize, p: usize, m: f64) -> CutSet {
    let mut r = rng(seed);
    CutSet {
        d,
        p,
        big_m: m,
        w: (0..d)
            .map(|_| (0..p).map(|_| r.gen_range(-2.0..2.0)).collect())
            .collect(),
        a: (0..p).map(|_| r.gen_range(-1.0..1.0)).collect(),
    }
}

fn random_u(seed: u64, p: usize) -> Vec<u8> {
    let mut r = rng(seed ^ 0xabcdef);
    (0..p).map(|_| u8::from(r.gen_bool(0.5))).collect()
}

fn inside_at(cs: &CutSet, u: &[u8], h: &[f64], tol: f64) -> bool {
    cs.scores(h).iter().zip(u).all(|(&z, &b)| {
        let b = f64::from(b);
        z >= cs.big_m * (b - 1.0) - tol && z <= cs.big_m * b + tol
    })
}

#[test]
fn big_m_by_direct_evaluation() {
    let cs = CutSet {
        d: 1,
        p: 2,
        big_m: 0.0,
        w: vec![vec![1.0, -1.0]],
        a: vec![0.5, -0.5],
    };
    let features = vec![vec![1.0], vec![-2.0]];
    // every |row × sample| value, by hand
    let by_hand = [1.0f64 + 0.5, -1.0 - 0.5, -2.0 + 0.5, 2.0 - 0.5]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert_eq!(max_abs_score(&cs, &features), by_hand);
    assert_eq!(by_hand, 1.5);
    assert!((1.1 * max_abs_score(&cs, &features) - 1.65).abs() < 1e-12);
}

#[test]
fn zero_decoder_gives_zero_m() {
    let mut params = init_params(&NetConfig {
        latent_dim: 2,
        encoder_widths: vec![4],
        ..NetConfig::new(5)
    })
    .unwrap();
    params.decoder_w.fill(0.0);
    params.decoder_a.fill(0.0);
    let data = BinaryDataset::from_bits(vec![vec![1, 0, 1, 0, 1]]);
    assert_eq!(estimate_m(&params, &data, 1.0).unwrap(), 0.0);
    assert!(estimate_m(&params, &BinaryDataset::default(), 1.0).is_err());
    assert!(estimate_m(&params, &data, 0.5).is_err());
}

#[test]
fn toy_cube_polytope() {
    let triple = vec![vec![0, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
    let data = BinaryDataset::from_bits(triple.clone());
    let (params, _) = train(&data, &NetConfig::toy()).unwrap();
    let m = estimate_m(&params, &data, 1.0).unwrap();
    let cs = build_cutset(&params, m).unwrap();
    assert_eq!((cs.p, cs.d), (3, 2));
    assert_eq!(ppo(&cs, &data).unwrap(), 1.0);
    for u in &triple {
        let (inside, h) = contains(&cs, u).unwrap();
        assert!(inside);
        assert!(inside_at(&cs, u, &h.unwrap(), 1e-6));
    }
    let excluded = (0u8..8)
        .map(|k| vec![k >> 2 & 1, k >> 1 & 1, k & 1])
        .filter(|u| !triple.contains(u))
        .filter(|u| !contains(&cs, u).unwrap().0)
        .count();
    println!("toy polytope excludes {excluded} of the 5 other vertices");

    // a 3-binary program: its tightened optimum must be a member
    let mut b = ModelBuilder::new(ObjSense::Max);
    let u: Vec<usize> = (0..3)
        .map(|k| b.add_var(VarSpec::binary(format!("u{k}"))))
        .collect();
    b.add_constraint("pick", u.iter().map(|&j| (j, 1.0)), RowSense::Le, 2.0);
    b.set_objective([(u[0], 3.0), (u[1], 2.0), (u[2], 1.0)]);
    let model = b.build();
    let tight = tighten(&model, &u, &cs).unwrap();
    let out = solve_milp(&tight, &SolveConfig::default()).unwrap();
    assert_eq!(out.status, MilpStatus::Optimal);
    let best: Vec<u8> = u.iter().map(|&j| u8::from(out.point[j] > 0.5)).collect();
    assert!(contains(&cs, &best).unwrap().0);
    let primal = solve_milp(&model, &SolveConfig::default()).unwrap();
    assert!(out.objective <= primal.objective + 1e-9);
}

#[test]
fn contains_agrees_with_lattice_search() {
    for seed in 0..40 {
        let cs = random_cutset(seed, 2, 4, 1.0);
        let u = random_u(seed, 4);
        let (inside, h) = contains(&cs, &u).unwrap();
        let mut grid_hit = false;
        'grid: for i in -200..=200 {
            for k in -200..=200 {
                let h = [i as f64 * 0.025, k as f64 * 0.025];
                if inside_at(&cs, &u, &h, 0.0) {
                    grid_hit = true;
                    break 'grid;
                }
            }
        }
        if grid_hit {
            assert!(inside, "seed {seed}: lattice point found but LP says outside");
        }
        if inside {
            assert!(inside_at(&cs, &u, &h.unwrap(), 1e-6), "seed {seed}: bad witness");
        }
    }
}

#[test]
fn tighten_grows_by_two_rows_per_binary() {
    let (v, w, cap) = random_knapsack(4, 12);
    let model = knapsack_model(&v, &w, cap);
    let cs = random_cutset(9, 5, 12, 3.0);
    let vars = model.binary_index().to_vec();
    let t = tighten(&model, &vars, &cs).unwrap();
    assert_eq!(t.num_constraints(), model.num_constraints() + 24);
    assert_eq!(t.num_vars(), model.num_vars() + 5);
    assert_eq!(t.constraints().iter().filter(|c| c.tag == CUT_TAG).count(), 24);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn membership_is_monotone_in_m(seed in 0u64..100_000, m in 0.0f64..3.0, extra in 0.0f64..3.0) {
        let cs = random_cutset(seed, 2, 5, m);
        let u = random_u(seed, 5);
        if contains(&cs, &u).unwrap().0 {
            let wider = CutSet { big_m: m + extra, ..cs };
            prop_assert!(contains(&wider, &u).unwrap().0);
        }
    }

    #[test]
    fn exact_reconstructions_are_enclosed(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let rows: Vec<Vec<u8>> = (0..8).map(|_| (0..6).map(|_| u8::from(r.gen_bool(0.4))).collect()).collect();
        let data = BinaryDataset::from_bits(rows);
        let cfg = NetConfig {
            latent_dim: 3,
            encoder_widths: vec![8],
            epochs: 30,
            learning_rate: 5e-3,
            batch_size: 4,
            seed,
            ..NetConfig::new(6)
        };
        let (params, _) = train(&data, &cfg).unwrap();
        let cs = build_cutset(&params, estimate_m(&params, &data, 1.0).unwrap()).unwrap();
        for s in &data.samples {
            if reconstruct(&params, &s.bits).unwrap() == s.bits {
                prop_assert!(contains(&cs, &s.bits).unwrap().0);
            }
        }
    }

    #[test]
    fn tightening_restricts_and_preserves(seed in 0u64..10_000) {
        let (v, w, cap) = random_knapsack(seed, 8);
        let model = knapsack_model(&v, &w, cap);
        let vars = model.binary_index().to_vec();
        let cs = random_cutset(seed, 3, 8, 2.0);
        let primal = solve_milp(&model, &SolveConfig::default()).unwrap();
        let tight = solve_milp(&tighten(&model, &vars, &cs).unwrap(), &SolveConfig::default()).unwrap();
        if tight.status == MilpStatus::Optimal {
            prop_assert!(tight.objective <= primal.objective + 1e-6);
        }
        let best: Vec<u8> = vars.iter().map(|&j| u8::from(primal.point[j] > 0.5)).collect();
        if contains(&cs, &best).unwrap().0 {
            prop_assert_eq!(tight.status, MilpStatus::Optimal);
            prop_assert!((tight.objective - primal.objective).abs() <= 1e-6);
        }
    }
}
