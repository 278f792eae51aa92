use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use genfn_core::dynamics::{
    godunov_scalar, godunov_system, riemann_cells, simulate_heat, simulate_prey_predator, Boundary, HeatProblem,
    PreyPredatorProblem, UniformGrid,
};
use genfn_core::eps_core::{classify, DyadicGrid, EpsRepresentative};
use genfn_core::genfunc::{association, default_battery, pair, GenFunction1D, Smooth, TestFunction, DEFAULT_DOMAIN};
use genfn_core::profiles::{mixed_moment, preset_dirac, preset_heaviside};
use genfn_core::riemann::{forward_constructed_datum, solve_system_with, SolveOptions, State, StatementLedger};

fn eps_and_pairings(c: &mut Criterion) {
    let grid = DyadicGrid::default();
    let opaque = EpsRepresentative::opaque(|e| e.sqrt() * (1.0 + e));
    c.bench_function("classify_opaque", |b| {
        b.iter(|| classify(black_box(&opaque), &grid).unwrap())
    });

    let tanh = preset_heaviside("tanh").unwrap();
    let erf = preset_heaviside("erf").unwrap();
    c.bench_function("mixed_moment", |b| {
        b.iter(|| mixed_moment(black_box(&tanh), &erf).unwrap())
    });

    let h = GenFunction1D::heaviside(0.0, tanh.clone(), DEFAULT_DOMAIN);
    let d = GenFunction1D::dirac(0.0, preset_dirac("bump").unwrap(), DEFAULT_DOMAIN);
    let u = h.pow(3).unwrap().mul(&d);
    let phi = TestFunction::new(0.2, 1.0).unwrap();
    c.bench_function("pair_h3_delta", |b| b.iter(|| pair(black_box(&u), &phi, 1e-3).unwrap()));

    let battery = default_battery(DEFAULT_DOMAIN).unwrap();
    let coarse = DyadicGrid::coarse(0.5, 40, 12);
    let h2 = h.pow(2).unwrap();
    c.bench_function("association_h2_h", |b| {
        b.iter(|| association(&h2, &h, &battery, &coarse).unwrap())
    });
}

fn riemann(c: &mut Criterion) {
    let d = forward_constructed_datum();
    let opts = SolveOptions::without_diagnostics();
    c.bench_function("solve_mixed_ledger", |b| {
        b.iter(|| solve_system_with(&StatementLedger::mixed(), black_box(&d), &opts).unwrap())
    });
}

fn dynamics(c: &mut Criterion) {
    let mut g = c.benchmark_group("dynamics");
    g.sample_size(10);

    let grid = UniformGrid::new(-1.0, 2.0, 400).unwrap();
    let init = riemann_cells(&grid, 0.0, 1.0, 0.0);
    g.bench_function("godunov_scalar_400", |b| {
        b.iter(|| godunov_scalar(&init, grid, 0.8, 1.0, Boundary::Transmissive).unwrap())
    });

    let d = forward_constructed_datum();
    let sgrid = UniformGrid::new(-3.0, 1.0, 200).unwrap();
    let sinit: Vec<State> = sgrid
        .centers()
        .iter()
        .map(|&x| if x < 0.0 { d.left } else { d.right })
        .collect();
    g.bench_function("godunov_system_200", |b| {
        b.iter(|| godunov_system(&sinit, sgrid, 0.45, 1.0, &StatementLedger::mixed()).unwrap())
    });

    let pp = PreyPredatorProblem::default();
    g.bench_function("prey_predator_eps_0.1", |b| {
        b.iter(|| simulate_prey_predator(&pp).unwrap())
    });

    let parabola = GenFunction1D::smooth(Smooth::Poly(vec![0.0, PI, -1.0]), (0.0, PI));
    let mut heat = HeatProblem::new(parabola, 400, vec![0.1]);
    heat.nonlinear = true;
    g.bench_function("heat_absorption_400", |b| b.iter(|| simulate_heat(&heat).unwrap()));
    g.finish();
}

criterion_group!(benches, eps_and_pairings, riemann, dynamics);
criterion_main!(benches);
