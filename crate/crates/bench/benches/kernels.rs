use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use quench_core::critical::{critical_plateau_length, stationary_length};
use quench_core::pde::{Equation, GridPolicy, Problem, Solver};
use quench_core::stochastic::{time_integrals, PathEnsembleConfig};
use quench_core::{build_reaction, InitialData, PhysParams, ShearProfile};

fn solver_steps(c: &mut Criterion) {
    let params = PhysParams::unit(0.25, std::f64::consts::TAU).unwrap();
    let f = build_reaction("quadratic-ignition", 0.25, &[]).unwrap();
    let p = ShearProfile::sine(params.h, 1.0).unwrap();
    let init = InitialData::sharp(4.0).unwrap();
    let policy = GridPolicy {
        dx: Some(0.25),
        dt: 0.1,
        ..Default::default()
    };
    let res = policy.resolve(&params, &p, 10.0, &init, 1.0).unwrap();
    let prob = Problem {
        equation: Equation::Reactive,
        params,
        reaction: Some(&f),
        profile: Some(&p),
        amplitude: 10.0,
        frame_velocity: res.frame_velocity,
        initial: init,
        y_weight: None,
    };
    c.bench_function("split solver, t = 1", |b| {
        b.iter(|| {
            let s = Solver::new(res.grid, &prob).unwrap();
            black_box(s.run(&res.schedule).unwrap().final_field.sup())
        })
    });
}

fn mc_paths(c: &mut Criterion) {
    let p = ShearProfile::sine(std::f64::consts::TAU, 1.0).unwrap();
    let cfg = PathEnsembleConfig::new(1000, 1e-3, 1).unwrap();
    c.bench_function("1000 paths, 1000 steps", |b| {
        b.iter(|| black_box(time_integrals(1.0, 0.3, &p, &cfg).unwrap()))
    });
}

fn time_map(c: &mut Criterion) {
    let params = PhysParams::unit(0.25, 1.0).unwrap();
    let f = build_reaction("quadratic-ignition", 0.25, &[]).unwrap();
    c.bench_function("time map l(0.8)", |b| {
        b.iter(|| black_box(stationary_length(black_box(0.8), &f, &params).unwrap()))
    });
    c.bench_function("critical plateau length", |b| {
        b.iter(|| black_box(critical_plateau_length(&f, &params).unwrap().ell))
    });
}

criterion_group!(benches, solver_steps, mc_paths, time_map);
criterion_main!(benches);
