use criterion::{black_box, criterion_group, criterion_main, Criterion};

use pdpml::integrator::{Simulation, SimulationConfig};
use pdpml::{apply_operator_field, compute_stencil, GridConfig, KernelSpec};

fn example1(h: f64) -> SimulationConfig {
    SimulationConfig::standard(KernelSpec::gaussian_with_horizon(0.25, 1e-7), h, 1.0, 4, 2.0 / h, 1.0).unwrap()
}

fn stencil(c: &mut Criterion) {
    let mut g = c.benchmark_group("stencil");
    for (name, kernel) in [
        ("gaussian", KernelSpec::gaussian_with_horizon(0.25, 1e-7)),
        ("heaviside", KernelSpec::heaviside(0.25)),
    ] {
        let grid = GridConfig::for_domain(1.0, 1.0 / 16.0, 4, kernel.horizon()).unwrap();
        g.bench_function(name, |b| b.iter(|| compute_stencil(black_box(&kernel), &grid, 8).unwrap()));
    }
    g.finish();
}

fn operator(c: &mut Criterion) {
    let cfg = example1(1.0 / 32.0);
    let sim = Simulation::new(cfg).unwrap();
    let u = sim.init_state().unwrap().u_curr;
    c.bench_function("apply_operator_field h=1/32", |b| {
        b.iter(|| apply_operator_field(black_box(&u), &sim.stepper.stencil))
    });
}

fn step(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    g.sample_size(20);
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let sim = Simulation::new(example1(h)).unwrap();
        let state = sim.init_state().unwrap();
        g.bench_function(format!("h=1/{}", (1.0 / h) as usize), |b| {
            b.iter_batched(
                || state.clone(),
                |mut s| sim.stepper.step_in_place(&mut s).unwrap(),
                criterion::BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, stencil, operator, step);
criterion_main!(benches);
