use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mcflow_core::{
    eval_phi_star, f_direct, residual_field, solve_cone, solve_dirichlet, GridField, NewtonOptions, Params,
    PlaneSpec, Rect, SectorIntegral, SphereMeasure, SubSolution,
};

fn p45() -> Params {
    Params::new(FRAC_PI_4, 1.0, 3).unwrap()
}

fn subsolution(c: &mut Criterion) {
    let p = p45();
    let mut mu = SphereMeasure::from_angles(&[(0.1, 1.0), (2.0, 0.5), (4.0, 0.25)]).unwrap();
    mu.add_arc(1.0, 1.8, 0.3).unwrap();
    c.bench_function("phi_star atoms and arc", |b| {
        b.iter(|| eval_phi_star(&mu, &p, black_box(&[12.0, -7.5])).unwrap())
    });
}

fn cone(c: &mut Criterion) {
    let p = p45();
    c.bench_function("cone profile to r = 1000", |b| {
        b.iter(|| solve_cone(&p, black_box(1000.0), 1e-10).unwrap())
    });
}

fn sector(c: &mut Criterion) {
    let si = SectorIntegral::new(p45(), 0.0, FRAC_PI_2, 1.0, 1.0).unwrap();
    c.bench_function("sector integral at r = 200", |b| {
        b.iter(|| f_direct(&si, black_box(&[141.0, 141.0])).unwrap())
    });
}

fn grid(c: &mut Criterion) {
    let p = p45();
    let spec = PlaneSpec::equispaced(p, 3, 0.0, 1.0 / 3.0).unwrap();
    let sub = SubSolution::new(spec.matched_measure().unwrap(), p).unwrap();
    let domain = Rect::square(5.0).unwrap();
    let field = GridField::from_field(domain, 0.1, &sub).unwrap();
    c.bench_function("residual on 101 x 101", |b| {
        b.iter(|| residual_field(black_box(&field), &p).unwrap())
    });
    let mut group = c.benchmark_group("newton");
    group.sample_size(10);
    group.bench_function("solve 41 x 41", |b| {
        b.iter(|| solve_dirichlet(domain, 0.25, &spec, &sub, &p, &NewtonOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(kernels, subsolution, cone, sector, grid);
criterion_main!(kernels);
