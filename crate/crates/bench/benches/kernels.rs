use criterion::{black_box, criterion_group, criterion_main, Criterion};
use eqvol_core::envelope::LegendreOptions;
use eqvol_core::monge_ampere::GridMassOptions;
use eqvol_core::rational::q_frac;
use eqvol_core::{
    complete_series, convex_hull, equilibrium_symbol, estimate_volume, example36_series,
    fubini_study_weight, legendre, ma_mass_grid_pl, ma_mass_pl, monomial_norm, ExponentVector,
    GridSpec, QuadratureSpec,
};

fn hull(c: &mut Criterion) {
    let piece = complete_series(3, 4).unwrap().graded_piece(2).unwrap();
    let points: Vec<_> = piece.exponents().iter().map(|e| e.to_q()).collect();
    c.bench_function("convex_hull 3d complete level 2", |b| {
        b.iter(|| convex_hull(black_box(&points)).unwrap())
    });
}

fn counting(c: &mut Criterion) {
    let w = example36_series();
    c.bench_function("estimate_volume example36 k<=64", |b| {
        b.iter(|| estimate_volume(black_box(&w), 64, 1).unwrap())
    });
}

fn transforms(c: &mut Criterion) {
    let phi = fubini_study_weight(2, 2).unwrap();
    let s = [q_frac(1, 3), q_frac(5, 4)];
    let options = LegendreOptions::default();
    c.bench_function("legendre n=2", |b| {
        b.iter(|| legendre(&phi, black_box(&s), &options).unwrap())
    });
    let alpha = ExponentVector::new(vec![3, 5]).unwrap();
    let spec = QuadratureSpec::default();
    c.bench_function("monomial_norm n=2 k=8", |b| {
        b.iter(|| monomial_norm(black_box(&alpha), 8, &phi, &spec).unwrap())
    });
}

fn masses(c: &mut Criterion) {
    let w = complete_series(2, 1).unwrap();
    let phi = fubini_study_weight(2, 1).unwrap();
    let symbol = equilibrium_symbol(&w, &phi, &[1, 2, 4]).unwrap();
    c.bench_function("ma_mass_pl equilibrium n=2", |b| {
        b.iter(|| ma_mass_pl(black_box(&symbol.function)).unwrap())
    });
    let grid = GridSpec::cube(2, -20, 20, 128).unwrap();
    let options = GridMassOptions::default();
    let mut group = c.benchmark_group("grid");
    group.sample_size(10);
    group.bench_function("ma_mass_grid_pl 128²", |b| {
        b.iter(|| ma_mass_grid_pl(black_box(&symbol.function), &grid, 0.625, &options).unwrap())
    });
    group.finish();
}

criterion_group!(benches, hull, counting, transforms, masses);
criterion_main!(benches);
