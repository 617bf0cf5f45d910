use criterion::{criterion_group, criterion_main, Criterion};
use sticky_heat::fd_oracle::{solve_fd, FDConfig};
use sticky_heat::volterra::solve_boundary;
use sticky_heat::{InitialData, Regime, TimeGrid, VolterraConfig};

fn boundary(c: &mut Criterion) {
    let u0 = InitialData::reference();
    let cfg = VolterraConfig::default();
    let mut g = c.benchmark_group("volterra");
    g.sample_size(10);
    for n in [64, 256] {
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        g.bench_function(format!("limit n={n}"), |b| {
            b.iter(|| solve_boundary(Regime::Limit, &u0, &grid, &cfg).unwrap())
        });
        g.bench_function(format!("sigma=0.1 n={n}"), |b| {
            b.iter(|| solve_boundary(Regime::Sigma(0.1), &u0, &grid, &cfg).unwrap())
        });
    }
    g.finish();
}

fn finite_differences(c: &mut Criterion) {
    let u0 = InitialData::reference();
    let mut g = c.benchmark_group("fd");
    g.sample_size(10);
    for (m, n) in [(100, 1000), (400, 4000)] {
        let cfg = FDConfig::new(m, n, 1.0, Regime::Limit);
        g.bench_function(format!("limit {m}x{n}"), |b| b.iter(|| solve_fd(&u0, &cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, boundary, finite_differences);
criterion_main!(benches);
