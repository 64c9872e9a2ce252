use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use dpfilter_bench::line_setup;
use dpfilter_core::dynamics::{
    filter_counting, homodyne_trajectory, master_evolve, run_ensemble, IntegrationConfig, Scheme,
    Unraveling,
};

const STEPS: usize = 200;

fn trajectories(c: &mut Criterion) {
    let mut g = c.benchmark_group("trajectory");
    g.throughput(Throughput::Elements(STEPS as u64));
    for n in [16, 64] {
        let s = line_setup(n).unwrap();
        let sde = IntegrationConfig::new(1e-3, STEPS, Scheme::EulerMaruyamaRenorm)
            .with_seed(1, 0)
            .with_stride(STEPS);
        let rk4 = IntegrationConfig::new(1e-3, STEPS, Scheme::MasterRk4).with_stride(STEPS);
        g.bench_with_input(BenchmarkId::new("homodyne", n), &s, |b, s| {
            b.iter(|| homodyne_trajectory(&s.psi0, &s.hamiltonian, &s.collapse, &sde).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("counting", n), &s, |b, s| {
            b.iter(|| filter_counting(&s.psi0, &s.hamiltonian, &s.collapse, &sde).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("master_rk4", n), &s, |b, s| {
            b.iter(|| master_evolve(&s.psi0, &s.hamiltonian, &s.collapse, &rk4).unwrap())
        });
    }
    g.finish();
}

fn ensemble(c: &mut Criterion) {
    let mut g = c.benchmark_group("ensemble");
    g.sample_size(10);
    let s = line_setup(16).unwrap();
    let cfg = IntegrationConfig::new(1e-3, STEPS, Scheme::EulerMaruyamaRenorm)
        .with_seed(1, 0)
        .with_stride(20);
    for n_traj in [64, 256] {
        g.throughput(Throughput::Elements((n_traj * STEPS) as u64));
        g.bench_with_input(BenchmarkId::new("homodyne", n_traj), &n_traj, |b, &n| {
            b.iter(|| {
                run_ensemble(
                    Unraveling::Homodyne,
                    &s.psi0,
                    &s.hamiltonian,
                    &s.collapse,
                    &cfg,
                    n,
                    false,
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, trajectories, ensemble);
criterion_main!(benches);
