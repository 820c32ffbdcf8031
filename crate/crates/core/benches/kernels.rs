//! Sequential versus rayon execution of the dense kernels.
//!
//! Without the `parallel` feature both modes run the same sequential code,
//! so the comparison is only meaningful with default features.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qrflab::exec::Execution;
use qrflab::invariants::project_inv;
use qrflab::random::Rng;
use qrflab::sectors::{project_phys, to_sector_basis};
use qrflab::traces::trel;
use qrflab::SpaceLabel;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn space(g: &str, n: usize) -> SpaceLabel {
    SpaceLabel::new(g.parse().unwrap(), n).unwrap()
}

fn kernels(c: &mut Criterion) {
    let mut rng = Rng::seeded(0);
    for (g, n) in [("Z6", 3), ("Z8", 3)] {
        let s = space(g, n);
        let a = rng.operator(s.clone());
        let b = rng.operator(s.clone());
        let rho = rng.density(s.clone(), 4);
        let label = format!("{g}^{n}");

        let mut group = c.benchmark_group(format!("matmul/{label}"));
        for (name, exec) in MODES {
            group
                .bench_function(BenchmarkId::from_parameter(name), |bch| bch.iter(|| a.matmul_with(&b, exec).unwrap()));
        }
        group.finish();

        let mut group = c.benchmark_group(format!("project_inv/{label}"));
        for (name, exec) in MODES {
            group.bench_function(BenchmarkId::from_parameter(name), |bch| bch.iter(|| project_inv(&rho, exec)));
        }
        group.finish();

        let mut group = c.benchmark_group(format!("project_phys/{label}"));
        for (name, exec) in MODES {
            group.bench_function(BenchmarkId::from_parameter(name), |bch| bch.iter(|| project_phys(&rho, exec)));
        }
        group.finish();

        let mut group = c.benchmark_group(format!("sector_basis/{label}"));
        for (name, exec) in MODES {
            group.bench_function(BenchmarkId::from_parameter(name), |bch| bch.iter(|| to_sector_basis(&rho, exec)));
        }
        group.finish();

        let mut group = c.benchmark_group(format!("trel/{label}"));
        for (name, exec) in MODES {
            group.bench_function(BenchmarkId::from_parameter(name), |bch| bch.iter(|| trel(&rho, 1, exec).unwrap()));
        }
        group.finish();
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = kernels
}
criterion_main!(benches);
