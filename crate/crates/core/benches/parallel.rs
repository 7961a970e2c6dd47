//! Sequential against rayon execution for the per-vertex and per-tet kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use strainfem::constraints::assemble_constraints_with;
use strainfem::elasticity::{assemble_energy_with, Material};
use strainfem::strain_space::{interpolate_with, tet_tensors_with};
use strainfem::{generate_cube_mesh, Execution, SymTensor3};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn field(x: &strainfem::Point) -> SymTensor3 {
    SymTensor3([x.x.sin(), x.y * x.z, x.z.cos(), x.x * x.y, 0.5 * x.x, x.y.exp()])
}

fn bench_kernels(c: &mut Criterion) {
    let mat = Material::new(1.0, 1.0).unwrap();
    for n in [4, 8] {
        let mesh = generate_cube_mesh(n);
        let d = interpolate_with(&mesh, field, Execution::Sequential);

        let mut g = c.benchmark_group("constraints");
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &mesh, |b, m| {
                b.iter(|| assemble_constraints_with(black_box(m), exec).unwrap())
            });
        }
        g.finish();

        let mut g = c.benchmark_group("energy");
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &mesh, |b, m| {
                b.iter(|| assemble_energy_with(black_box(m), &mat, exec).unwrap())
            });
        }
        g.finish();

        let mut g = c.benchmark_group("interpolate");
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &mesh, |b, m| {
                b.iter(|| interpolate_with(black_box(m), field, exec))
            });
        }
        g.finish();

        let mut g = c.benchmark_group("tet_tensors");
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &mesh, |b, m| {
                b.iter(|| tet_tensors_with(black_box(m), &d, exec).unwrap())
            });
        }
        g.finish();
    }
}

criterion_group!(benches, bench_kernels);
criterion_main!(benches);
