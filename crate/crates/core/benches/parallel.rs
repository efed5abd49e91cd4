use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hermgraph::geometry::{all_pairs_metric, default_intrinsic_sigma};
use hermgraph::graph::{FamilyKind, GraphFamily, Rule};
use hermgraph::instances::{random_instance, InstanceSpec, PotentialKind};
use hermgraph::semigroup::{contraction_certificate, log_grid};
use hermgraph::{Execution, LpExponent};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn certificate(c: &mut Criterion) {
    let spec = InstanceSpec { min_vertices: 24, max_vertices: 24, ..InstanceSpec::bundle(PotentialKind::Accretive) };
    let inst = random_instance(7, spec).unwrap();
    let a = inst.operator().unwrap();
    let ps = [LpExponent::Finite(1.0), LpExponent::Finite(3.0), LpExponent::Infinity];
    let grid = log_grid(1e-2, 1e2, 6);
    let mut group = c.benchmark_group("contraction_certificate");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| contraction_certificate(&a, &ps, &grid, &grid, 8, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn metric(c: &mut Criterion) {
    let family = GraphFamily::unit(FamilyKind::BinaryTree).with_length(Rule::geometric(1.0, 0.7));
    let t = family.truncate(9).unwrap();
    let sigma = default_intrinsic_sigma(&t.graph).unwrap();
    let mut group = c.benchmark_group("all_pairs_metric");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| all_pairs_metric(&t.graph, &sigma, exec)));
    }
    group.finish();
}

criterion_group!(benches, certificate, metric);
criterion_main!(benches);
