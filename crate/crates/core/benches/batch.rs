use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mort_core::generators::{gen_pyramid2d, gen_random_pile, Mode};
use mort_core::par::{self, Algorithm, Execution};
use mort_core::planner::{solve, PlannerConfig};
use mort_core::stability::{micro_states, StabilityConfig};
use mort_core::Arrangement;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn solve_batch(c: &mut Criterion) {
    let instances: Vec<_> = (0..16).map(|seed| gen_pyramid2d(5, Mode::InPlace, seed).unwrap()).collect();
    let cfg = PlannerConfig::without_stability();
    let mut group = c.benchmark_group("solve_batch");
    group.sample_size(10);
    for (name, exec) in MODES {
        for alg in [Algorithm::Optimal, Algorithm::Greedy] {
            group.bench_function(BenchmarkId::new(name, alg.as_str()), |b| {
                b.iter(|| par::solve_batch(alg, black_box(&instances), &cfg, exec))
            });
        }
    }
    group.finish();
}

fn stability(c: &mut Criterion) {
    let inst = gen_random_pile(20, Mode::InPlace, 3, 5.0).unwrap();
    let plan = solve(&inst, &PlannerConfig::default()).unwrap().plan.expect("pile is solvable");
    let cfg = StabilityConfig::default();
    let states: Vec<Arrangement> = micro_states(&inst, &plan).unwrap().into_iter().map(|m| m.arrangement).collect();

    let mut group = c.benchmark_group("stability");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("batch", name), |b| {
            b.iter(|| par::stability_batch(&inst, black_box(&states), &cfg, exec))
        });
        group.bench_function(BenchmarkId::new("screen_plan", name), |b| {
            b.iter(|| par::screen_plan(&inst, black_box(&plan), &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, solve_batch, stability);
criterion_main!(benches);
