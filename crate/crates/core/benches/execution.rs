use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rank_collapse::exec::Execution;
use rank_collapse::harness::config::RunConfig;
use rank_collapse::harness::sweep::{run_ablation, run_lambda_sweep};
use rank_collapse::harness::verify::{run_verify, Suite, VerifyOptions};

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn sweep(c: &mut Criterion) {
    let cfg = RunConfig {
        n: 32,
        d: 16,
        ..RunConfig::default()
    };
    let mut group = c.benchmark_group("lambda_sweep");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_lambda_sweep(&cfg, exec).unwrap())
        });
    }
    group.finish();

    let ablation = RunConfig {
        lambda_list: vec![-2.0, 0.0, 1.0, 5.0],
        ..cfg
    };
    let mut group = c.benchmark_group("ablation");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_ablation(&ablation, exec).unwrap())
        });
    }
    group.finish();
}

fn verify(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_all");
    group.sample_size(20);
    for (name, exec) in modes() {
        let opts = VerifyOptions {
            exec,
            ..VerifyOptions::new(0, 200)
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| run_verify(Suite::All, opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, verify);
criterion_main!(benches);
