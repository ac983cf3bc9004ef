use std::hint::black_box;

use cavity_qnd::gate_sim::{verify_table, CorrectionTable};
use cavity_qnd::optimizer::{optimize, FidelityMode, OptimizationProblem};
use cavity_qnd::outcome_distributions::{p_decay_two, window_masses};
use cavity_qnd::protocol_sim::sample_outcomes;
use cavity_qnd::{AcceptanceWindow, OutcomeModel, ProtocolConfig, PulseConfig};
use criterion::{criterion_group, criterion_main, Criterion};

fn distributions(c: &mut Criterion) {
    let pulse = PulseConfig::new(0.05, 1e3).unwrap();
    let model = OutcomeModel::two_atom(pulse);
    let window = AcceptanceWindow::new(pulse.x1() - 1.0, pulse.x1() + 1.0).unwrap();
    c.bench_function("p_decay_two", |b| {
        b.iter(|| p_decay_two(black_box(pulse.x1()), &pulse).unwrap())
    });
    c.bench_function("window_masses", |b| {
        b.iter(|| window_masses(black_box(&window), &model).unwrap())
    });
}

fn optimizer(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimize");
    group.sample_size(10);
    for cooperativity in [1e2, 1e4] {
        let problem =
            OptimizationProblem::new(cooperativity, 0.3, FidelityMode::SingleShot).unwrap();
        group.bench_function(format!("C={cooperativity}"), |b| {
            b.iter(|| optimize(black_box(&problem)).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let pulse = PulseConfig::new(0.2, 100.0).unwrap();
    let config = ProtocolConfig::new(2, pulse, AcceptanceWindow::unbounded(), 1).unwrap();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(20);
    group.bench_function("sample_outcomes_1e5", |b| {
        b.iter(|| sample_outcomes(black_box(&config), 100_000))
    });
    group.finish();
}

fn gate(c: &mut Criterion) {
    let table = CorrectionTable::standard();
    c.bench_function("verify_table", |b| {
        b.iter(|| verify_table(black_box(&table), 1e-12).unwrap())
    });
}

criterion_group!(benches, distributions, optimizer, monte_carlo, gate);
criterion_main!(benches);
