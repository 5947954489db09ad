//! Hot paths of a sweep: the special function under every Rayleigh closed
//! form, `p̃` tables, rate elimination for INR and the simulator.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use harq_csi::capacity::{db_to_linear, ergodic_partial_csi, outage_one_bit};
use harq_csi::protocol::{analytic_throughput, ptilde_table, ProtocolKind, ThresholdPlan};
use harq_csi::simulator::simulate;
use harq_csi::{e1, Rayleigh};

fn plan() -> ThresholdPlan {
    ThresholdPlan::new(0.9, vec![0.6, 1.4], vec![vec![0.35], vec![0.5]]).unwrap()
}

fn special(c: &mut Criterion) {
    c.bench_function("e1 series and continued fraction", |b| {
        b.iter(|| black_box(e1(black_box(0.3)).unwrap() + e1(black_box(4.0)).unwrap()))
    });
}

fn capacity(c: &mut Criterion) {
    let p = db_to_linear(5.0);
    c.bench_function("outage one bit", |b| b.iter(|| outage_one_bit(&Rayleigh, black_box(p)).unwrap()));
    c.bench_function("ergodic partial F=4", |b| b.iter(|| ergodic_partial_csi(&Rayleigh, black_box(p), 4).unwrap()));
}

fn tables(c: &mut Criterion) {
    let plan = plan();
    for kind in ProtocolKind::ALL {
        c.bench_function(&format!("ptilde table {kind} M=2 F=2"), |b| {
            b.iter(|| ptilde_table(&Rayleigh, kind, black_box(&plan)).unwrap())
        });
    }
    c.bench_function("analytic throughput INR M=2 F=2", |b| {
        b.iter(|| analytic_throughput(&Rayleigh, ProtocolKind::Inr, black_box(&plan), 3.0).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let plan = plan();
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.bench_function("INR 100k renewals", |b| {
        b.iter(|| simulate(&Rayleigh, ProtocolKind::Inr, black_box(&plan), 100_000, 7).unwrap())
    });
    group.finish();
}

criterion_group!(benches, special, capacity, tables, monte_carlo);
criterion_main!(benches);
