//! Sequential versus rayon on the hot paths.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ckn_lab::bubbles::{self, BubbleSpec};
use ckn_lab::calculus;
use ckn_lab::cylinder::{from_nodal, to_nodal};
use ckn_lab::exec::{self, Parallelism};
use ckn_lab::linops::{self, ConstraintSet};
use ckn_lab::stability_lab::{self as lab, CorrectionLevel, Resolution};
use ckn_lab::FsParameters;

fn policies() -> Vec<(&'static str, Parallelism)> {
    let mut v = vec![("sequential", Parallelism::Sequential)];
    if exec::rayon_available() {
        v.push(("rayon", Parallelism::Rayon));
    }
    v
}

fn per_mode(c: &mut Criterion) {
    let params = FsParameters::new(3, 2.0).unwrap();
    let res = Resolution { n_t: 8193, max_mode: 8, pad: None };
    let grid = res.grid(params, &[0.0, 14.0]).unwrap();
    let specs = [BubbleSpec::unit(0.0), BubbleSpec::unit(14.0)];
    let mut v = bubbles::bubble_sum(&grid, &specs).unwrap();
    v.axpy(0.1, &bubbles::kernel_profile(&grid, 0.0, 3).unwrap());
    let f = calculus::residual(&v);
    let rhs = linops::build_r1_ex(&grid, &specs).unwrap();
    let cons = ConstraintSet::kernels(&[0.0, 14.0]);

    let mut g = c.benchmark_group("per_mode");
    for (name, p) in policies() {
        exec::set_policy(p);
        g.bench_with_input(BenchmarkId::new("riesz_solve", name), &f, |b, f| b.iter(|| calculus::riesz_solve(black_box(f))));
        g.bench_with_input(BenchmarkId::new("nodal_round_trip", name), &v, |b, v| {
            b.iter(|| from_nodal(v.grid(), &to_nodal(black_box(v))))
        });
        g.bench_with_input(BenchmarkId::new("bordered_solve", name), &rhs, |b, rhs| {
            b.iter(|| linops::solve_constrained(&specs, black_box(rhs), &cons).unwrap())
        });
    }
    g.finish();
    exec::set_policy(Parallelism::Rayon);
}

fn sweep(c: &mut Criterion) {
    let params = FsParameters::new(3, 2.0).unwrap();
    let sched = lab::schedule(&lab::spaced(0.02, 0.2, 4, true), &[12.0, 16.0], CorrectionLevel::Full, false).unwrap();
    let res = Resolution::default();
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    for (name, p) in policies() {
        exec::set_policy(p);
        g.bench_function(BenchmarkId::new("eight_records", name), |b| {
            b.iter(|| lab::run_sweep(params, &res, black_box(&sched), 7).unwrap())
        });
    }
    g.finish();
    exec::set_policy(Parallelism::Rayon);
}

criterion_group!(benches, per_mode, sweep);
criterion_main!(benches);
