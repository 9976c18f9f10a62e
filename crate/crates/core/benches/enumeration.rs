use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hermcurve::families::{construct_family, FamilyId};
use hermcurve::hermitian::{enumerate_variety_points, HermitianForm};
use hermcurve::pipeline::{run_verify, CheckKind, VerifyOptions};
use hermcurve::plane::affine_points;
use hermcurve::Exec;
use std::hint::black_box;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn plane_points(c: &mut Criterion) {
    let mut g = c.benchmark_group("affine_points");
    for (id, q) in [(FamilyId::Ex53, 5u64), (FamilyId::Ex54, 4)] {
        let inst = construct_family(id, q, 0).unwrap();
        let f = inst.field();
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, format!("{}-q{q}", id.name())), &exec, |b, &exec| {
                b.iter(|| affine_points(f, black_box(&inst.curve.plane), 2, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn hermitian_points(c: &mut Criterion) {
    let mut g = c.benchmark_group("hermitian_variety");
    for q in [3u64, 4] {
        let inst = construct_family(if q == 3 { FamilyId::Ex53 } else { FamilyId::Ex54 }, q, 0).unwrap();
        let form = HermitianForm::canonical(q, 4);
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, format!("H(3,{})", q * q)), &exec, |b, &exec| {
                b.iter(|| enumerate_variety_points(inst.field(), black_box(&form), 1, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn branch_checks(c: &mut Criterion) {
    let mut g = c.benchmark_group("branch_checks");
    g.sample_size(10);
    for (name, exec) in MODES {
        let mut opts = VerifyOptions::all(FamilyId::Ex51);
        opts.checks = vec![CheckKind::RationalityValuation, CheckKind::WronskianIdentity];
        opts.exec = exec;
        g.bench_function(BenchmarkId::new(name, "ex51-q5"), |b| b.iter(|| run_verify(FamilyId::Ex51, 5, 0, &opts).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, plane_points, hermitian_points, branch_checks);
criterion_main!(benches);
