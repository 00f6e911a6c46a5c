use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use starkgras::class_unit::{class_group, ClassGroupOptions, FieldCharacter};
use starkgras::cyclotomic_fields::AbelianField;
use starkgras::exact_algebra::arith::is_squarefree;
use starkgras::kolyvagin::{KolyvaginCaps, KolyvaginContext};
use starkgras::par::{self, ExecMode};
use starkgras::stark::FieldArithmetic;
use std::hint::black_box;
use std::time::Duration;

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn class_number_scan(c: &mut Criterion) {
    let ds: Vec<i64> = (2..80).filter(|&d| is_squarefree(d as u64)).collect();
    let mut g = c.benchmark_group("class_number_scan");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                par::map(mode, &ds, |&d| {
                    let l = AbelianField::real_quadratic(d).unwrap();
                    let opts = ClassGroupOptions {
                        mode: ExecMode::Sequential,
                        ..ClassGroupOptions::default()
                    };
                    black_box(class_group(&l, &opts).unwrap().order())
                })
            })
        });
    }
    g.finish();
}

fn derived_classes(c: &mut Criterion) {
    let l = AbelianField::real_quadratic(5).unwrap();
    let arith = FieldArithmetic::compute(&l, &ClassGroupOptions::default()).unwrap();
    let psi = l.characters().into_iter().find(|c| !c.is_trivial()).unwrap();
    let chi = FieldCharacter::over_rationals(&l, &psi).unwrap();
    let ctx = KolyvaginContext::new(arith, &chi, 3, 1, KolyvaginCaps::default()).unwrap();
    let levels = ctx.levels(100).unwrap();
    let mut g = c.benchmark_group("derived_classes");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| black_box(ctx.derived_classes(&levels, mode)))
        });
    }
    g.finish();
}

criterion_group!(benches, class_number_scan, derived_classes);
criterion_main!(benches);
