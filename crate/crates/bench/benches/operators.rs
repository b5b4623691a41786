use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fastadj::{
    blur_op_with_path, conv_full, gaussian_psf, xcorr_valid, AdjointMode, ConvPath, Dwt, ExtensionKind, WaveletKind,
};
use fastadj_bench::{chart, signal};

fn bench_wavelet2d(c: &mut Criterion) {
    let mut group = c.benchmark_group("wavelet2d");
    for side in [64usize, 128] {
        let img = chart(side);
        for kind in [WaveletKind::Haar, WaveletKind::Cdf97] {
            let dwt = Dwt::new(kind, 3, ExtensionKind::Sym).unwrap();
            for mode in [AdjointMode::TrueAdjoint, AdjointMode::PinvApprox] {
                let op = dwt.synthesis2d_op(side, side, mode).unwrap();
                let id = format!("{} {:?} {side}", kind.name(), mode);
                group.bench_with_input(BenchmarkId::new("adjoint", &id), img.as_slice(), |b, x| {
                    b.iter(|| op.apply_adjoint(x).unwrap())
                });
            }
            let op = dwt.synthesis2d_op(side, side, AdjointMode::TrueAdjoint).unwrap();
            let coeffs = op.apply_adjoint(img.as_slice()).unwrap();
            group.bench_with_input(
                BenchmarkId::new("synthesis", format!("{} {side}", kind.name())),
                &coeffs,
                |b, x| b.iter(|| op.apply(x).unwrap()),
            );
        }
    }
    group.finish();
}

fn bench_blur(c: &mut Criterion) {
    let mut group = c.benchmark_group("blur");
    let psf = gaussian_psf(9, 2.0).unwrap();
    for side in [64usize, 128, 256] {
        let img = chart(side);
        for path in [ConvPath::Direct, ConvPath::Fft] {
            let op = blur_op_with_path(&psf, side, side, ExtensionKind::Sym, path).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("{path:?}"), side), img.as_slice(), |b, x| {
                b.iter(|| op.apply(x).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_conv(c: &mut Criterion) {
    let mut group = c.benchmark_group("conv");
    for (k, n) in [(10usize, 30usize), (100, 400), (844, 1767)] {
        let h = signal(k, 1);
        let s = signal(n, 2);
        let r = signal(k + n - 1, 3);
        group.bench_function(BenchmarkId::new("full", format!("{k}x{n}")), |b| {
            b.iter(|| conv_full(&h, &s).unwrap())
        });
        group.bench_function(BenchmarkId::new("xcorr_valid", format!("{k}x{n}")), |b| {
            b.iter(|| xcorr_valid(&r, &s).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_wavelet2d, bench_blur, bench_conv);
criterion_main!(benches);
