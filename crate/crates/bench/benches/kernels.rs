use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ctxaug_bench::{ellipse_mask, noise_image, scene_input, speckle_mask};
use ctxaug_core::mask::invert;
use ctxaug_core::transform::{apply_masked, blur};
use ctxaug_core::{
    parse_scenario, rle_decode, rle_encode, run_pipeline, BlurPlacement, KernelSize,
    PipelineConfig, TransformKind,
};
use std::hint::black_box;

fn rle(c: &mut Criterion) {
    let mut g = c.benchmark_group("rle");
    for (name, mask) in [
        ("ellipse-480x640", ellipse_mask(480, 640)),
        ("speckle-480x640", speckle_mask(480, 640, 0.5, 1)),
    ] {
        let encoded = rle_encode(&mask);
        g.throughput(Throughput::Elements(480 * 640));
        g.bench_function(BenchmarkId::new("encode", name), |b| {
            b.iter(|| rle_encode(black_box(&mask)))
        });
        g.bench_function(BenchmarkId::new("decode", name), |b| {
            b.iter(|| rle_decode(black_box(&encoded)).unwrap())
        });
    }
    g.finish();
}

fn gaussian(c: &mut Criterion) {
    let img = noise_image(640, 480, 2);
    let mut g = c.benchmark_group("blur-640x480");
    g.throughput(Throughput::Elements(640 * 480));
    for k in [3, 11, 31] {
        let k = KernelSize::new(k).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(k.get()), &k, |b, &k| {
            b.iter(|| blur(black_box(&img), k))
        });
    }
    g.finish();
}

fn masked(c: &mut Criterion) {
    let img = noise_image(640, 480, 3);
    let bg = invert(&ellipse_mask(480, 640));
    let mut g = c.benchmark_group("masked-640x480");
    for (name, t) in [
        ("solid-black", TransformKind::SOLID_BLACK),
        ("grayscale", TransformKind::Grayscale),
        (
            "blur11",
            TransformKind::GaussianBlur(KernelSize::new(11).unwrap()),
        ),
    ] {
        g.bench_function(name, |b| {
            b.iter(|| apply_masked(black_box(&img), &bg, t).unwrap())
        });
    }
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let (img, masks) = scene_input(640, 480, 4);
    let sc = parse_scenario("F+B:Blur11").unwrap();
    let mut g = c.benchmark_group("pipeline-640x480-to-256");
    for placement in [BlurPlacement::BeforeResize, BlurPlacement::AfterResize] {
        for train in [false, true] {
            let cfg = PipelineConfig {
                placement: Some(placement),
                train,
                seed: 42,
                ..PipelineConfig::default()
            };
            let id = format!("{placement}{}", if train { "-train" } else { "" });
            g.bench_function(id, |b| {
                b.iter(|| run_pipeline(black_box(&img), &masks, &sc, &cfg, 1).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, rle, gaussian, masked, pipeline);
criterion_main!(benches);
