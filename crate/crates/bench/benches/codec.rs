use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::hint::black_box;
use voxhash::{decode_frame, encode_frame};
use voxhash_bench::{export_frames, preset_frames};

fn codec(c: &mut Criterion) {
    let frames = export_frames(&preset_frames("relay", 20));
    let keys: u64 = frames.iter().map(|f| f.key_count() as u64).sum();
    let encoded: Vec<Vec<u8>> = frames.iter().map(encode_frame).collect();

    let mut g = c.benchmark_group("codec");
    g.throughput(Throughput::Elements(keys));
    g.bench_function("encode", |b| {
        b.iter(|| frames.iter().map(|f| encode_frame(black_box(f)).len()).sum::<usize>())
    });
    g.bench_function("decode", |b| {
        b.iter(|| encoded.iter().map(|e| decode_frame(black_box(e)).unwrap().key_count()).sum::<u32>())
    });
    g.finish();
}

criterion_group!(benches, codec);
criterion_main!(benches);
