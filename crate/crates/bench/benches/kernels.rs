use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use circuitproof::edit::{EditKind, EditLog};
use circuitproof::eval::adapted_rand_error;
use circuitproof::pipeline::{detect_errors, run_pipeline, PipelineParams};
use circuitproof::rle::{decode_region, encode_region};
use circuitproof::skeleton::{distance_to_boundary, skeletonize, SkeletonParams};
use circuitproof::volume::{read_region, VolumeSource};
use circuitproof::VoxelCoord;
use circuitproof_bench::{ball_mask, small_dataset};

fn kernels(c: &mut Criterion) {
    let (mask, shape) = ball_mask(24);
    c.bench_function("distance_to_boundary_ball_r24", |b| b.iter(|| distance_to_boundary(black_box(&mask), shape, [10.0; 3])));

    let ds = small_dataset(3);
    let cell = ds.somas[1].cell_id;
    let params = SkeletonParams::default();
    c.bench_function("skeletonize_tube", |b| b.iter(|| skeletonize(&ds.base, black_box(cell), &params, None).unwrap()));

    let pred = ds.base.read_all_labels().unwrap();
    let gt = ds.ground_truth.read_all_labels().unwrap();
    c.bench_function("adapted_rand_error_2m_voxels", |b| b.iter(|| adapted_rand_error(black_box(&pred), &gt).unwrap()));

    let pp = PipelineParams::default();
    c.bench_function("pipeline_and_detect", |b| {
        b.iter(|| {
            let art = run_pipeline(&ds.base, &ds.somas, &ds.synapses, &pp).unwrap();
            detect_errors(&ds.base, &art, &pp).unwrap()
        })
    });

    let region = read_region(&ds.base, VoxelCoord::new(64, 64, 64), [128, 128, 64]).unwrap();
    let bytes = encode_region(&region).unwrap();
    c.bench_function("encode_region_128x128x64", |b| b.iter(|| encode_region(black_box(&region)).unwrap()));
    c.bench_function("decode_region_128x128x64", |b| b.iter(|| decode_region(black_box(&bytes)).unwrap()));

    let frag = ds.cuts[0].fragment_ids[0];
    let target = ds.cuts[0].tube_id;
    let base: Arc<dyn VolumeSource> = Arc::new(ds.base.clone());
    let mut log = EditLog::new(base, Vec::new(), Vec::new()).unwrap();
    let p = ds.base.meta().voxel_center(VoxelCoord::new(64, 64, 64));
    log.apply("bench", None, EditKind::MergeObjects { target_id: target, source_id: frag, anchor_a: p, anchor_b: p }).unwrap();
    let head = log.head();
    c.bench_function("materialize_region_after_merge", |b| {
        b.iter(|| log.materialize_region(head, VoxelCoord::new(64, 64, 64), [128, 128, 64]).unwrap())
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);
