//! Forecast-rollout throughput: 40 steps with 20 on-rails actors and
//! collision checks per tick, the configuration the performance target
//! is stated against.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use onrails::dynamics::{forecast_ego, DynamicsConfig, SpeedPlan};
use onrails::scene::SceneFrame;
use onrails::synth::FrameBuilder;

fn bench_frame(actors: usize, horizon: usize) -> SceneFrame {
    let mut builder = FrameBuilder::new(0)
        .ego_speed(6.0)
        .straight_route(150.0)
        .horizon(horizon);
    for i in 0..actors {
        let x = 15.0 + 5.0 * i as f64;
        let y = if i % 2 == 0 { 4.0 } else { -4.0 };
        builder = builder.vehicle(&format!("v{i}"), x, y, 0.0, 2.0);
    }
    builder.build()
}

fn rollout_benchmarks(c: &mut Criterion) {
    let cfg = DynamicsConfig::default();

    let frame = bench_frame(20, 40);
    let plan = SpeedPlan::constant_speed(8.0, 40);
    c.bench_function("forecast_40steps_20actors", |b| {
        b.iter(|| {
            let r =
                forecast_ego(black_box(&frame), &frame.route.dense_path, &plan, 40, &cfg).unwrap();
            black_box(r.poses.len())
        })
    });

    let empty = bench_frame(0, 40);
    c.bench_function("forecast_40steps_no_actors", |b| {
        b.iter(|| {
            let r =
                forecast_ego(black_box(&empty), &empty.route.dense_path, &plan, 40, &cfg).unwrap();
            black_box(r.poses.len())
        })
    });

    let short = bench_frame(20, 10);
    let short_plan = SpeedPlan::constant_speed(8.0, 10);
    c.bench_function("forecast_10steps_20actors", |b| {
        b.iter(|| {
            let r = forecast_ego(
                black_box(&short),
                &short.route.dense_path,
                &short_plan,
                10,
                &cfg,
            )
            .unwrap();
            black_box(r.poses.len())
        })
    });
}

criterion_group!(benches, rollout_benchmarks);
criterion_main!(benches);
