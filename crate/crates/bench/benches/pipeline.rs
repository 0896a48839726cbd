use criterion::{black_box, criterion_group, criterion_main, Criterion};
use lapswim_core::energetics::fit_power_law;
use lapswim_core::localization::{curvature_radius, dead_reckon};
use lapswim_core::orientation::estimate_orientation;
use lapswim_core::pipeline::{analyze_trial, AnalysisConfig};
use lapswim_core::simulator::{generate_truth, synthesize_tag};
use lapswim_core::LapScenario;

fn pipeline(c: &mut Criterion) {
    let sc = LapScenario { laps: 2, ..LapScenario::default() };
    let truth = generate_truth(&sc).unwrap();
    let tag = synthesize_tag(&truth);
    let cfg = AnalysisConfig::default();
    let analysis = analyze_trial(&tag, &cfg).unwrap();

    c.bench_function("simulate_two_laps", |b| b.iter(|| synthesize_tag(&generate_truth(black_box(&sc)).unwrap())));
    c.bench_function("orientation_50hz", |b| b.iter(|| estimate_orientation(black_box(&tag.imu), &cfg.orientation).unwrap()));
    c.bench_function("analyze_trial_two_laps", |b| b.iter(|| analyze_trial(black_box(&tag), &cfg).unwrap()));
    c.bench_function("dead_reckon", |b| b.iter(|| dead_reckon(black_box(&analysis.states), (0.0, 0.0), 0.2)));
    c.bench_function("curvature_radius", |b| {
        b.iter(|| curvature_radius(black_box(&analysis.track.x), &analysis.track.y, 0.2, 1e-6))
    });
    let pts: Vec<(f64, f64)> = (0..50).map(|i| 0.5 + 0.04 * i as f64).map(|v| (v, 0.0347 * f64::powf(v, 2.08))).collect();
    c.bench_function("fit_power_law_50", |b| b.iter(|| fit_power_law(black_box(&pts), true).unwrap()));
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
