//! Simulator -> pipeline round trips at zero noise.

use std::f64::consts::PI;

use lapswim_core::energetics::{thrust_power, work_over, EnergeticsConfig};
use lapswim_core::localization::align_at_corner;
use lapswim_core::orientation::estimate_orientation;
use lapswim_core::pipeline::{analyze_trial, AnalysisConfig, TrialAnalysis};
use lapswim_core::Phase;
use lapswim_core::simulator::{generate_truth, synthesize_tag, LapScenario, NoiseConfig, Truth, TurnDirection};

fn quiet(laps: usize) -> LapScenario {
    LapScenario { laps, noise: NoiseConfig::zero(), ..LapScenario::default() }
}

/// One lap with the corner swum at 3 m/s.
fn corner_lap() -> LapScenario {
    let mut sc = quiet(1);
    sc.speed.corner = 3.0;
    sc
}

fn run(sc: &LapScenario) -> (Truth, TrialAnalysis) {
    let truth = generate_truth(sc).unwrap();
    let cfg = AnalysisConfig { animal: sc.animal.clone(), ..AnalysisConfig::default() };
    let a = analyze_trial(&synthesize_tag(&truth), &cfg).unwrap();
    (truth, a)
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

#[test]
fn yaw_recovered_within_half_degree_rms() {
    for sc in [quiet(8), corner_lap()] {
        let truth = generate_truth(&sc).unwrap();
        let tag = synthesize_tag(&truth);
        let poses = estimate_orientation(&tag.imu, &AnalysisConfig::default().orientation).unwrap();
        let ms: f64 = tag
            .imu
            .iter()
            .zip(&poses)
            .map(|(s, p)| wrap(p.yaw - truth.model().state(s.t).yaw).powi(2))
            .sum::<f64>()
            / poses.len() as f64;
        assert!(ms.sqrt().to_degrees() < 0.5, "yaw rms {} deg", ms.sqrt().to_degrees());
    }
}

#[test]
fn eight_laps_detected_with_corner_at_apex() {
    let (truth, a) = run(&quiet(8));
    assert_eq!(a.laps.len(), 8);
    for (lap, tl) in a.laps.iter().zip(&truth.laps) {
        assert!((lap.t_c - tl.t_apex).abs() <= a.timeline.dt + 1e-9, "t_c {} apex {}", lap.t_c, tl.t_apex);
        assert!(lap.t_s >= tl.t_start && lap.t_e <= tl.t_end + a.timeline.dt);
    }
}

#[test]
fn corner_lap_geometry() {
    let sc = corner_lap();
    let (truth, a) = run(&sc);
    assert_eq!(a.laps.len(), 1);
    let (lap, s, tl) = (a.laps[0], &a.summaries[0], truth.laps[0]);
    let model = truth.model();

    // distance swum inside the detected lap window
    let true_path = model.state(lap.t_e).s - model.state(lap.t_s).s;
    assert!((s.path_length / true_path - 1.0).abs() < 0.005, "{} vs {true_path}", s.path_length);

    assert!((lap.t_c - tl.t_apex).abs() <= a.timeline.dt + 1e-9);
    let true_peak = truth.samples.iter().map(|x| x.a_n.abs()).fold(0.0, f64::max);
    assert!((s.peak_a_n / true_peak - 1.0).abs() < 0.03, "{} vs {true_peak}", s.peak_a_n);

    let r = sc.corner_radius;
    assert!((s.kinematic_radius_at_corner / r - 1.0).abs() < 0.02, "{}", s.kinematic_radius_at_corner);
    // the finite-difference radius of a forward-Euler polyline turning by
    // dpsi per step is v dt cos³(dpsi/2) / sin(dpsi)
    let dpsi = sc.speed.corner / r * a.timeline.dt;
    let expected = r * dpsi * (dpsi / 2.0).cos().powi(3) / dpsi.sin();
    assert!((s.radius_at_corner / expected - 1.0).abs() < 0.01, "{} vs {expected}", s.radius_at_corner);
}

#[test]
fn dead_reckoned_endpoint_close_to_truth() {
    let (truth, a) = run(&corner_lap());
    let lap = a.laps[0];
    let model = truth.model();
    let (p0, p1) = (model.state(lap.t_s), model.state(lap.t_e));
    // compare displacement over the lap window
    let (dx, dy) = (a.track.x[lap.i_e] - a.track.x[lap.i_s], a.track.y[lap.i_e] - a.track.y[lap.i_s]);
    let err = (dx - (p1.x - p0.x)).hypot(dy - (p1.y - p0.y));
    assert!(err < 0.01 * a.summaries[0].path_length, "endpoint error {err}");
}

#[test]
fn energetics_on_truth_matches_pipeline() {
    for sc in [quiet(2), LapScenario { noise: NoiseConfig::zero(), laps: 2, ..LapScenario::preset("TT03").unwrap() }] {
        let (truth, a) = run(&sc);
        let cfg = EnergeticsConfig::default();
        let truth_power: Vec<_> =
            truth.kinematic_states().iter().map(|s| thrust_power(s.v, s.a_t, s.depth, &sc.animal, &cfg)).collect();
        for (lap, s) in a.laps.iter().zip(&a.summaries) {
            let w = work_over(truth_power[lap.samples()].iter(), a.timeline.dt);
            let rel = |x: f64, y: f64| (x / y - 1.0).abs();
            assert!(rel(s.work.thrust_signed, w.thrust_signed) < 0.05, "{} {}", s.work.thrust_signed, w.thrust_signed);
            assert!(rel(s.work.thrust_rectified, w.thrust_rectified) < 0.05);
            assert!(rel(s.work.drag, w.drag) < 0.05);
            let n = lap.samples().len() as f64;
            let mean_v: f64 = truth_power[lap.samples()].iter().map(|p| p.v).sum::<f64>() / n;
            assert!(rel(s.mean_speed, mean_v) < 0.05);
            let mean_cot: f64 = truth_power[lap.samples()].iter().filter_map(|p| p.cot).sum::<f64>()
                / truth_power[lap.samples()].iter().filter(|p| p.cot.is_some()).count() as f64;
            assert!(rel(s.mean_cot.unwrap(), mean_cot) < 0.05, "{:?} {mean_cot}", s.mean_cot);
        }
    }
}

#[test]
fn mirrored_turns_align_as_mirror_images() {
    let mut sc = quiet(2);
    sc.turn = TurnDirection::Alternate;
    let (_, a) = run(&sc);
    let tracks: Vec<_> = a.laps.iter().map(|l| a.track.slice(l.i_s, l.i_e)).collect();
    let corners: Vec<_> = a.laps.iter().map(|l| Some(l.i_c - l.i_s)).collect();
    let aligned = align_at_corner(&tracks, &corners).unwrap();
    let (c0, c1) = (corners[0].unwrap(), corners[1].unwrap());
    // each mirrored point of the second lap lies near the first lap's polyline;
    // the slack covers corner samples landing at different points of the arc
    let (a0, a1) = (&aligned[0], &aligned[1]);
    for k in c1 - 20..=c1 + 20 {
        let (px, py) = (a1.x[k], -a1.y[k]);
        let d = (c0 - 25..c0 + 25)
            .map(|i| seg_dist((px, py), a0.point(i), a0.point(i + 1)))
            .fold(f64::INFINITY, f64::min);
        assert!(d < 0.25, "offset {d} at sample {k}");
    }
}

fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (ux, uy) = (b.0 - a.0, b.1 - a.1);
    let l2 = ux * ux + uy * uy;
    let t = if l2 > 0.0 { (((p.0 - a.0) * ux + (p.1 - a.1) * uy) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (p.0 - a.0 - t * ux).hypot(p.1 - a.1 - t * uy)
}

#[test]
fn analysis_is_deterministic() {
    let sc = LapScenario { laps: 2, ..LapScenario::default() };
    let (_, a) = run(&sc);
    let (_, b) = run(&sc);
    assert_eq!(a.states, b.states);
    assert_eq!(a.laps, b.laps);
    assert_eq!(a.summaries, b.summaries);
}

#[test]
fn preset_corner_radii_and_glide() {
    // trial-average cornering radius, mean ± sd per animal
    let bands = [("TT01", 1.3, 0.3), ("TT02", 1.9, 0.8), ("TT03", 1.0, 0.2)];
    for (name, mean, sd) in bands {
        let (_, a) = run(&LapScenario::preset(name).unwrap());
        assert_eq!(a.laps.len(), 8, "{name}");
        let n = a.summaries.len() as f64;
        let r = a.summaries.iter().map(|s| s.radius_at_corner).sum::<f64>() / n;
        assert!((r - mean).abs() <= sd, "{name} radius {r}");
        if name == "TT03" {
            let glide = a.summaries.iter().map(|s| s.phase_percent(Phase::Glide)).sum::<f64>() / n;
            assert!((glide - 13.0).abs() <= 5.0, "glide {glide}%");
        }
    }
}
