use serde::Serialize;

use super::{samples_for, LapEvents, SegmentationConfig};
use crate::kinematics::KinematicState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Rest,
    Transient,
    ConsistentSpeed,
    Glide,
}

impl Phase {
    pub fn is_active_fluking(self) -> bool {
        matches!(self, Phase::Transient | Phase::ConsistentSpeed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Rest => "rest",
            Phase::Transient => "transient",
            Phase::ConsistentSpeed => "consistent_speed",
            Phase::Glide => "glide",
        }
    }
}

/// Labels every sample of the trial.
///
/// Samples outside laps are `Rest`. Inside a lap, fluking samples are
/// `Transient` when |a_t| stays at or above `a_thresh` for
/// `transient_sustain_s`, otherwise `ConsistentSpeed`; samples without
/// fluking are `Glide`. Runs shorter than `min_phase_s` are then absorbed
/// into the preceding run (the following one at the start of a lap).
pub fn classify_phases(states: &[KinematicState], laps: &[LapEvents], cfg: &SegmentationConfig) -> Vec<Phase> {
    let mut labels = vec![Phase::Rest; states.len()];
    if states.len() < 2 {
        return labels;
    }
    let dt = states[1].t - states[0].t;
    let osc = cfg.pitch_osc_deg.to_radians();
    let n_trans = samples_for(cfg.transient_sustain_s, dt);
    let n_min = samples_for(cfg.min_phase_s, dt);

    for lap in laps {
        let r = lap.samples();
        let seg = &mut labels[r.clone()];
        for (k, i) in r.clone().enumerate() {
            let s = &states[i];
            seg[k] = if s.pitch_osc >= osc {
                if s.a_t.abs() >= cfg.a_thresh {
                    Phase::Transient
                } else {
                    Phase::ConsistentSpeed
                }
            } else {
                Phase::Glide
            };
        }
        // unsustained acceleration counts as consistent-speed swimming
        for (start, len, phase) in runs(seg) {
            if phase == Phase::Transient && len < n_trans {
                seg[start..start + len].fill(Phase::ConsistentSpeed);
            }
        }
        merge_short_runs(seg, n_min);
    }
    labels
}

fn runs(labels: &[Phase]) -> Vec<(usize, usize, Phase)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=labels.len() {
        if i == labels.len() || labels[i] != labels[start] {
            out.push((start, i - start, labels[start]));
            start = i;
        }
    }
    out
}

fn merge_short_runs(seg: &mut [Phase], n_min: usize) {
    loop {
        let rs = runs(seg);
        if rs.len() <= 1 {
            return;
        }
        let Some(k) = rs.iter().position(|r| r.1 < n_min) else {
            return;
        };
        let (start, len, _) = rs[k];
        let fill = if k == 0 { rs[1].2 } else { rs[k - 1].2 };
        seg[start..start + len].fill(fill);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::detect_laps;
    use crate::segmentation::test_support::lap_states;

    fn labelled(v_of_t: impl Fn(f64) -> (f64, f64, f64), secs: f64) -> (Vec<KinematicState>, Vec<Phase>) {
        let dt = 0.2;
        let n = (secs / dt) as usize;
        let st: Vec<KinematicState> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                let (v, a_t, osc) = v_of_t(t);
                KinematicState { t, v, a_t, pitch_osc: osc, ..Default::default() }
            })
            .collect();
        let lap = LapEvents { t_s: 0.0, t_c: 5.0, t_e: n as f64 * dt, turn_start: 4.0, turn_end: 6.0, i_s: 0, i_c: 25, i_e: n };
        let labels = classify_phases(&st, &[lap], &SegmentationConfig::default());
        (st, labels)
    }

    #[test]
    fn trapezoid_with_fluking() {
        let (_, labels) = labelled(
            |t| {
                if t < 3.0 {
                    (1.0 + t, 1.0, 0.2)
                } else if t < 9.0 {
                    (4.0, 0.0, 0.2)
                } else {
                    (4.0 - (t - 9.0), -1.0, 0.2)
                }
            },
            12.0,
        );
        let seq: Vec<Phase> = runs(&labels).iter().map(|r| r.2).collect();
        assert_eq!(seq, vec![Phase::Transient, Phase::ConsistentSpeed, Phase::Transient]);
    }

    #[test]
    fn terminal_glide() {
        let (_, labels) = labelled(|t| if t < 8.0 { (3.0, 0.0, 0.2) } else { (3.0 - 0.5 * (t - 8.0), -0.5, 0.0) }, 10.0);
        assert_eq!(labels[0], Phase::ConsistentSpeed);
        assert_eq!(*labels.last().unwrap(), Phase::Glide);
        let glide = labels.iter().filter(|&&p| p == Phase::Glide).count();
        assert_eq!(glide, 10);
    }

    #[test]
    fn short_runs_are_merged() {
        // a 0.4 s fluking gap inside cruise is absorbed
        let (_, labels) = labelled(|t| (3.0, 0.0, if (4.0..4.4).contains(&t) { 0.0 } else { 0.2 }), 10.0);
        assert!(labels.iter().all(|&p| p == Phase::ConsistentSpeed));
    }

    #[test]
    fn outside_laps_is_rest_and_lap_partitioned() {
        let st = lap_states(20, 0.2);
        let laps = detect_laps(&st, &SegmentationConfig::default());
        let labels = classify_phases(&st, &laps, &SegmentationConfig::default());
        assert!(labels[..laps[0].i_s].iter().all(|&p| p == Phase::Rest));
        assert!(labels[laps[0].i_e..].iter().all(|&p| p == Phase::Rest));
        assert!(labels[laps[0].samples()].iter().all(|&p| p != Phase::Rest));
    }
}
