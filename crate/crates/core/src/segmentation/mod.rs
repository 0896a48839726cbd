//! Lap and cornering-event detection, swimming phases, percent-lap
//! normalisation and per-lap summaries.

mod metrics;
mod normalize;
mod phases;

pub use metrics::{lap_circle_fits, lap_metrics, LapSummary, PhaseBreakdown};
pub use normalize::{normalize_lap, percent_lap, percent_lap_time, NormalizedLap};
pub use phases::{classify_phases, Phase};

use serde::{Deserialize, Serialize};

use crate::kinematics::KinematicState;

/// Detection thresholds. Durations are converted to whole samples with `ceil`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    /// Speed above which the animal is considered under way (m/s).
    pub v_start: f64,
    pub start_sustain_s: f64,
    pub end_sustain_s: f64,
    /// Tangential acceleration magnitude marking transient swimming (m/s²).
    pub a_thresh: f64,
    pub transient_sustain_s: f64,
    /// Pitch oscillation amplitude marking active fluking (deg).
    pub pitch_osc_deg: f64,
    pub min_phase_s: f64,
    /// Fraction of peak |a_n| bounding the turn window.
    pub turn_fraction: f64,
    /// Relative tolerance for ties in the |a_n| maximum.
    pub tie_tolerance: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            v_start: 0.5,
            start_sustain_s: 1.0,
            end_sustain_s: 2.0,
            a_thresh: 0.2,
            transient_sustain_s: 1.0,
            pitch_osc_deg: 5.0,
            min_phase_s: 0.6,
            turn_fraction: 0.55,
            tie_tolerance: 1e-9,
        }
    }
}

pub(crate) fn samples_for(seconds: f64, dt: f64) -> usize {
    ((seconds / dt) - 1e-9).ceil().max(1.0) as usize
}

/// Timing of one lap. `i_e` is the first sample after the lap, so the lap
/// covers samples `i_s..i_e` and lasts `t_e - t_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LapEvents {
    pub t_s: f64,
    pub t_c: f64,
    pub t_e: f64,
    pub turn_start: f64,
    pub turn_end: f64,
    pub i_s: usize,
    pub i_c: usize,
    pub i_e: usize,
}

impl LapEvents {
    pub fn duration(&self) -> f64 {
        self.t_e - self.t_s
    }

    pub fn turn_duration(&self) -> f64 {
        self.turn_end - self.turn_start
    }

    pub fn samples(&self) -> std::ops::Range<usize> {
        self.i_s..self.i_e
    }
}

/// Finds laps, their cornering events and turn windows.
///
/// A lap starts at the first sample of a run where speed stays above
/// `v_start` for `start_sustain_s` with pitch oscillation present, and ends
/// at the first sample of a run below `v_start` lasting `end_sustain_s`.
/// The cornering event is the maximum of |a_n| inside the lap (earliest on
/// ties); the turn window is bounded by the nearest crossings of
/// `turn_fraction` of that maximum, linearly interpolated. Laps that never
/// end, or whose turn window does not close inside the lap, are dropped.
pub fn detect_laps(states: &[KinematicState], cfg: &SegmentationConfig) -> Vec<LapEvents> {
    let n = states.len();
    if n < 3 {
        return Vec::new();
    }
    let dt = states[1].t - states[0].t;
    let n_start = samples_for(cfg.start_sustain_s, dt);
    let n_end = samples_for(cfg.end_sustain_s, dt);
    let osc = cfg.pitch_osc_deg.to_radians();
    let moving = |i: usize| states[i].v > cfg.v_start;

    let mut laps = Vec::new();
    let mut i = 0;
    while i + n_start <= n {
        let run_ok = (i..i + n_start).all(moving);
        let fluking = (i..i + n_start).any(|k| states[k].pitch_osc >= osc);
        if !(run_ok && fluking) {
            i += 1;
            continue;
        }
        let i_s = i;
        // lap end: first sample of a sustained below-threshold run
        let mut j = i_s + 1;
        let mut i_e = None;
        while j + n_end <= n {
            if !moving(j) && (j..j + n_end).all(|k| !moving(k)) {
                i_e = Some(j);
                break;
            }
            j += 1;
        }
        let Some(i_e) = i_e else {
            log::warn!("lap starting at t={:.2} s never ends; dropped", states[i_s].t);
            break;
        };
        match lap_events(states, i_s, i_e, cfg) {
            Some(ev) => laps.push(ev),
            None => log::warn!("lap at t={:.2} s has no closed turn window; dropped", states[i_s].t),
        }
        i = i_e;
    }
    laps
}

fn lap_events(states: &[KinematicState], i_s: usize, i_e: usize, cfg: &SegmentationConfig) -> Option<LapEvents> {
    let an = |k: usize| states[k].a_n.abs();
    let peak = (i_s..i_e).map(an).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return None;
    }
    let tol = cfg.tie_tolerance * peak;
    let ties: Vec<usize> = (i_s..i_e).filter(|&k| an(k) >= peak - tol).collect();
    let i_c = ties[0];
    if ties.len() > 1 {
        log::warn!("{} samples tie for peak |a_n| near t={:.2} s; using the earliest", ties.len(), states[i_c].t);
    }
    let level = cfg.turn_fraction * peak;
    let cross = |a: usize, b: usize| {
        // a below level, b at/above (or vice versa); interpolate time of crossing
        let (ya, yb) = (an(a), an(b));
        let (ta, tb) = (states[a].t, states[b].t);
        ta + (level - ya) / (yb - ya) * (tb - ta)
    };
    let k_before = (i_s..i_c).rev().find(|&k| an(k) < level)?;
    let turn_start = cross(k_before, k_before + 1);
    let k_after = (i_c + 1..i_e).find(|&k| an(k) < level)?;
    let turn_end = cross(k_after - 1, k_after);

    let ev = LapEvents {
        t_s: states[i_s].t,
        t_c: states[i_c].t,
        t_e: states[i_e].t,
        turn_start,
        turn_end,
        i_s,
        i_c,
        i_e,
    };
    (ev.t_s < ev.turn_start && ev.turn_start < ev.t_c && ev.t_c < ev.turn_end && ev.turn_end < ev.t_e).then_some(ev)
}


#[cfg(test)]
mod tests {
    use super::test_support::lap_states;
    use super::*;

    #[test]
    fn single_synthetic_lap() {
        let st = lap_states(20, 0.2);
        let laps = detect_laps(&st, &SegmentationConfig::default());
        assert_eq!(laps.len(), 1);
        let l = laps[0];
        assert!((l.t_s - 4.0).abs() < 1e-9);
        assert!((l.t_c - 14.0).abs() < 1e-9);
        // 0.55 level of a gaussian with sigma' = 0.6: |t - tc| = 0.6 sqrt(-ln 0.55)
        let half = 0.6 * (-(0.55f64).ln()).sqrt();
        assert!((l.turn_start - (14.0 - half)).abs() < 0.03);
        assert!((l.turn_end - (14.0 + half)).abs() < 0.03);
    }

    #[test]
    fn zero_speed_trial_has_no_laps() {
        let st: Vec<_> = (0..500).map(|i| KinematicState { t: i as f64 * 0.2, ..Default::default() }).collect();
        assert!(detect_laps(&st, &SegmentationConfig::default()).is_empty());
    }

    #[test]
    fn padding_shifts_but_does_not_change_laps() {
        let cfg = SegmentationConfig::default();
        let a = detect_laps(&lap_states(20, 0.2), &cfg);
        let b = detect_laps(&lap_states(70, 0.2), &cfg);
        assert_eq!(a.len(), b.len());
        let shift = 50.0 * 0.2;
        assert!((b[0].t_s - a[0].t_s - shift).abs() < 1e-9);
        assert!((b[0].t_c - a[0].t_c - shift).abs() < 1e-9);
        assert!((b[0].t_e - a[0].t_e - shift).abs() < 1e-9);
        assert!((b[0].turn_duration() - a[0].turn_duration()).abs() < 1e-9);
    }

    #[test]
    fn no_fluking_no_lap() {
        let mut st = lap_states(20, 0.2);
        for s in &mut st {
            s.pitch_osc = 0.0;
        }
        assert!(detect_laps(&st, &SegmentationConfig::default()).is_empty());
    }

    #[test]
    fn ties_resolve_to_earliest() {
        let mut st = lap_states(20, 0.2);
        let c = detect_laps(&st, &SegmentationConfig::default())[0].i_c;
        // copy the peak 3 samples later with a dip in between
        st[c + 3].a_n = st[c].a_n;
        st[c + 2].a_n = 0.0;
        let l = detect_laps(&st, &SegmentationConfig::default());
        assert_eq!(l[0].i_c, c);
    }
}
