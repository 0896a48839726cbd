use serde::Serialize;

use super::LapEvents;
use crate::energetics::PowerSample;
use crate::error::{Error, Result};
use crate::kinematics::KinematicState;
use crate::localization::Track;

/// Percent-lap position (0-100) of time `t` measured from the lap start.
///
/// The cornering event at `t_c` maps to exactly 50 %; each half of the lap
/// is stretched linearly.
pub fn percent_lap(t: f64, t_c: f64, t_end: f64) -> f64 {
    // the scaled lap time over t_end, written so that t = t_c gives 50 exactly
    if t <= t_c {
        50.0 * (t / t_c)
    } else {
        100.0 - 50.0 * ((t_end - t) / (t_end - t_c))
    }
}

/// Inverse of [`percent_lap`]: time from lap start at percent-lap `pct`.
pub fn percent_lap_time(pct: f64, t_c: f64, t_end: f64) -> f64 {
    if pct <= 50.0 {
        pct / 50.0 * t_c
    } else {
        t_end - (100.0 - pct) / 50.0 * (t_end - t_c)
    }
}

/// Lap channels resampled on a uniform percent-lap grid.
///
/// `cot` holds NaN where the cost of transport is undefined.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct NormalizedLap {
    pub pct: Vec<f64>,
    pub v: Vec<f64>,
    pub a_t: Vec<f64>,
    pub a_n: Vec<f64>,
    pub depth: Vec<f64>,
    pub p_thrust: Vec<f64>,
    pub cot: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl NormalizedLap {
    pub const CHANNELS: [&'static str; 8] = ["v", "a_t", "a_n", "depth", "p_thrust", "cot", "x", "y"];

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        Some(match name {
            "v" => &self.v,
            "a_t" => &self.a_t,
            "a_n" => &self.a_n,
            "depth" => &self.depth,
            "p_thrust" => &self.p_thrust,
            "cot" => &self.cot,
            "x" => &self.x,
            "y" => &self.y,
            _ => return None,
        })
    }
}

pub fn normalize_lap(
    states: &[KinematicState],
    power: &[PowerSample],
    track: &Track,
    lap: &LapEvents,
    grid_n: usize,
) -> Result<NormalizedLap> {
    let t_end = lap.t_e - lap.t_s;
    let t_c = lap.t_c - lap.t_s;
    if !(t_c > 0.0 && t_c < t_end) {
        return Err(Error::DegenerateLap(format!("t_c={t_c} outside (0, {t_end})")));
    }
    if grid_n < 2 {
        return Err(Error::InvalidParameter(format!("grid_n must be >= 2, got {grid_n}")));
    }
    if lap.i_e >= states.len() || power.len() != states.len() || track.len() != states.len() {
        return Err(Error::InvalidParameter("lap extends past the analysed series".into()));
    }
    let dt = states[1].t - states[0].t;

    let mut out = NormalizedLap::default();
    for g in 0..grid_n {
        let pct = 100.0 * g as f64 / (grid_n - 1) as f64;
        let t = lap.t_s + percent_lap_time(pct, t_c, t_end);
        // fractional sample position, confined to the lap
        let pos = ((t - states[0].t) / dt).clamp(lap.i_s as f64, lap.i_e as f64);
        let k = (pos.floor() as usize).min(lap.i_e - 1);
        let w = pos - k as f64;
        let lerp = |a: f64, b: f64| a + (b - a) * w;
        let (s0, s1) = (&states[k], &states[k + 1]);
        let (p0, p1) = (&power[k], &power[k + 1]);
        out.pct.push(pct);
        out.v.push(lerp(s0.v, s1.v));
        out.a_t.push(lerp(s0.a_t, s1.a_t));
        out.a_n.push(lerp(s0.a_n, s1.a_n));
        out.depth.push(lerp(s0.depth, s1.depth));
        out.p_thrust.push(lerp(p0.p_thrust, p1.p_thrust));
        out.cot.push(match (p0.cot, p1.cot) {
            (Some(a), Some(b)) => lerp(a, b),
            (Some(a), None) if w == 0.0 => a,
            (None, Some(b)) if w == 1.0 => b,
            _ => f64::NAN,
        });
        out.x.push(lerp(track.x[k], track.x[k + 1]));
        out.y.push(lerp(track.y[k], track.y[k + 1]));
    }
    Ok(out)
}
