//! Body kinematics on the master timeline.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{moving_average, MasterTimeline};

/// Fused per-sample state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct KinematicState {
    pub t: f64,
    /// Smoothed body-frame forward speed (m/s).
    pub v: f64,
    /// Speed projected on the horizontal plane (m/s).
    pub v_xy: f64,
    pub pitch: f64,
    /// Unwrapped, smoothed heading (rad).
    pub yaw: f64,
    pub depth: f64,
    /// Tangential acceleration (m/s²).
    pub a_t: f64,
    /// Signed planar angular rate (rad/s).
    pub omega: f64,
    /// Signed normal acceleration `omega * v` (m/s²).
    pub a_n: f64,
    /// Speed in body lengths per second.
    pub v_bl: f64,
    /// Half peak-to-peak pitch oscillation over the detection window (rad).
    pub pitch_osc: f64,
}

/// Second-order central differences in the interior, first-order one-sided
/// differences at the two ends.
pub fn central_diff(x: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let mut d = Vec::with_capacity(n);
    d.push((x[1] - x[0]) / dt);
    for i in 1..n - 1 {
        d.push((x[i + 1] - x[i - 1]) / (2.0 * dt));
    }
    d.push((x[n - 1] - x[n - 2]) / dt);
    Ok(d)
}

/// Aligned master-rate inputs for [`compute_kinematics`].
#[derive(Debug, Clone, Copy)]
pub struct KinematicInputs<'a> {
    /// Raw measured forward speed.
    pub speed: &'a [f64],
    pub pitch: &'a [f64],
    /// Unwrapped, not yet smoothed heading.
    pub yaw: &'a [f64],
    pub depth: &'a [f64],
    /// Pitch oscillation amplitude; zeros if unavailable.
    pub pitch_osc: &'a [f64],
}

pub fn compute_kinematics(
    inputs: KinematicInputs<'_>,
    body_length: f64,
    timeline: &MasterTimeline,
    smoothing_window_s: f64,
) -> Result<Vec<KinematicState>> {
    let n = timeline.n;
    let lens = [inputs.speed.len(), inputs.pitch.len(), inputs.yaw.len(), inputs.depth.len(), inputs.pitch_osc.len()];
    if lens.iter().any(|&l| l != n) {
        return Err(Error::InvalidParameter(format!("channel lengths {lens:?} do not match timeline length {n}")));
    }
    if !(body_length > 0.0) {
        return Err(Error::InvalidParameter(format!("body length must be > 0, got {body_length}")));
    }
    let dt = timeline.dt;
    let v = moving_average(inputs.speed, dt, smoothing_window_s)?;
    let yaw = moving_average(inputs.yaw, dt, smoothing_window_s)?;
    let a_t = central_diff(&v, dt)?;
    let omega = central_diff(&yaw, dt)?;

    Ok((0..n)
        .map(|i| {
            let v = v[i].max(0.0);
            KinematicState {
                t: timeline.time(i),
                v,
                v_xy: v * inputs.pitch[i].cos(),
                pitch: inputs.pitch[i],
                yaw: yaw[i],
                depth: inputs.depth[i],
                a_t: a_t[i],
                omega: omega[i],
                a_n: omega[i] * v,
                v_bl: v / body_length,
                pitch_osc: inputs.pitch_osc[i],
            }
        })
        .collect())
}

/// Pitch oscillation amplitude: the signal minus its `detrend_s` moving
/// average, then half the peak-to-peak range over a centred `window_s` window.
pub fn oscillation_amplitude(x: &[f64], dt: f64, detrend_s: f64, window_s: f64) -> Result<Vec<f64>> {
    let trend = moving_average(x, dt, detrend_s)?;
    let resid: Vec<f64> = x.iter().zip(&trend).map(|(a, b)| a - b).collect();
    let half = ((window_s / dt).round() as usize / 2).max(1);
    let n = resid.len();
    Ok((0..n)
        .map(|i| {
            let w = &resid[i.saturating_sub(half)..(i + half + 1).min(n)];
            let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            0.5 * (hi - lo)
        })
        .collect())
}
