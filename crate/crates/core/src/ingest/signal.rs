use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sampled scalar channel with its own (strictly increasing) timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Channel {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl Channel {
    pub fn new(t: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(t.len(), values.len());
        Self { t, values }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Uniform analysis timeline. Every downstream difference uses `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MasterTimeline {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl MasterTimeline {
    pub const DEFAULT_DT: f64 = 0.2;

    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("timeline dt must be > 0, got {dt}")));
        }
        Ok(Self { t0, dt, n })
    }

    /// Largest timeline starting at `start` with step `dt` that stays inside `[start, end]`.
    pub fn spanning(start: f64, end: f64, dt: f64) -> Result<Self> {
        if end < start {
            return Err(Error::InvalidParameter(format!("empty span [{start}, {end}]")));
        }
        let n = ((end - start) / dt + 1e-9).floor() as usize + 1;
        Self::new(start, dt, n)
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.time(i)).collect()
    }

    pub fn end(&self) -> f64 {
        self.time(self.n.saturating_sub(1))
    }
}

fn time_eps(t: f64) -> f64 {
    1e-9 * t.abs().max(1.0)
}

/// Linear interpolation of `channel` at every timeline instant. No extrapolation.
pub fn resample_linear(channel: &Channel, timeline: &MasterTimeline) -> Result<Vec<f64>> {
    if channel.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: channel.len() });
    }
    let lo = channel.t[0];
    let hi = channel.t[channel.len() - 1];
    let (start, end) = (timeline.t0, timeline.end());
    if timeline.n > 0 && (start < lo - time_eps(lo) || end > hi + time_eps(hi)) {
        return Err(Error::OutOfSupport { start, end, lo, hi });
    }

    let mut out = Vec::with_capacity(timeline.n);
    for i in 0..timeline.n {
        let t = timeline.time(i).clamp(lo, hi);
        // index of the first sample strictly after t
        let k = channel.t.partition_point(|&s| s <= t);
        let v = if k == 0 {
            channel.values[0]
        } else if k >= channel.len() {
            channel.values[channel.len() - 1]
        } else {
            let (t0, t1) = (channel.t[k - 1], channel.t[k]);
            let (v0, v1) = (channel.values[k - 1], channel.values[k]);
            if t == t0 {
                v0
            } else {
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        };
        out.push(v);
    }
    Ok(out)
}

/// Centred moving average.
///
/// The window holds `round(window_s / dt)` samples, bumped to the next odd
/// count. Near either end the window shrinks symmetrically so it stays
/// centred, down to a single sample at the endpoints.
pub fn moving_average(values: &[f64], dt: f64, window_s: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyChannel);
    }
    if !(window_s > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "moving average needs window_s > 0 and dt > 0 (got {window_s}, {dt})"
        )));
    }
    let mut width = (window_s / dt).round().max(1.0) as usize;
    if width % 2 == 0 {
        width += 1;
    }
    let half = width / 2;
    let n = values.len();

    Ok((0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let window = &values[i - h..=i + h];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect())
}

/// Remove ±2π jumps so the angle sequence becomes continuous.
pub fn unwrap_angles(angles: &[f64]) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let mut out = Vec::with_capacity(angles.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &a in angles {
        if let Some(p) = prev {
            let d = a - p;
            if d > PI {
                offset -= TAU * ((d + PI) / TAU).floor();
            } else if d < -PI {
                offset += TAU * ((-d + PI) / TAU).floor();
            }
        }
        out.push(a + offset);
        prev = Some(a);
    }
    out
}
