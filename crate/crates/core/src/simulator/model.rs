use std::f64::consts::PI;

use serde::Serialize;

use super::LapScenario;
use crate::error::{Error, Result};

/// Duration of the fluking on/off ramps (s).
const FLUKE_RAMP_S: f64 = 0.3;
/// Longest in-place turn-round during a rest (s).
const MAX_ROTATION_S: f64 = 4.0;

/// Constant-acceleration stage of the speed profile, in lap arc length.
#[derive(Debug, Clone, Copy)]
struct Stage {
    s0: f64,
    v0: f64,
    a: f64,
    t0: f64,
    t1: f64,
}

impl Stage {
    fn at(&self, tau: f64) -> (f64, f64) {
        let d = tau - self.t0;
        (self.s0 + self.v0 * d + 0.5 * self.a * d * d, self.v0 + self.a * d)
    }
}

/// Timing of one lap relative to its start.
#[derive(Debug, Clone)]
struct LapPlan {
    stages: Vec<Stage>,
    duration: f64,
    path: f64,
    s_arc0: f64,
    s_arc1: f64,
    t_arc0: f64,
    t_arc1: f64,
    t_apex: f64,
    t_glide: f64,
}

fn smooth(u: f64) -> (f64, f64, f64) {
    // raised cosine on [0, 1] and its first two derivatives
    if u <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if u >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        (0.5 * (1.0 - (PI * u).cos()), 0.5 * PI * (PI * u).sin(), 0.5 * PI * PI * (PI * u).cos())
    }
}

impl LapPlan {
    fn new(sc: &LapScenario) -> Result<Self> {
        let sp = &sc.speed;
        let path = 2.0 * sc.straight_length + PI * sc.corner_radius;
        let s_arc0 = sc.straight_length;
        let s_arc1 = s_arc0 + PI * sc.corner_radius;
        let margin = sp.corner * sp.turn_margin_s;
        let s_glide = path - sp.glide_distance;

        // knots (s, v); v² is linear in s between knots
        let l_up = sp.cruise.powi(2) / (2.0 * sp.accel);
        let l_down = (sp.cruise.powi(2) - sp.corner.powi(2)) / (2.0 * sp.decel);
        let l_out = (sp.return_speed.powi(2) - sp.corner.powi(2)) / (2.0 * sp.return_accel);
        let knots = [
            (0.0, 0.0),
            (l_up, sp.cruise),
            (s_arc0 - margin - l_down, sp.cruise),
            (s_arc0 - margin, sp.corner),
            (s_arc1 + margin, sp.corner),
            (s_arc1 + margin + l_out, sp.return_speed),
            (s_glide, sp.return_speed),
            (path, 0.0),
        ];
        for w in knots.windows(2) {
            if w[1].0 < w[0].0 - 1e-9 {
                return Err(Error::InvalidScenario(format!(
                    "speed profile does not fit the path: stage ending at {:.2} m starts at {:.2} m",
                    w[1].0, w[0].0
                )));
            }
        }

        let mut stages = Vec::new();
        let mut t = 0.0;
        for w in knots.windows(2) {
            let ((s0, v0), (s1, v1)) = (w[0], w[1]);
            let len = s1 - s0;
            if len <= 1e-12 {
                continue;
            }
            let a = (v1 * v1 - v0 * v0) / (2.0 * len);
            let dt = if a.abs() < 1e-12 { len / v0 } else { (v1 - v0) / a };
            stages.push(Stage { s0, v0, a, t0: t, t1: t + dt });
            t += dt;
        }
        let mut plan = LapPlan {
            stages,
            duration: t,
            path,
            s_arc0,
            s_arc1,
            t_arc0: 0.0,
            t_arc1: 0.0,
            t_apex: 0.0,
            t_glide: 0.0,
        };
        plan.t_arc0 = plan.time_at(s_arc0);
        plan.t_arc1 = plan.time_at(s_arc1);
        plan.t_apex = plan.time_at(0.5 * (s_arc0 + s_arc1));
        plan.t_glide = plan.time_at(s_glide);
        Ok(plan)
    }

    fn time_at(&self, s: f64) -> f64 {
        for st in &self.stages {
            let (s1, _) = st.at(st.t1);
            if s <= s1 + 1e-12 {
                let d = s - st.s0;
                let tau = if st.a.abs() < 1e-12 {
                    d / st.v0
                } else {
                    ((st.v0 * st.v0 + 2.0 * st.a * d).max(0.0).sqrt() - st.v0) / st.a
                };
                return st.t0 + tau;
            }
        }
        self.duration
    }

    /// Arc length, horizontal speed and acceleration at lap time `tau`.
    fn motion(&self, tau: f64) -> (f64, f64, f64) {
        if tau <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        if tau >= self.duration {
            return (self.path, 0.0, 0.0);
        }
        let st = self.stages.iter().find(|s| tau < s.t1).unwrap_or(self.stages.last().expect("stages"));
        let (s, v) = st.at(tau);
        (s, v.max(0.0), st.a)
    }
}

#[derive(Debug, Clone, Copy)]
struct LapInstance {
    t_start: f64,
    origin: [f64; 2],
    heading: f64,
    sign: f64,
}

#[derive(Debug, Clone, Copy)]
struct Rotation {
    t0: f64,
    duration: f64,
    yaw0: f64,
    delta: f64,
}

/// Ground-truth event times of one lap (absolute, s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruthLap {
    pub index: usize,
    pub t_start: f64,
    pub t_arc_start: f64,
    /// Mid-point of the corner arc.
    pub t_apex: f64,
    pub t_arc_end: f64,
    pub t_glide: f64,
    pub t_end: f64,
    /// Horizontal path length (m).
    pub path_length: f64,
    /// +1 for a left turn.
    pub turn_sign: f64,
}

/// Full kinematic state from the analytic model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ModelState {
    pub t: f64,
    /// Horizontal distance along the current lap's path (m).
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub v_xy: f64,
    /// Horizontal acceleration along the path.
    pub a_xy: f64,
    /// Speed through the water, including the vertical component.
    pub v: f64,
    pub a_t: f64,
    /// Unwrapped heading (rad).
    pub yaw: f64,
    pub yaw_rate: f64,
    /// Positive nose-down (rad).
    pub pitch: f64,
    pub pitch_rate: f64,
    pub depth: f64,
    pub depth_rate: f64,
    pub depth_acc: f64,
    pub lap: Option<usize>,
    pub fluking: bool,
    pub in_arc: bool,
}

/// Analytic trial of identical laps separated by rests.
#[derive(Debug, Clone)]
pub struct TrialModel {
    scenario: LapScenario,
    plan: LapPlan,
    laps: Vec<LapInstance>,
    rotations: Vec<Rotation>,
    duration: f64,
}

impl TrialModel {
    pub fn new(sc: &LapScenario) -> Result<Self> {
        let plan = LapPlan::new(sc)?;
        let d = &sc.depth;
        if d.dive_distance + d.rise_distance > plan.path {
            return Err(Error::InvalidScenario(format!(
                "dive and rise distances exceed the lap path of {:.1} m",
                plan.path
            )));
        }
        let mut laps = Vec::with_capacity(sc.laps);
        let mut rotations = Vec::new();
        let mut t = sc.pre_rest_s;
        let mut origin = sc.station;
        let heading = sc.heading_deg.to_radians();
        for k in 0..sc.laps {
            let sign = sc.turn.sign(k);
            laps.push(LapInstance { t_start: t, origin, heading, sign });
            let n = [-heading.sin() * sign, heading.cos() * sign];
            origin = [origin[0] + 2.0 * sc.corner_radius * n[0], origin[1] + 2.0 * sc.corner_radius * n[1]];
            t += plan.duration;
            if k + 1 < sc.laps {
                let duration = (0.5 * sc.rest_s).min(MAX_ROTATION_S);
                rotations.push(Rotation {
                    t0: t + 0.5 * (sc.rest_s - duration),
                    duration,
                    yaw0: heading + sign * PI,
                    delta: -sign * PI,
                });
                t += sc.rest_s;
            }
        }
        t += sc.post_rest_s;
        // whole number of master samples
        let duration = (t * super::AUX_RATE - 1e-9).ceil() / super::AUX_RATE;
        Ok(Self { scenario: sc.clone(), plan, laps, rotations, duration })
    }

    pub fn scenario(&self) -> &LapScenario {
        &self.scenario
    }

    /// Trial duration, a whole number of master (5 Hz) samples.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn lap_duration(&self) -> f64 {
        self.plan.duration
    }

    pub fn truth_laps(&self) -> Vec<TruthLap> {
        self.laps
            .iter()
            .enumerate()
            .map(|(index, l)| TruthLap {
                index,
                t_start: l.t_start,
                t_arc_start: l.t_start + self.plan.t_arc0,
                t_apex: l.t_start + self.plan.t_apex,
                t_arc_end: l.t_start + self.plan.t_arc1,
                t_glide: l.t_start + self.plan.t_glide,
                t_end: l.t_start + self.plan.duration,
                path_length: self.plan.path,
                turn_sign: l.sign,
            })
            .collect()
    }

    fn depth_at(&self, s: f64) -> (f64, f64, f64) {
        let d = &self.scenario.depth;
        let span = d.cruise - d.surface;
        let rise0 = self.plan.path - d.rise_distance;
        if s < d.dive_distance {
            let (f, f1, f2) = smooth(s / d.dive_distance);
            (d.surface + span * f, span * f1 / d.dive_distance, span * f2 / d.dive_distance.powi(2))
        } else if s > rise0 {
            let (f, f1, f2) = smooth((s - rise0) / d.rise_distance);
            (d.cruise - span * f, -span * f1 / d.rise_distance, -span * f2 / d.rise_distance.powi(2))
        } else {
            (d.cruise, 0.0, 0.0)
        }
    }

    fn fluke_envelope(&self, tau: f64) -> (f64, f64) {
        let (on, on1, _) = smooth(tau / FLUKE_RAMP_S);
        let (off, off1, _) = smooth((tau - self.plan.t_glide + FLUKE_RAMP_S) / FLUKE_RAMP_S);
        let e = on * (1.0 - off);
        let de = (on1 * (1.0 - off) - on * off1) / FLUKE_RAMP_S;
        (e, de)
    }

    pub fn state(&self, t: f64) -> ModelState {
        let sc = &self.scenario;
        let plan = &self.plan;
        // lap in progress, or the last one started
        let k = self.laps.partition_point(|l| l.t_start <= t);
        let mut st = ModelState { t, ..Default::default() };
        let (lap, tau) = if k == 0 {
            // before the first lap: at the station, facing out
            let l = self.laps[0];
            (l, f64::NEG_INFINITY)
        } else {
            let l = self.laps[k - 1];
            (l, t - l.t_start)
        };
        let active = tau > 0.0 && tau < plan.duration;
        if active {
            st.lap = Some(k - 1);
        }
        let (s, v_xy, a_xy) = if tau.is_finite() { plan.motion(tau) } else { (0.0, 0.0, 0.0) };
        let a_xy = if active { a_xy } else { 0.0 };
        st.s = s;
        st.v_xy = v_xy;
        st.a_xy = a_xy;

        // planar path
        let (c, sn) = (lap.heading.cos(), lap.heading.sin());
        let u = [c, sn];
        let n = [-sn * lap.sign, c * lap.sign];
        let r = sc.corner_radius;
        let ls = sc.straight_length;
        let (px, py, yaw, yaw_rate) = if s <= plan.s_arc0 {
            (s, 0.0, lap.heading, 0.0)
        } else if s < plan.s_arc1 {
            let phi = (s - plan.s_arc0) / r;
            st.in_arc = active;
            (ls + r * phi.sin(), r * (1.0 - phi.cos()), lap.heading + lap.sign * phi, lap.sign * v_xy / r)
        } else {
            (ls - (s - plan.s_arc1), 2.0 * r, lap.heading + lap.sign * PI, 0.0)
        };
        st.x = lap.origin[0] + px * u[0] + py * n[0];
        st.y = lap.origin[1] + px * u[1] + py * n[1];
        st.yaw = yaw;
        st.yaw_rate = yaw_rate;

        // turning round in place during rests
        if k > 0 && tau >= plan.duration {
            if let Some(rot) = self.rotations.get(k - 1).filter(|r| r.t0 <= t) {
                let (f, f1, _) = smooth((t - rot.t0) / rot.duration);
                st.yaw = rot.yaw0 + rot.delta * f;
                st.yaw_rate = rot.delta * f1 / rot.duration;
            }
        }

        // vertical profile
        let (d, d1, d2) = self.depth_at(if tau.is_finite() { s } else { 0.0 });
        st.depth = d;
        st.depth_rate = d1 * v_xy;
        st.depth_acc = d2 * v_xy * v_xy + d1 * a_xy;
        let g = (1.0 + d1 * d1).sqrt();
        st.v = v_xy * g;
        st.a_t = a_xy * g + v_xy * v_xy * d1 * d2 / g;

        // body pitch: path slope plus fluking oscillation
        let path_pitch = d1.atan();
        let path_pitch_rate = d2 * v_xy / (1.0 + d1 * d1);
        st.pitch = path_pitch;
        st.pitch_rate = path_pitch_rate;
        if active {
            let (e, de) = self.fluke_envelope(tau);
            st.fluking = e > 0.5;
            let amp = sc.fluke_amplitude_deg.to_radians();
            let w = 2.0 * PI * sc.fluke_frequency;
            st.pitch += amp * e * (w * tau).sin();
            st.pitch_rate += amp * (de * (w * tau).sin() + e * w * (w * tau).cos());
        }
        st
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::NoiseConfig;

    fn flat() -> LapScenario {
        LapScenario {
            laps: 1,
            depth: crate::simulator::DepthProfile { surface: 2.0, cruise: 2.0, dive_distance: 5.0, rise_distance: 5.0 },
            noise: NoiseConfig::zero(),
            ..LapScenario::default()
        }
    }

    #[test]
    fn lap_geometry() {
        let m = TrialModel::new(&flat()).unwrap();
        let tl = m.truth_laps()[0];
        assert!((tl.path_length - (60.0 + PI * 1.5)).abs() < 1e-12);
        let start = m.state(tl.t_start);
        let apex = m.state(tl.t_apex);
        let end = m.state(tl.t_end);
        assert!(start.x.abs() < 1e-12 && start.y.abs() < 1e-12);
        // left turn from heading 0: apex 1.5 m beyond the straight, 1.5 m to the left
        assert!((apex.x - 31.5).abs() < 1e-9 && (apex.y - 1.5).abs() < 1e-9, "{apex:?}");
        assert!((apex.yaw - PI / 2.0).abs() < 1e-9);
        assert!((end.x - 0.0).abs() < 1e-9 && (end.y - 3.0).abs() < 1e-9);
        assert!(end.v_xy.abs() < 1e-9);
    }

    #[test]
    fn arc_has_circular_motion_identity() {
        let m = TrialModel::new(&flat()).unwrap();
        let tl = m.truth_laps()[0];
        let k = 40;
        for i in 1..k {
            let t = tl.t_arc_start + (tl.t_arc_end - tl.t_arc_start) * i as f64 / k as f64;
            let s = m.state(t);
            assert!(s.in_arc);
            // v_t held through the arc: a_n = v²/R
            assert!((s.yaw_rate * s.v - 4.0 * 4.0 / 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let sc = LapScenario { laps: 2, noise: NoiseConfig::zero(), ..LapScenario::default() };
        let m = TrialModel::new(&sc).unwrap();
        let h = 1e-5;
        let mut t = 0.013;
        while t < m.duration() - 0.1 {
            let (a, b, s) = (m.state(t - h), m.state(t + h), m.state(t));
            let fd = |f: fn(&ModelState) -> f64| (f(&b) - f(&a)) / (2.0 * h);
            let close = |x: f64, y: f64, what: &str| assert!((x - y).abs() < 1e-4 * (1.0 + y.abs()), "{what} at {t}: {x} vs {y}");
            close(fd(|s| s.v_xy), s.a_xy, "a_xy");
            close(fd(|s| s.v), s.a_t, "a_t");
            close(fd(|s| s.yaw), s.yaw_rate, "yaw_rate");
            close(fd(|s| s.pitch), s.pitch_rate, "pitch_rate");
            close(fd(|s| s.depth), s.depth_rate, "depth_rate");
            close(fd(|s| s.depth_rate), s.depth_acc, "depth_acc");
            let vx = fd(|s| s.x);
            let vy = fd(|s| s.y);
            close(vx.hypot(vy), s.v_xy, "planar speed");
            t += 0.0731;
        }
    }

    #[test]
    fn positions_chain_and_headings_restore() {
        let sc = LapScenario { laps: 3, turn: crate::simulator::TurnDirection::Alternate, ..flat() };
        let m = TrialModel::new(&sc).unwrap();
        let laps = m.truth_laps();
        let s1 = m.state(laps[1].t_start);
        assert!((s1.y - 3.0).abs() < 1e-9 && s1.x.abs() < 1e-9);
        assert!((s1.yaw - 0.0).abs() < 1e-9);
        let s2 = m.state(laps[2].t_start);
        assert!(s2.x.abs() < 1e-9 && s2.y.abs() < 1e-9);
        assert!(laps[1].t_start - laps[0].t_end - 20.0 < 1e-9);
    }

    #[test]
    fn rest_is_stationary() {
        let m = TrialModel::new(&flat()).unwrap();
        let s = m.state(3.0);
        assert_eq!((s.v, s.a_t, s.yaw_rate, s.pitch_rate), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(s.lap, None);
        assert!(!s.fluking);
        let d = m.duration();
        assert!((d * 5.0 - (d * 5.0).round()).abs() < 1e-9);
    }
}
