use serde::Serialize;

use super::{LapEvents, Phase};
use crate::energetics::{nondimensionalize, work_over, AnimalParams, PowerSample, WorkSummary};
use crate::error::{Error, Result};
use crate::kinematics::KinematicState;
use crate::localization::{fit_circle, CircleFit, Track};

/// Durations (s) of each phase over part of a lap.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PhaseBreakdown {
    pub transient: f64,
    pub consistent_speed: f64,
    pub glide: f64,
    pub rest: f64,
}

impl PhaseBreakdown {
    fn add(&mut self, p: Phase, dt: f64) {
        match p {
            Phase::Transient => self.transient += dt,
            Phase::ConsistentSpeed => self.consistent_speed += dt,
            Phase::Glide => self.glide += dt,
            Phase::Rest => self.rest += dt,
        }
    }

    pub fn total(&self) -> f64 {
        self.transient + self.consistent_speed + self.glide + self.rest
    }

    pub fn get(&self, p: Phase) -> f64 {
        match p {
            Phase::Transient => self.transient,
            Phase::ConsistentSpeed => self.consistent_speed,
            Phase::Glide => self.glide,
            Phase::Rest => self.rest,
        }
    }
}

/// Per-lap summary. Values that cannot be defined for the lap are NaN or `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LapSummary {
    pub events: LapEvents,
    pub duration: f64,
    pub turn_duration: f64,
    /// Phase durations from lap start to the cornering event.
    pub outgoing: PhaseBreakdown,
    /// Phase durations from the cornering event to lap end.
    pub returning: PhaseBreakdown,
    pub path_length: f64,
    /// Distance between the first and last track point of the lap.
    pub endpoint_mismatch: f64,
    pub peak_speed: f64,
    pub mean_speed: f64,
    pub peak_power: f64,
    pub mean_power: f64,
    pub peak_omega: f64,
    pub peak_a_n: f64,
    /// Mean of the finite curvature radii inside the turn window.
    pub turn_radius_mean: f64,
    pub radius_at_corner: f64,
    /// `v_xy / |ω|` at the cornering event: the curvature radius of the
    /// continuous dead-reckoned path, free of the finite-difference bias.
    pub kinematic_radius_at_corner: f64,
    pub turn_circle: Option<CircleFit>,
    pub work: WorkSummary,
    pub work_transient: WorkSummary,
    pub work_consistent: WorkSummary,
    pub work_glide: WorkSummary,
    /// Active fluking: transient plus consistent-speed.
    pub work_active: WorkSummary,
    pub work_nd: f64,
    pub mean_cot: Option<f64>,
    /// Mean speed and thrust power over the active-fluking samples (NaN if none).
    pub active_speed: f64,
    pub active_power: f64,
    /// Mean speed and thrust power over the consistent-speed samples (NaN if none).
    pub consistent_speed: f64,
    pub consistent_power: f64,
}

impl LapSummary {
    pub fn phase_duration(&self, p: Phase) -> f64 {
        self.outgoing.get(p) + self.returning.get(p)
    }

    pub fn phase_percent(&self, p: Phase) -> f64 {
        100.0 * self.phase_duration(p) / self.duration
    }
}

pub fn lap_metrics(
    states: &[KinematicState],
    power: &[PowerSample],
    phases: &[Phase],
    track: &Track,
    lap: &LapEvents,
    params: &AnimalParams,
) -> Result<LapSummary> {
    let n = states.len();
    if power.len() != n || phases.len() != n || track.len() != n {
        return Err(Error::InvalidParameter("lap channels differ in length".into()));
    }
    if lap.i_e >= n || lap.i_s >= lap.i_c || lap.i_c >= lap.i_e {
        return Err(Error::DegenerateLap(format!("sample range {}..{} of {n}", lap.i_s, lap.i_e)));
    }
    let dt = states[1].t - states[0].t;
    let r = lap.samples();
    let len = r.len() as f64;

    let mut outgoing = PhaseBreakdown::default();
    let mut returning = PhaseBreakdown::default();
    for i in r.clone() {
        if i < lap.i_c {
            outgoing.add(phases[i], dt);
        } else {
            returning.add(phases[i], dt);
        }
    }

    let sel = |want: fn(Phase) -> bool| work_over(r.clone().filter(|&i| want(phases[i])).map(|i| &power[i]), dt);
    let work = work_over(power[r.clone()].iter(), dt);
    let work_transient = sel(|p| p == Phase::Transient);
    let work_consistent = sel(|p| p == Phase::ConsistentSpeed);
    let work_glide = sel(|p| p == Phase::Glide);

    let in_turn: Vec<usize> = r.clone().filter(|&i| states[i].t >= lap.turn_start && states[i].t <= lap.turn_end).collect();
    let radii: Vec<f64> = in_turn.iter().map(|&i| track.r[i]).filter(|r| r.is_finite()).collect();
    let turn_radius_mean = if radii.is_empty() { f64::NAN } else { radii.iter().sum::<f64>() / radii.len() as f64 };
    let pts: Vec<(f64, f64)> = in_turn.iter().map(|&i| track.point(i)).collect();
    let turn_circle = fit_circle(&pts).ok();

    let class_mean = |want: fn(Phase) -> bool| {
        let idx: Vec<usize> = r.clone().filter(|&i| want(phases[i])).collect();
        if idx.is_empty() {
            return (f64::NAN, f64::NAN);
        }
        let k = idx.len() as f64;
        (idx.iter().map(|&i| states[i].v).sum::<f64>() / k, idx.iter().map(|&i| power[i].p_thrust).sum::<f64>() / k)
    };
    let (active_speed, active_power) = class_mean(Phase::is_active_fluking);
    let (consistent_speed, consistent_power) = class_mean(|p| p == Phase::ConsistentSpeed);

    let cots: Vec<f64> = power[r.clone()].iter().filter_map(|p| p.cot).collect();
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);

    Ok(LapSummary {
        events: *lap,
        duration: lap.duration(),
        turn_duration: lap.turn_duration(),
        outgoing,
        returning,
        path_length: track.path_length(lap.i_s, lap.i_e),
        endpoint_mismatch: {
            let (a, b) = (track.point(lap.i_s), track.point(lap.i_e));
            (b.0 - a.0).hypot(b.1 - a.1)
        },
        peak_speed: max(&mut states[r.clone()].iter().map(|s| s.v)),
        mean_speed: states[r.clone()].iter().map(|s| s.v).sum::<f64>() / len,
        peak_power: max(&mut power[r.clone()].iter().map(|p| p.p_thrust)),
        mean_power: work.thrust_signed / (len * dt),
        peak_omega: max(&mut states[r.clone()].iter().map(|s| s.omega.abs())),
        peak_a_n: max(&mut states[r.clone()].iter().map(|s| s.a_n.abs())),
        turn_radius_mean,
        radius_at_corner: track.r[lap.i_c],
        kinematic_radius_at_corner: {
            let s = &states[lap.i_c];
            if s.omega.abs() > 0.0 { s.v_xy / s.omega.abs() } else { f64::INFINITY }
        },
        turn_circle,
        work,
        work_transient,
        work_consistent,
        work_glide,
        work_active: work_transient + work_consistent,
        work_nd: nondimensionalize(work.thrust_signed, params),
        mean_cot: (!cots.is_empty()).then(|| cots.iter().sum::<f64>() / cots.len() as f64),
        active_speed,
        active_power,
        consistent_speed,
        consistent_power,
    })
}

/// Circle fits over windows 10 % of the lap duration wide, centred at 20, 50
/// and 80 % of the lap.
pub fn lap_circle_fits(track: &Track, lap: &LapEvents) -> [Option<CircleFit>; 3] {
    [0.2, 0.5, 0.8].map(|c| {
        let lo = lap.t_s + (c - 0.05) * lap.duration();
        let hi = lap.t_s + (c + 0.05) * lap.duration();
        let pts: Vec<(f64, f64)> = lap.samples().filter(|&i| track.t[i] >= lo && track.t[i] <= hi).map(|i| track.point(i)).collect();
        fit_circle(&pts).ok()
    })
}
