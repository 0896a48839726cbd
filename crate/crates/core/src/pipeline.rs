//! End-to-end analysis of one tag trial.

use serde::{Deserialize, Serialize};

use crate::energetics::{
    fit_power_law_in, min_cot_speed, nondimensionalize, thrust_power, AnimalParams, EnergeticsConfig, FitSpace,
    PowerLawFit, PowerSample,
};
use crate::error::{Error, Result};
use crate::ingest::{resample_linear, unwrap_angles, Channel, MasterTimeline, TagSeries};
use crate::kinematics::{compute_kinematics, oscillation_amplitude, KinematicInputs, KinematicState};
use crate::localization::{dead_reckon, Track, DEFAULT_CURVATURE_EPS};
use crate::orientation::{estimate_orientation, OrientationConfig};
use crate::segmentation::{
    classify_phases, detect_laps, lap_metrics, normalize_lap, LapEvents, LapSummary, NormalizedLap, Phase,
    SegmentationConfig,
};

/// Every threshold and constant of the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub animal: AnimalParams,
    pub orientation: OrientationConfig,
    pub segmentation: SegmentationConfig,
    pub energetics: EnergeticsConfig,
    /// Master timeline step (s).
    pub master_dt: f64,
    /// Centred moving-average window applied to speed and heading (s).
    pub smoothing_window_s: f64,
    /// Pitch detrending window for fluke detection (s).
    pub fluke_detrend_s: f64,
    /// Window of the pitch oscillation amplitude (s).
    pub fluke_window_s: f64,
    /// Dead-reckoning start position in the local frame (m).
    pub station: [f64; 2],
    pub curvature_eps: f64,
    /// Points of the percent-lap grid.
    pub grid_n: usize,
    pub fit_space: FitSpace,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            animal: AnimalParams::tt02(),
            orientation: OrientationConfig::default(),
            segmentation: SegmentationConfig::default(),
            energetics: EnergeticsConfig::default(),
            master_dt: MasterTimeline::DEFAULT_DT,
            smoothing_window_s: 1.0,
            fluke_detrend_s: 1.0,
            fluke_window_s: 2.0,
            station: [0.0, 0.0],
            curvature_eps: DEFAULT_CURVATURE_EPS,
            grid_n: 201,
            fit_space: FitSpace::Linear,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        self.animal.validate()?;
        self.energetics.gamma.validate()?;
        let positive = [
            ("master_dt", self.master_dt),
            ("smoothing_window_s", self.smoothing_window_s),
            ("fluke_detrend_s", self.fluke_detrend_s),
            ("fluke_window_s", self.fluke_window_s),
            ("energetics.diameter_ratio", self.energetics.diameter_ratio),
            ("orientation.gravity", self.orientation.gravity),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{k} must be positive, got {v}")));
            }
        }
        if self.grid_n < 2 {
            return Err(Error::InvalidParameter(format!("grid_n must be >= 2, got {}", self.grid_n)));
        }
        let f = self.segmentation.turn_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidParameter(format!("segmentation.turn_fraction must be in (0, 1), got {f}")));
        }
        Ok(())
    }
}

/// Power-law fit of per-lap mean thrust power against mean speed for one
/// phase class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseFit {
    pub class: &'static str,
    /// `(v m/s, P W)` per lap.
    pub points: Vec<(f64, f64)>,
    pub dimensional: Option<PowerLawFit>,
    /// Speed in body lengths per second against non-dimensional power.
    pub nondimensional: Option<PowerLawFit>,
    /// Speed of minimum modelled cost of transport (m/s).
    pub min_cot_speed: Option<f64>,
    pub error: Option<String>,
}

/// Fits for the active-fluking and consistent-speed classes over `laps`.
pub fn power_law_fits(laps: &[LapSummary], params: &AnimalParams, space: FitSpace) -> Vec<PhaseFit> {
    let classes: [(&'static str, fn(&LapSummary) -> (f64, f64)); 2] = [
        ("active_fluking", |l| (l.active_speed, l.active_power)),
        ("consistent_speed", |l| (l.consistent_speed, l.consistent_power)),
    ];
    classes
        .iter()
        .map(|(class, get)| {
            let points: Vec<(f64, f64)> = laps.iter().map(get).filter(|(v, p)| v.is_finite() && p.is_finite()).collect();
            let nd: Vec<(f64, f64)> =
                points.iter().map(|&(v, p)| (v / params.length, nondimensionalize(p, params))).collect();
            let (dimensional, nondimensional, error) =
                match (fit_power_law_in(&points, false, space), fit_power_law_in(&nd, true, space)) {
                    (Ok(a), Ok(b)) => (Some(a), Some(b), None),
                    (Err(e), _) | (_, Err(e)) => (None, None, Some(e.to_string())),
                };
            PhaseFit {
                class,
                min_cot_speed: dimensional.as_ref().and_then(|f| min_cot_speed(f, params)),
                points,
                dimensional,
                nondimensional,
                error,
            }
        })
        .collect()
}

/// All products of analysing one trial.
#[derive(Debug, Clone)]
pub struct TrialAnalysis {
    pub timeline: MasterTimeline,
    pub states: Vec<KinematicState>,
    pub track: Track,
    pub power: Vec<PowerSample>,
    pub laps: Vec<LapEvents>,
    pub phases: Vec<Phase>,
    pub summaries: Vec<LapSummary>,
    pub normalized: Vec<NormalizedLap>,
    pub fits: Vec<PhaseFit>,
}

/// Runs orientation, kinematics, localisation, energetics and segmentation.
///
/// Orientation and the fluke detector run at the IMU rate; everything
/// else runs on the master timeline spanning the overlap of the IMU and
/// depth/speed streams.
pub fn analyze_trial(tag: &TagSeries, cfg: &AnalysisConfig) -> Result<TrialAnalysis> {
    cfg.validate()?;
    if tag.imu.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: tag.imu.len() });
    }
    if tag.aux.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: tag.aux.len() });
    }
    let imu_dt = tag.imu_dt().ok_or(Error::EmptyChannel)?;
    let poses = estimate_orientation(&tag.imu, &cfg.orientation)?;
    let imu_t: Vec<f64> = tag.imu.iter().map(|s| s.t).collect();
    let pitch: Vec<f64> = poses.iter().map(|p| p.pitch).collect();
    let yaw = unwrap_angles(&poses.iter().map(|p| p.yaw).collect::<Vec<_>>());
    let osc = oscillation_amplitude(&pitch, imu_dt, cfg.fluke_detrend_s, cfg.fluke_window_s)?;

    let start = imu_t[0].max(tag.aux[0].t);
    let end = imu_t[imu_t.len() - 1].min(tag.aux[tag.aux.len() - 1].t);
    let timeline = MasterTimeline::spanning(start, end, cfg.master_dt)?;
    let pitch_m = resample_linear(&Channel::new(imu_t.clone(), pitch), &timeline)?;
    let yaw_m = resample_linear(&Channel::new(imu_t.clone(), yaw), &timeline)?;
    let osc_m = resample_linear(&Channel::new(imu_t, osc), &timeline)?;
    let speed_m = resample_linear(&tag.speed(), &timeline)?;
    let depth_m = resample_linear(&tag.depth(), &timeline)?;

    let states = compute_kinematics(
        KinematicInputs { speed: &speed_m, pitch: &pitch_m, yaw: &yaw_m, depth: &depth_m, pitch_osc: &osc_m },
        cfg.animal.length,
        &timeline,
        cfg.smoothing_window_s,
    )?;
    analyze_states(states, timeline, cfg)
}

/// The part of [`analyze_trial`] downstream of the kinematic states.
pub fn analyze_states(states: Vec<KinematicState>, timeline: MasterTimeline, cfg: &AnalysisConfig) -> Result<TrialAnalysis> {
    let dt = timeline.dt;
    let mut track = dead_reckon(&states, (cfg.station[0], cfg.station[1]), dt);
    if cfg.curvature_eps != DEFAULT_CURVATURE_EPS {
        track.r = crate::localization::curvature_radius(&track.x, &track.y, dt, cfg.curvature_eps);
    }
    let power: Vec<PowerSample> = states
        .iter()
        .map(|s| PowerSample { t: s.t, ..thrust_power(s.v, s.a_t, s.depth, &cfg.animal, &cfg.energetics) })
        .collect();
    let laps = detect_laps(&states, &cfg.segmentation);
    let phases = classify_phases(&states, &laps, &cfg.segmentation);
    let mut summaries = Vec::with_capacity(laps.len());
    let mut normalized = Vec::with_capacity(laps.len());
    for lap in &laps {
        summaries.push(lap_metrics(&states, &power, &phases, &track, lap, &cfg.animal)?);
        normalized.push(normalize_lap(&states, &power, &track, lap, cfg.grid_n)?);
    }
    let fits = power_law_fits(&summaries, &cfg.animal, cfg.fit_space);
    Ok(TrialAnalysis { timeline, states, track, power, laps, phases, summaries, normalized, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{generate_truth, synthesize_tag, LapScenario, NoiseConfig};

    #[test]
    fn analyses_a_two_lap_simulation() {
        let sc = LapScenario { laps: 2, noise: NoiseConfig::zero(), ..LapScenario::default() };
        let truth = generate_truth(&sc).unwrap();
        let tag = synthesize_tag(&truth);
        let a = analyze_trial(&tag, &AnalysisConfig::default()).unwrap();
        assert_eq!(a.laps.len(), 2);
        assert_eq!(a.summaries.len(), 2);
        assert_eq!(a.normalized[0].pct.len(), 201);
        assert_eq!(a.states.len(), truth.samples.len());
        // two laps are too few to fit
        assert!(a.fits.iter().all(|f| f.error.is_some()));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = AnalysisConfig { grid_n: 1, ..AnalysisConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = AnalysisConfig { master_dt: 0.0, ..AnalysisConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn too_short_input() {
        let tag = TagSeries { imu: vec![], aux: vec![], flags: vec![], rows: 0 };
        assert!(analyze_trial(&tag, &AnalysisConfig::default()).is_err());
    }
}
