//! Ground-truth lap trials and synthetic tag channels.
//!
//! A lap is a straight out from the station, a semicircular corner and a
//! straight back, swum with a prescribed piecewise constant-acceleration
//! speed profile. Every channel, including derivatives, is evaluated
//! analytically from the path, so the pipeline can be checked against an
//! independent oracle.

mod model;
mod synth;

pub use model::{ModelState, TrialModel, TruthLap};
pub use synth::{generate_truth, synthesize_tag, write_truth_csv, Truth, TruthSample};

use serde::{Deserialize, Serialize};

use crate::energetics::AnimalParams;
use crate::error::{Error, Result};

/// IMU sample rate of synthesized tags (Hz).
pub const IMU_RATE: f64 = 50.0;
/// Depth and speed sample rate of synthesized tags (Hz).
pub const AUX_RATE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnDirection {
    Left,
    Right,
    /// Left on even laps, right on odd ones; the station does not drift.
    Alternate,
}

impl TurnDirection {
    /// +1 for a counter-clockwise (left) turn on lap `k`.
    pub fn sign(self, k: usize) -> f64 {
        match self {
            TurnDirection::Left => 1.0,
            TurnDirection::Right => -1.0,
            TurnDirection::Alternate if k % 2 == 0 => 1.0,
            TurnDirection::Alternate => -1.0,
        }
    }
}

/// Horizontal speed profile of one lap. Each stage has constant acceleration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeedProfile {
    /// Acceleration from rest at the station (m/s²).
    pub accel: f64,
    /// Outgoing cruise speed (m/s).
    pub cruise: f64,
    /// Deceleration into the corner (m/s²).
    pub decel: f64,
    /// Speed held through the corner (m/s).
    pub corner: f64,
    /// Acceleration out of the corner (m/s²).
    pub return_accel: f64,
    pub return_speed: f64,
    /// Corner speed is held this long before and after the arc (s).
    pub turn_margin_s: f64,
    /// Unpowered glide to a stop over the last part of the return (m).
    pub glide_distance: f64,
}

impl Default for SpeedProfile {
    fn default() -> Self {
        Self {
            accel: 1.0,
            cruise: 4.0,
            decel: 1.0,
            corner: 4.0,
            return_accel: 1.0,
            return_speed: 4.0,
            turn_margin_s: 0.6,
            glide_distance: 8.0,
        }
    }
}

/// Depth along the lap: a smooth dive from `surface` to `cruise` over the
/// first `dive_distance` metres and the mirror rise over the last
/// `rise_distance` metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DepthProfile {
    pub surface: f64,
    pub cruise: f64,
    pub dive_distance: f64,
    pub rise_distance: f64,
}

impl Default for DepthProfile {
    fn default() -> Self {
        Self { surface: 0.5, cruise: 2.0, dive_distance: 6.0, rise_distance: 6.0 }
    }
}

/// Standard deviations of the additive Gaussian noise per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// m/s²
    pub accel: f64,
    /// rad/s
    pub gyro: f64,
    /// µT
    pub mag: f64,
    /// m
    pub depth: f64,
    /// m/s
    pub speed: f64,
}

impl NoiseConfig {
    pub fn zero() -> Self {
        Self { accel: 0.0, gyro: 0.0, mag: 0.0, depth: 0.0, speed: 0.0 }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { accel: 0.02, gyro: 0.002, mag: 0.2, depth: 0.01, speed: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MagneticField {
    /// µT
    pub strength: f64,
    /// Dip below the horizontal (deg).
    pub inclination_deg: f64,
    /// Angle of the horizontal field from the world x axis, counter-clockwise (deg).
    pub declination_deg: f64,
}

impl Default for MagneticField {
    fn default() -> Self {
        Self { strength: 45.0, inclination_deg: 55.0, declination_deg: 0.0 }
    }
}

/// Everything needed to generate a trial of identical laps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LapScenario {
    pub name: String,
    pub animal: AnimalParams,
    /// Station to the start of the corner (m).
    pub straight_length: f64,
    pub corner_radius: f64,
    pub turn: TurnDirection,
    pub speed: SpeedProfile,
    pub fluke_frequency: f64,
    /// Pitch oscillation amplitude while fluking (deg).
    pub fluke_amplitude_deg: f64,
    pub depth: DepthProfile,
    pub laps: usize,
    pub pre_rest_s: f64,
    /// Rest at the station between laps (s); the animal turns round in place.
    pub rest_s: f64,
    pub post_rest_s: f64,
    /// Heading of the first outgoing straight, counter-clockwise from world x (deg).
    pub heading_deg: f64,
    pub station: [f64; 2],
    pub magnetic: MagneticField,
    pub noise: NoiseConfig,
    pub seed: u64,
}

impl Default for LapScenario {
    fn default() -> Self {
        Self {
            name: "default".into(),
            animal: AnimalParams::tt02(),
            straight_length: 30.0,
            corner_radius: 1.5,
            turn: TurnDirection::Alternate,
            speed: SpeedProfile::default(),
            fluke_frequency: 2.0,
            fluke_amplitude_deg: 6.0,
            depth: DepthProfile::default(),
            laps: 8,
            pre_rest_s: 10.0,
            rest_s: 20.0,
            post_rest_s: 10.0,
            heading_deg: 0.0,
            station: [0.0, 0.0],
            magnetic: MagneticField::default(),
            noise: NoiseConfig::default(),
            seed: 1,
        }
    }
}

impl LapScenario {
    /// Scenarios parameterised to the three study animals.
    pub fn preset(name: &str) -> Option<Self> {
        let base = |animal: AnimalParams, straight: f64, radius: f64, speed: SpeedProfile, depth: DepthProfile| Self {
            name: animal.name.clone(),
            animal,
            straight_length: straight,
            corner_radius: radius,
            speed,
            depth,
            ..Self::default()
        };
        match name.to_ascii_uppercase().as_str() {
            "TT01" => Some(base(
                AnimalParams::tt01(),
                38.0,
                1.3,
                SpeedProfile {
                    accel: 0.6,
                    cruise: 2.6,
                    decel: 0.4,
                    corner: 2.4,
                    return_accel: 0.5,
                    return_speed: 2.9,
                    turn_margin_s: 0.6,
                    glide_distance: 12.0,
                },
                DepthProfile { surface: 0.5, cruise: 2.5, dive_distance: 8.0, rise_distance: 8.0 },
            )),
            "TT02" => Some(base(
                AnimalParams::tt02(),
                36.0,
                1.9,
                SpeedProfile {
                    accel: 0.9,
                    cruise: 4.6,
                    decel: 1.2,
                    corner: 3.4,
                    return_accel: 0.9,
                    return_speed: 5.2,
                    turn_margin_s: 0.6,
                    glide_distance: 8.0,
                },
                DepthProfile { surface: 0.5, cruise: 3.0, dive_distance: 8.0, rise_distance: 8.0 },
            )),
            "TT03" => Some(base(
                AnimalParams::tt03(),
                37.0,
                1.0,
                SpeedProfile {
                    accel: 0.8,
                    cruise: 4.0,
                    decel: 1.0,
                    corner: 2.0,
                    return_accel: 0.7,
                    return_speed: 4.2,
                    turn_margin_s: 0.6,
                    glide_distance: 8.0,
                },
                DepthProfile { surface: 0.5, cruise: 2.0, dive_distance: 8.0, rise_distance: 8.0 },
            )),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        self.animal.validate()?;
        let sp = &self.speed;
        let positive = [
            ("straight_length", self.straight_length),
            ("corner_radius", self.corner_radius),
            ("speed.accel", sp.accel),
            ("speed.cruise", sp.cruise),
            ("speed.decel", sp.decel),
            ("speed.corner", sp.corner),
            ("speed.return_accel", sp.return_accel),
            ("speed.return_speed", sp.return_speed),
            ("speed.glide_distance", sp.glide_distance),
            ("fluke_frequency", self.fluke_frequency),
            ("depth.dive_distance", self.depth.dive_distance),
            ("depth.rise_distance", self.depth.rise_distance),
            ("magnetic.strength", self.magnetic.strength),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{k} must be positive, got {v}"));
            }
        }
        let non_negative = [
            ("fluke_amplitude_deg", self.fluke_amplitude_deg),
            ("speed.turn_margin_s", sp.turn_margin_s),
            ("depth.surface", self.depth.surface),
            ("depth.cruise", self.depth.cruise),
            ("pre_rest_s", self.pre_rest_s),
            ("rest_s", self.rest_s),
            ("post_rest_s", self.post_rest_s),
        ];
        for (k, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{k} must be non-negative, got {v}"));
            }
        }
        if sp.corner > sp.cruise || sp.corner > sp.return_speed {
            return bad(format!("corner speed {} exceeds a cruise speed", sp.corner));
        }
        if self.laps == 0 {
            return bad("laps must be at least 1".into());
        }
        if self.laps > 1 && self.rest_s < 2.0 {
            return bad(format!("rest_s {} too short to turn round between laps", self.rest_s));
        }
        if !(self.fluke_amplitude_deg < 30.0) {
            return bad(format!("fluke_amplitude_deg {} unrealistically large", self.fluke_amplitude_deg));
        }
        // profile feasibility is checked by the model
        TrialModel::new(self).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for n in ["TT01", "tt02", "TT03"] {
            let s = LapScenario::preset(n).unwrap();
            s.validate().unwrap();
        }
        assert!(LapScenario::preset("TT04").is_none());
        LapScenario::default().validate().unwrap();
    }

    #[test]
    fn infeasible_profiles_rejected() {
        let mut s = LapScenario::default();
        s.speed.accel = 0.1; // needs 80 m to reach cruise
        assert!(matches!(s.validate(), Err(Error::InvalidScenario(_))));
        let mut s = LapScenario::default();
        s.speed.corner = -1.0;
        assert!(matches!(s.validate(), Err(Error::InvalidScenario(_))));
        let mut s = LapScenario::default();
        s.speed.corner = 5.0;
        assert!(s.validate().is_err());
        let mut s = LapScenario::default();
        s.laps = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn scenario_serde_round_trip() {
        let s = LapScenario::preset("TT03").unwrap();
        let j = serde_json::to_string(&s).unwrap();
        let back: LapScenario = serde_json::from_str(&j).unwrap();
        assert_eq!(s, back);
        // partial documents fill in defaults
        let p: LapScenario = serde_json::from_str(r#"{"laps": 2, "speed": {"cruise": 3.5}}"#).unwrap();
        assert_eq!(p.laps, 2);
        assert_eq!(p.speed.cruise, 3.5);
        assert_eq!(p.speed.accel, SpeedProfile::default().accel);
    }
}
