use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{LapScenario, ModelState, TrialModel, TruthLap, AUX_RATE, IMU_RATE};
use crate::error::{Error, Result};
use crate::ingest::{fmt_sig, AuxSample, ImuSample, TagSeries};
use crate::kinematics::KinematicState;
use crate::orientation::{EulerPose, Quaternion};

/// Ground-truth channels on the master timeline.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TruthSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub v_xy: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub depth: f64,
    pub a_t: f64,
    pub omega: f64,
    pub a_n: f64,
    pub lap: Option<usize>,
    pub fluking: bool,
    pub in_turn: bool,
}

impl From<&ModelState> for TruthSample {
    fn from(s: &ModelState) -> Self {
        Self {
            t: s.t,
            x: s.x,
            y: s.y,
            v: s.v,
            v_xy: s.v_xy,
            yaw: s.yaw,
            pitch: s.pitch,
            depth: s.depth,
            a_t: s.a_t,
            omega: s.yaw_rate,
            a_n: s.yaw_rate * s.v,
            lap: s.lap,
            fluking: s.fluking,
            in_turn: s.in_arc,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Truth {
    pub samples: Vec<TruthSample>,
    pub laps: Vec<TruthLap>,
    pub dt: f64,
    model: TrialModel,
}

impl Truth {
    pub fn model(&self) -> &TrialModel {
        &self.model
    }

    pub fn scenario(&self) -> &LapScenario {
        self.model.scenario()
    }

    /// Truth as pipeline states; fluking samples carry the full fluke amplitude
    /// as their pitch oscillation.
    pub fn kinematic_states(&self) -> Vec<KinematicState> {
        let sc = self.scenario();
        let osc = sc.fluke_amplitude_deg.to_radians();
        self.samples
            .iter()
            .map(|s| KinematicState {
                t: s.t,
                v: s.v,
                v_xy: s.v_xy,
                pitch: s.pitch,
                yaw: s.yaw,
                depth: s.depth,
                a_t: s.a_t,
                omega: s.omega,
                a_n: s.a_n,
                v_bl: s.v / sc.animal.length,
                pitch_osc: if s.fluking { osc } else { 0.0 },
            })
            .collect()
    }
}

fn sample_count(duration: f64, rate: f64) -> usize {
    (duration * rate).round() as usize
}

/// Samples the analytic model on the 5 Hz master timeline.
pub fn generate_truth(scenario: &LapScenario) -> Result<Truth> {
    scenario.validate()?;
    let model = TrialModel::new(scenario)?;
    let n = sample_count(model.duration(), AUX_RATE);
    let step = (IMU_RATE / AUX_RATE) as usize;
    let samples = (0..n).map(|j| TruthSample::from(&model.state((j * step) as f64 / IMU_RATE))).collect();
    Ok(Truth { samples, laps: model.truth_laps(), dt: 1.0 / AUX_RATE, model })
}

/// 50 Hz IMU and 5 Hz depth/speed with seeded Gaussian noise.
///
/// The accelerometer reads specific force `Rᵀ(a + g ẑ)` of the centre of
/// mass, the gyro the body rates of the Z-Y-X Euler angles (roll is zero),
/// and the magnetometer a fixed world field. Speed and depth are clamped at
/// zero after noise.
pub fn synthesize_tag(truth: &Truth) -> TagSeries {
    let model = &truth.model;
    let sc = model.scenario();
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut gauss = |sigma: f64| -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        sigma * z
    };
    let g = sc.animal.g;
    let (inc, dec) = (sc.magnetic.inclination_deg.to_radians(), sc.magnetic.declination_deg.to_radians());
    let b = sc.magnetic.strength;
    let m_world = [b * inc.cos() * dec.cos(), b * inc.cos() * dec.sin(), -b * inc.sin()];
    let nz = &sc.noise;

    let n = sample_count(model.duration(), IMU_RATE);
    let step = (IMU_RATE / AUX_RATE) as usize;
    let mut imu = Vec::with_capacity(n);
    let mut aux = Vec::with_capacity(n / step + 1);
    for k in 0..n {
        let t = k as f64 / IMU_RATE;
        let s = model.state(t);
        let q = Quaternion::from_euler(EulerPose::new(s.pitch, 0.0, s.yaw));
        let (cy, sy) = (s.yaw.cos(), s.yaw.sin());
        let a_world = [
            s.a_xy * cy - s.v_xy * s.yaw_rate * sy,
            s.a_xy * sy + s.v_xy * s.yaw_rate * cy,
            -s.depth_acc + g,
        ];
        let f = q.rotate_inverse(a_world);
        let gyro = [-s.yaw_rate * s.pitch.sin(), s.pitch_rate, s.yaw_rate * s.pitch.cos()];
        let m = q.rotate_inverse(m_world);
        imu.push(ImuSample {
            t,
            accel: [f[0] + gauss(nz.accel), f[1] + gauss(nz.accel), f[2] + gauss(nz.accel)],
            gyro: [gyro[0] + gauss(nz.gyro), gyro[1] + gauss(nz.gyro), gyro[2] + gauss(nz.gyro)],
            mag: Some([m[0] + gauss(nz.mag), m[1] + gauss(nz.mag), m[2] + gauss(nz.mag)]),
        });
        if k % step == 0 {
            aux.push(AuxSample {
                t,
                depth: (s.depth + gauss(nz.depth)).max(0.0),
                speed: (s.v + gauss(nz.speed)).max(0.0),
                temp: None,
            });
        }
    }
    TagSeries { imu, aux, flags: Vec::new(), rows: n }
}

pub fn write_truth_csv<W: Write>(writer: W, truth: &Truth) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "x", "y", "v", "v_xy", "yaw", "pitch", "depth", "a_t", "omega", "a_n", "lap", "fluking", "in_turn"])?;
    for s in &truth.samples {
        let mut rec: Vec<String> =
            [s.t, s.x, s.y, s.v, s.v_xy, s.yaw, s.pitch, s.depth, s.a_t, s.omega, s.a_n].iter().map(|&v| fmt_sig(v, 9)).collect();
        rec.push(s.lap.map(|l| l.to_string()).unwrap_or_default());
        rec.push(u8::from(s.fluking).to_string());
        rec.push(u8::from(s.in_turn).to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| Error::Io { path: "<writer>".into(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::write_tag_csv;
    use crate::simulator::NoiseConfig;

    fn quiet(laps: usize) -> LapScenario {
        LapScenario { laps, noise: NoiseConfig::zero(), ..LapScenario::default() }
    }

    #[test]
    fn stationary_reads_gravity_only() {
        let sc = LapScenario { pre_rest_s: 5.0, ..quiet(1) };
        let truth = generate_truth(&sc).unwrap();
        let tag = synthesize_tag(&truth);
        for s in tag.imu.iter().take_while(|s| s.t < 4.9) {
            assert!(s.accel[0].abs() < 1e-12 && s.accel[1].abs() < 1e-12);
            assert!((s.accel[2] - 9.81).abs() < 1e-12);
            assert!(s.gyro.iter().all(|g| g.abs() < 1e-12));
        }
    }

    #[test]
    fn row_counts_follow_duration() {
        let truth = generate_truth(&quiet(2)).unwrap();
        let tag = synthesize_tag(&truth);
        let d = truth.model().duration();
        assert_eq!(tag.imu.len(), (d * 50.0).round() as usize);
        assert_eq!(tag.aux.len(), (d * 5.0).round() as usize);
        assert_eq!(truth.samples.len(), tag.aux.len());
        assert_eq!(truth.laps.len(), 2);
    }

    #[test]
    fn same_seed_same_bytes() {
        let sc = LapScenario { laps: 1, seed: 42, ..LapScenario::default() };
        let bytes = |sc: &LapScenario| {
            let t = generate_truth(sc).unwrap();
            let mut a = Vec::new();
            write_tag_csv(&mut a, &synthesize_tag(&t)).unwrap();
            write_truth_csv(&mut a, &t).unwrap();
            a
        };
        assert_eq!(bytes(&sc), bytes(&sc));
        let other = LapScenario { seed: 43, ..sc.clone() };
        assert_ne!(bytes(&sc), bytes(&other));
    }

    #[test]
    fn accelerometer_sees_centripetal_force_in_turn() {
        let sc = LapScenario {
            depth: crate::simulator::DepthProfile { surface: 2.0, cruise: 2.0, dive_distance: 5.0, rise_distance: 5.0 },
            fluke_amplitude_deg: 0.0,
            ..quiet(1)
        };
        let truth = generate_truth(&sc).unwrap();
        let tag = synthesize_tag(&truth);
        let apex = truth.laps[0].t_apex;
        let s = tag.imu.iter().min_by(|a, b| (a.t - apex).abs().total_cmp(&(b.t - apex).abs())).unwrap();
        // level, left turn: specific force points to the body's left (+y)
        assert!((s.accel[1] - 16.0 / 1.5).abs() < 1e-6, "{:?}", s.accel);
        assert!((s.gyro[2] - 4.0 / 1.5).abs() < 1e-9);
    }

    #[test]
    fn truth_csv_has_one_row_per_sample() {
        let truth = generate_truth(&quiet(1)).unwrap();
        let mut buf = Vec::new();
        write_truth_csv(&mut buf, &truth).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), truth.samples.len() + 1);
        assert!(text.starts_with("t,x,y,v,v_xy,yaw,pitch,depth,a_t,omega,a_n,lap,fluking,in_turn\n"));
    }
}
