//! Gradient-descent AHRS (Madgwick-style) orientation estimation.
//!
//! Quaternions rotate body-frame vectors into the world frame (x forward at
//! zero yaw, z up). Euler angles follow the Z-Y-X (yaw, pitch, roll)
//! convention; positive pitch rotates the body x axis toward world -z.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ImuSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, r: Quaternion) -> Quaternion {
        let l = self;
        Quaternion {
            w: l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z,
            x: l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y,
            y: l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x,
            z: l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w,
        }
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let n = norm3(axis);
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new(c, s * axis[0] / n, s * axis[1] / n, s * axis[2] / n)
    }

    /// Z-Y-X composition: yaw about z, then pitch about the new y, then roll.
    pub fn from_euler(pose: EulerPose) -> Self {
        let (sr, cr) = (0.5 * pose.roll).sin_cos();
        let (sp, cp) = (0.5 * pose.pitch).sin_cos();
        let (sy, cy) = (0.5 * pose.yaw).sin_cos();
        Self::new(
            cr * cp * cy + sr * sp * sy,
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy,
        )
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Body -> world.
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let p = *self * Quaternion::new(0.0, v[0], v[1], v[2]) * self.conjugate();
        [p.x, p.y, p.z]
    }

    /// World -> body.
    pub fn rotate_inverse(&self, v: [f64; 3]) -> [f64; 3] {
        self.conjugate().rotate(v)
    }

    fn scaled_add(self, k: f64, d: Quaternion) -> Self {
        Self::new(self.w + k * d.w, self.x + k * d.x, self.y + k * d.y, self.z + k * d.z)
    }

    pub fn to_euler(&self) -> EulerPose {
        quat_to_euler(*self)
    }
}

/// Orientation as Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerPose {
    pub pitch: f64,
    pub roll: f64,
    pub yaw: f64,
}

impl EulerPose {
    pub fn new(pitch: f64, roll: f64, yaw: f64) -> Self {
        Self { pitch, roll, yaw }
    }
}

pub fn euler_to_quat(pose: EulerPose) -> Quaternion {
    Quaternion::from_euler(pose)
}

/// Z-Y-X Euler angles of a unit quaternion. At |pitch| = π/2 roll is pinned to zero.
pub fn quat_to_euler(q: Quaternion) -> EulerPose {
    let Quaternion { w, x, y, z } = q;
    let sin_pitch = 2.0 * (w * y - z * x);
    if sin_pitch.abs() >= 1.0 - 1e-12 {
        let pitch = std::f64::consts::FRAC_PI_2.copysign(sin_pitch);
        let yaw = -2.0 * sin_pitch.signum() * x.atan2(w);
        return EulerPose { pitch, roll: 0.0, yaw: wrap_pi(yaw) };
    }
    EulerPose {
        pitch: sin_pitch.asin(),
        roll: (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y)),
        yaw: (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z)),
    }
}

fn wrap_pi(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    (a + PI).rem_euclid(TAU) - PI
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// One filter step: gyro integration plus a normalised gradient-descent
/// correction of size `beta` toward the accelerometer (and magnetometer,
/// when given) reference directions. `beta = 0` is pure gyro integration.
pub fn ahrs_update(
    q: Quaternion,
    gyro: [f64; 3],
    accel: [f64; 3],
    mag: Option<[f64; 3]>,
    beta: f64,
    dt: f64,
) -> Result<Quaternion> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let an = norm3(accel);
    if an == 0.0 || !an.is_finite() {
        return Err(Error::ZeroAccel);
    }
    let q_dot = q * Quaternion::new(0.0, gyro[0], gyro[1], gyro[2]);
    let mut q_dot = Quaternion::new(0.5 * q_dot.w, 0.5 * q_dot.x, 0.5 * q_dot.y, 0.5 * q_dot.z);

    if beta > 0.0 {
        let a = [accel[0] / an, accel[1] / an, accel[2] / an];
        let mut grad = gravity_gradient(q, a);
        if let Some(m) = mag {
            let mn = norm3(m);
            if mn > 0.0 && mn.is_finite() {
                let g = magnetic_gradient(q, [m[0] / mn, m[1] / mn, m[2] / mn]);
                for k in 0..4 {
                    grad[k] += g[k];
                }
            }
        }
        let gn = (grad.iter().map(|g| g * g).sum::<f64>()).sqrt();
        if gn > 1e-15 {
            q_dot = q_dot.scaled_add(
                -beta / gn,
                Quaternion::new(grad[0], grad[1], grad[2], grad[3]),
            );
        }
    }
    Ok(q.scaled_add(dt, q_dot).normalized())
}

/// J^T f for the objective `R(q)^T e_z - a`.
fn gravity_gradient(q: Quaternion, a: [f64; 3]) -> [f64; 4] {
    let Quaternion { w: q0, x: q1, y: q2, z: q3 } = q;
    let f = [
        2.0 * (q1 * q3 - q0 * q2) - a[0],
        2.0 * (q0 * q1 + q2 * q3) - a[1],
        1.0 - 2.0 * (q1 * q1 + q2 * q2) - a[2],
    ];
    let j = [
        [-2.0 * q2, 2.0 * q3, -2.0 * q0, 2.0 * q1],
        [2.0 * q1, 2.0 * q0, 2.0 * q3, 2.0 * q2],
        [0.0, -4.0 * q1, -4.0 * q2, 0.0],
    ];
    jt_f(&j, &f)
}

/// J^T f for the objective `R(q)^T b - m`, with the earth field `b` rebuilt
/// from the measurement so it only constrains heading.
fn magnetic_gradient(q: Quaternion, m: [f64; 3]) -> [f64; 4] {
    let h = q.rotate(m);
    let bx = (h[0] * h[0] + h[1] * h[1]).sqrt();
    let bz = h[2];
    let Quaternion { w: q0, x: q1, y: q2, z: q3 } = q;
    let f = [
        2.0 * bx * (0.5 - q2 * q2 - q3 * q3) + 2.0 * bz * (q1 * q3 - q0 * q2) - m[0],
        2.0 * bx * (q1 * q2 - q0 * q3) + 2.0 * bz * (q0 * q1 + q2 * q3) - m[1],
        2.0 * bx * (q0 * q2 + q1 * q3) + 2.0 * bz * (0.5 - q1 * q1 - q2 * q2) - m[2],
    ];
    let j = [
        [-2.0 * bz * q2, 2.0 * bz * q3, -4.0 * bx * q2 - 2.0 * bz * q0, -4.0 * bx * q3 + 2.0 * bz * q1],
        [
            -2.0 * bx * q3 + 2.0 * bz * q1,
            2.0 * bx * q2 + 2.0 * bz * q0,
            2.0 * bx * q1 + 2.0 * bz * q3,
            -2.0 * bx * q0 + 2.0 * bz * q2,
        ],
        [2.0 * bx * q2, 2.0 * bx * q3 - 4.0 * bz * q1, 2.0 * bx * q0 - 4.0 * bz * q2, 2.0 * bx * q1],
    ];
    jt_f(&j, &f)
}

fn jt_f(j: &[[f64; 4]; 3], f: &[f64; 3]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (row, fi) in j.iter().zip(f) {
        for k in 0..4 {
            out[k] += row[k] * fi;
        }
    }
    out
}

/// Settings for running the filter over a recorded IMU stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrientationConfig {
    pub beta: f64,
    /// Skip the accelerometer/magnetometer correction while | |a| - g | / g
    /// exceeds this fraction (the specific force is then not gravity-dominated).
    pub accel_rejection: Option<f64>,
    pub use_mag: bool,
    /// Heading used to seed yaw when no magnetometer is used (rad).
    pub initial_heading: f64,
    /// Added to every yaw estimate, e.g. magnetic declination (rad).
    pub heading_offset: f64,
    pub gravity: f64,
}

impl Default for OrientationConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            accel_rejection: Some(0.1),
            use_mag: true,
            initial_heading: 0.0,
            heading_offset: 0.0,
            gravity: 9.81,
        }
    }
}

/// Tilt from the accelerometer and, if present, tilt-compensated heading.
pub fn initial_attitude(accel: [f64; 3], mag: Option<[f64; 3]>, fallback_yaw: f64) -> Result<Quaternion> {
    if norm3(accel) == 0.0 {
        return Err(Error::ZeroAccel);
    }
    let roll = accel[1].atan2(accel[2]);
    let pitch = (-accel[0]).atan2((accel[1] * accel[1] + accel[2] * accel[2]).sqrt());
    let yaw = match mag {
        Some(m) if norm3(m) > 0.0 => {
            let level = Quaternion::from_euler(EulerPose { pitch, roll, yaw: 0.0 });
            let h = level.rotate(m);
            (-h[1]).atan2(h[0])
        }
        _ => fallback_yaw,
    };
    Ok(Quaternion::from_euler(EulerPose { pitch, roll, yaw }))
}

/// Runs the filter over the IMU stream and returns one pose per sample,
/// with yaw wrapped to (-π, π].
pub fn estimate_orientation(imu: &[ImuSample], cfg: &OrientationConfig) -> Result<Vec<EulerPose>> {
    let Some(first) = imu.first() else {
        return Err(Error::EmptyChannel);
    };
    let mag_of = |s: &ImuSample| if cfg.use_mag { s.mag } else { None };
    let mut q = initial_attitude(first.accel, mag_of(first), cfg.initial_heading)?;
    let mut out = Vec::with_capacity(imu.len());
    let pose = |q: Quaternion| {
        let mut p = quat_to_euler(q);
        p.yaw = wrap_pi(p.yaw + cfg.heading_offset);
        p
    };
    out.push(pose(q));
    for w in imu.windows(2) {
        let (prev, s) = (&w[0], &w[1]);
        let dt = s.t - prev.t;
        let mut beta = cfg.beta;
        if let Some(limit) = cfg.accel_rejection {
            let dev = (norm3(s.accel) - cfg.gravity).abs() / cfg.gravity;
            if dev > limit {
                beta = 0.0;
            }
        }
        q = ahrs_update(q, s.gyro, s.accel, mag_of(s), beta, dt)?;
        out.push(pose(q));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    const G: f64 = 9.81;

    #[test]
    fn stationary_level_is_fixed_point() {
        let q = ahrs_update(Quaternion::IDENTITY, [0.0; 3], [0.0, 0.0, G], Some([0.6, 0.0, -0.8]), 0.1, 0.02)
            .unwrap();
        assert!((q.w - 1.0).abs() < 1e-15 && q.x.abs() < 1e-15 && q.y.abs() < 1e-15 && q.z.abs() < 1e-15);
    }

    #[test]
    fn zero_accel_is_an_error() {
        assert!(matches!(
            ahrs_update(Quaternion::IDENTITY, [0.0; 3], [0.0; 3], None, 0.1, 0.02),
            Err(Error::ZeroAccel)
        ));
    }

    #[test]
    fn gyro_only_yaw_quarter_turn() {
        let dt = 0.001;
        let mut q = Quaternion::IDENTITY;
        for _ in 0..1000 {
            q = ahrs_update(q, [0.0, 0.0, FRAC_PI_2], [0.0, 0.0, G], None, 0.0, dt).unwrap();
        }
        assert!((q.to_euler().yaw - FRAC_PI_2).abs() < 1e-3);
    }

    #[test]
    fn gyro_only_matches_axis_angle_second_order() {
        // constant rate about a fixed oblique axis; compare with closed form
        let axis = [0.3, -0.5, 0.8];
        let n = norm3(axis);
        let rate = 1.3;
        let omega = [rate * axis[0] / n, rate * axis[1] / n, rate * axis[2] / n];
        let err = |dt: f64| {
            let steps = (1.0 / dt).round() as usize;
            let mut q = Quaternion::IDENTITY;
            for _ in 0..steps {
                q = ahrs_update(q, omega, [0.0, 0.0, G], None, 0.0, dt).unwrap();
            }
            let exact = Quaternion::from_axis_angle(axis, rate);
            let d = q.conjugate() * exact;
            2.0 * d.x.hypot(d.y).hypot(d.z).atan2(d.w.abs())
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 < 1e-4, "{e1}");
        assert!(e2 < e1 / 3.5, "{e1} {e2}");
    }

    #[test]
    fn static_tilt_converges() {
        let theta = 10f64.to_radians();
        let accel = [-G * theta.sin(), 0.0, G * theta.cos()];
        let mut q = Quaternion::IDENTITY;
        for _ in 0..5000 {
            q = ahrs_update(q, [0.0; 3], accel, None, 0.1, 0.02).unwrap();
        }
        let p = q.to_euler();
        assert!((p.pitch.to_degrees() - 10.0).abs() < 0.1, "{}", p.pitch.to_degrees());
        assert!(p.roll.abs() < 1e-6);
    }

    #[test]
    fn heading_converges_with_magnetometer() {
        // body rotated 40 deg in yaw; filter starts at identity
        let truth = Quaternion::from_euler(EulerPose::new(0.0, 0.0, 40f64.to_radians()));
        let field = [0.8, 0.0, -0.6];
        let m = truth.rotate_inverse(field);
        let a = truth.rotate_inverse([0.0, 0.0, G]);
        let mut q = Quaternion::IDENTITY;
        for _ in 0..10000 {
            q = ahrs_update(q, [0.0; 3], a, Some(m), 0.1, 0.02).unwrap();
        }
        assert!((q.to_euler().yaw.to_degrees() - 40.0).abs() < 0.1);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let q = Quaternion::new(0.9, 0.1, -0.3, 0.2).normalized();
        let a = [0.2, -0.1, 0.97];
        let m = [0.5, 0.3, -0.8];
        // cost = 0.5 |f|^2 ; gradient = J^T f
        let cost_g = |q: Quaternion| {
            let Quaternion { w: q0, x: q1, y: q2, z: q3 } = q;
            let f = [
                2.0 * (q1 * q3 - q0 * q2) - a[0],
                2.0 * (q0 * q1 + q2 * q3) - a[1],
                1.0 - 2.0 * (q1 * q1 + q2 * q2) - a[2],
            ];
            0.5 * f.iter().map(|x| x * x).sum::<f64>()
        };
        let h = q.rotate(m);
        let (bx, bz) = ((h[0] * h[0] + h[1] * h[1]).sqrt(), h[2]);
        let cost_m = |q: Quaternion| {
            let Quaternion { w: q0, x: q1, y: q2, z: q3 } = q;
            let f = [
                2.0 * bx * (0.5 - q2 * q2 - q3 * q3) + 2.0 * bz * (q1 * q3 - q0 * q2) - m[0],
                2.0 * bx * (q1 * q2 - q0 * q3) + 2.0 * bz * (q0 * q1 + q2 * q3) - m[1],
                2.0 * bx * (q0 * q2 + q1 * q3) + 2.0 * bz * (0.5 - q1 * q1 - q2 * q2) - m[2],
            ];
            0.5 * f.iter().map(|x| x * x).sum::<f64>()
        };
        // the polynomial residual equals R(q)^T b - m at unit q
        let r = q.rotate_inverse([bx, 0.0, bz]);
        let direct = 0.5 * (0..3).map(|k| (r[k] - m[k]).powi(2)).sum::<f64>();
        assert!((direct - cost_m(q)).abs() < 1e-12);
        let fd = |cost: &dyn Fn(Quaternion) -> f64, k: usize| {
            let e = 1e-6;
            let mut p = [q.w, q.x, q.y, q.z];
            let mut n = p;
            p[k] += e;
            n[k] -= e;
            let qp = Quaternion::new(p[0], p[1], p[2], p[3]);
            let qn = Quaternion::new(n[0], n[1], n[2], n[3]);
            (cost(qp) - cost(qn)) / (2.0 * e)
        };
        let gg = gravity_gradient(q, a);
        let gm = magnetic_gradient(q, m);
        for k in 0..4 {
            assert!((gg[k] - fd(&cost_g, k)).abs() < 1e-7, "g{k}");
            assert!((gm[k] - fd(&cost_m, k)).abs() < 1e-6, "m{k}: {} vs {}", gm[k], fd(&cost_m, k));
        }
    }

    #[test]
    fn euler_axis_cases() {
        assert_eq!(quat_to_euler(Quaternion::IDENTITY), EulerPose::default());
        let q = Quaternion::from_axis_angle([0.0, 0.0, 1.0], FRAC_PI_2);
        let p = quat_to_euler(q);
        assert!((p.yaw - FRAC_PI_2).abs() < 1e-12 && p.pitch.abs() < 1e-12 && p.roll.abs() < 1e-12);
    }

    #[test]
    fn composed_yaw_then_pitch() {
        let yaw = Quaternion::from_axis_angle([0.0, 0.0, 1.0], 30f64.to_radians());
        let pitch = Quaternion::from_axis_angle([0.0, 1.0, 0.0], 20f64.to_radians());
        let p = quat_to_euler(yaw * pitch);
        assert!((p.pitch - 20f64.to_radians()).abs() < 1e-9);
        assert!((p.yaw - 30f64.to_radians()).abs() < 1e-9);
        assert!(p.roll.abs() < 1e-9);
    }

    #[test]
    fn gimbal_lock_is_clamped() {
        let q = Quaternion::from_euler(EulerPose::new(FRAC_PI_2, 0.0, 0.7));
        let p = quat_to_euler(q);
        assert!((p.pitch - FRAC_PI_2).abs() < 1e-6);
        assert!(p.roll == 0.0 && p.yaw.is_finite());
    }

    #[test]
    fn unit_norm_after_many_updates() {
        let mut q = Quaternion::from_euler(EulerPose::new(0.2, -0.1, 1.0));
        let mut worst: f64 = 0.0;
        for i in 0..1_000_000u32 {
            let s = (i as f64 * 1e-3).sin();
            q = ahrs_update(q, [0.3 * s, -0.2, 0.5 + s], [0.5 * s, 0.2, G], Some([0.7, 0.1 * s, -0.6]), 0.1, 0.02)
                .unwrap();
            worst = worst.max((q.norm() - 1.0).abs());
        }
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn initial_attitude_recovers_pose() {
        let truth = EulerPose::new(0.15, -0.2, 2.5);
        let q = Quaternion::from_euler(truth);
        let a = q.rotate_inverse([0.0, 0.0, G]);
        let m = q.rotate_inverse([0.8, 0.0, -0.6]);
        let p = initial_attitude(a, Some(m), 0.0).unwrap().to_euler();
        assert!((p.pitch - truth.pitch).abs() < 1e-12);
        assert!((p.roll - truth.roll).abs() < 1e-12);
        assert!((p.yaw - truth.yaw).abs() < 1e-12);
        let p = initial_attitude(a, None, -1.0).unwrap().to_euler();
        assert!((p.yaw + 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn euler_round_trip(pitch in -1.5f64..1.5, roll in -3.1f64..3.1, yaw in -3.1f64..3.1) {
            let p = quat_to_euler(euler_to_quat(EulerPose::new(pitch, roll, yaw)));
            prop_assert!((p.pitch - pitch).abs() < 1e-9);
            prop_assert!((p.roll - roll).abs() < 1e-9);
            prop_assert!((p.yaw - yaw).abs() < 1e-9);
        }

        #[test]
        fn yaw_rotation_about_z_is_wrapped(a in -10.0f64..10.0) {
            let p = quat_to_euler(Quaternion::from_axis_angle([0.0, 0.0, 1.0], a));
            let d = (p.yaw - a).rem_euclid(2.0 * PI);
            prop_assert!(d < 1e-9 || (2.0 * PI - d) < 1e-9);
        }
    }
}
