//! Dead-reckoned planar tracks, curvature radius and circle fitting.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::KinematicState;

/// Denominator threshold below which the curvature radius is reported as +inf.
pub const DEFAULT_CURVATURE_EPS: f64 = 1e-6;

/// Planar track in the local world frame.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Track {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Instantaneous radius of curvature; `+inf` on straights and at the ends.
    pub r: Vec<f64>,
}

impl Track {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn point(&self, i: usize) -> (f64, f64) {
        (self.x[i], self.y[i])
    }

    /// Polyline length between samples `a` and `b` (inclusive).
    pub fn path_length(&self, a: usize, b: usize) -> f64 {
        (a..b).map(|i| (self.x[i + 1] - self.x[i]).hypot(self.y[i + 1] - self.y[i])).sum()
    }

    pub fn slice(&self, a: usize, b: usize) -> Track {
        Track {
            t: self.t[a..b].to_vec(),
            x: self.x[a..b].to_vec(),
            y: self.y[a..b].to_vec(),
            r: self.r[a..b].to_vec(),
        }
    }
}

/// Forward-Euler integration of the horizontal velocity:
/// `p[i+1] = p[i] + v_xy[i] * (cos yaw[i], sin yaw[i]) * dt`.
pub fn dead_reckon(states: &[KinematicState], p0: (f64, f64), dt: f64) -> Track {
    let n = states.len();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let (mut px, mut py) = p0;
    for (i, s) in states.iter().enumerate() {
        x.push(px);
        y.push(py);
        if i + 1 < n {
            let (sin, cos) = s.yaw.sin_cos();
            px += s.v_xy * cos * dt;
            py += s.v_xy * sin * dt;
        }
    }
    let r = curvature_radius(&x, &y, dt, DEFAULT_CURVATURE_EPS);
    Track { t: states.iter().map(|s| s.t).collect(), x, y, r }
}

/// Radius of curvature from central first and second differences of the
/// track. Returns `+inf` where `|x'y'' - y'x''| < eps` and at both ends.
pub fn curvature_radius(x: &[f64], y: &[f64], dt: f64, eps: f64) -> Vec<f64> {
    let n = x.len().min(y.len());
    let mut r = vec![f64::INFINITY; n];
    if n < 3 {
        return r;
    }
    for i in 1..n - 1 {
        let xd = (x[i + 1] - x[i - 1]) / (2.0 * dt);
        let yd = (y[i + 1] - y[i - 1]) / (2.0 * dt);
        let xdd = (x[i + 1] - 2.0 * x[i] + x[i - 1]) / (dt * dt);
        let ydd = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (dt * dt);
        let den = (xd * ydd - yd * xdd).abs();
        if den >= eps {
            r[i] = (xd * xd + yd * yd).powf(1.5) / den;
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircleFit {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    /// RMS of the geometric distance residuals.
    pub rms_residual: f64,
}

/// Algebraic (Kåsa) least-squares circle: minimises
/// Σ (x² + y² + D x + E y + F)².
pub fn fit_circle(points: &[(f64, f64)]) -> Result<CircleFit> {
    if points.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: points.len() });
    }
    let m = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (mx / m, my / m);
    let scale = points.iter().map(|p| (p.0 - mx).hypot(p.1 - my)).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Collinear);
    }

    // work in centred, scaled coordinates
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for p in points {
        let (u, v) = ((p.0 - mx) / scale, (p.1 - my) / scale);
        let row = Vector3::new(u, v, 1.0);
        ata += row * row.transpose();
        atb -= row * (u * u + v * v);
    }
    let sv = ata.singular_values();
    if sv.min() <= 1e-12 * sv.max() {
        return Err(Error::Collinear);
    }
    let sol = ata.lu().solve(&atb).ok_or(Error::Collinear)?;
    let (cu, cv) = (-0.5 * sol[0], -0.5 * sol[1]);
    let r2 = cu * cu + cv * cv - sol[2];
    if !(r2 > 0.0) {
        return Err(Error::Collinear);
    }
    let (cx, cy, radius) = (mx + cu * scale, my + cv * scale, r2.sqrt() * scale);
    let rms = (points.iter().map(|p| ((p.0 - cx).hypot(p.1 - cy) - radius).powi(2)).sum::<f64>() / m).sqrt();
    Ok(CircleFit { cx, cy, radius, rms_residual: rms })
}

/// Translates each track so its corner sample sits at the origin and
/// rotates it so the mean pre-corner heading points along +x.
pub fn align_at_corner(tracks: &[Track], corner_indices: &[Option<usize>]) -> Result<Vec<Track>> {
    tracks
        .iter()
        .enumerate()
        .map(|(k, tr)| {
            let c = corner_indices
                .get(k)
                .copied()
                .flatten()
                .filter(|&c| c < tr.len())
                .ok_or(Error::MissingCorner(k))?;
            let (ox, oy) = tr.point(c);
            let (mut hx, mut hy) = (0.0, 0.0);
            for i in 0..c {
                let (dx, dy) = (tr.x[i + 1] - tr.x[i], tr.y[i + 1] - tr.y[i]);
                let d = dx.hypot(dy);
                if d > 0.0 {
                    hx += dx / d;
                    hy += dy / d;
                }
            }
            let heading = if hx == 0.0 && hy == 0.0 { 0.0 } else { hy.atan2(hx) };
            let (s, co) = (-heading).sin_cos();
            let mut out = tr.clone();
            for i in 0..tr.len() {
                let (dx, dy) = (tr.x[i] - ox, tr.y[i] - oy);
                out.x[i] = co * dx - s * dy;
                out.y[i] = s * dx + co * dy;
            }
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn states(v_xy: &[f64], yaw: &[f64]) -> Vec<KinematicState> {
        v_xy.iter()
            .zip(yaw)
            .enumerate()
            .map(|(i, (&v, &y))| KinematicState { t: i as f64 * 0.2, v, v_xy: v, yaw: y, ..Default::default() })
            .collect()
    }

    #[test]
    fn stationary_track_stays_put() {
        let tr = dead_reckon(&states(&[0.0; 10], &[0.3; 10]), (1.0, -2.0), 0.2);
        assert!(tr.x.iter().all(|&x| x == 1.0) && tr.y.iter().all(|&y| y == -2.0));
    }

    #[test]
    fn straight_line_endpoint() {
        let tr = dead_reckon(&states(&[2.0; 6], &[0.0; 6]), (0.0, 0.0), 0.2);
        assert!((tr.x[5] - 2.0).abs() < 1e-12 && tr.y[5] == 0.0);
        assert!(tr.r.iter().all(|r| r.is_infinite()));
    }

    #[test]
    fn circle_curvature_radius() {
        let (r0, v, dt) = (1.8, 2.0, 0.2);
        let n = 40;
        let x: Vec<f64> = (0..n).map(|i| r0 * (v / r0 * i as f64 * dt).cos()).collect();
        let y: Vec<f64> = (0..n).map(|i| r0 * (v / r0 * i as f64 * dt).sin()).collect();
        let r = curvature_radius(&x, &y, dt, DEFAULT_CURVATURE_EPS);
        for ri in &r[1..n - 1] {
            assert!((ri - r0).abs() / r0 < 0.02, "{ri}");
        }
        assert!(r[0].is_infinite() && r[n - 1].is_infinite());
    }

    #[test]
    fn collinear_points_infinite_radius() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..10).map(|i| 0.5 * i as f64).collect();
        assert!(curvature_radius(&x, &y, 0.2, DEFAULT_CURVATURE_EPS).iter().all(|r| r.is_infinite()));
    }

    #[test]
    fn kasa_exact_points() {
        let pts: Vec<(f64, f64)> = [0.3, 1.4, 2.9, 4.4]
            .iter()
            .map(|a: &f64| (1.0 + 3.0 * a.cos(), 2.0 + 3.0 * a.sin()))
            .collect();
        let f = fit_circle(&pts).unwrap();
        assert!((f.cx - 1.0).abs() < 1e-10 && (f.cy - 2.0).abs() < 1e-10 && (f.radius - 3.0).abs() < 1e-10);
        assert!(f.rms_residual < 1e-10);
    }

    #[test]
    fn kasa_three_points_circumscribed() {
        let f = fit_circle(&[(0.0, 0.0), (2.0, 0.0), (0.0, 2.0)]).unwrap();
        assert!((f.cx - 1.0).abs() < 1e-12 && (f.cy - 1.0).abs() < 1e-12);
        assert!((f.radius - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn kasa_noisy_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let a = i as f64 * 0.1;
                (-4.0 + 1.5 * a.cos() + rng.gen_range(-0.01..0.01), 3.0 + 1.5 * a.sin() + rng.gen_range(-0.01..0.01))
            })
            .collect();
        let f = fit_circle(&pts).unwrap();
        assert!((f.radius - 1.5).abs() < 0.02);
        assert!(f.rms_residual < 0.01);
    }

    #[test]
    fn kasa_rejects_collinear() {
        assert!(matches!(fit_circle(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]), Err(Error::Collinear)));
        assert!(fit_circle(&[(0.0, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn align_single_and_translated() {
        let yaw: Vec<f64> = (0..20).map(|i| if i < 10 { 0.7 } else { 0.7 + 0.3 * (i - 10) as f64 }).collect();
        let st = states(&[1.5; 20], &yaw);
        let a = dead_reckon(&st, (0.0, 0.0), 0.2);
        let b = dead_reckon(&st, (12.0, -7.0), 0.2);
        let out = align_at_corner(&[a, b], &[Some(10), Some(10)]).unwrap();
        assert!(out[0].x[10].abs() < 1e-12 && out[0].y[10].abs() < 1e-12);
        for i in 0..20 {
            assert!((out[0].x[i] - out[1].x[i]).abs() < 1e-9 && (out[0].y[i] - out[1].y[i]).abs() < 1e-9);
        }
        // pre-corner leg lies on the -x axis
        assert!(out[0].y[0].abs() < 1e-9 && out[0].x[0] < 0.0);
        assert!(matches!(align_at_corner(&out, &[Some(3), None]), Err(Error::MissingCorner(1))));
    }

    proptest! {
        #[test]
        fn reckoning_equivariance(
            speeds in proptest::collection::vec(0.0f64..5.0, 5..40),
            phi in -3.0f64..3.0,
            px in -50.0f64..50.0,
            py in -50.0f64..50.0,
        ) {
            let n = speeds.len();
            let yaw: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
            let base = dead_reckon(&states(&speeds, &yaw), (0.0, 0.0), 0.2);
            let shifted = dead_reckon(&states(&speeds, &yaw), (px, py), 0.2);
            let rotated_yaw: Vec<f64> = yaw.iter().map(|y| y + phi).collect();
            let rotated = dead_reckon(&states(&speeds, &rotated_yaw), (0.0, 0.0), 0.2);
            let (s, c) = phi.sin_cos();
            for i in 0..n {
                prop_assert!((shifted.x[i] - base.x[i] - px).abs() < 1e-12);
                prop_assert!((shifted.y[i] - base.y[i] - py).abs() < 1e-12);
                prop_assert!((rotated.x[i] - (c * base.x[i] - s * base.y[i])).abs() < 1e-12);
                prop_assert!((rotated.y[i] - (s * base.x[i] + c * base.y[i])).abs() < 1e-12);
            }
            // path length from speeds equals polyline length
            let from_speed: f64 = speeds[..n - 1].iter().sum::<f64>() * 0.2;
            prop_assert!((base.path_length(0, n - 1) - from_speed).abs() < 1e-9);
        }

        #[test]
        fn reckoning_segment_additivity(
            speeds in proptest::collection::vec(0.0f64..5.0, 6..40),
            split in 1usize..5,
        ) {
            let n = speeds.len();
            let yaw: Vec<f64> = (0..n).map(|i| i as f64 * 0.11).collect();
            let st = states(&speeds, &yaw);
            let whole = dead_reckon(&st, (0.0, 0.0), 0.2);
            let a = dead_reckon(&st[..=split], (0.0, 0.0), 0.2);
            let b = dead_reckon(&st[split..], (a.x[split], a.y[split]), 0.2);
            for i in split..n {
                prop_assert!((b.x[i - split] - whole.x[i]).abs() < 1e-12);
                prop_assert!((b.y[i - split] - whole.y[i]).abs() < 1e-12);
            }
        }
    }
}
