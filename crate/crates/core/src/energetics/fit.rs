//! Power-law fits `P = a1 v^a2` of thrust power against speed.

use serde::{Deserialize, Serialize};

use super::AnimalParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// `a1` (dimensional) or `b1` (non-dimensional).
    pub coefficient: f64,
    /// `a2` or `b2`.
    pub exponent: f64,
    /// RMS of the residuals `P - a1 v^a2`.
    pub rms: f64,
    pub nondimensional: bool,
    pub iterations: usize,
}

impl PowerLawFit {
    pub fn eval(&self, v: f64) -> f64 {
        self.coefficient * v.powf(self.exponent)
    }
}

const MAX_ITER: usize = 200;

/// Space in which the fit residuals are minimised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSpace {
    /// `P - a1 v^a2`; the usual non-linear curve fit.
    #[default]
    Linear,
    /// `ln P - ln a1 - a2 ln v`; maximum likelihood under multiplicative noise.
    Log,
}

/// Least-squares fit of `P = a1 v^a2` with linear-space residuals.
///
/// Seeds from ordinary least squares on `(ln v, ln P)` and refines the
/// linear-space residuals with Levenberg-Marquardt on `(ln a1, a2)`, which
/// keeps the coefficient positive. Deterministic for a given input.
pub fn fit_power_law(points: &[(f64, f64)], nondimensional: bool) -> Result<PowerLawFit> {
    fit_power_law_in(points, nondimensional, FitSpace::Linear)
}

/// As [`fit_power_law`], choosing the residual space. In log space the
/// seed is already the least-squares solution and is returned as is.
pub fn fit_power_law_in(points: &[(f64, f64)], nondimensional: bool, space: FitSpace) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: points.len() });
    }
    if let Some(i) = points.iter().position(|&(v, p)| !(v > 0.0 && p > 0.0) || !v.is_finite() || !p.is_finite()) {
        return Err(Error::NonPositiveData(i));
    }
    let lv: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let lp: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let p: Vec<f64> = points.iter().map(|p| p.1).collect();

    // log-log seed
    let n = lv.len() as f64;
    let (mx, my) = (lv.iter().sum::<f64>() / n, lp.iter().sum::<f64>() / n);
    let sxx: f64 = lv.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lv.iter().zip(&lp).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 1e-12 * n {
        return Err(Error::Singular);
    }
    let mut b = sxy / sxx;
    let mut c = my - b * mx;
    if space == FitSpace::Log {
        let rms = (lv.iter().zip(&p).map(|(x, y)| ((c + b * x).exp() - y).powi(2)).sum::<f64>() / n).sqrt();
        return Ok(PowerLawFit { coefficient: c.exp(), exponent: b, rms, nondimensional, iterations: 0 });
    }

    let sse = |c: f64, b: f64| -> f64 {
        lv.iter().zip(&p).map(|(x, y)| ((c + b * x).exp() - y).powi(2)).sum()
    };
    let mut cost = sse(c, b);
    let mut lambda = 1e-3;
    let mut iterations = 0;

    for _ in 0..MAX_ITER {
        iterations += 1;
        // J columns: d/dc = P̂, d/db = P̂ ln v
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for (x, y) in lv.iter().zip(&p) {
            let ph = (c + b * x).exp();
            let r = y - ph;
            let j = [ph, ph * x];
            for a in 0..2 {
                jtr[a] += j[a] * r;
                for k in 0..2 {
                    jtj[a][k] += j[a] * j[k];
                }
            }
        }
        let grad_norm = jtr[0].abs().max(jtr[1].abs());
        if grad_norm <= 1e-15 * (1.0 + cost) {
            break;
        }

        let mut improved = false;
        while lambda < 1e16 {
            let a00 = jtj[0][0] * (1.0 + lambda);
            let a11 = jtj[1][1] * (1.0 + lambda);
            let a01 = jtj[0][1];
            let det = a00 * a11 - a01 * a01;
            if !(det.abs() > f64::MIN_POSITIVE) {
                return Err(Error::Singular);
            }
            let dc = (a11 * jtr[0] - a01 * jtr[1]) / det;
            let db = (a00 * jtr[1] - a01 * jtr[0]) / det;
            let trial = sse(c + dc, b + db);
            if trial.is_finite() && trial <= cost {
                let rel_step = dc.abs().max(db.abs() / (1.0 + b.abs()));
                c += dc;
                b += db;
                let done = (cost - trial) <= 1e-15 * cost || rel_step < 1e-14;
                cost = trial;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if done {
                    lambda = f64::INFINITY;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || lambda.is_infinite() {
            break;
        }
    }

    Ok(PowerLawFit {
        coefficient: c.exp(),
        exponent: b,
        rms: (cost / n).sqrt(),
        nondimensional,
        iterations,
    })
}

/// Modelled cost of transport at speed `v` from a dimensional power fit.
pub fn predicted_cot(fit: &PowerLawFit, v: f64, params: &AnimalParams) -> f64 {
    (fit.eval(v) / (params.eta_ms * params.eta_sp) + params.p_rmr) / (params.mass * v)
}

/// Speed minimising [`predicted_cot`]: solves `a1 (a2 - 1) v^a2 = η P_RMR`.
/// `None` unless the exponent exceeds one.
pub fn min_cot_speed(fit: &PowerLawFit, params: &AnimalParams) -> Option<f64> {
    if !(fit.exponent > 1.0) {
        return None;
    }
    let eta = params.eta_ms * params.eta_sp;
    Some((eta * params.p_rmr / (fit.coefficient * (fit.exponent - 1.0))).powf(1.0 / fit.exponent))
}

/// Exponents fitted to `replicates` noisy draws of `a1 v^a2`: each draw has
/// `n_points` speeds uniform on `[v_lo, v_hi]` and multiplicative Gaussian
/// noise of relative std `noise`. Seeded, so the result is reproducible.
pub fn monte_carlo_exponents(
    a1: f64,
    a2: f64,
    (v_lo, v_hi): (f64, f64),
    n_points: usize,
    noise: f64,
    replicates: usize,
    seed: u64,
    space: FitSpace,
) -> Result<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, noise).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    (0..replicates)
        .map(|_| {
            let pts: Vec<(f64, f64)> = (0..n_points)
                .map(|_| {
                    let v = rng.gen_range(v_lo..=v_hi);
                    let f: f64 = 1.0 + dist.sample(&mut rng);
                    (v, a1 * v.powf(a2) * f.max(1e-6))
                })
                .collect();
            fit_power_law_in(&pts, false, space).map(|f| f.exponent)
        })
        .collect()
}
