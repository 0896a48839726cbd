//! Rigid-body hydrodynamic model of a swimming dolphin.
//!
//! Net thrust and drag act along the line of motion:
//! `m' a_t = F_thrust + F_drag`, with effective mass `m' = m + 0.4 ρ V`,
//! drag `F_drag = -½ ρ A_s C_D γ v²`, `A_s = 0.08 m^0.65`,
//! `C_D = 16.99 Re^-0.47` and `Re = v L / ν`.

mod fit;

pub use fit::{fit_power_law, fit_power_law_in, min_cot_speed, monte_carlo_exponents, predicted_cot, FitSpace, PowerLawFit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Animal and fluid constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimalParams {
    pub name: String,
    /// Body mass (kg).
    pub mass: f64,
    /// Body length (m).
    pub length: f64,
    /// Body volume (m³). Defaults to `mass / 1025`.
    #[serde(default)]
    pub volume: Option<f64>,
    /// Resting metabolic power (W).
    pub p_rmr: f64,
    #[serde(default = "defaults::eta_ms")]
    pub eta_ms: f64,
    #[serde(default = "defaults::eta_sp")]
    pub eta_sp: f64,
    #[serde(default = "defaults::rho")]
    pub rho: f64,
    #[serde(default = "defaults::nu")]
    pub nu: f64,
    #[serde(default = "defaults::g")]
    pub g: f64,
}

mod defaults {
    pub fn eta_ms() -> f64 {
        0.25
    }
    pub fn eta_sp() -> f64 {
        0.85
    }
    pub fn rho() -> f64 {
        1030.0
    }
    pub fn nu() -> f64 {
        1.044e-6
    }
    pub fn g() -> f64 {
        9.81
    }
}

/// Tissue density used when no body volume is given (kg/m³).
pub const DEFAULT_TISSUE_DENSITY: f64 = 1025.0;

impl AnimalParams {
    pub fn new(name: &str, mass: f64, length: f64, p_rmr: f64) -> Self {
        Self {
            name: name.to_string(),
            mass,
            length,
            volume: None,
            p_rmr,
            eta_ms: defaults::eta_ms(),
            eta_sp: defaults::eta_sp(),
            rho: defaults::rho(),
            nu: defaults::nu(),
            g: defaults::g(),
        }
    }

    pub fn tt01() -> Self {
        Self::new("TT01", 156.2, 2.24, 347.9)
    }

    pub fn tt02() -> Self {
        Self::new("TT02", 244.7, 2.54, 442.9)
    }

    pub fn tt03() -> Self {
        Self::new("TT03", 142.6, 2.20, 317.6)
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "TT01" => Some(Self::tt01()),
            "TT02" => Some(Self::tt02()),
            "TT03" => Some(Self::tt03()),
            _ => None,
        }
    }

    pub fn body_volume(&self) -> f64 {
        self.volume.unwrap_or(self.mass / DEFAULT_TISSUE_DENSITY)
    }

    /// `m + 0.4 ρ V`.
    pub fn effective_mass(&self) -> f64 {
        self.mass + 0.4 * self.rho * self.body_volume()
    }

    /// Wetted surface area `0.08 m^0.65` (m²).
    pub fn surface_area(&self) -> f64 {
        0.08 * self.mass.powf(0.65)
    }

    pub fn reynolds(&self, v: f64) -> f64 {
        v * self.length / self.nu
    }

    /// `m g^1.5 L^0.5` (W), the power/work normalisation constant.
    pub fn normalization_constant(&self) -> f64 {
        self.mass * self.g.powf(1.5) * self.length.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("length", self.length),
            ("p_rmr", self.p_rmr),
            ("rho", self.rho),
            ("nu", self.nu),
            ("g", self.g),
            ("volume", self.body_volume()),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("eta_ms", self.eta_ms), ("eta_sp", self.eta_sp)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Wave-drag multiplier γ as a function of submergence depth over body diameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaTable {
    /// `(h/d, γ)` knots, ascending in `h/d`. Clamped outside the knot range.
    pub knots: Vec<(f64, f64)>,
}

impl Default for GammaTable {
    fn default() -> Self {
        Self { knots: vec![(0.5, 2.5), (3.0, 1.0)] }
    }
}

impl GammaTable {
    pub fn validate(&self) -> Result<()> {
        if self.knots.is_empty() {
            return Err(Error::InvalidParameter("gamma table has no knots".into()));
        }
        if self.knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidParameter("gamma knots must be strictly ascending in h/d".into()));
        }
        if self.knots.iter().any(|k| !(k.1 >= 1.0)) {
            return Err(Error::InvalidParameter("gamma values must be >= 1".into()));
        }
        Ok(())
    }

    pub fn eval(&self, ratio: f64) -> f64 {
        let k = &self.knots;
        if ratio <= k[0].0 {
            return k[0].1;
        }
        if ratio >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let j = k.partition_point(|p| p.0 <= ratio);
        let (a, b) = (k[j - 1], k[j]);
        a.1 + (b.1 - a.1) * (ratio - a.0) / (b.0 - a.0)
    }
}

/// Settings of the drag model that are not animal properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergeticsConfig {
    pub gamma: GammaTable,
    /// Body diameter as a fraction of body length.
    pub diameter_ratio: f64,
    /// Speeds at or below this leave the cost of transport undefined (m/s).
    pub v_min: f64,
}

impl Default for EnergeticsConfig {
    fn default() -> Self {
        Self { gamma: GammaTable::default(), diameter_ratio: 0.2, v_min: 0.05 }
    }
}

pub fn wave_drag_factor(depth: f64, body_diameter: f64, table: &GammaTable) -> f64 {
    table.eval(depth.max(0.0) / body_diameter)
}

/// Drag force along the direction of motion (N, never positive).
pub fn drag_force(v: f64, gamma: f64, params: &AnimalParams) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let cd = 16.99 * params.reynolds(v).powf(-0.47);
    -0.5 * params.rho * params.surface_area() * cd * gamma * v * v
}

/// Instantaneous force and power terms of the thrust model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PowerSample {
    pub t: f64,
    pub v: f64,
    pub a_t: f64,
    pub depth: f64,
    pub gamma: f64,
    pub f_drag: f64,
    pub f_thrust: f64,
    pub p_thrust: f64,
    /// `F_drag v` (W, never positive).
    pub p_drag: f64,
    /// `m' a_t v` (W).
    pub p_inertial: f64,
    /// `None` where the speed is at or below the guard.
    pub cot: Option<f64>,
    /// Thrust power over the normalisation constant.
    pub p_t_nd: f64,
}

pub fn thrust_power(v: f64, a_t: f64, depth: f64, params: &AnimalParams, cfg: &EnergeticsConfig) -> PowerSample {
    let v = v.max(0.0);
    let gamma = wave_drag_factor(depth, cfg.diameter_ratio * params.length, &cfg.gamma);
    let f_drag = drag_force(v, gamma, params);
    let m_eff = params.effective_mass();
    let p_inertial = m_eff * a_t * v;
    let p_drag = f_drag * v;
    let p_thrust = p_inertial - p_drag;
    PowerSample {
        t: 0.0,
        v,
        a_t,
        depth,
        gamma,
        f_drag,
        f_thrust: m_eff * a_t - f_drag,
        p_thrust,
        p_drag,
        p_inertial,
        cot: cost_of_transport(p_thrust, v, params, cfg.v_min).ok(),
        p_t_nd: nondimensionalize(p_thrust, params),
    }
}

/// `(P / (η_ms η_sp) + P_RMR) / (m v)` in J/(kg·m).
pub fn cost_of_transport(p_thrust: f64, v: f64, params: &AnimalParams, v_min: f64) -> Result<f64> {
    cost_of_transport_with(p_thrust, v, params, v_min, |_| params.eta_sp)
}

/// As [`cost_of_transport`] with a speed-dependent propulsive efficiency.
pub fn cost_of_transport_with(
    p_thrust: f64,
    v: f64,
    params: &AnimalParams,
    v_min: f64,
    eta_sp: impl Fn(f64) -> f64,
) -> Result<f64> {
    if !(v > v_min) {
        return Err(Error::UndefinedCot(v));
    }
    Ok((p_thrust / (params.eta_ms * eta_sp(v)) + params.p_rmr) / (params.mass * v))
}

pub fn nondimensionalize(value: f64, params: &AnimalParams) -> f64 {
    value / params.normalization_constant()
}

/// Rectangle-rule work sums over a sample window.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct WorkSummary {
    /// Σ P_thrust Δt.
    pub thrust_signed: f64,
    /// Σ max(P_thrust, 0) Δt.
    pub thrust_rectified: f64,
    /// Σ P_drag Δt (never positive).
    pub drag: f64,
}

impl std::ops::Add for WorkSummary {
    type Output = WorkSummary;

    fn add(self, o: WorkSummary) -> WorkSummary {
        WorkSummary {
            thrust_signed: self.thrust_signed + o.thrust_signed,
            thrust_rectified: self.thrust_rectified + o.thrust_rectified,
            drag: self.drag + o.drag,
        }
    }
}

pub fn thrust_work(samples: &[PowerSample], dt: f64, window: std::ops::Range<usize>) -> Result<WorkSummary> {
    if window.is_empty() || window.end > samples.len() {
        return Err(Error::InvalidParameter(format!(
            "work window {window:?} empty or outside {} samples",
            samples.len()
        )));
    }
    Ok(work_over(samples[window].iter(), dt))
}

/// Work over an arbitrary subset of samples; zero for an empty subset.
pub fn work_over<'a>(samples: impl Iterator<Item = &'a PowerSample>, dt: f64) -> WorkSummary {
    let mut w = WorkSummary::default();
    for s in samples {
        w.thrust_signed += s.p_thrust * dt;
        w.thrust_rectified += s.p_thrust.max(0.0) * dt;
        w.drag += s.p_drag * dt;
    }
    w
}
