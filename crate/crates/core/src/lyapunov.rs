//! Virtual-queue bookkeeping and the parameter choices that keep the battery
//! inside its bounds.
//!
//! The queue is the shifted battery level `Q = E_b − C`. With
//! `C = ΔtP_max + E_min + Vγ_max/Δt` and `V ≤ V_max` the per-slot policies
//! never ask for more energy than the battery holds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{battery_step, SystemConfig};
use crate::noma::min_power_recursion;

/// Relative slack for bound monitors.
pub const BOUND_TOL: f64 = 1e-9;

pub(crate) fn within_below(x: f64, bound: f64) -> bool {
    x <= bound + BOUND_TOL * bound.abs().max(1.0)
}

pub(crate) fn within_above(x: f64, bound: f64) -> bool {
    x >= bound - BOUND_TOL * bound.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueueState {
    pub e_b: f64,
    pub q: f64,
    pub c_param: f64,
    pub v_param: f64,
}

impl QueueState {
    pub fn new(e_b: f64, c_param: f64, v_param: f64) -> Self {
        QueueState {
            e_b,
            q: e_b - c_param,
            c_param,
            v_param,
        }
    }
}

/// Constants of one run, resolved from a validated configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueueParams {
    pub v: f64,
    pub v_max: f64,
    pub c: f64,
    /// Drift-bound constant `Δt²P_max²/2`.
    pub phi: f64,
    pub q_lower: f64,
    /// `None` for rate-constrained schemes, which only guarantee a floor.
    pub q_upper: Option<f64>,
}

impl QueueParams {
    pub fn contains(&self, q: f64) -> bool {
        within_above(q, self.q_lower) && self.q_upper.map_or(true, |u| within_below(q, u))
    }

    pub fn initial_state(&self, cfg: &SystemConfig) -> QueueState {
        QueueState::new(cfg.e_b0, self.c, self.v)
    }
}

/// `Δt(E_max − E_min − E_c,max − ΔtP_max)/γ_max`.
pub fn compute_v_max(cfg: &SystemConfig) -> Result<f64> {
    let slack = cfg.e_max - cfg.e_min - cfg.e_c_max - cfg.delta_t * cfg.p_max;
    if !(slack > 0.0) {
        return Err(Error::InfeasibleBattery(format!(
            "E_max − E_min − E_c,max − Δt·P_max = {slack} leaves no room for the virtual queue"
        )));
    }
    Ok(cfg.delta_t * slack / cfg.gamma_max)
}

/// `ΔtP_max + E_min + Vγ_max/Δt`.
pub fn compute_c(cfg: &SystemConfig, v: f64) -> f64 {
    cfg.delta_t * cfg.p_max + cfg.e_min + v * cfg.gamma_max / cfg.delta_t
}

pub fn compute_phi(cfg: &SystemConfig) -> f64 {
    (cfg.delta_t * cfg.p_max).powi(2) / 2.0
}

/// Feasibility diagnostics for per-slot rate floors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WrFeasibility {
    /// Minimum power for the floors with every user at `γ_max`.
    pub p_th_best: f64,
    /// Minimum power for the floors with every user at `γ_min`.
    pub p_th_worst: f64,
    pub e_th_worst: f64,
    /// `E_max − E_min − E_c,max − ΔtP_max`.
    pub margin_lhs: f64,
    /// `ΔtP_max(1 + γ_max P_th^best)/(γ_max P_th^best)`; `None` when the
    /// floors are all zero.
    pub margin_rhs: Option<f64>,
    pub margin_ok: bool,
    pub p_max_ok: bool,
    pub arrival_floor_ok: bool,
    pub charge_ok: bool,
    pub channel_window_ok: bool,
    pub passed: bool,
}

impl WrFeasibility {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.margin_ok {
            out.push(format!(
                "battery margin {} is below the required {}",
                self.margin_lhs,
                self.margin_rhs.unwrap_or(0.0)
            ));
        }
        if !self.p_max_ok {
            out.push(format!(
                "worst-case minimum power {} W exceeds P_max",
                self.p_th_worst
            ));
        }
        if !self.arrival_floor_ok {
            out.push(format!(
                "arrival floor is below the worst-case slot energy {} J",
                self.e_th_worst
            ));
        }
        if !self.charge_ok {
            out.push(format!(
                "E_c,max is below the worst-case slot energy {} J",
                self.e_th_worst
            ));
        }
        if !self.channel_window_ok {
            out.push("channel window admits SNRs below γ_min".into());
        }
        out
    }
}

/// Checks that rate floors can be met in every slot without draining the
/// battery. Never fails; the report says what went wrong.
pub fn validate_wr_feasibility(cfg: &SystemConfig) -> WrFeasibility {
    let k = cfg.users;
    let p_th_best = min_power_recursion(&vec![cfg.gamma_max; k], &cfg.r_min).1;
    let p_th_worst = min_power_recursion(&vec![cfg.gamma_min; k], &cfg.r_min).1;
    let e_th_worst = cfg.delta_t * p_th_worst;
    let margin_lhs = cfg.e_max - cfg.e_min - cfg.e_c_max - cfg.delta_t * cfg.p_max;
    let margin_rhs = (p_th_best > 0.0).then(|| {
        let gp = cfg.gamma_max * p_th_best;
        cfg.delta_t * cfg.p_max * (1.0 + gp) / gp
    });
    let margin_ok = margin_rhs.map_or(margin_lhs > 0.0, |rhs| margin_lhs >= rhs);
    let p_max_ok = p_th_worst <= cfg.p_max;
    let arrival_floor_ok = within_above(cfg.arrival.floor, e_th_worst);
    let charge_ok = within_above(cfg.e_c_max, e_th_worst);
    let channel_window_ok = cfg.channel.gamma_lo >= cfg.gamma_min;
    WrFeasibility {
        p_th_best,
        p_th_worst,
        e_th_worst,
        margin_lhs,
        margin_rhs,
        margin_ok,
        p_max_ok,
        arrival_floor_ok,
        charge_ok,
        channel_window_ok,
        passed: margin_ok && p_max_ok && arrival_floor_ok && charge_ok && channel_window_ok,
    }
}

/// Validates `cfg` and resolves `V`, `C` and the queue bounds.
pub fn prepare(cfg: &SystemConfig) -> Result<QueueParams> {
    cfg.validate()?;
    let v_max = compute_v_max(cfg)?;
    let floors = cfg.scheme.has_rate_floors();
    let v = match cfg.v_param {
        None => v_max,
        Some(v) if floors => {
            if (v - v_max).abs() > 1e-12 * v_max {
                return Err(Error::Config(format!(
                    "rate-constrained schemes run at V = V_max = {v_max}, got V = {v}"
                )));
            }
            v_max
        }
        Some(v) => {
            if v > v_max * (1.0 + 1e-12) {
                return Err(Error::Config(format!("V = {v} exceeds V_max = {v_max}")));
            }
            v
        }
    };
    let c = compute_c(cfg, v);
    let reach = v * cfg.gamma_max / cfg.delta_t;
    let (q_lower, q_upper) = if floors {
        (-reach, None)
    } else {
        (-reach - cfg.delta_t * cfg.p_max, Some(cfg.e_c_max))
    };
    let params = QueueParams {
        v,
        v_max,
        c,
        phi: compute_phi(cfg),
        q_lower,
        q_upper,
    };
    if floors {
        let report = validate_wr_feasibility(cfg);
        if !report.passed {
            return Err(Error::InfeasibleBattery(report.failures().join("; ")));
        }
    }
    if cfg.scheme.is_lyapunov() && !params.contains(cfg.e_b0 - c) {
        let lo = c + q_lower;
        let hi = q_upper.map_or(cfg.e_max, |u| (c + u).min(cfg.e_max));
        return Err(Error::InfeasibleBattery(format!(
            "initial battery {} J must lie in [{lo}, {hi}] so the queue starts inside its bounds",
            cfg.e_b0
        )));
    }
    Ok(params)
}

/// Advances the queue by one slot: `Q' = Q + E_h − ΔtP`.
///
/// The battery level is carried as the primary quantity so that
/// `q = e_b − c_param` holds exactly.
pub fn queue_step(qs: &QueueState, p: f64, e_h: f64, cfg: &SystemConfig) -> Result<QueueState> {
    let e_b = battery_step(qs.e_b, p, e_h, cfg.delta_t, cfg.e_min)?;
    Ok(QueueState::new(e_b, qs.c_param, qs.v_param))
}
