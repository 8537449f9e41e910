//! Per-slot OMA policies.
//!
//! Users get disjoint bandwidth fractions `α_k` and powers `P_k`. The KKT
//! algebra is written in the per-user SNR `s_k = P_kγ_k/α_k` and in nats.
//! With rate floors, every optimal point is parameterized by the power
//! multiplier `θ`: the strongest user runs at `s_K = γ_K/θ − 1`, and each
//! weaker user solves `(1+s)ln(1+s) − s = γ_k f(θ)` and takes just enough
//! bandwidth to meet its floor.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::lyapunov::QueueState;
use crate::model::{check_ascending, Allocation, SlotState, SystemConfig};
use crate::numerics::{bisect_root, entropy_root_lambert, minimize_convex_with_derivative, SolverSettings};

/// Lower end of the `θ` search, relative to `γ_K`.
pub const THETA_FLOOR: f64 = 1e-12;

/// Solution of the fixed-power OMA problem with rate floors.
#[derive(Debug, Clone, PartialEq)]
pub struct OmaKktPoint {
    /// Multiplier of the total-power constraint; equals `dU/dP`.
    pub theta: f64,
    /// Multiplier of the bandwidth constraint.
    pub beta: f64,
    /// `β/θ`, the common value of `h(s_k)/γ_k`.
    pub f: f64,
    /// Rate-floor multipliers; the strongest user's is zero.
    pub lambda: Vec<f64>,
    pub s: Vec<f64>,
    pub alpha: Vec<f64>,
    pub p: Vec<f64>,
}

impl OmaKktPoint {
    pub fn total_power(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Per-user rates in nats.
    pub fn rates_nats(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.s)
            .map(|(a, s)| if *a > 0.0 { a * s.ln_1p() } else { 0.0 })
            .collect()
    }

    pub fn to_allocation(&self, gamma: &[f64]) -> Result<Allocation> {
        Allocation::oma(gamma, &self.p, self.alpha.clone())
    }
}

fn to_nats(r_min: &[f64]) -> Vec<f64> {
    r_min.iter().map(|r| r * LN_2).collect()
}

fn multipliers(theta: f64, f: f64, gamma: &[f64], s: &[f64]) -> (f64, Vec<f64>) {
    let k = gamma.len();
    let lambda = (0..k)
        .map(|i| {
            if i + 1 == k {
                0.0
            } else {
                theta * (1.0 + s[i]) / gamma[i] - 1.0
            }
        })
        .collect();
    (theta * f, lambda)
}

/// The allocation at power multiplier `theta`. Weak users sit exactly on their
/// floors; the strongest user takes the leftover bandwidth, which may be
/// negative when `theta` is too large for the floors.
pub fn kkt_point_at(theta: f64, gamma: &[f64], r_nats: &[f64]) -> Result<OmaKktPoint> {
    let k = gamma.len();
    let g_k = gamma[k - 1];
    let s_k = g_k / theta - 1.0;
    let f = (s_k.ln_1p() - s_k / (1.0 + s_k)) / theta;
    let mut s = vec![0.0; k];
    let mut alpha = vec![0.0; k];
    let mut p = vec![0.0; k];
    for i in 0..k - 1 {
        s[i] = entropy_root_lambert(gamma[i] * f)?;
        if r_nats[i] > 0.0 {
            let l = s[i].ln_1p();
            alpha[i] = r_nats[i] / l;
            // s/ln(1+s) → 1 as s → 0.
            p[i] = if s[i] > 0.0 { alpha[i] * s[i] / gamma[i] } else { r_nats[i] / gamma[i] };
        }
    }
    s[k - 1] = s_k;
    alpha[k - 1] = 1.0 - alpha[..k - 1].iter().sum::<f64>();
    p[k - 1] = alpha[k - 1] * s_k / g_k;
    let (beta, lambda) = multipliers(theta, f, gamma, &s);
    Ok(OmaKktPoint {
        theta,
        beta,
        f,
        lambda,
        s,
        alpha,
        p,
    })
}

/// Minimum total power meeting every floor, and the allocation achieving it.
fn min_power_point(gamma: &[f64], r_nats: &[f64]) -> Result<(f64, OmaKktPoint)> {
    let k = gamma.len();
    let g_k = gamma[k - 1];
    if r_nats.iter().all(|r| *r == 0.0) {
        let mut alpha = vec![0.0; k];
        alpha[k - 1] = 1.0;
        let point = OmaKktPoint {
            theta: g_k,
            beta: 0.0,
            f: 0.0,
            lambda: multipliers(g_k, 0.0, gamma, &vec![0.0; k]).1,
            s: vec![0.0; k],
            alpha,
            p: vec![0.0; k],
        };
        return Ok((0.0, point));
    }
    // Total bandwidth needed when every user solves h(s_k) = γ_k μ.
    let bandwidth = |mu: f64| -> f64 {
        gamma
            .iter()
            .zip(r_nats)
            .filter(|(_, r)| **r > 0.0)
            .map(|(g, r)| {
                let s = entropy_root_lambert(g * mu).unwrap_or(0.0);
                if s > 0.0 {
                    r / s.ln_1p()
                } else {
                    f64::INFINITY
                }
            })
            .sum()
    };
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    while bandwidth(hi) > 1.0 {
        hi *= 16.0;
        if hi > 1e300 {
            return Err(Error::NoConvergence { iterations: 0 });
        }
    }
    while bandwidth(lo) < 1.0 {
        lo /= 16.0;
    }
    let ln_mu = bisect_root(|x| bandwidth(x.exp()) - 1.0, lo.ln(), hi.ln(), SolverSettings::exact())?;
    let mu = ln_mu.exp();
    let s: Vec<f64> = gamma
        .iter()
        .map(|g| entropy_root_lambert(g * mu))
        .collect::<Result<_>>()?;
    let mut alpha = vec![0.0; k];
    let mut p = vec![0.0; k];
    for i in 0..k {
        if r_nats[i] > 0.0 {
            alpha[i] = r_nats[i] / s[i].ln_1p();
            p[i] = alpha[i] * s[i] / gamma[i];
        }
    }
    let theta = g_k / (1.0 + s[k - 1]);
    let (beta, lambda) = multipliers(theta, mu, gamma, &s);
    let point = OmaKktPoint {
        theta,
        beta,
        f: mu,
        lambda,
        s,
        alpha,
        p,
    };
    Ok((point.total_power(), point))
}

/// Minimum total power at which every user can meet its floor, with the
/// bandwidth constraint tight.
pub fn min_power_oma(gamma: &[f64], r_min: &[f64], p_max: f64) -> Result<(f64, OmaKktPoint)> {
    if gamma.len() != r_min.len() || gamma.is_empty() {
        return Err(Error::InvalidArgument(
            "gamma and r_min must have one entry per user".into(),
        ));
    }
    check_ascending(gamma)?;
    let (p_th, point) = min_power_point(gamma, &to_nats(r_min))?;
    if p_th > p_max {
        return Err(Error::SlotInfeasible { p_th, p_max });
    }
    Ok((p_th, point))
}

/// Bisects `ln θ` on `[ln(γ_K·THETA_FLOOR), ln theta_hi]` for total power `p`.
fn theta_for_power(p: f64, theta_hi: f64, gamma: &[f64], r_nats: &[f64]) -> Result<OmaKktPoint> {
    let g_k = gamma[gamma.len() - 1];
    let lo = (g_k * THETA_FLOOR).ln();
    let hi = theta_hi.ln();
    let residual = |x: f64| {
        kkt_point_at(x.exp(), gamma, r_nats)
            .map(|pt| pt.total_power() - p)
            .unwrap_or(f64::NAN)
    };
    let x = bisect_root(residual, lo, hi, SolverSettings::exact())?;
    kkt_point_at(x.exp(), gamma, r_nats)
}

/// Rate-maximizing allocation at total power `p` with users `1..K−1` held at
/// their floors.
pub fn oma_kkt_alloc(p: f64, gamma: &[f64], r_min: &[f64]) -> Result<OmaKktPoint> {
    let (p_th, min_point) = min_power_oma(gamma, r_min, f64::INFINITY)?;
    if p < p_th * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "power {p} W is below the minimum {p_th} W for the rate floors"
        )));
    }
    if p <= p_th {
        return Ok(min_point);
    }
    theta_for_power(p, min_point.theta, gamma, &to_nats(r_min))
}

pub fn solve_oma_wr(slot: &SlotState, qs: &QueueState, cfg: &SystemConfig) -> Result<Allocation> {
    let gamma = &slot.gamma;
    let r_nats = to_nats(&cfg.r_min);
    let (p_th, min_point) = min_power_oma(gamma, &cfg.r_min, cfg.p_max)?;
    let top = |theta_hi: f64| theta_for_power(cfg.p_max, theta_hi, gamma, &r_nats);
    // The value function U(P) is concave with U'(P) = θ(P), so the
    // stationarity condition −QΔt − Vθ = 0 pins the multiplier directly.
    let point = if p_th >= cfg.p_max {
        min_point
    } else if qs.q >= 0.0 {
        top(min_point.theta)?
    } else {
        let target = -qs.q * cfg.delta_t / qs.v_param;
        if target >= min_point.theta {
            min_point
        } else {
            let pt = kkt_point_at(target, gamma, &r_nats)?;
            if pt.total_power() > cfg.p_max {
                top(min_point.theta)?
            } else {
                pt
            }
        }
    };
    point.to_allocation(gamma)
}

/// `−QΔtP − V·U(P)` where `U` is the best sum rate (nats) at total power `P`.
pub fn oma_wr_objective(qs: &QueueState, gamma: &[f64], r_min: &[f64], p: f64, delta_t: f64) -> Result<f64> {
    let pt = oma_kkt_alloc(p, gamma, r_min)?;
    Ok(-qs.q * delta_t * p - qs.v_param * pt.rates_nats().iter().sum::<f64>())
}

/// `−QΔtP − V·(1/K)Σ ln(1 + Pγ_k)`.
pub fn oma_wor_objective(qs: &QueueState, gamma: &[f64], p: f64, delta_t: f64) -> f64 {
    let k = gamma.len() as f64;
    let rate: f64 = gamma.iter().map(|g| (p * g).ln_1p()).sum::<f64>() / k;
    -qs.q * delta_t * p - qs.v_param * rate
}

pub fn solve_oma_wor(slot: &SlotState, qs: &QueueState, cfg: &SystemConfig) -> Result<Allocation> {
    let gamma = &slot.gamma;
    let k = gamma.len() as f64;
    let p = minimize_convex_with_derivative(
        |p| -qs.q * cfg.delta_t - qs.v_param / k * gamma.iter().map(|g| g / (1.0 + p * g)).sum::<f64>(),
        0.0,
        cfg.p_max,
        SolverSettings::exact(),
    )?;
    let powers = vec![p / k; gamma.len()];
    Allocation::oma(gamma, &powers, vec![1.0 / k; gamma.len()])
}

/// Stationarity and slackness residuals of a fixed-power KKT point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `max |(1+λ_k)γ_k/(1+s_k) − θ|` over users with bandwidth.
    pub power: f64,
    /// `max |(1+λ_k)(ln(1+s_k) − s_k/(1+s_k)) − β|` over users with bandwidth.
    pub bandwidth: f64,
    /// `max |λ_k(r_k − R_k)|`, `|Σα − 1|`, `|ΣP − P|`.
    pub slackness: f64,
    /// Most negative multiplier (0 when all are non-negative).
    pub dual_infeasibility: f64,
}

pub fn kkt_residuals(pt: &OmaKktPoint, gamma: &[f64], r_min: &[f64], p: f64) -> KktResiduals {
    let r = to_nats(r_min);
    let rates = pt.rates_nats();
    let mut power = 0.0f64;
    let mut bandwidth = 0.0f64;
    let mut slackness = 0.0f64;
    let mut dual = 0.0f64.min(pt.theta).min(pt.beta);
    for i in 0..gamma.len() {
        let w = 1.0 + pt.lambda[i];
        if pt.alpha[i] > 0.0 {
            power = power.max((w * gamma[i] / (1.0 + pt.s[i]) - pt.theta).abs() / pt.theta);
            let q = pt.s[i].ln_1p() - pt.s[i] / (1.0 + pt.s[i]);
            bandwidth = bandwidth.max((w * q - pt.beta).abs() / pt.beta.max(1e-300));
        }
        slackness = slackness.max((pt.lambda[i] * (rates[i] - r[i])).abs());
        dual = dual.min(pt.lambda[i]);
    }
    slackness = slackness
        .max((pt.alpha.iter().sum::<f64>() - 1.0).abs())
        .max((pt.total_power() - p).abs());
    KktResiduals {
        power,
        bandwidth,
        slackness,
        dual_infeasibility: -dual,
    }
}
